#pragma once

// Batched experiment runners shared by the command-line tool and the
// acceptance suite. Paths are generated in batches; per-path seeding keeps
// every result independent of batch size and thread count.

#include "enlarge/classifier.hpp"
#include "enlarge/enlarged.hpp"
#include "enlarge/finite.hpp"
#include "enlarge/statistics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace enlarge::experiments {

using Pairs = std::vector<std::pair<double, double>>;

Pairs default_pairs();

struct GridConfig {
    Index steps = 1024;
    double refinement_ratio = 0.5;
    int depth = 0; // 0: automatic
};

struct BridgeDemoConfig {
    Index paths = 200000;
    GridConfig grid;
    std::uint64_t seed = 42;
    double threshold = 4.0;
    Index batch = 8192;
    Pairs pairs = default_pairs();
    std::vector<double> levy_times{0.0, 0.25, 0.5, 0.75, 0.9};
    double qv_time = 0.9;
    double symmetry_s = 0.25;
    double symmetry_t = 0.5;
    std::vector<double> drift_epsilons{0x1p-4, 0x1p-6, 0x1p-8, 0x1p-10, 0x1p-14, 0x1p-18};
    double negative_control_z = 10.0;
};

struct DriftConstantPoint {
    double epsilon = 0.0;
    double mean = 0.0;
    double se = 0.0;
    double left_point_mean = 0.0;
    double truncation_bound = 0.0; // 2 sqrt(2/pi) sqrt(eps)
    double deviation = 0.0;        // |mean - 2 sqrt(2/pi)|
    bool within = false;           // deviation <= 4 se + truncation_bound
};

struct Correlation {
    double r = 0.0;
    double se = 0.0;
};

struct BridgeDemoResult {
    BridgeDemoConfig config;
    Index grid_nodes = 0;
    double epsilon_exclusion = 0.0;
    MartingaleTestReport compensated;
    MartingaleTestReport uncompensated;
    SymmetryReport symmetry;
    QuadraticVariationReport qv_compensated;
    QuadraticVariationReport qv_raw;
    LevyCharacterizationReport levy;
    std::vector<DriftConstantPoint> drift_constant;
    Correlation corr_compensated_x; // W~_{qv_time} vs X
    Correlation corr_raw_x;         // W_{qv_time} vs X
    double additivity_error = 0.0;
    double mean_fv_variation = 0.0;

    /// |z| of the uncompensated battery on X - W_s at the first pair.
    double negative_control_z() const;
    bool drift_constant_ok() const;
    bool pass() const;
};

BridgeDemoResult run_bridge_demo(const BridgeDemoConfig& cfg);

struct DriftSimConfig {
    std::string phi = "linear:a=1,b=-1,T=1";
    std::optional<std::string> m; // compensate m . W instead of W
    std::optional<std::string> H; // then integrate H under the enlargement
    Index paths = 200000;
    GridConfig grid;
    std::uint64_t seed = 42;
    double threshold = 4.0;
    Index batch = 8192;
    Pairs pairs = default_pairs();
};

struct DriftSimResult {
    DriftSimConfig config;
    Index grid_nodes = 0;
    double info_horizon = 0.0;
    double epsilon_exclusion = 0.0;
    std::optional<ClassificationVerdict> verdict; // for m
    bool refused = false;
    bool refusal_undecided = false;
    std::string refusal;
    MartingaleTestReport report;
    double additivity_error = 0.0;
    double mean_fv_variation = 0.0;

    bool pass() const { return !refused && report.pass && additivity_error <= 1e-12; }
};

DriftSimResult run_drift_sim(const DriftSimConfig& cfg);

struct MgTestConfig {
    /// "brownian": raw W; "compensated": W minus the bridge drift.
    std::string process = "brownian";
    /// CSV ensemble to test instead of simulating; X is its value at x_time.
    std::optional<std::string> input;
    std::optional<double> x_time; // default: last node
    /// Empty: {1, W_s} for raw Brownian paths and input files, the
    /// enlarged defaults for compensated paths.
    std::vector<std::string> basis;
    Index paths = 20000;
    GridConfig grid;
    std::uint64_t seed = 42;
    double threshold = 4.0;
    Index batch = 8192;
    Pairs pairs = default_pairs();
};

struct MgTestResult {
    MgTestConfig config;
    Index grid_nodes = 0;
    std::vector<std::string> basis;
    MartingaleTestReport report;
    bool pass() const { return report.pass; }
};

MgTestResult run_mg_test(const MgTestConfig& cfg);

struct LevyDemoConfig {
    double rate = 1.0;
    std::string jumps = "pm:1";
    Index paths = 100000;
    GridConfig grid;
    std::uint64_t seed = 42;
    double threshold = 4.0;
    Index batch = 8192;
    Pairs pairs = default_pairs();
    std::vector<double> mean_check_times{0.0, 0.25, 0.5, 0.75};
};

struct MeanCheck {
    double s = 0.0;
    double estimate = 0.0; // mean of Z_1 - Z_s
    double expected = 0.0; // rate E[jump] (1 - s)
    double se = 0.0;
    double z = 0.0;
};

struct LevyDemoResult {
    LevyDemoConfig config;
    Index grid_nodes = 0;
    double epsilon = 0.0;
    MartingaleTestReport report;
    std::vector<MeanCheck> mean_checks;
    double additivity_error = 0.0;

    bool pass() const;
};

LevyDemoResult run_levy_demo(const LevyDemoConfig& cfg);

struct LookaheadConfig {
    double epsilon = 0x1p-6;
    std::vector<int> levels{8, 10, 12};
    Index paths = 20000;
    std::uint64_t seed = 42;
    Index batch = 2048;
    double delta = 0.25;
    double threshold = 4.0;
    double decay_factor = 10.0; // per two levels
};

struct LookaheadResult {
    LookaheadConfig config;
    NonIntegratorReport report;
    std::vector<double> z_mean; // (mean - 1) / se per level
    bool means_ok = false;
    bool decay_ok = false;
    bool pass() const { return means_ok && decay_ok; }
};

LookaheadResult run_lookahead(const LookaheadConfig& cfg);

struct JeulinConfig {
    std::string integrand = "power:beta=0.25,T=1";
    double T = 1.0;
    Index paths = 2000;
    std::uint64_t seed = 42;
    int substeps = 4;
    Index n_base = 16;
    double ceiling = 6.0;
    double margin = 2.0;
    int depth = 0;         // 0: calibrate (divergent) or finite_depth (finite)
    int finite_depth = 60;
    int max_depth = 1000;
    double cauchy_tol = 1e-6;
    double required_fraction = 0.99;
};

struct JeulinResult {
    JeulinConfig config;
    LadderResult integral; // int_0^T A ds
    std::string expectation; // "cauchy", "ceiling" or "undecided"
    std::optional<JeulinCalibration> calibration;
    JeulinProbeReport report;
    bool pass = false;
};

JeulinResult run_jeulin_probe(const JeulinConfig& cfg);

struct SelfConvergenceConfig {
    std::string phi = "indicator:T=1";
    double x = 0.5;
    double t = 0.5;
    std::vector<int> levels{6, 7, 8, 9}; // dt = 2^-level, subsampled from the finest
    Index paths = 10000;
    std::uint64_t seed = 42;
    Index batch = 2048;
    double expected_ratio = 0.70710678118654752;
    double ratio_tol = 0.25; // relative
};

struct SelfConvergenceResult {
    SelfConvergenceConfig config;
    std::vector<double> dt;
    std::vector<double> rms;
    std::vector<double> ratios; // rms[l+1] / rms[l]
    bool pass() const;
};

/// RMS of the log-density identity residual at t over a refining ladder of
/// uniform grids observed on the same Brownian paths.
SelfConvergenceResult run_self_convergence(const SelfConvergenceConfig& cfg);

struct ClassifyConfig {
    std::string family = "jy";
    std::vector<double> alphas{0.75};
    double T = 1.0;
    std::optional<std::string> integrand; // overrides family/alphas
    LadderOptions ladder;
};

std::vector<ClassificationVerdict> run_classify(const ClassifyConfig& cfg);

struct FiniteDemoConfig {
    std::optional<std::string> instance;
    Index random = 0;
    std::uint64_t seed = 42;
    finite::RandomInstanceOptions options;
};

struct FiniteDemoResult {
    FiniteDemoConfig config;
    std::optional<finite::FiniteInstance> instance;
    std::optional<finite::FiniteLabReport> instance_report;
    Index random_checked = 0;
    Index random_failed = 0;
    std::optional<std::uint64_t> first_failing_index;

    bool pass() const
    {
        return (!instance_report || instance_report->pass()) && random_failed == 0;
    }
};

FiniteDemoResult run_finite_demo(const FiniteDemoConfig& cfg);

} // namespace enlarge::experiments
