#pragma once

#include "enlarge/classifier.hpp"
#include "enlarge/integrand.hpp"
#include "enlarge/timegrid.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace enlarge {

/// Neumaier-compensated sum of any Eigen expression.
template <typename Derived>
double compensated_sum(const Eigen::DenseBase<Derived>& v)
{
    double sum = 0.0, c = 0.0;
    for (Index i = 0; i < v.size(); ++i) {
        const double x = v.derived().coeff(i);
        const double t = sum + x;
        c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    return sum + c;
}

struct SampleMoments {
    double mean = 0.0;
    double se = 0.0; // sample SD / sqrt(N)
    double sd = 0.0;
    Index n = 0;
};

SampleMoments sample_moments(const Eigen::Ref<const VectorXd>& v);

/// Upper-tail normal probability and its inverse.
double normal_upper_tail(double z);
double normal_upper_quantile(double p);

/// Two-sided per-test critical value when a family threshold z is shared by
/// k tests (Bonferroni).
double bonferroni_critical(double family_threshold, Index n_tests);

/// g(W_s, X): a test function measurable at time s in the enlarged filtration.
struct BasisFunction {
    std::string label;
    std::function<double(double, double)> f;
};

namespace basis {
BasisFunction one();
BasisFunction state();       // W_s
BasisFunction info();        // X
BasisFunction state_info();  // W_s X
BasisFunction state_sq();    // W_s^2
BasisFunction info_gap();    // X - W_s
/// {1, W_s, X, W_s X, W_s^2}
std::vector<BasisFunction> defaults();
/// One of the labels above; throws InvalidArgument otherwise.
BasisFunction by_label(const std::string& label);
} // namespace basis

struct TestRecord {
    double s = 0.0, t = 0.0;
    std::string basis;
    double estimate = 0.0;
    double se = 0.0;
    double z = 0.0;
};

struct MartingaleTestReport {
    std::vector<TestRecord> tests;
    Index n_paths = 0;
    std::string correction = "bonferroni";
    double threshold = 4.0;  // family-wise |z| limit
    double critical = 4.0;   // per-test limit after correction
    bool pass = false;
    std::string seeds;

    /// Largest |z| over the battery.
    double max_abs_z() const;
    const TestRecord* find(double s, double t, const std::string& basis_label) const;
    /// `s,t,basis,estimate,se,z`
    void write_csv(std::ostream& os) const;
};

/// Weak-form martingale test: for every pair (s, t) and basis element g the
/// ensemble mean of (M_t - M_s) g(state_s, x) must vanish. `state` supplies
/// the first basis argument (W for Brownian tests, Z for the jump case) and
/// must share `process`'s grid.
MartingaleTestReport increment_regression_test(const PathEnsemble& process, const PathEnsemble& state,
                                               const Eigen::Ref<const VectorXd>& x,
                                               const std::vector<std::pair<double, double>>& pairs,
                                               const std::vector<BasisFunction>& basis, double threshold = 4.0);

struct QuadraticVariationReport {
    double t = 0.0;
    double expected = 0.0;
    double mean = 0.0;
    double se = 0.0;
    double rel_error = 0.0;
    double rel_tol = 0.02;
    bool pass = false;
};

/// Per-path realized variance sum (dM)^2 over [0, t].
VectorXd realized_variance(const PathEnsemble& process, double t);
QuadraticVariationReport quadratic_variation_test(const PathEnsemble& process, double t, double expected,
                                                  double rel_tol = 0.02);
/// Same report from already accumulated per-path realized variances.
QuadraticVariationReport quadratic_variation_test(const Eigen::Ref<const VectorXd>& qv, double t, double expected,
                                                  double rel_tol = 0.02);

struct CharacterizationCheck {
    std::string name;  // mean, variance, skewness, excess_kurtosis, correlation
    double s = 0.0, t = 0.0;
    double estimate = 0.0;
    double expected = 0.0;
    double se = 0.0;
    double z = 0.0;
};

struct LevyCharacterizationReport {
    std::vector<CharacterizationCheck> checks;
    Index n_paths = 0;
    double threshold = 4.0;
    double critical = 4.0;
    bool pass = false;
    bool passes(const std::string& name) const;
};

/// Increments over consecutive `times` must look like independent N(0, dt):
/// mean, variance, skewness, excess kurtosis and lag-one correlation.
LevyCharacterizationReport levy_characterization_suite(const PathEnsemble& process, const std::vector<double>& times,
                                                       double threshold = 4.0);

struct NonIntegratorLevel {
    int n = 0;
    double mean_integral = 0.0;  // E (H^n . W)_1
    double se = 0.0;
    double second_moment = 0.0;  // E (H^n . W)_1^2
    std::vector<double> deltas;
    std::vector<double> sup_exceed_prob; // P(sup |H^n| > delta)
    std::vector<double> tail_bound;      // Gaussian tail bound for the same delta
};

struct NonIntegratorReport {
    double epsilon = 0.0;
    Index n_paths = 0;
    std::vector<NonIntegratorLevel> levels;
};

/// Per path and level: (H^n . W)_1 and sup |H^n|.
struct NonIntegratorSamples {
    double epsilon = 0.0;
    std::vector<int> levels;
    std::vector<VectorXd> integral;
    std::vector<VectorXd> sup;
};

/// Dyadic look-ahead integrands H^n = sum_k D^n_k W on (k 2^-n, (k+1) 2^-n].
/// `paths` must hold W on [0, 1] with every level's dyadic points as nodes.
NonIntegratorSamples non_integrator_samples(double epsilon, const std::vector<int>& levels, const PathEnsemble& paths);
NonIntegratorReport summarize(const NonIntegratorSamples& s, const std::vector<double>& deltas = {0.25, 0.5});
NonIntegratorReport non_integrator_demo(double epsilon, const std::vector<int>& levels, const PathEnsemble& paths,
                                        const std::vector<double>& deltas = {0.25, 0.5});

double look_ahead_tail_bound(int n, double delta);

/// Truncation depth and ceiling for the divergent side of the probe.
struct JeulinCalibration {
    int depth = 0;
    double ceiling = 0.0;
    double oracle_at_depth = 0.0; // sqrt(2/pi) int_0^{T - eps_depth} A
};

/// sqrt(2/pi) int_0^{T - eps} A(s) ds, the ensemble mean of the probe integral.
double jeulin_oracle(const DeterministicIntegrand& A, double T, double eps);

/// Smallest depth whose oracle mean reaches margin * ceiling; throws when the
/// depth would exceed max_depth.
JeulinCalibration calibrate_jeulin_probe(const DeterministicIntegrand& A, double T, double ceiling, double margin,
                                         int max_depth, double eps0_fraction = 0.5);

struct JeulinProbeOptions {
    double T = 1.0;
    double eps0_fraction = 0.5;
    int depth = 40;
    double cauchy_tol = 1e-6;
    int cauchy_window = 3;
    double ceiling = 1e3;
};

struct JeulinProbeReport {
    std::string integrand;
    Index n_paths = 0;
    JeulinProbeOptions options;
    std::vector<double> epsilons;       // eps_k, k = 0..depth
    std::vector<double> mean_truncated; // ensemble mean per rung
    std::vector<double> oracle;         // sqrt(2/pi) int A per rung
    double fraction_cauchy = 0.0;
    double fraction_over_ceiling = 0.0;
    double min_final = 0.0;
    double median_final = 0.0;
};

/// Per-path truncated integrals int_0^{T - eps_k} R_s A_s ds with
/// R_s = |W_T - W_s| / sqrt(T - s). The ensemble holds the reversed motion
/// Y(tau) = W_T - W_{T - tau} on a grid in tau = T - s that contains every
/// eps_k (build_horizon_grid); this keeps deep rungs representable. R is
/// frozen at the left point of each step and A integrated over it.
JeulinProbeReport jeulin_lemma_probe(const DeterministicIntegrand& A, const PathEnsemble& reversed,
                                     const JeulinProbeOptions& opts);

} // namespace enlarge
