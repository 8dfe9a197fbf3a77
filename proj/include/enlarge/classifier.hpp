#pragma once

#include "enlarge/integrand.hpp"

#include <optional>
#include <string>
#include <vector>

namespace enlarge {

/// Knobs of the truncation ladder eps_k = eps0 * 2^-k.
struct LadderOptions {
    double tol = 1e-8;            // relative Cauchy tolerance
    int max_rungs = 40;           // rung budget
    double ceiling = 1e6;         // any truncated value above this diverges
    double eps0_fraction = 0.5;   // eps0 = eps0_fraction * T
    double undecided_margin = 0.02; // log-power tails with |p - 1| below this stay undecided
};

enum class LadderStatus { converged, diverges, undecided };
std::string to_string(LadderStatus s);

struct LadderRung {
    double epsilon = 0.0;    // truncation point is T - epsilon
    double truncated = 0.0;  // I_k
    double increment = 0.0;  // I_k - I_{k-1}
    double extrapolated = 0.0;
    std::string tail_model;  // "geometric", "log-power" or ""
    double tail_exponent = 0.0;
};

struct LadderResult {
    LadderStatus status = LadderStatus::undecided;
    double value = 0.0; // extrapolated limit when converged, last truncated value otherwise
    std::vector<LadderRung> rungs;
    std::string reason;

    int rungs_used() const { return static_cast<int>(rungs.size()); }
    bool finite() const { return status == LadderStatus::converged; }
};

/// int_0^T |m_s| (T-s)^(-1/2) ds by the truncation ladder.
///
/// Each rung integrates over [T - eps_{k-1}, T - eps_k] after the
/// substitution v = sqrt(T - s). The increments are then matched against two
/// tail models on the log scale u = ln(T / eps): geometric decay (smooth or
/// algebraic behaviour of m near T) and a log-power law C u^(-p) (the
/// logarithmic singularities that sit on the convergence boundary). The model
/// that better predicted the latest increment extrapolates the tail. The
/// ladder converges when the extrapolated limits are Cauchy for three rungs,
/// and diverges on: the ceiling, five non-decaying increments, or a
/// log-power exponent below 1 - margin for three rungs.
LadderResult jeulin_yor_functional(const DeterministicIntegrand& m, double T, const LadderOptions& opts = {});

/// int_0^T m_s^2 ds by the same ladder.
LadderResult l2_norm(const DeterministicIntegrand& m, double T, const LadderOptions& opts = {});

/// int_0^T |A_s| ds by the same ladder.
LadderResult abs_integral(const DeterministicIntegrand& A, double T, const LadderOptions& opts = {});

enum class Verdict { semimartingale, not_semimartingale, not_defined, undecided };
std::string to_string(Verdict v);

struct ClassificationVerdict {
    LadderResult jy;
    LadderResult l2;
    Verdict verdict = Verdict::undecided;
    std::string family;
    std::string params;
    double T = 1.0;

    /// `family,params,T,jy_value,l2_value,verdict,rungs_used`
    static std::string csv_header();
    std::string csv_row() const;
};

/// Does m . W stay a semimartingale after enlarging by W_T?
ClassificationVerdict classify(const DeterministicIntegrand& m, double T, const LadderOptions& opts = {});

} // namespace enlarge
