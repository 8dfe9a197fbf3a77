#pragma once

#include "enlarge/classifier.hpp"
#include "enlarge/gaussian.hpp"
#include "enlarge/integrand.hpp"
#include "enlarge/timegrid.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace enlarge {

/// Enlarge the Brownian filtration by X = int phi dW. Paths are simulated on
/// grid() extended to the information horizon; drifts live on grid(), which
/// stops epsilon_exclusion short of that horizon.
struct EnlargementSpec {
    DeterministicIntegrand phi;
    double info_horizon = 0.0; // end of phi's support; +inf if unbounded
    double sim_horizon = 0.0;
    TimeGrid grid;
    double epsilon_exclusion = 0.0;

    /// Grid that paths must be simulated on (grid reaching the information horizon).
    TimeGrid path_grid() const;
    bool trivial() const; // phi == 0: nothing is added
};

/// Validates sim_horizon <= info_horizon - epsilon; epsilon defaults to the
/// smallest grid step.
EnlargementSpec make_enlargement(DeterministicIntegrand phi, TimeGrid grid,
                                 std::optional<double> epsilon_exclusion = std::nullopt);

/// The bridge enlargement by W_T on a grid refined toward T.
EnlargementSpec bridge_enlargement(double T, Index n_base, double refinement_ratio = 0.5,
                                   std::optional<int> depth = std::nullopt);

/// original = martingale_part + fv_part, one row per path.
struct DecomposedProcess {
    TimeGrid grid;
    RowMatrixXd original;
    RowMatrixXd martingale_part;
    RowMatrixXd fv_part;
    std::string label;

    Index n_paths() const { return original.rows(); }
    /// sum |dA| per path.
    VectorXd fv_variation() const;
    /// max |original - martingale_part - fv_part|.
    double additivity_error() const;
    /// Largest per-path additivity error over max(1, max |original|) of that path.
    double relative_additivity_error() const;

    PathEnsemble original_ensemble() const;
    PathEnsemble martingale_ensemble() const;
    PathEnsemble fv_ensemble() const;
};

/// CSV with header `path,t,original,martingale_part,fv_part`.
void write_decomposition_csv(const DecomposedProcess& d, std::ostream& os);

/// X = sum phi(t_i) dW_i over the whole support, per path.
VectorXd realize_X(const EnlargementSpec& spec, const PathEnsemble& paths);

/// A(p, k) = sum_{i<k} rho(x_p, t_i, m_{p,i}) dt_i on spec.grid.
RowMatrixXd drift_compensator(const EnlargementSpec& spec, const PathEnsemble& paths,
                              const Eigen::Ref<const VectorXd>& x);

/// W = W~ + A with W~ a Brownian motion of the enlarged filtration.
DecomposedProcess compensate_brownian(const EnlargementSpec& spec, const PathEnsemble& paths,
                                      const Eigen::Ref<const VectorXd>& x);

/// M = m . W decomposed as M~ + int rho(X, u) m_u du. Refuses (throws
/// Refusal) unless the classifier certifies m on the information horizon.
DecomposedProcess compensate_martingale(const EnlargementSpec& spec, const DeterministicIntegrand& m,
                                        const PathEnsemble& paths, const Eigen::Ref<const VectorXd>& x,
                                        const LadderOptions& classifier_opts = {});

/// H . M, H . M~ and H . A as separate left-point sums, so that additivity
/// H . M = H . M~ + H . A is checked rather than imposed; throws NonIntegrable when
/// sum |H||dA| exceeds `overflow_guard` on some path.
DecomposedProcess integrate_under_enlargement(const DeterministicIntegrand& H, const DecomposedProcess& d,
                                              double overflow_guard = 1e12);

/// Z = M + int_0^t (Z_T - Z_s)/(T - s) ds on the nodes of `paths` at or below
/// T - epsilon; `paths` must contain T as a node.
DecomposedProcess levy_bridge_compensator(const PathEnsemble& paths, const Eigen::Ref<const VectorXd>& z_T,
                                          double T, double epsilon);

/// Through-origin least-squares slope of W_t - W_s on W_T - W_s, whose
/// population value is (t - s)/(T - s).
struct SymmetryReport {
    double s = 0.0, t = 0.0, T = 1.0;
    double slope = 0.0;
    double se = 0.0;
    double expected = 0.0;
    double z = 0.0;
    Index n_paths = 0;
    bool pass(double threshold = 4.0) const;
};

SymmetryReport symmetry_identity_check(const PathEnsemble& paths, double s, double t, double T = 1.0);

enum class DriftIntegralRule {
    left_point,         // sum |W_T - W_s_i| / (T - s_i) ds_i
    bridge_conditional, // E[ . | node values]: Brownian-bridge interpolation, 4-point Gauss-Legendre per step
};

/// Per path (rows) and truncation (columns): int_0^{T - eps} |W_T - W_s| / (T - s) ds.
/// T and every T - eps must be nodes of the path grid.
RowMatrixXd abs_drift_integrals(const PathEnsemble& paths, double T, const std::vector<double>& epsilons,
                                DriftIntegralRule rule = DriftIntegralRule::bridge_conditional);

/// Bridge case: int_{T-eps}^T E|W_T - W_s|/(T - s) ds = 2 sqrt(2/pi) sqrt(eps).
double bridge_truncation_bound(double epsilon);

} // namespace enlarge
