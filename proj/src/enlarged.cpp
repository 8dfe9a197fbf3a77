#include "enlarge/enlarged.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace enlarge {

namespace {

void require_paths_on(const EnlargementSpec& spec, const PathEnsemble& paths)
{
    const TimeGrid expected = spec.path_grid();
    if (paths.grid().size() != expected.size() || paths.grid().nodes() != expected.nodes())
        throw InvalidArgument("enlargement: paths must be simulated on spec.path_grid()");
}

} // namespace

TimeGrid EnlargementSpec::path_grid() const
{
    if (!trivial() && std::isfinite(info_horizon) && info_horizon > grid.back())
        return grid.extended_to(info_horizon);
    return grid;
}

bool EnlargementSpec::trivial() const
{
    return phi.family() == DeterministicIntegrand::Family::zero || phi.scale() == 0.0;
}

EnlargementSpec make_enlargement(DeterministicIntegrand phi, TimeGrid grid, std::optional<double> epsilon_exclusion)
{
    EnlargementSpec spec;
    spec.phi = std::move(phi);
    spec.grid = std::move(grid);
    spec.sim_horizon = spec.grid.back();
    spec.epsilon_exclusion = epsilon_exclusion.value_or(spec.grid.min_step());
    spec.info_horizon = spec.phi.horizon();
    if (spec.epsilon_exclusion < 0.0)
        throw InvalidArgument("enlargement: epsilon must be >= 0");
    if (spec.trivial())
        return spec;
    if (std::isfinite(spec.info_horizon) &&
        spec.sim_horizon > spec.info_horizon - spec.epsilon_exclusion + 1e-12 * spec.info_horizon)
        throw InvalidArgument("enlargement: grid reaches past info_horizon - epsilon");
    return spec;
}

EnlargementSpec bridge_enlargement(double T, Index n_base, double refinement_ratio, std::optional<int> depth)
{
    return make_enlargement(DeterministicIntegrand::indicator(T), build_grid(T, n_base, T, refinement_ratio, depth));
}

VectorXd DecomposedProcess::fv_variation() const
{
    VectorXd v(fv_part.rows());
    for (Index p = 0; p < fv_part.rows(); ++p) {
        double acc = 0.0;
        for (Index i = 0; i + 1 < fv_part.cols(); ++i)
            acc += std::abs(fv_part(p, i + 1) - fv_part(p, i));
        v[p] = acc;
    }
    return v;
}

double DecomposedProcess::additivity_error() const
{
    return (original - martingale_part - fv_part).cwiseAbs().maxCoeff();
}

double DecomposedProcess::relative_additivity_error() const
{
    // Per path, so that the value does not depend on how paths are batched.
    double worst = 0.0;
    for (Index p = 0; p < original.rows(); ++p) {
        const double err = (original.row(p) - martingale_part.row(p) - fv_part.row(p)).cwiseAbs().maxCoeff();
        worst = std::max(worst, err / std::max(1.0, original.row(p).cwiseAbs().maxCoeff()));
    }
    return worst;
}

PathEnsemble DecomposedProcess::original_ensemble() const
{
    return PathEnsemble(grid, original, ProcessLabel::derived, {});
}

PathEnsemble DecomposedProcess::martingale_ensemble() const
{
    return PathEnsemble(grid, martingale_part, ProcessLabel::derived, {});
}

PathEnsemble DecomposedProcess::fv_ensemble() const
{
    return PathEnsemble(grid, fv_part, ProcessLabel::derived, {});
}

void write_decomposition_csv(const DecomposedProcess& d, std::ostream& os)
{
    os << "path,t,original,martingale_part,fv_part\n";
    os.precision(std::numeric_limits<double>::max_digits10);
    for (Index p = 0; p < d.n_paths(); ++p)
        for (Index i = 0; i < d.grid.size(); ++i)
            os << p << ',' << d.grid[i] << ',' << d.original(p, i) << ',' << d.martingale_part(p, i) << ','
               << d.fv_part(p, i) << '\n';
}

VectorXd realize_X(const EnlargementSpec& spec, const PathEnsemble& paths)
{
    if (spec.trivial())
        return VectorXd::Zero(paths.n_paths());
    if (!spec.phi.bounded_support())
        throw InvalidArgument("realize_X: integrand has unbounded support; a finite path cannot realize X");
    require_paths_on(spec, paths);
    const TimeGrid& g = paths.grid();
    if (g.back() < spec.info_horizon * (1.0 - 1e-14))
        throw InvalidArgument("realize_X: path does not cover the integrand's support");
    const VectorXd phi = sample(spec.phi, g);
    const auto& w = paths.values();
    VectorXd x(paths.n_paths());
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < paths.n_paths(); ++p) {
        double acc = 0.0;
        for (Index i = 0; i + 1 < g.size(); ++i)
            acc += phi[i] * (w(p, i + 1) - w(p, i));
        x[p] = acc;
    }
    return x;
}

RowMatrixXd drift_compensator(const EnlargementSpec& spec, const PathEnsemble& paths,
                              const Eigen::Ref<const VectorXd>& x)
{
    require_paths_on(spec, paths);
    if (x.size() != paths.n_paths())
        throw InvalidArgument("drift_compensator: one x per path required");
    const TimeGrid& g = spec.grid;
    const Index n = g.size();
    RowMatrixXd a = RowMatrixXd::Zero(paths.n_paths(), n);
    if (spec.trivial())
        return a;

    VectorXd phi(n), var(n);
    for (Index i = 0; i + 1 < n; ++i) {
        phi[i] = spec.phi(g[i]);
        var[i] = phi[i] == 0.0 ? 0.0 : residual_variance(spec.phi, g[i]);
        if (phi[i] != 0.0 && !(var[i] > 0.0))
            throw DriftUndefined("drift_compensator: residual variance vanishes at t = " + std::to_string(g[i]));
    }
    const auto& w = paths.values();
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < paths.n_paths(); ++p) {
        double m = 0.0, acc = 0.0;
        for (Index i = 0; i + 1 < n; ++i) {
            if (phi[i] != 0.0)
                acc += (x[p] - m) * phi[i] / var[i] * g.step(i);
            m += phi[i] * (w(p, i + 1) - w(p, i));
            a(p, i + 1) = acc;
        }
    }
    return a;
}

DecomposedProcess compensate_brownian(const EnlargementSpec& spec, const PathEnsemble& paths,
                                      const Eigen::Ref<const VectorXd>& x)
{
    DecomposedProcess d;
    d.grid = spec.grid;
    d.fv_part = drift_compensator(spec, paths, x);
    d.original = paths.values().leftCols(spec.grid.size());
    d.martingale_part = d.original - d.fv_part;
    d.label = "W = W~ + int rho(X,s) ds; phi = " + spec.phi.describe();
    return d;
}

DecomposedProcess compensate_martingale(const EnlargementSpec& spec, const DeterministicIntegrand& m,
                                        const PathEnsemble& paths, const Eigen::Ref<const VectorXd>& x,
                                        const LadderOptions& classifier_opts)
{
    if (!spec.trivial() && std::isfinite(spec.info_horizon)) {
        const auto verdict = classify(m, spec.info_horizon, classifier_opts);
        if (verdict.verdict != Verdict::semimartingale)
            throw Refusal("compensate_martingale: m = " + m.describe() + " classified " +
                              to_string(verdict.verdict) +
                              "; m . W has no semimartingale decomposition in the enlarged filtration",
                          verdict.verdict == Verdict::undecided);
    }
    const RowMatrixXd a = drift_compensator(spec, paths, x);
    const TimeGrid& g = spec.grid;
    const VectorXd mv = sample(m, g);

    DecomposedProcess d;
    d.grid = g;
    d.original = left_point_integral(paths.values().leftCols(g.size()), mv);
    d.fv_part.resize(a.rows(), a.cols());
    // dA^M = m dA^W since d[M, W] = m dt.
    d.fv_part.col(0).setZero();
    for (Index p = 0; p < a.rows(); ++p) {
        double acc = 0.0;
        for (Index i = 0; i + 1 < g.size(); ++i) {
            acc += mv[i] * (a(p, i + 1) - a(p, i));
            d.fv_part(p, i + 1) = acc;
        }
    }
    d.martingale_part = d.original - d.fv_part;
    d.label = "M = m.W = M~ + int rho(X,u) m_u du; m = " + m.describe() + "; phi = " + spec.phi.describe();
    return d;
}

DecomposedProcess integrate_under_enlargement(const DeterministicIntegrand& H, const DecomposedProcess& d,
                                              double overflow_guard)
{
    const VectorXd h = sample(H, d.grid);
    DecomposedProcess out;
    out.grid = d.grid;
    out.martingale_part = left_point_integral(d.martingale_part, h);
    out.fv_part = left_point_integral(d.fv_part, h);
    out.original = left_point_integral(d.original, h);
    for (Index p = 0; p < d.fv_part.rows(); ++p) {
        double stieltjes = 0.0;
        for (Index i = 0; i + 1 < d.grid.size(); ++i)
            stieltjes += std::abs(h[i]) * std::abs(d.fv_part(p, i + 1) - d.fv_part(p, i));
        if (!std::isfinite(stieltjes) || stieltjes > overflow_guard)
            throw NonIntegrable("integrate_under_enlargement: sum |H||dA| exceeds the overflow guard on path " +
                                std::to_string(p));
    }
    out.label = "H . (" + d.label + "); H = " + H.describe();
    return out;
}

DecomposedProcess levy_bridge_compensator(const PathEnsemble& paths, const Eigen::Ref<const VectorXd>& z_T,
                                          double T, double epsilon)
{
    const TimeGrid& g = paths.grid();
    g.index_of(T);
    if (z_T.size() != paths.n_paths())
        throw InvalidArgument("levy_bridge_compensator: one z_T per path required");
    if (!(epsilon > 0.0))
        throw InvalidArgument("levy_bridge_compensator: epsilon margin must be positive");
    Index n = 0;
    while (n < g.size() && g[n] <= T - epsilon + 1e-12 * T)
        ++n;
    if (n < 2)
        throw InvalidArgument("levy_bridge_compensator: no nodes below T - epsilon");
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        idx[static_cast<std::size_t>(i)] = i;

    DecomposedProcess d;
    d.grid = g.subset(idx);
    d.original = paths.values().leftCols(n);
    d.fv_part = RowMatrixXd::Zero(paths.n_paths(), n);
    const auto& z = paths.values();
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < paths.n_paths(); ++p) {
        double acc = 0.0;
        for (Index i = 0; i + 1 < n; ++i) {
            acc += (z_T[p] - z(p, i)) / (T - g[i]) * g.step(i);
            d.fv_part(p, i + 1) = acc;
        }
    }
    d.martingale_part = d.original - d.fv_part;
    d.label = "Z = M + int (Z_T - Z_s)/(T - s) ds";
    return d;
}

bool SymmetryReport::pass(double threshold) const
{
    if (se <= 1e-12 * std::abs(expected))
        return std::abs(slope - expected) <= 1e-9 * std::max(1.0, std::abs(expected));
    return std::abs(z) <= threshold;
}

SymmetryReport symmetry_identity_check(const PathEnsemble& paths, double s, double t, double T)
{
    if (!(s >= 0.0 && s < t && t <= T))
        throw InvalidArgument("symmetry_identity_check: need 0 <= s < t <= T");
    const auto ws = paths.at(s);
    const auto wt = paths.at(t);
    const auto wT = paths.at(T);
    const VectorXd y = wt - ws;
    const VectorXd x = wT - ws;
    const double sxx = x.squaredNorm();
    SymmetryReport r;
    r.s = s;
    r.t = t;
    r.T = T;
    r.n_paths = paths.n_paths();
    r.slope = x.dot(y) / sxx;
    const double rss = (y - r.slope * x).squaredNorm();
    r.se = r.n_paths > 1 ? std::sqrt(rss / static_cast<double>(r.n_paths - 1) / sxx) : 0.0;
    r.expected = (t - s) / (T - s);
    r.z = r.se > 0.0 ? (r.slope - r.expected) / r.se : 0.0;
    return r;
}

RowMatrixXd abs_drift_integrals(const PathEnsemble& paths, double T, const std::vector<double>& epsilons,
                                DriftIntegralRule rule)
{
    const TimeGrid& g = paths.grid();
    const Index iT = g.index_of(T);
    std::vector<Index> stop;
    for (double e : epsilons) {
        if (!(e > 0.0))
            throw InvalidArgument("abs_drift_integrals: epsilon must be positive");
        stop.push_back(g.index_of(T - e));
    }
    const Index last = *std::max_element(stop.begin(), stop.end());

    // Gauss-Legendre, 4 points on [0, 1].
    static constexpr double gl_x[4] = {0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                                       0.9305681557970263};
    static constexpr double gl_w[4] = {0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                                       0.1739274225687269};
    const double c = std::sqrt(2.0 / std::numbers::pi);

    const auto& w = paths.values();
    RowMatrixXd out(paths.n_paths(), static_cast<Index>(epsilons.size()));
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < paths.n_paths(); ++p) {
        const double wT = w(p, iT);
        VectorXd cum(last + 1);
        double acc = 0.0;
        cum[0] = 0.0;
        for (Index i = 0; i < last; ++i) {
            const double s0 = g[i], h = g.step(i);
            if (rule == DriftIntegralRule::left_point) {
                acc += std::abs(wT - w(p, i)) / (T - s0) * h;
            } else {
                const double a0 = wT - w(p, i), da = -(w(p, i + 1) - w(p, i));
                double piece = 0.0;
                for (int q = 0; q < 4; ++q) {
                    const double u = gl_x[q];
                    const double a = a0 + u * da;
                    const double sd = std::sqrt(u * (1.0 - u) * h);
                    const double folded = sd * c * std::exp(-0.5 * a * a / (sd * sd)) +
                                          a * std::erf(a / (sd * std::numbers::sqrt2));
                    piece += gl_w[q] * folded / (T - (s0 + u * h));
                }
                acc += piece * h;
            }
            cum[i + 1] = acc;
        }
        for (std::size_t e = 0; e < stop.size(); ++e)
            out(p, static_cast<Index>(e)) = cum[stop[e]];
    }
    return out;
}

double bridge_truncation_bound(double epsilon)
{
    return 2.0 * std::sqrt(2.0 / std::numbers::pi) * std::sqrt(epsilon);
}

} // namespace enlarge
