#include "enlarge/statistics.hpp"

#include "enlarge/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace enlarge {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double z_score(double estimate, double expected, double se)
{
    const double d = estimate - expected;
    if (se > 0.0)
        return d / se;
    return d == 0.0 ? 0.0 : std::copysign(inf, d);
}

// Central moments 2..4 of v.
struct Central {
    double mean, m2, m3, m4;
};

Central central_moments(const Eigen::Ref<const VectorXd>& v)
{
    const double n = static_cast<double>(v.size());
    const double mean = compensated_sum(v) / n;
    const VectorXd d = v.array() - mean;
    const VectorXd d2 = d.array().square();
    return {mean, compensated_sum(d2) / n, compensated_sum(d2.cwiseProduct(d)) / n,
            compensated_sum(d2.cwiseProduct(d2)) / n};
}

} // namespace

SampleMoments sample_moments(const Eigen::Ref<const VectorXd>& v)
{
    SampleMoments m;
    m.n = v.size();
    if (m.n == 0)
        throw InvalidArgument("sample_moments: empty sample");
    m.mean = compensated_sum(v) / static_cast<double>(m.n);
    if (m.n > 1) {
        const VectorXd d = (v.array() - m.mean).square();
        m.sd = std::sqrt(compensated_sum(d) / static_cast<double>(m.n - 1));
        m.se = m.sd / std::sqrt(static_cast<double>(m.n));
    }
    return m;
}

double normal_upper_tail(double z)
{
    return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

double normal_upper_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0))
        throw InvalidArgument("normal_upper_quantile: p must lie in (0, 1)");
    if (p > 0.5)
        return -normal_upper_quantile(1.0 - p);
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
        const double mid = 0.5 * (lo + hi);
        (normal_upper_tail(mid) > p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double bonferroni_critical(double family_threshold, Index n_tests)
{
    if (n_tests < 1)
        throw InvalidArgument("bonferroni_critical: need at least one test");
    if (n_tests == 1)
        return family_threshold;
    const double alpha = 2.0 * normal_upper_tail(family_threshold);
    return normal_upper_quantile(alpha / (2.0 * static_cast<double>(n_tests)));
}

namespace basis {
BasisFunction one() { return {"1", [](double, double) { return 1.0; }}; }
BasisFunction state() { return {"W_s", [](double w, double) { return w; }}; }
BasisFunction info() { return {"X", [](double, double x) { return x; }}; }
BasisFunction state_info() { return {"W_s*X", [](double w, double x) { return w * x; }}; }
BasisFunction state_sq() { return {"W_s^2", [](double w, double) { return w * w; }}; }
BasisFunction info_gap() { return {"X-W_s", [](double w, double x) { return x - w; }}; }
std::vector<BasisFunction> defaults() { return {one(), state(), info(), state_info(), state_sq()}; }
BasisFunction by_label(const std::string& label)
{
    for (auto make : {one, state, info, state_info, state_sq, info_gap}) {
        BasisFunction b = make();
        if (b.label == label)
            return b;
    }
    throw InvalidArgument("unknown basis element '" + label + "' (expected 1, W_s, X, W_s*X, W_s^2 or X-W_s)");
}
} // namespace basis

double MartingaleTestReport::max_abs_z() const
{
    double m = 0.0;
    for (const auto& t : tests)
        m = std::max(m, std::abs(t.z));
    return m;
}

const TestRecord* MartingaleTestReport::find(double s, double t, const std::string& basis_label) const
{
    for (const auto& r : tests)
        if (r.s == s && r.t == t && r.basis == basis_label)
            return &r;
    return nullptr;
}

void MartingaleTestReport::write_csv(std::ostream& os) const
{
    os << "s,t,basis,estimate,se,z\n";
    os.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& r : tests)
        os << r.s << ',' << r.t << ',' << r.basis << ',' << r.estimate << ',' << r.se << ',' << r.z << '\n';
}

MartingaleTestReport increment_regression_test(const PathEnsemble& process, const PathEnsemble& state,
                                               const Eigen::Ref<const VectorXd>& x,
                                               const std::vector<std::pair<double, double>>& pairs,
                                               const std::vector<BasisFunction>& basis, double threshold)
{
    if (basis.empty())
        throw InvalidArgument("increment_regression_test: empty basis");
    if (pairs.empty())
        throw InvalidArgument("increment_regression_test: no (s, t) pairs");
    if (state.grid().nodes() != process.grid().nodes() || state.n_paths() != process.n_paths())
        throw InvalidArgument("increment_regression_test: state and process must share grid and paths");
    if (x.size() != process.n_paths())
        throw InvalidArgument("increment_regression_test: one x per path required");

    MartingaleTestReport rep;
    rep.n_paths = process.n_paths();
    rep.threshold = threshold;
    rep.seeds = process.seed().describe();
    for (const auto& [s, t] : pairs) {
        if (!(s < t))
            throw InvalidArgument("increment_regression_test: need s < t");
        const VectorXd dm = process.at(t) - process.at(s);
        const auto ws = state.at(s);
        for (const auto& g : basis) {
            VectorXd v(dm.size());
            for (Index p = 0; p < dm.size(); ++p)
                v[p] = dm[p] * g.f(ws[p], x[p]);
            const auto m = sample_moments(v);
            rep.tests.push_back({s, t, g.label, m.mean, m.se, z_score(m.mean, 0.0, m.se)});
        }
    }
    rep.critical = bonferroni_critical(threshold, static_cast<Index>(rep.tests.size()));
    rep.pass = rep.max_abs_z() <= rep.critical;
    return rep;
}

VectorXd realized_variance(const PathEnsemble& process, double t)
{
    const Index k = process.grid().index_of(t);
    const auto& v = process.values();
    VectorXd qv(process.n_paths());
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < process.n_paths(); ++p) {
        double acc = 0.0;
        for (Index i = 0; i < k; ++i) {
            const double d = v(p, i + 1) - v(p, i);
            acc += d * d;
        }
        qv[p] = acc;
    }
    return qv;
}

QuadraticVariationReport quadratic_variation_test(const Eigen::Ref<const VectorXd>& qv, double t, double expected,
                                                  double rel_tol)
{
    QuadraticVariationReport r;
    r.t = t;
    r.expected = expected;
    r.rel_tol = rel_tol;
    const auto m = sample_moments(qv);
    r.mean = m.mean;
    r.se = m.se;
    if (expected == 0.0) {
        r.rel_error = std::abs(r.mean);
        r.pass = r.mean == 0.0;
    } else {
        r.rel_error = std::abs(r.mean - expected) / std::abs(expected);
        r.pass = r.rel_error <= rel_tol;
    }
    return r;
}

QuadraticVariationReport quadratic_variation_test(const PathEnsemble& process, double t, double expected,
                                                  double rel_tol)
{
    return quadratic_variation_test(realized_variance(process, t), t, expected, rel_tol);
}

bool LevyCharacterizationReport::passes(const std::string& name) const
{
    for (const auto& c : checks)
        if (c.name == name && !(std::abs(c.z) <= critical))
            return false;
    return true;
}

LevyCharacterizationReport levy_characterization_suite(const PathEnsemble& process, const std::vector<double>& times,
                                                       double threshold)
{
    if (times.size() < 2)
        throw InvalidArgument("levy_characterization_suite: need at least two times");
    LevyCharacterizationReport rep;
    rep.n_paths = process.n_paths();
    rep.threshold = threshold;
    const double n = static_cast<double>(rep.n_paths);

    std::vector<VectorXd> incs;
    for (std::size_t j = 0; j + 1 < times.size(); ++j) {
        const double s = times[j], t = times[j + 1];
        if (!(s < t))
            throw InvalidArgument("levy_characterization_suite: times must increase");
        const VectorXd d = process.at(t) - process.at(s);
        const double dt = t - s;
        const auto c = central_moments(d);
        const auto m = sample_moments(d);
        rep.checks.push_back({"mean", s, t, m.mean, 0.0, m.se, z_score(m.mean, 0.0, m.se)});
        const double var = c.m2 * n / (n - 1.0);
        const double var_se = std::sqrt(std::max(c.m4 - c.m2 * c.m2, 0.0) / n);
        rep.checks.push_back({"variance", s, t, var, dt, var_se, z_score(var, dt, var_se)});
        const double skew = c.m2 > 0.0 ? c.m3 / std::pow(c.m2, 1.5) : 0.0;
        const double skew_se = std::sqrt(6.0 / n);
        rep.checks.push_back({"skewness", s, t, skew, 0.0, skew_se, z_score(skew, 0.0, skew_se)});
        const double kurt = c.m2 > 0.0 ? c.m4 / (c.m2 * c.m2) - 3.0 : 0.0;
        const double kurt_se = std::sqrt(24.0 / n);
        rep.checks.push_back({"excess_kurtosis", s, t, kurt, 0.0, kurt_se, z_score(kurt, 0.0, kurt_se)});
        incs.push_back(d);
    }
    for (std::size_t j = 0; j + 1 < incs.size(); ++j) {
        const auto a = central_moments(incs[j]);
        const auto b = central_moments(incs[j + 1]);
        const VectorXd prod = (incs[j].array() - a.mean) * (incs[j + 1].array() - b.mean);
        const double denom = std::sqrt(a.m2 * b.m2);
        const double r = denom > 0.0 ? compensated_sum(prod) / n / denom : 0.0;
        const double se = 1.0 / std::sqrt(n);
        rep.checks.push_back({"correlation", times[j], times[j + 2], r, 0.0, se, z_score(r, 0.0, se)});
    }
    rep.critical = bonferroni_critical(threshold, static_cast<Index>(rep.checks.size()));
    rep.pass = true;
    for (const auto& c : rep.checks)
        rep.pass = rep.pass && std::abs(c.z) <= rep.critical;
    return rep;
}

double look_ahead_tail_bound(int n, double delta)
{
    const double m = std::ldexp(1.0, n);
    return m * 2.0 / (std::sqrt(m) * delta * std::sqrt(2.0 * std::numbers::pi)) * std::exp(-0.5 * m * delta * delta);
}

NonIntegratorSamples non_integrator_samples(double epsilon, const std::vector<int>& levels, const PathEnsemble& paths)
{
    if (!(epsilon > 0.0))
        throw InvalidArgument("non_integrator_demo: epsilon must be positive");
    NonIntegratorSamples out;
    out.epsilon = epsilon;
    out.levels = levels;
    const auto& w = paths.values();
    for (int n : levels) {
        if (n < 0 || std::ldexp(1.0, -n) > epsilon)
            throw InvalidArgument("non_integrator_demo: level " + std::to_string(n) +
                                  " has 2^-n > epsilon; H^n would not be predictable");
        const Index m = Index{1} << n;
        std::vector<Index> idx(static_cast<std::size_t>(m + 1));
        for (Index k = 0; k <= m; ++k)
            idx[static_cast<std::size_t>(k)] = paths.grid().index_of(std::ldexp(static_cast<double>(k), -n));
        VectorXd integral(paths.n_paths()), sup(paths.n_paths());
#pragma omp parallel for schedule(static)
        for (Index p = 0; p < paths.n_paths(); ++p) {
            double acc = 0.0, mx = 0.0;
            for (Index k = 0; k < m; ++k) {
                const double d = w(p, idx[static_cast<std::size_t>(k + 1)]) - w(p, idx[static_cast<std::size_t>(k)]);
                acc += d * d;
                mx = std::max(mx, std::abs(d));
            }
            integral[p] = acc;
            sup[p] = mx;
        }
        out.integral.push_back(std::move(integral));
        out.sup.push_back(std::move(sup));
    }
    return out;
}

NonIntegratorReport summarize(const NonIntegratorSamples& s, const std::vector<double>& deltas)
{
    NonIntegratorReport rep;
    rep.epsilon = s.epsilon;
    rep.n_paths = s.integral.empty() ? 0 : s.integral.front().size();
    for (std::size_t l = 0; l < s.levels.size(); ++l) {
        const VectorXd& integral = s.integral[l];
        const VectorXd& sup = s.sup[l];
        NonIntegratorLevel lv;
        lv.n = s.levels[l];
        const auto mom = sample_moments(integral);
        lv.mean_integral = mom.mean;
        lv.se = mom.se;
        lv.second_moment = compensated_sum(integral.array().square().matrix()) / static_cast<double>(integral.size());
        lv.deltas = deltas;
        for (double d : deltas) {
            lv.sup_exceed_prob.push_back(static_cast<double>((sup.array() > d).count()) /
                                         static_cast<double>(sup.size()));
            lv.tail_bound.push_back(look_ahead_tail_bound(lv.n, d));
        }
        rep.levels.push_back(std::move(lv));
    }
    return rep;
}

NonIntegratorReport non_integrator_demo(double epsilon, const std::vector<int>& levels, const PathEnsemble& paths,
                                        const std::vector<double>& deltas)
{
    return summarize(non_integrator_samples(epsilon, levels, paths), deltas);
}

namespace {

double eval_before(const DeterministicIntegrand& A, double T, double tau)
{
    return A.horizon() == T ? A.before_horizon(tau) : A(T - tau);
}

// int_{lo}^{hi} A(T - tau) dtau.
double octave_integral(const DeterministicIntegrand& A, double T, double lo, double hi)
{
    auto f = [&](double tau) { return eval_before(A, T, tau); };
    return integrate<double>(f, lo, hi, 1e-12).value;
}

} // namespace

double jeulin_oracle(const DeterministicIntegrand& A, double T, double eps)
{
    if (!(eps > 0.0 && eps < T))
        throw InvalidArgument("jeulin_oracle: need 0 < eps < T");
    double total = 0.0;
    double hi = T, lo = 0.5 * T;
    while (true) {
        lo = std::max(lo, eps);
        total += octave_integral(A, T, lo, hi);
        if (lo <= eps)
            break;
        hi = lo;
        lo = 0.5 * hi;
    }
    return std::sqrt(2.0 / std::numbers::pi) * total;
}

JeulinCalibration calibrate_jeulin_probe(const DeterministicIntegrand& A, double T, double ceiling, double margin,
                                         int max_depth, double eps0_fraction)
{
    const double eps0 = eps0_fraction * T;
    const double c = std::sqrt(2.0 / std::numbers::pi);
    double acc = c * octave_integral(A, T, eps0, T);
    for (int k = 0; k <= max_depth; ++k) {
        if (k > 0)
            acc += c * octave_integral(A, T, std::ldexp(eps0, -k), std::ldexp(eps0, -(k - 1)));
        if (acc >= margin * ceiling)
            return {k, ceiling, acc};
    }
    throw InvalidArgument("calibrate_jeulin_probe: oracle mean stays below margin * ceiling up to depth " +
                          std::to_string(max_depth));
}

JeulinProbeReport jeulin_lemma_probe(const DeterministicIntegrand& A, const PathEnsemble& reversed,
                                     const JeulinProbeOptions& opts)
{
    const TimeGrid& g = reversed.grid();
    const double T = opts.T;
    if (std::abs(g.back() - T) > 1e-12 * T)
        throw InvalidArgument("jeulin_lemma_probe: reversed grid must end at T");
    if (opts.depth < opts.cauchy_window)
        throw InvalidArgument("jeulin_lemma_probe: depth shorter than the Cauchy window");

    JeulinProbeReport rep;
    rep.integrand = A.describe();
    rep.n_paths = reversed.n_paths();
    rep.options = opts;
    const double eps0 = opts.eps0_fraction * T;
    std::vector<Index> rung_node;
    for (int k = 0; k <= opts.depth; ++k) {
        const double eps = std::ldexp(eps0, -k);
        rep.epsilons.push_back(eps);
        rung_node.push_back(g.index_of(eps));
    }

    // Step j covers tau in [tau_j, tau_{j+1}], i.e. s in [T - tau_{j+1}, T - tau_j].
    // R is taken at the left point in s (tau_{j+1}); A is integrated exactly
    // over the step, so the ensemble mean is unbiased for the oracle.
    const Index M = g.size();
    VectorXd weight = VectorXd::Zero(M);
    for (Index j = rung_node.back(); j + 1 < M; ++j)
        weight[j] = octave_integral(A, T, g[j], g[j + 1]) / std::sqrt(g[j + 1]);

    const Index R = static_cast<Index>(rung_node.size());
    RowMatrixXd truncated(reversed.n_paths(), R);
    const auto& y = reversed.values();
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < reversed.n_paths(); ++p) {
        double acc = 0.0;
        Index r = 0;
        for (Index j = M - 2; j >= rung_node.back(); --j) {
            acc += std::abs(y(p, j + 1)) * weight[j];
            if (r < R && j == rung_node[static_cast<std::size_t>(r)])
                truncated(p, r++) = acc;
        }
    }

    Index cauchy = 0, over = 0;
    VectorXd final_values = truncated.col(R - 1);
    for (Index p = 0; p < reversed.n_paths(); ++p) {
        const double last = truncated(p, R - 1);
        bool ok = true;
        for (int w = 0; w < opts.cauchy_window; ++w) {
            const double inc = std::abs(truncated(p, R - 1 - w) - truncated(p, R - 2 - w));
            ok = ok && inc <= opts.cauchy_tol * std::abs(last);
        }
        cauchy += ok ? 1 : 0;
        over += last > opts.ceiling ? 1 : 0;
    }
    const double n = static_cast<double>(reversed.n_paths());
    rep.fraction_cauchy = static_cast<double>(cauchy) / n;
    rep.fraction_over_ceiling = static_cast<double>(over) / n;
    for (Index r = 0; r < R; ++r) {
        rep.mean_truncated.push_back(compensated_sum(truncated.col(r)) / n);
        rep.oracle.push_back(A.family() == DeterministicIntegrand::Family::zero
                                 ? 0.0
                                 : jeulin_oracle(A, T, rep.epsilons[static_cast<std::size_t>(r)]));
    }
    std::sort(final_values.begin(), final_values.end());
    rep.min_final = final_values[0];
    rep.median_final = final_values[final_values.size() / 2];
    return rep;
}

} // namespace enlarge
