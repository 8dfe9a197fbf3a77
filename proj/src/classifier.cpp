#include "enlarge/classifier.hpp"

#include "enlarge/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace enlarge {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

// log of int_a^b u^(-p) du, 0 < a < b.
double log_power_integral(double p, double a, double b)
{
    const double e = 1.0 - p;
    const double lr = std::log(b / a);
    if (std::abs(e * lr) < 1e-12)
        return std::log(lr) + e * std::log(a);
    return e * std::log(a) + std::log(std::expm1(e * lr) / e);
}

// Exponent p with int_{u1}^{u2} u^-p / int_{u0}^{u1} u^-p = ratio; the left
// side decreases in p.
double fit_power(double ratio, double u0, double u1, double u2)
{
    const double target = std::log(ratio);
    auto f = [&](double p) { return log_power_integral(p, u1, u2) - log_power_integral(p, u0, u1) - target; };
    double lo = -50.0, hi = 2000.0;
    if (f(lo) < 0.0)
        return lo;
    if (f(hi) > 0.0)
        return hi;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct Tail {
    double value = inf;
    double exponent = 0.0;
};

Tail geometric_tail(double d_prev, double d)
{
    const double q = d / d_prev;
    if (!(q < 1.0))
        return {inf, q};
    return {d * q / (1.0 - q), q};
}

Tail power_tail(double p, double d, double u_prev, double u)
{
    if (!(p > 1.0))
        return {inf, p};
    const double log_c = std::log(d) - log_power_integral(p, u_prev, u);
    return {std::exp(log_c + (1.0 - p) * std::log(u) - std::log(p - 1.0)), p};
}

// rung(k) integrates over [T - eps_{k-1}, T - eps_k] (rung 0: [0, T - eps_0]).
LadderResult run_ladder(const std::function<double(double, double)>& piece, double T, const LadderOptions& opts)
{
    if (!(T > 0.0))
        throw InvalidArgument("ladder: T must be positive");
    if (!(opts.tol > 0.0) || opts.max_rungs < 4 || !(opts.eps0_fraction > 0.0 && opts.eps0_fraction < 1.0))
        throw InvalidArgument("ladder: invalid options");

    LadderResult out;
    const double eps0 = opts.eps0_fraction * T;
    const double u_base = std::log(1.0 / opts.eps0_fraction);
    auto u_of = [&](int k) { return u_base + k * std::log(2.0); };

    double total = piece(eps0, T);
    out.rungs.push_back({eps0, total, total, total, "", 0.0});
    if (!std::isfinite(total) || total > opts.ceiling) {
        out.status = LadderStatus::diverges;
        out.value = total;
        out.reason = "initial segment exceeds the ceiling";
        return out;
    }

    std::vector<double> d{total};
    int cauchy = 0, extrap_cauchy = 0, growth = 0, slow = 0;
    double prev_extrap = std::numeric_limits<double>::quiet_NaN();

    for (int k = 1; k <= opts.max_rungs; ++k) {
        const double eps_hi = std::ldexp(eps0, -(k - 1));
        const double eps_lo = std::ldexp(eps0, -k);
        const double inc = piece(eps_lo, eps_hi);
        total += inc;
        d.push_back(inc);
        LadderRung rung{eps_lo, total, inc, total, "", 0.0};

        if (!std::isfinite(total) || total > opts.ceiling) {
            out.rungs.push_back(rung);
            out.status = LadderStatus::diverges;
            out.value = total;
            out.reason = "truncated integral exceeds the ceiling";
            return out;
        }

        // Increments that do not decay.
        if (inc > 0.0 && d[k - 1] > 0.0 && inc >= d[k - 1] * (1.0 - 1e-12))
            ++growth;
        else
            growth = 0;
        if (growth >= 5) {
            out.rungs.push_back(rung);
            out.status = LadderStatus::diverges;
            out.value = total;
            out.reason = "increments non-decreasing over 5 consecutive rungs";
            return out;
        }

        // Tail-model extrapolation from the last three increments.
        double extrap = std::numeric_limits<double>::quiet_NaN();
        if (k >= 3 && d[k - 2] > 0.0 && d[k - 1] > 0.0 && inc > 0.0) {
            const double geo_pred = d[k - 1] * d[k - 1] / d[k - 2];
            const double p_old = fit_power(d[k - 1] / d[k - 2], u_of(k - 3), u_of(k - 2), u_of(k - 1));
            const double pow_pred = d[k - 1] * std::exp(log_power_integral(p_old, u_of(k - 1), u_of(k)) -
                                                        log_power_integral(p_old, u_of(k - 2), u_of(k - 1)));
            const bool use_power = std::abs(std::log(pow_pred / inc)) < std::abs(std::log(geo_pred / inc));

            Tail tail;
            if (use_power) {
                const double p = fit_power(inc / d[k - 1], u_of(k - 2), u_of(k - 1), u_of(k));
                tail = power_tail(p, inc, u_of(k - 1), u_of(k));
                rung.tail_model = "log-power";
                slow = p < 1.0 - opts.undecided_margin ? slow + 1 : 0;
                if (std::abs(p - 1.0) <= opts.undecided_margin)
                    tail.value = inf; // boundary: do not extrapolate
            } else {
                tail = geometric_tail(d[k - 1], inc);
                rung.tail_model = "geometric";
                slow = 0;
            }
            rung.tail_exponent = tail.exponent;
            if (std::isfinite(tail.value))
                extrap = total + tail.value;
            rung.extrapolated = std::isfinite(extrap) ? extrap : total;
        } else {
            slow = 0;
        }
        out.rungs.push_back(rung);

        if (slow >= 3) {
            out.status = LadderStatus::diverges;
            out.value = total;
            out.reason = "log-power tail with exponent <= 1 over 3 consecutive rungs";
            return out;
        }

        cauchy = (total > 0.0 && inc <= opts.tol * std::abs(total)) ? cauchy + 1 : 0;
        if (std::isfinite(extrap) && std::isfinite(prev_extrap) &&
            std::abs(extrap - prev_extrap) <= opts.tol * std::abs(extrap))
            ++extrap_cauchy;
        else
            extrap_cauchy = 0;
        prev_extrap = extrap;

        if (cauchy >= 3 || extrap_cauchy >= 3) {
            out.status = LadderStatus::converged;
            out.value = std::isfinite(extrap) ? extrap : total;
            out.reason = cauchy >= 3 ? "truncated integrals Cauchy" : "extrapolated limits Cauchy";
            return out;
        }
    }

    if (total == 0.0) {
        out.status = LadderStatus::converged;
        out.value = 0.0;
        out.reason = "integrand vanishes on the ladder";
        return out;
    }
    out.status = LadderStatus::undecided;
    out.value = total;
    out.reason = "rung budget exhausted";
    return out;
}

// m at s = T - tau, accurate for tiny tau when m's own horizon is T.
double eval_before(const DeterministicIntegrand& m, double T, double tau)
{
    if (m.horizon() == T)
        return m.before_horizon(tau);
    return m(T - tau);
}

double quad_tol_for(const LadderOptions& opts)
{
    return std::max(opts.tol * 1e-3, 1e-14);
}

} // namespace

std::string to_string(LadderStatus s)
{
    switch (s) {
    case LadderStatus::converged:
        return "converged";
    case LadderStatus::diverges:
        return "DIVERGES";
    case LadderStatus::undecided:
        return "UNDECIDED";
    }
    return "UNDECIDED";
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::semimartingale:
        return "SEMIMARTINGALE";
    case Verdict::not_semimartingale:
        return "NOT_SEMIMARTINGALE";
    case Verdict::not_defined:
        return "NOT_DEFINED";
    case Verdict::undecided:
        return "UNDECIDED";
    }
    return "UNDECIDED";
}

LadderResult jeulin_yor_functional(const DeterministicIntegrand& m, double T, const LadderOptions& opts)
{
    const double qtol = quad_tol_for(opts);
    // |m_s| (T-s)^(-1/2) ds = 2 |m(T - v^2)| dv with v = sqrt(T - s).
    auto piece = [&](double eps_lo, double eps_hi) {
        auto f = [&](double v) { return 2.0 * std::abs(eval_before(m, T, v * v)); };
        return integrate<double>(f, std::sqrt(eps_lo), std::sqrt(eps_hi), qtol).value;
    };
    return run_ladder(piece, T, opts);
}

LadderResult l2_norm(const DeterministicIntegrand& m, double T, const LadderOptions& opts)
{
    const double qtol = quad_tol_for(opts);
    // m_s^2 ds = 2 v m(T - v^2)^2 dv.
    auto piece = [&](double eps_lo, double eps_hi) {
        auto f = [&](double v) {
            const double x = eval_before(m, T, v * v);
            return 2.0 * v * x * x;
        };
        return integrate<double>(f, std::sqrt(eps_lo), std::sqrt(eps_hi), qtol).value;
    };
    return run_ladder(piece, T, opts);
}

LadderResult abs_integral(const DeterministicIntegrand& A, double T, const LadderOptions& opts)
{
    const double qtol = quad_tol_for(opts);
    // |A_s| ds = 2 v |A(T - v^2)| dv.
    auto piece = [&](double eps_lo, double eps_hi) {
        auto f = [&](double v) { return 2.0 * v * std::abs(eval_before(A, T, v * v)); };
        return integrate<double>(f, std::sqrt(eps_lo), std::sqrt(eps_hi), qtol).value;
    };
    return run_ladder(piece, T, opts);
}

ClassificationVerdict classify(const DeterministicIntegrand& m, double T, const LadderOptions& opts)
{
    ClassificationVerdict v;
    v.family = m.family_name();
    v.params = m.params();
    v.T = T;
    v.l2 = l2_norm(m, T, opts);
    v.jy = jeulin_yor_functional(m, T, opts);
    if (v.l2.status == LadderStatus::diverges)
        v.verdict = Verdict::not_defined;
    else if (v.l2.status == LadderStatus::undecided)
        v.verdict = Verdict::undecided;
    else if (v.jy.status == LadderStatus::converged)
        v.verdict = Verdict::semimartingale;
    else if (v.jy.status == LadderStatus::diverges)
        v.verdict = Verdict::not_semimartingale;
    else
        v.verdict = Verdict::undecided;
    return v;
}

std::string ClassificationVerdict::csv_header()
{
    return "family,params,T,jy_value,l2_value,verdict,rungs_used";
}

std::string ClassificationVerdict::csv_row() const
{
    auto value = [](const LadderResult& r) {
        if (r.status == LadderStatus::converged) {
            std::ostringstream os;
            os.precision(17);
            os << r.value;
            return os.str();
        }
        return to_string(r.status);
    };
    std::ostringstream os;
    os.precision(17);
    os << family << ",\"" << params << "\"," << T << ',' << value(jy) << ',' << value(l2) << ','
       << to_string(verdict) << ',' << std::max(jy.rungs_used(), l2.rungs_used());
    return os.str();
}

} // namespace enlarge
