#pragma once

#include "enlarge/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace enlarge {

/// A named deterministic function of time: the phi defining X = int phi dW,
/// a martingale density m, or an integrand H. Built-in families vanish from
/// their horizon T onward; all of them can be evaluated at a distance tau
/// before T without cancellation, which matters for the deep truncations the
/// classifier and the Jeulin probe use.
class DeterministicIntegrand {
public:
    enum class Family { zero, indicator, jeulin_yor, constant, linear, power, tabulated };

    static DeterministicIntegrand zero();
    /// 1 on [0, T), 0 afterwards.
    static DeterministicIntegrand indicator(double T);
    /// (T-s)^(-1/2) * (-ln((T-s)/T))^(-alpha) on (T/2, T), 0 elsewhere.
    static DeterministicIntegrand jeulin_yor(double alpha, double T);
    static DeterministicIntegrand constant(double c, double T);
    /// a + b*s on [0, T).
    static DeterministicIntegrand linear(double a, double b, double T);
    /// (T-s)^(-beta) on [0, T).
    static DeterministicIntegrand power(double beta, double T);
    /// Piecewise-linear through (times, values); zero past the table only if
    /// the last value is zero.
    static DeterministicIntegrand tabulated(std::vector<double> times, std::vector<double> values);

    /// Returns c * this.
    DeterministicIntegrand scaled(double c) const;
    /// Returns this * (T-s)^(-gamma).
    DeterministicIntegrand horizon_weighted(double gamma) const;
    DeterministicIntegrand with_quad_tol(double tol) const;

    double operator()(double s) const;
    /// Value at s = horizon() - tau, tau > 0.
    double before_horizon(double tau) const;

    Family family() const { return family_; }
    /// End of the support (phi == 0 afterwards); infinite for a table that
    /// does not end in zero.
    double horizon() const { return horizon_; }
    bool bounded_support() const;
    double quad_tol() const { return quad_tol_; }
    double scale() const { return scale_; }
    double weight() const { return weight_; }
    const std::vector<double>& table_times() const { return times_; }

    /// Closed form of int_t^inf phi(s)^2 ds where one exists (built-in
    /// families without a horizon weight); +inf when that integral diverges.
    std::optional<double> square_tail(double t) const;

    std::string family_name() const;
    std::string params() const;
    std::string describe() const;

private:
    double base_before_horizon(double tau) const;

    Family family_ = Family::zero;
    double horizon_ = 0.0;
    double p1_ = 0.0, p2_ = 0.0;
    double scale_ = 1.0;
    double weight_ = 0.0;
    double quad_tol_ = 1e-10;
    std::vector<double> times_, values_;
};

/// Parses `indicator:T=1`, `jy:alpha=0.75,T=1`, `const:c=2,T=1`,
/// `linear:a=1,b=-1,T=1`, `power:beta=0.25,T=1`, `zero`, or
/// `tab:0=1;0.5=1;1=0`. Any family accepts trailing `scale=` and `weight=`.
DeterministicIntegrand parse_integrand(const std::string& spec);

} // namespace enlarge
