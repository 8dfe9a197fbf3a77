#include "enlarge/gaussian.hpp"

#include "enlarge/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace enlarge {

double residual_variance(const DeterministicIntegrand& phi, double t)
{
    if (!(t >= 0.0))
        throw InvalidArgument("residual_variance: t must be >= 0");
    if (auto closed = phi.square_tail(t))
        return *closed;
    if (!phi.bounded_support())
        throw InvalidArgument("residual_variance: integrand support extends beyond its table");
    const double T = phi.horizon();
    if (t >= T)
        return 0.0;
    const double tol = phi.quad_tol();
    if (phi.family() == DeterministicIntegrand::Family::tabulated) {
        auto sq = [&](double s) {
            const double v = phi(s);
            return v * v;
        };
        // phi^2 is quadratic between table knots; GK15 is exact per segment.
        std::vector<double> cuts{t};
        for (double k : phi.table_times())
            if (k > t && k < T)
                cuts.push_back(k);
        cuts.push_back(T);
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
            total += integrate<double>(sq, cuts[i], cuts[i + 1], tol).value;
        return total;
    }
    // Substitution v = sqrt(T - s) absorbs the square-root singularities of
    // the horizon-weighted families.
    auto g = [&](double v) {
        const double f = phi.before_horizon(v * v);
        return 2.0 * v * f * f;
    };
    auto r = integrate<double>(g, 0.0, std::sqrt(T - t), tol);
    return r.value;
}

VectorXd residual_variance(const DeterministicIntegrand& phi, const TimeGrid& grid)
{
    VectorXd v(grid.size());
    for (Index i = 0; i < grid.size(); ++i)
        v[i] = residual_variance(phi, grid[i]);
    return v;
}

VectorXd sample(const DeterministicIntegrand& phi, const TimeGrid& grid)
{
    VectorXd v(grid.size());
    for (Index i = 0; i < grid.size(); ++i)
        v[i] = phi(grid[i]);
    return v;
}

double information_drift(const DeterministicIntegrand& phi, double x, double t, double m_t)
{
    return information_drift(x, m_t, phi(t), residual_variance(phi, t));
}

double log_conditional_density(const ConditionalLaw& law, double x)
{
    if (!(law.variance > 0.0))
        throw DriftUndefined("conditional density undefined: zero variance");
    const double d = x - law.mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * law.variance) - d * d / (2.0 * law.variance);
}

double conditional_density(const ConditionalLaw& law, double x)
{
    return std::exp(log_conditional_density(law, x));
}

double log_density_identity_residual(const DeterministicIntegrand& phi, const TimeGrid& grid,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& path, double x, double t)
{
    if (path.size() != grid.size())
        throw InvalidArgument("log_density_identity_residual: path length differs from grid size");
    const Index k = grid.index_of(t);
    const double var0 = residual_variance(phi, 0.0);
    const double var_t = residual_variance(phi, t);
    if (!(var0 > 0.0) || !(var_t > 0.0))
        throw DriftUndefined("log_density_identity_residual: information horizon reached");

    double m = 0.0, ito = 0.0, compensator = 0.0;
    for (Index i = 0; i < k; ++i) {
        const double s = grid[i];
        const double ds = grid.step(i);
        const double dw = path[i + 1] - path[i];
        const double f = phi(s);
        const double rho = information_drift(x, m, f, residual_variance(phi, s));
        ito += rho * dw;
        compensator += rho * rho * ds;
        m += f * dw;
    }
    const double lhs = log_conditional_density({m, var_t}, x) - log_conditional_density({0.0, var0}, x);
    return lhs - (ito - 0.5 * compensator);
}

} // namespace enlarge
