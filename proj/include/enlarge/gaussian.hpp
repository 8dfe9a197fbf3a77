#pragma once

#include "enlarge/integrand.hpp"
#include "enlarge/timegrid.hpp"

namespace enlarge {

/// Law of X = int phi dW given F_t: Gaussian with the running mean m_t and
/// the residual variance sigma_t^2.
struct ConditionalLaw {
    double mean = 0.0;
    double variance = 0.0;
};

/// int_t^inf phi(s)^2 ds. Closed form for the built-in families, adaptive
/// quadrature at phi.quad_tol() otherwise.
double residual_variance(const DeterministicIntegrand& phi, double t);

/// residual_variance at every grid node.
VectorXd residual_variance(const DeterministicIntegrand& phi, const TimeGrid& grid);

/// phi evaluated at every grid node.
VectorXd sample(const DeterministicIntegrand& phi, const TimeGrid& grid);

/// Left-point sums along each row: out(p, 0) = 0 and
/// out(p, k) = sum_{i<k} weights[i] * (paths(p, i+1) - paths(p, i)).
template <typename Derived>
RowMatrix<typename Derived::Scalar> left_point_integral(const Eigen::MatrixBase<Derived>& paths,
                                                        const Eigen::Ref<const VectorXd>& weights)
{
    using Scalar = typename Derived::Scalar;
    const Index n_nodes = paths.cols();
    if (weights.size() < n_nodes - 1)
        throw InvalidArgument("left_point_integral: one weight per step required");
    RowMatrix<Scalar> out(paths.rows(), n_nodes);
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < paths.rows(); ++p) {
        Scalar acc(0);
        out(p, 0) = acc;
        for (Index i = 0; i + 1 < n_nodes; ++i) {
            acc += Scalar(weights[i]) * (paths(p, i + 1) - paths(p, i));
            out(p, i + 1) = acc;
        }
    }
    return out;
}

/// m_t = int_0^t phi dW by left-point Ito sums, one row per path.
template <typename Derived>
RowMatrix<typename Derived::Scalar> running_mean(const DeterministicIntegrand& phi, const TimeGrid& grid,
                                                 const Eigen::MatrixBase<Derived>& paths)
{
    if (paths.cols() != grid.size())
        throw InvalidArgument("running_mean: path length differs from grid size");
    return left_point_integral(paths, sample(phi, grid));
}

/// rho(x, t) = (x - m_t) phi(t) / sigma_t^2; throws DriftUndefined when sigma_t^2 = 0.
double information_drift(const DeterministicIntegrand& phi, double x, double t, double m_t);

/// Same, with sigma_t^2 and phi(t) already known.
inline double information_drift(double x, double m_t, double phi_t, double variance_t)
{
    if (!(variance_t > 0.0))
        throw DriftUndefined("information drift undefined: residual variance is zero at or after the information horizon");
    return (x - m_t) * phi_t / variance_t;
}

double conditional_density(const ConditionalLaw& law, double x);
double log_conditional_density(const ConditionalLaw& law, double x);

/// log p(t,x) - log p(0,x) - [sum rho(x,s_i) dW_i - 1/2 sum rho(x,s_i)^2 ds_i]
/// along one path, with p(t, .) the conditional density of X given F_t.
/// Vanishes in the continuum limit; the discrete residual is the Euler error.
double log_density_identity_residual(const DeterministicIntegrand& phi, const TimeGrid& grid,
                                     const Eigen::Ref<const Eigen::RowVectorXd>& path, double x, double t);

} // namespace enlarge
