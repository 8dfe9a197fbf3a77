#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace enlarge {

template <typename Scalar>
struct QuadratureResult {
    Scalar value{};
    Scalar error{};
    int intervals = 0;
    bool converged = false;
};

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1] (non-negative half).
inline constexpr std::array<double, 8> kronrod_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_w = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_w = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Scalar, typename F>
std::pair<Scalar, Scalar> gk15(const F& f, Scalar a, Scalar b)
{
    const Scalar c = (a + b) / 2;
    const Scalar h = (b - a) / 2;
    const Scalar fc = f(c);
    Scalar k = fc * Scalar(kronrod_w[7]);
    Scalar g = fc * Scalar(gauss_w[3]);
    for (int i = 0; i < 7; ++i) {
        const Scalar dx = h * Scalar(kronrod_x[i]);
        const Scalar s = f(c - dx) + f(c + dx);
        k += Scalar(kronrod_w[i]) * s;
        if (i % 2 == 1)
            g += Scalar(gauss_w[i / 2]) * s;
    }
    return {k * h, std::abs((k - g) * h)};
}

} // namespace detail

/// Globally adaptive Gauss-Kronrod 7/15 quadrature of f over [a, b]. Splits
/// the interval with the largest error estimate until the summed error is
/// below max(abs_tol, rel_tol * |value|) or `max_intervals` is reached.
template <typename Scalar = double, typename F>
QuadratureResult<Scalar> integrate(const F& f, Scalar a, Scalar b, Scalar rel_tol = Scalar(1e-12),
                                   Scalar abs_tol = Scalar(0), int max_intervals = 4000)
{
    struct Piece {
        Scalar a, b, value, error;
        bool operator<(const Piece& o) const { return error < o.error; }
    };
    QuadratureResult<Scalar> out;
    if (a == b)
        return {Scalar(0), Scalar(0), 0, true};

    std::priority_queue<Piece> heap;
    auto [v0, e0] = detail::gk15<Scalar>(f, a, b);
    heap.push({a, b, v0, e0});
    Scalar value = v0, error = e0;
    int n = 1;
    while (n < max_intervals) {
        if (!std::isfinite(static_cast<double>(value)))
            break;
        if (error <= std::max(abs_tol, rel_tol * std::abs(value))) {
            out.converged = true;
            break;
        }
        Piece worst = heap.top();
        heap.pop();
        const Scalar mid = (worst.a + worst.b) / 2;
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval exhausted at machine resolution.
            heap.push(worst);
            break;
        }
        auto [lv, le] = detail::gk15<Scalar>(f, worst.a, mid);
        auto [rv, re] = detail::gk15<Scalar>(f, mid, worst.b);
        value += lv + rv - worst.value;
        error += le + re - worst.error;
        heap.push({worst.a, mid, lv, le});
        heap.push({mid, worst.b, rv, re});
        ++n;
    }
    // Re-sum to shed the drift of the running totals.
    Scalar v = 0, e = 0;
    while (!heap.empty()) {
        v += heap.top().value;
        e += heap.top().error;
        heap.pop();
    }
    out.value = v;
    out.error = e;
    out.intervals = n;
    if (!out.converged)
        out.converged = e <= std::max(abs_tol, rel_tol * std::abs(v));
    return out;
}

} // namespace enlarge
