#pragma once

#include "enlarge/timegrid.hpp"

#include <cmath>

namespace testing {

using enlarge::Index;
using enlarge::VectorXd;

inline double mean(const Eigen::Ref<const VectorXd>& v) { return v.mean(); }

inline double variance(const Eigen::Ref<const VectorXd>& v)
{
    const double m = v.mean();
    return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

inline double correlation(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b)
{
    const VectorXd da = a.array() - a.mean();
    const VectorXd db = b.array() - b.mean();
    return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

// Composite Simpson on [a, b] with n (even) panels.
template <typename F>
double simpson(const F& f, double a, double b, long n)
{
    if (n % 2)
        ++n;
    const double h = (b - a) / static_cast<double>(n);
    double s = f(a) + f(b);
    for (long i = 1; i < n; ++i)
        s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace testing
