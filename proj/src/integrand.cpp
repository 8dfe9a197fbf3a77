#include "enlarge/integrand.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace enlarge {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void require_horizon(double T)
{
    if (!(T > 0.0) || !std::isfinite(T))
        throw InvalidArgument("integrand: horizon T must be positive and finite");
}

// Shortest text that round-trips.
std::string fmt(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

} // namespace

DeterministicIntegrand DeterministicIntegrand::zero()
{
    DeterministicIntegrand d;
    d.family_ = Family::zero;
    d.horizon_ = 0.0;
    return d;
}

DeterministicIntegrand DeterministicIntegrand::indicator(double T)
{
    require_horizon(T);
    DeterministicIntegrand d;
    d.family_ = Family::indicator;
    d.horizon_ = T;
    return d;
}

DeterministicIntegrand DeterministicIntegrand::jeulin_yor(double alpha, double T)
{
    require_horizon(T);
    if (!(alpha > 0.0))
        throw InvalidArgument("integrand: jy needs alpha > 0");
    DeterministicIntegrand d;
    d.family_ = Family::jeulin_yor;
    d.horizon_ = T;
    d.p1_ = alpha;
    return d;
}

DeterministicIntegrand DeterministicIntegrand::constant(double c, double T)
{
    require_horizon(T);
    DeterministicIntegrand d;
    d.family_ = Family::constant;
    d.horizon_ = T;
    d.p1_ = c;
    return d;
}

DeterministicIntegrand DeterministicIntegrand::linear(double a, double b, double T)
{
    require_horizon(T);
    DeterministicIntegrand d;
    d.family_ = Family::linear;
    d.horizon_ = T;
    d.p1_ = a;
    d.p2_ = b;
    return d;
}

DeterministicIntegrand DeterministicIntegrand::power(double beta, double T)
{
    require_horizon(T);
    DeterministicIntegrand d;
    d.family_ = Family::power;
    d.horizon_ = T;
    d.p1_ = beta;
    return d;
}

DeterministicIntegrand DeterministicIntegrand::tabulated(std::vector<double> times, std::vector<double> values)
{
    if (times.size() < 2 || times.size() != values.size())
        throw InvalidArgument("integrand: table needs >= 2 matching (time, value) samples");
    if (times.front() != 0.0)
        throw InvalidArgument("integrand: table must start at time 0");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw InvalidArgument("integrand: table times must increase");
    DeterministicIntegrand d;
    d.family_ = Family::tabulated;
    d.horizon_ = values.back() == 0.0 ? times.back() : inf;
    d.times_ = std::move(times);
    d.values_ = std::move(values);
    return d;
}

DeterministicIntegrand DeterministicIntegrand::scaled(double c) const
{
    DeterministicIntegrand d = *this;
    d.scale_ *= c;
    return d;
}

DeterministicIntegrand DeterministicIntegrand::horizon_weighted(double gamma) const
{
    if (family_ == Family::tabulated || family_ == Family::zero)
        throw InvalidArgument("integrand: horizon weight needs a built-in family with a horizon");
    DeterministicIntegrand d = *this;
    d.weight_ += gamma;
    return d;
}

DeterministicIntegrand DeterministicIntegrand::with_quad_tol(double tol) const
{
    if (!(tol > 0.0))
        throw InvalidArgument("integrand: quad_tol must be positive");
    DeterministicIntegrand d = *this;
    d.quad_tol_ = tol;
    return d;
}

bool DeterministicIntegrand::bounded_support() const
{
    return std::isfinite(horizon_);
}

double DeterministicIntegrand::base_before_horizon(double tau) const
{
    const double T = horizon_;
    switch (family_) {
    case Family::zero:
        return 0.0;
    case Family::indicator:
        return tau <= T ? 1.0 : 0.0;
    case Family::constant:
        return tau <= T ? p1_ : 0.0;
    case Family::linear:
        return tau <= T ? p1_ + p2_ * (T - tau) : 0.0;
    case Family::power:
        return tau <= T ? std::pow(tau, -p1_) : 0.0;
    case Family::jeulin_yor: {
        if (!(tau < T / 2))
            return 0.0;
        const double u = -std::log(tau / T);
        return std::pow(tau, -0.5) * std::pow(u, -p1_);
    }
    case Family::tabulated:
        break;
    }
    return 0.0;
}

double DeterministicIntegrand::operator()(double s) const
{
    if (s < 0.0)
        return 0.0;
    if (family_ == Family::tabulated) {
        if (s >= times_.back()) {
            if (values_.back() != 0.0)
                throw InvalidArgument("integrand: evaluation beyond the table's support");
            return 0.0;
        }
        auto it = std::upper_bound(times_.begin(), times_.end(), s);
        const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
        const double w = (s - times_[i]) / (times_[i + 1] - times_[i]);
        return scale_ * ((1.0 - w) * values_[i] + w * values_[i + 1]);
    }
    if (family_ == Family::zero || s >= horizon_)
        return 0.0;
    return before_horizon(horizon_ - s);
}

double DeterministicIntegrand::before_horizon(double tau) const
{
    if (family_ == Family::tabulated)
        return (*this)(times_.back() - tau);
    if (family_ == Family::zero || !(tau > 0.0))
        return 0.0;
    double v = scale_ * base_before_horizon(tau);
    if (weight_ != 0.0 && v != 0.0)
        v *= std::pow(tau, -weight_);
    return v;
}

std::optional<double> DeterministicIntegrand::square_tail(double t) const
{
    if (weight_ != 0.0 || family_ == Family::tabulated)
        return std::nullopt;
    const double c2 = scale_ * scale_;
    if (family_ == Family::zero || t >= horizon_)
        return 0.0;
    const double T = horizon_;
    const double t0 = std::max(t, 0.0);
    switch (family_) {
    case Family::indicator:
        return c2 * (T - t0);
    case Family::constant:
        return c2 * p1_ * p1_ * (T - t0);
    case Family::linear: {
        const double a = p1_, b = p2_;
        if (b == 0.0)
            return c2 * a * a * (T - t0);
        const double hi = a + b * T, lo = a + b * t0;
        return c2 * (hi * hi * hi - lo * lo * lo) / (3.0 * b);
    }
    case Family::power: {
        const double e = 1.0 - 2.0 * p1_;
        if (e <= 0.0)
            return inf;
        return c2 * std::pow(T - t0, e) / e;
    }
    case Family::jeulin_yor: {
        // With u = -ln((T-s)/T): m^2 ds = u^(-2 alpha) du on (ln 2, inf).
        const double e = 2.0 * p1_ - 1.0;
        if (e <= 0.0)
            return inf;
        const double u0 = -std::log(std::min(T - t0, T / 2) / T);
        return c2 * std::pow(u0, -e) / e;
    }
    default:
        return std::nullopt;
    }
}

std::string DeterministicIntegrand::family_name() const
{
    switch (family_) {
    case Family::zero:
        return "zero";
    case Family::indicator:
        return "indicator";
    case Family::jeulin_yor:
        return "jy";
    case Family::constant:
        return "const";
    case Family::linear:
        return "linear";
    case Family::power:
        return "power";
    case Family::tabulated:
        return "tab";
    }
    return "zero";
}

std::string DeterministicIntegrand::params() const
{
    std::string s;
    switch (family_) {
    case Family::zero:
        break;
    case Family::indicator:
        s = "T=" + fmt(horizon_);
        break;
    case Family::jeulin_yor:
        s = "alpha=" + fmt(p1_) + ",T=" + fmt(horizon_);
        break;
    case Family::constant:
        s = "c=" + fmt(p1_) + ",T=" + fmt(horizon_);
        break;
    case Family::linear:
        s = "a=" + fmt(p1_) + ",b=" + fmt(p2_) + ",T=" + fmt(horizon_);
        break;
    case Family::power:
        s = "beta=" + fmt(p1_) + ",T=" + fmt(horizon_);
        break;
    case Family::tabulated:
        for (std::size_t i = 0; i < times_.size(); ++i)
            s += (i ? ";" : "") + fmt(times_[i]) + "=" + fmt(values_[i]);
        break;
    }
    auto add = [&](const std::string& kv) { s += (s.empty() ? "" : ",") + kv; };
    if (scale_ != 1.0)
        add("scale=" + fmt(scale_));
    if (weight_ != 0.0)
        add("weight=" + fmt(weight_));
    return s;
}

std::string DeterministicIntegrand::describe() const
{
    const std::string p = params();
    return p.empty() ? family_name() : family_name() + ":" + p;
}

DeterministicIntegrand parse_integrand(const std::string& spec)
{
    const auto colon = spec.find(':');
    const std::string family = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

    auto num = [&](const std::string& v) {
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size())
                throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw InvalidArgument("integrand '" + spec + "': bad number '" + v + "'");
        }
    };

    if (family == "tab") {
        // tab:t0=v0;t1=v1;...[,scale=..]
        std::string table = rest, extras;
        if (auto c = rest.find(','); c != std::string::npos) {
            table = rest.substr(0, c);
            extras = rest.substr(c + 1);
        }
        std::vector<double> ts, vs;
        std::istringstream is(table);
        std::string item;
        while (std::getline(is, item, ';')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw InvalidArgument("integrand '" + spec + "': table entries are time=value");
            ts.push_back(num(item.substr(0, eq)));
            vs.push_back(num(item.substr(eq + 1)));
        }
        auto d = DeterministicIntegrand::tabulated(std::move(ts), std::move(vs));
        std::istringstream es(extras);
        while (std::getline(es, item, ',')) {
            const auto eq = item.find('=');
            if (eq != std::string::npos && item.substr(0, eq) == "scale")
                d = d.scaled(num(item.substr(eq + 1)));
            else
                throw InvalidArgument("integrand '" + spec + "': unknown key '" + item + "'");
        }
        return d;
    }

    std::map<std::string, double> kv;
    std::istringstream is(rest);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty())
            continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("integrand '" + spec + "': expected key=value, got '" + item + "'");
        kv[item.substr(0, eq)] = num(item.substr(eq + 1));
    }
    auto take = [&](const std::string& key, std::optional<double> fallback = std::nullopt) {
        auto it = kv.find(key);
        if (it == kv.end()) {
            if (fallback)
                return *fallback;
            throw InvalidArgument("integrand '" + spec + "': missing '" + key + "'");
        }
        const double v = it->second;
        kv.erase(it);
        return v;
    };

    DeterministicIntegrand d;
    if (family == "zero")
        d = DeterministicIntegrand::zero();
    else if (family == "indicator")
        d = DeterministicIntegrand::indicator(take("T", 1.0));
    else if (family == "jy") {
        const double a = take("alpha");
        d = DeterministicIntegrand::jeulin_yor(a, take("T", 1.0));
    } else if (family == "const") {
        const double c = take("c");
        d = DeterministicIntegrand::constant(c, take("T", 1.0));
    } else if (family == "linear") {
        const double a = take("a");
        const double b = take("b");
        d = DeterministicIntegrand::linear(a, b, take("T", 1.0));
    } else if (family == "power") {
        const double b = take("beta");
        d = DeterministicIntegrand::power(b, take("T", 1.0));
    } else
        throw InvalidArgument("integrand: unknown family '" + family + "'");

    d = d.scaled(take("scale", 1.0));
    if (const double w = take("weight", 0.0); w != 0.0)
        d = d.horizon_weighted(w);
    if (kv.count("tol"))
        d = d.with_quad_tol(take("tol"));
    if (!kv.empty())
        throw InvalidArgument("integrand '" + spec + "': unknown key '" + kv.begin()->first + "'");
    return d;
}

} // namespace enlarge
