#include "enlarge/timegrid.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace enlarge {

TimeGrid::TimeGrid(VectorXd nodes, std::optional<double> singular_point, double refinement_ratio)
    : nodes_(std::move(nodes)), singular_(singular_point), ratio_(refinement_ratio)
{
    if (nodes_.size() < 2)
        throw InvalidArgument("grid: at least two nodes required");
    if (nodes_[0] != 0.0)
        throw InvalidArgument("grid: first node must be 0");
    for (Index i = 1; i < nodes_.size(); ++i)
        if (!(nodes_[i] > nodes_[i - 1]))
            throw InvalidArgument("grid: nodes must be strictly increasing");
    if (singular_) {
        if (*singular_ < 0.0)
            throw InvalidArgument("grid: singular point must be >= 0");
        for (Index i = 0; i < nodes_.size(); ++i)
            if (nodes_[i] == *singular_)
                throw InvalidArgument("grid: singular point cannot be a node");
    }
}

double TimeGrid::min_step() const
{
    double m = std::numeric_limits<double>::infinity();
    for (Index i = 0; i + 1 < size(); ++i)
        m = std::min(m, step(i));
    return m;
}

std::optional<Index> TimeGrid::find(double t) const
{
    const double* first = nodes_.data();
    const double* last = first + nodes_.size();
    const double* it = std::lower_bound(first, last, t);
    const double tol = 1e-12 * std::max(1.0, std::abs(t));
    std::optional<Index> best;
    double best_gap = tol;
    for (const double* c : {it, it - 1}) {
        if (c < first || c >= last)
            continue;
        if (const double gap = std::abs(*c - t); gap <= best_gap && !(best && gap == best_gap)) {
            best = static_cast<Index>(c - first);
            best_gap = gap;
        }
    }
    return best;
}

Index TimeGrid::index_of(double t) const
{
    if (auto i = find(t))
        return *i;
    throw InvalidArgument("grid: time " + std::to_string(t) + " is not a grid node");
}

TimeGrid TimeGrid::scaled(double factor) const
{
    if (!(factor > 0.0))
        throw InvalidArgument("grid: scale factor must be positive");
    std::optional<double> s;
    if (singular_)
        s = *singular_ * factor;
    return TimeGrid(nodes_ * factor, s, ratio_);
}

TimeGrid TimeGrid::extended_to(double t) const
{
    if (!(t > back()))
        throw InvalidArgument("grid: extension point must exceed the last node");
    VectorXd n(size() + 1);
    n << nodes_, t;
    return TimeGrid(std::move(n), std::nullopt, ratio_);
}

TimeGrid TimeGrid::with_nodes(std::span<const double> times) const
{
    std::vector<double> n(nodes_.data(), nodes_.data() + nodes_.size());
    for (double t : times) {
        if (!(t >= 0.0 && t <= back()))
            throw InvalidArgument("grid: inserted time " + std::to_string(t) + " lies outside [0, back()]");
        if (!find(t))
            n.push_back(t);
    }
    std::sort(n.begin(), n.end());
    return TimeGrid(Eigen::Map<const VectorXd>(n.data(), static_cast<Index>(n.size())), singular_, ratio_);
}

TimeGrid TimeGrid::subset(std::span<const Index> indices) const
{
    VectorXd n(static_cast<Index>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j)
        n[static_cast<Index>(j)] = nodes_[indices[j]];
    if (n.size() < 2 || n[0] != 0.0)
        throw InvalidArgument("grid: a sampled grid needs node 0 and at least one later node");
    std::optional<double> s;
    if (singular_ && n[n.size() - 1] < *singular_)
        s = singular_;
    return TimeGrid(std::move(n), s, ratio_);
}

TimeGrid build_grid(double horizon, Index n_base, std::optional<double> singular_point,
                    double refinement_ratio, std::optional<int> depth)
{
    if (!(horizon > 0.0))
        throw InvalidArgument("build_grid: horizon must be positive");
    if (n_base < 2)
        throw InvalidArgument("build_grid: n_base must be >= 2");
    if (singular_point && *singular_point < 0.0)
        throw InvalidArgument("build_grid: singular point must be >= 0");
    if (singular_point && !(refinement_ratio > 0.0 && refinement_ratio < 1.0))
        throw InvalidArgument("build_grid: refinement ratio must lie in (0,1)");
    if (depth && *depth < 0)
        throw InvalidArgument("build_grid: depth must be >= 0");

    const double h = horizon / static_cast<double>(n_base);
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(n_base) + 64);
    for (Index k = 0; k <= n_base; ++k)
        nodes.push_back(k == n_base ? horizon : h * static_cast<double>(k));

    if (!singular_point || *singular_point > horizon)
        return TimeGrid(Eigen::Map<const VectorXd>(nodes.data(), static_cast<Index>(nodes.size())),
                        singular_point, refinement_ratio);

    const double sp = *singular_point;
    if (sp == 0.0)
        throw InvalidArgument("build_grid: cannot refine toward 0 from below");

    // Last uniform node strictly below the singular point; uniform nodes at or
    // just past it are removed, the geometric ladder fills the gap.
    std::vector<double> below, above;
    for (double t : nodes) {
        if (t < sp * (1.0 - 1e-14))
            below.push_back(t);
        else if (t > sp * (1.0 + 1e-14))
            above.push_back(t);
    }
    const double gap = sp - below.back();

    int d = 0;
    if (depth) {
        d = *depth;
    } else {
        // The final geometric step is gap * r^(d-1) * (1-r).
        const double target = 1e-6 * horizon;
        d = 1;
        while (gap * std::pow(refinement_ratio, d - 1) * (1.0 - refinement_ratio) > target)
            ++d;
    }
    for (int j = 1; j <= d; ++j)
        below.push_back(sp - gap * std::pow(refinement_ratio, j));
    below.insert(below.end(), above.begin(), above.end());
    return TimeGrid(Eigen::Map<const VectorXd>(below.data(), static_cast<Index>(below.size())), sp,
                    refinement_ratio);
}

TimeGrid build_horizon_grid(double horizon, double eps0, int depth, int substeps, Index n_base)
{
    if (!(horizon > 0.0) || !(eps0 > 0.0) || eps0 >= horizon)
        throw InvalidArgument("build_horizon_grid: need 0 < eps0 < horizon");
    if (depth < 0 || substeps < 1 || n_base < 1)
        throw InvalidArgument("build_horizon_grid: invalid depth/substeps/n_base");
    if (std::ldexp(eps0, -depth) < 1e-300)
        throw InvalidArgument("build_horizon_grid: ladder too deep for double precision");

    std::vector<double> nodes{0.0};
    const double r = std::exp2(-1.0 / substeps);
    for (int k = depth; k >= 1; --k) {
        const double lo = std::ldexp(eps0, -k);
        for (int j = 0; j < substeps; ++j)
            nodes.push_back(lo * std::pow(r, -j));
    }
    nodes.push_back(eps0);
    const double h = (horizon - eps0) / static_cast<double>(n_base);
    for (Index k = 1; k < n_base; ++k)
        nodes.push_back(eps0 + h * static_cast<double>(k));
    nodes.push_back(horizon);
    return TimeGrid(Eigen::Map<const VectorXd>(nodes.data(), static_cast<Index>(nodes.size())));
}

std::mt19937_64 SeedSpec::engine_for(std::uint64_t path_index) const
{
    const std::uint64_t idx = first_path + path_index;
    std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                      static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
    return std::mt19937_64(seq);
}

std::string SeedSpec::describe() const
{
    return "mt19937_64 seed_seq{base_seed, path_index}; base_seed=" + std::to_string(base_seed) +
           ", first_path=" + std::to_string(first_path);
}

std::string to_string(ProcessLabel label)
{
    switch (label) {
    case ProcessLabel::brownian:
        return "brownian";
    case ProcessLabel::levy:
        return "levy";
    case ProcessLabel::derived:
        return "derived";
    }
    return "derived";
}

PathEnsemble stack_paths(std::span<const PathEnsemble> parts)
{
    if (parts.empty())
        throw InvalidArgument("stack_paths: nothing to stack");
    Index rows = 0;
    for (const auto& p : parts) {
        if (p.grid().nodes() != parts.front().grid().nodes())
            throw InvalidArgument("stack_paths: grids differ");
        rows += p.n_paths();
    }
    PathEnsemble::Values v(rows, parts.front().grid().size());
    Index r = 0;
    for (const auto& p : parts) {
        v.middleRows(r, p.n_paths()) = p.values();
        r += p.n_paths();
    }
    return PathEnsemble(parts.front().grid(), std::move(v), parts.front().label(), parts.front().seed());
}

PathEnsemble simulate_brownian(const TimeGrid& grid, Index n_paths, const SeedSpec& seed)
{
    if (n_paths < 1)
        throw InvalidArgument("simulate_brownian: n_paths must be >= 1");
    const Index n = grid.size();
    VectorXd sd(n - 1);
    for (Index i = 0; i + 1 < n; ++i)
        sd[i] = std::sqrt(grid.step(i));

    PathEnsemble::Values v(n_paths, n);
#pragma omp parallel for schedule(static)
    for (Index p = 0; p < n_paths; ++p) {
        auto eng = seed.engine_for(static_cast<std::uint64_t>(p));
        std::normal_distribution<double> gauss;
        double w = 0.0;
        v(p, 0) = 0.0;
        for (Index i = 0; i + 1 < n; ++i) {
            w += sd[i] * gauss(eng);
            v(p, i + 1) = w;
        }
    }
    return PathEnsemble(grid, std::move(v), ProcessLabel::brownian, seed);
}

double JumpLaw::second_moment() const
{
    switch (kind) {
    case Kind::constant:
    case Kind::symmetric:
        return a * a;
    case Kind::normal:
        return a * a + b * b;
    }
    return 0.0;
}

std::string JumpLaw::describe() const
{
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
    case Kind::constant:
        os << "const:" << a;
        break;
    case Kind::symmetric:
        os << "pm:" << a;
        break;
    case Kind::normal:
        os << "normal:" << a << "," << b;
        break;
    }
    return os.str();
}

JumpLaw parse_jump_law(const std::string& spec)
{
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw InvalidArgument("jump law: expected kind:params, got '" + spec + "'");
    const std::string kind = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    try {
        if (kind == "const")
            return JumpLaw::constant(std::stod(rest));
        if (kind == "pm")
            return JumpLaw::symmetric(std::stod(rest));
        if (kind == "normal") {
            const auto comma = rest.find(',');
            if (comma == std::string::npos)
                throw InvalidArgument("jump law: normal needs mean,sd");
            const double sd = std::stod(rest.substr(comma + 1));
            if (sd < 0.0)
                throw InvalidArgument("jump law: negative sd");
            return JumpLaw::normal(std::stod(rest.substr(0, comma)), sd);
        }
    } catch (const std::logic_error& e) {
        if (dynamic_cast<const InvalidArgument*>(&e))
            throw;
        throw InvalidArgument("jump law: cannot parse '" + spec + "'");
    }
    throw InvalidArgument("jump law: unknown kind '" + kind + "'");
}

PathEnsemble simulate_compound_poisson(const TimeGrid& grid, double rate, const JumpLaw& jumps,
                                       Index n_paths, const SeedSpec& seed)
{
    if (!(rate >= 0.0))
        throw InvalidArgument("simulate_compound_poisson: negative rate");
    if (n_paths < 1)
        throw InvalidArgument("simulate_compound_poisson: n_paths must be >= 1");
    const Index n = grid.size();
    const double horizon = grid.back();

    PathEnsemble::Values v = PathEnsemble::Values::Zero(n_paths, n);
    if (rate == 0.0)
        return PathEnsemble(grid, std::move(v), ProcessLabel::levy, seed);

#pragma omp parallel for schedule(static)
    for (Index p = 0; p < n_paths; ++p) {
        auto eng = seed.engine_for(static_cast<std::uint64_t>(p));
        std::exponential_distribution<double> wait(rate);
        std::uniform_int_distribution<int> coin(0, 1);
        std::normal_distribution<double> gauss(jumps.a, jumps.b);
        double t = wait(eng);
        double z = 0.0;
        Index node = 1;
        while (node < n) {
            // Record nodes strictly before the next jump (paths are cadlag).
            while (node < n && grid[node] < t) {
                v(p, node) = z;
                ++node;
            }
            if (t > horizon)
                break;
            switch (jumps.kind) {
            case JumpLaw::Kind::constant:
                z += jumps.a;
                break;
            case JumpLaw::Kind::symmetric:
                z += coin(eng) ? jumps.a : -jumps.a;
                break;
            case JumpLaw::Kind::normal:
                z += gauss(eng);
                break;
            }
            t += wait(eng);
        }
        for (; node < n; ++node)
            v(p, node) = z;
    }
    return PathEnsemble(grid, std::move(v), ProcessLabel::levy, seed);
}

void write_csv(std::ostream& os, const PathEnsemble& ensemble)
{
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    os << "path,t,value\n";
    const auto& g = ensemble.grid();
    for (Index p = 0; p < ensemble.n_paths(); ++p)
        for (Index i = 0; i < g.size(); ++i)
            os << p << ',' << g[i] << ',' << ensemble.values()(p, i) << '\n';
    os.precision(old);
}

PathEnsemble read_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("path,t,value", 0) != 0)
        throw InvalidArgument("csv: expected header 'path,t,value'");
    std::map<long, std::vector<std::pair<double, double>>> rows;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::istringstream ls(line);
        long p;
        double t, x;
        char c1, c2;
        if (!(ls >> p >> c1 >> t >> c2 >> x) || c1 != ',' || c2 != ',')
            throw InvalidArgument("csv: malformed row '" + line + "'");
        rows[p].emplace_back(t, x);
    }
    if (rows.empty())
        throw InvalidArgument("csv: no rows");
    const auto& first = rows.begin()->second;
    VectorXd nodes(static_cast<Index>(first.size()));
    for (std::size_t i = 0; i < first.size(); ++i)
        nodes[static_cast<Index>(i)] = first[i].first;
    TimeGrid grid(nodes);
    PathEnsemble::Values v(static_cast<Index>(rows.size()), grid.size());
    Index r = 0;
    for (const auto& [p, pts] : rows) {
        if (pts.size() != first.size())
            throw InvalidArgument("csv: path " + std::to_string(p) + " has a different node count");
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (pts[i].first != first[i].first)
                throw InvalidArgument("csv: paths must share the time grid");
            v(r, static_cast<Index>(i)) = pts[i].second;
        }
        ++r;
    }
    return PathEnsemble(std::move(grid), std::move(v), ProcessLabel::derived, SeedSpec{});
}

} // namespace enlarge
