#pragma once

#include "enlarge/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace enlarge {

/// Strictly increasing time nodes starting at 0, optionally refined
/// geometrically toward a point where an integrand blows up. The singular
/// point itself is never a node.
class TimeGrid {
public:
    TimeGrid() = default;
    explicit TimeGrid(VectorXd nodes, std::optional<double> singular_point = std::nullopt,
                      double refinement_ratio = 0.5);

    const VectorXd& nodes() const { return nodes_; }
    Index size() const { return nodes_.size(); }
    double operator[](Index i) const { return nodes_[i]; }
    double front() const { return nodes_[0]; }
    double back() const { return nodes_[nodes_.size() - 1]; }
    double step(Index i) const { return nodes_[i + 1] - nodes_[i]; }
    double min_step() const;

    std::optional<double> singular_point() const { return singular_; }
    double refinement_ratio() const { return ratio_; }

    // Index of the node equal to t (relative tolerance 1e-12); throws if absent.
    Index index_of(double t) const;
    std::optional<Index> find(double t) const;

    TimeGrid scaled(double factor) const;
    // Appends `t` (> back()) as a final node; drops the singular marker.
    TimeGrid extended_to(double t) const;
    // Inserts the given times in [0, back()] that are not yet nodes.
    TimeGrid with_nodes(std::span<const double> times) const;
    // Keeps the listed nodes only.
    TimeGrid subset(std::span<const Index> indices) const;

private:
    VectorXd nodes_;
    std::optional<double> singular_;
    double ratio_ = 0.5;
};

/// Uniform grid of `n_base` steps on [0, horizon]. With a singular point the
/// nodes approaching it shrink by `refinement_ratio` per step, `depth` times;
/// by default depth is the smallest value making the last step <= 1e-6 * horizon.
TimeGrid build_grid(double horizon, Index n_base, std::optional<double> singular_point = std::nullopt,
                    double refinement_ratio = 0.5, std::optional<int> depth = std::nullopt);

/// Grid in time-to-horizon coordinates tau = T - s: 0, then eps0 * 2^-k for
/// k = depth..0 (each octave split into `substeps` geometric steps), then a
/// uniform tail of `n_base` steps up to T.
TimeGrid build_horizon_grid(double horizon, double eps0, int depth, int substeps, Index n_base);

/// Base seed plus the rule path index -> independent substream. A path's
/// values depend only on (base_seed, first_path + row), never on scheduling.
struct SeedSpec {
    std::uint64_t base_seed = 0;
    std::uint64_t first_path = 0;

    std::mt19937_64 engine_for(std::uint64_t path_index) const;
    std::string describe() const;
};

enum class ProcessLabel { brownian, levy, derived };

std::string to_string(ProcessLabel label);

/// Path values indexed (path, node), one row per path.
template <typename Scalar>
class BasicPathEnsemble {
public:
    using Values = RowMatrix<Scalar>;

    BasicPathEnsemble() = default;
    BasicPathEnsemble(TimeGrid grid, Values values, ProcessLabel label, SeedSpec seed)
        : grid_(std::move(grid)), values_(std::move(values)), label_(label), seed_(seed)
    {
        if (values_.cols() != grid_.size())
            throw InvalidArgument("ensemble: one value per grid node required");
    }

    const TimeGrid& grid() const { return grid_; }
    const Values& values() const { return values_; }
    Index n_paths() const { return values_.rows(); }
    ProcessLabel label() const { return label_; }
    const SeedSpec& seed() const { return seed_; }

    auto path(Index p) const { return values_.row(p); }
    auto at(double t) const { return values_.col(grid_.index_of(t)); }

    /// Same paths observed only at the nodes equal to `times`.
    BasicPathEnsemble sample_at(std::span<const double> times) const
    {
        std::vector<Index> idx;
        idx.reserve(times.size());
        for (double t : times)
            idx.push_back(grid_.index_of(t));
        Values v(values_.rows(), static_cast<Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j)
            v.col(static_cast<Index>(j)) = values_.col(idx[j]);
        return BasicPathEnsemble(grid_.subset(idx), std::move(v), label_, seed_);
    }

    /// Restriction to the first `n_nodes` nodes.
    BasicPathEnsemble head(Index n_nodes) const
    {
        std::vector<Index> idx(static_cast<std::size_t>(n_nodes));
        for (Index i = 0; i < n_nodes; ++i)
            idx[static_cast<std::size_t>(i)] = i;
        return BasicPathEnsemble(grid_.subset(idx), values_.leftCols(n_nodes), label_, seed_);
    }

private:
    TimeGrid grid_;
    Values values_;
    ProcessLabel label_ = ProcessLabel::derived;
    SeedSpec seed_;
};

using PathEnsemble = BasicPathEnsemble<double>;

/// Concatenates ensembles that share a grid (e.g. batches of consecutive paths).
PathEnsemble stack_paths(std::span<const PathEnsemble> parts);

/// Brownian motion on `grid`: independent N(0, dt) increments, W = 0 at node 0.
PathEnsemble simulate_brownian(const TimeGrid& grid, Index n_paths, const SeedSpec& seed);

/// Jump-size law for compound Poisson paths.
struct JumpLaw {
    enum class Kind { constant, symmetric, normal };
    Kind kind = Kind::constant;
    double a = 1.0; // constant value, symmetric magnitude, or normal mean
    double b = 0.0; // normal standard deviation

    static JumpLaw constant(double v) { return {Kind::constant, v, 0.0}; }
    static JumpLaw symmetric(double magnitude) { return {Kind::symmetric, magnitude, 0.0}; }
    static JumpLaw normal(double mean, double sd) { return {Kind::normal, mean, sd}; }

    double mean() const { return kind == Kind::symmetric ? 0.0 : a; }
    double second_moment() const;
    std::string describe() const;
};

/// Parses `const:1`, `pm:1` or `normal:0,1`.
JumpLaw parse_jump_law(const std::string& spec);

/// Compound Poisson paths, exact at jump times, recorded at grid nodes.
PathEnsemble simulate_compound_poisson(const TimeGrid& grid, double rate, const JumpLaw& jumps,
                                       Index n_paths, const SeedSpec& seed);

/// CSV with header `path,t,value`, full precision.
void write_csv(std::ostream& os, const PathEnsemble& ensemble);
PathEnsemble read_csv(std::istream& is);

} // namespace enlarge
