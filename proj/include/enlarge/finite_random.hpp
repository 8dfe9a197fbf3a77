#pragma once

// Random finite instances; included from finite.hpp.

#include <random>

namespace enlarge::finite {

namespace detail {

template <typename Engine>
long uniform_int(Engine& rng, long lo, long hi)
{
    return std::uniform_int_distribution<long>(lo, hi)(rng);
}

// Split every block of `p` into at most `max_parts` random pieces.
template <typename Engine>
Partition random_refinement(Engine& rng, const Partition& p, long max_parts)
{
    std::vector<std::vector<Index>> blocks;
    for (const auto& b : p.blocks()) {
        const long parts = uniform_int(rng, 1, std::min<long>(max_parts, static_cast<long>(b.size())));
        std::vector<std::vector<Index>> pieces(static_cast<std::size_t>(parts));
        for (Index w : b)
            pieces[static_cast<std::size_t>(uniform_int(rng, 0, parts - 1))].push_back(w);
        for (auto& piece : pieces)
            if (!piece.empty())
                blocks.push_back(std::move(piece));
    }
    return Partition(p.n_outcomes(), std::move(blocks));
}

} // namespace detail

template <typename Engine>
FiniteInstance random_instance(Engine& rng, const RandomInstanceOptions& opts)
{
    if (opts.max_outcomes < 1 || opts.max_stages < 1 || opts.max_weight < 1)
        throw InvalidArgument("random_instance: invalid options");
    const Index n = detail::uniform_int(rng, 2, std::max<long>(2, opts.max_outcomes));
    const Index stages = detail::uniform_int(rng, std::min<long>(2, opts.max_stages), opts.max_stages);

    std::vector<long> w(static_cast<std::size_t>(n));
    long total = 0;
    std::bernoulli_distribution zero(opts.zero_weight_prob);
    while (total == 0) {
        total = 0;
        for (auto& x : w) {
            x = zero(rng) ? 0 : detail::uniform_int(rng, 1, opts.max_weight);
            total += x;
        }
    }
    Vec<Rational> prob(n);
    std::vector<std::string> labels;
    for (Index i = 0; i < n; ++i) {
        prob[i] = Rational(w[static_cast<std::size_t>(i)], total);
        labels.push_back("w" + std::to_string(i + 1));
    }

    std::vector<Partition> parts;
    parts.push_back(detail::random_refinement(rng, Partition::trivial(n), 2));
    for (Index k = 1; k < stages; ++k)
        parts.push_back(detail::random_refinement(rng, parts.back(), 3));

    FiniteInstance inst;
    inst.space = FiniteOutcomeSpace<Rational>(std::move(labels), std::move(prob));
    inst.F = FiniteFiltration(std::move(parts));
    inst.X.resize(static_cast<std::size_t>(n));
    for (auto& x : inst.X)
        x = detail::uniform_int(rng, 0, opts.max_label);
    inst.xi.resize(n);
    for (Index i = 0; i < n; ++i)
        inst.xi[i] = Rational(detail::uniform_int(rng, -opts.max_xi, opts.max_xi));
    return inst;
}

} // namespace enlarge::finite
