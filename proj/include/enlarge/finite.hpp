#pragma once

#include "enlarge/types.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace enlarge::finite {

using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// A stagewise process: one function on the outcomes per stage.
template <typename Scalar>
using Process = std::vector<Vec<Scalar>>;

struct AbsoluteContinuityError : std::domain_error {
    using std::domain_error::domain_error;
};

class Partition {
public:
    Partition() = default;
    Partition(Index n_outcomes, std::vector<std::vector<Index>> blocks);

    static Partition trivial(Index n_outcomes);
    static Partition discrete(Index n_outcomes);
    /// Level sets of `labels`, ordered by first occurrence.
    static Partition from_labels(const std::vector<long>& labels);

    Index n_outcomes() const { return static_cast<Index>(block_of_.size()); }
    Index size() const { return static_cast<Index>(blocks_.size()); }
    const std::vector<Index>& block(Index b) const { return blocks_[static_cast<std::size_t>(b)]; }
    const std::vector<std::vector<Index>>& blocks() const { return blocks_; }
    Index block_of(Index w) const { return block_of_[static_cast<std::size_t>(w)]; }

    /// Every block of *this lies inside a block of `coarser`.
    bool refines(const Partition& coarser) const;

    template <typename Scalar>
    bool measurable(const Vec<Scalar>& f) const
    {
        for (const auto& b : blocks_)
            for (Index w : b)
                if (f[w] != f[b.front()])
                    return false;
        return true;
    }

    friend bool operator==(const Partition& a, const Partition& b);
    friend bool operator!=(const Partition& a, const Partition& b) { return !(a == b); }

private:
    std::vector<std::vector<Index>> blocks_; // each sorted, ordered by smallest element
    std::vector<Index> block_of_;
};

/// Coarsest common refinement.
Partition join(const Partition& a, const Partition& b);

class FiniteFiltration {
public:
    FiniteFiltration() = default;
    explicit FiniteFiltration(std::vector<Partition> stages);

    static FiniteFiltration constant(const Partition& p, Index n_stages);

    Index n_stages() const { return static_cast<Index>(stages_.size()); }
    Index n_outcomes() const { return stages_.empty() ? 0 : stages_.front().n_outcomes(); }
    const Partition& stage(Index k) const { return stages_[static_cast<std::size_t>(k)]; }
    const std::vector<Partition>& stages() const { return stages_; }

    template <typename Scalar>
    bool adapted(const Process<Scalar>& x) const
    {
        if (static_cast<Index>(x.size()) != n_stages())
            return false;
        for (Index k = 0; k < n_stages(); ++k)
            if (x[static_cast<std::size_t>(k)].size() != n_outcomes() || !stage(k).measurable(x[static_cast<std::size_t>(k)]))
                return false;
        return true;
    }

    friend bool operator==(const FiniteFiltration& a, const FiniteFiltration& b) { return a.stages_ == b.stages_; }

private:
    std::vector<Partition> stages_;
};

FiniteFiltration join_filtrations(const FiniteFiltration& F, const FiniteFiltration& H);
FiniteFiltration initial_enlargement(const FiniteFiltration& F, const std::vector<long>& X);

template <typename Scalar = Rational>
struct FiniteOutcomeSpace {
    std::vector<std::string> outcomes;
    Vec<Scalar> prob;

    FiniteOutcomeSpace() = default;
    FiniteOutcomeSpace(std::vector<std::string> labels, Vec<Scalar> p) : outcomes(std::move(labels)), prob(std::move(p))
    {
        if (static_cast<Index>(outcomes.size()) != prob.size() || prob.size() == 0)
            throw InvalidArgument("outcome space: one probability per outcome required");
        for (Index i = 0; i < prob.size(); ++i)
            if (prob[i] < Scalar(0))
                throw InvalidArgument("outcome space: negative probability");
        if (prob.sum() != Scalar(1))
            throw InvalidArgument("outcome space: probabilities must sum to 1");
    }

    Index size() const { return prob.size(); }
};

template <typename Scalar>
Scalar measure_of(const Vec<Scalar>& mu, const std::vector<Index>& set)
{
    Scalar s(0);
    for (Index w : set)
        s += mu[w];
    return s;
}

template <typename Scalar>
struct ConditionalExpectation {
    Vec<Scalar> value;
    std::vector<Index> null_blocks; // blocks of zero measure; value set to 0 there
};

/// Block averages of f under mu.
template <typename Scalar>
ConditionalExpectation<Scalar> conditional_expectation(const Vec<Scalar>& f, const Partition& part,
                                                       const Vec<Scalar>& mu)
{
    if (f.size() != part.n_outcomes() || mu.size() != part.n_outcomes())
        throw InvalidArgument("conditional_expectation: size mismatch");
    ConditionalExpectation<Scalar> out;
    out.value = Vec<Scalar>::Zero(f.size());
    for (Index b = 0; b < part.size(); ++b) {
        const auto& blk = part.block(b);
        Scalar mass(0), acc(0);
        for (Index w : blk) {
            mass += mu[w];
            acc += mu[w] * f[w];
        }
        if (mass == Scalar(0)) {
            out.null_blocks.push_back(b);
            continue;
        }
        const Scalar avg = acc / mass;
        for (Index w : blk)
            out.value[w] = avg;
    }
    return out;
}

/// Exact martingale property E[x_{k+1} | stage k] = x_k on every block of
/// positive mass.
template <typename Scalar>
bool is_martingale(const Process<Scalar>& x, const FiniteFiltration& filt, const Vec<Scalar>& mu)
{
    if (!filt.adapted(x))
        return false;
    for (Index k = 0; k + 1 < filt.n_stages(); ++k) {
        const Partition& p = filt.stage(k);
        const auto ce = conditional_expectation<Scalar>(x[static_cast<std::size_t>(k + 1)], p, mu);
        for (Index b = 0; b < p.size(); ++b) {
            if (std::find(ce.null_blocks.begin(), ce.null_blocks.end(), b) != ce.null_blocks.end())
                continue;
            const Index w = p.block(b).front();
            if (ce.value[w] != x[static_cast<std::size_t>(k)][w])
                return false;
        }
    }
    return true;
}

template <typename Scalar>
struct DoobDecomposition {
    Process<Scalar> martingale;
    Process<Scalar> predictable;
};

/// X = M + A with A_0 = 0, A_k - A_{k-1} = E[X_k - X_{k-1} | stage k-1].
template <typename Scalar>
DoobDecomposition<Scalar> doob_decomposition(const Process<Scalar>& x, const FiniteFiltration& filt,
                                             const Vec<Scalar>& mu)
{
    if (!filt.adapted(x))
        throw InvalidArgument("doob_decomposition: process is not adapted");
    DoobDecomposition<Scalar> d;
    const Index n = filt.n_outcomes();
    d.predictable.push_back(Vec<Scalar>::Zero(n));
    for (Index k = 1; k < filt.n_stages(); ++k) {
        const Vec<Scalar> dx = x[static_cast<std::size_t>(k)] - x[static_cast<std::size_t>(k - 1)];
        const auto ce = conditional_expectation<Scalar>(dx, filt.stage(k - 1), mu);
        d.predictable.push_back(d.predictable.back() + ce.value);
    }
    for (Index k = 0; k < filt.n_stages(); ++k)
        d.martingale.push_back(x[static_cast<std::size_t>(k)] - d.predictable[static_cast<std::size_t>(k)]);
    return d;
}

/// Omega x Omega with the diagonal measure pbar and the decoupling measure
/// qbar = P (x) R. Functions on the product are n x n matrices indexed
/// (omega, omega'); stage k of the product filtration has blocks B x C with
/// B in F_k and C in H_k.
template <typename Scalar = Rational>
struct ProductSetup {
    FiniteOutcomeSpace<Scalar> base;
    FiniteFiltration F;
    FiniteFiltration H;
    Vec<Scalar> R;
    Mat<Scalar> pbar;
    Mat<Scalar> qbar;

    Index n_stages() const { return F.n_stages(); }
    Index n_outcomes() const { return base.size(); }

    Scalar block_measure(const Mat<Scalar>& mu, Index k, Index b, Index c) const
    {
        Scalar s(0);
        for (Index i : F.stage(k).block(b))
            for (Index j : H.stage(k).block(c))
                s += mu(i, j);
        return s;
    }
};

template <typename Scalar>
ProductSetup<Scalar> make_product_setup(FiniteOutcomeSpace<Scalar> base, FiniteFiltration F, FiniteFiltration H,
                                        std::optional<Vec<Scalar>> R = std::nullopt)
{
    if (F.n_stages() != H.n_stages() || F.n_outcomes() != base.size() || H.n_outcomes() != base.size())
        throw InvalidArgument("product setup: filtrations must share stages and outcome space");
    ProductSetup<Scalar> s;
    s.R = R ? *R : base.prob;
    if (s.R.size() != base.size() || s.R.sum() != Scalar(1))
        throw InvalidArgument("product setup: R must be a probability on the outcomes");
    for (Index i = 0; i < s.R.size(); ++i)
        if (s.R[i] < Scalar(0))
            throw InvalidArgument("product setup: R must be nonnegative");
    const Index n = base.size();
    s.pbar = Mat<Scalar>::Zero(n, n);
    s.qbar.resize(n, n);
    for (Index i = 0; i < n; ++i) {
        s.pbar(i, i) = base.prob[i];
        for (Index j = 0; j < n; ++j)
            s.qbar(i, j) = base.prob[i] * s.R[j];
    }
    s.base = std::move(base);
    s.F = std::move(F);
    s.H = std::move(H);
    return s;
}

struct ContinuityWitness {
    Index stage = 0;
    Index f_block = 0;
    Index h_block = 0;
};

template <typename Scalar>
struct AbsoluteContinuityReport {
    bool holds = true;
    std::optional<ContinuityWitness> witness;
    Scalar witness_pbar{0};
};

/// pbar << qbar on every product stage.
template <typename Scalar>
AbsoluteContinuityReport<Scalar> check_absolute_continuity(const ProductSetup<Scalar>& s)
{
    AbsoluteContinuityReport<Scalar> r;
    for (Index k = 0; k < s.n_stages(); ++k)
        for (Index b = 0; b < s.F.stage(k).size(); ++b)
            for (Index c = 0; c < s.H.stage(k).size(); ++c) {
                if (s.block_measure(s.qbar, k, b, c) != Scalar(0))
                    continue;
                const Scalar p = s.block_measure(s.pbar, k, b, c);
                if (p != Scalar(0)) {
                    r.holds = false;
                    r.witness = ContinuityWitness{k, b, c};
                    r.witness_pbar = p;
                    return r;
                }
            }
    return r;
}

/// Z_k = pbar(B x C) / qbar(B x C) on stage-k product blocks; 0 on qbar-null blocks.
template <typename Scalar>
std::vector<Mat<Scalar>> likelihood_process(const ProductSetup<Scalar>& s)
{
    const auto ac = check_absolute_continuity(s);
    if (!ac.holds)
        throw AbsoluteContinuityError("likelihood_process: qbar-null block with positive pbar mass at stage " +
                                      std::to_string(ac.witness->stage));
    const Index n = s.n_outcomes();
    std::vector<Mat<Scalar>> Z;
    for (Index k = 0; k < s.n_stages(); ++k) {
        Mat<Scalar> z = Mat<Scalar>::Zero(n, n);
        for (Index b = 0; b < s.F.stage(k).size(); ++b)
            for (Index c = 0; c < s.H.stage(k).size(); ++c) {
                const Scalar q = s.block_measure(s.qbar, k, b, c);
                if (q == Scalar(0))
                    continue;
                const Scalar v = s.block_measure(s.pbar, k, b, c) / q;
                for (Index i : s.F.stage(k).block(b))
                    for (Index j : s.H.stage(k).block(c))
                        z(i, j) = v;
            }
        Z.push_back(std::move(z));
    }
    return Z;
}

/// Conditional expectation under mu of a product-space function given stage-k
/// product blocks; 0 on null blocks.
template <typename Scalar>
Mat<Scalar> product_conditional_expectation(const ProductSetup<Scalar>& s, const Mat<Scalar>& f,
                                            const Mat<Scalar>& mu, Index k)
{
    Mat<Scalar> out = Mat<Scalar>::Zero(f.rows(), f.cols());
    for (Index b = 0; b < s.F.stage(k).size(); ++b)
        for (Index c = 0; c < s.H.stage(k).size(); ++c) {
            Scalar mass(0), acc(0);
            for (Index i : s.F.stage(k).block(b))
                for (Index j : s.H.stage(k).block(c)) {
                    mass += mu(i, j);
                    acc += mu(i, j) * f(i, j);
                }
            if (mass == Scalar(0))
                continue;
            const Scalar v = acc / mass;
            for (Index i : s.F.stage(k).block(b))
                for (Index j : s.H.stage(k).block(c))
                    out(i, j) = v;
        }
    return out;
}

/// E_qbar[Z_{k+1} | stage k] == Z_k on every qbar-positive block, exactly.
template <typename Scalar>
bool is_qbar_martingale(const ProductSetup<Scalar>& s, const std::vector<Mat<Scalar>>& Z)
{
    for (Index k = 0; k + 1 < s.n_stages(); ++k) {
        const Mat<Scalar> ce = product_conditional_expectation(s, Z[static_cast<std::size_t>(k + 1)], s.qbar, k);
        for (Index b = 0; b < s.F.stage(k).size(); ++b)
            for (Index c = 0; c < s.H.stage(k).size(); ++c) {
                if (s.block_measure(s.qbar, k, b, c) == Scalar(0))
                    continue;
                const Index i = s.F.stage(k).block(b).front();
                const Index j = s.H.stage(k).block(c).front();
                if (ce(i, j) != Z[static_cast<std::size_t>(k)](i, j))
                    return false;
            }
    }
    return true;
}

template <typename Scalar>
struct GirsanovResult {
    Process<Scalar> compensator;  // C on the diagonal
    Process<Scalar> compensated;  // M - C
    std::vector<Mat<Scalar>> Z;
    FiniteFiltration G;           // F joined with H
    bool g_martingale = false;    // verified by enumeration under P
};

/// Discrete Girsanov compensation of an F-martingale M for the passage to
/// G = F v H:
///   C_k = sum_{j<=k} E_qbar[dZ_j dM_j | stage j-1] / Z_{j-1},
/// computed on the product space and read off on the diagonal.
template <typename Scalar>
GirsanovResult<Scalar> discrete_girsanov(const Process<Scalar>& M, const ProductSetup<Scalar>& s)
{
    const Vec<Scalar>& P = s.base.prob;
    if (!is_martingale(M, s.F, P))
        throw InvalidArgument("discrete_girsanov: M is not an exact F-martingale under P");
    GirsanovResult<Scalar> out;
    out.Z = likelihood_process(s);
    out.G = join_filtrations(s.F, s.H);
    const Index n = s.n_outcomes();

    // Lift M to the product: Mbar(omega, omega') = M(omega).
    auto lift = [&](const Vec<Scalar>& m) -> Mat<Scalar> { return m.replicate(1, n); };

    Mat<Scalar> c_bar = Mat<Scalar>::Zero(n, n);
    out.compensator.push_back(Vec<Scalar>::Zero(n));
    for (Index j = 1; j < s.n_stages(); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const Mat<Scalar> dZ = out.Z[ju] - out.Z[ju - 1];
        const Mat<Scalar> dM = lift(M[ju] - M[ju - 1]);
        const Mat<Scalar> prod = dZ.cwiseProduct(dM);
        const Mat<Scalar> ce = product_conditional_expectation(s, prod, s.qbar, j - 1);
        const Mat<Scalar>& zp = out.Z[ju - 1];
        for (Index a = 0; a < n; ++a)
            for (Index b = 0; b < n; ++b) {
                if (zp(a, b) == Scalar(0)) {
                    // pbar-null there under absolute continuity.
                    if (a == b && P[a] != Scalar(0))
                        throw std::logic_error("discrete_girsanov: Z vanishes on a pbar-positive block");
                    continue;
                }
                c_bar(a, b) += ce(a, b) / zp(a, b);
            }
        out.compensator.push_back(c_bar.diagonal());
    }
    for (Index k = 0; k < s.n_stages(); ++k)
        out.compensated.push_back(M[static_cast<std::size_t>(k)] - out.compensator[static_cast<std::size_t>(k)]);
    out.g_martingale = is_martingale(out.compensated, out.G, P);
    return out;
}

template <typename Scalar>
struct JacodStage {
    Mat<Scalar> conditional_law; // Q_k(block, value)
    Mat<Scalar> density;         // r_k(block, value) = Q_k / law; 0 where the block is null
    std::vector<bool> null_block;
};

template <typename Scalar>
struct JacodReport {
    std::vector<long> values; // distinct X values, ascending
    Vec<Scalar> law;
    std::vector<JacodStage<Scalar>> stages;
    bool absolutely_continuous = true;     // Q_k(b, x) > 0 implies law(x) > 0
    bool countable_reduction_holds = true; // enlargement by X = sum n 1_{A_n} matches
};

/// Conditional laws of a finite X along F and their densities w.r.t. the law of X.
template <typename Scalar>
JacodReport<Scalar> jacod_discrete_checks(const FiniteOutcomeSpace<Scalar>& space, const FiniteFiltration& F,
                                          const std::vector<long>& X)
{
    if (static_cast<Index>(X.size()) != space.size() || F.n_outcomes() != space.size())
        throw InvalidArgument("jacod_discrete_checks: size mismatch");
    JacodReport<Scalar> r;
    r.values = X;
    std::sort(r.values.begin(), r.values.end());
    r.values.erase(std::unique(r.values.begin(), r.values.end()), r.values.end());
    const Index nv = static_cast<Index>(r.values.size());
    auto value_index = [&](long x) {
        return static_cast<Index>(std::lower_bound(r.values.begin(), r.values.end(), x) - r.values.begin());
    };
    r.law = Vec<Scalar>::Zero(nv);
    for (Index w = 0; w < space.size(); ++w)
        r.law[value_index(X[static_cast<std::size_t>(w)])] += space.prob[w];

    for (Index k = 0; k < F.n_stages(); ++k) {
        const Partition& p = F.stage(k);
        JacodStage<Scalar> st;
        st.conditional_law = Mat<Scalar>::Zero(p.size(), nv);
        st.density = Mat<Scalar>::Zero(p.size(), nv);
        for (Index b = 0; b < p.size(); ++b) {
            const Scalar mass = measure_of(space.prob, p.block(b));
            st.null_block.push_back(mass == Scalar(0));
            if (mass == Scalar(0))
                continue;
            for (Index w : p.block(b))
                st.conditional_law(b, value_index(X[static_cast<std::size_t>(w)])) += space.prob[w] / mass;
            for (Index v = 0; v < nv; ++v) {
                if (r.law[v] == Scalar(0)) {
                    if (st.conditional_law(b, v) != Scalar(0))
                        r.absolutely_continuous = false;
                    continue;
                }
                st.density(b, v) = st.conditional_law(b, v) / r.law[v];
            }
        }
        r.stages.push_back(std::move(st));
    }

    // The level sets of X form a countable partition {A_n}; enlarging by the
    // partition index must give the same filtration.
    const Partition level = Partition::from_labels(X);
    std::vector<long> index_label(X.size());
    for (Index b = 0; b < level.size(); ++b)
        for (Index w : level.block(b))
            index_label[static_cast<std::size_t>(w)] = static_cast<long>(b);
    r.countable_reduction_holds = initial_enlargement(F, index_label) == initial_enlargement(F, X);
    return r;
}

// ---- instances, random generation, reports (Rational only) ----

struct FiniteInstance {
    FiniteOutcomeSpace<Rational> space;
    FiniteFiltration F;
    std::vector<long> X;
    std::optional<FiniteFiltration> H; // defaults to sigma(X) at every stage
    std::optional<Vec<Rational>> R;    // defaults to P
    Vec<Rational> xi;                  // M_k = E[xi | F_k]

    FiniteFiltration information() const;
    ProductSetup<Rational> setup() const;
    Process<Rational> martingale() const;
};

Rational parse_rational(const std::string& s);
std::string to_string(const Rational& q);

/// Parses the `key = value` instance format; unknown keys are rejected.
FiniteInstance parse_instance(std::istream& in);
FiniteInstance load_instance(const std::string& path);

struct RandomInstanceOptions {
    Index max_outcomes = 8;
    Index max_stages = 3;
    long max_weight = 9;     // probabilities are integer weights / total
    long max_label = 3;      // X takes values in [0, max_label]
    long max_xi = 5;
    double zero_weight_prob = 0.1;
};

template <typename Engine>
FiniteInstance random_instance(Engine& rng, const RandomInstanceOptions& opts = {});

struct FiniteLabReport {
    bool absolutely_continuous = false;
    bool z_qbar_martingale = false;
    bool girsanov_g_martingale = false;
    bool m_f_martingale = false;
    bool jacod_absolutely_continuous = false;
    bool jacod_countable_reduction = false;
    bool pass() const
    {
        return absolutely_continuous && z_qbar_martingale && girsanov_g_martingale && m_f_martingale &&
               jacod_absolutely_continuous && jacod_countable_reduction;
    }
};

/// Runs every exact check on one instance.
FiniteLabReport run_checks(const FiniteInstance& inst);

} // namespace enlarge::finite

#include "enlarge/finite_random.hpp"
