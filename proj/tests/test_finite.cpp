#include "enlarge/finite.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace enlarge;
using namespace enlarge::finite;

namespace {

using Q = Rational;
using V = Vec<Q>;

V vec(std::initializer_list<Q> xs)
{
    V v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (const Q& x : xs)
        v[i++] = x;
    return v;
}

Partition parts(std::vector<std::vector<Index>> blocks) { return Partition(4, std::move(blocks)); }

const V kUniform = vec({Q(1, 4), Q(1, 4), Q(1, 4), Q(1, 4)});

FiniteOutcomeSpace<Q> uniform4() { return {{"uu", "ud", "du", "dd"}, kUniform}; }

// Stage 0 trivial, stage 1 reveals the first step, stage 2 everything.
FiniteFiltration walk_filtration()
{
    return FiniteFiltration({Partition::trivial(4), parts({{0, 1}, {2, 3}}), Partition::discrete(4)});
}

// Symmetric +-1 walk over two steps.
Process<Q> walk() { return {vec({0, 0, 0, 0}), vec({1, 1, -1, -1}), vec({2, 0, 0, -2})}; }

FiniteFiltration sigma_x(const std::vector<long>& X, Index stages)
{
    return FiniteFiltration::constant(Partition::from_labels(X), stages);
}

bool all_equal(const Mat<Q>& m, const Q& v)
{
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            if (m(i, j) != v)
                return false;
    return true;
}

bool all_zero(const Process<Q>& p)
{
    for (const auto& v : p)
        for (Index i = 0; i < v.size(); ++i)
            if (v[i] != 0)
                return false;
    return true;
}

} // namespace

TEST_CASE("partition construction and errors")
{
    const auto p = parts({{2, 3}, {1, 0}});
    CHECK(p.size() == 2);
    CHECK(p.block(0) == std::vector<Index>{0, 1});
    CHECK(p.block_of(3) == 1);
    CHECK(Partition::discrete(4).refines(p));
    CHECK(p.refines(Partition::trivial(4)));
    CHECK_FALSE(p.refines(Partition::discrete(4)));
    CHECK(Partition::from_labels({7, 3, 7, 3}) == parts({{0, 2}, {1, 3}}));

    CHECK_THROWS_AS(parts({{0, 1}, {2}}), InvalidArgument);
    CHECK_THROWS_AS(parts({{0, 1}, {1, 2, 3}}), InvalidArgument);
    CHECK_THROWS_AS(parts({{0, 1, 2, 3}, {}}), InvalidArgument);
    CHECK_THROWS_AS(parts({{0, 1, 2, 4}}), InvalidArgument);
    CHECK_THROWS_AS(FiniteFiltration({Partition::discrete(4), Partition::trivial(4)}), InvalidArgument);
}

TEST_CASE("outcome space validation")
{
    CHECK_NOTHROW(uniform4());
    CHECK_THROWS_AS(FiniteOutcomeSpace<Q>({"a", "b"}, vec({Q(1, 2), Q(1, 3)})), InvalidArgument);
    CHECK_THROWS_AS(FiniteOutcomeSpace<Q>({"a", "b"}, vec({Q(3, 2), Q(-1, 2)})), InvalidArgument);
    CHECK_THROWS_AS(FiniteOutcomeSpace<Q>({"a"}, vec({Q(1, 2), Q(1, 2)})), InvalidArgument);
}

TEST_CASE("join of filtrations")
{
    const auto F = FiniteFiltration({parts({{0, 1}, {2, 3}}), Partition::discrete(4)});
    const auto trivial = FiniteFiltration::constant(Partition::trivial(4), 2);
    CHECK(join_filtrations(F, trivial) == F);
    CHECK(join_filtrations(F, F) == F);

    const auto H = FiniteFiltration::constant(parts({{0, 2}, {1, 3}}), 2);
    const auto G = join_filtrations(F, H);
    CHECK(G.stage(0) == Partition::discrete(4));
    CHECK(G.stage(1) == Partition::discrete(4));

    CHECK(join(parts({{0, 1, 2}, {3}}), parts({{0, 3}, {1, 2}})) == parts({{0}, {1, 2}, {3}}));
    CHECK_THROWS_AS(join_filtrations(F, FiniteFiltration::constant(Partition::trivial(4), 3)), InvalidArgument);
    CHECK_THROWS_AS(join_filtrations(F, FiniteFiltration::constant(Partition::trivial(3), 2)), InvalidArgument);
}

TEST_CASE("initial enlargement")
{
    const auto F = walk_filtration();
    CHECK(initial_enlargement(F, {5, 5, 5, 5}) == F);
    const auto all = initial_enlargement(F, {1, 2, 3, 4});
    for (Index k = 0; k < all.n_stages(); ++k)
        CHECK(all.stage(k) == Partition::discrete(4));

    const auto G = initial_enlargement(F, {1, 1, 0, 0});
    CHECK(G.stage(0) == parts({{0, 1}, {2, 3}}));
    CHECK(G.stage(1) == parts({{0, 1}, {2, 3}}));
    CHECK(G.stage(2) == Partition::discrete(4));

    const auto T = initial_enlargement(walk_filtration(), {1, 0, 0, -1});
    CHECK(T.stage(0) == parts({{0}, {1, 2}, {3}}));
    CHECK(T.stage(1) == Partition::discrete(4));
}

TEST_CASE("conditional expectation")
{
    const V f = vec({1, 2, 3, 4});
    const auto ce = conditional_expectation<Q>(f, parts({{0, 1}, {2, 3}}), kUniform);
    CHECK(ce.value == vec({Q(3, 2), Q(3, 2), Q(7, 2), Q(7, 2)}));
    CHECK(ce.null_blocks.empty());

    CHECK(conditional_expectation<Q>(f, Partition::discrete(4), kUniform).value == f);
    const V c = vec({Q(2, 3), Q(2, 3), Q(2, 3), Q(2, 3)});
    CHECK(conditional_expectation<Q>(c, parts({{0, 3}, {1, 2}}), kUniform).value == c);

    const V skew = vec({Q(1, 2), Q(0), Q(0), Q(1, 2)});
    const auto nul = conditional_expectation<Q>(f, parts({{0}, {1, 2}, {3}}), skew);
    CHECK(nul.null_blocks == std::vector<Index>{1});
    CHECK(nul.value == vec({1, 0, 0, 4}));

    const V weighted = vec({Q(1, 8), Q(3, 8), Q(1, 4), Q(1, 4)});
    CHECK(conditional_expectation<Q>(f, parts({{0, 1}, {2, 3}}), weighted).value[0] == Q(7, 4));
    CHECK_THROWS_AS(conditional_expectation<Q>(f.head(3), Partition::trivial(4), kUniform), InvalidArgument);
}

TEST_CASE("tower property on random nested partitions")
{
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        const Index n = 6;
        std::vector<long> fine_labels(n), coarse_labels(n);
        std::uniform_int_distribution<long> lab(0, 3), val(-5, 5), wt(0, 4);
        for (Index i = 0; i < n; ++i) {
            fine_labels[static_cast<std::size_t>(i)] = lab(rng);
            coarse_labels[static_cast<std::size_t>(i)] = fine_labels[static_cast<std::size_t>(i)] / 2;
        }
        const auto fine = Partition::from_labels(fine_labels);
        const auto coarse = Partition::from_labels(coarse_labels);
        REQUIRE(fine.refines(coarse));
        V mu(n), f(n);
        long total = 0;
        std::vector<long> w(n);
        for (auto& x : w)
            total += (x = wt(rng));
        if (total == 0)
            continue;
        for (Index i = 0; i < n; ++i) {
            mu[i] = Q(w[static_cast<std::size_t>(i)], total);
            f[i] = Q(val(rng), 1 + (val(rng) + 5));
        }
        const auto inner = conditional_expectation<Q>(f, fine, mu).value;
        const auto direct = conditional_expectation<Q>(f, coarse, mu).value;
        const auto composed = conditional_expectation<Q>(inner, coarse, mu).value;
        CHECK(direct == composed);
    }
}

TEST_CASE("Doob decomposition")
{
    SUBCASE("martingale input has no predictable part")
    {
        const auto d = doob_decomposition<Q>(walk(), walk_filtration(), kUniform);
        CHECK(all_zero(d.predictable));
        CHECK(d.martingale == walk());
    }
    SUBCASE("deterministic increasing process")
    {
        const Process<Q> x{vec({1, 1, 1, 1}), vec({3, 3, 3, 3}), vec({7, 7, 7, 7})};
        const auto d = doob_decomposition<Q>(x, walk_filtration(), kUniform);
        for (const auto& m : d.martingale)
            CHECK(m == vec({1, 1, 1, 1}));
    }
    SUBCASE("walk with up-probability 2/3 drifts by 1/3 per step")
    {
        const V p = vec({Q(4, 9), Q(2, 9), Q(2, 9), Q(1, 9)});
        const auto d = doob_decomposition<Q>(walk(), walk_filtration(), p);
        CHECK(d.predictable[1] == vec({Q(1, 3), Q(1, 3), Q(1, 3), Q(1, 3)}));
        CHECK(d.predictable[2] == vec({Q(2, 3), Q(2, 3), Q(2, 3), Q(2, 3)}));
        CHECK(is_martingale(d.martingale, walk_filtration(), p));
        CHECK_FALSE(is_martingale(walk(), walk_filtration(), p));
    }
    SUBCASE("non-adapted input")
    {
        const Process<Q> x{vec({0, 1, 0, 0}), vec({0, 0, 0, 0}), vec({0, 0, 0, 0})};
        CHECK_THROWS_AS(doob_decomposition<Q>(x, walk_filtration(), kUniform), InvalidArgument);
    }
}

TEST_CASE("product setup measures")
{
    const auto R = vec({Q(1, 2), Q(1, 6), Q(1, 6), Q(1, 6)});
    const auto s = make_product_setup<Q>(uniform4(), walk_filtration(), walk_filtration(), R);
    // pbar(A x B) = P(A n B), qbar(A x B) = P(A) R(B).
    const std::vector<std::vector<Index>> sets{{0}, {0, 1}, {1, 2, 3}, {0, 1, 2, 3}};
    for (const auto& A : sets)
        for (const auto& B : sets) {
            Q pb(0), qb(0), pa(0), rb(0), inter(0);
            for (Index i : A)
                for (Index j : B) {
                    pb += s.pbar(i, j);
                    qb += s.qbar(i, j);
                }
            for (Index i : A) {
                pa += kUniform[i];
                if (std::find(B.begin(), B.end(), i) != B.end())
                    inter += kUniform[i];
            }
            for (Index j : B)
                rb += R[j];
            CHECK(pb == inter);
            CHECK(qb == pa * rb);
        }
    CHECK_THROWS_AS(make_product_setup<Q>(uniform4(), walk_filtration(), walk_filtration(), vec({1, 0, 0, 1})),
                    InvalidArgument);
    CHECK_THROWS_AS(make_product_setup<Q>(uniform4(), walk_filtration(),
                                          FiniteFiltration::constant(Partition::trivial(4), 2)),
                    InvalidArgument);
}

TEST_CASE("likelihood process")
{
    SUBCASE("no added information gives Z = 1")
    {
        const auto s = make_product_setup<Q>(uniform4(), walk_filtration(),
                                             FiniteFiltration::constant(Partition::trivial(4), 3));
        for (const auto& z : likelihood_process(s))
            CHECK(all_equal(z, Q(1)));
    }
    SUBCASE("information independent of F gives Z = 1")
    {
        // Outcomes (a, b) of two fair coins; F reveals a at stage 1, X = b.
        const std::vector<long> X{0, 1, 0, 1};
        const auto s = make_product_setup<Q>(uniform4(), FiniteFiltration({Partition::trivial(4), parts({{0, 1}, {2, 3}})}),
                                             sigma_x(X, 2));
        for (const auto& z : likelihood_process(s))
            CHECK(all_equal(z, Q(1)));
    }
    SUBCASE("indicator enlargement matches direct block ratios")
    {
        const std::vector<long> X{1, 1, 0, 0};
        const auto F = FiniteFiltration({parts({{0, 1}, {2, 3}}), Partition::discrete(4)});
        const auto H = sigma_x(X, 2);
        const auto s = make_product_setup<Q>(uniform4(), F, H);
        const auto Z = likelihood_process(s);
        for (Index k = 0; k < 2; ++k)
            for (Index i = 0; i < 4; ++i)
                for (Index j = 0; j < 4; ++j) {
                    const auto& B = F.stage(k).block(F.stage(k).block_of(i));
                    const auto& C = H.stage(k).block(H.stage(k).block_of(j));
                    Q pb(0), pB(0), pC(0);
                    for (Index a : B) {
                        pB += kUniform[a];
                        if (std::find(C.begin(), C.end(), a) != C.end())
                            pb += kUniform[a];
                    }
                    for (Index c : C)
                        pC += kUniform[c];
                    CHECK(Z[static_cast<std::size_t>(k)](i, j) == pb / (pB * pC));
                }
        CHECK(Z[0](0, 0) == Q(2));
        CHECK(Z[0](0, 2) == Q(0));
        CHECK(Z[1](0, 1) == Q(2));
        CHECK(is_qbar_martingale(s, Z));
    }
}

TEST_CASE("absolute continuity")
{
    const std::vector<long> X{1, 0, 0, -1};
    SUBCASE("R = P with finite X holds")
    {
        CHECK(check_absolute_continuity(make_product_setup<Q>(uniform4(), walk_filtration(), sigma_x(X, 3))).holds);
    }
    SUBCASE("trivial H holds")
    {
        const auto s = make_product_setup<Q>(uniform4(), walk_filtration(),
                                             FiniteFiltration::constant(Partition::trivial(4), 3));
        CHECK(check_absolute_continuity(s).holds);
    }
    SUBCASE("R null on an attained value fails with a witness")
    {
        const auto s =
            make_product_setup<Q>(uniform4(), walk_filtration(), sigma_x(X, 3), vec({Q(1, 2), Q(1, 4), Q(1, 4), Q(0)}));
        const auto r = check_absolute_continuity(s);
        CHECK_FALSE(r.holds);
        REQUIRE(r.witness);
        CHECK(r.witness->stage == 0);
        CHECK(s.H.stage(0).block(r.witness->h_block) == std::vector<Index>{3});
        CHECK(r.witness_pbar == Q(1, 4));
        CHECK(s.block_measure(s.qbar, r.witness->stage, r.witness->f_block, r.witness->h_block) == Q(0));
        CHECK_THROWS_AS(likelihood_process(s), AbsoluteContinuityError);
        CHECK_THROWS_AS(discrete_girsanov(walk(), s), AbsoluteContinuityError);
    }
}

TEST_CASE("discrete Girsanov compensation")
{
    SUBCASE("trivial H leaves M unchanged")
    {
        const auto s = make_product_setup<Q>(uniform4(), walk_filtration(),
                                             FiniteFiltration::constant(Partition::trivial(4), 3));
        const auto g = discrete_girsanov(walk(), s);
        CHECK(all_zero(g.compensator));
        CHECK(g.compensated == walk());
        CHECK(g.g_martingale);
    }
    SUBCASE("X independent of F gives no compensator")
    {
        // Outcomes (a, b); the walk moves with a, X = b.
        const auto F = FiniteFiltration({Partition::trivial(4), parts({{0, 1}, {2, 3}})});
        const Process<Q> M{vec({0, 0, 0, 0}), vec({1, 1, -1, -1})};
        const auto g = discrete_girsanov(M, make_product_setup<Q>(uniform4(), F, sigma_x({0, 1, 0, 1}, 2)));
        CHECK(all_zero(g.compensator));
        CHECK(g.g_martingale);
    }
    SUBCASE("terminal sign of the walk")
    {
        const std::vector<long> X{1, 0, 0, -1};
        const auto s = make_product_setup<Q>(uniform4(), walk_filtration(), sigma_x(X, 3));
        const auto g = discrete_girsanov(walk(), s);
        // Knowing the sign, the first step is +1 on uu, -1 on dd, fair otherwise.
        CHECK(g.compensator[1] == vec({1, 0, 0, -1}));
        // At stage 1 the enlarged filtration already knows the second step.
        CHECK(g.compensator[2] == vec({2, -1, 1, -2}));
        CHECK(g.compensated[2] == vec({0, 1, -1, 0}));
        CHECK(g.compensated[1] == vec({0, 1, -1, 0}));
        CHECK(g.g_martingale);
        CHECK(is_martingale(g.compensated, g.G, kUniform));
        CHECK_FALSE(is_martingale(walk(), g.G, kUniform));
    }
    SUBCASE("M must be an F-martingale")
    {
        const Process<Q> M{vec({0, 0, 0, 0}), vec({1, 1, 0, 0}), vec({1, 1, 0, 0})};
        const auto s = make_product_setup<Q>(uniform4(), walk_filtration(), sigma_x({1, 0, 0, -1}, 3));
        CHECK_THROWS_AS(discrete_girsanov(M, s), InvalidArgument);
    }
}

TEST_CASE("Jacod checks")
{
    SUBCASE("independent X has unit densities")
    {
        const auto F = FiniteFiltration({Partition::trivial(4), parts({{0, 1}, {2, 3}})});
        const auto r = jacod_discrete_checks<Q>(uniform4(), F, {0, 1, 0, 1});
        for (const auto& st : r.stages)
            CHECK(all_equal(st.density, Q(1)));
        CHECK(r.absolutely_continuous);
        CHECK(r.countable_reduction_holds);
    }
    SUBCASE("X known at stage 0")
    {
        const std::vector<long> X{2, 2, 5, 5};
        const V p = vec({Q(1, 8), Q(1, 8), Q(1, 2), Q(1, 4)});
        const FiniteOutcomeSpace<Q> space({"a", "b", "c", "d"}, p);
        const auto F = FiniteFiltration({parts({{0, 1}, {2, 3}}), Partition::discrete(4)});
        const auto r = jacod_discrete_checks<Q>(space, F, X);
        CHECK(r.values == std::vector<long>{2, 5});
        CHECK(r.law == vec({Q(1, 4), Q(3, 4)}));
        const auto& d = r.stages[0].density;
        CHECK(d(0, 0) == Q(4));
        CHECK(d(0, 1) == Q(0));
        CHECK(d(1, 0) == Q(0));
        CHECK(d(1, 1) == Q(4, 3));
    }
    SUBCASE("running example table")
    {
        const auto r = jacod_discrete_checks<Q>(uniform4(), walk_filtration(), {1, 0, 0, -1});
        CHECK(r.values == std::vector<long>{-1, 0, 1});
        CHECK(r.law == vec({Q(1, 4), Q(1, 2), Q(1, 4)}));
        REQUIRE(r.stages.size() == 3);
        CHECK(all_equal(r.stages[0].density, Q(1)));
        const auto& d1 = r.stages[1].density;
        CHECK(d1.row(0) == vec({0, 1, 2}).transpose());
        CHECK(d1.row(1) == vec({2, 1, 0}).transpose());
        const auto& q1 = r.stages[1].conditional_law;
        CHECK(q1.row(0) == vec({0, Q(1, 2), Q(1, 2)}).transpose());
        const auto& d2 = r.stages[2].density;
        CHECK(d2.row(0) == vec({0, 0, 4}).transpose());
        CHECK(d2.row(1) == vec({0, 2, 0}).transpose());
        CHECK(d2.row(3) == vec({4, 0, 0}).transpose());
        CHECK(r.absolutely_continuous);
        CHECK(r.countable_reduction_holds);
    }
    SUBCASE("null blocks are flagged")
    {
        const FiniteOutcomeSpace<Q> space({"a", "b", "c", "d"}, vec({Q(1, 2), Q(1, 2), Q(0), Q(0)}));
        const auto F = FiniteFiltration({parts({{0, 1}, {2, 3}})});
        const auto r = jacod_discrete_checks<Q>(space, F, {0, 1, 0, 1});
        CHECK(r.stages[0].null_block == std::vector<bool>{false, true});
    }
    CHECK_THROWS_AS(jacod_discrete_checks<Q>(uniform4(), walk_filtration(), {1, 0}), InvalidArgument);
}

TEST_CASE("rationals")
{
    CHECK(parse_rational("3/4") == Q(3, 4));
    CHECK(parse_rational("-2/6") == Q(-1, 3));
    CHECK(parse_rational("5") == Q(5));
    CHECK(to_string(Q(6, 8)) == "3/4");
    CHECK(to_string(Q(2)) == "2/1");
    CHECK_THROWS_AS(parse_rational("1/0"), InvalidArgument);
    CHECK_THROWS_AS(parse_rational("x"), InvalidArgument);
    CHECK_THROWS_AS(parse_rational("0.5"), InvalidArgument);
}

TEST_CASE("instance parsing")
{
    const std::string good = R"(# comment
outcomes = uu ud du dd
prob = 1/4 1/4 1/4 1/4
stage 0 = {uu ud du dd}
stage 1 = {uu ud} {du dd}
stage 2 = {uu} {ud} {du} {dd}
X = 1 0 0 -1
xi = 2 0 0 -2
)";
    std::istringstream in(good);
    const auto inst = parse_instance(in);
    CHECK(inst.space.size() == 4);
    CHECK(inst.F == walk_filtration());
    CHECK(inst.X == std::vector<long>{1, 0, 0, -1});
    CHECK(inst.martingale() == walk());
    CHECK(inst.information() == sigma_x(inst.X, 3));
    CHECK(run_checks(inst).pass());

    const auto fails = [&](const std::string& from, const std::string& to) {
        std::string text = good;
        const auto pos = text.find(from);
        REQUIRE(pos != std::string::npos);
        text.replace(pos, from.size(), to);
        std::istringstream is(text);
        CHECK_THROWS_AS(parse_instance(is), InvalidArgument);
    };
    fails("prob = 1/4 1/4 1/4 1/4", "prob = 1/4 1/4 1/4 1/2");
    fails("prob = 1/4 1/4 1/4 1/4", "prob = 1/4 1/4 1/2");
    fails("xi = 2 0 0 -2", "xi = 2 0 0 -2\ncolour = red");
    fails("xi = 2 0 0 -2", "xi = 2 0 0 -2\nX = 1 1 1 1");
    fails("xi = 2 0 0 -2\n", "");
    fails("stage 1 = {uu ud} {du dd}", "stage 1 = {uu ud} {du}");
    fails("stage 2 = {uu} {ud} {du} {dd}", "stage 2 = {uu du} {ud dd}");
    fails("stage 2 = {uu} {ud} {du} {dd}", "stage 2 = {uu} {ud} {du} {zz}");
    fails("outcomes = uu ud du dd", "outcomes uu ud du dd");
    CHECK_THROWS_AS(load_instance("/nonexistent/instance.cfg"), InvalidArgument);
}

TEST_CASE("bundled four-outcome instance")
{
    const auto inst = load_instance(ENLARGE_SOURCE_DIR "/instances/four_outcome.cfg");
    const auto rep = run_checks(inst);
    CHECK(rep.pass());
    const auto g = discrete_girsanov(inst.martingale(), inst.setup());
    CHECK(g.compensator[1] == vec({1, 0, 0, -1}));
}

TEST_CASE("random instances")
{
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 200; ++i) {
        const auto inst = random_instance(rng);
        CAPTURE(i);
        const auto rep = run_checks(inst);
        CHECK(rep.pass());
        const auto s = inst.setup();
        CHECK(check_absolute_continuity(s).holds);
        CHECK(is_qbar_martingale(s, likelihood_process(s)));
        const auto g = discrete_girsanov(inst.martingale(), s);
        CHECK(g.g_martingale);
        CHECK(is_martingale(g.compensated, join_filtrations(inst.F, inst.information()), inst.space.prob));
        for (Index k = 0; k < inst.F.n_stages(); ++k)
            CHECK(inst.F.stage(k).measurable(inst.martingale()[static_cast<std::size_t>(k)]));
    }
}
