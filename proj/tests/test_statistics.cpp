#include "helpers.hpp"

#include "enlarge/enlarged.hpp"
#include "enlarge/statistics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace enlarge;

namespace {

const std::vector<std::pair<double, double>> kPairs{{0.25, 0.5}, {0.5, 0.75}, {0.25, 0.75}};

PathEnsemble brownian(Index n, std::uint64_t seed, Index steps = 16)
{
    return simulate_brownian(build_grid(1.0, steps), n, {seed, 0});
}

// W plus c * t on the same grid.
PathEnsemble with_drift(const PathEnsemble& W, double c)
{
    RowMatrixXd v = W.values();
    for (Index j = 0; j < v.cols(); ++j)
        v.col(j).array() += c * W.grid()[j];
    return PathEnsemble(W.grid(), std::move(v), ProcessLabel::derived, W.seed());
}

} // namespace

TEST_CASE("normal tail helpers invert each other")
{
    for (double z : {0.0, 0.5, 1.96, 4.0, 4.6, 8.0}) {
        CHECK(normal_upper_quantile(normal_upper_tail(z)) == doctest::Approx(z).epsilon(1e-10));
    }
    CHECK(normal_upper_tail(0.0) == doctest::Approx(0.5));
    CHECK(normal_upper_tail(1.959963984540054) == doctest::Approx(0.025).epsilon(1e-12));
}

TEST_CASE("bonferroni critical value")
{
    CHECK(bonferroni_critical(4.0, 1) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(bonferroni_critical(4.0, 15) == doctest::Approx(4.6001).epsilon(1e-4));
    for (Index k : {1, 2, 5, 15, 100, 1000}) {
        const double c = bonferroni_critical(4.0, k);
        CHECK(normal_upper_tail(c) * static_cast<double>(k) == doctest::Approx(normal_upper_tail(4.0)).epsilon(1e-9));
        CHECK(c >= 4.0);
    }
    CHECK_THROWS_AS(bonferroni_critical(4.0, 0), InvalidArgument);
}

TEST_CASE("basis labels")
{
    for (const char* l : {"1", "W_s", "X", "W_s*X", "W_s^2", "X-W_s"})
        CHECK(basis::by_label(l).label == l);
    CHECK(basis::by_label("W_s*X").f(2.0, 3.0) == 6.0);
    CHECK(basis::by_label("X-W_s").f(2.0, 3.0) == 1.0);
    CHECK(basis::defaults().size() == 5);
    CHECK_THROWS_AS(basis::by_label("W_t"), InvalidArgument);
}

TEST_CASE("sample moments")
{
    VectorXd v(4);
    v << 1, 2, 3, 4;
    const auto m = sample_moments(v);
    CHECK(m.mean == doctest::Approx(2.5));
    CHECK(m.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(m.n == 4);

    VectorXd big = VectorXd::Constant(1000, 0.1);
    big[0] = 1e16;
    big[1] = -1e16;
    CHECK(compensated_sum(big) == doctest::Approx(99.8).epsilon(1e-12));
}

TEST_CASE("increment regression test on Brownian paths")
{
    const auto W = brownian(20000, 1);
    const VectorXd x = W.at(1.0);
    const auto rep = increment_regression_test(W, W, x, kPairs, {basis::one(), basis::state()});
    CHECK(rep.tests.size() == 6);
    CHECK(rep.n_paths == 20000);
    CHECK(rep.critical == doctest::Approx(bonferroni_critical(4.0, 6)));
    CHECK(rep.pass == (rep.max_abs_z() <= rep.critical));
    CHECK(rep.pass);
    REQUIRE(rep.find(0.25, 0.5, "W_s") != nullptr);
    CHECK(rep.find(0.25, 0.5, "X") == nullptr);

    std::ostringstream os;
    rep.write_csv(os);
    CHECK(os.str().rfind("s,t,basis,estimate,se,z\n", 0) == 0);

    SUBCASE("X is not a valid basis for raw W when X = W_1")
    {
        const auto bad = increment_regression_test(W, W, x, kPairs, {basis::info()});
        CHECK_FALSE(bad.pass);
        const auto* r = bad.find(0.25, 0.5, "X");
        REQUIRE(r != nullptr);
        CHECK(r->estimate == doctest::Approx(0.25).epsilon(0.05));
    }
    SUBCASE("a constant process gives zero estimates")
    {
        const PathEnsemble C(W.grid(), RowMatrixXd::Constant(W.n_paths(), W.grid().size(), 3.0),
                             ProcessLabel::derived, W.seed());
        const auto r = increment_regression_test(C, W, x, kPairs, basis::defaults());
        for (const auto& t : r.tests) {
            CHECK(t.estimate == 0.0);
            CHECK(t.z == 0.0);
        }
        CHECK(r.pass);
    }
}

TEST_CASE("increment regression test argument errors")
{
    const auto W = brownian(100, 2);
    const VectorXd x = W.at(1.0);
    CHECK_THROWS_AS(increment_regression_test(W, W, x, {{0.5, 0.25}}, {basis::one()}), InvalidArgument);
    CHECK_THROWS_AS(increment_regression_test(W, W, x, {{0.25, 0.3}}, {basis::one()}), InvalidArgument);
    CHECK_THROWS_AS(increment_regression_test(W, W, x, kPairs, {}), InvalidArgument);
    CHECK_THROWS_AS(increment_regression_test(W, W, x.head(10), kPairs, {basis::one()}), InvalidArgument);
    const auto other = brownian(100, 2, 8);
    CHECK_THROWS_AS(increment_regression_test(W, other, x, kPairs, {basis::one()}), InvalidArgument);
}

TEST_CASE("calibration: Brownian battery passes across seeds")
{
    int passed = 0;
    const int reps = 200;
    for (int s = 0; s < reps; ++s) {
        const auto W = brownian(2000, 1000 + static_cast<std::uint64_t>(s), 4);
        const auto r = increment_regression_test(W, W, W.at(1.0), kPairs, {basis::one(), basis::state()});
        passed += r.pass ? 1 : 0;
    }
    CHECK(passed >= 198);
}

TEST_CASE("power: the uncompensated bridge battery always fails")
{
    for (std::uint64_t seed : {11, 12, 13, 14, 15}) {
        const auto spec = bridge_enlargement(1.0, 16, 0.5, 4);
        const auto W = simulate_brownian(spec.path_grid(), 20000, {seed, 0});
        const VectorXd x = realize_X(spec, W);
        const auto r = increment_regression_test(W, W, x, kPairs, basis::defaults());
        CHECK_FALSE(r.pass);
        CHECK(r.max_abs_z() > 10.0);
    }
}

TEST_CASE("determinism of the battery")
{
    const auto a = brownian(3000, 77);
    const auto b = brownian(3000, 77);
    const auto ra = increment_regression_test(a, a, a.at(1.0), kPairs, basis::defaults());
    const auto rb = increment_regression_test(b, b, b.at(1.0), kPairs, basis::defaults());
    std::ostringstream oa, ob;
    ra.write_csv(oa);
    rb.write_csv(ob);
    CHECK(oa.str() == ob.str());
}

TEST_CASE("quadratic variation")
{
    const auto W = brownian(20000, 3, 256);
    const auto qv = quadratic_variation_test(W, 0.5, 0.5);
    CHECK(qv.pass);
    CHECK(qv.rel_error < 0.02);
    CHECK(qv.mean == doctest::Approx(0.5).epsilon(0.02));

    const VectorXd rv = realized_variance(W, 1.0);
    CHECK(testing::mean(rv) == doctest::Approx(1.0).epsilon(0.02));
    // Sum of 256 squared N(0, 1/256): variance 2/256.
    CHECK(testing::variance(rv) == doctest::Approx(2.0 / 256.0).epsilon(0.1));

    const VectorXd inflated = realized_variance(W, 0.5) * 1.1;
    const auto inflated_rep = quadratic_variation_test(inflated, 0.5, 0.5);
    CHECK_FALSE(inflated_rep.pass);
    CHECK_THROWS_AS(quadratic_variation_test(W, 0.3, 0.3), InvalidArgument);
}

TEST_CASE("Levy characterization suite")
{
    const std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
    const auto W = brownian(200000, 5, 4);
    const auto ok = levy_characterization_suite(W, times);
    CHECK(ok.pass);
    for (const char* name : {"mean", "variance", "skewness", "excess_kurtosis", "correlation"})
        CHECK(ok.passes(name));

    const auto drifted = levy_characterization_suite(with_drift(W, 0.5), times);
    CHECK_FALSE(drifted.pass);
    CHECK_FALSE(drifted.passes("mean"));
    CHECK(drifted.passes("variance"));

    const PathEnsemble scaled(W.grid(), W.values() * 1.2, ProcessLabel::derived, W.seed());
    const auto sc = levy_characterization_suite(scaled, times);
    CHECK_FALSE(sc.passes("variance"));
    CHECK(sc.passes("mean"));
}

TEST_CASE("look-ahead tail bound formula")
{
    for (int n : {4, 8, 12}) {
        for (double d : {0.25, 0.5}) {
            const double m = std::ldexp(1.0, n);
            const double sigma = 1.0 / std::sqrt(m);
            // m * 2 * phi(d / sigma) * sigma / d, the Mills-ratio bound.
            const double expected =
                m * 2.0 * std::exp(-0.5 * d * d / (sigma * sigma)) / std::sqrt(2.0 * std::numbers::pi) * sigma / d;
            CHECK(look_ahead_tail_bound(n, d) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
    CHECK(look_ahead_tail_bound(12, 0.25) < look_ahead_tail_bound(10, 0.25));
}

TEST_CASE("non-integrator demo")
{
    const TimeGrid g = build_grid(1.0, 1024);
    const auto W = simulate_brownian(g, 5000, {9, 0});
    const auto rep = non_integrator_demo(1.0 / 64.0, {8, 10}, W);
    REQUIRE(rep.levels.size() == 2);
    CHECK(rep.n_paths == 5000);
    for (const auto& lv : rep.levels) {
        // (H^n . W)_1 = sum of squared dyadic increments, mean 1 and variance 2^(1-n).
        CHECK(std::abs(lv.mean_integral - 1.0) < 4.0 * lv.se + 1e-12);
        CHECK(lv.se == doctest::Approx(std::sqrt(2.0 / std::ldexp(1.0, lv.n) / 5000.0)).epsilon(0.1));
        CHECK(lv.second_moment == doctest::Approx(1.0 + 2.0 / std::ldexp(1.0, lv.n)).epsilon(0.01));
        for (std::size_t d = 0; d < lv.deltas.size(); ++d)
            CHECK(lv.sup_exceed_prob[d] <= lv.tail_bound[d] + 4.0 * std::sqrt(lv.tail_bound[d] / 5000.0) + 1e-12);
    }

    SUBCASE("batched samples reproduce the single-batch report")
    {
        const auto a = non_integrator_samples(1.0 / 64.0, {8, 10},
                                              PathEnsemble(g, W.values().topRows(2000), ProcessLabel::brownian, W.seed()));
        const auto b = non_integrator_samples(
            1.0 / 64.0, {8, 10}, PathEnsemble(g, W.values().bottomRows(3000), ProcessLabel::brownian, W.seed()));
        NonIntegratorSamples all = a;
        for (std::size_t l = 0; l < 2; ++l) {
            all.integral[l].conservativeResize(5000);
            all.integral[l].tail(3000) = b.integral[l];
            all.sup[l].conservativeResize(5000);
            all.sup[l].tail(3000) = b.sup[l];
        }
        const auto m = summarize(all);
        CHECK(m.n_paths == 5000);
        for (std::size_t l = 0; l < 2; ++l) {
            CHECK(m.levels[l].mean_integral == rep.levels[l].mean_integral);
            CHECK(m.levels[l].second_moment == rep.levels[l].second_moment);
            CHECK(m.levels[l].se == rep.levels[l].se);
            CHECK(m.levels[l].sup_exceed_prob == rep.levels[l].sup_exceed_prob);
        }
    }
    SUBCASE("preconditions")
    {
        CHECK_THROWS_AS(non_integrator_demo(1.0 / 64.0, {4}, W), InvalidArgument);
        CHECK_THROWS_AS(non_integrator_demo(0.0, {8}, W), InvalidArgument);
        CHECK_THROWS_AS(non_integrator_demo(1.0 / 4096.0, {12}, W), InvalidArgument);
    }
}

TEST_CASE("Jeulin oracle against closed form")
{
    const double c = std::sqrt(2.0 / std::numbers::pi);
    const auto A = DeterministicIntegrand::power(0.25, 1.0);
    for (double eps : {0.5, 0.1, 1e-6, 1e-30}) {
        const double expected = c * (1.0 - std::pow(eps, 0.75)) / 0.75;
        CHECK(jeulin_oracle(A, 1.0, eps) == doctest::Approx(expected).epsilon(1e-10));
    }
    CHECK_THROWS_AS(jeulin_oracle(A, 1.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(jeulin_oracle(A, 1.0, 1.0), InvalidArgument);

    const auto cal = calibrate_jeulin_probe(parse_integrand("jy:alpha=0.75,T=1,weight=0.5"), 1.0, 6.0, 2.0, 1000);
    CHECK(cal.oracle_at_depth >= 12.0);
    CHECK(cal.depth > 30);
    CHECK_THROWS_AS(calibrate_jeulin_probe(A, 1.0, 6.0, 2.0, 1000), InvalidArgument);
}

TEST_CASE("Jeulin probe")
{
    const auto probe = [](const DeterministicIntegrand& A, int depth, Index n) {
        const TimeGrid g = build_horizon_grid(1.0, 0.5, depth, 4, 16);
        const auto Y = simulate_brownian(g, n, {21, 0});
        JeulinProbeOptions o;
        o.depth = depth;
        o.ceiling = 6.0;
        return jeulin_lemma_probe(A, Y, o);
    };

    SUBCASE("zero integrand")
    {
        const auto r = probe(DeterministicIntegrand::zero(), 10, 200);
        CHECK(r.min_final == 0.0);
        CHECK(r.median_final == 0.0);
        CHECK(r.fraction_over_ceiling == 0.0);
        for (double m : r.mean_truncated)
            CHECK(m == 0.0);
    }
    SUBCASE("finite integral: paths settle, mean near the oracle")
    {
        const auto r = probe(DeterministicIntegrand::power(0.25, 1.0), 60, 2000);
        CHECK(r.fraction_cauchy >= 0.99);
        CHECK(r.fraction_over_ceiling == 0.0);
        CHECK(r.epsilons.size() == 61);
        CHECK(r.mean_truncated.back() == doctest::Approx(r.oracle.back()).epsilon(0.05));
    }
    SUBCASE("divergent integral: paths pass the ceiling")
    {
        const auto A = parse_integrand("jy:alpha=0.75,T=1,weight=0.5");
        const int depth = calibrate_jeulin_probe(A, 1.0, 6.0, 2.0, 1000).depth;
        const auto r = probe(A, depth, 500);
        CHECK(r.fraction_over_ceiling >= 0.99);
        CHECK(std::isfinite(r.median_final));
        CHECK(r.mean_truncated.back() == doctest::Approx(r.oracle.back()).epsilon(0.05));
        // Monotone in depth per path, hence in the mean.
        for (std::size_t k = 1; k < r.mean_truncated.size(); ++k)
            CHECK(r.mean_truncated[k] >= r.mean_truncated[k - 1]);
    }
    SUBCASE("errors")
    {
        const TimeGrid g = build_horizon_grid(1.0, 0.5, 10, 4, 16);
        const auto Y = simulate_brownian(g, 10, {1, 0});
        JeulinProbeOptions o;
        o.depth = 2;
        CHECK_THROWS_AS(jeulin_lemma_probe(DeterministicIntegrand::zero(), Y, o), InvalidArgument);
        o.depth = 10;
        o.T = 2.0;
        CHECK_THROWS_AS(jeulin_lemma_probe(DeterministicIntegrand::zero(), Y, o), InvalidArgument);
    }
}
