#include "helpers.hpp"

#include "enlarge/enlarged.hpp"
#include "enlarge/experiments.hpp"
#include "enlarge/statistics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace enlarge;

namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

struct Bridge {
    EnlargementSpec spec;
    PathEnsemble W;
    VectorXd x;
    DecomposedProcess d;
};

Bridge bridge(Index n, std::uint64_t seed, Index steps = 256)
{
    Bridge b;
    const std::vector<double> snap{0.9};
    b.spec = make_enlargement(DeterministicIntegrand::indicator(1.0), build_grid(1.0, steps, 1.0, 0.5, 8).with_nodes(snap));
    b.W = simulate_brownian(b.spec.path_grid(), n, {seed, 0});
    b.x = realize_X(b.spec, b.W);
    b.d = compensate_brownian(b.spec, b.W, b.x);
    return b;
}

// Mean and SE of (M_t - M_s) g over the ensemble.
std::pair<double, double> weak_increment(const RowMatrixXd& M, const TimeGrid& g, double s, double t,
                                         const VectorXd& weight)
{
    const VectorXd v = (M.col(g.index_of(t)) - M.col(g.index_of(s))).cwiseProduct(weight);
    return {v.mean(), std::sqrt(testing::variance(v) / static_cast<double>(v.size()))};
}

} // namespace

TEST_SUITE("enlargement spec")
{
    TEST_CASE("bridge spec respects the exclusion margin")
    {
        const auto spec = bridge_enlargement(1.0, 64);
        CHECK(spec.info_horizon == 1.0);
        CHECK(spec.sim_horizon <= spec.info_horizon - spec.epsilon_exclusion + 1e-15);
        CHECK(spec.epsilon_exclusion == spec.grid.min_step());
        CHECK(spec.path_grid().back() == 1.0);
        CHECK(spec.path_grid().size() == spec.grid.size() + 1);
        CHECK_FALSE(spec.trivial());
    }

    TEST_CASE("grids reaching the information horizon are rejected")
    {
        CHECK_THROWS_AS(make_enlargement(DeterministicIntegrand::indicator(1.0), build_grid(1.0, 8)), InvalidArgument);
        CHECK_THROWS_AS(make_enlargement(DeterministicIntegrand::indicator(1.0), build_grid(0.9, 8), 0.5),
                        InvalidArgument);
        CHECK_NOTHROW(make_enlargement(DeterministicIntegrand::indicator(1.0), build_grid(0.9, 8), 0.1));
        CHECK(make_enlargement(DeterministicIntegrand::zero(), build_grid(1.0, 8)).trivial());
    }
}

TEST_SUITE("realize X")
{
    TEST_CASE("indicator, zero and constant")
    {
        const auto spec = bridge_enlargement(1.0, 32, 0.5, 4);
        const PathEnsemble W = simulate_brownian(spec.path_grid(), 50, {1, 0});
        CHECK((realize_X(spec, W) - W.at(1.0)).cwiseAbs().maxCoeff() <= 1e-13);

        const TimeGrid g = build_grid(2.0, 16);
        const PathEnsemble V = simulate_brownian(g, 50, {2, 0});
        const auto zero = make_enlargement(DeterministicIntegrand::zero(), g);
        CHECK(realize_X(zero, V).cwiseAbs().maxCoeff() == 0.0);
        const auto c = make_enlargement(DeterministicIntegrand::constant(3.0, 1.0), build_grid(1.0, 16, 1.0, 0.5, 2));
        const PathEnsemble U = simulate_brownian(c.path_grid(), 50, {3, 0});
        CHECK((realize_X(c, U) - 3.0 * U.at(1.0)).cwiseAbs().maxCoeff() <= 1e-13);
    }

    TEST_CASE("unbounded support is refused")
    {
        const auto tab = parse_integrand("tab:0=1;1=1");
        const auto spec = make_enlargement(tab, build_grid(1.0, 8), 0.0);
        const PathEnsemble W = simulate_brownian(spec.grid, 3, {1, 0});
        CHECK_THROWS_AS(realize_X(spec, W), InvalidArgument);
    }
}

TEST_SUITE("drift compensator")
{
    TEST_CASE("left-point sums by hand")
    {
        const Bridge b = bridge(4, 5, 16);
        const RowMatrixXd A = drift_compensator(b.spec, b.W, b.x);
        const TimeGrid& g = b.spec.grid;
        REQUIRE(A.cols() == g.size());
        for (Index p = 0; p < 4; ++p) {
            CHECK(A(p, 0) == 0.0);
            double acc = 0.0;
            for (Index i = 0; i + 1 < g.size(); ++i) {
                acc += (b.x[p] - b.W.values()(p, i)) / (1.0 - g[i]) * g.step(i);
                CHECK(A(p, i + 1) == doctest::Approx(acc).epsilon(1e-12));
            }
        }
    }

    TEST_CASE("trivial enlargement leaves W untouched")
    {
        const TimeGrid g = build_grid(1.0, 32);
        const auto spec = make_enlargement(DeterministicIntegrand::zero(), g);
        const PathEnsemble W = simulate_brownian(g, 20, {4, 0});
        const VectorXd x = realize_X(spec, W);
        const auto d = compensate_brownian(spec, W, x);
        CHECK(d.fv_part.cwiseAbs().maxCoeff() == 0.0);
        CHECK(d.martingale_part == W.values());
    }

    TEST_CASE("drift constant: conditional rule is unbiased on coarse grids")
    {
        const Index N = 20000;
        const TimeGrid g = build_grid(1.0, 64);
        const PathEnsemble W = simulate_brownian(g, N, {6, 0});
        const std::vector<double> eps{0.25, 1.0 / 16, 1.0 / 64};
        const RowMatrixXd I = abs_drift_integrals(W, 1.0, eps, DriftIntegralRule::bridge_conditional);
        const RowMatrixXd L = abs_drift_integrals(W, 1.0, eps, DriftIntegralRule::left_point);
        for (std::size_t e = 0; e < eps.size(); ++e) {
            const VectorXd col = I.col(static_cast<Index>(e));
            const double oracle = 2.0 * kSqrt2OverPi * (1.0 - std::sqrt(eps[e]));
            const double se = std::sqrt(testing::variance(col) / static_cast<double>(N));
            CHECK(std::abs(col.mean() - oracle) <= 4.0 * se);
            // Left-point sum by hand on the first path.
            double acc = 0.0;
            for (Index i = 0; g[i] < 1.0 - eps[e] - 1e-12; ++i)
                acc += std::abs(W.values()(0, g.size() - 1) - W.values()(0, i)) / (1.0 - g[i]) * g.step(i);
            CHECK(L(0, static_cast<Index>(e)) == doctest::Approx(acc).epsilon(1e-12));
        }
        CHECK(bridge_truncation_bound(0.25) == doctest::Approx(kSqrt2OverPi));
    }
}

TEST_SUITE("compensated brownian")
{
    TEST_CASE("exact additivity and finite variation")
    {
        const Bridge b = bridge(200, 7);
        CHECK(b.d.relative_additivity_error() <= 1e-14);
        CHECK(b.d.additivity_error() <= 1e-13);
        CHECK(b.d.original == b.W.values().leftCols(b.spec.grid.size()));
        const VectorXd fv = b.d.fv_variation();
        CHECK(fv.allFinite());
        CHECK(fv.minCoeff() > 0.0);
        CHECK(b.d.fv_ensemble().values() == b.d.fv_part);
    }

    TEST_CASE("weak martingale property")
    {
        const Index N = 20000;
        const Bridge b = bridge(N, 8);
        const TimeGrid& g = b.spec.grid;
        const VectorXd one = VectorXd::Ones(N);
        for (auto [s, t] : {std::pair{0.25, 0.5}, std::pair{0.5, 0.75}}) {
            const VectorXd ws = b.W.at(s);
            for (const VectorXd* w : {&one, &ws, &b.x}) {
                const auto [m, se] = weak_increment(b.d.martingale_part, g, s, t, *w);
                CHECK(std::abs(m) <= 4.0 * se);
            }
            // The raw increment fails against X - W_s.
            const VectorXd gap = b.x - ws;
            const auto [m, se] = weak_increment(b.W.values(), b.W.grid(), s, t, gap);
            CHECK(m / se > 10.0);
        }
        const auto [z0, se0] = weak_increment(b.d.martingale_part, g, 0.5, 0.5, one);
        CHECK(z0 == 0.0);
        CHECK(se0 == 0.0);
    }

    TEST_CASE("quadratic variation and pinning")
    {
        const Index N = 20000;
        const Bridge b = bridge(N, 9, 1024);
        const auto qv = quadratic_variation_test(b.d.martingale_ensemble(), 0.9, 0.9, 0.02);
        CHECK(qv.pass);
        const double n = static_cast<double>(N);
        CHECK(std::abs(testing::correlation(b.d.martingale_ensemble().at(0.9), b.x)) <= 4.0 / std::sqrt(n));
        const double raw = testing::correlation(b.W.at(0.9), b.x);
        CHECK(std::abs(raw - std::sqrt(0.9)) <= 4.0 * (1.0 - 0.9) / std::sqrt(n));
    }

    TEST_CASE("grid refinement leaves test statistics within one SE")
    {
        const Index N = 20000;
        const TimeGrid fine = build_grid(1.0, 512, 1.0, 0.5, 6);
        std::vector<Index> keep;
        for (Index i = 0; i < fine.size(); i += 2)
            keep.push_back(i);
        if (keep.back() != fine.size() - 1)
            keep.push_back(fine.size() - 1);
        const TimeGrid coarse = fine.subset(keep);
        const auto sf = make_enlargement(DeterministicIntegrand::indicator(1.0), fine);
        const auto sc = make_enlargement(DeterministicIntegrand::indicator(1.0), coarse);
        const PathEnsemble Wf = simulate_brownian(sf.path_grid(), N, {10, 0});
        const TimeGrid cpg = sc.path_grid();
        const std::vector<double> coarse_times(cpg.nodes().begin(), cpg.nodes().end());
        const PathEnsemble Wc = Wf.sample_at(coarse_times);
        const VectorXd x = realize_X(sf, Wf);
        const auto df = compensate_brownian(sf, Wf, x);
        const auto dc = compensate_brownian(sc, Wc, x);
        const VectorXd ws = Wf.at(0.25);
        for (const VectorXd& w : {VectorXd(VectorXd::Ones(N)), ws, x}) {
            const auto [mf, sef] = weak_increment(df.martingale_part, sf.grid, 0.25, 0.5, w);
            const auto [mc, sec] = weak_increment(dc.martingale_part, sc.grid, 0.25, 0.5, w);
            CHECK(std::abs(mf - mc) < std::min(sef, sec));
        }
    }

    TEST_CASE("decomposition CSV")
    {
        const Bridge b = bridge(2, 11, 8);
        std::ostringstream os;
        write_decomposition_csv(b.d, os);
        const std::string s = os.str();
        CHECK(s.rfind("path,t,original,martingale_part,fv_part\n", 0) == 0);
        CHECK(std::count(s.begin(), s.end(), '\n') == 1 + 2 * b.spec.grid.size());
    }
}

TEST_SUITE("compensated martingale")
{
    TEST_CASE("m = 1 reduces to the Brownian case")
    {
        const Bridge b = bridge(50, 12, 64);
        const auto d = compensate_martingale(b.spec, DeterministicIntegrand::constant(1.0, 1.0), b.W, b.x);
        CHECK((d.original - b.d.original).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((d.fv_part - b.d.fv_part).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(d.relative_additivity_error() <= 1e-14);
    }

    TEST_CASE("jy(0.75) is refused, jy(1.25) passes the battery")
    {
        const Bridge b = bridge(10, 13, 32);
        try {
            compensate_martingale(b.spec, DeterministicIntegrand::jeulin_yor(0.75, 1.0), b.W, b.x);
            FAIL("expected a refusal");
        } catch (const Refusal& e) {
            CHECK_FALSE(e.undecided());
            CHECK(std::string(e.what()).find("NOT_SEMIMARTINGALE") != std::string::npos);
        }
        experiments::DriftSimConfig cfg;
        cfg.phi = "indicator:T=1";
        cfg.m = "jy:alpha=1.25,T=1";
        cfg.paths = 20000;
        cfg.grid.steps = 256;
        const auto r = experiments::run_drift_sim(cfg);
        CHECK_FALSE(r.refused);
        CHECK(r.report.pass);
        CHECK(r.verdict->verdict == Verdict::semimartingale);
    }

    TEST_CASE("undecided integrands are refused as undecided")
    {
        const Bridge b = bridge(10, 14, 32);
        try {
            compensate_martingale(b.spec, DeterministicIntegrand::jeulin_yor(1.01, 1.0), b.W, b.x);
            FAIL("expected a refusal");
        } catch (const Refusal& e) {
            CHECK(e.undecided());
        }
    }
}

TEST_SUITE("integration under the enlargement")
{
    TEST_CASE("H = 1, H = 0 and linearity")
    {
        const Bridge b = bridge(100, 15, 64);
        const auto one = integrate_under_enlargement(DeterministicIntegrand::constant(1.0, 2.0), b.d);
        CHECK((one.martingale_part - b.d.martingale_part).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((one.fv_part - b.d.fv_part).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((one.original - b.d.original).cwiseAbs().maxCoeff() <= 1e-12);

        const auto zero = integrate_under_enlargement(DeterministicIntegrand::zero(), b.d);
        CHECK(zero.original.cwiseAbs().maxCoeff() == 0.0);
        CHECK(zero.martingale_part.cwiseAbs().maxCoeff() == 0.0);
        CHECK(zero.fv_part.cwiseAbs().maxCoeff() == 0.0);

        const auto h1 = DeterministicIntegrand::linear(0.0, 1.0, 2.0);
        const auto h2 = DeterministicIntegrand::linear(2.0, -3.0, 2.0);
        const auto h12 = DeterministicIntegrand::linear(2.0, -2.0, 2.0);
        const auto a = integrate_under_enlargement(h1, b.d), c = integrate_under_enlargement(h2, b.d),
                   s = integrate_under_enlargement(h12, b.d);
        CHECK((a.original + c.original - s.original).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((a.martingale_part + c.martingale_part - s.martingale_part).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((a.fv_part + c.fv_part - s.fv_part).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(a.relative_additivity_error() <= 1e-13);
    }

    TEST_CASE("overflow guard")
    {
        const Bridge b = bridge(10, 16, 64);
        CHECK_THROWS_AS(integrate_under_enlargement(DeterministicIntegrand::constant(1.0, 2.0), b.d, 1e-3),
                        NonIntegrable);
    }

    TEST_CASE("H(s) = s keeps the martingale property")
    {
        experiments::DriftSimConfig cfg;
        cfg.phi = "indicator:T=1";
        cfg.H = "linear:a=0,b=1,T=1";
        cfg.paths = 20000;
        cfg.grid.steps = 256;
        const auto r = experiments::run_drift_sim(cfg);
        CHECK(r.pass());
        CHECK(r.additivity_error <= 1e-12);
    }
}

TEST_SUITE("levy bridge")
{
    TEST_CASE("zero rate")
    {
        const TimeGrid g = build_grid(1.0, 16);
        const PathEnsemble Z = simulate_compound_poisson(g, 0.0, JumpLaw::constant(1.0), 5, {1, 0});
        const auto d = levy_bridge_compensator(Z, Z.at(1.0), 1.0, 1.0 / 16);
        CHECK(d.original.cwiseAbs().maxCoeff() == 0.0);
        CHECK(d.martingale_part.cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("unit jumps: martingale part and mean check")
    {
        experiments::LevyDemoConfig cfg;
        cfg.jumps = "const:1";
        cfg.paths = 20000;
        cfg.grid.steps = 256;
        const auto r = experiments::run_levy_demo(cfg);
        CHECK(r.report.pass);
        for (const auto& m : r.mean_checks) {
            CHECK(m.expected == doctest::Approx(1.0 - m.s));
            CHECK(std::abs(m.z) <= 4.0);
        }
        CHECK(r.additivity_error <= 1e-14);
        CHECK(r.pass());
    }
}

TEST_SUITE("symmetry identity")
{
    TEST_CASE("slopes")
    {
        const PathEnsemble W = simulate_brownian(build_grid(1.0, 8), 40000, {17, 0});
        for (auto [s, t, e] : {std::tuple{0.25, 0.5, 1.0 / 3.0}, std::tuple{0.0, 1.0, 1.0}, std::tuple{0.0, 0.5, 0.5}}) {
            const auto r = symmetry_identity_check(W, s, t);
            CHECK(r.expected == doctest::Approx(e));
            CHECK(std::abs(r.slope - e) <= 4.0 * r.se + 1e-9);
            CHECK(r.pass());
        }
        CHECK_THROWS_AS(symmetry_identity_check(W, 0.5, 0.5), InvalidArgument);
        CHECK_THROWS_AS(symmetry_identity_check(W, 0.75, 0.5), InvalidArgument);
    }
}
