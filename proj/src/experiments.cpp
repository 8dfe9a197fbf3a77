#include "enlarge/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <cmath>
#include <numbers>
#include <set>

namespace enlarge::experiments {

namespace {

// Refined toward T, with every snapshot time below T as a node.
TimeGrid make_grid(double T, const GridConfig& g, const std::vector<double>& snapshots = {})
{
    const TimeGrid base =
        build_grid(T, g.steps, T, g.refinement_ratio, g.depth > 0 ? std::optional<int>(g.depth) : std::nullopt);
    std::vector<double> inside;
    for (double t : snapshots)
        if (t <= base.back())
            inside.push_back(t);
    return base.with_nodes(inside);
}

void check_run(Index paths, Index batch)
{
    if (paths < 2)
        throw InvalidArgument("need at least two paths");
    if (batch < 1)
        throw InvalidArgument("batch size must be positive");
}

// Calls body(first_path, n) for consecutive batches.
template <typename Body>
void for_batches(Index paths, Index batch, Body&& body)
{
    for (Index first = 0; first < paths; first += batch)
        body(first, std::min(batch, paths - first));
}

std::vector<double> snapshot_times(std::initializer_list<double> extra, const Pairs& pairs,
                                   const std::vector<double>& more = {})
{
    std::set<double> t{0.0};
    t.insert(extra.begin(), extra.end());
    for (const auto& [s, u] : pairs) {
        t.insert(s);
        t.insert(u);
    }
    t.insert(more.begin(), more.end());
    return {t.begin(), t.end()};
}

void check_within(const std::vector<double>& times, double limit, const char* what)
{
    for (double t : times)
        if (t > limit * (1.0 + 1e-12))
            throw InvalidArgument(std::string(what) + ": time " + std::to_string(t) +
                                  " lies beyond the simulated window " + std::to_string(limit));
}

Correlation correlation(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b)
{
    const double n = static_cast<double>(a.size());
    const VectorXd da = a.array() - compensated_sum(a) / n;
    const VectorXd db = b.array() - compensated_sum(b) / n;
    const double r = compensated_sum(da.cwiseProduct(db)) /
                     std::sqrt(compensated_sum(da.cwiseAbs2()) * compensated_sum(db.cwiseAbs2()));
    return {r, (1.0 - r * r) / std::sqrt(n)};
}

SeedSpec seed_for(std::uint64_t seed, Index first)
{
    return SeedSpec{seed, static_cast<std::uint64_t>(first)};
}

} // namespace

Pairs default_pairs()
{
    return {{0.25, 0.5}, {0.5, 0.75}, {0.25, 0.9}};
}

// ---- bridge demo ----

double BridgeDemoResult::negative_control_z() const
{
    const auto& [s, t] = config.pairs.front();
    const auto* r = uncompensated.find(s, t, basis::info_gap().label);
    return r ? std::abs(r->z) : 0.0;
}

bool BridgeDemoResult::drift_constant_ok() const
{
    return std::all_of(drift_constant.begin(), drift_constant.end(), [](const auto& p) { return p.within; });
}

bool BridgeDemoResult::pass() const
{
    return compensated.pass && negative_control_z() > config.negative_control_z && symmetry.pass(config.threshold) &&
           qv_compensated.pass && levy.pass && drift_constant_ok() &&
           std::abs(corr_compensated_x.r) <= config.threshold * corr_compensated_x.se;
}

BridgeDemoResult run_bridge_demo(const BridgeDemoConfig& cfg)
{
    check_run(cfg.paths, cfg.batch);
    BridgeDemoResult res;
    res.config = cfg;
    const auto snap = snapshot_times({cfg.qv_time, cfg.symmetry_s, cfg.symmetry_t}, cfg.pairs, cfg.levy_times);
    const EnlargementSpec spec =
        make_enlargement(DeterministicIntegrand::indicator(1.0), make_grid(1.0, cfg.grid, snap));
    const TimeGrid pg = spec.path_grid();
    res.grid_nodes = pg.size();
    res.epsilon_exclusion = spec.epsilon_exclusion;

    check_within(snap, spec.grid.back(), "bridge-demo");
    auto snap1 = snap;
    snap1.push_back(1.0);

    std::vector<PathEnsemble> wt_parts, w_parts;
    VectorXd x(cfg.paths), qv_c(cfg.paths), qv_r(cfg.paths);
    const Index ne = static_cast<Index>(cfg.drift_epsilons.size());
    RowMatrixXd drift(cfg.paths, ne), drift_lp(cfg.paths, ne);
    VectorXd fv(cfg.paths);

    for_batches(cfg.paths, cfg.batch, [&](Index first, Index n) {
        const PathEnsemble W = simulate_brownian(pg, n, seed_for(cfg.seed, first));
        const VectorXd xb = realize_X(spec, W);
        const DecomposedProcess d = compensate_brownian(spec, W, xb);
        res.additivity_error = std::max(res.additivity_error, d.relative_additivity_error());
        fv.segment(first, n) = d.fv_variation();
        const PathEnsemble wt = d.martingale_ensemble();
        wt_parts.push_back(wt.sample_at(snap));
        w_parts.push_back(W.sample_at(snap1));
        x.segment(first, n) = xb;
        qv_c.segment(first, n) = realized_variance(wt, cfg.qv_time);
        qv_r.segment(first, n) = realized_variance(W, cfg.qv_time);
        if (ne > 0) {
            drift.middleRows(first, n) =
                abs_drift_integrals(W, 1.0, cfg.drift_epsilons, DriftIntegralRule::bridge_conditional);
            drift_lp.middleRows(first, n) = abs_drift_integrals(W, 1.0, cfg.drift_epsilons, DriftIntegralRule::left_point);
        }
    });
    res.mean_fv_variation = compensated_sum(fv) / static_cast<double>(cfg.paths);

    PathEnsemble wt = stack_paths(wt_parts);
    const PathEnsemble wfull = stack_paths(w_parts);
    wt = PathEnsemble(wt.grid(), wt.values(), ProcessLabel::derived, SeedSpec{cfg.seed, 0});
    const PathEnsemble w = wfull.sample_at(snap);

    res.compensated = increment_regression_test(wt, w, x, cfg.pairs, basis::defaults(), cfg.threshold);
    auto neg_basis = basis::defaults();
    neg_basis.push_back(basis::info_gap());
    res.uncompensated = increment_regression_test(w, w, x, cfg.pairs, neg_basis, cfg.threshold);
    res.symmetry = symmetry_identity_check(wfull, cfg.symmetry_s, cfg.symmetry_t, 1.0);
    res.qv_compensated = quadratic_variation_test(qv_c, cfg.qv_time, cfg.qv_time, 0.02);
    res.qv_raw = quadratic_variation_test(qv_r, cfg.qv_time, cfg.qv_time, 0.02);
    res.levy = levy_characterization_suite(wt, cfg.levy_times, cfg.threshold);
    res.corr_compensated_x = correlation(wt.at(cfg.qv_time), x);
    res.corr_raw_x = correlation(w.at(cfg.qv_time), x);

    const double target = 2.0 * std::sqrt(2.0 / std::numbers::pi);
    for (Index e = 0; e < ne; ++e) {
        DriftConstantPoint p;
        p.epsilon = cfg.drift_epsilons[static_cast<std::size_t>(e)];
        const auto m = sample_moments(drift.col(e));
        p.mean = m.mean;
        p.se = m.se;
        p.left_point_mean = compensated_sum(drift_lp.col(e)) / static_cast<double>(cfg.paths);
        p.truncation_bound = bridge_truncation_bound(p.epsilon);
        p.deviation = std::abs(p.mean - target);
        p.within = p.deviation <= 4.0 * p.se + p.truncation_bound;
        res.drift_constant.push_back(p);
    }
    return res;
}

// ---- martingale test ----

MgTestResult run_mg_test(const MgTestConfig& cfg)
{
    MgTestResult res;
    res.config = cfg;
    const bool compensated = cfg.process == "compensated";
    if (!compensated && cfg.process != "brownian")
        throw InvalidArgument("mg-test: process must be brownian or compensated");
    if (cfg.input && compensated)
        throw InvalidArgument("mg-test: an input file is tested as given; drop --process compensated");
    res.basis = cfg.basis;
    if (res.basis.empty())
        res.basis = compensated ? std::vector<std::string>{"1", "W_s", "X", "W_s*X", "W_s^2"}
                                : std::vector<std::string>{"1", "W_s"};
    std::vector<BasisFunction> basis;
    for (const auto& label : res.basis)
        basis.push_back(basis::by_label(label));

    if (cfg.input) {
        std::ifstream in(*cfg.input);
        if (!in)
            throw InvalidArgument("mg-test: cannot open " + *cfg.input);
        const PathEnsemble P = read_csv(in);
        if (P.n_paths() < 2)
            throw InvalidArgument("mg-test: need at least two paths");
        const double xt = cfg.x_time.value_or(P.grid().back());
        const VectorXd x = P.at(xt);
        res.grid_nodes = P.grid().size();
        res.report = increment_regression_test(P, P, x, cfg.pairs, basis, cfg.threshold);
        return res;
    }

    check_run(cfg.paths, cfg.batch);
    const auto snap = snapshot_times({}, cfg.pairs);
    const EnlargementSpec spec =
        make_enlargement(DeterministicIntegrand::indicator(1.0), make_grid(1.0, cfg.grid, snap));
    const TimeGrid pg = spec.path_grid();
    res.grid_nodes = pg.size();
    check_within(snap, pg.back(), "mg-test");

    std::vector<PathEnsemble> proc_parts, w_parts;
    VectorXd x(cfg.paths);
    for_batches(cfg.paths, cfg.batch, [&](Index first, Index n) {
        const PathEnsemble W = simulate_brownian(pg, n, seed_for(cfg.seed, first));
        const VectorXd xb = realize_X(spec, W);
        x.segment(first, n) = xb;
        w_parts.push_back(W.sample_at(snap));
        if (compensated)
            proc_parts.push_back(compensate_brownian(spec, W, xb).martingale_ensemble().sample_at(snap));
    });
    const PathEnsemble w = stack_paths(w_parts);
    const PathEnsemble proc = compensated ? stack_paths(proc_parts) : w;
    res.report = increment_regression_test(proc, w, x, cfg.pairs, basis, cfg.threshold);
    return res;
}

// ---- general drift ----

DriftSimResult run_drift_sim(const DriftSimConfig& cfg)
{
    check_run(cfg.paths, cfg.batch);
    DriftSimResult res;
    res.config = cfg;
    const DeterministicIntegrand phi = parse_integrand(cfg.phi);
    const double T = phi.horizon();
    if (!std::isfinite(T))
        throw InvalidArgument("drift-sim: phi needs a finite information horizon");
    const auto snap = snapshot_times({}, cfg.pairs);
    const EnlargementSpec spec = make_enlargement(phi, make_grid(T, cfg.grid, snap));
    const TimeGrid pg = spec.path_grid();
    res.grid_nodes = pg.size();
    res.info_horizon = T;
    res.epsilon_exclusion = spec.epsilon_exclusion;

    std::optional<DeterministicIntegrand> m, H;
    if (cfg.m) {
        m = parse_integrand(*cfg.m);
        res.verdict = classify(*m, T);
    }
    if (cfg.H)
        H = parse_integrand(*cfg.H);

    check_within(snap, spec.grid.back(), "drift-sim");

    std::vector<PathEnsemble> proc_parts, w_parts;
    VectorXd x(cfg.paths);
    VectorXd fv(cfg.paths);
    try {
        for_batches(cfg.paths, cfg.batch, [&](Index first, Index n) {
            const PathEnsemble W = simulate_brownian(pg, n, seed_for(cfg.seed, first));
            const VectorXd xb = realize_X(spec, W);
            DecomposedProcess d = m ? compensate_martingale(spec, *m, W, xb) : compensate_brownian(spec, W, xb);
            if (H)
                d = integrate_under_enlargement(*H, d);
            res.additivity_error = std::max(res.additivity_error, d.relative_additivity_error());
            fv.segment(first, n) = d.fv_variation();
            proc_parts.push_back(d.martingale_ensemble().sample_at(snap));
            w_parts.push_back(W.sample_at(snap));
            x.segment(first, n) = xb;
        });
    } catch (const Refusal& e) {
        res.refused = true;
        res.refusal_undecided = e.undecided();
        res.refusal = e.what();
        return res;
    }
    res.mean_fv_variation = compensated_sum(fv) / static_cast<double>(cfg.paths);
    const PathEnsemble proc = stack_paths(proc_parts);
    const PathEnsemble w = stack_paths(w_parts);
    res.report = increment_regression_test(PathEnsemble(proc.grid(), proc.values(), ProcessLabel::derived,
                                                        SeedSpec{cfg.seed, 0}),
                                           w, x, cfg.pairs, basis::defaults(), cfg.threshold);
    return res;
}

// ---- Levy bridge ----

bool LevyDemoResult::pass() const
{
    const double crit = bonferroni_critical(config.threshold, static_cast<Index>(std::max<std::size_t>(mean_checks.size(), 1)));
    return report.pass && additivity_error <= 1e-12 &&
           std::all_of(mean_checks.begin(), mean_checks.end(), [&](const auto& c) { return std::abs(c.z) <= crit; });
}

LevyDemoResult run_levy_demo(const LevyDemoConfig& cfg)
{
    check_run(cfg.paths, cfg.batch);
    LevyDemoResult res;
    res.config = cfg;
    const JumpLaw jumps = parse_jump_law(cfg.jumps);
    const auto snap = snapshot_times({}, cfg.pairs, cfg.mean_check_times);
    const TimeGrid base = make_grid(1.0, cfg.grid, snap);
    const TimeGrid pg = base.extended_to(1.0);
    res.grid_nodes = pg.size();
    res.epsilon = 1.0 - base.back();

    check_within(snap, base.back(), "levy-demo");
    auto snap1 = snap;
    snap1.push_back(1.0);

    std::vector<PathEnsemble> m_parts, z_parts;
    for_batches(cfg.paths, cfg.batch, [&](Index first, Index n) {
        const PathEnsemble Z = simulate_compound_poisson(pg, cfg.rate, jumps, n, seed_for(cfg.seed, first));
        const VectorXd z1 = Z.at(1.0);
        const DecomposedProcess d = levy_bridge_compensator(Z, z1, 1.0, res.epsilon);
        res.additivity_error = std::max(res.additivity_error, d.relative_additivity_error());
        m_parts.push_back(d.martingale_ensemble().sample_at(snap));
        z_parts.push_back(Z.sample_at(snap1));
    });
    const PathEnsemble mt = stack_paths(m_parts);
    const PathEnsemble zfull = stack_paths(z_parts);
    const PathEnsemble z = zfull.sample_at(snap);
    const VectorXd z1 = zfull.at(1.0);

    std::vector<BasisFunction> b{basis::one(), {"Z_s", basis::state().f}, {"Z_1", basis::info().f}};
    res.report = increment_regression_test(PathEnsemble(mt.grid(), mt.values(), ProcessLabel::derived,
                                                        SeedSpec{cfg.seed, 0}),
                                           z, z1, cfg.pairs, b, cfg.threshold);
    for (double s : cfg.mean_check_times) {
        const VectorXd d = z1 - z.at(s);
        const auto mom = sample_moments(d);
        MeanCheck c;
        c.s = s;
        c.estimate = mom.mean;
        c.se = mom.se;
        c.expected = cfg.rate * jumps.mean() * (1.0 - s);
        c.z = mom.se > 0.0 ? (c.estimate - c.expected) / mom.se : (c.estimate == c.expected ? 0.0 : INFINITY);
        res.mean_checks.push_back(c);
    }
    return res;
}

// ---- look-ahead ----

LookaheadResult run_lookahead(const LookaheadConfig& cfg)
{
    check_run(cfg.paths, cfg.batch);
    if (cfg.levels.empty())
        throw InvalidArgument("lookahead-demo: no levels");
    LookaheadResult res;
    res.config = cfg;
    const int top = *std::max_element(cfg.levels.begin(), cfg.levels.end());
    if (top > 16)
        throw InvalidArgument("lookahead-demo: levels above 16 are not supported");
    const Index m = Index{1} << top;
    const TimeGrid grid(VectorXd::LinSpaced(m + 1, 0.0, 1.0));

    NonIntegratorSamples all;
    all.epsilon = cfg.epsilon;
    all.levels = cfg.levels;
    all.integral.assign(cfg.levels.size(), VectorXd(cfg.paths));
    all.sup.assign(cfg.levels.size(), VectorXd(cfg.paths));
    for_batches(cfg.paths, cfg.batch, [&](Index first, Index n) {
        const PathEnsemble W = simulate_brownian(grid, n, seed_for(cfg.seed, first));
        const auto part = non_integrator_samples(cfg.epsilon, cfg.levels, W);
        for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
            all.integral[l].segment(first, n) = part.integral[l];
            all.sup[l].segment(first, n) = part.sup[l];
        }
    });
    res.report = summarize(all, {cfg.delta});

    res.means_ok = true;
    for (const auto& lv : res.report.levels) {
        const double z = lv.se > 0.0 ? (lv.mean_integral - 1.0) / lv.se : 0.0;
        res.z_mean.push_back(z);
        res.means_ok = res.means_ok && std::abs(z) <= cfg.threshold;
    }
    res.decay_ok = true;
    for (std::size_t l = 0; l + 1 < res.report.levels.size(); ++l) {
        const auto& a = res.report.levels[l];
        const auto& b = res.report.levels[l + 1];
        const double factor = std::pow(cfg.decay_factor, (b.n - a.n) / 2.0);
        res.decay_ok = res.decay_ok && b.sup_exceed_prob[0] <= a.sup_exceed_prob[0] / factor;
    }
    return res;
}

// ---- log-density self-convergence ----

bool SelfConvergenceResult::pass() const
{
    if (ratios.empty())
        return false;
    for (double r : ratios)
        if (std::abs(r / config.expected_ratio - 1.0) > config.ratio_tol)
            return false;
    return true;
}

SelfConvergenceResult run_self_convergence(const SelfConvergenceConfig& cfg)
{
    check_run(cfg.paths, cfg.batch);
    if (cfg.levels.size() < 2 || !std::is_sorted(cfg.levels.begin(), cfg.levels.end()))
        throw InvalidArgument("self-convergence: need at least two increasing levels");
    const DeterministicIntegrand phi = parse_integrand(cfg.phi);
    const int top = cfg.levels.back();
    if (cfg.levels.front() < 1 || top > 16)
        throw InvalidArgument("self-convergence: levels must lie in [1, 16]");
    const Index m = Index{1} << top;
    if (!(cfg.t > 0.0 && cfg.t <= 1.0) || std::abs(cfg.t * std::ldexp(1.0, cfg.levels.front()) -
                                                    std::round(cfg.t * std::ldexp(1.0, cfg.levels.front()))) > 1e-12)
        throw InvalidArgument("self-convergence: t must be a node of the coarsest grid in (0, 1]");
    const TimeGrid fine(VectorXd::LinSpaced(m + 1, 0.0, 1.0));

    std::vector<TimeGrid> grids;
    std::vector<std::vector<Index>> picks;
    for (int level : cfg.levels) {
        const Index stride = Index{1} << (top - level);
        std::vector<Index> idx;
        for (Index i = 0; i <= m; i += stride)
            idx.push_back(i);
        grids.push_back(fine.subset(idx));
        picks.push_back(std::move(idx));
    }

    const std::size_t L = cfg.levels.size();
    std::vector<VectorXd> sq(L, VectorXd::Zero(cfg.paths));
    for_batches(cfg.paths, cfg.batch, [&](Index first, Index n) {
        const PathEnsemble W = simulate_brownian(fine, n, seed_for(cfg.seed, first));
        for (std::size_t l = 0; l < L; ++l) {
            const auto& idx = picks[l];
#pragma omp parallel for schedule(static)
            for (Index p = 0; p < n; ++p) {
                Eigen::RowVectorXd path(static_cast<Index>(idx.size()));
                for (std::size_t j = 0; j < idx.size(); ++j)
                    path[static_cast<Index>(j)] = W.values()(p, idx[j]);
                const double r = log_density_identity_residual(phi, grids[l], path, cfg.x, cfg.t);
                sq[l][first + p] = r * r;
            }
        }
    });

    SelfConvergenceResult res;
    res.config = cfg;
    for (std::size_t l = 0; l < L; ++l) {
        res.dt.push_back(std::ldexp(1.0, -cfg.levels[l]));
        res.rms.push_back(std::sqrt(compensated_sum(sq[l]) / static_cast<double>(cfg.paths)));
    }
    for (std::size_t l = 0; l + 1 < L; ++l)
        res.ratios.push_back(res.rms[l + 1] / res.rms[l]);
    return res;
}

// ---- Jeulin probe ----

JeulinResult run_jeulin_probe(const JeulinConfig& cfg)
{
    check_run(cfg.paths, 1);
    JeulinResult res;
    res.config = cfg;
    const DeterministicIntegrand A = parse_integrand(cfg.integrand);
    for (double s : {0.0, 0.25 * cfg.T, 0.5 * cfg.T, 0.75 * cfg.T})
        if (A(s) < 0.0)
            throw InvalidArgument("jeulin-probe: A must be nonnegative");
    res.integral = abs_integral(A, cfg.T);

    int depth = cfg.depth > 0 ? cfg.depth : cfg.finite_depth;
    switch (res.integral.status) {
    case LadderStatus::converged:
        res.expectation = "cauchy";
        break;
    case LadderStatus::diverges:
        res.expectation = "ceiling";
        if (cfg.depth == 0) {
            res.calibration = calibrate_jeulin_probe(A, cfg.T, cfg.ceiling, cfg.margin, cfg.max_depth);
            depth = res.calibration->depth;
        }
        break;
    case LadderStatus::undecided:
        res.expectation = "undecided";
        break;
    }

    const TimeGrid grid = build_horizon_grid(cfg.T, 0.5 * cfg.T, depth, cfg.substeps, cfg.n_base);
    const PathEnsemble Y = simulate_brownian(grid, cfg.paths, SeedSpec{cfg.seed, 0});
    JeulinProbeOptions opts;
    opts.T = cfg.T;
    opts.depth = depth;
    opts.cauchy_tol = cfg.cauchy_tol;
    opts.ceiling = cfg.ceiling;
    res.report = jeulin_lemma_probe(A, Y, opts);
    if (res.expectation == "cauchy")
        res.pass = res.report.fraction_cauchy >= cfg.required_fraction;
    else if (res.expectation == "ceiling")
        res.pass = res.report.fraction_over_ceiling >= cfg.required_fraction;
    return res;
}

// ---- classifier ----

std::vector<ClassificationVerdict> run_classify(const ClassifyConfig& cfg)
{
    std::vector<ClassificationVerdict> out;
    if (cfg.integrand) {
        out.push_back(classify(parse_integrand(*cfg.integrand), cfg.T, cfg.ladder));
        return out;
    }
    if (cfg.alphas.empty())
        throw InvalidArgument("classify: no alpha values");
    for (double a : cfg.alphas) {
        DeterministicIntegrand m;
        if (cfg.family == "jy")
            m = DeterministicIntegrand::jeulin_yor(a, cfg.T);
        else if (cfg.family == "power")
            m = DeterministicIntegrand::power(a, cfg.T);
        else
            throw InvalidArgument("classify: --family must be jy or power (use --integrand for others)");
        out.push_back(classify(m, cfg.T, cfg.ladder));
    }
    return out;
}

// ---- finite lab ----

FiniteDemoResult run_finite_demo(const FiniteDemoConfig& cfg)
{
    if (!cfg.instance && cfg.random == 0)
        throw InvalidArgument("finite-demo: give --instance or --random N");
    FiniteDemoResult res;
    res.config = cfg;
    if (cfg.instance) {
        res.instance = finite::load_instance(*cfg.instance);
        res.instance_report = finite::run_checks(*res.instance);
    }
    for (Index i = 0; i < cfg.random; ++i) {
        auto rng = SeedSpec{cfg.seed, 0}.engine_for(static_cast<std::uint64_t>(i));
        const auto inst = finite::random_instance(rng, cfg.options);
        const auto rep = finite::run_checks(inst);
        ++res.random_checked;
        if (!rep.pass()) {
            ++res.random_failed;
            if (!res.first_failing_index)
                res.first_failing_index = static_cast<std::uint64_t>(i);
        }
    }
    return res;
}

} // namespace enlarge::experiments
