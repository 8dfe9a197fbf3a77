// enlarge: command-line experiment runner.
//
// Exit codes: 0 pass, 2 statistical fail, 3 refusal or NOT_SEMIMARTINGALE,
// 4 UNDECIDED, 64 configuration error, 1 unexpected error.

#include "report_json.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace enlarge;
using namespace enlarge::experiments;
using nlohmann::json;
namespace fs = std::filesystem;

enum Exit : int { ok = 0, internal = 1, stat_fail = 2, refusal = 3, undecided = 4, config_error = 64 };

struct Common {
    std::string out = "out";
    int threads = 0;
    bool no_timestamp = false;
};

std::string utc_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

class Writer {
public:
    Writer(const Common& c, std::string command) : common_(c), command_(std::move(command))
    {
        fs::create_directories(common_.out);
    }

    void json_report(json config, json result, int exit_code) const
    {
        json j{{"command", command_}, {"config", std::move(config)}, {"exit_code", exit_code},
               {"result", std::move(result)}, {"version", 1}};
        if (!common_.no_timestamp)
            j["generated_at"] = utc_now();
        std::ofstream(path(command_ + ".json")) << j.dump(2) << '\n';
    }

    std::ofstream csv(const std::string& suffix) const
    {
        std::ofstream os(path(command_ + "_" + suffix + ".csv"));
        os.precision(17);
        return os;
    }

private:
    std::string path(const std::string& name) const { return (fs::path(common_.out) / name).string(); }

    const Common& common_;
    std::string command_;
};

Pairs parse_pairs(const std::vector<std::string>& raw)
{
    if (raw.empty())
        return default_pairs();
    Pairs out;
    for (const auto& p : raw) {
        const auto colon = p.find(':');
        if (colon == std::string::npos)
            throw InvalidArgument("pair '" + p + "' must look like s:t");
        std::size_t used1 = 0, used2 = 0;
        const std::string a = p.substr(0, colon), b = p.substr(colon + 1);
        double s = 0.0, t = 0.0;
        try {
            s = std::stod(a, &used1);
            t = std::stod(b, &used2);
        } catch (const std::exception&) {
            throw InvalidArgument("pair '" + p + "' must look like s:t");
        }
        if (used1 != a.size() || used2 != b.size())
            throw InvalidArgument("pair '" + p + "' must look like s:t");
        if (!(0.0 <= s && s < t))
            throw InvalidArgument("pair '" + p + "' needs 0 <= s < t");
        out.emplace_back(s, t);
    }
    return out;
}

void add_grid(CLI::App* sub, GridConfig& g)
{
    sub->add_option("--steps", g.steps, "Base steps on [0, T]")->check(CLI::PositiveNumber);
    sub->add_option("--ratio", g.refinement_ratio, "Geometric refinement ratio near T")->check(CLI::Range(0.01, 0.99));
    sub->add_option("--depth", g.depth, "Refinement depth (0: automatic)")->check(CLI::NonNegativeNumber);
}

void add_mc(CLI::App* sub, Index& paths, std::uint64_t& seed, double& threshold, Index& batch,
            std::vector<std::string>& pairs)
{
    sub->add_option("--paths", paths, "Ensemble size")->check(CLI::Range(Index{2}, Index{1} << 40));
    sub->add_option("--seed", seed, "Base seed");
    sub->add_option("--threshold", threshold, "Family-wise |z| threshold")->check(CLI::PositiveNumber);
    sub->add_option("--batch", batch, "Paths per batch (does not affect results)")->check(CLI::PositiveNumber);
    sub->add_option("--pair", pairs, "Test pair s:t (repeatable)");
}

void print_battery(const char* name, const MartingaleTestReport& r)
{
    std::cout << name << ": " << r.tests.size() << " tests, max |z| " << r.max_abs_z() << " vs critical "
              << r.critical << " -> " << (r.pass ? "PASS" : "FAIL") << '\n';
}

int cmd_bridge(const Common& c, BridgeDemoConfig cfg, const std::vector<std::string>& pairs)
{
    cfg.pairs = parse_pairs(pairs);
    const auto r = run_bridge_demo(cfg);
    const int code = r.pass() ? ok : stat_fail;
    Writer w(c, "bridge-demo");
    w.json_report(cfg, r, code);
    auto os = w.csv("tests");
    r.compensated.write_csv(os);
    auto neg = w.csv("uncompensated_tests");
    r.uncompensated.write_csv(neg);
    auto dc = w.csv("drift_constant");
    dc << "epsilon,mean,se,left_point_mean,truncation_bound,deviation,within\n";
    for (const auto& p : r.drift_constant)
        dc << p.epsilon << ',' << p.mean << ',' << p.se << ',' << p.left_point_mean << ',' << p.truncation_bound
           << ',' << p.deviation << ',' << (p.within ? 1 : 0) << '\n';
    print_battery("compensated", r.compensated);
    std::cout << "negative control |z| (X - W_s) " << r.negative_control_z() << '\n'
              << "symmetry slope " << r.symmetry.slope << " (se " << r.symmetry.se << ")\n"
              << "bridge-demo: " << (r.pass() ? "PASS" : "FAIL") << '\n';
    return code;
}

int cmd_drift(const Common& c, DriftSimConfig cfg, const std::vector<std::string>& pairs)
{
    cfg.pairs = parse_pairs(pairs);
    const auto r = run_drift_sim(cfg);
    int code = r.pass() ? ok : stat_fail;
    if (r.refused)
        code = r.refusal_undecided ? undecided : refusal;
    Writer w(c, "drift-sim");
    w.json_report(cfg, r, code);
    if (r.refused) {
        std::cout << "drift-sim: REFUSED: " << r.refusal << '\n';
        return code;
    }
    auto os = w.csv("tests");
    r.report.write_csv(os);
    print_battery("martingale part", r.report);
    std::cout << "additivity error " << r.additivity_error << "\ndrift-sim: " << (r.pass() ? "PASS" : "FAIL") << '\n';
    return code;
}

int cmd_classify(const Common& c, const ClassifyConfig& cfg)
{
    const auto verdicts = run_classify(cfg);
    int code = ok;
    for (const auto& v : verdicts) {
        if (v.verdict == Verdict::undecided)
            code = undecided;
        else if (v.verdict != Verdict::semimartingale && code != undecided)
            code = refusal;
    }
    Writer w(c, "classify");
    w.json_report(cfg, verdicts, code);
    auto os = w.csv("verdicts");
    os << ClassificationVerdict::csv_header() << '\n';
    for (const auto& v : verdicts) {
        os << v.csv_row() << '\n';
        std::cout << v.family << '(' << v.params << "): " << to_string(v.verdict) << "  jy=" << v.jy.value
                  << " (" << to_string(v.jy.status) << ")\n";
    }
    auto ladder = w.csv("ladder");
    ladder << "family,params,functional,rung,epsilon,truncated,increment,extrapolated,tail_model\n";
    for (const auto& v : verdicts)
        for (const auto& [name, lr] : {std::pair{"jy", &v.jy}, std::pair{"l2", &v.l2}})
            for (std::size_t k = 0; k < lr->rungs.size(); ++k) {
                const auto& g = lr->rungs[k];
                ladder << v.family << ",\"" << v.params << "\"," << name << ',' << k << ',' << g.epsilon << ','
                       << g.truncated << ',' << g.increment << ',' << g.extrapolated << ',' << g.tail_model << '\n';
            }
    return code;
}

int cmd_mg(const Common& c, MgTestConfig cfg, const std::vector<std::string>& pairs)
{
    cfg.pairs = parse_pairs(pairs);
    const auto r = run_mg_test(cfg);
    const int code = r.pass() ? ok : stat_fail;
    Writer w(c, "mg-test");
    w.json_report(cfg, r, code);
    auto os = w.csv("tests");
    r.report.write_csv(os);
    print_battery("mg-test", r.report);
    return code;
}

int cmd_levy(const Common& c, LevyDemoConfig cfg, const std::vector<std::string>& pairs)
{
    cfg.pairs = parse_pairs(pairs);
    const auto r = run_levy_demo(cfg);
    const int code = r.pass() ? ok : stat_fail;
    Writer w(c, "levy-demo");
    w.json_report(cfg, r, code);
    auto os = w.csv("tests");
    r.report.write_csv(os);
    print_battery("levy bridge martingale part", r.report);
    std::cout << "levy-demo: " << (r.pass() ? "PASS" : "FAIL") << '\n';
    return code;
}

int cmd_finite(const Common& c, const FiniteDemoConfig& cfg)
{
    const auto r = run_finite_demo(cfg);
    const int code = r.pass() ? ok : stat_fail;
    json res{{"random_checked", r.random_checked},
             {"random_failed", r.random_failed},
             {"first_failing_index", optional_json(r.first_failing_index)},
             {"pass", r.pass()}};
    if (r.instance) {
        const auto& inst = *r.instance;
        res["instance"] = inst;
        res["checks"] = *r.instance_report;
        const auto g = finite::discrete_girsanov(inst.martingale(), inst.setup());
        res["martingale"] = finite::process(inst.martingale());
        res["compensator"] = finite::process(g.compensator);
        res["compensated"] = finite::process(g.compensated);
        const auto jac = finite::jacod_discrete_checks(inst.space, inst.F, inst.X);
        res["law_of_X"] = {{"values", jac.values}, {"prob", finite::rationals(jac.law)}};
    }
    Writer w(c, "finite-demo");
    w.json_report(cfg, res, code);
    if (r.instance) {
        const auto& rep = *r.instance_report;
        std::cout << "absolute continuity " << rep.absolutely_continuous << ", Z qbar-martingale "
                  << rep.z_qbar_martingale << ", Girsanov G-martingale " << rep.girsanov_g_martingale << '\n';
    }
    if (cfg.random > 0)
        std::cout << "random instances: " << r.random_checked << " checked, " << r.random_failed << " failed\n";
    std::cout << "finite-demo: " << (r.pass() ? "PASS" : "FAIL") << '\n';
    return code;
}

int cmd_lookahead(const Common& c, const LookaheadConfig& cfg)
{
    const auto r = run_lookahead(cfg);
    const int code = r.pass() ? ok : stat_fail;
    Writer w(c, "lookahead-demo");
    w.json_report(cfg, r, code);
    auto os = w.csv("levels");
    os << "n,mean_integral,se,second_moment,delta,sup_exceed_prob,tail_bound\n";
    for (const auto& l : r.report.levels)
        for (std::size_t d = 0; d < l.deltas.size(); ++d)
            os << l.n << ',' << l.mean_integral << ',' << l.se << ',' << l.second_moment << ',' << l.deltas[d] << ','
               << l.sup_exceed_prob[d] << ',' << l.tail_bound[d] << '\n';
    for (const auto& l : r.report.levels)
        std::cout << "n=" << l.n << " E(H.W)_1=" << l.mean_integral << " (se " << l.se << ") P(sup|H|>" << cfg.delta
                  << ")=" << l.sup_exceed_prob[0] << '\n';
    std::cout << "lookahead-demo: " << (r.pass() ? "PASS" : "FAIL") << '\n';
    return code;
}

int cmd_jeulin(const Common& c, const JeulinConfig& cfg)
{
    const auto r = run_jeulin_probe(cfg);
    int code = r.pass ? ok : stat_fail;
    if (r.expectation == "undecided")
        code = undecided;
    Writer w(c, "jeulin-probe");
    w.json_report(cfg, r, code);
    auto os = w.csv("ladder");
    os << "rung,epsilon,mean_truncated,oracle\n";
    for (std::size_t k = 0; k < r.report.epsilons.size(); ++k)
        os << k << ',' << r.report.epsilons[k] << ',' << r.report.mean_truncated[k] << ',' << r.report.oracle[k]
           << '\n';
    std::cout << "int A: " << to_string(r.integral.status) << ", expected behaviour " << r.expectation
              << "\ncauchy fraction " << r.report.fraction_cauchy << ", over-ceiling fraction "
              << r.report.fraction_over_ceiling << " (ceiling " << r.report.options.ceiling << ", depth "
              << r.report.options.depth << ")\njeulin-probe: " << (r.pass ? "PASS" : "FAIL") << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Initial enlargement of filtrations: simulation, classification and exact finite checks"};
    app.require_subcommand(1);
    app.allow_config_extras(false);
    app.fallthrough();
    app.set_config("--config", "", "Read options from a TOML/INI file ([subcommand] sections)");

    Common common;
    app.add_option("--out", common.out, "Directory for reports");
    app.add_option("--threads", common.threads, "Worker cap (results do not depend on it)")
        ->check(CLI::NonNegativeNumber);
    app.add_flag("--no-timestamp", common.no_timestamp, "Omit the timestamp field from reports");

    std::function<int()> run;

    BridgeDemoConfig bridge;
    std::vector<std::string> bridge_pairs;
    auto* b = app.add_subcommand("bridge-demo", "Brownian bridge compensator and its certification");
    add_mc(b, bridge.paths, bridge.seed, bridge.threshold, bridge.batch, bridge_pairs);
    add_grid(b, bridge.grid);
    b->callback([&] { run = [&] { return cmd_bridge(common, bridge, bridge_pairs); }; });

    DriftSimConfig drift;
    std::vector<std::string> drift_pairs;
    auto* d = app.add_subcommand("drift-sim", "Compensate W (or m.W) for X = int phi dW");
    d->add_option("--phi", drift.phi, "Integrand defining X");
    d->add_option("--m", drift.m, "Compensate m.W instead of W");
    d->add_option("--H", drift.H, "Integrate H under the resulting decomposition");
    add_mc(d, drift.paths, drift.seed, drift.threshold, drift.batch, drift_pairs);
    add_grid(d, drift.grid);
    d->callback([&] { run = [&] { return cmd_drift(common, drift, drift_pairs); }; });

    ClassifyConfig cls;
    auto* k = app.add_subcommand("classify", "Semimartingale verdict for m.W after enlarging by W_T");
    k->add_option("--family", cls.family, "jy or power")->check(CLI::IsMember({"jy", "power"}));
    k->add_option("--alpha", cls.alphas, "Family parameter(s)");
    k->add_option("--T", cls.T, "Horizon")->check(CLI::PositiveNumber);
    k->add_option("--integrand", cls.integrand, "Integrand spec (overrides --family/--alpha)");
    k->add_option("--tol", cls.ladder.tol, "Relative ladder tolerance")->check(CLI::PositiveNumber);
    k->add_option("--max-rungs", cls.ladder.max_rungs, "Ladder rung budget")->check(CLI::Range(4, 1000));
    k->add_option("--ceiling", cls.ladder.ceiling, "Divergence ceiling")->check(CLI::PositiveNumber);
    k->callback([&] { run = [&] { return cmd_classify(common, cls); }; });

    MgTestConfig mg;
    std::vector<std::string> mg_pairs;
    auto* g = app.add_subcommand("mg-test", "Increment-regression martingale test");
    g->add_option("--process", mg.process, "brownian or compensated")
        ->check(CLI::IsMember({"brownian", "compensated"}));
    g->add_option("--input", mg.input, "Path CSV (path,t,value) to test instead of simulating")
        ->check(CLI::ExistingFile);
    g->add_option("--x-time", mg.x_time, "Node whose value is X for --input");
    g->add_option("--basis", mg.basis, "Basis labels: 1 W_s X W_s*X W_s^2 X-W_s");
    add_mc(g, mg.paths, mg.seed, mg.threshold, mg.batch, mg_pairs);
    add_grid(g, mg.grid);
    g->callback([&] { run = [&] { return cmd_mg(common, mg, mg_pairs); }; });

    LevyDemoConfig levy;
    std::vector<std::string> levy_pairs;
    auto* l = app.add_subcommand("levy-demo", "Compound Poisson bridge compensator");
    l->add_option("--rate", levy.rate, "Jump intensity")->check(CLI::PositiveNumber);
    l->add_option("--jumps", levy.jumps, "Jump law, e.g. pm:1 or normal:0,1");
    add_mc(l, levy.paths, levy.seed, levy.threshold, levy.batch, levy_pairs);
    add_grid(l, levy.grid);
    l->callback([&] { run = [&] { return cmd_levy(common, levy, levy_pairs); }; });

    FiniteDemoConfig fin;
    auto* f = app.add_subcommand("finite-demo", "Exact checks on finite probability spaces");
    f->add_option("--instance", fin.instance, "Instance file")->check(CLI::ExistingFile);
    f->add_option("--random", fin.random, "Number of random instances")->check(CLI::NonNegativeNumber);
    f->add_option("--seed", fin.seed, "Seed for random instances");
    f->add_option("--max-outcomes", fin.options.max_outcomes, "Random instance size")->check(CLI::Range(1, 12));
    f->add_option("--max-stages", fin.options.max_stages, "Random instance depth")->check(CLI::Range(1, 6));
    f->callback([&] { run = [&] { return cmd_finite(common, fin); }; });

    LookaheadConfig look;
    auto* h = app.add_subcommand("lookahead-demo", "Look-ahead integrands that break the integrator property");
    h->add_option("--epsilon", look.epsilon, "Look-ahead window")->check(CLI::PositiveNumber);
    h->add_option("--level", look.levels, "Dyadic level(s)")->check(CLI::Range(1, 16));
    h->add_option("--paths", look.paths, "Ensemble size")->check(CLI::Range(Index{2}, Index{1} << 40));
    h->add_option("--seed", look.seed, "Base seed");
    h->add_option("--batch", look.batch, "Paths per batch")->check(CLI::PositiveNumber);
    h->add_option("--delta", look.delta, "Sup threshold")->check(CLI::PositiveNumber);
    h->add_option("--threshold", look.threshold, "|z| threshold on the means")->check(CLI::PositiveNumber);
    h->add_option("--decay", look.decay_factor, "Required decay per two levels")->check(CLI::PositiveNumber);
    h->callback([&] { run = [&] { return cmd_lookahead(common, look); }; });

    JeulinConfig jl;
    auto* j = app.add_subcommand("jeulin-probe", "Pathwise truncation ladders of int R A ds");
    j->add_option("--integrand", jl.integrand, "A (nonnegative)");
    j->add_option("--T", jl.T, "Horizon")->check(CLI::PositiveNumber);
    j->add_option("--paths", jl.paths, "Ensemble size")->check(CLI::Range(Index{2}, Index{1} << 30));
    j->add_option("--seed", jl.seed, "Base seed");
    j->add_option("--substeps", jl.substeps, "Grid steps per octave")->check(CLI::Range(1, 64));
    j->add_option("--n-base", jl.n_base, "Uniform steps away from T")->check(CLI::PositiveNumber);
    j->add_option("--ceiling", jl.ceiling, "Ceiling for divergent A")->check(CLI::PositiveNumber);
    j->add_option("--margin", jl.margin, "Calibration margin over the ceiling")->check(CLI::Range(1.0, 1e6));
    j->add_option("--depth", jl.depth, "Rung depth (0: calibrate)")->check(CLI::NonNegativeNumber);
    j->add_option("--finite-depth", jl.finite_depth, "Depth for finite int A")->check(CLI::Range(4, 1000));
    j->add_option("--max-depth", jl.max_depth, "Calibration depth budget")->check(CLI::Range(4, 1000));
    j->add_option("--cauchy-tol", jl.cauchy_tol, "Relative Cauchy tolerance")->check(CLI::PositiveNumber);
    j->add_option("--required-fraction", jl.required_fraction, "Fraction of paths that must comply")
        ->check(CLI::Range(0.0, 1.0));
    j->callback([&] { run = [&] { return cmd_jeulin(common, jl); }; });

    for (auto* sub : app.get_subcommands({}))
        sub->configurable();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : config_error;
    }

#ifdef _OPENMP
    if (common.threads > 0)
        omp_set_num_threads(common.threads);
#endif

    try {
        return run();
    } catch (const InvalidArgument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return config_error;
    } catch (const Refusal& e) {
        std::cerr << "refused: " << e.what() << '\n';
        return e.undecided() ? undecided : refusal;
    } catch (const NonIntegrable& e) {
        std::cerr << "refused: " << e.what() << '\n';
        return refusal;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return internal;
    }
}
