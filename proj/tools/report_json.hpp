#pragma once

// JSON serializers for configs and results (found by ADL from nlohmann::json).

#include "enlarge/experiments.hpp"

#include <json.hpp>

namespace enlarge {

using nlohmann::json;

inline void to_json(json& j, const SeedSpec& s)
{
    j = json{{"base_seed", s.base_seed}, {"first_path", s.first_path}};
}

inline void to_json(json& j, const TestRecord& r)
{
    j = json{{"s", r.s}, {"t", r.t}, {"basis", r.basis}, {"estimate", r.estimate}, {"se", r.se}, {"z", r.z}};
}

inline void to_json(json& j, const MartingaleTestReport& r)
{
    j = json{{"n_paths", r.n_paths},     {"correction", r.correction}, {"threshold", r.threshold},
             {"critical", r.critical},   {"max_abs_z", r.max_abs_z()}, {"pass", r.pass},
             {"seeds", r.seeds},         {"tests", r.tests}};
}

inline void to_json(json& j, const SymmetryReport& r)
{
    j = json{{"s", r.s},   {"t", r.t},         {"T", r.T},           {"slope", r.slope},     {"se", r.se},
             {"z", r.z},   {"expected", r.expected}, {"n_paths", r.n_paths}, {"pass", r.pass()}};
}

inline void to_json(json& j, const QuadraticVariationReport& r)
{
    j = json{{"t", r.t},           {"expected", r.expected}, {"mean", r.mean}, {"se", r.se},
             {"rel_error", r.rel_error}, {"rel_tol", r.rel_tol}, {"pass", r.pass}};
}

inline void to_json(json& j, const CharacterizationCheck& c)
{
    j = json{{"name", c.name}, {"s", c.s}, {"t", c.t}, {"estimate", c.estimate},
             {"expected", c.expected}, {"se", c.se}, {"z", c.z}};
}

inline void to_json(json& j, const LevyCharacterizationReport& r)
{
    j = json{{"n_paths", r.n_paths}, {"threshold", r.threshold}, {"critical", r.critical},
             {"pass", r.pass}, {"checks", r.checks}};
}

inline void to_json(json& j, const LadderOptions& o)
{
    j = json{{"tol", o.tol}, {"max_rungs", o.max_rungs}, {"ceiling", o.ceiling},
             {"eps0_fraction", o.eps0_fraction}, {"undecided_margin", o.undecided_margin}};
}

inline void to_json(json& j, const LadderRung& r)
{
    j = json{{"epsilon", r.epsilon},         {"truncated", r.truncated},   {"increment", r.increment},
             {"extrapolated", r.extrapolated}, {"tail_model", r.tail_model}, {"tail_exponent", r.tail_exponent}};
}

inline void to_json(json& j, const LadderResult& r)
{
    j = json{{"status", to_string(r.status)}, {"value", r.value}, {"rungs_used", r.rungs_used()},
             {"reason", r.reason}, {"rungs", r.rungs}};
}

inline void to_json(json& j, const ClassificationVerdict& v)
{
    j = json{{"family", v.family}, {"params", v.params}, {"T", v.T},
             {"verdict", to_string(v.verdict)}, {"jy", v.jy}, {"l2", v.l2}};
}

inline void to_json(json& j, const NonIntegratorLevel& l)
{
    j = json{{"n", l.n},
             {"mean_integral", l.mean_integral},
             {"se", l.se},
             {"second_moment", l.second_moment},
             {"deltas", l.deltas},
             {"sup_exceed_prob", l.sup_exceed_prob},
             {"tail_bound", l.tail_bound}};
}

inline void to_json(json& j, const NonIntegratorReport& r)
{
    j = json{{"epsilon", r.epsilon}, {"n_paths", r.n_paths}, {"levels", r.levels}};
}

inline void to_json(json& j, const JeulinProbeOptions& o)
{
    j = json{{"T", o.T}, {"eps0_fraction", o.eps0_fraction}, {"depth", o.depth}, {"cauchy_tol", o.cauchy_tol},
             {"cauchy_window", o.cauchy_window}, {"ceiling", o.ceiling}};
}

inline void to_json(json& j, const JeulinProbeReport& r)
{
    j = json{{"integrand", r.integrand},
             {"n_paths", r.n_paths},
             {"options", r.options},
             {"fraction_cauchy", r.fraction_cauchy},
             {"fraction_over_ceiling", r.fraction_over_ceiling},
             {"min_final", r.min_final},
             {"median_final", r.median_final},
             {"epsilons", r.epsilons},
             {"mean_truncated", r.mean_truncated},
             {"oracle", r.oracle}};
}

inline void to_json(json& j, const JeulinCalibration& c)
{
    j = json{{"depth", c.depth}, {"ceiling", c.ceiling}, {"oracle_at_depth", c.oracle_at_depth}};
}

} // namespace enlarge

namespace enlarge::finite {

inline void to_json(json& j, const RandomInstanceOptions& o)
{
    j = json{{"max_outcomes", o.max_outcomes}, {"max_stages", o.max_stages}, {"max_weight", o.max_weight},
             {"max_label", o.max_label},       {"max_xi", o.max_xi},         {"zero_weight_prob", o.zero_weight_prob}};
}

inline json rationals(const Vec<Rational>& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i)
        a.push_back(to_string(v[i]));
    return a;
}

inline json process(const Process<Rational>& p)
{
    json a = json::array();
    for (const auto& v : p)
        a.push_back(rationals(v));
    return a;
}

inline json filtration(const FiniteFiltration& F, const std::vector<std::string>& labels)
{
    json stages = json::array();
    for (const auto& part : F.stages()) {
        json blocks = json::array();
        for (const auto& b : part.blocks()) {
            json blk = json::array();
            for (Index w : b)
                blk.push_back(labels[static_cast<std::size_t>(w)]);
            blocks.push_back(blk);
        }
        stages.push_back(blocks);
    }
    return stages;
}

inline void to_json(json& j, const FiniteInstance& inst)
{
    j = json{{"outcomes", inst.space.outcomes},
             {"prob", rationals(inst.space.prob)},
             {"F", filtration(inst.F, inst.space.outcomes)},
             {"X", inst.X},
             {"xi", rationals(inst.xi)}};
    if (inst.H)
        j["H"] = filtration(*inst.H, inst.space.outcomes);
    if (inst.R)
        j["R"] = rationals(*inst.R);
}

inline void to_json(json& j, const FiniteLabReport& r)
{
    j = json{{"absolutely_continuous", r.absolutely_continuous},
             {"z_qbar_martingale", r.z_qbar_martingale},
             {"girsanov_g_martingale", r.girsanov_g_martingale},
             {"m_f_martingale", r.m_f_martingale},
             {"jacod_absolutely_continuous", r.jacod_absolutely_continuous},
             {"jacod_countable_reduction", r.jacod_countable_reduction},
             {"pass", r.pass()}};
}

} // namespace enlarge::finite

namespace enlarge::experiments {

inline json pairs_json(const Pairs& p)
{
    json a = json::array();
    for (const auto& [s, t] : p)
        a.push_back(json::array({s, t}));
    return a;
}

inline void to_json(json& j, const GridConfig& g)
{
    j = json{{"steps", g.steps}, {"refinement_ratio", g.refinement_ratio}, {"depth", g.depth}};
}

inline void to_json(json& j, const BridgeDemoConfig& c)
{
    j = json{{"paths", c.paths},
             {"grid", c.grid},
             {"seed", c.seed},
             {"threshold", c.threshold},
             {"batch", c.batch},
             {"pairs", pairs_json(c.pairs)},
             {"levy_times", c.levy_times},
             {"qv_time", c.qv_time},
             {"symmetry_s", c.symmetry_s},
             {"symmetry_t", c.symmetry_t},
             {"drift_epsilons", c.drift_epsilons},
             {"negative_control_z", c.negative_control_z}};
}

inline void to_json(json& j, const DriftConstantPoint& p)
{
    j = json{{"epsilon", p.epsilon},
             {"mean", p.mean},
             {"se", p.se},
             {"left_point_mean", p.left_point_mean},
             {"truncation_bound", p.truncation_bound},
             {"deviation", p.deviation},
             {"within", p.within}};
}

inline void to_json(json& j, const Correlation& c) { j = json{{"r", c.r}, {"se", c.se}}; }

inline void to_json(json& j, const BridgeDemoResult& r)
{
    j = json{{"grid_nodes", r.grid_nodes},
             {"epsilon_exclusion", r.epsilon_exclusion},
             {"compensated", r.compensated},
             {"uncompensated", r.uncompensated},
             {"negative_control_z", r.negative_control_z()},
             {"symmetry", r.symmetry},
             {"qv_compensated", r.qv_compensated},
             {"qv_raw", r.qv_raw},
             {"levy_characterization", r.levy},
             {"drift_constant", r.drift_constant},
             {"drift_constant_ok", r.drift_constant_ok()},
             {"corr_compensated_x", r.corr_compensated_x},
             {"corr_raw_x", r.corr_raw_x},
             {"additivity_error", r.additivity_error},
             {"mean_fv_variation", r.mean_fv_variation},
             {"pass", r.pass()}};
}

template <typename T>
json optional_json(const std::optional<T>& v)
{
    return v ? json(*v) : json(nullptr);
}

inline void to_json(json& j, const DriftSimConfig& c)
{
    j = json{{"phi", c.phi},          {"m", optional_json(c.m)},   {"H", optional_json(c.H)},
             {"paths", c.paths},      {"grid", c.grid},            {"seed", c.seed},
             {"threshold", c.threshold}, {"batch", c.batch},       {"pairs", pairs_json(c.pairs)}};
}

inline void to_json(json& j, const DriftSimResult& r)
{
    j = json{{"grid_nodes", r.grid_nodes},
             {"info_horizon", r.info_horizon},
             {"epsilon_exclusion", r.epsilon_exclusion},
             {"verdict", optional_json(r.verdict)},
             {"refused", r.refused},
             {"refusal_undecided", r.refusal_undecided},
             {"refusal", r.refusal},
             {"additivity_error", r.additivity_error},
             {"mean_fv_variation", r.mean_fv_variation},
             {"pass", r.pass()}};
    if (!r.refused)
        j["martingale_test"] = r.report;
}

inline void to_json(json& j, const MgTestConfig& c)
{
    j = json{{"process", c.process}, {"input", optional_json(c.input)}, {"x_time", optional_json(c.x_time)},
             {"basis", c.basis},     {"paths", c.paths},                {"grid", c.grid},
             {"seed", c.seed},       {"threshold", c.threshold},        {"batch", c.batch},
             {"pairs", pairs_json(c.pairs)}};
}

inline void to_json(json& j, const MgTestResult& r)
{
    j = json{{"grid_nodes", r.grid_nodes}, {"basis", r.basis}, {"martingale_test", r.report}, {"pass", r.pass()}};
}

inline void to_json(json& j, const LevyDemoConfig& c)
{
    j = json{{"rate", c.rate},   {"jumps", c.jumps},         {"paths", c.paths},
             {"grid", c.grid},   {"seed", c.seed},           {"threshold", c.threshold},
             {"batch", c.batch}, {"pairs", pairs_json(c.pairs)}, {"mean_check_times", c.mean_check_times}};
}

inline void to_json(json& j, const MeanCheck& m)
{
    j = json{{"s", m.s}, {"estimate", m.estimate}, {"expected", m.expected}, {"se", m.se}, {"z", m.z}};
}

inline void to_json(json& j, const LevyDemoResult& r)
{
    j = json{{"grid_nodes", r.grid_nodes},  {"epsilon", r.epsilon},       {"martingale_test", r.report},
             {"mean_checks", r.mean_checks}, {"additivity_error", r.additivity_error}, {"pass", r.pass()}};
}

inline void to_json(json& j, const LookaheadConfig& c)
{
    j = json{{"epsilon", c.epsilon}, {"levels", c.levels}, {"paths", c.paths},         {"seed", c.seed},
             {"batch", c.batch},     {"delta", c.delta},   {"threshold", c.threshold}, {"decay_factor", c.decay_factor}};
}

inline void to_json(json& j, const LookaheadResult& r)
{
    j = json{{"report", r.report}, {"z_mean", r.z_mean}, {"means_ok", r.means_ok},
             {"decay_ok", r.decay_ok}, {"pass", r.pass()}};
}

inline void to_json(json& j, const JeulinConfig& c)
{
    j = json{{"integrand", c.integrand}, {"T", c.T},
             {"paths", c.paths},         {"seed", c.seed},
             {"substeps", c.substeps},   {"n_base", c.n_base},
             {"ceiling", c.ceiling},     {"margin", c.margin},
             {"depth", c.depth},         {"finite_depth", c.finite_depth},
             {"max_depth", c.max_depth}, {"cauchy_tol", c.cauchy_tol},
             {"required_fraction", c.required_fraction}};
}

inline void to_json(json& j, const JeulinResult& r)
{
    j = json{{"integral", r.integral},
             {"expectation", r.expectation},
             {"calibration", optional_json(r.calibration)},
             {"probe", r.report},
             {"pass", r.pass}};
}

inline void to_json(json& j, const ClassifyConfig& c)
{
    j = json{{"family", c.family}, {"alphas", c.alphas}, {"T", c.T},
             {"integrand", optional_json(c.integrand)}, {"ladder", c.ladder}};
}

inline void to_json(json& j, const FiniteDemoConfig& c)
{
    j = json{{"instance", optional_json(c.instance)}, {"random", c.random}, {"seed", c.seed}, {"options", c.options}};
}

} // namespace enlarge::experiments
