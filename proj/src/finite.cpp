#include "enlarge/finite.hpp"

#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace enlarge::finite {

namespace {

void canonicalize(std::vector<std::vector<Index>>& blocks)
{
    for (auto& b : blocks)
        std::sort(b.begin(), b.end());
    std::sort(blocks.begin(), blocks.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> words(const std::string& s)
{
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;)
        out.push_back(w);
    return out;
}

} // namespace

Partition::Partition(Index n_outcomes, std::vector<std::vector<Index>> blocks) : blocks_(std::move(blocks))
{
    if (n_outcomes < 1)
        throw InvalidArgument("partition: empty outcome set");
    block_of_.assign(static_cast<std::size_t>(n_outcomes), -1);
    for (const auto& b : blocks_)
        if (b.empty())
            throw InvalidArgument("partition: empty block");
    canonicalize(blocks_);
    for (Index k = 0; k < size(); ++k)
        for (Index w : blocks_[static_cast<std::size_t>(k)]) {
            if (w < 0 || w >= n_outcomes)
                throw InvalidArgument("partition: outcome index out of range");
            if (block_of_[static_cast<std::size_t>(w)] != -1)
                throw InvalidArgument("partition: blocks overlap");
            block_of_[static_cast<std::size_t>(w)] = k;
        }
    if (std::find(block_of_.begin(), block_of_.end(), -1) != block_of_.end())
        throw InvalidArgument("partition: blocks do not cover the outcomes");
}

Partition Partition::trivial(Index n_outcomes)
{
    std::vector<Index> all(static_cast<std::size_t>(n_outcomes));
    std::iota(all.begin(), all.end(), Index{0});
    return Partition(n_outcomes, {all});
}

Partition Partition::discrete(Index n_outcomes)
{
    std::vector<std::vector<Index>> blocks;
    for (Index w = 0; w < n_outcomes; ++w)
        blocks.push_back({w});
    return Partition(n_outcomes, std::move(blocks));
}

Partition Partition::from_labels(const std::vector<long>& labels)
{
    std::map<long, std::vector<Index>> sets;
    for (std::size_t w = 0; w < labels.size(); ++w)
        sets[labels[w]].push_back(static_cast<Index>(w));
    std::vector<std::vector<Index>> blocks;
    for (auto& [label, set] : sets)
        blocks.push_back(std::move(set));
    return Partition(static_cast<Index>(labels.size()), std::move(blocks));
}

bool Partition::refines(const Partition& coarser) const
{
    if (coarser.n_outcomes() != n_outcomes())
        return false;
    for (const auto& b : blocks_)
        for (Index w : b)
            if (coarser.block_of(w) != coarser.block_of(b.front()))
                return false;
    return true;
}

bool operator==(const Partition& a, const Partition& b)
{
    return a.blocks_ == b.blocks_;
}

Partition join(const Partition& a, const Partition& b)
{
    if (a.n_outcomes() != b.n_outcomes())
        throw InvalidArgument("join: partitions live on different spaces");
    std::map<std::pair<Index, Index>, std::vector<Index>> cells;
    for (Index w = 0; w < a.n_outcomes(); ++w)
        cells[{a.block_of(w), b.block_of(w)}].push_back(w);
    std::vector<std::vector<Index>> blocks;
    for (auto& [key, cell] : cells)
        blocks.push_back(std::move(cell));
    return Partition(a.n_outcomes(), std::move(blocks));
}

FiniteFiltration::FiniteFiltration(std::vector<Partition> stages) : stages_(std::move(stages))
{
    if (stages_.empty())
        throw InvalidArgument("filtration: no stages");
    for (std::size_t k = 1; k < stages_.size(); ++k)
        if (!stages_[k].refines(stages_[k - 1]))
            throw InvalidArgument("filtration: stage " + std::to_string(k) + " does not refine stage " +
                                  std::to_string(k - 1));
}

FiniteFiltration FiniteFiltration::constant(const Partition& p, Index n_stages)
{
    return FiniteFiltration(std::vector<Partition>(static_cast<std::size_t>(n_stages), p));
}

FiniteFiltration join_filtrations(const FiniteFiltration& F, const FiniteFiltration& H)
{
    if (F.n_stages() != H.n_stages() || F.n_outcomes() != H.n_outcomes())
        throw InvalidArgument("join_filtrations: mismatched spaces or stage counts");
    std::vector<Partition> out;
    for (Index k = 0; k < F.n_stages(); ++k)
        out.push_back(join(F.stage(k), H.stage(k)));
    return FiniteFiltration(std::move(out));
}

FiniteFiltration initial_enlargement(const FiniteFiltration& F, const std::vector<long>& X)
{
    if (static_cast<Index>(X.size()) != F.n_outcomes())
        throw InvalidArgument("initial_enlargement: X must label every outcome");
    return join_filtrations(F, FiniteFiltration::constant(Partition::from_labels(X), F.n_stages()));
}

Rational parse_rational(const std::string& s)
{
    const auto slash = s.find('/');
    try {
        std::size_t used = 0;
        if (slash == std::string::npos) {
            const long long v = std::stoll(s, &used);
            if (used != s.size())
                throw InvalidArgument("");
            return Rational(v);
        }
        const std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        const long long n = std::stoll(num, &used);
        if (used != num.size())
            throw InvalidArgument("");
        const long long d = std::stoll(den, &used);
        if (used != den.size() || d == 0)
            throw InvalidArgument("");
        return Rational(n, d);
    } catch (const std::exception&) {
        throw InvalidArgument("not a rational: '" + s + "'");
    }
}

std::string to_string(const Rational& q)
{
    return numerator(q).str() + "/" + denominator(q).str();
}

FiniteFiltration FiniteInstance::information() const
{
    return H ? *H : FiniteFiltration::constant(Partition::from_labels(X), F.n_stages());
}

ProductSetup<Rational> FiniteInstance::setup() const
{
    return make_product_setup(space, F, information(), R);
}

Process<Rational> FiniteInstance::martingale() const
{
    Process<Rational> m;
    for (Index k = 0; k < F.n_stages(); ++k)
        m.push_back(conditional_expectation<Rational>(xi, F.stage(k), space.prob).value);
    return m;
}

namespace {

std::vector<std::vector<Index>> parse_blocks(const std::string& text, const std::map<std::string, Index>& index,
                                             const std::string& key)
{
    std::vector<std::vector<Index>> blocks;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find('{', pos);
        if (open == std::string::npos) {
            if (!trim(text.substr(pos)).empty())
                throw InvalidArgument(key + ": text outside braces");
            break;
        }
        if (!trim(text.substr(pos, open - pos)).empty())
            throw InvalidArgument(key + ": text outside braces");
        const auto close = text.find('}', open);
        if (close == std::string::npos)
            throw InvalidArgument(key + ": unbalanced brace");
        std::vector<Index> b;
        for (const auto& w : words(text.substr(open + 1, close - open - 1))) {
            const auto it = index.find(w);
            if (it == index.end())
                throw InvalidArgument(key + ": unknown outcome '" + w + "'");
            b.push_back(it->second);
        }
        blocks.push_back(std::move(b));
        pos = close + 1;
    }
    return blocks;
}

Vec<Rational> parse_rational_vector(const std::string& text, Index n, const std::string& key)
{
    const auto ws = words(text);
    if (static_cast<Index>(ws.size()) != n)
        throw InvalidArgument(key + ": expected " + std::to_string(n) + " entries");
    Vec<Rational> v(n);
    for (Index i = 0; i < n; ++i)
        v[i] = parse_rational(ws[static_cast<std::size_t>(i)]);
    return v;
}

FiniteFiltration stages_to_filtration(const std::map<long, std::string>& stages, Index n,
                                      const std::map<std::string, Index>& index, const std::string& key)
{
    std::vector<Partition> parts;
    long expect = 0;
    for (const auto& [k, text] : stages) {
        if (k != expect++)
            throw InvalidArgument(key + ": stages must be numbered 0, 1, ... without gaps");
        parts.emplace_back(n, parse_blocks(text, index, key + " " + std::to_string(k)));
    }
    return FiniteFiltration(std::move(parts));
}

} // namespace

FiniteInstance parse_instance(std::istream& in)
{
    std::map<std::string, std::string> simple;
    std::map<long, std::string> f_stages, h_stages;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidArgument("instance line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto kw = words(key);
        auto stage_index = [&](const std::string& s) {
            try {
                std::size_t used = 0;
                const long k = std::stol(s, &used);
                if (used != s.size() || k < 0)
                    throw InvalidArgument("");
                return k;
            } catch (const std::exception&) {
                throw InvalidArgument("instance line " + std::to_string(lineno) + ": bad stage index");
            }
        };
        std::map<long, std::string>* target = nullptr;
        long k = 0;
        if (kw.size() == 2 && kw[0] == "stage") {
            target = &f_stages;
            k = stage_index(kw[1]);
        } else if (kw.size() == 3 && kw[0] == "H" && kw[1] == "stage") {
            target = &h_stages;
            k = stage_index(kw[2]);
        } else if (kw.size() == 1 && (key == "outcomes" || key == "prob" || key == "X" || key == "xi" || key == "R")) {
            if (!simple.emplace(key, value).second)
                throw InvalidArgument("instance: duplicate key '" + key + "'");
            continue;
        } else {
            throw InvalidArgument("instance line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        if (!target->emplace(k, value).second)
            throw InvalidArgument("instance: duplicate stage " + std::to_string(k));
    }

    for (const char* required : {"outcomes", "prob", "X", "xi"})
        if (!simple.count(required))
            throw InvalidArgument(std::string("instance: missing key '") + required + "'");
    if (f_stages.empty())
        throw InvalidArgument("instance: no filtration stages");

    const auto labels = words(simple["outcomes"]);
    const Index n = static_cast<Index>(labels.size());
    std::map<std::string, Index> index;
    for (Index i = 0; i < n; ++i)
        if (!index.emplace(labels[static_cast<std::size_t>(i)], i).second)
            throw InvalidArgument("instance: duplicate outcome label");

    FiniteInstance inst;
    inst.space = FiniteOutcomeSpace<Rational>(labels, parse_rational_vector(simple["prob"], n, "prob"));
    inst.F = stages_to_filtration(f_stages, n, index, "stage");
    const auto xw = words(simple["X"]);
    if (static_cast<Index>(xw.size()) != n)
        throw InvalidArgument("X: expected one label per outcome");
    for (const auto& w : xw) {
        try {
            std::size_t used = 0;
            inst.X.push_back(std::stol(w, &used));
            if (used != w.size())
                throw InvalidArgument("");
        } catch (const std::exception&) {
            throw InvalidArgument("X: labels must be integers");
        }
    }
    inst.xi = parse_rational_vector(simple["xi"], n, "xi");
    if (simple.count("R"))
        inst.R = parse_rational_vector(simple["R"], n, "R");
    if (!h_stages.empty()) {
        inst.H = stages_to_filtration(h_stages, n, index, "H stage");
        if (inst.H->n_stages() != inst.F.n_stages())
            throw InvalidArgument("instance: H and F need the same number of stages");
    }
    return inst;
}

FiniteInstance load_instance(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw InvalidArgument("cannot open instance file '" + path + "'");
    return parse_instance(in);
}

FiniteLabReport run_checks(const FiniteInstance& inst)
{
    FiniteLabReport r;
    const auto s = inst.setup();
    r.absolutely_continuous = check_absolute_continuity(s).holds;
    const auto M = inst.martingale();
    r.m_f_martingale = is_martingale(M, inst.F, inst.space.prob);
    if (r.absolutely_continuous) {
        const auto Z = likelihood_process(s);
        r.z_qbar_martingale = is_qbar_martingale(s, Z);
        r.girsanov_g_martingale = discrete_girsanov(M, s).g_martingale;
    }
    const auto j = jacod_discrete_checks(inst.space, inst.F, inst.X);
    r.jacod_absolutely_continuous = j.absolutely_continuous;
    r.jacod_countable_reduction = j.countable_reduction_holds;
    return r;
}

} // namespace enlarge::finite
