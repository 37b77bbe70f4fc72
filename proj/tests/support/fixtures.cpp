#include "fixtures.hpp"

#include "graphs3/text.hpp"
#include "graphs3/trajectory_io.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace fixtures {

namespace fs = std::filesystem;

fs::path data_dir() { return fs::path(GRAPHS3_DATA_DIR); }
fs::path sample_dir() { return data_dir() / "sample"; }

TextualGraph sample_graph() { return TextualGraph::load(sample_dir() / "graph.tsv", GraphFormat::tsv); }

Query sample_query() { return load_queries(sample_dir() / "questions.jsonl").at(0); }

std::vector<Action> sample_actions() {
    std::vector<Action> out;
    for (auto& a : dump_actions(read_trajectory_dump(sample_dir() / "trajectory.jsonl").at(0))) out.push_back(*a);
    return out;
}

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("graphs3-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::vector<TripleText> random_triples(std::uint64_t seed, std::size_t triples, std::size_t entities,
                                       std::size_t relations) {
    std::mt19937_64 rng(seed);
    std::vector<TripleText> out;
    out.reserve(triples);
    for (std::size_t i = 0; i < triples; ++i) {
        out.push_back(TripleText{"e" + std::to_string(rng() % entities), "r" + std::to_string(rng() % relations),
                                 "e" + std::to_string(rng() % entities)});
    }
    return out;
}

TreeWorld tree_world(std::uint64_t seed, std::size_t questions, std::size_t fanout, std::size_t depth) {
    std::mt19937_64 rng(seed);
    TreeWorld w;
    for (std::size_t q = 0; q < questions; ++q) {
        const std::string root = "Root " + std::to_string(q);
        // breadth-first so every node's children are contiguous
        std::vector<std::string> level{root};
        for (std::size_t d = 0; d < depth; ++d) {
            std::vector<std::string> next;
            for (const auto& parent : level)
                for (std::size_t c = 0; c < fanout; ++c) {
                    std::string child = parent + "." + std::to_string(c);
                    w.triples.push_back(TripleText{parent, "rel_" + std::to_string(c), child});
                    next.push_back(std::move(child));
                }
            level = std::move(next);
        }

        const std::size_t hops = q % std::min<std::size_t>(depth, 3) + 1;
        std::vector<Action> script;
        std::string node = root;
        std::string question;
        std::vector<std::size_t> path;
        for (std::size_t h = 0; h < hops; ++h) path.push_back(rng() % fanout);
        for (std::size_t h = 0; h < hops; ++h) {
            const std::string child = node + "." + std::to_string(path[h]);
            script.push_back(ExploreEntity{{node}});
            script.push_back(ChooseRelation{{TripleText{node, "rel_" + std::to_string(path[h]), child}}});
            node = child;
        }
        for (std::size_t h = hops; h-- > 0;) question += "the rel_" + std::to_string(path[h]) + " of ";
        question = "what is " + question + "[" + root + "]";
        script.push_back(Finish{{node}});
        Query query{"tree-" + std::to_string(q), question, {root}, {node}};
        w.scripts[query.id] = std::move(script);
        w.queries.push_back(std::move(query));
    }
    return w;
}

RefSim::RefSim(std::vector<TripleText> triples, Query query, int t_max)
    : triples_(std::move(triples)), query_(std::move(query)), t_max_(t_max) {}

bool RefSim::step(RefState& state, const Action& action) const {
    if (state.terminal) return false;
    if (const auto* e = std::get_if<ExploreEntity>(&action)) {
        if (e->names.empty()) return false;
        for (const auto& name : e->names) {
            bool known = false, visible = false;
            for (const auto& q : query_.question_entities) visible = visible || q == name;
            for (const auto& t : triples_) known = known || t.head == name || t.tail == name;
            for (const auto& [h, r, t] : state.perception) visible = visible || h == name || t == name;
            if (!known || !visible) return false;
        }
        for (const auto& name : e->names) {
            state.explored.insert(name);
            for (const auto& t : triples_)
                if (t.head == name || t.tail == name) state.perception.insert({t.head, t.relation, t.tail});
        }
    } else if (const auto* c = std::get_if<ChooseRelation>(&action)) {
        if (c->triples.empty()) return false;
        std::set<Key> chosen;
        for (const auto& t : c->triples) {
            Key k{t.head, t.relation, t.tail};
            if (!state.perception.count(k)) return false;
            chosen.insert(k);
        }
        state.subgraph = std::move(chosen);
    } else {
        if (std::get<Finish>(action).answers.empty()) return false;
        state.terminal = true;
    }
    ++state.step;
    if (state.step >= t_max_) state.terminal = true;
    return true;
}

std::optional<RefState> RefSim::run(const std::vector<Action>& actions) const {
    RefState s;
    for (const auto& a : actions)
        if (!step(s, a)) return std::nullopt;
    return s;
}

bool RefSim::contains_answers(const RefState& state) const {
    for (const auto& gold : query_.gold_answers) {
        const std::string g = normalize_answer(gold);
        bool hit = false;
        for (const auto& [h, r, t] : state.subgraph) hit = hit || normalize_answer(h) == g || normalize_answer(t) == g;
        if (!hit) return false;
    }
    return true;
}

BruteForceResult brute_force_minimal(const RefSim& sim, const std::vector<Action>& actions) {
    BruteForceResult best;
    const std::size_t n = actions.size();
    if (n == 0) return best;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (mask >> i & 1) idx.push_back(i);
        idx.push_back(n - 1);
        std::vector<Action> sub;
        for (auto i : idx) sub.push_back(actions[i]);
        auto final_state = sim.run(sub);
        if (!final_state || !sim.contains_answers(*final_state)) continue;
        if (!best.found || idx.size() < best.length || (idx.size() == best.length && idx < best.indices)) {
            best.found = true;
            best.length = idx.size();
            best.indices = std::move(idx);
        }
    }
    return best;
}

DetourCase detour_case(std::uint64_t seed, std::size_t max_len) {
    std::mt19937_64 rng(seed);
    DetourCase dc;
    const std::size_t fanout = 2 + rng() % 3;
    // three trees, so the chosen question has 1, 2 or 3 hops
    const TreeWorld w = tree_world(seed, 3, fanout, 3);
    const std::size_t pick = rng() % 3;
    dc.triples = w.triples;
    std::vector<std::string> nodes;
    for (const auto& t : w.triples) nodes.push_back(t.tail);
    const std::size_t links = rng() % 4;
    for (std::size_t i = 0; i < links; ++i)
        dc.triples.push_back({nodes[rng() % nodes.size()], "link", nodes[rng() % nodes.size()]});
    dc.query = w.queries[pick];
    dc.base = w.scripts.at(dc.query.id);
    dc.source = dc.base;

    const RefSim sim(dc.triples, dc.query);
    const std::size_t wanted = 1 + rng() % 3;
    for (int attempt = 0; attempt < 200 && dc.detours < wanted; ++attempt) {
        const bool explore_detour = rng() % 2 == 0;
        const std::size_t need = explore_detour ? 2 : 1;
        if (dc.source.size() + need > max_len) {
            if (dc.source.size() + 1 > max_len) break;
            continue;
        }
        const std::size_t pos = 1 + rng() % (dc.source.size() - 1);
        std::vector<Action> prefix(dc.source.begin(), dc.source.begin() + static_cast<std::ptrdiff_t>(pos));
        const auto state = sim.run(prefix);
        if (!state) continue;
        std::vector<Action> detour;
        if (explore_detour) {
            std::vector<std::string> candidates;
            for (const auto& [h, r, t] : state->perception)
                for (const auto& e : {h, t})
                    if (!state->explored.count(e)) candidates.push_back(e);
            if (candidates.empty()) continue;
            detour.push_back(ExploreEntity{{candidates[rng() % candidates.size()]}});
            if (!state->subgraph.empty()) {
                std::vector<TripleText> keep;
                for (const auto& [h, r, t] : state->subgraph) keep.push_back({h, r, t});
                detour.push_back(ChooseRelation{keep});
            }
        } else {
            bool later_choose = false;
            for (std::size_t i = pos; i < dc.source.size(); ++i)
                later_choose = later_choose || kind_of(dc.source[i]) == ActionKind::choose;
            if (!later_choose || state->perception.empty()) continue;
            auto it = state->perception.begin();
            std::advance(it, static_cast<std::ptrdiff_t>(rng() % state->perception.size()));
            const auto& [h, r, t] = *it;
            detour.push_back(ChooseRelation{{TripleText{h, r, t}}});
        }
        std::vector<Action> candidate = prefix;
        candidate.insert(candidate.end(), detour.begin(), detour.end());
        candidate.insert(candidate.end(), dc.source.begin() + static_cast<std::ptrdiff_t>(pos), dc.source.end());
        const auto final_state = sim.run(candidate);
        if (!final_state || !sim.contains_answers(*final_state)) continue;
        dc.source = std::move(candidate);
        ++dc.detours;
    }
    return dc;
}

}  // namespace fixtures
