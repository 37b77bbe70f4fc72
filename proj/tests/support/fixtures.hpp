#pragma once

#include "graphs3/environment.hpp"
#include "graphs3/graph.hpp"
#include "graphs3/policy.hpp"
#include "graphs3/synthesis.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace fixtures {

using namespace graphs3;

std::filesystem::path data_dir();
std::filesystem::path sample_dir();
TextualGraph sample_graph();
Query sample_query();
std::vector<Action> sample_actions();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

// Uniform random triples over e0..e{entities-1} and r0..r{relations-1};
// duplicates possible.
std::vector<TripleText> random_triples(std::uint64_t seed, std::size_t triples, std::size_t entities,
                                       std::size_t relations);

// Forest of fanout-ary trees, one per question, `depth` levels below each
// root. Question i asks for the node reached by following `hops` child
// edges from root i; its oracle script explores and chooses along the path.
struct TreeWorld {
    std::vector<TripleText> triples;
    std::vector<Query> queries;
    ScriptBook scripts;
};

TreeWorld tree_world(std::uint64_t seed, std::size_t questions, std::size_t fanout, std::size_t depth);

// ---- refinement cases ----

// One small tree question with random cross links; `source` is the oracle
// script with 1-3 redundant detours (dead-end Explores followed by a
// corrective Choose, or throwaway Chooses later overwritten) inserted, at
// most `max_len` actions long.
struct DetourCase {
    std::vector<TripleText> triples;
    Query query;
    std::vector<Action> base;
    std::vector<Action> source;
    std::size_t detours = 0;
};

DetourCase detour_case(std::uint64_t seed, std::size_t max_len = 10);

// ---- independent reference semantics (string level, linear scans) ----

using Key = std::tuple<std::string, std::string, std::string>;

struct RefState {
    std::set<Key> perception;
    std::set<Key> subgraph;
    std::set<std::string> explored;
    int step = 0;
    bool terminal = false;
};

class RefSim {
public:
    RefSim(std::vector<TripleText> triples, Query query, int t_max = 20);

    // Applies the action if fully valid; returns false (state untouched)
    // otherwise.
    bool step(RefState& state, const Action& action) const;
    // nullopt when some action is not fully valid.
    std::optional<RefState> run(const std::vector<Action>& actions) const;
    // Every gold answer names an endpoint of the subgraph (normalized).
    bool contains_answers(const RefState& state) const;

private:
    std::vector<TripleText> triples_;
    Query query_;
    int t_max_;
};

// Minimal length over all subsequences ending with the last action that are
// feasible and answer-consistent, with the lexicographically smallest index
// vector among them. No pruning.
struct BruteForceResult {
    std::size_t length = 0;
    std::vector<std::size_t> indices;
    bool found = false;
};

BruteForceResult brute_force_minimal(const RefSim& sim, const std::vector<Action>& actions);

}  // namespace fixtures
