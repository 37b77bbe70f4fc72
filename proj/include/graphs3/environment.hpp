#pragma once

#include "graphs3/action.hpp"
#include "graphs3/graph.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphs3 {

struct Query {
    std::string id;
    std::string question;
    std::vector<std::string> question_entities;
    std::vector<std::string> gold_answers;

    bool operator==(const Query&) const = default;
};

struct EpisodeConfig {
    int t_max = 20;
    // Strict: an action with any out-of-vocabulary object applies nothing.
    // Default: such objects are dropped and the rest applied.
    bool strict_objects = false;
};

struct Validity {
    enum class Kind { valid, partial, invalid };

    Kind kind = Kind::valid;
    std::vector<std::string> accepted;
    std::vector<std::string> rejected;
    std::string reason;

    static Validity valid(std::vector<std::string> accepted);
    static Validity invalid(std::string reason, std::vector<std::string> rejected = {});

    bool ok() const noexcept { return kind == Kind::valid; }
    bool operator==(const Validity&) const = default;
};

std::string_view validity_label(Validity::Kind kind);

// One applied step. `action` is empty when the policy produced no parseable
// action; the step still consumes budget.
struct HistoryEntry {
    std::optional<Action> action;
    bool operator==(const HistoryEntry&) const = default;
};

struct AgentState {
    Query query;
    TripleSet perception;  // G^p, every triple surfaced by Explore
    TripleSet subgraph;    // G^sub, replaced by each Choose
    // Triples surfaced by Explore since the most recent Choose. Together with
    // the subgraph this is the "Current Graph State" shown to the agent.
    TripleSet frontier;
    std::vector<EntityId> explored;  // ascending
    std::vector<HistoryEntry> history;
    int step = 0;
    bool terminal = false;
    bool finished = false;  // terminal through Finish, not budget

    bool operator==(const AgentState&) const = default;
};

class TerminalStateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

AgentState init_state(Query query);

Validity validate_action(const TextualGraph& graph, const AgentState& state, const Action& action);

struct Transition {
    AgentState state;
    Validity validity;
};

// Throws TerminalStateError when the state is already terminal.
Transition apply_action(const TextualGraph& graph, const AgentState& state, const Action& action,
                        const EpisodeConfig& config);

// Records a step for which no action could be decoded.
Transition apply_undecodable(const AgentState& state, std::string reason, const EpisodeConfig& config);

bool is_terminal(const AgentState& state, const EpisodeConfig& config);

// subgraph ∪ frontier, ascending by position.
TripleSet graph_view(const AgentState& state);

std::vector<std::string> render_triples(const TextualGraph& graph, std::span<const TriplePos> triples);
std::vector<std::string> history_lines(const AgentState& state);

}  // namespace graphs3
