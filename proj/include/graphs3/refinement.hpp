#pragma once

#include "graphs3/chat_client.hpp"
#include "graphs3/environment.hpp"
#include "graphs3/synthesis.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace graphs3 {

// ---- replay ----

struct ReplayResult {
    AgentState final_state;
    std::vector<AgentState> states;  // states[t] is the state before action t
    bool feasible = true;
    std::optional<std::size_t> first_infeasible;
};

// Applies actions from init_state, stopping at the first action that is not
// fully Valid.
ReplayResult replay(const TextualGraph& graph, const Query& query, std::span<const Action> actions,
                    const EpisodeConfig& config);

// ---- answer oracles ----

class OracleIndeterminate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AnswerOracle {
public:
    virtual ~AnswerOracle() = default;
    virtual std::string_view kind() const = 0;
    // Throws OracleIndeterminate when no verdict can be produced.
    virtual bool consistent(const TextualGraph& graph, const Query& query, const AgentState& final_state) const = 0;
};

// Every gold answer occurs (normalized) as a head or tail name in G^sub.
class ContainmentOracle final : public AnswerOracle {
public:
    std::string_view kind() const override { return "containment"; }
    bool consistent(const TextualGraph& graph, const Query& query, const AgentState& final_state) const override;
};

// Asks a generator model to answer from (question, G^sub); verdicts are
// cached per subgraph.
class RemoteAnswerOracle final : public AnswerOracle {
public:
    explicit RemoteAnswerOracle(std::shared_ptr<const ChatClient> client);

    std::string_view kind() const override { return "remote_llm"; }
    bool consistent(const TextualGraph& graph, const Query& query, const AgentState& final_state) const override;

private:
    std::shared_ptr<const ChatClient> client_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, bool> cache_;
};

bool answer_consistent(const AnswerOracle& oracle, const TextualGraph& graph, const Query& query,
                       const AgentState& final_state);

// ---- refinement ----

enum class RefineMode { exact, greedy };

std::string_view refine_mode_name(RefineMode mode);
std::optional<RefineMode> parse_refine_mode(std::string_view name);

struct RefineOptions {
    RefineMode mode = RefineMode::exact;
    std::size_t max_exact_len = 14;  // longer sources fall back to greedy
    EpisodeConfig episode;
};

struct RefinedTrajectory {
    std::string source_query_id;
    Query query;
    std::vector<Action> actions;
    AgentState replay_final_state;
    TripleSet golden_subgraph;
    std::vector<EntityId> golden_explore_set;  // ascending
    std::vector<std::size_t> kept_indices;     // positions in the source trajectory
    std::size_t source_length = 0;
    RefineMode mode_used = RefineMode::exact;
    std::string oracle_kind;
    std::size_t candidates_evaluated = 0;
};

class RefinementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Actions as they took effect in the source: out-of-vocabulary objects of
// Partial steps removed; Invalid and undecodable steps absent. Indices refer
// to source steps.
struct EffectiveAction {
    std::size_t source_index;
    Action action;
};

std::vector<EffectiveAction> effective_actions(const Trajectory& trajectory, const EpisodeConfig& config);

// Shortest feasible answer-consistent subsequence ending with the source's
// Finish. Throws RefinementError for non-retained or non-consistent sources
// and OracleIndeterminate when the oracle cannot decide.
RefinedTrajectory refine(const TextualGraph& graph, const Trajectory& trajectory, const AnswerOracle& oracle,
                         const RefineOptions& options = {});

// Rebuilds a refined trajectory from its action list (e.g. read back from
// refined.jsonl).
RefinedTrajectory refined_from_actions(const TextualGraph& graph, const Query& query, std::vector<Action> actions,
                                       const EpisodeConfig& config);

// {query_id, question, question_entities, answers, source_length,
//  kept_indices, actions, golden_subgraph, golden_explore_set}
nlohmann::ordered_json refined_to_json(const TextualGraph& graph, const RefinedTrajectory& refined);
nlohmann::ordered_json refinement_report_record(const RefinedTrajectory& refined);

// Inverse of refined_to_json; replays the actions to recover the golden sets.
RefinedTrajectory refined_from_json(const TextualGraph& graph, const nlohmann::json& record,
                                    const EpisodeConfig& config = EpisodeConfig{});

// ---- stepwise reward ----

struct RewardConfig {
    double c1 = 0.2;
    double c2 = 0.6;

    // Throws std::invalid_argument unless 0 < c1 < c2 < 1.
    void validate() const;
};

enum class RewardBranch { invalid, format_only, partial, exact };

std::string_view reward_branch_name(RewardBranch branch);

struct RewardLabel {
    int step = 0;
    double value = 0.0;
    RewardBranch branch = RewardBranch::invalid;
    std::string detail;
};

// Same variant and equal normalized object sets.
bool actions_equivalent(const Action& a, const Action& b);

RewardLabel step_reward(const PolicyDecision& predicted, const TextualGraph& graph, const AgentState& state,
                        const RefinedTrajectory& refined, const RewardConfig& config);

struct LabeledSteps {
    std::vector<RewardLabel> labels;
    std::vector<nlohmann::ordered_json> records;  // D_RL
};

// {query_id, step, prompt, action: {Action, Objects}, reward, branch} per golden step.
LabeledSteps label_steps(const TextualGraph& graph, const RefinedTrajectory& refined, const RewardConfig& config,
                         const PromptTemplate& prompt = PromptTemplate{},
                         const EpisodeConfig& episode = EpisodeConfig{});

std::size_t emit_rl(const std::vector<nlohmann::ordered_json>& records, const std::filesystem::path& path);

}  // namespace graphs3
