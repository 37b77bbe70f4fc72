#include "graphs3/refinement.hpp"

#include "graphs3/prompt.hpp"
#include "graphs3/text.hpp"
#include "graphs3/trajectory_io.hpp"

#include <algorithm>
#include <set>

namespace graphs3 {

void RewardConfig::validate() const {
    if (!(0.0 < c1 && c1 < c2 && c2 < 1.0))
        throw std::invalid_argument("reward constants must satisfy 0 < c1 < c2 < 1 (got c1=" + std::to_string(c1) +
                                    ", c2=" + std::to_string(c2) + ")");
}

std::string_view reward_branch_name(RewardBranch branch) {
    switch (branch) {
        case RewardBranch::invalid: return "invalid";
        case RewardBranch::format_only: return "format_only";
        case RewardBranch::partial: return "partial";
        case RewardBranch::exact: return "exact";
    }
    return "";
}

namespace {

std::set<std::string> normalized_objects(const Action& action) {
    std::set<std::string> out;
    if (const auto* choose = std::get_if<ChooseRelation>(&action)) {
        for (const auto& t : choose->triples)
            out.insert(normalize_name(t.head) + "\x1f" + normalize_name(t.relation) + "\x1f" + normalize_name(t.tail));
        return out;
    }
    for (const auto& s : action_objects(action)) out.insert(normalize_answer(s));
    return out;
}

std::set<std::string> normalized_strings(const std::vector<std::string>& items) {
    std::set<std::string> out;
    for (const auto& s : items) out.insert(normalize_answer(s));
    return out;
}

// Number of history entries matching the golden prefix, or nullopt once the
// rollout has left the golden path.
std::optional<std::size_t> aligned_step(const AgentState& state, const RefinedTrajectory& refined) {
    if (state.history.size() > refined.actions.size()) return std::nullopt;
    for (std::size_t i = 0; i < state.history.size(); ++i) {
        const auto& entry = state.history[i].action;
        if (!entry || !actions_equivalent(*entry, refined.actions[i])) return std::nullopt;
    }
    if (state.history.size() == refined.actions.size()) return std::nullopt;
    return state.history.size();
}

RewardLabel make_label(const AgentState& state, double value, RewardBranch branch, std::string detail) {
    return RewardLabel{state.step, value, branch, std::move(detail)};
}

}  // namespace

bool actions_equivalent(const Action& a, const Action& b) {
    return kind_of(a) == kind_of(b) && normalized_objects(a) == normalized_objects(b);
}

RewardLabel step_reward(const PolicyDecision& predicted, const TextualGraph& graph, const AgentState& state,
                        const RefinedTrajectory& refined, const RewardConfig& config) {
    if (!predicted.ok())
        return make_label(state, 0.0, RewardBranch::invalid,
                          "undecodable output: " + std::string(decision_error_name(predicted.error)));
    if (state.terminal) return make_label(state, 0.0, RewardBranch::invalid, "state is terminal");
    const Action& action = *predicted.action;
    const Validity validity = validate_action(graph, state, action);
    if (validity.kind == Validity::Kind::invalid)
        return make_label(state, 0.0, RewardBranch::invalid, "invalid action: " + validity.reason);

    const std::optional<std::size_t> aligned = aligned_step(state, refined);
    const ActionKind kind = kind_of(action);
    if (aligned) {
        const Action& golden = refined.actions[*aligned];
        if (actions_equivalent(action, golden))
            return make_label(state, 1.0, RewardBranch::exact, "matches golden step " + std::to_string(*aligned));
        if (kind == ActionKind::finish && kind_of(golden) == ActionKind::finish &&
            normalized_objects(action) == normalized_strings(refined.query.gold_answers))
            return make_label(state, 1.0, RewardBranch::exact, "finish equals gold answers");
        if (kind != kind_of(golden))
            return make_label(state, config.c1, RewardBranch::format_only,
                              "well-formed, golden step is " + std::string(action_label(kind_of(golden))));
    }

    bool partial = false;
    std::string why;
    switch (kind) {
        case ActionKind::explore: {
            for (const auto& name : std::get<ExploreEntity>(action).names) {
                std::optional<EntityId> id;
                try {
                    id = graph.resolve_entity(name);
                } catch (const AmbiguousEntityError&) {
                }
                if (id && std::binary_search(refined.golden_explore_set.begin(), refined.golden_explore_set.end(), *id)) {
                    partial = true;
                    why = "explores golden entity " + python_repr(name);
                    break;
                }
            }
            break;
        }
        case ActionKind::choose: {
            const auto& triples = std::get<ChooseRelation>(action).triples;
            partial = !triples.empty();
            for (const auto& t : triples) {
                auto pos = graph.find_triple(t);
                const bool in_golden = pos && std::binary_search(refined.golden_subgraph.begin(),
                                                                 refined.golden_subgraph.end(), *pos);
                const bool perceived = pos && std::binary_search(state.perception.begin(), state.perception.end(), *pos);
                if (!in_golden || !perceived) {
                    partial = false;
                    break;
                }
            }
            if (partial) why = "chosen triples are a subset of the golden subgraph";
            break;
        }
        case ActionKind::finish:
            partial = answers_match(std::get<Finish>(action).answers, refined.query.gold_answers, MatchMode::hit);
            if (partial) why = "finish overlaps gold answers";
            break;
    }
    if (partial) return make_label(state, config.c2, RewardBranch::partial, why);
    return make_label(state, config.c1, RewardBranch::format_only, "well-formed but not correct");
}

LabeledSteps label_steps(const TextualGraph& graph, const RefinedTrajectory& refined, const RewardConfig& config,
                         const PromptTemplate& prompt, const EpisodeConfig& episode) {
    config.validate();
    LabeledSteps out;
    const ReplayResult r = replay(graph, refined.query, refined.actions, episode);
    if (!r.feasible) throw RefinementError("refined trajectory for '" + refined.source_query_id + "' is infeasible");
    for (std::size_t t = 0; t < refined.actions.size(); ++t) {
        PolicyDecision golden;
        golden.action = refined.actions[t];
        RewardLabel label = step_reward(golden, graph, r.states[t], refined, config);
        nlohmann::ordered_json record;
        record["query_id"] = refined.source_query_id;
        record["step"] = static_cast<int>(t);
        record["prompt"] = serialize_state(graph, r.states[t], prompt);
        record["action"] = action_to_json(refined.actions[t]);
        record["reward"] = label.value;
        record["branch"] = std::string(reward_branch_name(label.branch));
        out.records.push_back(std::move(record));
        out.labels.push_back(std::move(label));
    }
    return out;
}

std::size_t emit_rl(const std::vector<nlohmann::ordered_json>& records, const std::filesystem::path& path) {
    JsonlWriter out(path);
    for (const auto& r : records) out.write(r);
    out.close();
    return out.count();
}

}  // namespace graphs3
