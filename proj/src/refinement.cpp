#include "graphs3/refinement.hpp"

#include "graphs3/prompt.hpp"
#include "graphs3/text.hpp"

#include <algorithm>
#include <set>

namespace graphs3 {

ReplayResult replay(const TextualGraph& graph, const Query& query, std::span<const Action> actions,
                    const EpisodeConfig& config) {
    ReplayResult result;
    AgentState state = init_state(query);
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (state.terminal || validate_action(graph, state, actions[i]).kind != Validity::Kind::valid) {
            result.feasible = false;
            result.first_infeasible = i;
            break;
        }
        result.states.push_back(state);
        state = apply_action(graph, state, actions[i], config).state;
    }
    result.final_state = std::move(state);
    return result;
}

// ---- oracles ----

bool ContainmentOracle::consistent(const TextualGraph& graph, const Query& query, const AgentState& final_state) const {
    if (query.gold_answers.empty()) return false;
    std::set<std::string> names;
    for (auto id : entities_of(graph, final_state.subgraph)) names.insert(normalize_answer(graph.entity_name(id)));
    return std::all_of(query.gold_answers.begin(), query.gold_answers.end(),
                       [&](const std::string& gold) { return names.count(normalize_answer(gold)) > 0; });
}

RemoteAnswerOracle::RemoteAnswerOracle(std::shared_ptr<const ChatClient> client) : client_(std::move(client)) {
    if (!client_) throw std::invalid_argument("remote answer oracle needs a chat client");
}


bool RemoteAnswerOracle::consistent(const TextualGraph& graph, const Query& query, const AgentState& final_state) const {
    std::string key = query.id + "#";
    for (auto pos : final_state.subgraph) key += std::to_string(pos) + ",";
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    std::string reply;
    try {
        reply = client_->complete({ChatMessage{"user", answer_prompt(query.question, render_triples(graph, final_state.subgraph))}});
    } catch (const ChatError& e) {
        throw OracleIndeterminate(e.what());
    }
    const bool verdict = answers_match(parse_answer_list(reply), query.gold_answers, MatchMode::hit);
    std::lock_guard lock(mutex_);
    cache_.emplace(std::move(key), verdict);
    return verdict;
}

bool answer_consistent(const AnswerOracle& oracle, const TextualGraph& graph, const Query& query,
                       const AgentState& final_state) {
    return oracle.consistent(graph, query, final_state);
}

// ---- refinement ----

std::string_view refine_mode_name(RefineMode mode) { return mode == RefineMode::exact ? "exact" : "greedy"; }

std::optional<RefineMode> parse_refine_mode(std::string_view name) {
    if (name == "exact") return RefineMode::exact;
    if (name == "greedy") return RefineMode::greedy;
    return std::nullopt;
}

std::vector<EffectiveAction> effective_actions(const Trajectory& trajectory, const EpisodeConfig& config) {
    std::vector<EffectiveAction> out;
    for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
        const StepRecord& step = trajectory.steps[i];
        if (!step.decision.action) continue;
        const Action& action = *step.decision.action;
        switch (step.validity.kind) {
            case Validity::Kind::valid:
                out.push_back(EffectiveAction{i, action});
                break;
            case Validity::Kind::invalid:
                break;
            case Validity::Kind::partial: {
                if (config.strict_objects) break;
                const std::set<std::string> accepted(step.validity.accepted.begin(), step.validity.accepted.end());
                if (const auto* explore = std::get_if<ExploreEntity>(&action)) {
                    ExploreEntity kept;
                    for (const auto& n : explore->names)
                        if (accepted.count(n)) kept.names.push_back(n);
                    out.push_back(EffectiveAction{i, std::move(kept)});
                } else if (const auto* choose = std::get_if<ChooseRelation>(&action)) {
                    ChooseRelation kept;
                    for (const auto& t : choose->triples)
                        if (accepted.count(render_triple(t))) kept.triples.push_back(t);
                    out.push_back(EffectiveAction{i, std::move(kept)});
                }
                break;
            }
        }
    }
    return out;
}

namespace {

class Search {
public:
    Search(const TextualGraph& graph, const Query& query, const std::vector<EffectiveAction>& source,
           const AnswerOracle& oracle, const EpisodeConfig& config)
        : graph_(graph), query_(query), source_(source), oracle_(oracle), config_(config) {}

    std::size_t candidates() const noexcept { return candidates_; }

    // Chosen positions into source_ (the last element, the Finish, included).
    bool check(const std::vector<std::size_t>& chosen) {
        ++candidates_;
        std::vector<Action> actions;
        actions.reserve(chosen.size());
        for (auto c : chosen) actions.push_back(source_[c].action);
        const ReplayResult r = replay(graph_, query_, actions, config_);
        return r.feasible && oracle_.consistent(graph_, query_, r.final_state);
    }

    // Lexicographic DFS over subsets of size `length` - 1 of the non-final
    // actions, pruning at the first infeasible prefix.
    std::optional<std::vector<std::size_t>> exact_of_length(std::size_t length) {
        std::vector<std::size_t> chosen;
        found_.reset();
        dfs(init_state(query_), 0, length - 1, chosen);
        return found_;
    }

private:
    void dfs(const AgentState& state, std::size_t from, std::size_t remaining, std::vector<std::size_t>& chosen) {
        if (found_) return;
        const std::size_t last = source_.size() - 1;
        if (remaining == 0) {
            ++candidates_;
            const Action& finish = source_[last].action;
            if (state.terminal || validate_action(graph_, state, finish).kind != Validity::Kind::valid) return;
            const AgentState final_state = apply_action(graph_, state, finish, config_).state;
            if (oracle_.consistent(graph_, query_, final_state)) {
                found_ = chosen;
                found_->push_back(last);
            }
            return;
        }
        for (std::size_t i = from; i + remaining <= last; ++i) {
            const Action& action = source_[i].action;
            if (state.terminal || validate_action(graph_, state, action).kind != Validity::Kind::valid) continue;
            const AgentState next = apply_action(graph_, state, action, config_).state;
            chosen.push_back(i);
            dfs(next, i + 1, remaining - 1, chosen);
            chosen.pop_back();
            if (found_) return;
        }
    }

    const TextualGraph& graph_;
    const Query& query_;
    const std::vector<EffectiveAction>& source_;
    const AnswerOracle& oracle_;
    const EpisodeConfig& config_;
    std::size_t candidates_ = 0;
    std::optional<std::vector<std::size_t>> found_;
};

}  // namespace

RefinedTrajectory refined_from_actions(const TextualGraph& graph, const Query& query, std::vector<Action> actions,
                                       const EpisodeConfig& config) {
    RefinedTrajectory refined;
    refined.source_query_id = query.id;
    refined.query = query;
    const ReplayResult r = replay(graph, query, actions, config);
    if (!r.feasible)
        throw RefinementError("refined actions are infeasible at index " + std::to_string(*r.first_infeasible));
    refined.actions = std::move(actions);
    refined.replay_final_state = r.final_state;
    refined.golden_subgraph = r.final_state.subgraph;
    refined.golden_explore_set = r.final_state.explored;
    refined.source_length = refined.actions.size();
    for (std::size_t i = 0; i < refined.actions.size(); ++i) refined.kept_indices.push_back(i);
    return refined;
}

RefinedTrajectory refine(const TextualGraph& graph, const Trajectory& trajectory, const AnswerOracle& oracle,
                         const RefineOptions& options) {
    if (!trajectory.retained) throw RefinementError("trajectory for '" + trajectory.query.id + "' is not retained");
    const std::vector<EffectiveAction> source = effective_actions(trajectory, options.episode);
    if (source.empty() || kind_of(source.back().action) != ActionKind::finish ||
        source.back().source_index + 1 != trajectory.steps.size())
        throw RefinementError("trajectory for '" + trajectory.query.id + "' does not end with Finish");

    Search search(graph, trajectory.query, source, oracle, options.episode);
    std::vector<std::size_t> all(source.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (!search.check(all))
        throw RefinementError("trajectory for '" + trajectory.query.id + "' is not answer-consistent under " +
                              std::string(oracle.kind()) + " oracle");

    std::vector<std::size_t> best;
    RefineMode used = options.mode;
    if (options.mode == RefineMode::exact && trajectory.steps.size() > options.max_exact_len) used = RefineMode::greedy;

    if (used == RefineMode::exact) {
        for (std::size_t length = 1; length <= source.size(); ++length) {
            if (auto found = search.exact_of_length(length)) {
                best = std::move(*found);
                break;
            }
        }
    } else {
        best = all;
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t k = best.size() - 1; k-- > 0;) {
                std::vector<std::size_t> candidate = best;
                candidate.erase(candidate.begin() + static_cast<std::ptrdiff_t>(k));
                if (search.check(candidate)) {
                    best = std::move(candidate);
                    changed = true;
                }
            }
        }
    }

    std::vector<Action> actions;
    for (auto c : best) actions.push_back(source[c].action);
    RefinedTrajectory refined = refined_from_actions(graph, trajectory.query, std::move(actions), options.episode);
    refined.kept_indices.clear();
    for (auto c : best) refined.kept_indices.push_back(source[c].source_index);
    refined.source_length = trajectory.steps.size();
    refined.mode_used = used;
    refined.oracle_kind = std::string(oracle.kind());
    refined.candidates_evaluated = search.candidates();
    return refined;
}

nlohmann::ordered_json refined_to_json(const TextualGraph& graph, const RefinedTrajectory& refined) {
    nlohmann::ordered_json j;
    j["query_id"] = refined.source_query_id;
    j["question"] = refined.query.question;
    j["question_entities"] = refined.query.question_entities;
    j["answers"] = refined.query.gold_answers;
    j["source_length"] = refined.source_length;
    j["kept_indices"] = refined.kept_indices;
    auto& actions = j["actions"] = nlohmann::ordered_json::array();
    for (const auto& a : refined.actions) actions.push_back(action_to_json(a));
    j["golden_subgraph"] = render_triples(graph, refined.golden_subgraph);
    std::vector<std::string> explored;
    for (auto id : refined.golden_explore_set) explored.push_back(graph.entity_name(id));
    j["golden_explore_set"] = explored;
    return j;
}

nlohmann::ordered_json refinement_report_record(const RefinedTrajectory& refined) {
    nlohmann::ordered_json j;
    j["query_id"] = refined.source_query_id;
    j["source_length"] = refined.source_length;
    j["refined_length"] = refined.actions.size();
    j["mode"] = std::string(refine_mode_name(refined.mode_used));
    j["oracle"] = refined.oracle_kind;
    j["candidates_evaluated"] = refined.candidates_evaluated;
    return j;
}

RefinedTrajectory refined_from_json(const TextualGraph& graph, const nlohmann::json& record,
                                    const EpisodeConfig& config) {
    Query query;
    try {
        query.id = record.at("query_id").get<std::string>();
        query.question = record.value("question", std::string{});
        query.question_entities = record.value("question_entities", std::vector<std::string>{});
        query.gold_answers = record.value("answers", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw RefinementError(std::string("malformed refined record: ") + e.what());
    }
    std::vector<Action> actions;
    for (const auto& a : record.value("actions", nlohmann::json::array())) {
        ActionParse parsed = action_from_json(a);
        if (!parsed.action) throw RefinementError("undecodable action in refined record '" + query.id + "'");
        actions.push_back(std::move(*parsed.action));
    }
    RefinedTrajectory out = refined_from_actions(graph, query, std::move(actions), config);
    out.source_length = record.value("source_length", out.actions.size());
    out.kept_indices = record.value("kept_indices", std::vector<std::size_t>{});
    return out;
}

}  // namespace graphs3
