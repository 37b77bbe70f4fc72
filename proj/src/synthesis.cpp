#include "graphs3/synthesis.hpp"

#include "graphs3/parallel.hpp"
#include "graphs3/text.hpp"
#include "graphs3/trajectory_io.hpp"

#include <algorithm>
#include <set>

namespace graphs3 {

std::string_view match_mode_name(MatchMode mode) { return mode == MatchMode::hit ? "hit" : "strict"; }

std::optional<MatchMode> parse_match_mode(std::string_view name) {
    if (name == "hit") return MatchMode::hit;
    if (name == "strict") return MatchMode::strict;
    return std::nullopt;
}

namespace {

std::set<std::string> normalized_set(const std::vector<std::string>& items) {
    std::set<std::string> out;
    for (const auto& s : items) {
        auto n = normalize_answer(s);
        if (!n.empty()) out.insert(std::move(n));
    }
    return out;
}

}  // namespace

bool answers_match(const std::vector<std::string>& predicted, const std::vector<std::string>& gold, MatchMode mode) {
    const auto p = normalized_set(predicted);
    const auto g = normalized_set(gold);
    if (p.empty() || g.empty()) return false;
    if (mode == MatchMode::strict) return p == g;
    return std::any_of(p.begin(), p.end(), [&](const std::string& s) { return g.count(s) > 0; });
}

bool retain(const Trajectory& trajectory, MatchMode mode) {
    return answers_match(trajectory.final_answers, trajectory.query.gold_answers, mode);
}

Trajectory run_episode(const TextualGraph& graph, const Query& query, Policy& policy, const EpisodeConfig& config) {
    if (config.t_max < 1) throw std::invalid_argument("t_max must be at least 1");
    Trajectory trajectory;
    trajectory.query = query;
    AgentState state = init_state(query);
    while (!is_terminal(state, config)) {
        PolicyDecision decision;
        try {
            decision = policy.decide(graph, state);
        } catch (const std::exception& e) {
            trajectory.final_state = state;
            throw EpisodeError(e.what(), std::move(trajectory));
        }
        Transition next = decision.ok() ? apply_action(graph, state, *decision.action, config)
                                        : apply_undecodable(state, std::string(decision_error_name(decision.error)), config);
        trajectory.steps.push_back(StepRecord{state.step, std::move(state), std::move(decision), next.validity});
        state = std::move(next.state);
    }
    if (state.finished && !trajectory.steps.empty()) {
        const auto& last = trajectory.steps.back().decision;
        if (last.action)
            if (const auto* finish = std::get_if<Finish>(&*last.action)) trajectory.final_answers = finish->answers;
    }
    trajectory.final_state = std::move(state);
    return trajectory;
}

nlohmann::ordered_json SynthesisReport::to_json() const {
    nlohmann::ordered_json j;
    j["episodes_run"] = episodes_run;
    j["retained_count"] = retained_count;
    j["failed_episodes"] = failed_episodes;
    j["invalid_action_count"] = invalid_action_count;
    j["partial_action_count"] = partial_action_count;
    j["total_steps"] = total_steps;
    j["mean_steps"] = mean_steps;
    j["match_mode"] = std::string(match_mode_name(match));
    j["error_tallies"] = error_tallies;
    return j;
}

SynthesisResult synthesize_dataset(const TextualGraph& graph, const std::vector<Query>& queries,
                                   const PolicyFactory& policies, const EpisodeConfig& config,
                                   const SynthesisOptions& options) {
    struct Slot {
        Trajectory trajectory;
        std::string failure;
        bool failed = false;
    };
    const std::size_t per_query = std::max<std::size_t>(options.episodes_per_query, 1);
    std::vector<Slot> slots(queries.size() * per_query);

    parallel_for(slots.size(), options.parallelism, [&](std::size_t i) {
        const Query& query = queries[i / per_query];
        const std::size_t episode = i % per_query;
        Slot& slot = slots[i];
        try {
            auto policy = policies(query, episode);
            slot.trajectory = run_episode(graph, query, *policy, config);
        } catch (const EpisodeError& e) {
            slot.trajectory = e.partial();
            slot.failed = true;
            slot.failure = e.what();
        } catch (const std::exception& e) {
            slot.trajectory.query = query;
            slot.trajectory.final_state = init_state(query);
            slot.failed = true;
            slot.failure = e.what();
        }
        slot.trajectory.episode = episode;
        slot.trajectory.retained = !slot.failed && retain(slot.trajectory, options.match);
    });

    SynthesisResult result;
    SynthesisReport& report = result.report;
    report.match = options.match;
    std::size_t kept_for_query = 0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (i % per_query == 0) kept_for_query = 0;
        Slot& slot = slots[i];
        ++report.episodes_run;
        report.total_steps += slot.trajectory.steps.size();
        for (const auto& step : slot.trajectory.steps) {
            if (step.decision.error != DecisionError::none)
                ++report.error_tallies[std::string(decision_error_name(step.decision.error))];
            if (step.validity.kind == Validity::Kind::invalid) ++report.invalid_action_count;
            if (step.validity.kind == Validity::Kind::partial) ++report.partial_action_count;
        }
        if (slot.failed) {
            ++report.failed_episodes;
            ++report.error_tallies["episode_failure"];
        }
        if (slot.trajectory.retained) {
            if (options.max_retained_per_query != 0 && kept_for_query >= options.max_retained_per_query) {
                slot.trajectory.retained = false;
                ++report.error_tallies["over_retention_cap"];
            } else {
                ++kept_for_query;
                ++report.retained_count;
                result.retained.push_back(slot.trajectory);
            }
        }
        result.episodes.push_back(std::move(slot.trajectory));
    }
    report.mean_steps = report.episodes_run == 0
                            ? 0.0
                            : static_cast<double>(report.total_steps) / static_cast<double>(report.episodes_run);
    return result;
}

nlohmann::ordered_json sft_record(const TextualGraph& graph, const Trajectory& trajectory, const StepRecord& step,
                          const PromptTemplate& prompt) {
    nlohmann::ordered_json j;
    j["query_id"] = trajectory.query.id;
    j["step"] = step.step;
    j["prompt"] = serialize_state(graph, step.state, prompt);
    j["completion"] = step.decision.action ? render_decision(step.decision.thought, *step.decision.action)
                                           : step.decision.raw;
    j["synthetic_thought"] = step.decision.synthetic_thought;
    return j;
}

std::size_t emit_sft(const TextualGraph& graph, const std::vector<Trajectory>& trajectories,
                     const std::filesystem::path& path, const PromptTemplate& prompt) {
    JsonlWriter out(path);
    for (const auto& t : trajectories)
        for (const auto& step : t.steps) out.write(sft_record(graph, t, step, prompt));
    out.close();
    return out.count();
}

}  // namespace graphs3
