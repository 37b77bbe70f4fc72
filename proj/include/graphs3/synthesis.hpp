#pragma once

#include "graphs3/environment.hpp"
#include "graphs3/policy.hpp"
#include "graphs3/prompt.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace graphs3 {

struct StepRecord {
    int step = 0;
    AgentState state;  // s_t, before the action
    PolicyDecision decision;
    Validity validity;
};

struct Trajectory {
    Query query;
    std::size_t episode = 0;
    std::vector<StepRecord> steps;
    AgentState final_state;
    std::vector<std::string> final_answers;  // Finish objects; empty if the budget ran out
    bool retained = false;
};

// hit: nonempty intersection of normalized sets. strict: set equality.
enum class MatchMode { hit, strict };

std::string_view match_mode_name(MatchMode mode);
std::optional<MatchMode> parse_match_mode(std::string_view name);

bool answers_match(const std::vector<std::string>& predicted, const std::vector<std::string>& gold, MatchMode mode);

// Pure; does not consult or change `trajectory.retained`.
bool retain(const Trajectory& trajectory, MatchMode mode = MatchMode::hit);

class EpisodeError : public std::runtime_error {
public:
    EpisodeError(std::string message, Trajectory partial)
        : std::runtime_error(std::move(message)), partial_(std::move(partial)) {}

    const Trajectory& partial() const noexcept { return partial_; }

private:
    Trajectory partial_;
};

// decide -> validate -> apply until terminal. Hard policy failures throw
// EpisodeError carrying the steps taken so far.
Trajectory run_episode(const TextualGraph& graph, const Query& query, Policy& policy, const EpisodeConfig& config);

struct SynthesisOptions {
    std::size_t parallelism = 1;
    std::size_t episodes_per_query = 1;
    std::size_t max_retained_per_query = 0;  // 0 keeps every retained episode
    MatchMode match = MatchMode::hit;
};

struct SynthesisReport {
    std::size_t episodes_run = 0;
    std::size_t retained_count = 0;
    std::size_t failed_episodes = 0;
    std::size_t invalid_action_count = 0;
    std::size_t partial_action_count = 0;
    std::size_t total_steps = 0;
    double mean_steps = 0.0;
    MatchMode match = MatchMode::hit;
    std::map<std::string, std::size_t> error_tallies;

    nlohmann::ordered_json to_json() const;
};

struct SynthesisResult {
    std::vector<Trajectory> retained;  // input query order, then episode order
    std::vector<Trajectory> episodes;  // every episode run, same order
    SynthesisReport report;
};

SynthesisResult synthesize_dataset(const TextualGraph& graph, const std::vector<Query>& queries,
                                   const PolicyFactory& policies, const EpisodeConfig& config,
                                   const SynthesisOptions& options = {});

// One D_SFT record per step: {query_id, step, prompt, completion, synthetic_thought}.
nlohmann::ordered_json sft_record(const TextualGraph& graph, const Trajectory& trajectory, const StepRecord& step,
                          const PromptTemplate& prompt);

std::size_t emit_sft(const TextualGraph& graph, const std::vector<Trajectory>& trajectories,
                     const std::filesystem::path& path, const PromptTemplate& prompt = PromptTemplate{});

}  // namespace graphs3
