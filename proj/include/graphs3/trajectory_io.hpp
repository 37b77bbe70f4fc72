#pragma once

#include "graphs3/decision.hpp"
#include "graphs3/environment.hpp"
#include "graphs3/synthesis.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace graphs3 {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class JsonlWriter {
public:
    explicit JsonlWriter(const std::filesystem::path& path);

    void write(const nlohmann::ordered_json& record);
    void write(const nlohmann::json& record);
    std::size_t count() const noexcept { return count_; }
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t count_ = 0;
};

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

// Questions jsonl: {id, question, entities:[...], answers:[...]}
std::vector<Query> load_queries(const std::filesystem::path& path);
nlohmann::ordered_json query_to_json(const Query& query);

// ---- trajectory dump (per-step schema) ----
//
// {step, question, question_entities, true_answer, now_state, action_history,
//  extract_res: {Action, Objects}}. A trajectory starts at every record with
// step 0.

struct DumpRecord {
    int step = 0;
    std::string question;
    std::vector<std::string> question_entities;
    std::optional<std::vector<std::string>> true_answer;
    std::vector<std::string> now_state;
    std::vector<std::string> action_history;
    nlohmann::json extract_res;
};

nlohmann::ordered_json dump_record(const TextualGraph& graph, const StepRecord& step);
void write_trajectory_dump(const TextualGraph& graph, const std::vector<Trajectory>& trajectories,
                           const std::filesystem::path& path);

DumpRecord parse_dump_record(const nlohmann::json& json);
std::vector<std::vector<DumpRecord>> read_trajectory_dump(const std::filesystem::path& path);

// Query reconstructed from a dumped trajectory.
Query query_from_dump(const std::vector<DumpRecord>& records, std::string id);

// Actions of a dumped trajectory; undecodable extract_res entries are nullopt.
std::vector<std::optional<Action>> dump_actions(const std::vector<DumpRecord>& records);

// Per-episode decisions log with raw outputs, for offline replay:
// {query_id, episode, step, thought, raw, synthetic_thought, error, validity, extract_res}
nlohmann::ordered_json decision_record(const Trajectory& trajectory, const StepRecord& step);

// ---- replay against a recorded dump ----

struct SnapshotDiscrepancy {
    enum class Kind {
        step_index,             // recorded step number differs from the replayed one
        question,               // question text or entities differ
        history,                // action_history lines differ
        retained_after_choose,  // snapshot keeps a triple an earlier Choose dropped
        stale_exploration,      // snapshot keeps a triple surfaced before the last Choose, never chosen
        not_perceived,          // snapshot holds a triple no replayed Explore surfaced
        missing_from_snapshot,  // replayed view has a triple the snapshot lacks
    };

    std::size_t record = 0;
    int recorded_step = 0;
    Kind kind = Kind::step_index;
    std::string detail;
};

std::string_view discrepancy_kind_name(SnapshotDiscrepancy::Kind kind);

struct ReplayReport {
    Trajectory trajectory;
    std::vector<SnapshotDiscrepancy> discrepancies;
    std::vector<std::size_t> exact_records;  // records reproduced byte-for-byte
};

// Replays the recorded actions with an oracle policy and compares every
// recorded snapshot with the replayed state.
ReplayReport replay_dump(const TextualGraph& graph, const std::vector<DumpRecord>& records, const Query& query,
                         const EpisodeConfig& config);

}  // namespace graphs3
