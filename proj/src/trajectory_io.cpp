#include "graphs3/trajectory_io.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace graphs3 {

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : path_(path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot write " + path.string());
}

void JsonlWriter::write(const nlohmann::ordered_json& record) {
    out_ << record.dump() << '\n';
    if (!out_) throw IoError("write failed: " + path_.string());
    ++count_;
}

void JsonlWriter::write(const nlohmann::json& record) {
    out_ << record.dump() << '\n';
    if (!out_) throw IoError("write failed: " + path_.string());
    ++count_;
}

void JsonlWriter::close() {
    out_.close();
    if (out_.fail()) throw IoError("close failed: " + path_.string());
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<nlohmann::json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        auto row = nlohmann::json::parse(line, nullptr, false);
        if (row.is_discarded())
            throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed json");
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

std::vector<std::string> string_list(const nlohmann::json& row, const char* key) {
    std::vector<std::string> out;
    auto it = row.find(key);
    if (it == row.end() || it->is_null()) return out;
    if (!it->is_array()) throw IoError(std::string("field '") + key + "' must be a list");
    for (const auto& v : *it) {
        if (v.is_string()) {
            out.push_back(v.get<std::string>());
        } else if (v.is_number() || v.is_boolean()) {
            out.push_back(v.dump());
        } else {
            throw IoError(std::string("field '") + key + "' must hold strings");
        }
    }
    return out;
}

}  // namespace

std::vector<Query> load_queries(const std::filesystem::path& path) {
    std::vector<Query> queries;
    std::set<std::string> seen;
    std::size_t index = 0;
    for (const auto& row : read_jsonl(path)) {
        ++index;
        const std::string where = path.string() + " record " + std::to_string(index);
        if (!row.is_object()) throw IoError(where + ": not an object");
        Query q;
        auto id = row.find("id");
        if (id == row.end()) throw IoError(where + ": missing id");
        q.id = id->is_string() ? id->get<std::string>() : id->dump();
        q.question = row.value("question", "");
        if (q.question.empty()) throw IoError(where + ": empty question");
        try {
            q.question_entities = string_list(row, "entities");
            q.gold_answers = string_list(row, "answers");
        } catch (const IoError& e) {
            throw IoError(where + ": " + e.what());
        }
        if (!seen.insert(q.id).second) throw IoError(where + ": duplicate id '" + q.id + "'");
        queries.push_back(std::move(q));
    }
    return queries;
}

nlohmann::ordered_json query_to_json(const Query& query) {
    nlohmann::ordered_json j;
    j["id"] = query.id;
    j["question"] = query.question;
    j["entities"] = query.question_entities;
    j["answers"] = query.gold_answers;
    return j;
}

namespace {

nlohmann::ordered_json extract_res(const std::optional<Action>& action) {
    if (action) return action_to_json(*action);
    return nlohmann::ordered_json{{"Action", "Invalid"}, {"Objects", nlohmann::ordered_json::array()}};
}

}  // namespace

nlohmann::ordered_json dump_record(const TextualGraph& graph, const StepRecord& step) {
    const Query& q = step.state.query;
    nlohmann::ordered_json j;
    j["step"] = step.step;
    j["question"] = q.question;
    j["question_entities"] = q.question_entities;
    j["true_answer"] = q.gold_answers;
    j["now_state"] = render_triples(graph, graph_view(step.state));
    j["action_history"] = history_lines(step.state);
    j["extract_res"] = extract_res(step.decision.action);
    return j;
}

void write_trajectory_dump(const TextualGraph& graph, const std::vector<Trajectory>& trajectories,
                           const std::filesystem::path& path) {
    JsonlWriter out(path);
    for (const auto& t : trajectories)
        for (const auto& step : t.steps) out.write(dump_record(graph, step));
    out.close();
}

DumpRecord parse_dump_record(const nlohmann::json& json) {
    if (!json.is_object()) throw IoError("trajectory record is not an object");
    DumpRecord r;
    r.step = json.value("step", 0);
    r.question = json.value("question", "");
    r.question_entities = string_list(json, "question_entities");
    if (json.contains("true_answer")) r.true_answer = string_list(json, "true_answer");
    r.now_state = string_list(json, "now_state");
    r.action_history = string_list(json, "action_history");
    auto it = json.find("extract_res");
    if (it == json.end()) throw IoError("trajectory record lacks extract_res");
    r.extract_res = *it;
    return r;
}

std::vector<std::vector<DumpRecord>> read_trajectory_dump(const std::filesystem::path& path) {
    std::vector<std::vector<DumpRecord>> trajectories;
    for (const auto& row : read_jsonl(path)) {
        DumpRecord r = parse_dump_record(row);
        if (trajectories.empty() || r.step == 0) trajectories.emplace_back();
        trajectories.back().push_back(std::move(r));
    }
    return trajectories;
}

Query query_from_dump(const std::vector<DumpRecord>& records, std::string id) {
    Query q;
    q.id = std::move(id);
    if (records.empty()) return q;
    q.question = records.front().question;
    q.question_entities = records.front().question_entities;
    for (const auto& r : records)
        if (r.true_answer) {
            q.gold_answers = *r.true_answer;
            break;
        }
    return q;
}

std::vector<std::optional<Action>> dump_actions(const std::vector<DumpRecord>& records) {
    std::vector<std::optional<Action>> actions;
    actions.reserve(records.size());
    for (const auto& r : records) actions.push_back(action_from_json(r.extract_res).action);
    return actions;
}

nlohmann::ordered_json decision_record(const Trajectory& trajectory, const StepRecord& step) {
    nlohmann::ordered_json j;
    j["query_id"] = trajectory.query.id;
    j["episode"] = trajectory.episode;
    j["step"] = step.step;
    j["thought"] = step.decision.thought;
    j["raw"] = step.decision.raw;
    j["synthetic_thought"] = step.decision.synthetic_thought;
    j["error"] = std::string(decision_error_name(step.decision.error));
    j["validity"] = std::string(validity_label(step.validity.kind));
    j["extract_res"] = extract_res(step.decision.action);
    return j;
}

// ---- replay ----

std::string_view discrepancy_kind_name(SnapshotDiscrepancy::Kind kind) {
    using K = SnapshotDiscrepancy::Kind;
    switch (kind) {
        case K::step_index: return "step_index";
        case K::question: return "question";
        case K::history: return "history";
        case K::retained_after_choose: return "retained_after_choose";
        case K::stale_exploration: return "stale_exploration";
        case K::not_perceived: return "not_perceived";
        case K::missing_from_snapshot: return "missing_from_snapshot";
    }
    return "";
}

namespace {

class RecordedPolicy final : public Policy {
public:
    explicit RecordedPolicy(std::vector<std::optional<Action>> actions) : actions_(std::move(actions)) {}

    PolicyDecision decide(const TextualGraph&, const AgentState&) override {
        if (cursor_ >= actions_.size()) throw PolicyExhausted("recorded trajectory exhausted");
        const std::size_t k = cursor_++;
        PolicyDecision d;
        d.thought = "oracle step " + std::to_string(k);
        d.synthetic_thought = true;
        if (actions_[k]) {
            d.action = actions_[k];
            d.raw = render_decision(d.thought, *d.action);
        } else {
            d.error = DecisionError::unknown_action;
        }
        return d;
    }

private:
    std::vector<std::optional<Action>> actions_;
    std::size_t cursor_ = 0;
};

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += " | ";
        out += s;
    }
    return out;
}

}  // namespace

ReplayReport replay_dump(const TextualGraph& graph, const std::vector<DumpRecord>& records, const Query& query,
                         const EpisodeConfig& config) {
    ReplayReport report;
    RecordedPolicy policy(dump_actions(records));
    try {
        report.trajectory = run_episode(graph, query, policy, config);
    } catch (const EpisodeError& e) {
        report.trajectory = e.partial();
    }
    const auto& steps = report.trajectory.steps;
    using K = SnapshotDiscrepancy::Kind;

    for (std::size_t i = 0; i < records.size(); ++i) {
        const DumpRecord& rec = records[i];
        const std::size_t before = report.discrepancies.size();
        auto flag = [&](K kind, std::string detail) {
            report.discrepancies.push_back(SnapshotDiscrepancy{i, rec.step, kind, std::move(detail)});
        };
        if (i >= steps.size()) {
            flag(K::history, "replay terminated before this record");
            continue;
        }
        const AgentState& state = steps[i].state;
        if (rec.step != state.step)
            flag(K::step_index, "recorded step " + std::to_string(rec.step) + ", replayed step " +
                                    std::to_string(state.step));
        if (rec.question != state.query.question || rec.question_entities != state.query.question_entities)
            flag(K::question, "question or question entities differ");
        const auto ours_history = history_lines(state);
        if (rec.action_history != ours_history)
            flag(K::history, "recorded [" + join(rec.action_history) + "] replayed [" + join(ours_history) + "]");

        const auto view = graph_view(state);
        const auto ours = render_triples(graph, view);
        if (rec.now_state != ours) {
            std::set<TriplePos> chosen;
            for (const auto& entry : state.history) {
                if (!entry.action) continue;
                if (const auto* choose = std::get_if<ChooseRelation>(&*entry.action))
                    for (const auto& t : choose->triples)
                        if (auto pos = graph.find_triple(t)) chosen.insert(*pos);
            }
            const TripleVocabulary vocabulary(graph, state.perception);
            const std::set<std::string> ours_set(ours.begin(), ours.end());
            const std::set<std::string> recorded_set(rec.now_state.begin(), rec.now_state.end());
            for (const auto& line : rec.now_state) {
                if (ours_set.count(line)) continue;
                std::optional<TriplePos> pos;
                if (auto text = vocabulary.match(line)) pos = graph.find_triple(*text);
                if (!pos)
                    if (auto text = parse_triple_text(line)) pos = graph.find_triple(*text);
                if (!pos || !std::binary_search(state.perception.begin(), state.perception.end(), *pos)) {
                    flag(K::not_perceived, line);
                } else if (chosen.count(*pos)) {
                    flag(K::retained_after_choose, line);
                } else {
                    flag(K::stale_exploration, line);
                }
            }
            for (const auto& line : ours)
                if (!recorded_set.count(line)) flag(K::missing_from_snapshot, line);
            if (report.discrepancies.size() == before)
                flag(K::missing_from_snapshot, "same triples, different order");
        }
        if (report.discrepancies.size() == before) report.exact_records.push_back(i);
    }
    if (steps.size() > records.size())
        report.discrepancies.push_back(
            SnapshotDiscrepancy{records.size(), -1, K::history, "replay ran past the recorded records"});
    return report;
}

}  // namespace graphs3
