#include "graphs3/cli.hpp"

#include "graphs3/refinement.hpp"
#include "graphs3/retrieval_eval.hpp"
#include "graphs3/text.hpp"
#include "graphs3/trajectory_io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <map>
#include <set>

namespace graphs3 {

namespace {

namespace fs = std::filesystem;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptyResult : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string command;

    std::string graph;
    std::string format = "tsv";
    std::string questions;
    std::string prompt_template;

    std::string policy = "greedy_lexical";
    std::string script;
    std::string endpoint;
    std::string model;
    double temperature = 0.7;
    int timeout_ms = 60'000;
    int max_retries = 3;
    std::size_t max_in_flight = 8;
    std::uint64_t seed = 0;

    int t_max = 20;
    bool strict_objects = false;
    std::size_t episodes = 1;
    std::size_t max_retained = 0;
    std::string match = "hit";

    std::string refine_mode = "exact";
    std::size_t max_exact_len = 14;
    std::string oracle = "containment";
    double c1 = 0.2;
    double c2 = 0.6;

    std::string retrievers = "interactive,khop1,khop2,khop3,full,none";
    std::string generator_endpoint;
    std::string generator_model;
    bool report_strict = false;

    std::string trajectories;
    std::string refined;
    std::string decisions;
    std::string question_id;

    std::string out = "runs";
    std::string run_id;
    std::size_t parallelism = 1;
};

// ---- validation helpers ----

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw ConfigError(std::string(flag) + " is required");
    if (!fs::is_regular_file(path)) throw ConfigError(std::string(flag) + ": no such file '" + path + "'");
}

GraphFormat graph_format(const Options& o) {
    auto f = parse_graph_format(o.format);
    if (!f) throw ConfigError("--format must be tsv or jsonl (got '" + o.format + "')");
    return *f;
}

TextualGraph load_graph(const Options& o) {
    require_file(o.graph, "--graph");
    return TextualGraph::load(o.graph, graph_format(o));
}

std::vector<Query> load_questions(const Options& o) {
    require_file(o.questions, "--questions");
    return load_queries(o.questions);
}

EpisodeConfig episode_config(const Options& o) {
    if (o.t_max <= 0) throw ConfigError("--t-max must be positive");
    return EpisodeConfig{o.t_max, o.strict_objects};
}

MatchMode match_mode(const Options& o) {
    auto m = parse_match_mode(o.match);
    if (!m) throw ConfigError("--match must be hit or strict (got '" + o.match + "')");
    return *m;
}

RewardConfig reward_config(const Options& o) {
    RewardConfig r{o.c1, o.c2};
    try {
        r.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return r;
}

PromptTemplate prompt_template(const Options& o) {
    if (o.prompt_template.empty()) return PromptTemplate{};
    require_file(o.prompt_template, "--prompt-template");
    return PromptTemplate::from_file(o.prompt_template);
}

ChatClientConfig chat_config(const Options& o, const std::string& endpoint, const std::string& model) {
    ChatClientConfig c;
    c.endpoint = endpoint;
    c.model = model;
    c.temperature = o.temperature;
    c.timeout = std::chrono::milliseconds(o.timeout_ms);
    c.max_retries = o.max_retries;
    if (const char* key = std::getenv(kApiKeyEnv)) c.api_key = key;
    return c;
}

std::shared_ptr<const ChatClient> make_client(const Options& o, const std::string& endpoint, const std::string& model,
                                              const std::shared_ptr<InFlightLimiter>& limiter) {
    if (endpoint.empty() || model.empty()) throw ConfigError("a remote endpoint needs both an endpoint and a model");
    return std::make_shared<const ChatClient>(chat_config(o, endpoint, model), limiter);
}

// ---- oracle scripts ----

const Query* query_by_question(const std::vector<Query>& queries, const std::string& question) {
    for (const auto& q : queries)
        if (q.question == question) return &q;
    return nullptr;
}

// Accepts refined.jsonl, decisions.jsonl or an sample-schema dump.
ScriptBook load_scripts(const std::string& path, const std::vector<Query>& queries) {
    require_file(path, "--script");
    const auto records = read_jsonl(path);
    ScriptBook book;
    if (records.empty()) return book;
    const auto& first = records.front();
    if (first.contains("query_id") && first.contains("actions")) {
        for (const auto& r : records) {
            auto& script = book[r.at("query_id").get<std::string>()];
            script.clear();
            for (const auto& a : r.at("actions"))
                if (auto parsed = action_from_json(a); parsed.action) script.push_back(*parsed.action);
        }
        return book;
    }
    if (first.contains("query_id") && first.contains("extract_res")) {
        std::map<std::string, std::uint64_t> episode_of;
        for (const auto& r : records) {
            const auto id = r.at("query_id").get<std::string>();
            const auto episode = r.value("episode", std::uint64_t{0});
            auto [it, fresh] = episode_of.emplace(id, episode);
            if (!fresh && it->second != episode) continue;
            if (auto parsed = action_from_json(r.at("extract_res")); parsed.action) book[id].push_back(*parsed.action);
        }
        return book;
    }
    for (const auto& trajectory : read_trajectory_dump(path)) {
        const Query* q = query_by_question(queries, trajectory.front().question);
        if (!q) continue;
        auto& script = book[q->id];
        script.clear();
        for (auto& a : dump_actions(trajectory))
            if (a) script.push_back(std::move(*a));
    }
    return book;
}

PolicyFactory policy_factory(const Options& o, const std::vector<Query>& queries, const PromptTemplate& prompt,
                             const std::shared_ptr<InFlightLimiter>& limiter) {
    auto kind = parse_policy_kind(o.policy);
    if (!kind) throw ConfigError("--policy must be oracle, random, greedy_lexical or remote (got '" + o.policy + "')");
    PolicyConfig pc;
    pc.kind = *kind;
    pc.seed = o.seed;
    pc.max_in_flight = o.max_in_flight;
    pc.chat = chat_config(o, o.endpoint, o.model);
    ScriptBook scripts;
    std::shared_ptr<const ChatClient> client;
    if (pc.kind == PolicyKind::oracle) {
        if (o.script.empty()) throw ConfigError("--policy oracle needs --script");
        scripts = load_scripts(o.script, queries);
    }
    if (pc.kind == PolicyKind::remote) client = make_client(o, o.endpoint, o.model, limiter);
    return make_policy_factory(pc, std::move(scripts), client, prompt);
}

// ---- run directory ----

std::string timestamp_id() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

fs::path make_run_dir(const Options& o, const CLI::App& app) {
    fs::path dir;
    if (!o.run_id.empty()) {
        dir = fs::path(o.out) / o.run_id;
    } else {
        const std::string base = o.command + "-" + timestamp_id();
        dir = fs::path(o.out) / base;
        for (int i = 1; fs::exists(dir); ++i) dir = fs::path(o.out) / (base + "-" + std::to_string(i));
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create run directory '" + dir.string() + "': " + ec.message());
    write_text(dir / "config.txt", "command=" + o.command + "\n" + app.config_to_str(true, false));
    return dir;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) { write_text(path, j.dump(2) + "\n"); }

// ---- commands ----

int cmd_stats(const Options& o, std::ostream& out) {
    const TextualGraph graph = load_graph(o);
    out << format_stats(stats(graph), graph.duplicate_count());
    return kExitOk;
}

int cmd_synthesize(const Options& o, const CLI::App& app, std::ostream& out) {
    const TextualGraph graph = load_graph(o);
    const std::vector<Query> queries = load_questions(o);
    const PromptTemplate prompt = prompt_template(o);
    const EpisodeConfig episode = episode_config(o);
    auto limiter = std::make_shared<InFlightLimiter>(std::max<std::size_t>(o.max_in_flight, 1));
    const PolicyFactory factory = policy_factory(o, queries, prompt, limiter);
    SynthesisOptions so;
    so.parallelism = o.parallelism;
    so.episodes_per_query = o.episodes;
    so.max_retained_per_query = o.max_retained;
    so.match = match_mode(o);

    const fs::path dir = make_run_dir(o, app);
    const SynthesisResult result = synthesize_dataset(graph, queries, factory, episode, so);
    const std::size_t sft = emit_sft(graph, result.retained, dir / "sft.jsonl", prompt);
    write_trajectory_dump(graph, result.retained, dir / "trajectories.jsonl");
    JsonlWriter decisions(dir / "decisions.jsonl");
    for (const auto& t : result.episodes)
        for (const auto& step : t.steps) decisions.write(decision_record(t, step));
    decisions.close();

    nlohmann::ordered_json report = result.report.to_json();
    report["queries"] = queries.size();
    report["sft_records"] = sft;
    report["policy"] = o.policy;
    write_json(dir / "report.json", report);

    out << "retained " << result.retained.size() << "/" << result.report.episodes_run << " episodes, " << sft
        << " SFT records\n";
    out << "run directory: " << dir.string() << "\n";
    return result.retained.empty() ? kExitEmpty : kExitOk;
}

std::unique_ptr<AnswerOracle> answer_oracle(const Options& o) {
    if (o.oracle == "containment") return std::make_unique<ContainmentOracle>();
    if (o.oracle == "remote" || o.oracle == "remote_llm") {
        const std::string& endpoint = o.generator_endpoint.empty() ? o.endpoint : o.generator_endpoint;
        const std::string& model = o.generator_model.empty() ? o.model : o.generator_model;
        return std::make_unique<RemoteAnswerOracle>(
            make_client(o, endpoint, model, std::make_shared<InFlightLimiter>(std::max<std::size_t>(o.max_in_flight, 1))));
    }
    throw ConfigError("--oracle must be containment or remote (got '" + o.oracle + "')");
}

int cmd_refine(const Options& o, const CLI::App& app, std::ostream& out, std::ostream& err) {
    const TextualGraph graph = load_graph(o);
    require_file(o.trajectories, "--trajectories");
    std::vector<Query> queries;
    if (!o.questions.empty()) queries = load_questions(o);
    const PromptTemplate prompt = prompt_template(o);
    const EpisodeConfig episode = episode_config(o);
    const RewardConfig reward = reward_config(o);
    const MatchMode match = match_mode(o);
    auto mode = parse_refine_mode(o.refine_mode);
    if (!mode) throw ConfigError("--refine-mode must be exact or greedy (got '" + o.refine_mode + "')");
    const std::unique_ptr<AnswerOracle> oracle = answer_oracle(o);
    RefineOptions ro;
    ro.mode = *mode;
    ro.max_exact_len = o.max_exact_len;
    ro.episode = episode;

    const auto dumps = read_trajectory_dump(o.trajectories);
    const fs::path dir = make_run_dir(o, app);
    JsonlWriter refined_out(dir / "refined.jsonl");
    JsonlWriter report_out(dir / "refinement_report.jsonl");
    std::vector<nlohmann::ordered_json> rl;
    std::size_t not_retained = 0, failed = 0, refined_count = 0, discrepancies = 0, source_steps = 0, kept_steps = 0;
    for (std::size_t i = 0; i < dumps.size(); ++i) {
        const Query* known = query_by_question(queries, dumps[i].front().question);
        Query query = known ? *known : query_from_dump(dumps[i], "dump-" + std::to_string(i));
        const ReplayReport replayed = replay_dump(graph, dumps[i], query, episode);
        discrepancies += replayed.discrepancies.size();
        Trajectory trajectory = replayed.trajectory;
        trajectory.retained = retain(trajectory, match);
        if (!trajectory.retained) {
            ++not_retained;
            continue;
        }
        try {
            RefinedTrajectory r = refine(graph, trajectory, *oracle, ro);
            LabeledSteps labels = label_steps(graph, r, reward, prompt, episode);
            refined_out.write(refined_to_json(graph, r));
            report_out.write(refinement_report_record(r));
            for (auto& rec : labels.records) rl.push_back(std::move(rec));
            ++refined_count;
            source_steps += r.source_length;
            kept_steps += r.actions.size();
        } catch (const RefinementError& e) {
            ++failed;
            err << "warning: " << query.id << ": " << e.what() << "\n";
        } catch (const OracleIndeterminate& e) {
            ++failed;
            err << "warning: " << query.id << ": oracle gave no verdict: " << e.what() << "\n";
        }
    }
    refined_out.close();
    report_out.close();
    const std::size_t rl_count = emit_rl(rl, dir / "rl.jsonl");

    nlohmann::ordered_json report;
    report["trajectories"] = dumps.size();
    report["refined"] = refined_count;
    report["not_retained"] = not_retained;
    report["failed"] = failed;
    report["snapshot_discrepancies"] = discrepancies;
    report["source_steps"] = source_steps;
    report["refined_steps"] = kept_steps;
    report["rl_records"] = rl_count;
    report["mode"] = o.refine_mode;
    report["oracle"] = std::string(oracle->kind());
    write_json(dir / "report.json", report);

    out << "refined " << refined_count << "/" << dumps.size() << " trajectories (" << source_steps << " -> "
        << kept_steps << " steps), " << rl_count << " RL records\n";
    out << "run directory: " << dir.string() << "\n";
    return refined_count == 0 ? kExitEmpty : kExitOk;
}

PolicyDecision decision_from_record(const nlohmann::json& r, const TextualGraph& graph, const AgentState& state) {
    const std::string raw = r.value("raw", std::string{});
    if (!raw.empty() && !r.value("synthetic_thought", false)) {
        const TripleVocabulary vocab(graph, state.perception);
        return parse_decision(raw, &vocab);
    }
    PolicyDecision d;
    d.thought = r.value("thought", std::string{});
    d.synthetic_thought = r.value("synthetic_thought", false);
    ActionParse parsed = action_from_json(r.value("extract_res", nlohmann::json::object()));
    d.action = std::move(parsed.action);
    d.error = parsed.error;
    d.error_detail = parsed.detail;
    return d;
}

int cmd_label(const Options& o, const CLI::App& app, std::ostream& out, std::ostream& err) {
    const TextualGraph graph = load_graph(o);
    require_file(o.refined, "--refined");
    const PromptTemplate prompt = prompt_template(o);
    const EpisodeConfig episode = episode_config(o);
    const RewardConfig reward = reward_config(o);

    std::map<std::string, RefinedTrajectory> golden;
    std::vector<std::string> order;
    for (const auto& r : read_jsonl(o.refined)) {
        RefinedTrajectory t = refined_from_json(graph, r, episode);
        const std::string id = t.source_query_id;
        if (golden.emplace(id, std::move(t)).second) order.push_back(id);
    }
    const fs::path dir = make_run_dir(o, app);

    if (o.decisions.empty()) {
        std::vector<nlohmann::ordered_json> rl;
        for (const auto& id : order)
            for (auto& rec : label_steps(graph, golden.at(id), reward, prompt, episode).records) rl.push_back(std::move(rec));
        const std::size_t n = emit_rl(rl, dir / "rl.jsonl");
        out << "labeled " << order.size() << " refined trajectories, " << n << " RL records\n";
        out << "run directory: " << dir.string() << "\n";
        return n == 0 ? kExitEmpty : kExitOk;
    }

    // Score recorded decisions against the golden path of their question.
    require_file(o.decisions, "--decisions");
    std::vector<std::pair<std::string, std::uint64_t>> episodes;
    std::map<std::pair<std::string, std::uint64_t>, std::vector<nlohmann::json>> steps;
    for (auto& r : read_jsonl(o.decisions)) {
        auto key = std::make_pair(r.at("query_id").get<std::string>(), r.value("episode", std::uint64_t{0}));
        auto& list = steps[key];
        if (list.empty()) episodes.push_back(key);
        list.push_back(std::move(r));
    }
    JsonlWriter labels(dir / "labels.jsonl");
    std::map<std::string, std::size_t> branches;
    std::size_t skipped = 0;
    for (const auto& key : episodes) {
        auto g = golden.find(key.first);
        if (g == golden.end()) {
            ++skipped;
            continue;
        }
        AgentState state = init_state(g->second.query);
        for (const auto& r : steps.at(key)) {
            if (is_terminal(state, episode)) break;
            const PolicyDecision d = decision_from_record(r, graph, state);
            const RewardLabel label = step_reward(d, graph, state, g->second, reward);
            nlohmann::ordered_json rec;
            rec["query_id"] = key.first;
            rec["episode"] = key.second;
            rec["step"] = label.step;
            rec["reward"] = label.value;
            rec["branch"] = std::string(reward_branch_name(label.branch));
            rec["detail"] = label.detail;
            labels.write(rec);
            ++branches[rec["branch"].get<std::string>()];
            state = d.ok() ? apply_action(graph, state, *d.action, episode).state
                           : apply_undecodable(state, std::string(decision_error_name(d.error)), episode).state;
        }
    }
    labels.close();
    if (skipped) err << "warning: " << skipped << " episode(s) without a refined trajectory skipped\n";
    out << "labeled " << labels.count() << " decisions";
    for (const auto& [b, n] : branches) out << ", " << b << "=" << n;
    out << "\nrun directory: " << dir.string() << "\n";
    return labels.count() == 0 ? kExitEmpty : kExitOk;
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["acc"] = m.acc;
    j["f1"] = m.f1;
    j["retrieved_triples_mean"] = m.retrieved_triples_mean;
    j["retrieved_triples_on_correct_mean"] = m.retrieved_triples_on_correct_mean;
    j["subgraph_mean"] = m.subgraph_mean;
    auto& per = j["per_question"] = nlohmann::ordered_json::array();
    for (const auto& q : m.per_question)
        per.push_back({{"query_id", q.query_id}, {"acc", q.acc}, {"precision", q.precision}, {"recall", q.recall}, {"f1", q.f1}});
    return j;
}

int cmd_eval(const Options& o, const CLI::App& app, std::ostream& out) {
    const TextualGraph graph = load_graph(o);
    const std::vector<Query> queries = load_questions(o);
    const PromptTemplate prompt = prompt_template(o);
    std::vector<RetrieverKind> retrievers;
    try {
        retrievers = parse_retriever_list(o.retrievers);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("--retrievers: ") + e.what());
    }
    if (retrievers.empty()) throw ConfigError("--retrievers is empty");
    auto limiter = std::make_shared<InFlightLimiter>(std::max<std::size_t>(o.max_in_flight, 1));
    EvalOptions eo;
    eo.episode = episode_config(o);
    eo.parallelism = o.parallelism;
    eo.report_strict = o.report_strict || o.match == "strict";
    const bool interactive = std::any_of(retrievers.begin(), retrievers.end(), [](const RetrieverKind& k) {
        return k.type == RetrieverKind::Type::interactive;
    });
    if (interactive) eo.policies = policy_factory(o, queries, prompt, limiter);
    if (!o.generator_endpoint.empty())
        eo.generator = make_client(o, o.generator_endpoint, o.generator_model.empty() ? o.model : o.generator_model, limiter);

    const fs::path dir = make_run_dir(o, app);
    const EvalReport report = run_eval(graph, queries, retrievers, eo);
    JsonlWriter runs(dir / "runs.jsonl");
    for (const auto& r : eval_run_records(report)) runs.write(r);
    runs.close();
    const std::string table = format_eval_table(report);
    write_text(dir / "eval_table.txt", table);
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    for (const auto& r : report.retrievers) {
        nlohmann::ordered_json j;
        j["retriever"] = r.kind.name();
        j["label"] = r.kind.label();
        j["containment"] = r.containment;
        j["seedless"] = r.seedless;
        j["generator_failures"] = r.generator_failures;
        j["metrics"] = metrics_json(r.metrics);
        if (r.strict_metrics) j["strict_metrics"] = metrics_json(*r.strict_metrics);
        summary.push_back(std::move(j));
    }
    write_json(dir / "report.json", summary);
    out << table << "run directory: " << dir.string() << "\n";
    return queries.empty() ? kExitEmpty : kExitOk;
}

std::string delta_line(const AgentState& before, const AgentState& after) {
    std::string s = "perception " + std::to_string(before.perception.size()) + " -> " +
                    std::to_string(after.perception.size()) + ", subgraph " + std::to_string(before.subgraph.size()) +
                    " -> " + std::to_string(after.subgraph.size()) + ", view " +
                    std::to_string(graph_view(after).size());
    if (after.terminal) s += after.finished ? ", terminal (finish)" : ", terminal (budget)";
    return s;
}

int cmd_trace(const Options& o, const CLI::App& app, std::ostream& out) {
    const TextualGraph graph = load_graph(o);
    const std::vector<Query> queries = load_questions(o);
    if (o.question_id.empty()) throw ConfigError("--question-id is required");
    auto it = std::find_if(queries.begin(), queries.end(), [&](const Query& q) { return q.id == o.question_id; });
    if (it == queries.end()) throw ConfigError("unknown question id '" + o.question_id + "'");
    const PromptTemplate prompt = prompt_template(o);
    const EpisodeConfig episode = episode_config(o);
    auto limiter = std::make_shared<InFlightLimiter>(1);
    const PolicyFactory factory = policy_factory(o, queries, prompt, limiter);
    auto policy = factory(*it, 0);
    Trajectory t;
    int code = kExitOk;
    try {
        t = run_episode(graph, *it, *policy, episode);
    } catch (const EpisodeError& e) {
        t = e.partial();
        out << "episode failed: " << e.what() << "\n";
        code = kExitEmpty;
    }
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const StepRecord& s = t.steps[i];
        const AgentState& after = i + 1 < t.steps.size() ? t.steps[i + 1].state : t.final_state;
        out << "=== step " << s.step << " ===\n";
        out << "--- prompt ---\n" << serialize_state(graph, s.state, prompt) << "\n";
        out << "--- decision ---\n";
        if (!s.decision.raw.empty()) out << s.decision.raw << "\n";
        else if (s.decision.action) out << render_decision(s.decision.thought, *s.decision.action) << "\n";
        else out << "(no action: " << decision_error_name(s.decision.error) << ")\n";
        out << "--- validity ---\n" << validity_label(s.validity.kind);
        if (!s.validity.rejected.empty()) out << ", rejected " << python_list_repr(s.validity.rejected);
        if (!s.validity.reason.empty()) out << " (" << s.validity.reason << ")";
        out << "\n--- delta ---\n" << delta_line(s.state, after) << "\n";
    }
    out << "=== result ===\n";
    if (t.final_state.finished) out << "answers " << python_list_repr(t.final_answers) << "\n";
    else out << "no answer within " << episode.t_max << " steps\n";
    out << "correct " << (answers_match(t.final_answers, it->gold_answers, match_mode(o)) ? "yes" : "no") << "\n";
    const fs::path dir = make_run_dir(o, app);
    write_trajectory_dump(graph, {t}, dir / "trace.jsonl");
    JsonlWriter decisions(dir / "decisions.jsonl");
    for (const auto& step : t.steps) decisions.write(decision_record(t, step));
    decisions.close();
    out << "run directory: " << dir.string() << "\n";
    return code;
}

void add_options(CLI::App& app, Options& o) {
    app.add_option("--graph", o.graph, "Triple file");
    app.add_option("--format", o.format, "tsv or jsonl");
    app.add_option("--questions", o.questions, "Questions jsonl {id, question, entities, answers}");
    app.add_option("--prompt-template", o.prompt_template, "Prompt template file");
    app.add_option("--policy", o.policy, "oracle | random | greedy_lexical | remote");
    app.add_option("--script", o.script, "Oracle scripts: refined.jsonl, decisions.jsonl or a trajectory dump");
    app.add_option("--endpoint", o.endpoint, "Chat-completions URL for the remote policy");
    app.add_option("--model", o.model, "Model name for the remote policy");
    app.add_option("--temperature", o.temperature, "Sampling temperature");
    app.add_option("--timeout-ms", o.timeout_ms, "Per-request timeout");
    app.add_option("--max-retries", o.max_retries, "Retries for transient failures");
    app.add_option("--max-in-flight", o.max_in_flight, "Global cap on concurrent requests");
    app.add_option("--seed", o.seed, "Base seed for seeded policies");
    app.add_option("--t-max", o.t_max, "Step budget per episode");
    app.add_flag("--strict-objects", o.strict_objects, "Apply nothing when any object is out of vocabulary");
    app.add_option("--episodes", o.episodes, "Episodes per question");
    app.add_option("--max-retained", o.max_retained, "Retained episodes kept per question, 0 = all");
    app.add_option("--match", o.match, "hit or strict");
    app.add_option("--refine-mode", o.refine_mode, "exact or greedy");
    app.add_option("--max-exact-len", o.max_exact_len, "Longer sources are refined greedily");
    app.add_option("--oracle", o.oracle, "containment or remote");
    app.add_option("--c1", o.c1, "Reward for a well-formed action");
    app.add_option("--c2", o.c2, "Reward for a partially correct action");
    app.add_option("--retrievers", o.retrievers, "Comma list: interactive, khop1..khop3, full, none");
    app.add_option("--generator-endpoint", o.generator_endpoint, "Answer generator URL; unset = containment answers");
    app.add_option("--generator-model", o.generator_model, "Answer generator model");
    app.add_flag("--report-strict", o.report_strict, "Also report strict-match accuracy");
    app.add_option("--trajectories", o.trajectories, "Trajectory dump to refine");
    app.add_option("--refined", o.refined, "refined.jsonl to label");
    app.add_option("--decisions", o.decisions, "decisions.jsonl to score against refined trajectories");
    app.add_option("--question-id", o.question_id, "Question to trace");
    app.add_option("--out", o.out, "Output root");
    app.add_option("--run-id", o.run_id, "Run directory name, default timestamped");
    app.add_option("--parallelism", o.parallelism, "Worker threads");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Graph retrieval agent: trajectory synthesis, refinement, labeling and evaluation", "graphs3"};
    app.set_config("--config", "", "Flat key = value config file; command-line flags override it");
    add_options(app, o);
    app.require_subcommand(1, 1);
    const std::pair<const char*, const char*> commands[] = {
        {"stats", "Print graph statistics"},
        {"synthesize", "Run episodes and write SFT records and trajectory dumps"},
        {"refine", "Shorten retained trajectories and label golden steps"},
        {"label", "Write RL records, or score recorded decisions against refined trajectories"},
        {"eval", "Compare interactive retrieval with k-hop, full-graph and no-graph baselines"},
        {"trace", "Show one episode step by step"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        sub->callback([&o, name] { o.command = name; });
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        if (o.command == "stats") return cmd_stats(o, out);
        if (o.command == "synthesize") return cmd_synthesize(o, app, out);
        if (o.command == "refine") return cmd_refine(o, app, out, err);
        if (o.command == "label") return cmd_label(o, app, out, err);
        if (o.command == "eval") return cmd_eval(o, app, out);
        if (o.command == "trace") return cmd_trace(o, app, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const GraphLoadError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed input: " << e.what() << "\n";
        return kExitIo;
    } catch (const RefinementError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    err << "error: no command\n";
    return kExitConfig;
}

}  // namespace graphs3
