#pragma once

#include "graphs3/chat_client.hpp"
#include "graphs3/environment.hpp"
#include "graphs3/policy.hpp"
#include "graphs3/synthesis.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace graphs3 {

struct RetrieverKind {
    enum class Type { interactive, khop, full_graph, no_graph };

    Type type = Type::interactive;
    int k = 0;  // hops for khop, 1..3

    static RetrieverKind interactive() { return {Type::interactive, 0}; }
    static RetrieverKind khop(int k);
    static RetrieverKind full_graph() { return {Type::full_graph, 0}; }
    static RetrieverKind no_graph() { return {Type::no_graph, 0}; }

    // "interactive", "khop1".."khop3" (also "khop:2"), "full", "none".
    static std::optional<RetrieverKind> parse(std::string_view name);
    std::string name() const;
    // Human label for the report table.
    std::string label() const;

    bool operator==(const RetrieverKind&) const = default;
};

std::vector<RetrieverKind> parse_retriever_list(std::string_view csv);

struct InteractiveResult {
    TripleSet subgraph;
    std::vector<std::string> answers;
    int steps = 0;
    std::size_t triples_retrieved = 0;  // |final perception|
    bool failed = false;
    std::string error;
};

InteractiveResult interactive_retrieve(const TextualGraph& graph, const Query& query, Policy& policy,
                                       const EpisodeConfig& config);

// Triples incident to any entity within hop distance < k of a resolved seed,
// ascending by position. Empty when no seed resolves.
TripleSet khop_retrieve(const TextualGraph& graph, const Query& query, int k);

struct EvalRun {
    std::string query_id;
    std::string retriever;
    std::size_t subgraph_size = 0;
    std::size_t triples_retrieved = 0;  // perception for interactive, subgraph size otherwise
    std::vector<std::string> predicted;
    bool correct = false;
    int steps = 0;
    bool failed = false;
    bool seed_missing = false;
    std::string error;

    nlohmann::ordered_json to_json() const;
};

struct QuestionMetrics {
    std::string query_id;
    double acc = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct Metrics {
    double acc = 0.0;
    double f1 = 0.0;
    double retrieved_triples_mean = 0.0;
    double retrieved_triples_on_correct_mean = 0.0;
    double subgraph_mean = 0.0;
    std::vector<QuestionMetrics> per_question;
};

struct F1Parts {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

F1Parts answer_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);

class MetricsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// `gold` is keyed by query id. Throws MetricsError for a run without gold.
// Acc follows `match`.
Metrics compute_metrics(const std::vector<EvalRun>& runs, const std::map<std::string, std::vector<std::string>>& gold,
                        MatchMode match = MatchMode::hit);

struct EvalOptions {
    PolicyFactory policies;                     // required for Interactive
    std::shared_ptr<const ChatClient> generator;  // answers for the other retrievers; null → containment
    EpisodeConfig episode;
    std::size_t parallelism = 1;
    bool report_strict = false;  // also report strict-match accuracy
};

struct RetrieverReport {
    RetrieverKind kind;
    std::vector<EvalRun> runs;  // input question order
    Metrics metrics;
    std::optional<Metrics> strict_metrics;
    bool containment = false;
    std::size_t seedless = 0;
    std::size_t generator_failures = 0;
};

struct EvalReport {
    std::vector<RetrieverReport> retrievers;
};

EvalReport run_eval(const TextualGraph& graph, const std::vector<Query>& queries,
                    const std::vector<RetrieverKind>& retrievers, const EvalOptions& options);

std::vector<nlohmann::ordered_json> eval_run_records(const EvalReport& report);
std::string format_eval_table(const EvalReport& report);

}  // namespace graphs3
