#include "graphs3/retrieval_eval.hpp"

#include "graphs3/decision.hpp"
#include "graphs3/parallel.hpp"
#include "graphs3/prompt.hpp"
#include "graphs3/text.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

namespace graphs3 {

RetrieverKind RetrieverKind::khop(int k) {
    if (k < 1 || k > 3) throw std::invalid_argument("k-hop depth must be 1, 2 or 3 (got " + std::to_string(k) + ")");
    return {Type::khop, k};
}

std::optional<RetrieverKind> RetrieverKind::parse(std::string_view name) {
    const std::string n = normalize_name(name);
    if (n == "interactive") return interactive();
    if (n == "full" || n == "full_graph" || n == "fullgraph") return full_graph();
    if (n == "none" || n == "no_graph" || n == "nograph") return no_graph();
    std::string_view rest = n;
    if (rest.starts_with("khop")) {
        rest.remove_prefix(4);
        if (rest.starts_with(":") || rest.starts_with("-") || rest.starts_with("_")) rest.remove_prefix(1);
        if (rest.size() == 1 && rest[0] >= '1' && rest[0] <= '3') return khop(rest[0] - '0');
    }
    return std::nullopt;
}

std::string RetrieverKind::name() const {
    switch (type) {
        case Type::interactive: return "interactive";
        case Type::khop: return "khop" + std::to_string(k);
        case Type::full_graph: return "full";
        case Type::no_graph: return "none";
    }
    return "";
}

std::string RetrieverKind::label() const {
    switch (type) {
        case Type::interactive: return "interactive";
        case Type::khop: return "exact-seed k-hop (k=" + std::to_string(k) + ")";
        case Type::full_graph: return "full graph";
        case Type::no_graph: return "no graph";
    }
    return "";
}

std::vector<RetrieverKind> parse_retriever_list(std::string_view csv) {
    std::vector<RetrieverKind> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        auto end = csv.find(',', start);
        if (end == std::string_view::npos) end = csv.size();
        const auto item = trim(csv.substr(start, end - start));
        if (!item.empty()) {
            auto kind = RetrieverKind::parse(item);
            if (!kind) throw std::invalid_argument("unknown retriever '" + std::string(item) + "'");
            if (std::find(out.begin(), out.end(), *kind) == out.end()) out.push_back(*kind);
        }
        start = end + 1;
    }
    return out;
}

InteractiveResult interactive_retrieve(const TextualGraph& graph, const Query& query, Policy& policy,
                                       const EpisodeConfig& config) {
    InteractiveResult out;
    Trajectory trajectory;
    try {
        trajectory = run_episode(graph, query, policy, config);
    } catch (const EpisodeError& e) {
        out.failed = true;
        out.error = e.what();
        out.subgraph = e.partial().final_state.subgraph;
        out.steps = e.partial().final_state.step;
        out.triples_retrieved = e.partial().final_state.perception.size();
        return out;
    }
    out.subgraph = trajectory.final_state.subgraph;
    out.answers = trajectory.final_answers;
    out.steps = trajectory.final_state.step;
    out.triples_retrieved = trajectory.final_state.perception.size();
    return out;
}

namespace {

std::vector<EntityId> resolved_seeds(const TextualGraph& graph, const Query& query) {
    std::vector<EntityId> seeds;
    for (const auto& name : query.question_entities) {
        std::optional<EntityId> id;
        try {
            id = graph.resolve_entity(name);
        } catch (const AmbiguousEntityError&) {
        }
        if (id) seeds.push_back(*id);
    }
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    return seeds;
}

}  // namespace

TripleSet khop_retrieve(const TextualGraph& graph, const Query& query, int k) {
    if (k < 1 || k > 3) throw std::invalid_argument("k-hop depth must be 1, 2 or 3");
    std::vector<EntityId> frontier = resolved_seeds(graph, query);
    std::vector<bool> seen(graph.entity_count(), false);
    for (auto e : frontier) seen[static_cast<std::size_t>(e)] = true;
    std::vector<TriplePos> collected;
    for (int depth = 0; depth < k && !frontier.empty(); ++depth) {
        std::vector<EntityId> next;
        for (auto e : frontier) {
            for (auto edges : {graph.out_edges(e), graph.in_edges(e)}) {
                for (auto pos : edges) {
                    collected.push_back(pos);
                    const Triple& t = graph.triple(pos);
                    for (auto other : {t.head, t.tail}) {
                        if (!seen[static_cast<std::size_t>(other)]) {
                            seen[static_cast<std::size_t>(other)] = true;
                            next.push_back(other);
                        }
                    }
                }
            }
        }
        frontier = std::move(next);
    }
    std::sort(collected.begin(), collected.end());
    collected.erase(std::unique(collected.begin(), collected.end()), collected.end());
    return collected;
}

nlohmann::ordered_json EvalRun::to_json() const {
    nlohmann::ordered_json j;
    j["query_id"] = query_id;
    j["retriever"] = retriever;
    j["subgraph_size"] = subgraph_size;
    j["triples_retrieved"] = triples_retrieved;
    j["predicted"] = predicted;
    j["correct"] = correct;
    j["steps"] = steps;
    j["failed"] = failed;
    if (seed_missing) j["seed_missing"] = true;
    if (!error.empty()) j["error"] = error;
    return j;
}

F1Parts answer_f1(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
    std::set<std::string> p, g;
    for (const auto& s : predicted) p.insert(normalize_answer(s));
    for (const auto& s : gold) g.insert(normalize_answer(s));
    std::size_t common = 0;
    for (const auto& s : p) common += g.count(s);
    F1Parts out;
    out.precision = p.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(p.size());
    out.recall = g.empty() ? 0.0 : static_cast<double>(common) / static_cast<double>(g.size());
    const double sum = out.precision + out.recall;
    out.f1 = sum == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / sum;
    return out;
}

Metrics compute_metrics(const std::vector<EvalRun>& runs, const std::map<std::string, std::vector<std::string>>& gold,
                        MatchMode match) {
    Metrics m;
    if (runs.empty()) return m;
    double triples = 0, subgraph = 0, on_correct = 0;
    std::size_t correct = 0;
    for (const auto& run : runs) {
        auto it = gold.find(run.query_id);
        if (it == gold.end()) throw MetricsError("no gold answers for question '" + run.query_id + "'");
        QuestionMetrics q;
        q.query_id = run.query_id;
        q.acc = answers_match(run.predicted, it->second, match) ? 1.0 : 0.0;
        const F1Parts f = answer_f1(run.predicted, it->second);
        q.precision = f.precision;
        q.recall = f.recall;
        q.f1 = f.f1;
        m.acc += q.acc;
        m.f1 += q.f1;
        triples += static_cast<double>(run.triples_retrieved);
        subgraph += static_cast<double>(run.subgraph_size);
        if (q.acc == 1.0) {
            ++correct;
            on_correct += static_cast<double>(run.triples_retrieved);
        }
        m.per_question.push_back(std::move(q));
    }
    const double n = static_cast<double>(runs.size());
    m.acc /= n;
    m.f1 /= n;
    m.retrieved_triples_mean = triples / n;
    m.subgraph_mean = subgraph / n;
    m.retrieved_triples_on_correct_mean = correct == 0 ? 0.0 : on_correct / static_cast<double>(correct);
    return m;
}

namespace {

std::vector<std::string> containment_answers(const TextualGraph& graph, const TripleSet& subgraph,
                                             const std::vector<std::string>& gold) {
    std::set<std::string> wanted;
    for (const auto& g : gold) wanted.insert(normalize_answer(g));
    std::vector<std::string> out;
    std::set<std::string> emitted;
    for (auto e : entities_of(graph, subgraph)) {
        const std::string& name = graph.entity_name(e);
        const std::string key = normalize_answer(name);
        if (wanted.count(key) && emitted.insert(key).second) out.push_back(name);
    }
    return out;
}

EvalRun evaluate_one(const TextualGraph& graph, const Query& query, const RetrieverKind& kind,
                     const EvalOptions& options) {
    EvalRun run;
    run.query_id = query.id;
    run.retriever = kind.name();
    TripleSet subgraph;
    if (kind.type == RetrieverKind::Type::interactive) {
        if (!options.policies) throw std::invalid_argument("interactive retrieval needs a policy");
        auto policy = options.policies(query, 0);
        InteractiveResult r = interactive_retrieve(graph, query, *policy, options.episode);
        run.subgraph_size = r.subgraph.size();
        run.triples_retrieved = r.triples_retrieved;
        run.predicted = std::move(r.answers);
        run.steps = r.steps;
        run.failed = r.failed;
        run.error = std::move(r.error);
        if (run.failed) run.predicted.clear();
        run.correct = answers_match(run.predicted, query.gold_answers, MatchMode::hit);
        return run;
    }
    switch (kind.type) {
        case RetrieverKind::Type::khop:
            subgraph = khop_retrieve(graph, query, kind.k);
            run.seed_missing = resolved_seeds(graph, query).empty();
            break;
        case RetrieverKind::Type::full_graph:
            subgraph.resize(graph.triple_count());
            for (std::size_t i = 0; i < subgraph.size(); ++i) subgraph[i] = static_cast<TriplePos>(i);
            break;
        default:
            break;
    }
    run.subgraph_size = subgraph.size();
    run.triples_retrieved = subgraph.size();
    if (options.generator) {
        try {
            const std::string reply = options.generator->complete(
                {ChatMessage{"user", answer_prompt(query.question, render_triples(graph, subgraph))}});
            run.predicted = parse_answer_list(reply);
        } catch (const ChatError& e) {
            run.failed = true;
            run.error = e.what();
        }
    } else {
        run.predicted = containment_answers(graph, subgraph, query.gold_answers);
    }
    run.correct = answers_match(run.predicted, query.gold_answers, MatchMode::hit);
    return run;
}

}  // namespace

EvalReport run_eval(const TextualGraph& graph, const std::vector<Query>& queries,
                    const std::vector<RetrieverKind>& retrievers, const EvalOptions& options) {
    std::map<std::string, std::vector<std::string>> gold;
    for (const auto& q : queries) gold[q.id] = q.gold_answers;
    EvalReport report;
    for (const auto& kind : retrievers) {
        RetrieverReport r;
        r.kind = kind;
        r.containment = kind.type != RetrieverKind::Type::interactive && !options.generator;
        r.runs.resize(queries.size());
        parallel_for(queries.size(), options.parallelism,
                     [&](std::size_t i) { r.runs[i] = evaluate_one(graph, queries[i], kind, options); });
        for (const auto& run : r.runs) {
            r.seedless += run.seed_missing ? 1 : 0;
            r.generator_failures += (run.failed && kind.type != RetrieverKind::Type::interactive) ? 1 : 0;
        }
        r.metrics = compute_metrics(r.runs, gold, MatchMode::hit);
        if (options.report_strict) r.strict_metrics = compute_metrics(r.runs, gold, MatchMode::strict);
        report.retrievers.push_back(std::move(r));
    }
    return report;
}

std::vector<nlohmann::ordered_json> eval_run_records(const EvalReport& report) {
    std::vector<nlohmann::ordered_json> out;
    for (const auto& r : report.retrievers)
        for (const auto& run : r.runs) out.push_back(run.to_json());
    return out;
}

namespace {

std::string fixed(double v, int digits) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

std::string format_eval_table(const EvalReport& report) {
    bool strict = false;
    for (const auto& r : report.retrievers) strict = strict || r.strict_metrics.has_value();

    std::vector<std::string> header{"retriever", "Acc", "F1", "mean triples", "mean triples on correct"};
    if (strict) header.insert(header.begin() + 2, "Acc (strict)");
    std::vector<std::vector<std::string>> rows{header};
    std::vector<std::string> notes;
    for (const auto& r : report.retrievers) {
        std::string name = r.kind.label();
        if (r.containment) name += " *";
        std::vector<std::string> row{name, fixed(r.metrics.acc, 4), fixed(r.metrics.f1, 4),
                                     fixed(r.metrics.retrieved_triples_mean, 2),
                                     fixed(r.metrics.retrieved_triples_on_correct_mean, 2)};
        if (strict) row.insert(row.begin() + 2, r.strict_metrics ? fixed(r.strict_metrics->acc, 4) : "-");
        rows.push_back(std::move(row));
        if (r.kind.type == RetrieverKind::Type::interactive)
            notes.push_back("interactive: mean triples counts the perception window; mean final subgraph " +
                            fixed(r.metrics.subgraph_mean, 2));
        if (r.seedless) notes.push_back(r.kind.name() + ": " + std::to_string(r.seedless) + " question(s) without a resolvable seed");
        if (r.generator_failures)
            notes.push_back(r.kind.name() + ": " + std::to_string(r.generator_failures) + " generator failure(s)");
    }
    bool any_containment = false;
    for (const auto& r : report.retrievers) any_containment = any_containment || r.containment;
    if (any_containment) notes.insert(notes.begin(), "* containment answers (subgraph entities matched against gold): retrieval recall only");

    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream os;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            const std::string& cell = rows[i][c];
            const std::size_t pad = width[c] - cell.size();
            if (c == 0) os << cell << std::string(pad, ' ');
            else os << "  " << std::string(pad, ' ') << cell;
        }
        os << '\n';
        if (i == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w;
            os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
        }
    }
    for (const auto& n : notes) os << n << '\n';
    return os.str();
}

}  // namespace graphs3
