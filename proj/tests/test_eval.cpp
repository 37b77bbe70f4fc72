#include "fixtures.hpp"

#include "graphs3/retrieval_eval.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace graphs3;

namespace {

// All triples incident to entities at hop distance < k from the seeds,
// by repeated full scans.
TripleSet brute_khop(const TextualGraph& g, const std::vector<std::string>& seeds, int k) {
    std::set<std::string> reach(seeds.begin(), seeds.end());
    for (int d = 1; d < k; ++d) {
        std::set<std::string> next = reach;
        for (TriplePos p = 0; p < g.triple_count(); ++p) {
            const TripleText t = g.text(p);
            if (reach.count(t.head)) next.insert(t.tail);
            if (reach.count(t.tail)) next.insert(t.head);
        }
        reach = std::move(next);
    }
    TripleSet out;
    for (TriplePos p = 0; p < g.triple_count(); ++p) {
        const TripleText t = g.text(p);
        if (reach.count(t.head) || reach.count(t.tail)) out.push_back(p);
    }
    return out;
}

EvalRun run_with(std::string id, std::vector<std::string> predicted, std::size_t size = 0) {
    EvalRun r;
    r.query_id = std::move(id);
    r.predicted = std::move(predicted);
    r.triples_retrieved = r.subgraph_size = size;
    return r;
}

}  // namespace

TEST_CASE("F1 hand cases") {
    CHECK(answer_f1({"Drama"}, {"Drama"}).f1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(answer_f1({"Drama", "Comedy"}, {"Drama"}).f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(answer_f1({}, {"Drama"}).f1 == 0.0);
    CHECK(answer_f1({"Comedy"}, {"Drama"}).f1 == 0.0);
    CHECK(answer_f1({"drama", "Drama "}, {"Drama"}).f1 == 1.0);
}

TEST_CASE("compute_metrics aggregates over the stated subsets") {
    const std::map<std::string, std::vector<std::string>> gold{{"a", {"Drama"}}, {"b", {"Drama"}}, {"c", {"X", "Y"}}};
    const std::vector<EvalRun> runs{run_with("a", {"Drama"}, 4), run_with("b", {"Comedy"}, 10),
                                    run_with("c", {"X", "Z"}, 6)};
    const Metrics m = compute_metrics(runs, gold);
    CHECK(m.acc == doctest::Approx(2.0 / 3.0));
    CHECK(m.f1 == doctest::Approx((1.0 + 0.0 + 0.5) / 3.0));
    CHECK(m.retrieved_triples_mean == doctest::Approx(20.0 / 3.0));
    CHECK(m.retrieved_triples_on_correct_mean == doctest::Approx(5.0));
    CHECK(compute_metrics(runs, gold, MatchMode::strict).acc == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(compute_metrics({run_with("zzz", {})}, gold), MetricsError);
}

TEST_CASE("k-hop retrieval") {
    const auto g = fixtures::sample_graph();
    const Query q = fixtures::sample_query();
    CHECK(khop_retrieve(g, q, 1).size() == 6);
    CHECK(khop_retrieve(g, Query{"x", "?", {"Nobody"}, {"a"}}, 1).empty());
    const auto lone = TextualGraph::from_triples(std::vector<TripleText>{{"a", "r", "b"}, {"c", "r", "d"}});
    CHECK(khop_retrieve(lone, Query{"x", "?", {"a"}, {"b"}}, 3) == TripleSet{0});
    CHECK_THROWS_AS(khop_retrieve(g, q, 4), std::invalid_argument);

    std::mt19937_64 rng(8);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto triples = fixtures::random_triples(seed, 300, 150, 4);
        const auto rg = TextualGraph::from_triples(triples);
        const std::vector<std::string> seeds{triples[rng() % triples.size()].head, triples[rng() % triples.size()].tail};
        const Query rq{"r", "?", seeds, {"x"}};
        TripleSet previous;
        for (int k = 1; k <= 3; ++k) {
            const TripleSet got = khop_retrieve(rg, rq, k);
            CHECK(got == brute_khop(rg, seeds, k));
            CHECK(std::includes(got.begin(), got.end(), previous.begin(), previous.end()));
            previous = got;
        }
    }
}

TEST_CASE("run_eval baselines in containment mode") {
    const auto w = fixtures::tree_world(4, 12, 4, 3);
    const auto g = TextualGraph::from_triples(w.triples);
    PolicyConfig cfg;
    cfg.kind = PolicyKind::oracle;
    EvalOptions opts;
    opts.policies = make_policy_factory(cfg, w.scripts);
    opts.parallelism = 3;
    const EvalReport report = run_eval(g, w.queries,
                                       {RetrieverKind::interactive(), RetrieverKind::khop(1), RetrieverKind::full_graph(),
                                        RetrieverKind::no_graph()},
                                       opts);
    REQUIRE(report.retrievers.size() == 4);
    const auto& interactive = report.retrievers[0];
    CHECK(interactive.metrics.acc == 1.0);
    CHECK(interactive.metrics.f1 == 1.0);
    CHECK_FALSE(interactive.containment);
    for (std::size_t i = 0; i < w.queries.size(); ++i) CHECK(interactive.runs[i].query_id == w.queries[i].id);
    CHECK(report.retrievers[2].metrics.acc == 1.0);
    CHECK(report.retrievers[2].runs[0].subgraph_size == g.triple_count());
    CHECK(report.retrievers[3].metrics.acc == 0.0);
    CHECK(report.retrievers[3].runs[0].subgraph_size == 0);
    CHECK(report.retrievers[3].containment);

    const std::string table = format_eval_table(report);
    CHECK(table.find("exact-seed k-hop (k=1)") != std::string::npos);
    CHECK(table.find("containment") != std::string::npos);
    CHECK(eval_run_records(report).size() == 4 * w.queries.size());
}

TEST_CASE("interactive retrieval edge cases") {
    const auto g = fixtures::sample_graph();
    const Query q = fixtures::sample_query();
    OraclePolicy oracle(fixtures::sample_actions());
    const InteractiveResult r = interactive_retrieve(g, q, oracle, EpisodeConfig{});
    CHECK(r.answers == std::vector<std::string>{"Drama"});
    CHECK(r.subgraph.size() == 2);
    CHECK(r.triples_retrieved == 16);
    CHECK(r.steps == 7);

    RandomPolicy wander(3, RandomProfile{1.0, 0.0, 0.0});
    const InteractiveResult lost = interactive_retrieve(g, q, wander, EpisodeConfig{4, false});
    CHECK(lost.answers.empty());
    CHECK(lost.steps == 4);

    OraclePolicy short_script({ExploreEntity{{"The Life of Oharu"}}});
    const InteractiveResult failed = interactive_retrieve(g, q, short_script, EpisodeConfig{});
    CHECK(failed.failed);
    CHECK(failed.answers.empty());
}

TEST_CASE("retriever names") {
    CHECK(RetrieverKind::parse("khop2") == RetrieverKind::khop(2));
    CHECK(RetrieverKind::parse("KHOP:3") == RetrieverKind::khop(3));
    CHECK(RetrieverKind::parse("none") == RetrieverKind::no_graph());
    CHECK_FALSE(RetrieverKind::parse("khop4"));
    CHECK(parse_retriever_list("interactive, khop1,khop1") ==
          std::vector<RetrieverKind>{RetrieverKind::interactive(), RetrieverKind::khop(1)});
    CHECK_THROWS_AS(parse_retriever_list("bogus"), std::invalid_argument);
}
