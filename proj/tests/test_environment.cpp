#include "fixtures.hpp"

#include "graphs3/prompt.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace graphs3;

namespace {

const EpisodeConfig kDefault{};

AgentState after(const TextualGraph& g, std::size_t n, const EpisodeConfig& cfg = kDefault) {
    const auto actions = fixtures::sample_actions();
    AgentState s = init_state(fixtures::sample_query());
    for (std::size_t i = 0; i < n; ++i) s = apply_action(g, s, actions.at(i), cfg).state;
    return s;
}

bool subset(const TripleSet& a, const TripleSet& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

}  // namespace

TEST_CASE("init_state") {
    const Query q = fixtures::sample_query();
    const AgentState s = init_state(q);
    CHECK(s.perception.empty());
    CHECK(s.subgraph.empty());
    CHECK(s.history.empty());
    CHECK(s.step == 0);
    CHECK_FALSE(s.terminal);
    CHECK(s.query.question_entities == std::vector<std::string>{"The Life of Oharu"});
    CHECK(init_state(q) == init_state(q));
    CHECK_FALSE(init_state(Query{"x", "no entities", {}, {"a"}}).terminal);
}

TEST_CASE("validate_action examples") {
    const auto g = fixtures::sample_graph();
    const AgentState s2 = after(g, 2);
    CHECK(validate_action(g, s2, ExploreEntity{{"Kenji Mizoguchi"}}).kind == Validity::Kind::valid);

    const AgentState s0 = init_state(fixtures::sample_query());
    const Validity never = validate_action(g, s0, ChooseRelation{{{"Ugetsu", "has_genre", "Drama"}}});
    CHECK(never.kind == Validity::Kind::invalid);
    CHECK(never.reason == "not in perception");

    const Validity partial = validate_action(g, s2, ExploreEntity{{"Kenji Mizoguchi", "Made Up Person"}});
    CHECK(partial.kind == Validity::Kind::partial);
    CHECK(partial.accepted == std::vector<std::string>{"Kenji Mizoguchi"});
    CHECK(partial.rejected == std::vector<std::string>{"Made Up Person"});

    // resolves in the graph but was never surfaced
    CHECK(validate_action(g, s0, ExploreEntity{{"Ugetsu"}}).kind == Validity::Kind::invalid);
    CHECK(validate_action(g, s0, ExploreEntity{{}}).kind == Validity::Kind::invalid);
    CHECK(validate_action(g, s0, Finish{{"anything at all"}}).kind == Validity::Kind::valid);
    CHECK(validate_action(g, s0, Finish{{}}).kind == Validity::Kind::invalid);
}

TEST_CASE("apply_action: Choose replaces, Explore unions, Finish is pure") {
    const auto g = fixtures::sample_graph();
    const AgentState s1 = after(g, 1);
    CHECK(s1.perception.size() == 6);
    const AgentState s2 = after(g, 2);
    CHECK(render_triples(g, s2.subgraph) ==
          std::vector<std::string>{"(The Life of Oharu, directed_by, Kenji Mizoguchi)"});
    CHECK(s2.perception == s1.perception);

    const AgentState s6 = after(g, 6);
    CHECK(render_triples(g, s6.subgraph) ==
          std::vector<std::string>{"(Sisters of the Gion, has_genre, Drama)", "(Ugetsu, has_genre, Drama)"});
    const Transition fin = apply_action(g, s6, Finish{{"Drama"}}, kDefault);
    CHECK(fin.state.terminal);
    CHECK(fin.state.finished);
    CHECK(fin.state.perception == s6.perception);
    CHECK(fin.state.subgraph == s6.subgraph);
    CHECK(fin.state.history.size() == s6.history.size() + 1);
    CHECK_THROWS_AS(apply_action(g, fin.state, Finish{{"Drama"}}, kDefault), TerminalStateError);
}

TEST_CASE("invalid and undecodable steps consume budget") {
    const auto g = fixtures::sample_graph();
    const AgentState s0 = init_state(fixtures::sample_query());
    const Transition bad = apply_action(g, s0, ChooseRelation{{{"Ugetsu", "has_genre", "Drama"}}}, kDefault);
    CHECK(bad.validity.kind == Validity::Kind::invalid);
    CHECK(bad.state.step == 1);
    CHECK(bad.state.subgraph.empty());
    const Transition undecodable = apply_undecodable(bad.state, "no_fenced_block", kDefault);
    CHECK(undecodable.state.step == 2);
    CHECK(history_lines(undecodable.state).back() == "step 2, Invalid, Objects: []");
}

TEST_CASE("strict objects apply nothing on a partial action") {
    const auto g = fixtures::sample_graph();
    const AgentState s2 = after(g, 2);
    const Action a = ExploreEntity{{"Kenji Mizoguchi", "Made Up Person"}};
    const Transition lenient = apply_action(g, s2, a, EpisodeConfig{20, false});
    const Transition strict = apply_action(g, s2, a, EpisodeConfig{20, true});
    CHECK(lenient.validity.kind == Validity::Kind::partial);
    CHECK(lenient.state.perception.size() > s2.perception.size());
    CHECK(strict.state.perception == s2.perception);
    CHECK(strict.state.step == s2.step + 1);
}

TEST_CASE("step budget terminates") {
    const auto g = fixtures::sample_graph();
    const EpisodeConfig cfg{3, false};
    AgentState s = init_state(fixtures::sample_query());
    CHECK_FALSE(is_terminal(s, cfg));
    for (int i = 0; i < 3; ++i) s = apply_action(g, s, ExploreEntity{{"The Life of Oharu"}}, cfg).state;
    CHECK(is_terminal(s, cfg));
    CHECK(s.terminal);
    CHECK_FALSE(s.finished);
    CHECK(s.step == 3);
}

TEST_CASE("serialize_state sections") {
    const auto g = fixtures::sample_graph();
    const std::string empty = serialize_state(g, init_state(fixtures::sample_query()));
    CHECK(empty.find("Entities in Question:\n['The Life of Oharu']\n\nCurrent Graph State:\n\n\nAction History:\n\n\n---") !=
          std::string::npos);

    const std::string s2 = serialize_state(g, after(g, 2));
    CHECK(s2.find("Current Graph State:\n(The Life of Oharu, directed_by, Kenji Mizoguchi)\n\nAction History:\n"
                  "step 1, Explore Entity, Objects: ['The Life of Oharu']\n"
                  "step 2, Choose Relation, Objects: ['(The Life of Oharu, directed_by, Kenji Mizoguchi)']\n\n---") !=
          std::string::npos);
    CHECK(serialize_state(g, after(g, 4)) == serialize_state(g, after(g, 4)));
}

TEST_CASE("default prompt template equals the shipped template file") {
    CHECK(std::string(default_prompt_template()) == fixtures::read_file(fixtures::data_dir() / "prompt_template.txt"));
    const PromptTemplate t("{question}|{{x}}|{entities}");
    CHECK(t.render(PromptFields{"q", "e", "", ""}) == "q|{x}|e");
}

TEST_CASE("random rollouts keep subgraph within perception and perception monotone") {
    const auto triples = fixtures::random_triples(11, 400, 60, 5);
    const auto g = TextualGraph::from_triples(triples);
    std::mt19937_64 rng(5);
    for (int episode = 0; episode < 200; ++episode) {
        const Query q{"q", "?", {triples[rng() % triples.size()].head}, {"x"}};
        const EpisodeConfig cfg{12, episode % 2 == 0};
        AgentState s = init_state(q);
        while (!is_terminal(s, cfg)) {
            Action a;
            const auto roll = rng() % 10;
            if (roll < 5) {
                auto ents = entities_of(g, s.perception);
                std::string name = ents.empty() ? q.question_entities[0] : g.entity_name(ents[rng() % ents.size()]);
                a = ExploreEntity{{name, "ghost"}};
            } else if (roll < 9) {
                std::vector<TripleText> pick;
                for (auto p : s.perception)
                    if (rng() % 3 == 0) pick.push_back(g.text(p));
                pick.push_back({"ghost", "r", "ghost"});
                a = ChooseRelation{pick};
            } else {
                a = Finish{{"x"}};
            }
            const AgentState next = apply_action(g, s, a, cfg).state;
            CHECK(subset(next.subgraph, next.perception));
            CHECK(subset(s.perception, next.perception));
            CHECK(next.step == s.step + 1);
            CHECK(next.history.size() == static_cast<std::size_t>(next.step));
            s = next;
        }
        CHECK(s.step <= cfg.t_max);
    }
}
