#include "fixtures.hpp"

#include "graphs3/decision.hpp"

#include <doctest.h>

#include <random>

using namespace graphs3;

TEST_CASE("sample-format reply with one triple") {
    const std::string raw =
        "Thought Process:  \nThe director relation links the film to its director.\n\nAction Decision:\n```json\n"
        "{\n  \"Action\": \"Choose Relation\",\n  \"Objects\": [\"(The Life of Oharu, directed_by, Kenji Mizoguchi)\"]\n}\n```";
    const PolicyDecision d = parse_decision(raw);
    REQUIRE(d.ok());
    CHECK(d.thought == "Thought Process:  \nThe director relation links the film to its director.");
    CHECK(d.raw == raw);
    const auto* c = std::get_if<ChooseRelation>(&*d.action);
    REQUIRE(c);
    REQUIRE(c->triples.size() == 1);
    CHECK(c->triples[0] == TripleText{"The Life of Oharu", "directed_by", "Kenji Mizoguchi"});
}

TEST_CASE("error codes") {
    CHECK(parse_decision("I don't know").error == DecisionError::no_fenced_block);
    CHECK(parse_decision("```json\nnot json at all\n```").error == DecisionError::malformed_block);
    CHECK(parse_decision("```json\n{\"Action\": \"Jump\", \"Objects\": [\"x\"]}\n```").error ==
          DecisionError::unknown_action);
    CHECK(parse_decision("```json\n{\"Action\": \"Finish\", \"Objects\": []}\n```").error ==
          DecisionError::empty_objects);
    CHECK(parse_decision("```json\n{\"Action\": \"Choose Relation\", \"Objects\": [\"no triple here\"]}\n```").error ==
          DecisionError::unparseable_object);
    const PolicyDecision bad = parse_decision("I don't know");
    CHECK_FALSE(bad.ok());
    CHECK_FALSE(bad.action);
}

TEST_CASE("lenient decoding") {
    // doubled braces as in the template, lowercase label, number objects, unclosed fence
    const PolicyDecision d = parse_decision("thinking\nAction Decision:\n```json\n{{\"Action\": \"finish\", \"Objects\": [1952]}}\n");
    REQUIRE(d.ok());
    CHECK(std::get<Finish>(*d.action).answers == std::vector<std::string>{"1952"});
    CHECK(d.thought == "thinking");

    const PolicyDecision e = parse_decision("```\n{\"note\": 1}\n```\n```json\n{\"Action\": \"explore_entity\", \"Objects\": \"Ugetsu\"}\n```");
    REQUIRE(e.ok());
    CHECK(std::get<ExploreEntity>(*e.action).names == std::vector<std::string>{"Ugetsu"});
}

TEST_CASE("render then parse is identity") {
    const std::vector<Action> actions{ExploreEntity{{"The Life of Oharu", "Kenji Mizoguchi"}},
                                      ChooseRelation{{{"Ugetsu", "has_genre", "Drama"}, {"a b", "r", "c"}}},
                                      Finish{{"Drama", "it's \"quoted\""}}};
    for (const auto& a : actions) {
        const PolicyDecision d = parse_decision(render_decision("some thought", a));
        REQUIRE(d.ok());
        CHECK(*d.action == a);
        CHECK(d.thought == "some thought");
    }
}

TEST_CASE("triples with commas and parentheses round-trip through the perception vocabulary") {
    std::mt19937_64 rng(3);
    const std::vector<std::string> pieces{"Smith, John", "(film)", "A", "B, C (D)", "x", "The, End", "Q)", "(R"};
    std::vector<TripleText> triples;
    for (int i = 0; i < 1000; ++i) {
        triples.push_back({pieces[rng() % pieces.size()] + " " + std::to_string(i), "rel, " + std::to_string(rng() % 5),
                           pieces[rng() % pieces.size()] + " #" + std::to_string(rng() % 50)});
    }
    const auto g = TextualGraph::from_triples(triples);
    TripleSet all(g.triple_count());
    for (TriplePos p = 0; p < all.size(); ++p) all[p] = p;
    const TripleVocabulary vocab(g, all);
    std::size_t recovered = 0;
    for (TriplePos p = 0; p < g.triple_count(); ++p) {
        const TripleText t = g.text(p);
        const PolicyDecision d = parse_decision(render_decision("x", ChooseRelation{{t}}), &vocab);
        if (d.ok() && std::get<ChooseRelation>(*d.action).triples == std::vector<TripleText>{t}) ++recovered;
        // a model that quotes names and drops spaces still matches
        const std::string quoted = "(\"" + t.head + "\",\"" + t.relation + "\",\"" + t.tail + "\")";
        const auto m = vocab.match(quoted);
        CHECK(m == std::optional<TripleText>{t});
    }
    CHECK(recovered == g.triple_count());
}

TEST_CASE("answer list extraction") {
    CHECK(parse_answer_list("The answers are [\"Drama\", \"Comedy\"].") == std::vector<std::string>{"Drama", "Comedy"});
    CHECK(parse_answer_list("Drama\n\n Comedy \n") == std::vector<std::string>{"Drama", "Comedy"});
}
