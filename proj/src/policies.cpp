#include "graphs3/policy.hpp"

#include "graphs3/text.hpp"

#include <algorithm>
#include <set>

namespace graphs3 {

namespace {

PolicyDecision synthetic(std::string thought, Action action) {
    PolicyDecision d;
    d.thought = std::move(thought);
    d.raw = render_decision(d.thought, action);
    d.action = std::move(action);
    d.synthetic_thought = true;
    return d;
}

std::vector<EntityId> resolved_question_entities(const TextualGraph& graph, const Query& query) {
    std::vector<EntityId> ids;
    for (const auto& name : query.question_entities) {
        try {
            if (auto id = graph.resolve_entity(name)) ids.push_back(*id);
        } catch (const AmbiguousEntityError&) {
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

bool contains_id(const std::vector<EntityId>& sorted, EntityId id) {
    return std::binary_search(sorted.begin(), sorted.end(), id);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t episode_seed(std::uint64_t base, std::string_view query_id, std::size_t episode) {
    return splitmix64(splitmix64(base ^ fnv1a64(query_id)) + episode);
}

// ---- oracle ----

PolicyDecision OraclePolicy::decide(const TextualGraph&, const AgentState&) {
    if (cursor_ >= script_.size())
        throw PolicyExhausted("oracle script exhausted after " + std::to_string(script_.size()) + " actions");
    const std::size_t k = cursor_++;
    return synthetic("oracle step " + std::to_string(k), script_[k]);
}

// ---- random ----

RandomPolicy::RandomPolicy(std::uint64_t seed, RandomProfile profile) : rng_(seed), profile_(profile) {}

std::uint64_t RandomPolicy::below(std::uint64_t bound) {
    // Rejection sampling keeps the stream identical across standard libraries.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng_();
    } while (x >= limit);
    return x % bound;
}

double RandomPolicy::unit() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

PolicyDecision RandomPolicy::decide(const TextualGraph& graph, const AgentState& state) {
    std::vector<EntityId> explore_pool = entities_of(graph, state.perception);
    for (auto id : resolved_question_entities(graph, state.query)) explore_pool.push_back(id);
    std::sort(explore_pool.begin(), explore_pool.end());
    explore_pool.erase(std::unique(explore_pool.begin(), explore_pool.end()), explore_pool.end());
    std::erase_if(explore_pool, [&](EntityId id) { return contains_id(state.explored, id); });
    const std::vector<EntityId> finish_pool = entities_of(graph, state.subgraph);

    const double weights[3] = {explore_pool.empty() ? 0.0 : profile_.explore,
                               state.perception.empty() ? 0.0 : profile_.choose,
                               finish_pool.empty() ? 0.0 : profile_.finish};
    const double total = weights[0] + weights[1] + weights[2];
    if (total <= 0.0) {
        std::vector<std::string> answers = state.query.question_entities;
        if (answers.empty()) answers.push_back("unknown");
        return synthetic("random: no viable move", Finish{std::move(answers)});
    }
    const double u = unit() * total;
    int branch = -1;
    double cumulative = 0.0;
    for (int b = 0; b < 3; ++b) {
        cumulative += weights[b];
        if (weights[b] > 0.0 && u < cumulative) {
            branch = b;
            break;
        }
    }
    if (branch < 0)
        for (int b = 2; b >= 0 && branch < 0; --b)
            if (weights[b] > 0.0) branch = b;

    if (branch == 0) {
        const EntityId pick = explore_pool[below(explore_pool.size())];
        return synthetic("random: explore", ExploreEntity{{graph.entity_name(pick)}});
    }
    if (branch == 1) {
        TripleSet pool = state.perception;
        const std::size_t k = 1 + below(std::min<std::size_t>(pool.size(), 4));
        for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + below(pool.size() - i)]);
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        ChooseRelation choose;
        for (auto pos : pool) choose.triples.push_back(graph.text(pos));
        return synthetic("random: choose", std::move(choose));
    }
    const EntityId pick = finish_pool[below(finish_pool.size())];
    return synthetic("random: finish", Finish{{graph.entity_name(pick)}});
}

// ---- greedy lexical ----

namespace {

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {
        "a",    "an",   "and",  "are",  "as",    "at",   "be",    "by",    "can",  "did",  "do",   "does",
        "for",  "from", "had",  "has",  "have",  "how",  "in",    "is",    "it",   "its",  "many", "not",
        "of",   "on",   "or",   "that", "the",   "their", "them", "they",  "this", "to",   "was",  "were",
        "what", "when", "where", "which", "who", "whom", "whose", "with", "also"};
    return words;
}

std::set<std::string> token_set(std::string_view text) {
    auto tokens = word_tokens(text);
    return {tokens.begin(), tokens.end()};
}

// Equal, or sharing a prefix of at least five bytes ("directed"/"directors").
bool tokens_match(const std::string& a, const std::string& b) {
    if (a == b) return true;
    constexpr std::size_t kStem = 5;
    if (a.size() < kStem || b.size() < kStem) return false;
    return a.compare(0, kStem, b, 0, kStem) == 0;
}

// Number of tokens in `wanted` matched by some token of `have`.
std::size_t overlap(const std::set<std::string>& have, const std::set<std::string>& wanted) {
    std::size_t n = 0;
    for (const auto& w : wanted)
        n += std::any_of(have.begin(), have.end(), [&](const std::string& h) { return tokens_match(h, w); });
    return n;
}

void erase_matching(std::set<std::string>& from, const std::string& token) {
    std::erase_if(from, [&](const std::string& t) { return tokens_match(t, token); });
}

}  // namespace

PolicyDecision GreedyLexicalPolicy::decide(const TextualGraph& graph, const AgentState& state) {
    const auto question_ids = resolved_question_entities(graph, state.query);

    std::vector<std::string> unexplored_q;
    for (auto id : question_ids)
        if (!contains_id(state.explored, id)) unexplored_q.push_back(graph.entity_name(id));
    if (!unexplored_q.empty()) return synthetic("greedy_lexical: explore question entities", ExploreEntity{unexplored_q});

    // Question words not naming a question entity and not yet covered by a
    // chosen relation.
    std::set<std::string> remaining;
    for (auto& t : word_tokens(state.query.question))
        if (!stopwords().count(t)) remaining.insert(t);
    for (const auto& name : state.query.question_entities)
        for (auto& t : word_tokens(name)) erase_matching(remaining, t);
    for (const auto& entry : state.history) {
        if (!entry.action) continue;
        if (const auto* choose = std::get_if<ChooseRelation>(&*entry.action))
            for (const auto& t : choose->triples)
                for (auto& tok : word_tokens(t.relation)) erase_matching(remaining, tok);
    }

    const auto relation_score = [&](TriplePos pos) { return overlap(token_set(graph.relation_name(graph.triple(pos).relation)), remaining); };
    const auto endpoint_score = [&](TriplePos pos) {
        const auto& t = graph.triple(pos);
        std::size_t s = 0;
        for (EntityId e : {t.head, t.tail})
            if (!contains_id(question_ids, e) && !contains_id(state.explored, e)) s += overlap(token_set(graph.entity_name(e)), remaining);
        return s;
    };

    if (!state.frontier.empty() && !remaining.empty()) {
        std::size_t best = 0;
        TripleSet picked;
        for (auto pos : state.frontier) {
            const std::size_t score = 2 * relation_score(pos) + endpoint_score(pos);
            if (score == 0 || score < best) continue;
            if (score > best) {
                best = score;
                picked.clear();
            }
            picked.push_back(pos);
        }
        if (!picked.empty()) {
            ChooseRelation choose;
            for (auto pos : picked) choose.triples.push_back(graph.text(pos));
            return synthetic("greedy_lexical: choose overlapping triples", std::move(choose));
        }
    }

    std::vector<EntityId> candidates;
    for (auto id : entities_of(graph, state.subgraph))
        if (!contains_id(question_ids, id) && !contains_id(state.explored, id)) candidates.push_back(id);

    if (!candidates.empty() && !remaining.empty() && state.frontier.empty()) {
        std::size_t best = 0;
        std::vector<std::string> picked;
        for (auto id : candidates) {
            std::size_t score = 0;
            for (auto pos : graph.neighborhood(id)) score = std::max(score, relation_score(pos));
            if (score == 0 || score < best) continue;
            if (score > best) {
                best = score;
                picked.clear();
            }
            picked.push_back(graph.entity_name(id));
        }
        if (!picked.empty()) return synthetic("greedy_lexical: explore best-matching endpoint", ExploreEntity{picked});
    }

    std::vector<std::string> answers;
    for (auto id : candidates) answers.push_back(graph.entity_name(id));
    if (answers.empty())
        for (auto id : entities_of(graph, state.subgraph))
            if (!contains_id(question_ids, id)) answers.push_back(graph.entity_name(id));
    if (answers.empty()) answers.push_back("unknown");
    return synthetic("greedy_lexical: finish, no further progress", Finish{std::move(answers)});
}

// ---- remote ----

RemotePolicy::RemotePolicy(std::shared_ptr<const ChatClient> client, PromptTemplate prompt)
    : client_(std::move(client)), prompt_(std::move(prompt)) {
    if (!client_) throw std::invalid_argument("remote policy needs a chat client");
}

PolicyDecision RemotePolicy::decide(const TextualGraph& graph, const AgentState& state) {
    const std::string prompt = serialize_state(graph, state, prompt_);
    std::string reply;
    try {
        reply = client_->complete({ChatMessage{"user", prompt}});
    } catch (const ChatError& e) {
        PolicyDecision failed;
        failed.error = e.kind() == ChatError::Kind::timeout ? DecisionError::timeout : DecisionError::transport;
        failed.error_detail = e.what();
        return failed;
    }
    const TripleVocabulary vocabulary(graph, state.perception);
    return parse_decision(reply, &vocabulary);
}

// ---- config ----

std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
    if (name == "remote") return PolicyKind::remote;
    if (name == "oracle") return PolicyKind::oracle;
    if (name == "random") return PolicyKind::random;
    if (name == "greedy_lexical" || name == "greedy") return PolicyKind::greedy_lexical;
    return std::nullopt;
}

std::string_view policy_kind_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::remote: return "remote";
        case PolicyKind::oracle: return "oracle";
        case PolicyKind::random: return "random";
        case PolicyKind::greedy_lexical: return "greedy_lexical";
    }
    return "";
}

PolicyFactory make_policy_factory(const PolicyConfig& config, ScriptBook scripts,
                                  std::shared_ptr<const ChatClient> client, PromptTemplate prompt) {
    switch (config.kind) {
        case PolicyKind::oracle: {
            auto book = std::make_shared<const ScriptBook>(std::move(scripts));
            return [book](const Query& query, std::size_t) -> std::unique_ptr<Policy> {
                auto it = book->find(query.id);
                if (it == book->end()) throw PolicyError("no oracle script for query '" + query.id + "'");
                return std::make_unique<OraclePolicy>(it->second);
            };
        }
        case PolicyKind::random: {
            const auto seed = config.seed;
            const auto profile = config.profile;
            return [seed, profile](const Query& query, std::size_t episode) -> std::unique_ptr<Policy> {
                return std::make_unique<RandomPolicy>(episode_seed(seed, query.id, episode), profile);
            };
        }
        case PolicyKind::greedy_lexical:
            return [](const Query&, std::size_t) -> std::unique_ptr<Policy> {
                return std::make_unique<GreedyLexicalPolicy>();
            };
        case PolicyKind::remote: {
            if (!client) {
                if (config.chat.endpoint.empty() || config.chat.model.empty())
                    throw std::invalid_argument("remote policy requires an endpoint and a model name");
                client = std::make_shared<const ChatClient>(config.chat,
                                                            std::make_shared<InFlightLimiter>(config.max_in_flight));
            }
            auto shared_prompt = std::make_shared<const PromptTemplate>(std::move(prompt));
            return [client, shared_prompt](const Query&, std::size_t) -> std::unique_ptr<Policy> {
                return std::make_unique<RemotePolicy>(client, *shared_prompt);
            };
        }
    }
    throw std::invalid_argument("unknown policy kind");
}

}  // namespace graphs3
