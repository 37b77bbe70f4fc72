#pragma once

#include "graphs3/chat_client.hpp"
#include "graphs3/decision.hpp"
#include "graphs3/environment.hpp"
#include "graphs3/prompt.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace graphs3 {

// Hard policy failure: the episode cannot continue.
class PolicyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PolicyExhausted : public PolicyError {
public:
    using PolicyError::PolicyError;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual PolicyDecision decide(const TextualGraph& graph, const AgentState& state) = 0;
};

// Replays a fixed action list. Thoughts are templated ("oracle step k").
class OraclePolicy final : public Policy {
public:
    explicit OraclePolicy(std::vector<Action> script) : script_(std::move(script)) {}

    PolicyDecision decide(const TextualGraph& graph, const AgentState& state) override;

private:
    std::vector<Action> script_;
    std::size_t cursor_ = 0;
};

struct RandomProfile {
    double explore = 0.5;
    double choose = 0.4;
    double finish = 0.1;
};

// Seeded uniform explorer; fully determined by (seed, graph, query).
class RandomPolicy final : public Policy {
public:
    explicit RandomPolicy(std::uint64_t seed, RandomProfile profile = {});

    PolicyDecision decide(const TextualGraph& graph, const AgentState& state) override;

private:
    std::uint64_t below(std::uint64_t bound);
    double unit();

    std::mt19937_64 rng_;
    RandomProfile profile_;
};

// Token-overlap heuristic: keep triples whose relation or endpoints share
// words with the question, explore the best-matching endpoint, finish once
// nothing new matches.
class GreedyLexicalPolicy final : public Policy {
public:
    PolicyDecision decide(const TextualGraph& graph, const AgentState& state) override;
};

// Serializes the state into the prompt and asks a chat model. A failed call
// becomes an undecodable decision rather than an exception.
class RemotePolicy final : public Policy {
public:
    RemotePolicy(std::shared_ptr<const ChatClient> client, PromptTemplate prompt = PromptTemplate{});

    PolicyDecision decide(const TextualGraph& graph, const AgentState& state) override;

private:
    std::shared_ptr<const ChatClient> client_;
    PromptTemplate prompt_;
};

enum class PolicyKind { remote, oracle, random, greedy_lexical };

std::optional<PolicyKind> parse_policy_kind(std::string_view name);
std::string_view policy_kind_name(PolicyKind kind);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::greedy_lexical;
    ChatClientConfig chat;  // endpoint, model_name, temperature, timeout, max_retries
    std::size_t max_in_flight = 8;
    std::uint64_t seed = 0;
    RandomProfile profile;
};

// Per-query oracle scripts keyed by query id.
using ScriptBook = std::map<std::string, std::vector<Action>>;

// Builds one policy instance per episode. Seeded policies derive their seed
// from (config seed, query id, episode index) so results do not depend on
// scheduling.
using PolicyFactory = std::function<std::unique_ptr<Policy>(const Query& query, std::size_t episode)>;

PolicyFactory make_policy_factory(const PolicyConfig& config, ScriptBook scripts = {},
                                  std::shared_ptr<const ChatClient> client = nullptr,
                                  PromptTemplate prompt = PromptTemplate{});

std::uint64_t episode_seed(std::uint64_t base, std::string_view query_id, std::size_t episode);

}  // namespace graphs3
