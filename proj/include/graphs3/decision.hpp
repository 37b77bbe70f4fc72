#pragma once

#include "graphs3/action.hpp"
#include "graphs3/graph.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include <json.hpp>

namespace graphs3 {

enum class DecisionError {
    none,
    no_fenced_block,     // no ``` block in the output
    malformed_block,     // fenced blocks present, none is an object with Action and Objects
    unknown_action,      // Action value is not one of the three operations
    empty_objects,       // Objects missing or empty
    unparseable_object,  // an object could not be coerced (e.g. not a triple)
    transport,           // remote call failed after retries
    timeout,             // remote call timed out after retries
};

std::string_view decision_error_name(DecisionError error);

struct PolicyDecision {
    std::string thought;
    std::optional<Action> action;
    DecisionError error = DecisionError::none;
    std::string error_detail;
    std::string raw;
    // Thought generated from a template rather than by a model.
    bool synthetic_thought = false;

    bool ok() const noexcept { return action.has_value() && error == DecisionError::none; }
};

// Rendered triples the parser may match Choose objects against before
// falling back to structural parsing. Entity names can contain commas and
// parentheses, so structural parsing alone is lossy.
class TripleVocabulary {
public:
    TripleVocabulary() = default;
    TripleVocabulary(const TextualGraph& graph, std::span<const TriplePos> triples);

    std::optional<TripleText> match(std::string_view rendered) const;
    bool empty() const noexcept { return exact_.empty(); }

private:
    std::unordered_map<std::string, TripleText> exact_;
    std::unordered_map<std::string, std::optional<TripleText>> fuzzy_;  // nullopt marks a collision
};

struct ActionParse {
    std::optional<Action> action;
    DecisionError error = DecisionError::none;
    std::string detail;
};

// Decodes {"Action": ..., "Objects": [...]}.
ActionParse action_from_json(const nlohmann::json& block, const TripleVocabulary* vocabulary = nullptr);

// Decodes a model reply in the prompt's response format.
PolicyDecision parse_decision(std::string_view raw, const TripleVocabulary* vocabulary = nullptr);

// thought + "\n\nAction Decision:\n```json\n{...}\n```"
std::string render_decision(std::string_view thought, const Action& action);

// Answers from a generator reply: the first JSON list in it, else one per
// nonempty line.
std::vector<std::string> parse_answer_list(const std::string& reply);

}  // namespace graphs3
