#pragma once

#include "graphs3/graph.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace graphs3 {

struct ExploreEntity {
    std::vector<std::string> names;
    bool operator==(const ExploreEntity&) const = default;
};

struct ChooseRelation {
    std::vector<TripleText> triples;
    bool operator==(const ChooseRelation&) const = default;
};

struct Finish {
    std::vector<std::string> answers;
    bool operator==(const Finish&) const = default;
};

using Action = std::variant<ExploreEntity, ChooseRelation, Finish>;

enum class ActionKind { explore, choose, finish };

ActionKind kind_of(const Action& action);

// "Explore Entity" | "Choose Relation" | "Finish"
std::string_view action_label(ActionKind kind);

// Case-insensitive; spaces, '_' and '-' are ignored ("explore", "Choose_Relation").
std::optional<ActionKind> parse_action_label(std::string_view label);

// Objects as they appear in prompts and the Objects field. Choose triples
// are rendered "(h, r, t)".
std::vector<std::string> action_objects(const Action& action);

// {"Action": ..., "Objects": [...]}
nlohmann::ordered_json action_to_json(const Action& action);

// "step k, Explore Entity, Objects: ['x']"
std::string history_line(std::size_t one_based_step, const std::optional<Action>& action);

// Structural "(h, r, t)" split at top-level commas. Commas inside quotes or
// nested brackets do not split; surrounding quotes on a part are removed.
// Returns nullopt unless exactly three nonempty parts result.
std::optional<TripleText> parse_triple_text(std::string_view text);

}  // namespace graphs3
