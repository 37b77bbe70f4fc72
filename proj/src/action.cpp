#include "graphs3/action.hpp"

#include "graphs3/text.hpp"

#include <cctype>

namespace graphs3 {

ActionKind kind_of(const Action& action) {
    switch (action.index()) {
        case 0: return ActionKind::explore;
        case 1: return ActionKind::choose;
        default: return ActionKind::finish;
    }
}

std::string_view action_label(ActionKind kind) {
    switch (kind) {
        case ActionKind::explore: return "Explore Entity";
        case ActionKind::choose: return "Choose Relation";
        case ActionKind::finish: return "Finish";
    }
    return "";
}

std::optional<ActionKind> parse_action_label(std::string_view label) {
    std::string key;
    for (unsigned char c : label) {
        if (c == ' ' || c == '_' || c == '-' || c == '\t' || c == '\'' || c == '"') continue;
        key.push_back(static_cast<char>(std::tolower(c)));
    }
    if (key == "exploreentity" || key == "explore") return ActionKind::explore;
    if (key == "chooserelation" || key == "choose") return ActionKind::choose;
    if (key == "finish") return ActionKind::finish;
    return std::nullopt;
}

std::vector<std::string> action_objects(const Action& action) {
    return std::visit(
        [](const auto& a) -> std::vector<std::string> {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ExploreEntity>) {
                return a.names;
            } else if constexpr (std::is_same_v<T, ChooseRelation>) {
                std::vector<std::string> out;
                out.reserve(a.triples.size());
                for (const auto& t : a.triples) out.push_back(render_triple(t));
                return out;
            } else {
                return a.answers;
            }
        },
        action);
}

nlohmann::ordered_json action_to_json(const Action& action) {
    return nlohmann::ordered_json{{"Action", std::string(action_label(kind_of(action)))},
                          {"Objects", action_objects(action)}};
}

std::string history_line(std::size_t one_based_step, const std::optional<Action>& action) {
    std::string line = "step " + std::to_string(one_based_step) + ", ";
    if (!action) return line + "Invalid, Objects: []";
    line += action_label(kind_of(*action));
    line += ", Objects: ";
    line += python_list_repr(action_objects(*action));
    return line;
}

namespace {

std::string strip_quotes(std::string_view part) {
    part = trim(part);
    if (part.size() >= 2) {
        const char f = part.front();
        const char b = part.back();
        if ((f == '\'' && b == '\'') || (f == '"' && b == '"')) {
            std::string out;
            for (std::size_t i = 1; i + 1 < part.size(); ++i) {
                if (part[i] == '\\' && i + 2 < part.size()) ++i;
                out.push_back(part[i]);
            }
            return out;
        }
    }
    return std::string(part);
}

}  // namespace

std::optional<TripleText> parse_triple_text(std::string_view text) {
    text = trim(text);
    if (text.size() < 2 || text.front() != '(' || text.back() != ')') return std::nullopt;
    text = text.substr(1, text.size() - 2);

    std::vector<std::string> parts;
    std::size_t start = 0;
    int depth = 0;
    char quote = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quote) {
            if (c == '\\') {
                ++i;
            } else if (c == quote) {
                quote = 0;
            }
            continue;
        }
        // A quote only opens a quoted span at the start of a part.
        if ((c == '\'' || c == '"') && trim(text.substr(start, i - start)).empty()) {
            quote = c;
        } else if (c == '(' || c == '[') {
            ++depth;
        } else if ((c == ')' || c == ']') && depth > 0) {
            --depth;
        } else if (c == ',' && depth == 0) {
            parts.push_back(strip_quotes(text.substr(start, i - start)));
            start = i + 1;
        }
    }
    parts.push_back(strip_quotes(text.substr(start)));
    if (parts.size() != 3) return std::nullopt;
    for (const auto& p : parts)
        if (p.empty()) return std::nullopt;
    return TripleText{parts[0], parts[1], parts[2]};
}

}  // namespace graphs3
