#include "graphs3/decision.hpp"

#include "graphs3/text.hpp"

#include <cctype>

namespace graphs3 {

std::string_view decision_error_name(DecisionError error) {
    switch (error) {
        case DecisionError::none: return "none";
        case DecisionError::no_fenced_block: return "no_fenced_block";
        case DecisionError::malformed_block: return "malformed_block";
        case DecisionError::unknown_action: return "unknown_action";
        case DecisionError::empty_objects: return "empty_objects";
        case DecisionError::unparseable_object: return "unparseable_object";
        case DecisionError::transport: return "transport";
        case DecisionError::timeout: return "timeout";
    }
    return "unknown";
}

namespace {

// Casefold, drop quote characters and whitespace next to delimiters.
std::string fuzzy_key(std::string_view text) {
    std::string stripped;
    stripped.reserve(text.size());
    for (char c : text)
        if (c != '\'' && c != '"') stripped.push_back(c);
    const std::string norm = normalize_name(stripped);
    std::string out;
    out.reserve(norm.size());
    for (std::size_t i = 0; i < norm.size(); ++i) {
        const char c = norm[i];
        if (c == ' ') {
            const char prev = out.empty() ? '\0' : out.back();
            const char next = i + 1 < norm.size() ? norm[i + 1] : '\0';
            if (prev == ',' || prev == '(' || next == ',' || next == ')') continue;
        }
        out.push_back(c);
    }
    return out;
}

const nlohmann::json* find_key(const nlohmann::json& object, std::string_view key) {
    if (auto it = object.find(std::string(key)); it != object.end()) return &*it;
    for (auto it = object.begin(); it != object.end(); ++it)
        if (normalize_name(it.key()) == normalize_name(key)) return &*it;
    return nullptr;
}

std::optional<std::string> coerce_string(const nlohmann::json& value) {
    if (value.is_string()) return value.get<std::string>();
    if (value.is_number() || value.is_boolean()) return value.dump();
    return std::nullopt;
}

}  // namespace

TripleVocabulary::TripleVocabulary(const TextualGraph& graph, std::span<const TriplePos> triples) {
    for (auto pos : triples) {
        TripleText text = graph.text(pos);
        const std::string rendered = render_triple(text);
        const std::string key = fuzzy_key(rendered);
        auto [it, inserted] = fuzzy_.try_emplace(key, text);
        if (!inserted && it->second != text) it->second.reset();
        exact_.emplace(rendered, std::move(text));
    }
}

std::optional<TripleText> TripleVocabulary::match(std::string_view rendered) const {
    if (auto it = exact_.find(std::string(trim(rendered))); it != exact_.end()) return it->second;
    if (auto it = fuzzy_.find(fuzzy_key(rendered)); it != fuzzy_.end()) return it->second;
    return std::nullopt;
}

ActionParse action_from_json(const nlohmann::json& block, const TripleVocabulary* vocabulary) {
    ActionParse out;
    if (!block.is_object()) {
        out.error = DecisionError::malformed_block;
        out.detail = "action block is not an object";
        return out;
    }
    const auto* action_field = find_key(block, "Action");
    const auto* objects_field = find_key(block, "Objects");
    if (!action_field || !objects_field) {
        out.error = DecisionError::malformed_block;
        out.detail = "missing Action or Objects";
        return out;
    }
    std::optional<ActionKind> kind;
    if (action_field->is_string()) kind = parse_action_label(action_field->get<std::string>());
    if (!kind) {
        out.error = DecisionError::unknown_action;
        out.detail = "unknown Action " + action_field->dump();
        return out;
    }

    std::vector<nlohmann::json> items;
    if (objects_field->is_array()) {
        items.assign(objects_field->begin(), objects_field->end());
    } else if (!objects_field->is_null()) {
        items.push_back(*objects_field);
    }
    if (items.empty()) {
        out.error = DecisionError::empty_objects;
        out.detail = "Objects is empty";
        return out;
    }

    if (*kind == ActionKind::choose) {
        ChooseRelation choose;
        for (const auto& item : items) {
            if (item.is_array() && item.size() == 3) {
                auto h = coerce_string(item[0]), r = coerce_string(item[1]), t = coerce_string(item[2]);
                if (h && r && t) {
                    choose.triples.push_back(TripleText{*h, *r, *t});
                    continue;
                }
            }
            auto text = coerce_string(item);
            std::optional<TripleText> triple;
            if (text && vocabulary) triple = vocabulary->match(*text);
            if (text && !triple) triple = parse_triple_text(*text);
            if (!triple) {
                out.error = DecisionError::unparseable_object;
                out.detail = "not a triple: " + item.dump();
                return out;
            }
            choose.triples.push_back(std::move(*triple));
        }
        out.action = std::move(choose);
        return out;
    }

    std::vector<std::string> names;
    for (const auto& item : items) {
        auto text = coerce_string(item);
        if (!text) {
            out.error = DecisionError::unparseable_object;
            out.detail = "not a string: " + item.dump();
            return out;
        }
        names.push_back(std::move(*text));
    }
    if (*kind == ActionKind::explore) {
        out.action = ExploreEntity{std::move(names)};
    } else {
        out.action = Finish{std::move(names)};
    }
    return out;
}

namespace {

struct Block {
    std::string_view body;
    std::size_t begin;
};

std::vector<Block> fenced_blocks(std::string_view raw) {
    std::vector<Block> blocks;
    std::size_t pos = 0;
    while (true) {
        const auto open = raw.find("```", pos);
        if (open == std::string_view::npos) break;
        auto body_start = raw.find('\n', open + 3);
        if (body_start == std::string_view::npos) {
            // ```{...}``` on one line
            body_start = open + 3;
            while (body_start < raw.size() && std::isalpha(static_cast<unsigned char>(raw[body_start]))) ++body_start;
        } else {
            ++body_start;
        }
        const auto close = raw.find("```", body_start);
        const auto end = close == std::string_view::npos ? raw.size() : close;
        blocks.push_back(Block{raw.substr(body_start, end - body_start), open});
        if (close == std::string_view::npos) break;
        pos = close + 3;
    }
    return blocks;
}

std::optional<nlohmann::json> parse_json_lenient(std::string_view body) {
    auto parsed = nlohmann::json::parse(body, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    // Models sometimes copy the template's doubled braces.
    std::string repaired(body);
    for (const char* pair : {"{{", "}}"}) {
        std::size_t at;
        while ((at = repaired.find(pair)) != std::string::npos) repaired.erase(at, 1);
    }
    parsed = nlohmann::json::parse(repaired, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
    return std::nullopt;
}

}  // namespace

PolicyDecision parse_decision(std::string_view raw, const TripleVocabulary* vocabulary) {
    PolicyDecision decision;
    decision.raw = std::string(raw);

    const auto blocks = fenced_blocks(raw);
    const auto marker = raw.find("Action Decision:");
    if (marker != std::string_view::npos) {
        decision.thought = std::string(trim(raw.substr(0, marker)));
    } else if (!blocks.empty()) {
        decision.thought = std::string(trim(raw.substr(0, blocks.front().begin)));
    } else {
        decision.thought = std::string(trim(raw));
    }

    if (blocks.empty()) {
        decision.error = DecisionError::no_fenced_block;
        decision.error_detail = "no fenced code block";
        return decision;
    }
    for (const auto& block : blocks) {
        auto json = parse_json_lenient(block.body);
        if (!json || !json->is_object() || !find_key(*json, "Action") || !find_key(*json, "Objects")) continue;
        ActionParse parsed = action_from_json(*json, vocabulary);
        decision.action = std::move(parsed.action);
        decision.error = parsed.error;
        decision.error_detail = std::move(parsed.detail);
        return decision;
    }
    decision.error = DecisionError::malformed_block;
    decision.error_detail = "no fenced block holds an object with Action and Objects";
    return decision;
}

std::string render_decision(std::string_view thought, const Action& action) {
    std::string out(thought);
    out += "\n\nAction Decision:\n```json\n";
    out += action_to_json(action).dump(2);
    out += "\n```";
    return out;
}

std::vector<std::string> parse_answer_list(const std::string& reply) {
    const auto open = reply.find('[');
    const auto close = reply.rfind(']');
    if (open != std::string::npos && close != std::string::npos && close > open) {
        auto parsed = nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr, false);
        if (parsed.is_array()) {
            std::vector<std::string> out;
            for (const auto& v : parsed)
                if (v.is_string()) out.push_back(v.get<std::string>());
                else if (v.is_number()) out.push_back(v.dump());
            return out;
        }
    }
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= reply.size()) {
        auto end = reply.find('\n', start);
        if (end == std::string::npos) end = reply.size();
        auto line = trim(std::string_view(reply).substr(start, end - start));
        if (!line.empty()) out.emplace_back(line);
        start = end + 1;
    }
    return out;
}

}  // namespace graphs3
