#include "graphs3/environment.hpp"

#include <algorithm>

namespace graphs3 {

Validity Validity::valid(std::vector<std::string> accepted) {
    Validity v;
    v.kind = Kind::valid;
    v.accepted = std::move(accepted);
    return v;
}

Validity Validity::invalid(std::string reason, std::vector<std::string> rejected) {
    Validity v;
    v.kind = Kind::invalid;
    v.reason = std::move(reason);
    v.rejected = std::move(rejected);
    return v;
}

std::string_view validity_label(Validity::Kind kind) {
    switch (kind) {
        case Validity::Kind::valid: return "valid";
        case Validity::Kind::partial: return "partial";
        case Validity::Kind::invalid: return "invalid";
    }
    return "";
}

AgentState init_state(Query query) {
    AgentState state;
    state.query = std::move(query);
    return state;
}

namespace {

bool contains(const std::vector<TriplePos>& sorted, TriplePos pos) {
    return std::binary_search(sorted.begin(), sorted.end(), pos);
}

struct Checked {
    Validity validity;
    std::vector<EntityId> entities;  // accepted Explore targets
    TripleSet triples;               // accepted Choose triples
};

std::optional<EntityId> safe_resolve(const TextualGraph& graph, std::string_view name) {
    try {
        return graph.resolve_entity(name);
    } catch (const AmbiguousEntityError&) {
        return std::nullopt;
    }
}

Validity summarize(std::vector<std::string> accepted, std::vector<std::string> rejected, std::string reason) {
    Validity v;
    if (rejected.empty()) {
        v.kind = Validity::Kind::valid;
    } else if (accepted.empty()) {
        v.kind = Validity::Kind::invalid;
        v.reason = std::move(reason);
    } else {
        v.kind = Validity::Kind::partial;
        v.reason = std::move(reason);
    }
    v.accepted = std::move(accepted);
    v.rejected = std::move(rejected);
    return v;
}

Checked check(const TextualGraph& graph, const AgentState& state, const Action& action) {
    Checked out;
    std::vector<std::string> accepted, rejected;

    if (const auto* explore = std::get_if<ExploreEntity>(&action)) {
        if (explore->names.empty()) {
            out.validity = Validity::invalid("empty objects");
            return out;
        }
        std::vector<EntityId> allowed = entities_of(graph, state.perception);
        for (const auto& name : state.query.question_entities)
            if (auto id = safe_resolve(graph, name)) allowed.push_back(*id);
        std::sort(allowed.begin(), allowed.end());
        for (const auto& name : explore->names) {
            auto id = safe_resolve(graph, name);
            if (id && std::binary_search(allowed.begin(), allowed.end(), *id)) {
                accepted.push_back(name);
                out.entities.push_back(*id);
            } else {
                rejected.push_back(name);
            }
        }
        out.validity = summarize(std::move(accepted), std::move(rejected),
                                 "entity not in question entities or current graph state");
        return out;
    }

    if (const auto* choose = std::get_if<ChooseRelation>(&action)) {
        if (choose->triples.empty()) {
            out.validity = Validity::invalid("empty objects");
            return out;
        }
        for (const auto& t : choose->triples) {
            auto pos = graph.find_triple(t);
            if (pos && contains(state.perception, *pos)) {
                accepted.push_back(render_triple(t));
                out.triples.push_back(*pos);
            } else {
                rejected.push_back(render_triple(t));
            }
        }
        out.validity = summarize(std::move(accepted), std::move(rejected), "not in perception");
        return out;
    }

    const auto& finish = std::get<Finish>(action);
    if (finish.answers.empty()) {
        out.validity = Validity::invalid("empty objects");
        return out;
    }
    out.validity = Validity::valid(finish.answers);
    return out;
}

void merge_into(TripleSet& target, const TripleSet& extra) {
    TripleSet merged;
    merged.reserve(target.size() + extra.size());
    std::set_union(target.begin(), target.end(), extra.begin(), extra.end(), std::back_inserter(merged));
    target = std::move(merged);
}

void advance(AgentState& state, std::optional<Action> action, const EpisodeConfig& config) {
    state.history.push_back(HistoryEntry{std::move(action)});
    ++state.step;
    if (state.step >= config.t_max) state.terminal = true;
}

}  // namespace

Validity validate_action(const TextualGraph& graph, const AgentState& state, const Action& action) {
    return check(graph, state, action).validity;
}

Transition apply_action(const TextualGraph& graph, const AgentState& state, const Action& action,
                        const EpisodeConfig& config) {
    if (state.terminal) throw TerminalStateError("cannot act on a terminal state");
    Checked checked = check(graph, state, action);
    Transition result{state, checked.validity};
    AgentState& next = result.state;

    const bool apply = checked.validity.kind == Validity::Kind::valid ||
                       (checked.validity.kind == Validity::Kind::partial && !config.strict_objects);

    switch (kind_of(action)) {
        case ActionKind::explore:
            if (apply) {
                for (auto id : checked.entities) {
                    const TripleSet hood = graph.neighborhood(id);
                    merge_into(next.perception, hood);
                    merge_into(next.frontier, hood);
                    auto it = std::lower_bound(next.explored.begin(), next.explored.end(), id);
                    if (it == next.explored.end() || *it != id) next.explored.insert(it, id);
                }
            }
            break;
        case ActionKind::choose:
            if (apply) {
                std::sort(checked.triples.begin(), checked.triples.end());
                checked.triples.erase(std::unique(checked.triples.begin(), checked.triples.end()),
                                      checked.triples.end());
                next.subgraph = std::move(checked.triples);
                next.frontier.clear();
            }
            break;
        case ActionKind::finish:
            next.terminal = true;
            next.finished = true;
            break;
    }
    advance(next, action, config);
    return result;
}

Transition apply_undecodable(const AgentState& state, std::string reason, const EpisodeConfig& config) {
    if (state.terminal) throw TerminalStateError("cannot act on a terminal state");
    Transition result{state, Validity::invalid(std::move(reason))};
    advance(result.state, std::nullopt, config);
    return result;
}

bool is_terminal(const AgentState& state, const EpisodeConfig& config) {
    return state.terminal || state.finished || state.step >= config.t_max;
}

TripleSet graph_view(const AgentState& state) {
    TripleSet view;
    view.reserve(state.subgraph.size() + state.frontier.size());
    std::set_union(state.subgraph.begin(), state.subgraph.end(), state.frontier.begin(), state.frontier.end(),
                   std::back_inserter(view));
    return view;
}

std::vector<std::string> render_triples(const TextualGraph& graph, std::span<const TriplePos> triples) {
    std::vector<std::string> out;
    out.reserve(triples.size());
    for (auto pos : triples) out.push_back(graph.render(pos));
    return out;
}

std::vector<std::string> history_lines(const AgentState& state) {
    std::vector<std::string> out;
    out.reserve(state.history.size());
    for (std::size_t i = 0; i < state.history.size(); ++i) out.push_back(history_line(i + 1, state.history[i].action));
    return out;
}

}  // namespace graphs3
