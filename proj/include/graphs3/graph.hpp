#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace graphs3 {

enum class EntityId : std::uint32_t {};
enum class RelationId : std::uint32_t {};

// Position of a triple in first-occurrence file order. All triple sets in
// the library are sorted vectors of positions.
using TriplePos = std::uint32_t;
using TripleSet = std::vector<TriplePos>;

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    bool operator==(const Triple&) const = default;
};

// A triple spelled with surface strings, as it appears in actions.
struct TripleText {
    std::string head;
    std::string relation;
    std::string tail;

    bool operator==(const TripleText&) const = default;
    auto operator<=>(const TripleText&) const = default;
};

// "(head, relation, tail)"
std::string render_triple(const TripleText& triple);

enum class GraphFormat { tsv, jsonl };

std::optional<GraphFormat> parse_graph_format(std::string_view name);

class GraphLoadError : public std::runtime_error {
public:
    GraphLoadError(std::string message, std::size_t line)
        : std::runtime_error(std::move(message)), line_(line) {}

    // 1-based line number, 0 when not tied to a line.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class AmbiguousEntityError : public std::runtime_error {
public:
    AmbiguousEntityError(std::string name, std::vector<std::string> candidates);

    const std::vector<std::string>& candidates() const noexcept { return candidates_; }

private:
    std::vector<std::string> candidates_;
};

struct GraphStats {
    std::size_t entity_count = 0;
    std::size_t relation_count = 0;
    std::size_t triple_count = 0;
    std::size_t max_degree = 0;

    bool operator==(const GraphStats&) const = default;
};

class TextualGraph;

class GraphBuilder {
public:
    // Returns false when the triple was already present.
    bool add(std::string_view head, std::string_view relation, std::string_view tail);
    std::size_t duplicates() const noexcept { return duplicates_; }
    TextualGraph build() &&;

private:
    friend class TextualGraph;
    EntityId intern_entity(std::string_view name);
    RelationId intern_relation(std::string_view name);

    struct TripleHash {
        std::size_t operator()(const Triple& t) const noexcept;
    };

    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::vector<Triple> triples_;
    std::unordered_map<Triple, TriplePos, TripleHash> triple_ids_;
    std::size_t duplicates_ = 0;
};

// Immutable interned triple store with CSR adjacency in both directions.
class TextualGraph {
public:
    TextualGraph() = default;

    static TextualGraph load(const std::filesystem::path& path, GraphFormat format);
    static TextualGraph from_triples(std::span<const TripleText> triples);

    std::size_t entity_count() const noexcept { return entity_names_.size(); }
    std::size_t relation_count() const noexcept { return relation_names_.size(); }
    std::size_t triple_count() const noexcept { return triples_.size(); }
    // Rows dropped as exact duplicates while loading.
    std::size_t duplicate_count() const noexcept { return duplicates_; }

    std::span<const Triple> triples() const noexcept { return triples_; }
    const Triple& triple(TriplePos pos) const { return triples_.at(pos); }

    const std::string& entity_name(EntityId id) const { return entity_names_.at(static_cast<std::size_t>(id)); }
    const std::string& relation_name(RelationId id) const {
        return relation_names_.at(static_cast<std::size_t>(id));
    }

    std::optional<EntityId> find_entity(std::string_view exact_name) const;
    std::optional<RelationId> find_relation(std::string_view exact_name) const;

    // Exact byte match, then normalized match. Throws AmbiguousEntityError
    // when the normalized form maps to more than one entity.
    std::optional<EntityId> resolve_entity(std::string_view name) const;

    std::optional<TriplePos> find_triple(EntityId head, RelationId relation, EntityId tail) const;
    // Name-level lookup; entity names go through resolve_entity, relation
    // names match exactly or after normalization.
    std::optional<TriplePos> find_triple(const TripleText& text) const;

    // Triple positions where the entity is head / tail, ascending.
    std::span<const TriplePos> out_edges(EntityId id) const;
    std::span<const TriplePos> in_edges(EntityId id) const;

    // Every triple incident to the entity, ascending by position, self-loops once.
    TripleSet neighborhood(EntityId id) const;
    std::size_t degree(EntityId id) const;

    TripleText text(TriplePos pos) const;
    std::string render(TriplePos pos) const;

private:
    friend class GraphBuilder;
    void build_indexes();

    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::unordered_map<std::string, std::vector<EntityId>> normalized_entities_;
    std::unordered_map<std::string, std::vector<RelationId>> normalized_relations_;
    std::vector<Triple> triples_;
    std::unordered_map<Triple, TriplePos, GraphBuilder::TripleHash> triple_ids_;
    std::vector<std::uint32_t> out_offsets_, in_offsets_;
    std::vector<TriplePos> out_positions_, in_positions_;
    std::size_t duplicates_ = 0;
};

GraphStats stats(const TextualGraph& graph);

// "key=value" lines.
std::string format_stats(const GraphStats& stats, std::size_t duplicates);

// Entities occurring as head or tail within the given triples, ascending by id.
std::vector<EntityId> entities_of(const TextualGraph& graph, std::span<const TriplePos> triples);

}  // namespace graphs3
