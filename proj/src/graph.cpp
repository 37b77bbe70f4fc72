#include "graphs3/graph.hpp"

#include "graphs3/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace graphs3 {

std::string render_triple(const TripleText& triple) {
    std::string out;
    out.reserve(triple.head.size() + triple.relation.size() + triple.tail.size() + 6);
    out += '(';
    out += triple.head;
    out += ", ";
    out += triple.relation;
    out += ", ";
    out += triple.tail;
    out += ')';
    return out;
}

std::optional<GraphFormat> parse_graph_format(std::string_view name) {
    if (name == "tsv") return GraphFormat::tsv;
    if (name == "jsonl") return GraphFormat::jsonl;
    return std::nullopt;
}

namespace {

std::string join_candidates(const std::vector<std::string>& names) {
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += ", ";
        out += python_repr(n);
    }
    return out;
}

}  // namespace

AmbiguousEntityError::AmbiguousEntityError(std::string name, std::vector<std::string> candidates)
    : std::runtime_error("ambiguous entity name " + python_repr(name) + "; candidates: " +
                         join_candidates(candidates)),
      candidates_(std::move(candidates)) {}

// ---- builder ----

std::size_t GraphBuilder::TripleHash::operator()(const Triple& t) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(t.head);
    h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(t.relation);
    h = h * 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(t.tail);
    return static_cast<std::size_t>(h ^ (h >> 29));
}

EntityId GraphBuilder::intern_entity(std::string_view name) {
    auto [it, inserted] = entity_ids_.try_emplace(std::string(name), EntityId{0});
    if (inserted) {
        it->second = static_cast<EntityId>(entity_names_.size());
        entity_names_.emplace_back(name);
    }
    return it->second;
}

RelationId GraphBuilder::intern_relation(std::string_view name) {
    auto [it, inserted] = relation_ids_.try_emplace(std::string(name), RelationId{0});
    if (inserted) {
        it->second = static_cast<RelationId>(relation_names_.size());
        relation_names_.emplace_back(name);
    }
    return it->second;
}

bool GraphBuilder::add(std::string_view head, std::string_view relation, std::string_view tail) {
    const Triple t{intern_entity(head), intern_relation(relation), intern_entity(tail)};
    auto [it, inserted] = triple_ids_.try_emplace(t, static_cast<TriplePos>(triples_.size()));
    if (!inserted) {
        ++duplicates_;
        return false;
    }
    triples_.push_back(t);
    return true;
}

TextualGraph GraphBuilder::build() && {
    TextualGraph g;
    g.entity_names_ = std::move(entity_names_);
    g.relation_names_ = std::move(relation_names_);
    g.entity_ids_ = std::move(entity_ids_);
    g.relation_ids_ = std::move(relation_ids_);
    g.triples_ = std::move(triples_);
    g.triple_ids_ = std::move(triple_ids_);
    g.duplicates_ = duplicates_;
    g.build_indexes();
    return g;
}

// ---- graph ----

void TextualGraph::build_indexes() {
    const std::size_t n = entity_names_.size();
    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    for (const auto& t : triples_) {
        ++out_offsets_[static_cast<std::size_t>(t.head) + 1];
        ++in_offsets_[static_cast<std::size_t>(t.tail) + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
        out_offsets_[i + 1] += out_offsets_[i];
        in_offsets_[i + 1] += in_offsets_[i];
    }
    out_positions_.resize(triples_.size());
    in_positions_.resize(triples_.size());
    std::vector<std::uint32_t> out_fill(out_offsets_.begin(), out_offsets_.end() - 1);
    std::vector<std::uint32_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
    // Positions are visited in ascending order, so each bucket stays sorted.
    for (TriplePos pos = 0; pos < triples_.size(); ++pos) {
        const auto& t = triples_[pos];
        out_positions_[out_fill[static_cast<std::size_t>(t.head)]++] = pos;
        in_positions_[in_fill[static_cast<std::size_t>(t.tail)]++] = pos;
    }

    normalized_entities_.clear();
    for (std::size_t i = 0; i < n; ++i)
        normalized_entities_[normalize_name(entity_names_[i])].push_back(static_cast<EntityId>(i));
    normalized_relations_.clear();
    for (std::size_t i = 0; i < relation_names_.size(); ++i)
        normalized_relations_[normalize_name(relation_names_[i])].push_back(static_cast<RelationId>(i));
}

namespace {

std::string describe(const std::filesystem::path& path, std::size_t line, std::string_view what) {
    std::ostringstream os;
    os << path.string() << ':' << line << ": " << what;
    return os.str();
}

}  // namespace

TextualGraph TextualGraph::load(const std::filesystem::path& path, GraphFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw GraphLoadError("cannot open graph file: " + path.string(), 0);

    GraphBuilder builder;
    std::string line;
    std::size_t line_no = 0;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++rows;
        if (format == GraphFormat::tsv) {
            const auto first = line.find('\t');
            const auto second = first == std::string::npos ? std::string::npos : line.find('\t', first + 1);
            if (second == std::string::npos || line.find('\t', second + 1) != std::string::npos)
                throw GraphLoadError(describe(path, line_no, "malformed row, expected head\\trelation\\ttail"),
                                     line_no);
            std::string_view view(line);
            const auto head = view.substr(0, first);
            const auto relation = view.substr(first + 1, second - first - 1);
            const auto tail = view.substr(second + 1);
            if (head.empty() || relation.empty() || tail.empty())
                throw GraphLoadError(describe(path, line_no, "empty field"), line_no);
            builder.add(head, relation, tail);
        } else {
            nlohmann::json row;
            try {
                row = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw GraphLoadError(describe(path, line_no, std::string("malformed json: ") + e.what()), line_no);
            }
            if (!row.is_object()) throw GraphLoadError(describe(path, line_no, "row is not an object"), line_no);
            std::string fields[3];
            const char* keys[3] = {"head", "relation", "tail"};
            for (int k = 0; k < 3; ++k) {
                auto it = row.find(keys[k]);
                if (it == row.end())
                    throw GraphLoadError(describe(path, line_no, std::string("field missing: ") + keys[k]), line_no);
                if (!it->is_string())
                    throw GraphLoadError(describe(path, line_no, std::string("field not a string: ") + keys[k]),
                                         line_no);
                fields[k] = it->get<std::string>();
                if (fields[k].empty())
                    throw GraphLoadError(describe(path, line_no, std::string("empty field: ") + keys[k]), line_no);
            }
            builder.add(fields[0], fields[1], fields[2]);
        }
    }
    if (rows == 0) throw GraphLoadError("empty graph file: " + path.string(), 0);
    return std::move(builder).build();
}

TextualGraph TextualGraph::from_triples(std::span<const TripleText> triples) {
    GraphBuilder builder;
    for (const auto& t : triples) builder.add(t.head, t.relation, t.tail);
    return std::move(builder).build();
}

std::optional<EntityId> TextualGraph::find_entity(std::string_view exact_name) const {
    auto it = entity_ids_.find(std::string(exact_name));
    if (it == entity_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<RelationId> TextualGraph::find_relation(std::string_view exact_name) const {
    auto it = relation_ids_.find(std::string(exact_name));
    if (it == relation_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<EntityId> TextualGraph::resolve_entity(std::string_view name) const {
    if (auto exact = find_entity(name)) return exact;
    auto it = normalized_entities_.find(normalize_name(name));
    if (it == normalized_entities_.end()) return std::nullopt;
    if (it->second.size() > 1) {
        std::vector<std::string> candidates;
        for (auto id : it->second) candidates.push_back(entity_name(id));
        throw AmbiguousEntityError(std::string(name), std::move(candidates));
    }
    return it->second.front();
}

std::optional<TriplePos> TextualGraph::find_triple(EntityId head, RelationId relation, EntityId tail) const {
    auto it = triple_ids_.find(Triple{head, relation, tail});
    if (it == triple_ids_.end()) return std::nullopt;
    return it->second;
}

std::optional<TriplePos> TextualGraph::find_triple(const TripleText& text) const {
    std::optional<RelationId> relation = find_relation(text.relation);
    if (!relation) {
        auto it = normalized_relations_.find(normalize_name(text.relation));
        if (it == normalized_relations_.end() || it->second.size() != 1) return std::nullopt;
        relation = it->second.front();
    }
    std::optional<EntityId> head, tail;
    try {
        head = resolve_entity(text.head);
        tail = resolve_entity(text.tail);
    } catch (const AmbiguousEntityError&) {
        return std::nullopt;
    }
    if (!head || !tail) return std::nullopt;
    return find_triple(*head, *relation, *tail);
}

std::span<const TriplePos> TextualGraph::out_edges(EntityId id) const {
    const auto i = static_cast<std::size_t>(id);
    if (i >= entity_names_.size()) return {};
    return std::span<const TriplePos>(out_positions_).subspan(out_offsets_[i], out_offsets_[i + 1] - out_offsets_[i]);
}

std::span<const TriplePos> TextualGraph::in_edges(EntityId id) const {
    const auto i = static_cast<std::size_t>(id);
    if (i >= entity_names_.size()) return {};
    return std::span<const TriplePos>(in_positions_).subspan(in_offsets_[i], in_offsets_[i + 1] - in_offsets_[i]);
}

TripleSet TextualGraph::neighborhood(EntityId id) const {
    const auto out = out_edges(id);
    const auto in = in_edges(id);
    TripleSet merged;
    merged.reserve(out.size() + in.size());
    std::set_union(out.begin(), out.end(), in.begin(), in.end(), std::back_inserter(merged));
    return merged;
}

std::size_t TextualGraph::degree(EntityId id) const {
    const auto out = out_edges(id);
    std::size_t self_loops = 0;
    for (auto pos : out)
        if (triples_[pos].tail == id) ++self_loops;
    return out.size() + in_edges(id).size() - self_loops;
}

TripleText TextualGraph::text(TriplePos pos) const {
    const auto& t = triple(pos);
    return TripleText{entity_name(t.head), relation_name(t.relation), entity_name(t.tail)};
}

std::string TextualGraph::render(TriplePos pos) const { return render_triple(text(pos)); }

GraphStats stats(const TextualGraph& graph) {
    GraphStats s;
    s.entity_count = graph.entity_count();
    s.relation_count = graph.relation_count();
    s.triple_count = graph.triple_count();
    for (std::size_t i = 0; i < graph.entity_count(); ++i)
        s.max_degree = std::max(s.max_degree, graph.degree(static_cast<EntityId>(i)));
    return s;
}

std::string format_stats(const GraphStats& stats, std::size_t duplicates) {
    std::ostringstream os;
    os << "entity_count=" << stats.entity_count << '\n'
       << "relation_count=" << stats.relation_count << '\n'
       << "triple_count=" << stats.triple_count << '\n'
       << "max_degree=" << stats.max_degree << '\n'
       << "duplicates=" << duplicates << '\n';
    return os.str();
}

std::vector<EntityId> entities_of(const TextualGraph& graph, std::span<const TriplePos> triples) {
    std::vector<EntityId> ids;
    ids.reserve(triples.size() * 2);
    for (auto pos : triples) {
        const auto& t = graph.triple(pos);
        ids.push_back(t.head);
        ids.push_back(t.tail);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

}  // namespace graphs3
