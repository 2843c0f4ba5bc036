#pragma once

// In-memory triple store with the lookups the generation pipeline needs:
// adjacency in both directions, display-name retrieval, and type-constrained
// entity sampling. Immutable after load; safe to share across threads.

#include "attribforge/rng.hpp"
#include "attribforge/types.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace attribforge {

struct EntityMeta {
    EntityId id;
    std::string name;        // display name; may be empty
    std::set<TypeId> types;  // may be empty
    bool is_cvt = false;     // compound value node: no standalone meaning

    bool operator==(const EntityMeta&) const = default;
};

enum class Direction { Outgoing, Incoming };

class KnowledgeGraph {
public:
    // Triple file: `subject<TAB>relation<TAB>object`, one per line, `#` comments.
    // Meta file: `id<TAB>name<TAB>type1,type2,...<TAB>cvt_flag(0|1)`.
    // Entities that appear in triples but not in the meta stream are registered
    // with empty name/types and reported through `warnings`.
    static KnowledgeGraph load(std::istream& triple_source, std::istream& meta_source,
                               std::vector<std::string>* warnings = nullptr);

    static KnowledgeGraph from_triples(std::vector<Triple> triples);

    const std::vector<Triple>& triples() const { return triples_; }
    std::size_t triple_count() const { return triples_.size(); }
    std::size_t entity_count() const { return meta_.size(); }

    bool has_triple(const Triple& t) const {
        return std::binary_search(triples_.begin(), triples_.end(), t);
    }

    const EntityMeta* meta(const EntityId& e) const {
        auto it = meta_.find(e);
        return it == meta_.end() ? nullptr : &it->second;
    }

    bool is_cvt(const EntityId& e) const {
        const EntityMeta* m = meta(e);
        return m != nullptr && m->is_cvt;
    }

    // Display name, falling back to the id for unnamed entities.
    std::string display_name(const EntityId& e) const {
        const EntityMeta* m = meta(e);
        return (m == nullptr || m->name.empty()) ? e : m->name;
    }

    // Triples incident to `e` in the given direction, sorted by
    // (relation, counterpart) so results replay identically between runs.
    std::vector<Triple> neighbors(const EntityId& e, Direction d) const;

    // Exact-match on display name; never returns compound value nodes.
    // Unnamed entities are not retrievable by name.
    std::set<EntityId> entities_named(const std::string& name) const;

    // An entity sharing at least one type with `e`, excluding `e` itself and
    // everything in `exclude`, drawn uniformly from the candidate set.
    std::optional<EntityId> same_type_substitute(const EntityId& e,
                                                 const std::set<EntityId>& exclude,
                                                 Rng& rng) const;

    bool operator==(const KnowledgeGraph& other) const {
        return triples_ == other.triples_ && meta_ == other.meta_;
    }

private:
    void index();

    std::vector<Triple> triples_;  // sorted, deduplicated
    std::unordered_map<EntityId, std::vector<std::size_t>> out_index_;
    std::unordered_map<EntityId, std::vector<std::size_t>> in_index_;
    std::unordered_map<std::string, std::set<EntityId>> name_index_;
    std::map<EntityId, EntityMeta> meta_;
    std::map<TypeId, std::vector<EntityId>> type_index_;  // sorted entity lists
};

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline bool valid_identifier(const std::string& s) {
    return !s.empty() && s.front() != '?';
}

} // namespace detail

inline KnowledgeGraph KnowledgeGraph::load(std::istream& triple_source, std::istream& meta_source,
                                           std::vector<std::string>* warnings) {
    KnowledgeGraph kg;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(meta_source, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty() || line.front() == '#') continue;
        auto fields = detail::split_tabs(line);
        if (fields.size() != 4)
            throw FileParseError(line_no, "expected 4 tab-separated fields in meta record");
        if (!detail::valid_identifier(fields[0]))
            throw FileParseError(line_no, "invalid entity id '" + fields[0] + "'");
        if (fields[3] != "0" && fields[3] != "1")
            throw FileParseError(line_no, "cvt flag must be 0 or 1");
        EntityMeta m;
        m.id = fields[0];
        m.name = fields[1];
        m.is_cvt = fields[3] == "1";
        std::size_t start = 0;
        const std::string& types = fields[2];
        while (start <= types.size() && !types.empty()) {
            std::size_t comma = types.find(',', start);
            std::string t = types.substr(start, comma == std::string::npos ? comma : comma - start);
            if (!t.empty()) m.types.insert(t);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        kg.meta_[m.id] = std::move(m);  // later record wins
    }

    line_no = 0;
    std::vector<Triple> triples;
    while (std::getline(triple_source, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty() || line.front() == '#') continue;
        auto fields = detail::split_tabs(line);
        if (fields.size() != 3)
            throw FileParseError(line_no, "expected 3 tab-separated fields in triple record");
        for (const auto& f : fields)
            if (!detail::valid_identifier(f))
                throw FileParseError(line_no, "invalid identifier '" + f + "'");
        triples.push_back(Triple{fields[0], fields[1], fields[2]});
    }
    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
    kg.triples_ = std::move(triples);

    for (const Triple& t : kg.triples_) {
        for (const EntityId& e : {t.subject, t.object}) {
            if (kg.meta_.find(e) == kg.meta_.end()) {
                kg.meta_[e] = EntityMeta{e, "", {}, false};
                if (warnings != nullptr)
                    warnings->push_back("entity '" + e + "' has no meta record; registered unnamed");
            }
        }
    }

    kg.index();
    return kg;
}

inline KnowledgeGraph KnowledgeGraph::from_triples(std::vector<Triple> triples) {
    KnowledgeGraph kg;
    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
    kg.triples_ = std::move(triples);
    for (const Triple& t : kg.triples_)
        for (const EntityId& e : {t.subject, t.object})
            if (kg.meta_.find(e) == kg.meta_.end()) kg.meta_[e] = EntityMeta{e, "", {}, false};
    kg.index();
    return kg;
}

inline void KnowledgeGraph::index() {
    for (std::size_t i = 0; i < triples_.size(); ++i) {
        out_index_[triples_[i].subject].push_back(i);
        in_index_[triples_[i].object].push_back(i);
    }
    for (const auto& [id, m] : meta_) {
        if (!m.name.empty()) name_index_[m.name].insert(id);
        for (const TypeId& t : m.types) type_index_[t].push_back(id);
    }
    for (auto& [t, ids] : type_index_) std::sort(ids.begin(), ids.end());
}

inline std::vector<Triple> KnowledgeGraph::neighbors(const EntityId& e, Direction d) const {
    const auto& idx = d == Direction::Outgoing ? out_index_ : in_index_;
    auto it = idx.find(e);
    if (it == idx.end()) return {};
    std::vector<Triple> result;
    result.reserve(it->second.size());
    for (std::size_t i : it->second) result.push_back(triples_[i]);
    std::sort(result.begin(), result.end(), [d](const Triple& a, const Triple& b) {
        const EntityId& ca = d == Direction::Outgoing ? a.object : a.subject;
        const EntityId& cb = d == Direction::Outgoing ? b.object : b.subject;
        return std::tie(a.relation, ca) < std::tie(b.relation, cb);
    });
    return result;
}

inline std::set<EntityId> KnowledgeGraph::entities_named(const std::string& name) const {
    auto it = name_index_.find(name);
    if (it == name_index_.end()) return {};
    std::set<EntityId> result;
    for (const EntityId& e : it->second)
        if (!is_cvt(e)) result.insert(e);
    return result;
}

inline std::optional<EntityId> KnowledgeGraph::same_type_substitute(const EntityId& e,
                                                                    const std::set<EntityId>& exclude,
                                                                    Rng& rng) const {
    const EntityMeta* m = meta(e);
    if (m == nullptr || m->types.empty()) return std::nullopt;
    std::vector<EntityId> candidates;
    for (const TypeId& t : m->types) {
        auto it = type_index_.find(t);
        if (it == type_index_.end()) continue;
        for (const EntityId& c : it->second)
            if (c != e && exclude.find(c) == exclude.end()) candidates.push_back(c);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    if (candidates.empty()) return std::nullopt;
    return candidates[rng.index(candidates.size())];
}

} // namespace attribforge
