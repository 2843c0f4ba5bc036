#pragma once

// Query extension rules. A base query is rewritten by exactly one action:
//
//   base shape   action               result shape
//   -----------  -------------------  ------------
//   single       no extension         single
//   single       union extend         union-tree
//   single       intersect @ subject  single
//   single       intersect @ answer   tree
//   path         intersect @ subject  path
//   path         intersect @ answer   tree
//   tree         intersect @ subject  tree
//   tree         intersect @ answer   tree
//
// Single-triple queries draw one of the four actions with equal likelihood;
// path and tree queries draw one of the two intersection actions with equal
// likelihood. The result shape determines the sample's complexity type.

#include "attribforge/grounding.hpp"
#include "attribforge/kg.hpp"
#include "attribforge/query.hpp"
#include "attribforge/rng.hpp"
#include "attribforge/types.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace attribforge {

struct ExtendedQuery {
    LogicalQuery base;
    ExtensionAction action = ExtensionAction::NoExtension;
    LogicalQuery result;
    std::optional<EntityId> anchor;  // entity the extension attached to
    bool degenerate = false;         // union extension found no material; result == base
};

inline ExtensionAction choose_action(QueryShape shape, Rng& rng) {
    switch (shape) {
        case QueryShape::Single: {
            static constexpr ExtensionAction kAll[4] = {
                ExtensionAction::NoExtension, ExtensionAction::UnionExtend,
                ExtensionAction::IntersectAtSubject, ExtensionAction::IntersectAtAnswer};
            return kAll[rng.index(4)];
        }
        case QueryShape::Path:
        case QueryShape::Tree: {
            static constexpr ExtensionAction kIntersect[2] = {
                ExtensionAction::IntersectAtSubject, ExtensionAction::IntersectAtAnswer};
            return kIntersect[rng.index(2)];
        }
        case QueryShape::UnionTree:
            break;
    }
    throw std::invalid_argument("union-tree queries are never extended");
}

// Merge the base single-triple query with same-named entities under the same
// relation. Candidates whose own answer set is empty add nothing citable and
// are skipped; at most `cap` disjuncts are added. With no usable candidate
// the extension is degenerate and the caller falls back to no extension.
inline ExtendedQuery union_extend(const LogicalQuery& q, const KnowledgeGraph& kg,
                                  std::size_t cap = 3) {
    if (shape_of(q) != QueryShape::Single)
        throw std::invalid_argument("union extension applies to single-triple queries only");

    ExtendedQuery eq;
    eq.base = q;
    eq.action = ExtensionAction::UnionExtend;
    const EntityId& e0 = q.branches.front().subject;
    const RelationId& r0 = q.branches.front().relations.front();
    eq.anchor = e0;

    std::vector<EntityId> chosen;
    const EntityMeta* m = kg.meta(e0);
    if (m != nullptr && !m->name.empty()) {
        for (const EntityId& e : kg.entities_named(m->name)) {
            if (e == e0 || chosen.size() >= cap) continue;
            if (!evaluate(LogicalQuery::single(e, r0), kg).empty()) chosen.push_back(e);
        }
    }
    if (chosen.empty()) {
        eq.degenerate = true;
        eq.result = q;
        return eq;
    }
    std::vector<EntityId> subjects{e0};
    subjects.insert(subjects.end(), chosen.begin(), chosen.end());
    eq.result = LogicalQuery::union_tree(std::move(subjects), r0);
    return eq;
}

// Attach a ground constraint at a subject entity: the unique subject for
// single/path queries, a uniformly drawn branch subject for trees. The
// constraint is a graph triple incident to the anchor (either direction)
// whose relation does not already occur in the query. Empty when the anchor
// has no eligible incident triple.
inline std::optional<ExtendedQuery> intersect_extend_subject(const LogicalQuery& q,
                                                             const KnowledgeGraph& kg, Rng& rng) {
    QueryShape shape = shape_of(q);
    if (shape == QueryShape::UnionTree)
        throw std::invalid_argument("union-tree queries are never extended");

    const EntityId& anchor =
        q.branches[shape == QueryShape::Tree ? rng.index(q.branches.size()) : 0].subject;

    std::set<RelationId> used = q.relations();
    std::vector<Triple> candidates;
    for (Direction d : {Direction::Outgoing, Direction::Incoming})
        for (const Triple& t : kg.neighbors(anchor, d))
            if (used.count(t.relation) == 0) candidates.push_back(t);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    if (candidates.empty()) return std::nullopt;

    ExtendedQuery eq;
    eq.base = q;
    eq.action = ExtensionAction::IntersectAtSubject;
    eq.anchor = anchor;
    eq.result = q;
    eq.result.constraints.push_back(candidates[rng.index(candidates.size())]);
    return eq;
}

// Add a new answer branch (e', r', ?a) taken from the incoming edges of a
// known answer, so the intersection stays non-empty by construction. The new
// branch must introduce both a fresh relation and a fresh subject. Empty when
// the answer has no eligible incoming triple.
inline std::optional<ExtendedQuery> intersect_extend_answer(const LogicalQuery& q,
                                                            const KnowledgeGraph& kg,
                                                            const EntityId& answer, Rng& rng) {
    QueryShape shape = shape_of(q);
    if (shape == QueryShape::UnionTree)
        throw std::invalid_argument("union-tree queries are never extended");
    if (evaluate(q, kg).count(answer) == 0)
        throw std::invalid_argument("answer '" + answer + "' is not derivable from the base query");

    std::set<RelationId> used = q.relations();
    std::set<EntityId> subjects = q.subjects();
    std::vector<Triple> candidates;
    for (const Triple& t : kg.neighbors(answer, Direction::Incoming))
        if (used.count(t.relation) == 0 && subjects.count(t.subject) == 0)
            candidates.push_back(t);
    if (candidates.empty()) return std::nullopt;

    const Triple& pick = candidates[rng.index(candidates.size())];
    ExtendedQuery eq;
    eq.base = q;
    eq.action = ExtensionAction::IntersectAtAnswer;
    eq.anchor = answer;
    eq.result = q;
    eq.result.branches.push_back(QueryBranch{pick.subject, {pick.relation}});
    return eq;
}

inline ComplexityType complexity_label(const ExtendedQuery& eq) {
    switch (shape_of(eq.result)) {
        case QueryShape::Single: return ComplexityType::Single;
        case QueryShape::UnionTree: return ComplexityType::Union;
        case QueryShape::Tree: return ComplexityType::Intersection;
        case QueryShape::Path: return ComplexityType::Concatenation;
    }
    return ComplexityType::Single;
}

} // namespace attribforge
