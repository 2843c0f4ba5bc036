#pragma once

// Derivation of the insufficient, contradictory, and irrelevant citation
// subgraphs from a supportive one.
//
//   insufficient   delete a triple (path) or a whole subject-to-answer
//                  branch (tree / union-tree); never defined for a
//                  single-triple subgraph. The deletion must break
//                  entailment of the answer it witnessed.
//   contradictory  swap the answer entity for a same-typed non-answer;
//                  every occurrence for intersection-style subgraphs, one
//                  uniformly drawn disjunct for unions. Attached ground
//                  constraints stay untouched.
//   irrelevant     a structure-isomorphic subgraph walked out from the same
//                  subject entity whose relations and remaining entities are
//                  disjoint from the original's.

#include "attribforge/grounding.hpp"
#include "attribforge/kg.hpp"
#include "attribforge/rng.hpp"
#include "attribforge/types.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <vector>

namespace attribforge {

namespace detail {

inline std::vector<Triple> triples_without(const EvidenceSubgraph& g, std::size_t part_idx,
                                           int triple_idx) {
    std::vector<Triple> out;
    for (std::size_t p = 0; p < g.parts.size(); ++p) {
        if (triple_idx < 0 && p == part_idx) continue;  // drop the whole part
        int local = 0;
        for (const Triple& t : g.parts[p].chain) {
            if (!(p == part_idx && local == triple_idx)) out.push_back(t);
            ++local;
        }
        for (const Triple& t : g.parts[p].constraints) {
            if (!(p == part_idx && local == triple_idx)) out.push_back(t);
            ++local;
        }
    }
    return out;
}

} // namespace detail

// Remove evidence so the answer is no longer derivable. Candidate deletions
// that leave the answer entailed (e.g. two union disjuncts witnessing the
// same answer) are not eligible; the draw is uniform over eligible ones.
inline std::optional<EvidenceSubgraph> make_insufficient(const EvidenceSubgraph& g, Rng& rng) {
    if (g.origin_shape == QueryShape::Single) return std::nullopt;

    if (g.origin_shape == QueryShape::Path) {
        const SubgraphPart& part = g.parts.front();
        const int total = static_cast<int>(part.chain.size() + part.constraints.size());
        std::vector<int> eligible;
        for (int i = 0; i < total; ++i) {
            auto remaining = detail::triples_without(g, 0, i);
            if (evaluate_over(g.query, remaining).count(part.answer) == 0) eligible.push_back(i);
        }
        if (eligible.empty()) return std::nullopt;
        int pick = eligible[rng.index(eligible.size())];
        EvidenceSubgraph out = g;
        SubgraphPart& p = out.parts.front();
        if (pick < static_cast<int>(p.chain.size()))
            p.chain.erase(p.chain.begin() + pick);
        else
            p.constraints.erase(p.constraints.begin() + (pick - p.chain.size()));
        return out;
    }

    // tree / union-tree: drop one full branch witness
    std::vector<std::size_t> eligible;
    for (std::size_t p = 0; p < g.parts.size(); ++p) {
        auto remaining = detail::triples_without(g, p, -1);
        if (evaluate_over(g.query, remaining).count(g.parts[p].answer) == 0) eligible.push_back(p);
    }
    if (eligible.empty()) return std::nullopt;
    std::size_t pick = eligible[rng.index(eligible.size())];
    EvidenceSubgraph out = g;
    out.parts.erase(out.parts.begin() + pick);
    return out;
}

// Replace the answer entity with a same-typed non-answer, excluding every
// correct answer of the query so the rewritten subgraph cannot accidentally
// support another valid answer. A chain's starting subject is pinned by the
// query and stays put even when a cycle makes it coincide with the answer;
// every other occurrence is rewritten. Empty when no substitute exists.
inline std::optional<EvidenceSubgraph> make_contradictory(const EvidenceSubgraph& g,
                                                          const KnowledgeGraph& kg, Rng& rng) {
    const bool union_origin = g.origin_shape == QueryShape::UnionTree;
    const std::size_t part_idx = union_origin ? rng.index(g.parts.size()) : 0;
    const EntityId old_answer = g.parts[part_idx].answer;

    std::optional<EntityId> substitute =
        kg.same_type_substitute(old_answer, g.all_query_answers, rng);
    if (!substitute) return std::nullopt;

    EvidenceSubgraph out = g;
    auto rewrite = [&](SubgraphPart& part) {
        for (std::size_t h = 0; h < part.chain.size(); ++h) {
            Triple& t = part.chain[h];
            if (h > 0 && t.subject == old_answer) t.subject = *substitute;
            if (t.object == old_answer) t.object = *substitute;
        }
        if (part.answer == old_answer) part.answer = *substitute;
    };
    if (union_origin) {
        rewrite(out.parts[part_idx]);
    } else {
        for (SubgraphPart& part : out.parts) rewrite(part);
        for (auto& [var, entity] : out.bindings)
            if (entity == old_answer) entity = *substitute;
    }
    out.answer_entities.clear();
    for (const SubgraphPart& part : out.parts) out.answer_entities.insert(part.answer);

    // The rewritten subgraph must entail the substitute; for non-unions it
    // must entail nothing that is actually a correct answer.
    std::set<EntityId> derived = evaluate_over(g.query, out.triples());
    if (derived.count(*substitute) == 0) return std::nullopt;
    if (!union_origin)
        for (const EntityId& a : derived)
            if (g.all_query_answers.count(a) > 0) return std::nullopt;
    return out;
}

namespace detail {

struct PartShape {
    std::size_t hops;
    std::size_t constraint_count;
};

// One seeded walk attempt; empty on dead end.
inline std::optional<std::vector<SubgraphPart>> irrelevant_walk(
    const EvidenceSubgraph& g, const KnowledgeGraph& kg, Rng& rng, const EntityId& anchor,
    const std::vector<PartShape>& shape, const std::set<RelationId>& banned_rels,
    const std::set<EntityId>& banned_ents) {
    const bool converge = !g.query.is_union && g.parts.size() > 1;
    std::set<EntityId> used = {anchor};
    std::vector<SubgraphPart> parts;

    auto fresh_entity = [&](const EntityId& e) {
        return banned_ents.count(e) == 0 && used.count(e) == 0;
    };

    // first part: forward walk from the anchor
    {
        SubgraphPart part;
        EntityId node = anchor;
        for (std::size_t h = 0; h < shape[0].hops; ++h) {
            std::vector<Triple> cands;
            for (const Triple& t : kg.neighbors(node, Direction::Outgoing))
                if (banned_rels.count(t.relation) == 0 && fresh_entity(t.object))
                    cands.push_back(t);
            if (cands.empty()) return std::nullopt;
            const Triple& pick = cands[rng.index(cands.size())];
            part.chain.push_back(pick);
            used.insert(pick.object);
            node = pick.object;
        }
        part.answer = node;
        parts.push_back(std::move(part));
    }
    const EntityId endpoint = parts[0].answer;

    for (std::size_t p = 1; p < shape.size(); ++p) {
        SubgraphPart part;
        if (converge) {
            // backward walk ending at the shared endpoint
            EntityId node = endpoint;
            std::vector<Triple> reversed;
            for (std::size_t h = 0; h < shape[p].hops; ++h) {
                std::vector<Triple> cands;
                for (const Triple& t : kg.neighbors(node, Direction::Incoming))
                    if (banned_rels.count(t.relation) == 0 && fresh_entity(t.subject))
                        cands.push_back(t);
                if (cands.empty()) return std::nullopt;
                const Triple& pick = cands[rng.index(cands.size())];
                reversed.push_back(pick);
                used.insert(pick.subject);
                node = pick.subject;
            }
            part.chain.assign(reversed.rbegin(), reversed.rend());
            part.answer = endpoint;
        } else {
            // independent disjunct edge anywhere in the graph
            std::vector<Triple> cands;
            for (const Triple& t : kg.triples())
                if (banned_rels.count(t.relation) == 0 && fresh_entity(t.subject) &&
                    fresh_entity(t.object) && t.subject != t.object)
                    cands.push_back(t);
            if (cands.empty()) return std::nullopt;
            const Triple& pick = cands[rng.index(cands.size())];
            part.chain.push_back(pick);
            used.insert(pick.subject);
            used.insert(pick.object);
            part.answer = pick.object;
        }
        parts.push_back(std::move(part));
    }

    // mirror attached constraints at each part's subject
    for (std::size_t p = 0; p < shape.size(); ++p) {
        const EntityId& subject = parts[p].chain.front().subject;
        for (std::size_t c = 0; c < shape[p].constraint_count; ++c) {
            std::vector<Triple> cands;
            for (Direction d : {Direction::Outgoing, Direction::Incoming})
                for (const Triple& t : kg.neighbors(subject, d)) {
                    const EntityId& counterpart = d == Direction::Outgoing ? t.object : t.subject;
                    if (banned_rels.count(t.relation) == 0 && fresh_entity(counterpart))
                        cands.push_back(t);
                }
            std::sort(cands.begin(), cands.end());
            cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
            if (cands.empty()) return std::nullopt;
            const Triple& pick = cands[rng.index(cands.size())];
            parts[p].constraints.push_back(pick);
            used.insert(pick.subject == subject ? pick.object : pick.subject);
        }
    }
    return parts;
}

} // namespace detail

inline constexpr int kIrrelevantWalkAttempts = 500;

// Search for a subgraph with the same topology as `g`, anchored at the same
// subject entity, sharing no relation and no further entity with it. Gives
// up after a bounded number of seeded walk attempts.
inline std::optional<EvidenceSubgraph> make_irrelevant(const EvidenceSubgraph& g,
                                                       const KnowledgeGraph& kg, Rng& rng) {
    if (g.parts.empty() || g.parts.front().chain.empty()) return std::nullopt;
    const EntityId anchor = g.parts.front().chain.front().subject;

    std::vector<detail::PartShape> shape;
    for (const SubgraphPart& p : g.parts)
        shape.push_back({p.chain.size(), p.constraints.size()});
    const std::set<RelationId> banned_rels = g.relation_set();
    std::set<EntityId> banned_ents = g.entity_set();
    banned_ents.erase(anchor);

    for (int attempt = 0; attempt < kIrrelevantWalkAttempts; ++attempt) {
        auto parts = detail::irrelevant_walk(g, kg, rng, anchor, shape, banned_rels, banned_ents);
        if (!parts) continue;
        EvidenceSubgraph out;
        out.parts = std::move(*parts);
        out.origin_shape = g.origin_shape;
        out.query = g.query;
        out.all_query_answers = g.all_query_answers;
        return out;
    }
    return std::nullopt;
}

} // namespace attribforge
