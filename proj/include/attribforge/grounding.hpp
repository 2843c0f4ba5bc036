#pragma once

// Query evaluation over a knowledge graph and extraction of the witness
// subgraph that certifies a known answer. Evaluation is exhaustive
// backtracking over variable bindings; it doubles as the entailment oracle
// when run over a subgraph's triples instead of the full graph.

#include "attribforge/kg.hpp"
#include "attribforge/query.hpp"
#include "attribforge/rng.hpp"
#include "attribforge/types.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace attribforge {

struct GroundingFailed : std::runtime_error {
    explicit GroundingFailed(const std::string& what) : std::runtime_error(what) {}
};

// Chains longer than this are rejected outright; the pipeline's inputs stay
// at two effective hops and anything deeper is a malformed query.
inline constexpr std::size_t kMaxChainHops = 4;

namespace detail {

inline void check_depth(const LogicalQuery& q) {
    for (const QueryBranch& b : q.branches)
        if (b.relations.size() > kMaxChainHops)
            throw std::invalid_argument("query branch exceeds the " +
                                        std::to_string(kMaxChainHops) + "-hop search bound");
}

inline std::set<EntityId> chain_answers(const KnowledgeGraph& kg, const QueryBranch& b) {
    std::set<EntityId> frontier{b.subject};
    for (const RelationId& r : b.relations) {
        std::set<EntityId> next;
        for (const EntityId& e : frontier)
            for (const Triple& t : kg.neighbors(e, Direction::Outgoing))
                if (t.relation == r) next.insert(t.object);
        frontier = std::move(next);
        if (frontier.empty()) break;
    }
    return frontier;
}

} // namespace detail

// Exact answer set of `q` over `kg`. Ground constraints must all be present
// in the graph or the result is empty.
inline std::set<EntityId> evaluate(const LogicalQuery& q, const KnowledgeGraph& kg) {
    detail::check_depth(q);
    for (const Triple& c : q.constraints)
        if (!kg.has_triple(c)) return {};

    std::set<EntityId> result;
    bool first = true;
    for (const QueryBranch& b : q.branches) {
        std::set<EntityId> answers = detail::chain_answers(kg, b);
        if (q.is_union) {
            result.insert(answers.begin(), answers.end());
        } else if (first) {
            result = std::move(answers);
            first = false;
        } else {
            std::set<EntityId> merged;
            std::set_intersection(result.begin(), result.end(), answers.begin(), answers.end(),
                                  std::inserter(merged, merged.begin()));
            result = std::move(merged);
        }
        if (!q.is_union && result.empty()) break;
    }
    return result;
}

// Entailment oracle: evaluation restricted to an explicit triple set.
inline std::set<EntityId> evaluate_over(const LogicalQuery& q, const std::vector<Triple>& triples) {
    return evaluate(q, KnowledgeGraph::from_triples(triples));
}

// One structural component of an evidence subgraph: the hop-ordered witness
// chain of a branch (or union disjunct), the ground-constraint witnesses
// anchored at its subject, and the answer it derives.
struct SubgraphPart {
    std::vector<Triple> chain;
    std::vector<Triple> constraints;
    EntityId answer;

    bool operator==(const SubgraphPart&) const = default;
};

struct EvidenceSubgraph {
    std::vector<SubgraphPart> parts;
    std::map<std::string, EntityId> bindings;  // ?a plus path intermediates
    std::set<EntityId> answer_entities;        // answers bound across parts
    std::set<EntityId> all_query_answers;      // full evaluate() result at grounding time
    QueryShape origin_shape = QueryShape::Single;
    LogicalQuery query;                        // the query this subgraph witnesses

    bool operator==(const EvidenceSubgraph&) const = default;

    std::vector<Triple> triples() const {
        std::vector<Triple> out;
        for (const SubgraphPart& p : parts) {
            out.insert(out.end(), p.chain.begin(), p.chain.end());
            out.insert(out.end(), p.constraints.begin(), p.constraints.end());
        }
        return out;
    }

    std::set<RelationId> relation_set() const {
        std::set<RelationId> r;
        for (const Triple& t : triples()) r.insert(t.relation);
        return r;
    }

    std::set<EntityId> entity_set() const {
        std::set<EntityId> e;
        for (const Triple& t : triples()) {
            e.insert(t.subject);
            e.insert(t.object);
        }
        return e;
    }
};

namespace detail {

// All witness chains from `subject` along `relations` ending at `target`,
// in canonical order.
inline void collect_chains(const KnowledgeGraph& kg, const EntityId& node,
                           const std::vector<RelationId>& relations, std::size_t hop,
                           const EntityId& target, std::vector<Triple>& current,
                           std::vector<std::vector<Triple>>& out) {
    if (hop == relations.size()) {
        if (node == target) out.push_back(current);
        return;
    }
    for (const Triple& t : kg.neighbors(node, Direction::Outgoing)) {
        if (t.relation != relations[hop]) continue;
        current.push_back(t);
        collect_chains(kg, t.object, relations, hop + 1, target, current, out);
        current.pop_back();
    }
}

inline std::vector<Triple> pick_chain(const KnowledgeGraph& kg, const QueryBranch& b,
                                      const EntityId& answer, Rng& rng) {
    std::vector<std::vector<Triple>> chains;
    std::vector<Triple> current;
    collect_chains(kg, b.subject, b.relations, 0, answer, current, chains);
    if (chains.empty())
        throw GroundingFailed("no witness chain from '" + b.subject + "' to '" + answer + "'");
    std::sort(chains.begin(), chains.end());
    return chains[rng.index(chains.size())];
}

} // namespace detail

// Extract a supportive evidence subgraph binding the query's answer to the
// required answer entities. Every conjunct (and constraint) is witnessed by
// exactly one triple per hop; when several witnesses exist the choice is a
// seeded uniform draw over the canonically sorted candidates.
inline EvidenceSubgraph ground_supportive(const LogicalQuery& q,
                                          const std::set<EntityId>& required_answers,
                                          const KnowledgeGraph& kg, Rng& rng) {
    detail::check_depth(q);
    if (required_answers.empty()) throw GroundingFailed("no answer supplied");

    std::set<EntityId> full = evaluate(q, kg);
    for (const EntityId& a : required_answers)
        if (full.count(a) == 0)
            throw GroundingFailed("answer '" + a + "' is not derivable from the query");

    EvidenceSubgraph g;
    g.origin_shape = shape_of(q);
    g.query = q;
    g.all_query_answers = full;

    if (q.is_union) {
        for (const QueryBranch& b : q.branches) {
            std::set<EntityId> answers = detail::chain_answers(kg, b);
            if (answers.empty()) continue;  // disjunct contributed nothing
            std::vector<EntityId> preferred;
            for (const EntityId& a : answers)
                if (required_answers.count(a) > 0) preferred.push_back(a);
            EntityId bound;
            if (!preferred.empty()) {
                bound = preferred[rng.index(preferred.size())];
            } else {
                std::vector<EntityId> pool(answers.begin(), answers.end());
                bound = pool[rng.index(pool.size())];
            }
            SubgraphPart part;
            part.chain = detail::pick_chain(kg, b, bound, rng);
            part.answer = bound;
            g.parts.push_back(std::move(part));
        }
        for (const SubgraphPart& p : g.parts) g.answer_entities.insert(p.answer);
        for (const EntityId& a : required_answers)
            if (g.answer_entities.count(a) == 0)
                throw GroundingFailed("required answer '" + a + "' not covered by any disjunct");
        if (!g.parts.empty()) g.bindings["?a"] = g.parts.front().answer;
        return g;
    }

    if (required_answers.size() != 1)
        throw GroundingFailed("non-union queries bind ?a to exactly one answer");
    const EntityId& answer = *required_answers.begin();

    int next_var = 1;
    for (const QueryBranch& b : q.branches) {
        SubgraphPart part;
        part.chain = detail::pick_chain(kg, b, answer, rng);
        part.answer = answer;
        for (std::size_t h = 0; h + 1 < part.chain.size(); ++h)
            g.bindings["?v" + std::to_string(next_var++)] = part.chain[h].object;
        g.parts.push_back(std::move(part));
    }
    // Constraints are ground facts; the witness is the triple itself,
    // attached to the part whose subject it is incident to.
    for (const Triple& c : q.constraints) {
        std::size_t target = 0;
        for (std::size_t i = 0; i < g.parts.size(); ++i) {
            const EntityId& s = q.branches[i].subject;
            if (c.subject == s || c.object == s) {
                target = i;
                break;
            }
        }
        g.parts[target].constraints.push_back(c);
    }
    g.bindings["?a"] = answer;
    g.answer_entities = {answer};
    return g;
}

} // namespace attribforge
