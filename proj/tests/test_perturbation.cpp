#include "attribforge/perturbation.hpp"
#include "support/fixture.hpp"
#include "support/oracle.hpp"

#include <doctest.h>

using namespace attribforge;
using namespace testsupport;

namespace {

EvidenceSubgraph ground_fixture(const char* query_text, const EntityId& answer,
                                std::uint64_t seed = 7) {
    static KnowledgeGraph kg = fixture_kg();
    Rng rng(seed);
    return ground_supportive(parse_logical_form(query_text), {answer}, kg, rng);
}

} // namespace

TEST_CASE("insufficient path subgraphs lose one triple and fail entailment") {
    EvidenceSubgraph g = ground_fixture("[Alice1, worksFor, ?v1, headquarteredIn, ?a]", "London");
    Rng rng(0);  // draws the second candidate: the final hop
    auto ins = make_insufficient(g, rng);
    REQUIRE(ins.has_value());
    CHECK(ins->triples() == std::vector<Triple>{T4});
    CHECK(evaluate_over(g.query, ins->triples()).count("London") == 0);
}

TEST_CASE("insufficient tree subgraphs lose a whole branch") {
    EvidenceSubgraph g = ground_fixture("(Alice1, bornIn, ?a) & (Bob, bornIn, ?a)", "London");
    Rng rng(0);  // draws the second branch
    auto ins = make_insufficient(g, rng);
    REQUIRE(ins.has_value());
    CHECK(ins->triples() == std::vector<Triple>{T3});
    CHECK(evaluate_over(g.query, ins->triples()).count("London") == 0);
}

TEST_CASE("single-triple subgraphs have no insufficient variant") {
    EvidenceSubgraph g = ground_fixture("(Alice1, bornIn, ?a)", "London");
    Rng rng(0);
    CHECK(make_insufficient(g, rng) == std::nullopt);
}

TEST_CASE("a branch whose removal keeps the answer derivable is not deleted") {
    // Both disjuncts witness London; deleting either leaves London entailed,
    // so no insufficient variant exists for this union subgraph.
    std::istringstream triples(
        "A1\tbornIn\tLondon\n"
        "A2\tbornIn\tLondon\n");
    std::istringstream meta(
        "A1\tAl\tperson\t0\n"
        "A2\tAl\tperson\t0\n"
        "London\tLondon\tcity\t0\n");
    KnowledgeGraph kg = KnowledgeGraph::load(triples, meta);
    Rng rng(5);
    EvidenceSubgraph g = ground_supportive(parse_logical_form("(A1, bornIn, ?a) | (A2, bornIn, ?a)"),
                                           {"London"}, kg, rng);
    CHECK(make_insufficient(g, rng) == std::nullopt);
}

TEST_CASE("union insufficient drops one disjunct witness") {
    EvidenceSubgraph g = ground_fixture("(Alice1, bornIn, ?a) | (Alice2, bornIn, ?a)", "London");
    REQUIRE(g.parts.size() == 2);
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Rng rng(seed);
        auto ins = make_insufficient(g, rng);
        REQUIRE(ins.has_value());
        CHECK(ins->parts.size() == 1);
        // the deleted disjunct's answer is no longer derivable
        std::set<EntityId> kept = evaluate_over(g.query, ins->triples());
        for (const SubgraphPart& part : g.parts) {
            bool still_there = false;
            for (const SubgraphPart& k : ins->parts) still_there |= k.chain == part.chain;
            if (!still_there) CHECK(kept.count(part.answer) == 0);
        }
    }
}

TEST_CASE("contradictory swaps the answer for the same-typed non-answer") {
    EvidenceSubgraph g = ground_fixture("(Alice1, bornIn, ?a)", "London");
    Rng rng(4);
    auto con = make_contradictory(g, fixture_kg(), rng);
    REQUIRE(con.has_value());
    CHECK(con->triples() == std::vector<Triple>{{"Alice1", "bornIn", "Paris"}});
    CHECK(evaluate_over(g.query, con->triples()) == std::set<EntityId>{"Paris"});
}

TEST_CASE("contradictory rewrites every branch of an intersection") {
    EvidenceSubgraph g = ground_fixture("(Alice1, bornIn, ?a) & (Bob, bornIn, ?a)", "London");
    Rng rng(4);
    auto con = make_contradictory(g, fixture_kg(), rng);
    REQUIRE(con.has_value());
    CHECK(con->triples() == std::vector<Triple>{{"Alice1", "bornIn", "Paris"},
                                                {"Bob", "bornIn", "Paris"}});
    CHECK(con->bindings.at("?a") == "Paris");
}

TEST_CASE("contradictory is impossible without a same-typed substitute") {
    EvidenceSubgraph g = ground_fixture("(Alice1, worksFor, ?a)", "AcmeCorp");
    Rng rng(4);
    CHECK(make_contradictory(g, fixture_kg(), rng) == std::nullopt);
}

TEST_CASE("contradictory leaves attached constraints untouched") {
    KnowledgeGraph kg = fixture_kg();
    Rng grounding_rng(7);
    EvidenceSubgraph g = ground_supportive(
        parse_logical_form("(Alice1, bornIn, ?a) & (Alice1, worksFor, AcmeCorp)"), {"London"}, kg,
        grounding_rng);
    Rng rng(4);
    auto con = make_contradictory(g, kg, rng);
    REQUIRE(con.has_value());
    CHECK(con->parts.front().constraints == std::vector<Triple>{T4});
    CHECK(con->parts.front().chain == std::vector<Triple>{{"Alice1", "bornIn", "Paris"}});
}

TEST_CASE("union contradictory rewrites exactly one disjunct") {
    // needs a same-typed city that is not itself an answer of the union
    std::istringstream triples(
        "A1\tbornIn\tLondon\n"
        "A2\tbornIn\tParis\n"
        "Berlin\tcapitalOf\tGermany\n");
    std::istringstream meta(
        "A1\tAl\tperson\t0\n"
        "A2\tAl\tperson\t0\n"
        "London\tLondon\tcity\t0\n"
        "Paris\tParis\tcity\t0\n"
        "Berlin\tBerlin\tcity\t0\n"
        "Germany\tGermany\tcountry\t0\n");
    KnowledgeGraph kg = KnowledgeGraph::load(triples, meta);
    Rng grounding_rng(7);
    EvidenceSubgraph g = ground_supportive(parse_logical_form("(A1, bornIn, ?a) | (A2, bornIn, ?a)"),
                                           {"London"}, kg, grounding_rng);
    Rng rng(4);
    auto con = make_contradictory(g, kg, rng);
    REQUIRE(con.has_value());
    int changed = 0;
    for (std::size_t p = 0; p < g.parts.size(); ++p) {
        if (con->parts[p].chain != g.parts[p].chain) {
            ++changed;
            CHECK(con->parts[p].answer == "Berlin");
        }
    }
    CHECK(changed == 1);
}

TEST_CASE("irrelevant walks out a disjoint isomorphic subgraph from the same subject") {
    KnowledgeGraph kg = fixture_kg();
    Rng rng(9);
    EvidenceSubgraph born = ground_fixture("(Alice1, bornIn, ?a)", "London");
    auto irr = make_irrelevant(born, kg, rng);
    REQUIRE(irr.has_value());
    CHECK(irr->triples() == std::vector<Triple>{T4});

    EvidenceSubgraph works = ground_fixture("(Alice1, worksFor, ?a)", "AcmeCorp");
    auto mirror = make_irrelevant(works, kg, rng);
    REQUIRE(mirror.has_value());
    CHECK(mirror->triples() == std::vector<Triple>{T3});

    // no second 2-hop chain leaves Alice1 over fresh relations and entities
    EvidenceSubgraph path = ground_fixture("[Alice1, worksFor, ?v1, headquarteredIn, ?a]", "London");
    CHECK(make_irrelevant(path, kg, rng) == std::nullopt);
}

TEST_CASE("irrelevant subgraphs satisfy disjointness and topology on random graphs") {
    Rng rng(777);
    int found = 0;
    while (found < 100) {
        RandomGraphSpec spec;
        spec.entities = 24;
        spec.triples = 60;
        spec.relations = 10;
        KnowledgeGraph kg = random_kg(rng, spec);
        auto base = random_base_query(kg, rng);
        if (!base) continue;
        EvidenceSubgraph g;
        try {
            g = ground_supportive(base->query, {base->answer}, kg, rng);
        } catch (const GroundingFailed&) {
            continue;
        }
        auto irr = make_irrelevant(g, kg, rng);
        if (!irr) continue;
        ++found;

        // relation disjointness
        for (const RelationId& r : irr->relation_set()) CHECK(g.relation_set().count(r) == 0);
        // entity disjointness outside the anchoring subject
        const EntityId anchor = g.parts.front().chain.front().subject;
        CHECK(irr->parts.front().chain.front().subject == anchor);
        for (const EntityId& e : irr->entity_set())
            if (e != anchor) CHECK(g.entity_set().count(e) == 0);
        // same topology: parts, hops per part, constraints per part
        REQUIRE(irr->parts.size() == g.parts.size());
        for (std::size_t p = 0; p < g.parts.size(); ++p) {
            CHECK(irr->parts[p].chain.size() == g.parts[p].chain.size());
            CHECK(irr->parts[p].constraints.size() == g.parts[p].constraints.size());
        }
        if (g.origin_shape == QueryShape::Tree) {
            const EntityId& end = irr->parts.front().chain.back().object;
            for (const SubgraphPart& part : irr->parts) CHECK(part.chain.back().object == end);
        }
    }
}

TEST_CASE("perturbations replay identically from the same seed") {
    KnowledgeGraph kg = fixture_kg();
    EvidenceSubgraph g = ground_fixture("[Alice1, worksFor, ?v1, headquarteredIn, ?a]", "London");
    for (std::uint64_t seed = 0; seed < 16; ++seed) {
        Rng a(seed), b(seed);
        CHECK(make_insufficient(g, a) == make_insufficient(g, b));
        Rng c(seed), d(seed);
        auto ca = make_contradictory(g, kg, c);
        auto cb = make_contradictory(g, kg, d);
        CHECK(ca.has_value() == cb.has_value());
        if (ca) CHECK(ca->triples() == cb->triples());
        Rng e(seed), f(seed);
        auto ia = make_irrelevant(g, kg, e);
        auto ib = make_irrelevant(g, kg, f);
        CHECK(ia.has_value() == ib.has_value());
        if (ia) CHECK(ia->triples() == ib->triples());
    }
}
