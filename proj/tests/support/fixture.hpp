#pragma once

// Canonical toy graph used across the test suite: two same-named persons
// (union material), a 2-hop company chain, and typed substitution targets.

#include "attribforge/kg.hpp"

#include <sstream>
#include <string>

namespace testsupport {

inline const char* kFixtureTriples =
    "London\tcapitalOf\tUK\n"
    "Paris\tcapitalOf\tFrance\n"
    "Alice1\tbornIn\tLondon\n"
    "Alice1\tworksFor\tAcmeCorp\n"
    "Bob\tbornIn\tLondon\n"
    "AcmeCorp\theadquarteredIn\tLondon\n"
    "Carol\tbornIn\tParis\n"
    "Alice2\tbornIn\tParis\n";

inline const char* kFixtureMeta =
    "Alice1\tAlice\tperson\t0\n"
    "Alice2\tAlice\tperson\t0\n"
    "Bob\tBob\tperson\t0\n"
    "Carol\tCarol\tperson\t0\n"
    "London\tLondon\tcity\t0\n"
    "Paris\tParis\tcity\t0\n"
    "UK\tUK\tcountry\t0\n"
    "France\tFrance\tcountry\t0\n"
    "AcmeCorp\tAcmeCorp\tcompany\t0\n";

inline attribforge::KnowledgeGraph fixture_kg() {
    std::istringstream triples(kFixtureTriples);
    std::istringstream meta(kFixtureMeta);
    return attribforge::KnowledgeGraph::load(triples, meta);
}

// Named handles on the fixture facts.
inline const attribforge::Triple T1{"London", "capitalOf", "UK"};
inline const attribforge::Triple T2{"Paris", "capitalOf", "France"};
inline const attribforge::Triple T3{"Alice1", "bornIn", "London"};
inline const attribforge::Triple T4{"Alice1", "worksFor", "AcmeCorp"};
inline const attribforge::Triple T5{"Bob", "bornIn", "London"};
inline const attribforge::Triple T6{"AcmeCorp", "headquarteredIn", "London"};
inline const attribforge::Triple T7{"Carol", "bornIn", "Paris"};
inline const attribforge::Triple T8{"Alice2", "bornIn", "Paris"};

} // namespace testsupport
