#pragma once

// End-to-end benchmark assembly: ingest KGQA records, run extension ->
// grounding -> perturbation -> verbalization per record, split by provenance
// group, and serialize. Template-mode output is byte-reproducible from
// (graph, records, config, seed).

#include "attribforge/extension.hpp"
#include "attribforge/grounding.hpp"
#include "attribforge/kg.hpp"
#include "attribforge/perturbation.hpp"
#include "attribforge/query.hpp"
#include "attribforge/rng.hpp"
#include "attribforge/types.hpp"
#include "attribforge/verbalize.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace attribforge {

// A source record: natural-language question, gold answer entity, and the
// logical query that derives it.
struct KgqaSample {
    std::string id;
    std::string question;
    EntityId answer_id;
    std::string answer_name;
    LogicalQuery logical_form;
};

struct Citation {
    int index = 0;
    std::string text;

    bool operator==(const Citation&) const = default;
};

struct Provenance {
    std::string group_id;
    std::string base_query;
    std::string extended_query;
    ExtensionAction action = ExtensionAction::NoExtension;
    std::optional<EntityId> anchor;
    bool fallback = false;  // requested extension was infeasible; fell back to none
    std::uint64_t seed = 0; // per-group derived seed
    std::vector<Triple> subgraph;

    bool operator==(const Provenance&) const = default;
};

struct AttributionSample {
    std::string id;
    std::string question;
    std::string answer_statement;
    std::vector<Citation> citations;
    Category category = Category::Supportive;
    ComplexityType complexity = ComplexityType::Single;
    Provenance provenance;

    bool operator==(const AttributionSample&) const = default;
};

// ---------------------------------------------------------------------------
// Ingest

struct FilterConfig {
    int max_path_hops = 2;       // effective hops, compound value nodes collapsed
    int max_tree_subjects = 2;   // distinct non-answer subject entities
    bool check_answer = true;    // require answer_id in evaluate(logical_form)
};

struct IngestReport {
    std::size_t records = 0;
    std::size_t malformed = 0;
    std::size_t shape_dropped = 0;
    std::size_t hops_dropped = 0;
    std::size_t subjects_dropped = 0;
    std::size_t inconsistent_dropped = 0;
    std::size_t kept = 0;
    std::vector<std::string> diagnostics;
};

struct NoSamples : std::runtime_error {
    explicit NoSamples(const std::string& what) : std::runtime_error(what) {}
};

// One JSON object per line with fields id, question, answer_id, answer_name,
// logical_form. Malformed records are skipped with a diagnostic; surviving
// records are limited to single/path/tree queries within the hop and subject
// limits whose gold answer is actually derivable.
inline std::vector<KgqaSample> ingest_kgqa(std::istream& in, const KnowledgeGraph& kg,
                                           const FilterConfig& filters, IngestReport& report) {
    std::vector<KgqaSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++report.records;
        auto drop = [&](std::size_t& counter, const std::string& why) {
            ++counter;
            report.diagnostics.push_back("line " + std::to_string(line_no) + ": " + why);
        };
        KgqaSample s;
        try {
            nlohmann::json record = nlohmann::json::parse(line);
            s.id = record.at("id").get<std::string>();
            s.question = record.at("question").get<std::string>();
            s.answer_id = record.at("answer_id").get<std::string>();
            s.answer_name = record.value("answer_name", std::string{});
            s.logical_form = parse_logical_form(record.at("logical_form").get<std::string>());
        } catch (const std::exception& e) {
            drop(report.malformed, std::string("malformed record: ") + e.what());
            continue;
        }

        try {
            QueryShape shape = shape_of(s.logical_form);
            if (shape == QueryShape::UnionTree) {
                drop(report.shape_dropped, "union queries are not accepted as source records");
                continue;
            }
            if (shape == QueryShape::Tree) {
                if (static_cast<int>(s.logical_form.subjects().size()) > filters.max_tree_subjects) {
                    drop(report.subjects_dropped, "tree query exceeds the subject-entity limit");
                    continue;
                }
            } else if (effective_hops(s.logical_form, kg) > filters.max_path_hops) {
                drop(report.hops_dropped, "path query exceeds the hop limit");
                continue;
            }
            if (filters.check_answer && evaluate(s.logical_form, kg).count(s.answer_id) == 0) {
                drop(report.inconsistent_dropped,
                     "gold answer '" + s.answer_id + "' is not derivable from the logical form");
                continue;
            }
        } catch (const std::exception& e) {
            drop(report.malformed, std::string("unusable record: ") + e.what());
            continue;
        }
        ++report.kept;
        samples.push_back(std::move(s));
    }
    if (report.records > 0 && samples.empty())
        throw NoSamples("no usable records survived ingest filtering");
    return samples;
}

// ---------------------------------------------------------------------------
// Generation

struct GenerationConfig {
    std::uint64_t seed = 0;
    std::size_t union_cap = 3;
    FilterConfig filters;
};

struct GenCounters {
    std::size_t groups_total = 0;
    std::size_t groups_emitted = 0;
    std::size_t samples_emitted = 0;
    std::size_t grounding_failures = 0;
    std::size_t fallback_degenerate_union = 0;
    std::size_t fallback_infeasible_subject = 0;
    std::size_t fallback_infeasible_answer = 0;
    std::size_t missing_insufficient = 0;
    std::size_t missing_contradictory = 0;
    std::size_t missing_irrelevant = 0;

    GenCounters& operator+=(const GenCounters& o) {
        groups_total += o.groups_total;
        groups_emitted += o.groups_emitted;
        samples_emitted += o.samples_emitted;
        grounding_failures += o.grounding_failures;
        fallback_degenerate_union += o.fallback_degenerate_union;
        fallback_infeasible_subject += o.fallback_infeasible_subject;
        fallback_infeasible_answer += o.fallback_infeasible_answer;
        missing_insufficient += o.missing_insufficient;
        missing_contradictory += o.missing_contradictory;
        missing_irrelevant += o.missing_irrelevant;
        return *this;
    }
};

// Draw and apply one extension action. Infeasible or degenerate extensions
// fall back to no extension; the fallback is counted and recorded in
// provenance rather than dropping the record.
inline ExtendedQuery apply_extension(const KgqaSample& s, const KnowledgeGraph& kg,
                                     const GenerationConfig& config, Rng& rng,
                                     GenCounters& counters, bool* fell_back = nullptr) {
    const ExtensionAction action = choose_action(shape_of(s.logical_form), rng);
    auto no_extension = [&s]() {
        ExtendedQuery eq;
        eq.base = s.logical_form;
        eq.action = ExtensionAction::NoExtension;
        eq.result = s.logical_form;
        return eq;
    };
    if (fell_back != nullptr) *fell_back = false;

    switch (action) {
        case ExtensionAction::NoExtension:
            return no_extension();
        case ExtensionAction::UnionExtend: {
            ExtendedQuery eq = union_extend(s.logical_form, kg, config.union_cap);
            if (!eq.degenerate) return eq;
            ++counters.fallback_degenerate_union;
            if (fell_back != nullptr) *fell_back = true;
            return no_extension();
        }
        case ExtensionAction::IntersectAtSubject: {
            if (auto eq = intersect_extend_subject(s.logical_form, kg, rng)) return *eq;
            ++counters.fallback_infeasible_subject;
            if (fell_back != nullptr) *fell_back = true;
            return no_extension();
        }
        case ExtensionAction::IntersectAtAnswer: {
            if (auto eq = intersect_extend_answer(s.logical_form, kg, s.answer_id, rng)) return *eq;
            ++counters.fallback_infeasible_answer;
            if (fell_back != nullptr) *fell_back = true;
            return no_extension();
        }
    }
    return no_extension();
}

namespace detail {

inline std::vector<std::string> answer_names(const EvidenceSubgraph& g, const KgqaSample& s,
                                             const KnowledgeGraph& kg) {
    if (g.origin_shape != QueryShape::UnionTree) {
        if (!s.answer_name.empty()) return {s.answer_name};
        return {kg.display_name(s.answer_id)};
    }
    std::vector<std::string> names;
    std::set<EntityId> seen;
    for (const SubgraphPart& p : g.parts) {
        if (!seen.insert(p.answer).second) continue;
        if (p.answer == s.answer_id && !s.answer_name.empty())
            names.push_back(s.answer_name);
        else
            names.push_back(kg.display_name(p.answer));
    }
    return names;
}

} // namespace detail

// Grow the full sample group for one record and an already-applied extension:
// the supportive sample plus every obtainable perturbed category. All samples
// of the group share question, answer statement, and complexity.
inline std::vector<AttributionSample> generate_group(const KgqaSample& s, const KnowledgeGraph& kg,
                                                     const GenerationConfig& config,
                                                     const Verbalizer& verbalizer,
                                                     const ExtendedQuery& eq, Rng& rng,
                                                     GenCounters& counters,
                                                     bool fallback_applied = false) {
    ++counters.groups_total;
    EvidenceSubgraph supportive;
    try {
        supportive = ground_supportive(eq.result, {s.answer_id}, kg, rng);
    } catch (const GroundingFailed&) {
        ++counters.grounding_failures;
        return {};
    }
    const ComplexityType complexity = complexity_label(eq);

    const std::string question = verbalizer.question(s.question, eq.base, eq.result);
    const std::string statement =
        verbalizer.answer_statement(question, detail::answer_names(supportive, s, kg));

    Provenance base_prov;
    base_prov.group_id = s.id;
    base_prov.base_query = render(eq.base);
    base_prov.extended_query = render(eq.result);
    base_prov.action = eq.action;
    base_prov.anchor = eq.anchor;
    base_prov.fallback = fallback_applied;
    base_prov.seed = config.seed;

    std::vector<AttributionSample> group;
    auto emit = [&](Category category, const EvidenceSubgraph& g) {
        AttributionSample sample;
        sample.id = s.id + "-" + to_string(category);
        sample.question = question;
        sample.answer_statement = statement;
        for (const CitationUnit& unit : partition_citations(g, complexity))
            sample.citations.push_back(Citation{unit.index, verbalizer.citation_text(unit)});
        sample.category = category;
        sample.complexity = complexity;
        sample.provenance = base_prov;
        sample.provenance.subgraph = g.triples();
        group.push_back(std::move(sample));
    };

    emit(Category::Supportive, supportive);
    if (auto ins = make_insufficient(supportive, rng))
        emit(Category::Insufficient, *ins);
    else if (supportive.origin_shape != QueryShape::Single)
        ++counters.missing_insufficient;
    if (auto con = make_contradictory(supportive, kg, rng))
        emit(Category::Contradictory, *con);
    else
        ++counters.missing_contradictory;
    if (auto irr = make_irrelevant(supportive, kg, rng))
        emit(Category::Irrelevant, *irr);
    else
        ++counters.missing_irrelevant;

    ++counters.groups_emitted;
    counters.samples_emitted += group.size();
    return group;
}

inline std::vector<AttributionSample> generate_samples(const KgqaSample& s,
                                                       const KnowledgeGraph& kg,
                                                       const GenerationConfig& config,
                                                       const Verbalizer& verbalizer, Rng& rng,
                                                       GenCounters& counters) {
    bool fell_back = false;
    ExtendedQuery eq = apply_extension(s, kg, config, rng, counters, &fell_back);
    return generate_group(s, kg, config, verbalizer, eq, rng, counters, fell_back);
}

struct GenerationResult {
    std::vector<AttributionSample> samples;
    GenCounters counters;
};

// Run generation over all records. Each group draws from its own stream
// derived from (seed, record id), so output is identical for any worker
// count and any processing order.
inline GenerationResult run_generation(const std::vector<KgqaSample>& records,
                                       const KnowledgeGraph& kg, const GenerationConfig& config,
                                       const Verbalizer& verbalizer, unsigned jobs = 1) {
    GenerationResult result;
    std::vector<std::vector<AttributionSample>> groups(records.size());
    if (jobs <= 1 || records.size() <= 1) {
        for (std::size_t i = 0; i < records.size(); ++i) {
            Rng rng(derive_seed(config.seed, records[i].id));
            groups[i] =
                generate_samples(records[i], kg, config, verbalizer, rng, result.counters);
        }
    } else {
        const unsigned workers = std::min<unsigned>(jobs, static_cast<unsigned>(records.size()));
        std::vector<GenCounters> counters(workers);
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= records.size()) return;
                    Rng rng(derive_seed(config.seed, records[i].id));
                    groups[i] =
                        generate_samples(records[i], kg, config, verbalizer, rng, counters[w]);
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const GenCounters& c : counters) result.counters += c;
    }
    for (auto& g : groups)
        for (auto& sample : g) result.samples.push_back(std::move(sample));
    return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline nlohmann::ordered_json sample_to_json(const AttributionSample& s) {
    nlohmann::ordered_json record;
    record["id"] = s.id;
    record["question"] = s.question;
    record["answer_statement"] = s.answer_statement;
    nlohmann::ordered_json citations = nlohmann::ordered_json::array();
    for (const Citation& c : s.citations) {
        nlohmann::ordered_json item;
        item["index"] = c.index;
        item["text"] = c.text;
        citations.push_back(std::move(item));
    }
    record["citations"] = std::move(citations);
    record["category"] = to_string(s.category);
    record["complexity"] = to_string(s.complexity);
    nlohmann::ordered_json prov;
    prov["group_id"] = s.provenance.group_id;
    prov["base_query"] = s.provenance.base_query;
    prov["extended_query"] = s.provenance.extended_query;
    prov["action"] = to_string(s.provenance.action);
    if (s.provenance.anchor)
        prov["anchor"] = *s.provenance.anchor;
    else
        prov["anchor"] = nullptr;
    prov["fallback"] = s.provenance.fallback;
    prov["seed"] = s.provenance.seed;
    nlohmann::ordered_json subgraph = nlohmann::ordered_json::array();
    for (const Triple& t : s.provenance.subgraph)
        subgraph.push_back(nlohmann::ordered_json::array({t.subject, t.relation, t.object}));
    prov["subgraph"] = std::move(subgraph);
    record["provenance"] = std::move(prov);
    return record;
}

} // namespace detail

inline void write_dataset(std::ostream& out, const std::vector<AttributionSample>& samples) {
    for (const AttributionSample& s : samples) out << detail::sample_to_json(s).dump() << "\n";
}

inline std::vector<AttributionSample> read_dataset(std::istream& in) {
    std::vector<AttributionSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FileParseError(line_no, std::string("invalid record: ") + e.what());
        }
        auto require = [&](const char* field) -> const nlohmann::json& {
            auto it = record.find(field);
            if (it == record.end())
                throw FileParseError(line_no, std::string("missing field '") + field + "'");
            return *it;
        };
        AttributionSample s;
        try {
            s.id = require("id").get<std::string>();
            s.question = require("question").get<std::string>();
            s.answer_statement = require("answer_statement").get<std::string>();
            for (const auto& item : require("citations"))
                s.citations.push_back(
                    Citation{item.at("index").get<int>(), item.at("text").get<std::string>()});
            auto category = category_from_string(require("category").get<std::string>());
            if (!category) throw FileParseError(line_no, "unknown category label");
            s.category = *category;
            auto complexity = complexity_from_string(require("complexity").get<std::string>());
            if (!complexity) throw FileParseError(line_no, "unknown complexity label");
            s.complexity = *complexity;
            const nlohmann::json& prov = require("provenance");
            s.provenance.group_id = prov.at("group_id").get<std::string>();
            s.provenance.base_query = prov.at("base_query").get<std::string>();
            s.provenance.extended_query = prov.at("extended_query").get<std::string>();
            auto action = action_from_string(prov.at("action").get<std::string>());
            if (!action) throw FileParseError(line_no, "unknown extension action");
            s.provenance.action = *action;
            if (prov.contains("anchor") && !prov.at("anchor").is_null())
                s.provenance.anchor = prov.at("anchor").get<std::string>();
            s.provenance.fallback = prov.value("fallback", false);
            s.provenance.seed = prov.value("seed", std::uint64_t{0});
            if (prov.contains("subgraph"))
                for (const auto& t : prov.at("subgraph"))
                    s.provenance.subgraph.push_back(Triple{t.at(0).get<std::string>(),
                                                           t.at(1).get<std::string>(),
                                                           t.at(2).get<std::string>()});
        } catch (const FileParseError&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw FileParseError(line_no, std::string("invalid record: ") + e.what());
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

// ---------------------------------------------------------------------------
// Split and statistics

// Split by provenance group so all categories of one source record land in
// the same half. Train size is floor(ratio * groups) with any fractional
// remainder rounded toward train, clamped so neither half is empty.
inline std::pair<std::vector<AttributionSample>, std::vector<AttributionSample>> split_dataset(
    const std::vector<AttributionSample>& samples, double ratio, Rng& rng) {
    if (ratio <= 0.0 || ratio >= 1.0) throw std::invalid_argument("split ratio must be in (0, 1)");
    std::vector<std::string> group_ids;
    std::set<std::string> seen;
    for (const AttributionSample& s : samples)
        if (seen.insert(s.provenance.group_id).second) group_ids.push_back(s.provenance.group_id);
    if (group_ids.size() < 2)
        throw std::invalid_argument("need at least two provenance groups to split");

    for (std::size_t i = group_ids.size(); i-- > 1;)
        std::swap(group_ids[i], group_ids[rng.index(i + 1)]);

    const double exact = ratio * static_cast<double>(group_ids.size());
    std::size_t train_groups = static_cast<std::size_t>(exact);
    if (exact > static_cast<double>(train_groups)) ++train_groups;
    train_groups = std::max<std::size_t>(1, std::min(train_groups, group_ids.size() - 1));

    std::set<std::string> train_set(group_ids.begin(), group_ids.begin() + train_groups);
    std::pair<std::vector<AttributionSample>, std::vector<AttributionSample>> out;
    for (const AttributionSample& s : samples)
        (train_set.count(s.provenance.group_id) > 0 ? out.first : out.second).push_back(s);
    return out;
}

struct StatsTable {
    std::array<std::size_t, 4> by_category{};
    std::array<std::size_t, 4> by_complexity{};
    std::size_t total = 0;
};

inline StatsTable compute_stats(const std::vector<AttributionSample>& samples) {
    StatsTable t;
    for (const AttributionSample& s : samples) {
        ++t.by_category[static_cast<std::size_t>(s.category)];
        ++t.by_complexity[static_cast<std::size_t>(s.complexity)];
        ++t.total;
    }
    return t;
}

} // namespace attribforge
