#pragma once

// Turning evidence subgraphs into citation texts, extended questions, and
// answer statements. Two modes: deterministic templates (the default; every
// correctness guarantee is stated against it) and an external chat-completion
// service for fluent text.

#include "attribforge/grounding.hpp"
#include "attribforge/kg.hpp"
#include "attribforge/query.hpp"
#include "attribforge/textgen.hpp"
#include "attribforge/types.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace attribforge {

// A numbered citation: the subgraph triples verbalized under one index.
struct CitationUnit {
    int index = 0;  // 1-based
    std::vector<Triple> triples;
};

// Partition a subgraph into citation units according to the complexity of
// the sample: one unit overall for single, one per disjunct for union, one
// per branch for intersection (attached constraints join their branch), and
// one per hop for concatenation (constraints join the first hop).
inline std::vector<CitationUnit> partition_citations(const EvidenceSubgraph& g, ComplexityType c) {
    std::vector<CitationUnit> units;
    auto add_unit = [&units](std::vector<Triple> triples) {
        if (!triples.empty())
            units.push_back(CitationUnit{static_cast<int>(units.size()) + 1, std::move(triples)});
    };

    switch (c) {
        case ComplexityType::Single:
            add_unit(g.triples());
            break;
        case ComplexityType::Union:
        case ComplexityType::Intersection:
            for (const SubgraphPart& p : g.parts) {
                std::vector<Triple> unit = p.chain;
                unit.insert(unit.end(), p.constraints.begin(), p.constraints.end());
                add_unit(std::move(unit));
            }
            break;
        case ComplexityType::Concatenation:
            for (const SubgraphPart& p : g.parts) {
                for (std::size_t h = 0; h < p.chain.size(); ++h) {
                    std::vector<Triple> unit{p.chain[h]};
                    if (h == 0)
                        unit.insert(unit.end(), p.constraints.begin(), p.constraints.end());
                    add_unit(std::move(unit));
                }
            }
            break;
    }
    return units;
}

// ---------------------------------------------------------------------------
// Relation phrases

// Loadable `relation<TAB>phrase` table. Relations without an entry fall back
// to a humanized form of the id: camel-case and separator boundaries become
// spaces, everything lowercased ("bornIn" -> "born in").
class RelationPhrases {
public:
    RelationPhrases() = default;

    static RelationPhrases load(std::istream& in) {
        RelationPhrases table;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line.front() == '#') continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos || tab == 0)
                throw FileParseError(line_no, "expected `relation<TAB>phrase`");
            table.phrases_[line.substr(0, tab)] = line.substr(tab + 1);
        }
        return table;
    }

    void set(const RelationId& relation, std::string phrase) {
        phrases_[relation] = std::move(phrase);
    }

    bool has(const RelationId& relation) const { return phrases_.count(relation) > 0; }

    std::string phrase(const RelationId& relation) const {
        auto it = phrases_.find(relation);
        return it != phrases_.end() ? it->second : humanize(relation);
    }

    static std::string humanize(const RelationId& relation) {
        std::string out;
        for (std::size_t i = 0; i < relation.size(); ++i) {
            char c = relation[i];
            if (c == '.' || c == '_' || c == '-' || c == '/') {
                if (!out.empty() && out.back() != ' ') out.push_back(' ');
            } else if (std::isupper(static_cast<unsigned char>(c))) {
                if (!out.empty() && out.back() != ' ') out.push_back(' ');
                out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            } else {
                out.push_back(c);
            }
        }
        return out;
    }

private:
    std::unordered_map<RelationId, std::string> phrases_;
};

// One declarative sentence per triple, joined in unit order. Total and
// deterministic; unmapped relations humanize and report through `warnings`.
inline std::string render_template(const CitationUnit& unit, const KnowledgeGraph& kg,
                                   const RelationPhrases& phrases,
                                   std::vector<std::string>* warnings = nullptr) {
    std::string out;
    for (const Triple& t : unit.triples) {
        if (!phrases.has(t.relation) && warnings != nullptr)
            warnings->push_back("no phrase for relation '" + t.relation + "'; humanized");
        if (!out.empty()) out.push_back(' ');
        out += kg.display_name(t.subject);
        out.push_back(' ');
        out += phrases.phrase(t.relation);
        out.push_back(' ');
        out += kg.display_name(t.object);
        out.push_back('.');
    }
    return out;
}

// ---------------------------------------------------------------------------
// Service-mode prompts

// The three generation prompts. `builtin()` is the canonical text; a catalog
// can also be loaded from a directory holding subgraph_to_text.txt,
// question_extension.txt and answer_statement.txt.
struct PromptCatalog {
    std::string subgraph_to_text;
    std::string question_extension;
    std::string answer_statement;

    static PromptCatalog builtin() {
        PromptCatalog c;
        c.subgraph_to_text =
            "Instruction: Your task is to convert a specific subgraph from the knowledge graph "
            "into one or more coherent sentences that summarize the information encapsulated "
            "within the subgraph.\n"
            "\n"
            "Subgraph: {subgraph}\n"
            "\n"
            "Sentences:";
        c.question_extension =
            "Instruction: Given an original question, its corresponding original logical form "
            "query, and an extended logical form query, your task is to generate an extended "
            "question. This involves expanding upon the original problem to align with the "
            "modifications made in the extended logical form query.\n"
            "\n"
            "Original question: {original question}\n"
            "Original logical form query: {original query}\n"
            "Extended logical form query: {extended query}\n"
            "\n"
            "Extended question:";
        c.answer_statement =
            "Instruction: Your task is to convert a question along with its concise answer into "
            "a comprehensive answer statement.\n"
            "\n"
            "Question: {question}\n"
            "Answer: {answer}\n"
            "\n"
            "Answer statement:";
        return c;
    }

    static PromptCatalog load_dir(const std::string& dir) {
        auto read = [&dir](const char* name) {
            std::ifstream in(dir + "/" + name);
            if (!in) throw std::runtime_error(std::string("cannot open prompt resource ") + dir +
                                              "/" + name);
            std::ostringstream buf;
            buf << in.rdbuf();
            std::string text = buf.str();
            while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
            return text;
        };
        PromptCatalog c;
        c.subgraph_to_text = read("subgraph_to_text.txt");
        c.question_extension = read("question_extension.txt");
        c.answer_statement = read("answer_statement.txt");
        return c;
    }
};

namespace detail {

inline std::string replace_all(std::string text, const std::string& needle,
                               const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

inline std::string format_subgraph(const std::vector<Triple>& triples, const KnowledgeGraph& kg) {
    std::string out = "[";
    for (std::size_t i = 0; i < triples.size(); ++i) {
        if (i > 0) out += ", ";
        out += "(\"" + kg.display_name(triples[i].subject) + "\", \"" + triples[i].relation +
               "\", \"" + kg.display_name(triples[i].object) + "\")";
    }
    out += "]";
    return out;
}

inline bool whitespace_only(const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

inline std::string strip_question_mark(std::string q) {
    while (!q.empty() && (std::isspace(static_cast<unsigned char>(q.back())) || q.back() == '?'))
        q.pop_back();
    return q;
}

inline std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += (i + 1 == names.size()) ? " and " : ", ";
        out += names[i];
    }
    return out;
}

} // namespace detail

// Send one prompt through the service. Transport failures surface as
// ServiceUnavailable (after the client's retries); a whitespace-only
// completion is EmptyGeneration.
inline std::string render_via_service(const std::string& prompt, TextGenClient& client) {
    std::string text = client.complete(prompt);
    if (detail::whitespace_only(text)) throw EmptyGeneration("service returned an empty completion");
    return text;
}

class Verbalizer {
public:
    explicit Verbalizer(const KnowledgeGraph& kg, RelationPhrases phrases = {},
                        PromptCatalog catalog = PromptCatalog::builtin())
        : kg_(&kg), phrases_(std::move(phrases)), catalog_(std::move(catalog)) {}

    void use_service(TextGenClient& client) { client_ = &client; }
    bool service_mode() const { return client_ != nullptr; }
    const RelationPhrases& phrases() const { return phrases_; }
    const PromptCatalog& catalog() const { return catalog_; }

    std::string citation_text(const CitationUnit& unit,
                              std::vector<std::string>* warnings = nullptr) const {
        if (client_ == nullptr) return render_template(unit, *kg_, phrases_, warnings);
        std::string prompt = detail::replace_all(catalog_.subgraph_to_text, "{subgraph}",
                                                 detail::format_subgraph(unit.triples, *kg_));
        return render_via_service(prompt, *client_);
    }

    // Extend the original question to match the extended query. Identity when
    // the extension changed nothing.
    std::string question(const std::string& q0, const LogicalQuery& base,
                         const LogicalQuery& extended) const {
        if (base == extended) return q0;
        if (client_ != nullptr) {
            std::string prompt = catalog_.question_extension;
            prompt = detail::replace_all(prompt, "{original question}", q0);
            prompt = detail::replace_all(prompt, "{original query}", render(base));
            prompt = detail::replace_all(prompt, "{extended query}", render(extended));
            return render_via_service(prompt, *client_);
        }

        std::string head = detail::strip_question_mark(q0);
        if (extended.is_union && !base.is_union) {
            const EntityId& e0 = base.branches.front().subject;
            const EntityMeta* m = kg_->meta(e0);
            std::string kind = (m != nullptr && !m->types.empty()) ? *m->types.begin() : "entity";
            return head + ", considering every " + kind + " named " + kg_->display_name(e0) + "?";
        }
        std::string clauses;
        for (std::size_t i = base.constraints.size(); i < extended.constraints.size(); ++i) {
            const Triple& c = extended.constraints[i];
            clauses += ", and that " + kg_->display_name(c.subject) + " " +
                       phrases_.phrase(c.relation) + " " + kg_->display_name(c.object);
        }
        for (std::size_t i = base.branches.size(); i < extended.branches.size(); ++i) {
            const QueryBranch& b = extended.branches[i];
            clauses += ", and that " + kg_->display_name(b.subject) + " " +
                       phrases_.phrase(b.relations.front()) + " the answer";
        }
        return head + clauses + "?";
    }

    // Restate the answer(s) declaratively. Template mode rewrites copular
    // what/which/who questions in place and otherwise falls back to the
    // generic "<answers> is/are the answer to: <question>" pattern.
    std::string answer_statement(const std::string& question,
                                 const std::vector<std::string>& answers) const {
        if (client_ != nullptr) {
            std::string prompt = catalog_.answer_statement;
            prompt = detail::replace_all(prompt, "{question}", question);
            prompt = detail::replace_all(prompt, "{answer}", detail::join_names(answers));
            return render_via_service(prompt, *client_);
        }

        const std::string joined = detail::join_names(answers);
        const bool plural = answers.size() > 1;
        std::string lowered;
        for (char c : question) lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        for (const char* head : {"what ", "which ", "who "}) {
            if (lowered.rfind(head, 0) != 0) continue;
            std::size_t rest_at = std::string(head).size();
            std::string verb, tail;
            for (const char* v : {"is ", "are ", "was ", "were "}) {
                if (lowered.compare(rest_at, std::string(v).size(), v) == 0) {
                    verb = std::string(v).substr(0, std::string(v).size() - 1);
                    tail = detail::strip_question_mark(question.substr(rest_at + verb.size() + 1));
                    break;
                }
            }
            if (verb.empty()) break;
            bool past = verb == "was" || verb == "were";
            std::string agreed = past ? (plural ? "were" : "was") : (plural ? "are" : "is");
            return joined + " " + agreed + " " + tail + ".";
        }
        return joined + (plural ? " are" : " is") + " the answer to: " +
               detail::strip_question_mark(question) + ".";
    }

private:
    const KnowledgeGraph* kg_;
    RelationPhrases phrases_;
    PromptCatalog catalog_;
    TextGenClient* client_ = nullptr;
};

} // namespace attribforge
