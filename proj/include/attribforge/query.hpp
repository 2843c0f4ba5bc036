#pragma once

// Logical query algebra over a knowledge graph, plus a line-oriented
// concrete syntax for it.
//
// Grammar (whitespace-insensitive; render emits the single-space canonical
// form):
//
//   query      := conjuncts | disjuncts
//   conjuncts  := unit ( '&' unit )*
//   disjuncts  := triple ( '|' triple )+        all disjuncts share one relation
//   unit       := triple | path
//   triple     := '(' id ',' id ',' (id | '?a') ')'
//   path       := '[' id (',' id ',' var)+ ']'  last var must be '?a'
//
// A conjunct whose object is '?a' is an answer branch; a conjunct with no
// variables is a ground constraint attached to the query. Exactly the
// answer variable '?a' and the ordered anonymous path intermediates
// '?v1', '?v2', ... exist; intermediates are never shared across conjuncts.

#include "attribforge/kg.hpp"
#include "attribforge/types.hpp"

#include <cctype>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace attribforge {

struct ParseError : std::runtime_error {
    std::size_t position;
    ParseError(std::size_t pos, const std::string& what)
        : std::runtime_error("parse error at offset " + std::to_string(pos) + ": " + what),
          position(pos) {}
};

// One answer branch: a hop chain from a ground subject to the answer
// variable. Source data carries single-hop branches; answer-side extension
// of a path query produces a tree whose first branch is the original chain.
struct QueryBranch {
    EntityId subject;
    std::vector<RelationId> relations;  // size >= 1

    auto operator<=>(const QueryBranch&) const = default;
};

struct LogicalQuery {
    std::vector<QueryBranch> branches;  // union: each branch has exactly 1 relation
    bool is_union = false;
    std::vector<Triple> constraints;    // ground conjuncts

    static LogicalQuery single(EntityId subject, RelationId relation) {
        LogicalQuery q;
        q.branches.push_back(QueryBranch{std::move(subject), {std::move(relation)}});
        return q;
    }

    // A 1-relation path is the same thing as a single-triple query.
    static LogicalQuery path(EntityId subject, std::vector<RelationId> relations) {
        LogicalQuery q;
        q.branches.push_back(QueryBranch{std::move(subject), std::move(relations)});
        return q;
    }

    static LogicalQuery tree(std::vector<QueryBranch> branches) {
        LogicalQuery q;
        q.branches = std::move(branches);
        return q;
    }

    static LogicalQuery union_tree(std::vector<EntityId> subjects, const RelationId& relation) {
        LogicalQuery q;
        q.is_union = true;
        for (auto& s : subjects) q.branches.push_back(QueryBranch{std::move(s), {relation}});
        return q;
    }

    std::set<RelationId> relations() const {
        std::set<RelationId> r;
        for (const auto& b : branches) r.insert(b.relations.begin(), b.relations.end());
        for (const auto& c : constraints) r.insert(c.relation);
        return r;
    }

    std::set<EntityId> subjects() const {
        std::set<EntityId> s;
        for (const auto& b : branches) s.insert(b.subject);
        return s;
    }

    auto operator<=>(const LogicalQuery&) const = default;
};

inline QueryShape shape_of(const LogicalQuery& q) {
    if (q.is_union) return QueryShape::UnionTree;
    if (q.branches.size() >= 2) return QueryShape::Tree;
    return q.branches.front().relations.size() == 1 ? QueryShape::Single : QueryShape::Path;
}

// ---------------------------------------------------------------------------
// Rendering

inline std::string render(const LogicalQuery& q) {
    std::ostringstream out;
    int next_var = 1;
    for (std::size_t i = 0; i < q.branches.size(); ++i) {
        const QueryBranch& b = q.branches[i];
        if (i > 0) out << (q.is_union ? " | " : " & ");
        if (b.relations.size() == 1) {
            out << '(' << b.subject << ", " << b.relations[0] << ", ?a)";
        } else {
            out << '[' << b.subject;
            for (std::size_t h = 0; h < b.relations.size(); ++h) {
                out << ", " << b.relations[h] << ", ";
                if (h + 1 == b.relations.size())
                    out << "?a";
                else
                    out << "?v" << next_var++;
            }
            out << ']';
        }
    }
    for (const Triple& c : q.constraints)
        out << " & (" << c.subject << ", " << c.relation << ", " << c.object << ')';
    return out.str();
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

struct Token {
    enum Kind { Id, Var, LParen, RParen, LBracket, RBracket, Comma, Amp, Pipe, End } kind;
    std::string text;
    std::size_t pos;
};

inline std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    auto is_symbol = [](char c) {
        return c == '(' || c == ')' || c == '[' || c == ']' || c == ',' || c == '&' || c == '|';
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (is_symbol(c)) {
            Token::Kind k = c == '(' ? Token::LParen
                          : c == ')' ? Token::RParen
                          : c == '[' ? Token::LBracket
                          : c == ']' ? Token::RBracket
                          : c == ',' ? Token::Comma
                          : c == '&' ? Token::Amp
                                     : Token::Pipe;
            tokens.push_back({k, std::string(1, c), i});
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               !is_symbol(text[i]))
            ++i;
        std::string word = text.substr(start, i - start);
        tokens.push_back({word.front() == '?' ? Token::Var : Token::Id, word, start});
    }
    tokens.push_back({Token::End, "", text.size()});
    return tokens;
}

// A parsed conjunct/disjunct before classification.
struct ParsedUnit {
    bool from_path = false;   // written in [...] syntax
    bool has_answer = false;  // references ?a
    EntityId subject;
    std::vector<RelationId> relations;
    EntityId ground_object;   // when !has_answer
    std::size_t pos;
};

class Parser {
public:
    explicit Parser(const std::string& text) : tokens_(tokenize(text)) {}

    LogicalQuery parse() {
        std::vector<ParsedUnit> units;
        units.push_back(parse_unit());
        bool is_union = false;
        bool first_connector = true;
        while (peek().kind != Token::End) {
            const Token& t = peek();
            if (t.kind != Token::Amp && t.kind != Token::Pipe)
                throw ParseError(t.pos, "expected '&', '|' or end of query");
            bool pipe = t.kind == Token::Pipe;
            if (first_connector) {
                is_union = pipe;
                first_connector = false;
            } else if (pipe != is_union) {
                throw ParseError(t.pos, "cannot mix '&' and '|' in one query");
            }
            advance();
            units.push_back(parse_unit());
        }
        return assemble(units, is_union);
    }

private:
    const Token& peek() const { return tokens_[cursor_]; }
    const Token& advance() { return tokens_[cursor_++]; }

    const Token& expect(Token::Kind k, const char* what) {
        if (peek().kind != k) throw ParseError(peek().pos, std::string("expected ") + what);
        return advance();
    }

    ParsedUnit parse_unit() {
        if (peek().kind == Token::LParen) return parse_triple();
        if (peek().kind == Token::LBracket) return parse_path();
        throw ParseError(peek().pos, "expected '(' or '['");
    }

    ParsedUnit parse_triple() {
        ParsedUnit u;
        u.pos = peek().pos;
        expect(Token::LParen, "'('");
        const Token& subj = advance();
        if (subj.kind != Token::Id)
            throw ParseError(subj.pos, "triple subject must be a ground identifier");
        u.subject = subj.text;
        expect(Token::Comma, "','");
        const Token& rel = advance();
        if (rel.kind != Token::Id) throw ParseError(rel.pos, "relation must be an identifier");
        u.relations.push_back(rel.text);
        expect(Token::Comma, "','");
        const Token& obj = advance();
        if (obj.kind == Token::Var) {
            if (obj.text != "?a")
                throw ParseError(obj.pos, "only the answer variable ?a may appear as triple object");
            u.has_answer = true;
        } else if (obj.kind == Token::Id) {
            u.ground_object = obj.text;
        } else {
            throw ParseError(obj.pos, "expected identifier or ?a");
        }
        expect(Token::RParen, "')'");
        return u;
    }

    ParsedUnit parse_path() {
        ParsedUnit u;
        u.pos = peek().pos;
        u.from_path = true;
        u.has_answer = true;
        expect(Token::LBracket, "'['");
        const Token& subj = advance();
        if (subj.kind != Token::Id)
            throw ParseError(subj.pos, "path subject must be a ground identifier");
        u.subject = subj.text;
        bool closed = false;
        while (!closed) {
            expect(Token::Comma, "','");
            const Token& rel = advance();
            if (rel.kind != Token::Id) throw ParseError(rel.pos, "relation must be an identifier");
            u.relations.push_back(rel.text);
            expect(Token::Comma, "','");
            const Token& var = advance();
            if (var.kind != Token::Var)
                throw ParseError(var.pos, "path positions between relations must be variables");
            if (var.text == "?a") {
                expect(Token::RBracket, "']'");
                closed = true;
            } else if (peek().kind == Token::RBracket) {
                throw ParseError(var.pos, "path must end at the answer variable ?a");
            }
        }
        return u;
    }

    LogicalQuery assemble(const std::vector<ParsedUnit>& units, bool is_union) const {
        if (is_union) {
            std::vector<EntityId> subjects;
            const RelationId* relation = nullptr;
            for (const ParsedUnit& u : units) {
                if (u.from_path)
                    throw ParseError(u.pos, "union disjuncts must be single triples");
                if (!u.has_answer)
                    throw ParseError(u.pos, "union disjunct lacks the answer variable ?a");
                if (relation != nullptr && u.relations[0] != *relation)
                    throw ParseError(u.pos, "union disjuncts must share one relation");
                relation = &u.relations[0];
                subjects.push_back(u.subject);
            }
            return LogicalQuery::union_tree(std::move(subjects), *relation);
        }

        LogicalQuery q;
        for (const ParsedUnit& u : units) {
            if (u.has_answer)
                q.branches.push_back(QueryBranch{u.subject, u.relations});
            else
                q.constraints.push_back(Triple{u.subject, u.relations[0], u.ground_object});
        }
        if (q.branches.empty())
            throw ParseError(units.front().pos, "answer variable ?a absent from query");
        return q;
    }

    std::vector<Token> tokens_;
    std::size_t cursor_ = 0;
};

} // namespace detail

inline LogicalQuery parse_logical_form(const std::string& text) {
    return detail::Parser(text).parse();
}

// ---------------------------------------------------------------------------
// Effective hop count

// Path hops routed through an intermediate that only ever binds to compound
// value nodes carry no standalone fact; such a hop merges with its successor
// and the pair counts as one. Defined for single-triple and path queries.
inline int effective_hops(const LogicalQuery& q, const KnowledgeGraph& kg) {
    QueryShape shape = shape_of(q);
    if (shape != QueryShape::Single && shape != QueryShape::Path)
        throw std::invalid_argument("effective_hops is defined for single-triple and path queries");
    const QueryBranch& b = q.branches.front();
    const std::size_t n = b.relations.size();
    if (n == 1) return 1;

    // forward[i]: entities reachable at position i from the subject
    std::vector<std::set<EntityId>> forward(n + 1);
    forward[0].insert(b.subject);
    for (std::size_t h = 0; h < n; ++h)
        for (const EntityId& e : forward[h])
            for (const Triple& t : kg.neighbors(e, Direction::Outgoing))
                if (t.relation == b.relations[h]) forward[h + 1].insert(t.object);

    // reach[i]: entities at position i from which the chain tail can complete
    std::vector<std::set<EntityId>> reach(n + 1);
    reach[n] = forward[n];
    for (std::size_t h = n; h-- > 0;)
        for (const EntityId& e : forward[h])
            for (const Triple& t : kg.neighbors(e, Direction::Outgoing))
                if (t.relation == b.relations[h] && reach[h + 1].count(t.object) > 0)
                    reach[h].insert(e);

    int collapsed = 0;
    for (std::size_t i = 1; i < n; ++i) {
        std::set<EntityId> bound;
        for (const EntityId& e : forward[i])
            if (reach[i].count(e) > 0) bound.insert(e);
        if (bound.empty()) continue;
        bool all_cvt = true;
        for (const EntityId& e : bound)
            if (!kg.is_cvt(e)) {
                all_cvt = false;
                break;
            }
        if (all_cvt) ++collapsed;
    }
    return static_cast<int>(n) - collapsed;
}

} // namespace attribforge
