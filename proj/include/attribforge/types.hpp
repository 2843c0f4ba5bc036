#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace attribforge {

using EntityId = std::string;
using RelationId = std::string;
using TypeId = std::string;

// A directed fact. All three fields are non-empty opaque identifiers;
// variables never appear in a stored triple.
struct Triple {
    EntityId subject;
    RelationId relation;
    EntityId object;

    auto operator<=>(const Triple&) const = default;
};

// How a citation set relates to the answer statement it accompanies.
enum class Category { Supportive, Insufficient, Contradictory, Irrelevant };

// Reasoning shape connecting citations to the answer.
enum class ComplexityType { Single, Union, Intersection, Concatenation };

// Structural class of a logical query.
enum class QueryShape { Single, Path, Tree, UnionTree };

// Rewrite applied to a base query before grounding.
enum class ExtensionAction { NoExtension, UnionExtend, IntersectAtSubject, IntersectAtAnswer };

inline const char* to_string(Category c) {
    switch (c) {
        case Category::Supportive: return "supportive";
        case Category::Insufficient: return "insufficient";
        case Category::Contradictory: return "contradictory";
        case Category::Irrelevant: return "irrelevant";
    }
    return "?";
}

inline const char* to_string(ComplexityType c) {
    switch (c) {
        case ComplexityType::Single: return "single";
        case ComplexityType::Union: return "union";
        case ComplexityType::Intersection: return "intersection";
        case ComplexityType::Concatenation: return "concatenation";
    }
    return "?";
}

inline const char* to_string(QueryShape s) {
    switch (s) {
        case QueryShape::Single: return "single";
        case QueryShape::Path: return "path";
        case QueryShape::Tree: return "tree";
        case QueryShape::UnionTree: return "union-tree";
    }
    return "?";
}

inline const char* to_string(ExtensionAction a) {
    switch (a) {
        case ExtensionAction::NoExtension: return "none";
        case ExtensionAction::UnionExtend: return "union";
        case ExtensionAction::IntersectAtSubject: return "intersect_subject";
        case ExtensionAction::IntersectAtAnswer: return "intersect_answer";
    }
    return "?";
}

inline std::optional<Category> category_from_string(const std::string& s) {
    if (s == "supportive") return Category::Supportive;
    if (s == "insufficient") return Category::Insufficient;
    if (s == "contradictory") return Category::Contradictory;
    if (s == "irrelevant") return Category::Irrelevant;
    return std::nullopt;
}

inline std::optional<ComplexityType> complexity_from_string(const std::string& s) {
    if (s == "single") return ComplexityType::Single;
    if (s == "union") return ComplexityType::Union;
    if (s == "intersection") return ComplexityType::Intersection;
    if (s == "concatenation") return ComplexityType::Concatenation;
    return std::nullopt;
}

inline std::optional<ExtensionAction> action_from_string(const std::string& s) {
    if (s == "none") return ExtensionAction::NoExtension;
    if (s == "union") return ExtensionAction::UnionExtend;
    if (s == "intersect_subject") return ExtensionAction::IntersectAtSubject;
    if (s == "intersect_answer") return ExtensionAction::IntersectAtAnswer;
    return std::nullopt;
}

// Parse failure in a line-oriented input file.
struct FileParseError : std::runtime_error {
    std::size_t line;
    FileParseError(std::size_t line_no, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + what), line(line_no) {}
};

} // namespace attribforge
