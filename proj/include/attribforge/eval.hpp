#pragma once

// Evaluator-side harness: prompt construction for attribution evaluators,
// label extraction from raw model output, and the scoring metrics
// (per-class precision/recall/F1, micro-F1, Cohen's kappa, Pearson).

#include "attribforge/types.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace attribforge {

enum class PromptStyle { FourWayInstruction, PremiseHypothesis, BinaryNli, DefaultFourWay };
enum class LabelScheme { FourWay, Binary01, Ternary };

inline const char* to_string(PromptStyle s) {
    switch (s) {
        case PromptStyle::FourWayInstruction: return "four-way";
        case PromptStyle::PremiseHypothesis: return "premise-hypothesis";
        case PromptStyle::BinaryNli: return "binary-nli";
        case PromptStyle::DefaultFourWay: return "default-four-way";
    }
    return "?";
}

inline std::optional<PromptStyle> prompt_style_from_string(const std::string& s) {
    if (s == "four-way") return PromptStyle::FourWayInstruction;
    if (s == "premise-hypothesis") return PromptStyle::PremiseHypothesis;
    if (s == "binary-nli") return PromptStyle::BinaryNli;
    if (s == "default-four-way") return PromptStyle::DefaultFourWay;
    return std::nullopt;
}

inline std::optional<LabelScheme> label_scheme_from_string(const std::string& s) {
    if (s == "four-way") return LabelScheme::FourWay;
    if (s == "binary") return LabelScheme::Binary01;
    if (s == "ternary") return LabelScheme::Ternary;
    return std::nullopt;
}

// Raw prompt templates. Placeholders: {question}, {answer statement},
// {citation}, and the combined claim {question|answer statement}.
inline const char* prompt_template(PromptStyle style) {
    switch (style) {
        case PromptStyle::FourWayInstruction:
            return
                "Instruction: Your task is to evaluate the relationship between a provided "
                "citation and the answer to a specific question. There are four possible types of "
                "relationships:\n"
                "\n"
                "1. Supportive: Choose this if the citation directly confirms or is fully in "
                "alignment with the answer, providing all necessary information to substantiate "
                "it.\n"
                "\n"
                "2. Insufficient: Choose this when the citation provides only partial backing for "
                "the answer, lacking some essential details or evidence needed for full support.\n"
                "\n"
                "3. Contradictory: Choose this option if the citation is consistent with the "
                "intent of the question but directly opposes or contradicts the answer.\n"
                "\n"
                "4. Irrelevant: Select this option if the citation does not match the intent of "
                "the question and contains information that is not useful for answering.\n"
                "\n"
                "For each example provided: First, you need to look at the question given and the "
                "answer provided. Then, compare them with the content of the citation. Finally, "
                "select the appropriate relationship category based on whether the citation "
                "supports the answer, is missing information, contradicts itself, or is "
                "irrelevant to the answer.\n"
                "\n"
                "Example:\n"
                "\n"
                "Question: {question}\n"
                "\n"
                "Answer: {answer statement}\n"
                "\n"
                "Reference: {citation}\n"
                "\n"
                "Relationship Category:";
        case PromptStyle::PremiseHypothesis:
            return
                "premise: {question|answer statement}\n"
                "\n"
                "hypothesis: {citation}";
        case PromptStyle::BinaryNli:
            return
                "Below is an instruction that describes a task, paired with an input that "
                "provides further context. Write a response that appropriately completes the "
                "request.\n"
                "\n"
                "Instruction: Verify whether a given reference can support the claim. Options: "
                "Attributable, Extrapolatory or Contradictory.\n"
                "\n"
                "Claim: {question|answer statement}\n"
                "\n"
                "Reference: {citation}\n"
                "\n"
                "Response:";
        case PromptStyle::DefaultFourWay:
            return
                "Below is an instruction that describes a task, paired with an input that "
                "provides further context. Write a response that appropriately completes the "
                "request.\n"
                "\n"
                "Instruction: Verify whether a given reference can support the claim. Options: "
                "Supportive, Insufficient, Contradictory or Irrelevant.\n"
                "\n"
                "Claim: {question|answer statement}\n"
                "\n"
                "Reference: {citation}\n"
                "\n"
                "Response:";
    }
    return "";
}

namespace detail {

inline std::string fill_placeholder(std::string text, const std::string& needle,
                                    const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

} // namespace detail

// Fill a prompt template. Citations are concatenated as "[i] text" in index
// order; the claim field is "<question> | <answer statement>".
inline std::string build_prompt(const std::string& question, const std::string& answer_statement,
                                const std::vector<std::pair<int, std::string>>& citations,
                                PromptStyle style) {
    std::string citation_text;
    for (const auto& [index, text] : citations) {
        if (!citation_text.empty()) citation_text.push_back(' ');
        citation_text += "[" + std::to_string(index) + "] " + text;
    }
    std::string prompt = prompt_template(style);
    prompt = detail::fill_placeholder(prompt, "{question|answer statement}",
                                      question + " | " + answer_statement);
    prompt = detail::fill_placeholder(prompt, "{question}", question);
    prompt = detail::fill_placeholder(prompt, "{answer statement}", answer_statement);
    prompt = detail::fill_placeholder(prompt, "{citation}", citation_text);
    return prompt;
}

// ---------------------------------------------------------------------------
// Label extraction

namespace detail {

inline bool word_boundary_at(const std::string& text, std::size_t pos, std::size_t len) {
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    if (pos > 0 && alnum(text[pos - 1])) return false;
    if (pos + len < text.size() && alnum(text[pos + len])) return false;
    return true;
}

inline bool negated_at(const std::string& lowered, std::size_t pos) {
    // skip spaces before the keyword, then read the preceding word
    std::size_t end = pos;
    while (end > 0 && std::isspace(static_cast<unsigned char>(lowered[end - 1]))) --end;
    std::size_t start = end;
    while (start > 0 && std::isalpha(static_cast<unsigned char>(lowered[start - 1]))) --start;
    return lowered.compare(start, end - start, "not") == 0;
}

struct Keyword {
    const char* word;
    Category category;
    bool negatable;
};

inline const std::vector<Keyword>& keywords_for(LabelScheme scheme) {
    // longest-first so e.g. "contradictory" is tried before shorter words
    static const std::vector<Keyword> four_way = {
        {"contradictory", Category::Contradictory, true},
        {"insufficient", Category::Insufficient, true},
        {"supportive", Category::Supportive, true},
        {"irrelevant", Category::Irrelevant, true},
    };
    static const std::vector<Keyword> ternary = {
        {"extrapolatory", Category::Irrelevant, true},
        {"contradictory", Category::Contradictory, true},
        {"attributable", Category::Supportive, true},
    };
    static const std::vector<Keyword> binary = {
        {"1", Category::Supportive, false},
        {"0", Category::Irrelevant, false},
    };
    switch (scheme) {
        case LabelScheme::FourWay: return four_way;
        case LabelScheme::Ternary: return ternary;
        case LabelScheme::Binary01: return binary;
    }
    return four_way;
}

} // namespace detail

// Case-insensitive scan for the scheme's label vocabulary; the earliest
// non-negated word-boundary match wins. No match -> unparseable (nullopt).
inline std::optional<Category> extract_label(const std::string& model_output, LabelScheme scheme) {
    std::string lowered;
    lowered.reserve(model_output.size());
    for (char c : model_output)
        lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

    const auto& keywords = detail::keywords_for(scheme);
    for (std::size_t pos = 0; pos < lowered.size(); ++pos) {
        for (const auto& kw : keywords) {
            const std::size_t len = std::char_traits<char>::length(kw.word);
            if (lowered.compare(pos, len, kw.word) != 0) continue;
            if (!detail::word_boundary_at(lowered, pos, len)) continue;
            if (kw.negatable && detail::negated_at(lowered, pos)) continue;
            return kw.category;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Metrics

struct DegenerateVariance : std::runtime_error {
    explicit DegenerateVariance(const std::string& what) : std::runtime_error(what) {}
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Gold on rows, prediction on columns; column 4 counts unparseable outputs.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, 5>, 4> cells{};

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& row : cells)
            for (std::size_t c : row) n += c;
        return n;
    }
};

struct EvalMetrics {
    ConfusionMatrix confusion;
    std::array<ClassMetrics, 4> per_class;  // indexed by Category
    double micro_f1 = 0.0;
    std::optional<double> kappa;
    std::optional<double> pearson;
};

// Per-class F1 plus pooled micro-F1. An unparseable prediction counts as a
// prediction absence: it costs recall but not precision.
inline EvalMetrics score(const std::vector<Category>& gold,
                         const std::vector<std::optional<Category>>& pred) {
    if (gold.size() != pred.size())
        throw std::invalid_argument("gold and prediction lists differ in length");
    if (gold.empty()) throw std::invalid_argument("nothing to score");

    EvalMetrics m;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        std::size_t row = static_cast<std::size_t>(gold[i]);
        std::size_t col = pred[i] ? static_cast<std::size_t>(*pred[i]) : 4;
        ++m.confusion.cells[row][col];
    }

    std::size_t pooled_tp = 0;
    std::size_t parseable = 0;
    for (std::size_t c = 0; c < 4; ++c) {
        std::size_t tp = m.confusion.cells[c][c];
        std::size_t fp = 0;
        std::size_t fn = 0;
        for (std::size_t g = 0; g < 4; ++g)
            if (g != c) fp += m.confusion.cells[g][c];
        for (std::size_t p = 0; p < 5; ++p)
            if (p != c) fn += m.confusion.cells[c][p];
        ClassMetrics& cm = m.per_class[c];
        cm.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
        cm.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
        cm.f1 = cm.precision + cm.recall == 0.0
                    ? 0.0
                    : 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall);
        pooled_tp += tp;
    }
    for (const auto& p : pred)
        if (p) ++parseable;

    double micro_p = parseable == 0 ? 0.0 : static_cast<double>(pooled_tp) / parseable;
    double micro_r = static_cast<double>(pooled_tp) / static_cast<double>(gold.size());
    m.micro_f1 = micro_p + micro_r == 0.0 ? 0.0 : 2.0 * micro_p * micro_r / (micro_p + micro_r);
    return m;
}

// Chance-corrected agreement between two label sequences. When expected
// agreement is 1 (both raters constant on the same label), kappa is defined
// as 1 for perfect agreement and 0 otherwise.
template <typename Label>
double cohens_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("label lists differ in length");
    if (a.empty()) throw std::invalid_argument("nothing to compare");

    const double n = static_cast<double>(a.size());
    std::map<Label, std::size_t> count_a, count_b;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++count_a[a[i]];
        ++count_b[b[i]];
        if (a[i] == b[i]) ++agree;
    }
    double p_o = agree / n;
    double p_e = 0.0;
    for (const auto& [label, ca] : count_a) {
        auto it = count_b.find(label);
        if (it != count_b.end()) p_e += (ca / n) * (it->second / n);
    }
    if (std::abs(1.0 - p_e) < 1e-15) return p_o >= 1.0 - 1e-15 ? 1.0 : 0.0;
    return (p_o - p_e) / (1.0 - p_e);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("series differ in length");
    if (x.size() < 2) throw std::invalid_argument("pearson needs at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateVariance("constant series has no correlation");
    return sxy / std::sqrt(sxx * syy);
}

} // namespace attribforge
