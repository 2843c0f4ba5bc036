#include "attribforge/eval.hpp"
#include "attribforge/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace attribforge;

namespace {

const std::vector<std::pair<int, std::string>> kCitations = {
    {1, "Alice was born in London."},
    {2, "AcmeCorp is headquartered in London."},
};

std::string sample_prompt(PromptStyle style) {
    return build_prompt("Where was Alice born?", "Alice was born in London.", kCitations, style);
}

} // namespace

TEST_CASE("the four-way instruction prompt lists every category definition") {
    std::string p = sample_prompt(PromptStyle::FourWayInstruction);
    CHECK(p.find("1. Supportive:") != std::string::npos);
    CHECK(p.find("2. Insufficient:") != std::string::npos);
    CHECK(p.find("3. Contradictory:") != std::string::npos);
    CHECK(p.find("4. Irrelevant:") != std::string::npos);
    CHECK(p.find("Question: Where was Alice born?") != std::string::npos);
    CHECK(p.find("Answer: Alice was born in London.") != std::string::npos);
    CHECK(p.find("Reference: [1] Alice was born in London. [2] AcmeCorp is headquartered in "
                 "London.") != std::string::npos);
    CHECK(p.rfind("Relationship Category:") == p.size() - std::string("Relationship Category:").size());
}

TEST_CASE("the premise/hypothesis prompt is the two-field scaffold") {
    std::string p = sample_prompt(PromptStyle::PremiseHypothesis);
    CHECK(p ==
          "premise: Where was Alice born? | Alice was born in London.\n"
          "\n"
          "hypothesis: [1] Alice was born in London. [2] AcmeCorp is headquartered in London.");
}

TEST_CASE("the binary-nli prompt carries the claim/reference/response scaffold") {
    std::string p = sample_prompt(PromptStyle::BinaryNli);
    CHECK(p.find("Verify whether a given reference can support the claim.") != std::string::npos);
    CHECK(p.find("Claim: Where was Alice born? | Alice was born in London.") != std::string::npos);
    CHECK(p.find("Reference: [1]") != std::string::npos);
    CHECK(p.find("Response:") != std::string::npos);
}

TEST_CASE("the default four-way prompt names the four options") {
    std::string p = sample_prompt(PromptStyle::DefaultFourWay);
    CHECK(p.find("Options: Supportive, Insufficient, Contradictory or Irrelevant.") !=
          std::string::npos);
}

TEST_CASE("label extraction: four-way keyword scan") {
    CHECK(extract_label("Relationship Category: Contradictory.", LabelScheme::FourWay) ==
          Category::Contradictory);
    CHECK(extract_label("SUPPORTIVE", LabelScheme::FourWay) == Category::Supportive);
    CHECK(extract_label("I think it is insufficient because...", LabelScheme::FourWay) ==
          Category::Insufficient);
    CHECK(extract_label("totally irrelevant", LabelScheme::FourWay) == Category::Irrelevant);
    CHECK(extract_label("no label here", LabelScheme::FourWay) == std::nullopt);
}

TEST_CASE("label extraction: first match wins and negations are skipped") {
    CHECK(extract_label("not supportive, rather contradictory", LabelScheme::FourWay) ==
          Category::Contradictory);
    CHECK(extract_label("unsupportive", LabelScheme::FourWay) == std::nullopt);
    CHECK(extract_label("insufficient, not supportive", LabelScheme::FourWay) ==
          Category::Insufficient);
}

TEST_CASE("label extraction: binary outputs") {
    CHECK(extract_label("1", LabelScheme::Binary01) == Category::Supportive);
    CHECK(extract_label("0", LabelScheme::Binary01) == Category::Irrelevant);
    CHECK(extract_label("The answer is 0.", LabelScheme::Binary01) == Category::Irrelevant);
    CHECK(extract_label("10", LabelScheme::Binary01) == std::nullopt);
    CHECK(extract_label("maybe", LabelScheme::Binary01) == std::nullopt);
}

TEST_CASE("label extraction: ternary mapping") {
    CHECK(extract_label("Attributable", LabelScheme::Ternary) == Category::Supportive);
    CHECK(extract_label("This is Extrapolatory", LabelScheme::Ternary) == Category::Irrelevant);
    CHECK(extract_label("Contradictory", LabelScheme::Ternary) == Category::Contradictory);
    CHECK(extract_label("Supportive", LabelScheme::Ternary) == std::nullopt);
}

TEST_CASE("echoed category words always extract under the four-way scheme") {
    for (Category c : {Category::Supportive, Category::Insufficient, Category::Contradictory,
                       Category::Irrelevant}) {
        std::string echo = std::string("Relationship Category: ") + to_string(c);
        CHECK(extract_label(echo, LabelScheme::FourWay) == c);
    }
}

TEST_CASE("score: micro-F1 equals accuracy without unparseable predictions") {
    std::vector<Category> gold = {Category::Supportive, Category::Supportive,
                                  Category::Insufficient, Category::Contradictory};
    std::vector<std::optional<Category>> pred = {Category::Supportive, Category::Insufficient,
                                                 Category::Insufficient, Category::Contradictory};
    EvalMetrics m = score(gold, pred);
    CHECK(m.micro_f1 == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("score: identical lists give perfect metrics") {
    std::vector<Category> gold = {Category::Supportive, Category::Insufficient,
                                  Category::Contradictory, Category::Irrelevant};
    std::vector<std::optional<Category>> pred(gold.begin(), gold.end());
    EvalMetrics m = score(gold, pred);
    CHECK(m.micro_f1 == 1.0);
    for (std::size_t c = 0; c < 4; ++c) CHECK(m.per_class[c].f1 == 1.0);
}

TEST_CASE("score: unparseable counts against recall but not precision") {
    std::vector<Category> gold = {Category::Supportive, Category::Insufficient};
    std::vector<std::optional<Category>> pred = {std::nullopt, Category::Insufficient};
    EvalMetrics m = score(gold, pred);
    CHECK(m.micro_f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.confusion.cells[0][4] == 1);
}

TEST_CASE("score rejects mismatched lengths") {
    CHECK_THROWS_AS(score({Category::Supportive}, {}), std::invalid_argument);
}

TEST_CASE("score is permutation-equivariant") {
    std::mt19937 shuffler(123);
    std::vector<Category> gold;
    std::vector<std::optional<Category>> pred;
    Rng rng(55);
    for (int i = 0; i < 64; ++i) {
        gold.push_back(static_cast<Category>(rng.index(4)));
        pred.push_back(rng.index(5) == 4 ? std::optional<Category>{}
                                         : std::optional<Category>{static_cast<Category>(rng.index(4))});
    }
    EvalMetrics before = score(gold, pred);
    std::vector<std::size_t> order(gold.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), shuffler);
    std::vector<Category> gold2;
    std::vector<std::optional<Category>> pred2;
    for (std::size_t i : order) {
        gold2.push_back(gold[i]);
        pred2.push_back(pred[i]);
    }
    EvalMetrics after = score(gold2, pred2);
    CHECK(before.micro_f1 == doctest::Approx(after.micro_f1).epsilon(1e-12));
    for (std::size_t c = 0; c < 4; ++c)
        CHECK(before.per_class[c].f1 == doctest::Approx(after.per_class[c].f1).epsilon(1e-12));
}

TEST_CASE("micro-F1 is 1 exactly when predictions match gold with nothing unparseable") {
    Rng rng(99);
    for (int round = 0; round < 200; ++round) {
        std::vector<Category> gold;
        std::vector<std::optional<Category>> pred;
        std::size_t n = 1 + rng.index(12);
        for (std::size_t i = 0; i < n; ++i) {
            gold.push_back(static_cast<Category>(rng.index(4)));
            if (rng.index(6) == 0)
                pred.push_back(std::nullopt);
            else
                pred.push_back(static_cast<Category>(rng.index(4)));
        }
        EvalMetrics m = score(gold, pred);
        CHECK(m.micro_f1 <= 1.0 + 1e-12);
        bool exact = true;
        for (std::size_t i = 0; i < n; ++i)
            if (!pred[i] || *pred[i] != gold[i]) exact = false;
        CHECK((m.micro_f1 >= 1.0 - 1e-12) == exact);
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK(m.per_class[c].f1 >= 0.0);
            CHECK(m.per_class[c].f1 <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("kappa: perfect, independent, and degenerate agreement") {
    using L = std::string;
    std::vector<L> same = {"X", "Y", "X", "Y"};
    CHECK(cohens_kappa(same, same) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<L> a = {"X", "X", "Y", "Y"};
    std::vector<L> b = {"X", "Y", "X", "Y"};
    CHECK(cohens_kappa(a, b) == doctest::Approx(0.0).epsilon(1e-12));

    std::vector<L> constant = {"X", "X", "X", "X"};
    CHECK(cohens_kappa(constant, constant) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(cohens_kappa(a, std::vector<L>{"X"}), std::invalid_argument);
}

TEST_CASE("kappa is symmetric and bounded by 1") {
    Rng rng(31);
    for (int round = 0; round < 100; ++round) {
        std::size_t n = 2 + rng.index(20);
        std::vector<int> a, b;
        for (std::size_t i = 0; i < n; ++i) {
            a.push_back(static_cast<int>(rng.index(4)));
            b.push_back(static_cast<int>(rng.index(4)));
        }
        double ab = cohens_kappa(a, b);
        double ba = cohens_kappa(b, a);
        CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
        CHECK(ab <= 1.0 + 1e-12);
    }
}

TEST_CASE("pearson on exact and near-linear series") {
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-12));
    // direct product-moment computation: r = 4.7 / sqrt(5 * 4.5)
    CHECK(pearson({1, 2, 3, 4}, {1.1, 1.9, 3.2, 3.8}) ==
          doctest::Approx(4.7 / std::sqrt(22.5)).epsilon(1e-12));
    CHECK_THROWS_AS(pearson({1, 1, 1}, {1, 2, 3}), DegenerateVariance);
    CHECK_THROWS_AS(pearson({1}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(pearson({1, 2}, {1, 2, 3}), std::invalid_argument);
}
