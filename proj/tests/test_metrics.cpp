#include "doctest.h"

#include <random>

#include "slparse/metrics.hpp"
#include "slparse/treebank_io.hpp"
#include "support/generators.hpp"

using namespace slparse;

namespace {

ConstTree tree_of(const char* text) { return read_bracketed(text)[0]; }

const char* kExampleBrackets =
    "(S (NP (N He)) (VP (V has) (NP (J good) (N control))) (. .))";

}  // namespace

TEST_CASE("identical trees score 1.0") {
    const std::vector<ConstTree> gold = {tree_of(kExampleBrackets)};
    const ScoreReport report = bracket_f1(gold, gold, EvalParams::none());
    CHECK(report.constituency->precision == 1.0);
    CHECK(report.constituency->recall == 1.0);
    CHECK(report.constituency->f1 == 1.0);
    CHECK(report.constituency->exact_match == 1.0);
}

TEST_CASE("hand-counted span mismatch") {
    // prediction flattens the inner NP under S
    const std::vector<ConstTree> gold = {tree_of(kExampleBrackets)};
    const std::vector<ConstTree> pred = {tree_of(
        "(S (NP (N He)) (VP (V has) (J good) (N control)) (. .))")};
    const ScoreReport report = bracket_f1(gold, pred, EvalParams::none());
    // gold spans: S(1,5) NP(1,1) VP(2,4) NP(3,4); pred lacks NP(3,4)
    CHECK(report.constituency->gold_spans == 4);
    CHECK(report.constituency->pred_spans == 3);
    CHECK(report.constituency->matched == 3);
    CHECK(report.constituency->precision == doctest::Approx(1.0));
    CHECK(report.constituency->recall == doctest::Approx(0.75));
    CHECK(report.constituency->f1 == doctest::Approx(6.0 / 7.0));
    CHECK(report.constituency->exact_match == 0.0);
}

TEST_CASE("delete_pos reindexes spans without breaking identity") {
    EvalParams params;
    params.delete_pos = {"."};
    const std::vector<ConstTree> gold = {tree_of(kExampleBrackets)};
    const ScoreReport report = bracket_f1(gold, gold, params);
    CHECK(report.constituency->f1 == 1.0);
    // "." removed: S now spans (1,4)
    const auto spans = extract_spans(gold[0], params);
    REQUIRE(!spans.empty());
    bool found = false;
    for (const LabeledSpan& s : spans)
        if (s.label == "S" && s.start == 1 && s.end == 4) found = true;
    CHECK(found);
}

TEST_CASE("delete_labels promotes children") {
    EvalParams params;
    params.delete_labels = {"TOP"};
    BracketReadOptions keep;
    keep.strip_wrapper = false;
    const ConstTree wrapped =
        read_bracketed("(TOP (S (N a) (N b)))", keep)[0];
    const auto spans = extract_spans(wrapped, params);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0] == LabeledSpan{"S", 1, 2});
}

TEST_CASE("equivalent labels are canonicalized") {
    EvalParams params;
    params.equivalent_labels = {{"PRT", "ADVP"}};
    const std::vector<ConstTree> gold = {tree_of("(S (ADVP (R up)) (V go))")};
    const std::vector<ConstTree> pred = {tree_of("(S (PRT (R up)) (V go))")};
    const ScoreReport report = bracket_f1(gold, pred, params);
    CHECK(report.constituency->f1 == 1.0);
}

TEST_CASE("token mismatch after filtering skips the sentence") {
    const std::vector<ConstTree> gold = {tree_of("(S (N a) (N b))"),
                                         tree_of("(S (N a))")};
    const std::vector<ConstTree> pred = {tree_of("(S (N a) (N c))"),
                                         tree_of("(S (N a))")};
    const ScoreReport report = bracket_f1(gold, pred, EvalParams::none());
    CHECK(report.constituency->skipped == 1);
    CHECK(report.constituency->f1 == 1.0);  // remaining sentence is exact
    CHECK_THROWS_AS(bracket_f1(gold, {}, EvalParams::none()),
                    std::invalid_argument);
}

TEST_CASE("duplicate spans follow multiset semantics") {
    // two identical unary brackets over the same token
    BracketReadOptions keep;
    keep.strip_wrapper = false;
    const ConstTree duplicated =
        read_bracketed("(S (NP (NP (N a))) (N b))", keep)[0];
    const ConstTree single = read_bracketed("(S (NP (N a)) (N b))", keep)[0];
    const ScoreReport report =
        bracket_f1({duplicated}, {single}, EvalParams::none());
    // gold has NP(1,1) twice, pred once: only one matches
    CHECK(report.constituency->gold_spans == 3);
    CHECK(report.constituency->pred_spans == 2);
    CHECK(report.constituency->matched == 2);
}

TEST_CASE("span extraction matches the brute-force oracle") {
    std::mt19937_64 rng(47);
    const std::vector<EvalParams> param_sets = {
        EvalParams::none(), EvalParams::collins(), EvalParams::spmrl()};
    testgen::ConstGenOptions small;
    small.max_depth = 5;
    for (int i = 0; i < 3000; ++i) {
        const ConstTree tree = testgen::random_const_tree(rng, small);
        for (const EvalParams& params : param_sets)
            REQUIRE(extract_spans(tree, params) ==
                    testgen::oracle_spans(tree, params));
    }
}

TEST_CASE("uas_las on the example tree") {
    const std::vector<Sentence> sentences = {
        {{"He", "N"}, {"has", "V"}, {"good", "J"}, {"control", "N"},
         {".", "."}}};
    DepTree gold;
    gold.heads = {2, 0, 4, 2, 2};
    gold.rels = {"nsubj", "root", "amod", "dobj", "punct"};

    SUBCASE("identity") {
        const ScoreReport report =
            uas_las({gold}, {gold}, sentences, EvalParams::none());
        CHECK(report.dependency->uas == 1.0);
        CHECK(report.dependency->las == 1.0);
        CHECK(report.dependency->scored_tokens == 5);
    }

    SUBCASE("one wrong head with punctuation excluded") {
        DepTree pred = gold;
        pred.heads[2] = 2;  // head of "good": 4 -> 2
        EvalParams params;
        params.punctuation_pos = {"."};
        const ScoreReport report =
            uas_las({gold}, {pred}, sentences, params);
        CHECK(report.dependency->scored_tokens == 4);
        CHECK(report.dependency->excluded_tokens == 1);
        CHECK(report.dependency->uas == doctest::Approx(0.75));
        CHECK(report.dependency->las == doctest::Approx(0.75));
    }

    SUBCASE("relation-only error splits UAS from LAS") {
        DepTree pred = gold;
        pred.rels[0] = "dobj";
        EvalParams params;
        params.punctuation_pos = {"."};
        const ScoreReport report =
            uas_las({gold}, {pred}, sentences, params);
        CHECK(report.dependency->uas == 1.0);
        CHECK(report.dependency->las == doctest::Approx(0.75));
    }

    SUBCASE("length mismatch is an error") {
        DepTree shorter;
        shorter.heads = {0};
        shorter.rels = {"root"};
        CHECK_THROWS_AS(
            uas_las({gold}, {shorter}, sentences, EvalParams::none()),
            std::invalid_argument);
    }
}

TEST_CASE("harmonic mean") {
    CHECK(harmonic_mean(1.0, 1.0) == 1.0);
    CHECK(harmonic_mean(0.5, 1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(harmonic_mean(0.0, 0.0) == 0.0);
    CHECK(harmonic_mean(0.0, 1.0) == 0.0);
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double a = unit(rng), b = unit(rng);
        const double hm = harmonic_mean(a, b);
        if (a + b > 0) CHECK(hm == doctest::Approx(2 * a * b / (a + b)));
        CHECK(hm <= std::max(a, b) + 1e-12);
    }
}

TEST_CASE("precision never rises when adding a wrong span") {
    // direct consequence of the formula; checked on a concrete corpus
    const std::vector<ConstTree> gold = {tree_of("(S (N a) (N b))")};
    const std::vector<ConstTree> pred_good = {tree_of("(S (N a) (N b))")};
    const std::vector<ConstTree> pred_extra = {
        tree_of("(S (X (N a)) (N b))")};
    const double p_good = bracket_f1(gold, pred_good, EvalParams::none())
                              .constituency->precision;
    const double p_extra = bracket_f1(gold, pred_extra, EvalParams::none())
                               .constituency->precision;
    CHECK(p_extra < p_good);
}

TEST_CASE("built-in parameter sets") {
    const EvalParams collins = EvalParams::collins();
    CHECK(collins.delete_labels.count("TOP") == 1);
    CHECK(collins.delete_pos.count(".") == 1);
    CHECK(collins.delete_pos.count(",") == 1);
    CHECK(collins.punctuation_pos.count(":") == 1);
    CHECK(collins.canonical("PRT") == "ADVP");
    CHECK(collins.canonical("NP") == "NP");

    const EvalParams spmrl = EvalParams::spmrl();
    CHECK(spmrl.delete_labels.count("TOP") == 1);
    CHECK(spmrl.delete_pos.empty());
}

TEST_CASE("parameter file parsing") {
    const EvalParams params = EvalParams::from_file_text(
        "# comment\n"
        "DELETE_LABEL TOP\n"
        "DELETE_POS .\n"
        "EQ_LABEL ADVP PRT\n"
        "\n");
    CHECK(params.delete_labels.count("TOP") == 1);
    CHECK(params.delete_pos.count(".") == 1);
    CHECK(params.punctuation_pos.count(".") == 1);
    CHECK(params.canonical("PRT") == "ADVP");

    CHECK_THROWS_AS(EvalParams::from_file_text("NONSENSE X\n"),
                    std::runtime_error);
    // chained equivalences would break idempotency
    CHECK_THROWS_AS(
        EvalParams::from_file_text("EQ_LABEL A B\nEQ_LABEL B C\n"),
        std::runtime_error);
}

TEST_CASE("report rendering") {
    const std::vector<ConstTree> gold = {tree_of(kExampleBrackets)};
    ScoreReport report = bracket_f1(gold, gold, EvalParams::none());
    CHECK(report.to_text().find("F1=1.0000") != std::string::npos);
    CHECK(report.to_kv().find("const.f1=1.000000") != std::string::npos);
}
