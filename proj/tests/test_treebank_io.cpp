#include "doctest.h"

#include <random>

#include "slparse/treebank_io.hpp"
#include "support/generators.hpp"

using namespace slparse;

namespace {

const char* kExampleBrackets =
    "(S (NP (N He)) (VP (V has) (NP (J good) (N control))) (. .))";

const char* kExampleConll =
    "1\tHe\t_\t_\tN\t_\t2\tnsubj\t_\t_\n"
    "2\thas\t_\t_\tV\t_\t0\troot\t_\t_\n"
    "3\tgood\t_\t_\tJ\t_\t4\tamod\t_\t_\n"
    "4\tcontrol\t_\t_\tN\t_\t2\tdobj\t_\t_\n"
    "5\t.\t_\t_\t.\t_\t2\tpunct\t_\t_\n";

}  // namespace

TEST_CASE("read_bracketed parses the five-token example") {
    const auto trees = read_bracketed(kExampleBrackets);
    REQUIRE(trees.size() == 1);
    const Sentence tokens = trees[0].tokens();
    REQUIRE(tokens.size() == 5);
    CHECK(tokens[0].form == "He");
    CHECK(tokens[0].pos == "N");
    CHECK(tokens[4].form == ".");
    CHECK(trees[0].root.label == "S");
    REQUIRE(trees[0].root.children.size() == 3);
    CHECK(trees[0].root.children[0].label == "NP");
    CHECK(write_bracketed(trees[0]) == kExampleBrackets);
}

TEST_CASE("read_bracketed handles a single-token tree") {
    const auto trees = read_bracketed("(S (N x))");
    REQUIRE(trees.size() == 1);
    CHECK(trees[0].size() == 1);
    CHECK(trees[0].root.label == "S");
    CHECK(trees[0].root.children[0].label == "N");
    CHECK(write_bracketed(trees[0]) == "(S (N x))");
}

TEST_CASE("read_bracketed accepts several trees and multi-line input") {
    const auto trees = read_bracketed("(S (N a)) (S (N b))\n(S (V c)\n)\n");
    CHECK(trees.size() == 3);
}

TEST_CASE("root wrappers strip on read and reappear only when asked") {
    const auto stripped = read_bracketed("( (S (N x)))");
    REQUIRE(stripped.size() == 1);
    CHECK(stripped[0].root.label == "S");

    const auto top = read_bracketed("(TOP (S (N x)))");
    CHECK(top[0].root.label == "S");

    BracketReadOptions keep;
    keep.strip_wrapper = false;
    const auto kept = read_bracketed("( (S (N x)))", keep);
    CHECK(kept[0].root.label == "TOP");  // unlabeled wrapper gets a name

    BracketWriteOptions add;
    add.add_wrapper = true;
    CHECK(write_bracketed(stripped[0], add) == "(TOP (S (N x)))");
}

TEST_CASE("read_bracketed reports malformed input with location") {
    CHECK_THROWS_AS(read_bracketed("(S (N x)"), ParseError);
    CHECK_THROWS_AS(read_bracketed("(S (N x)))"), ParseError);
    CHECK_THROWS_AS(read_bracketed("()"), ParseError);
    CHECK_THROWS_AS(read_bracketed("x (S (N y))"), ParseError);
    CHECK_THROWS_AS(read_bracketed("(S (N x y))"), ParseError);
    try {
        read_bracketed("\n\n(S (N x)");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("bracketed round-trip holds on random trees") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const ConstTree tree = testgen::random_const_tree(rng);
        const auto back = read_bracketed(write_bracketed(tree));
        REQUIRE(back.size() == 1);
        CHECK(back[0] == tree);
    }
}

TEST_CASE("read_conll parses the five-token example") {
    const ConllReadResult result = read_conll(kExampleConll);
    REQUIRE(result.sentences.size() == 1);
    CHECK(result.warnings.empty());
    const ConllSentence& s = result.sentences[0];
    CHECK(s.tokens.size() == 5);
    CHECK(s.tokens[1].form == "has");
    CHECK(s.tokens[1].pos == "V");
    CHECK(s.tree.heads == std::vector<int>{2, 0, 4, 2, 2});
    CHECK(s.tree.rels[0] == "nsubj");
    CHECK(write_conll(s.tokens, s.tree) == kExampleConll);
}

TEST_CASE("read_conll single root token") {
    const ConllReadResult result =
        read_conll("1\tx\t_\t_\tN\t_\t0\troot\t_\t_\n");
    REQUIRE(result.sentences.size() == 1);
    CHECK(result.warnings.empty());
    CHECK(result.sentences[0].tree.heads == std::vector<int>{0});
}

TEST_CASE("read_conll flags structural violations but keeps the tree") {
    // two roots plus a cycle between tokens 3 and 4
    const ConllReadResult result = read_conll(
        "1\ta\t_\t_\tN\t_\t0\troot\t_\t_\n"
        "2\tb\t_\t_\tN\t_\t0\troot\t_\t_\n"
        "3\tc\t_\t_\tN\t_\t4\tdep\t_\t_\n"
        "4\td\t_\t_\tN\t_\t3\tdep\t_\t_\n");
    REQUIRE(result.sentences.size() == 1);
    CHECK(result.sentences[0].tree.heads == std::vector<int>{0, 0, 4, 3});
    CHECK(!result.warnings.empty());
}

TEST_CASE("read_conll rejects malformed numbers and ranges") {
    CHECK_THROWS_AS(read_conll("x\ta\t_\t_\tN\t_\t0\troot\t_\t_\n"),
                    ParseError);
    CHECK_THROWS_AS(read_conll("1\ta\t_\t_\tN\t_\tz\troot\t_\t_\n"),
                    ParseError);
    CHECK_THROWS_AS(read_conll("1\ta\t_\t_\tN\t_\t7\troot\t_\t_\n"),
                    ParseError);
    CHECK_THROWS_AS(read_conll("2\ta\t_\t_\tN\t_\t0\troot\t_\t_\n"),
                    ParseError);
}

TEST_CASE("conll round-trip holds on random single-rooted trees") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const auto [sentence, tree] = testgen::random_dep_sentence(rng, 15);
        const std::string text = write_conll(sentence, tree);
        const ConllReadResult back = read_conll(text);
        REQUIRE(back.sentences.size() == 1);
        CHECK(back.warnings.empty());
        CHECK(back.sentences[0].tokens == sentence);
        CHECK(back.sentences[0].tree == tree);
    }
}

TEST_CASE("custom conll column positions") {
    ConllColumns cols;
    cols.id = 1;
    cols.form = 2;
    cols.pos = 4;
    cols.head = 5;
    cols.deprel = 6;
    const ConllReadResult result =
        read_conll("1\tx\t_\tN\t0\troot\n", cols);
    REQUIRE(result.sentences.size() == 1);
    CHECK(result.sentences[0].tokens[0].pos == "N");
    const std::string out =
        write_conll(result.sentences[0].tokens, result.sentences[0].tree, cols);
    CHECK(read_conll(out, cols).sentences[0].tree ==
          result.sentences[0].tree);
}

TEST_CASE("label TSV basics") {
    const auto sentences = read_labels("He\tN\t1@S@NP\n\n");
    REQUIRE(sentences.size() == 1);
    CHECK(sentences[0].tokens[0].form == "He");
    CHECK(sentences[0].columns() == 1);
    CHECK(sentences[0].labels[0][0] == "1@S@NP");

    CHECK(read_labels("").empty());
    CHECK_THROWS_AS(read_labels("He\tN\n"), ParseError);
    // ragged second row
    CHECK_THROWS_AS(read_labels("He\tN\ta\tb\nhas\tV\ta\n"), ParseError);
}

TEST_CASE("label TSV round-trip on random files") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> n_sent(1, 8);
    std::uniform_int_distribution<int> n_tok(1, 10);
    std::uniform_int_distribution<int> n_col(1, 4);
    for (int iter = 0; iter < 300; ++iter) {
        std::vector<LabeledSentence> file;
        const int cols = n_col(rng);
        const int sentences = n_sent(rng);
        for (int s = 0; s < sentences; ++s) {
            LabeledSentence ls;
            ls.labels.resize(cols);
            const int tokens = n_tok(rng);
            for (int i = 0; i < tokens; ++i) {
                ls.tokens.push_back(Token{testgen::random_form(rng),
                                          testgen::random_form(rng)});
                for (int c = 0; c < cols; ++c)
                    ls.labels[c].push_back(testgen::random_form(rng));
            }
            file.push_back(std::move(ls));
        }
        CHECK(read_labels(write_labels(file)) == file);
    }
}

TEST_CASE("readers accept CRLF") {
    const auto sentences = read_labels("He\tN\tx\r\n\r\n");
    REQUIRE(sentences.size() == 1);
    CHECK(sentences[0].labels[0][0] == "x");
    const ConllReadResult conll =
        read_conll("1\tx\t_\t_\tN\t_\t0\troot\t_\t_\r\n");
    CHECK(conll.sentences.size() == 1);
}

TEST_CASE("token counts are never silently dropped") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 200; ++i) {
        const auto [sentence, tree] = testgen::random_dep_sentence(rng, 12);
        const std::string text = write_conll(sentence, tree);
        std::size_t rows = 0;
        for (char c : text)
            if (c == '\n') ++rows;
        const ConllReadResult back = read_conll(text);
        CHECK(back.sentences[0].tokens.size() == rows);
    }
}

TEST_CASE("read_tagged_sentences takes bare form/pos files") {
    const auto sentences = read_tagged_sentences("He\tN\nhas\tV\n\nx\tJ\n");
    REQUIRE(sentences.size() == 2);
    CHECK(sentences[0].size() == 2);
    CHECK(sentences[1][0].pos == "J");
}
