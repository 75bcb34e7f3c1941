// End-to-end checks of the command-line surface. The binary path comes
// from the SLPARSE_CLI environment variable (set by ctest).
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "slparse/treebank_io.hpp"
#include "support/data_helpers.hpp"
#include "support/generators.hpp"
#include "support/synthetic_grammar.hpp"

namespace {

namespace fs = std::filesystem;
using namespace slparse;

std::string cli_path() {
    const char* env = std::getenv("SLPARSE_CLI");
    REQUIRE_MESSAGE(env != nullptr, "SLPARSE_CLI not set");
    return env;
}

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = cli_path() + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buffer[4096];
    while (fgets(buffer, sizeof(buffer), pipe)) result.output += buffer;
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("slparse_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

const char* kExampleBrackets =
    "(S (NP (N He)) (VP (V has) (NP (J good) (N control))) (. .))\n";

}  // namespace

TEST_CASE("cli encode emits the documented three-task columns") {
    TempDir tmp;
    write_file(tmp.file("in.brackets"), kExampleBrackets);
    const CliResult r = run_cli("encode --paradigm const --input " +
                                tmp.file("in.brackets") + " --output " +
                                tmp.file("out.tsv") + " --factorization 3task");
    REQUIRE(r.exit_code == 0);
    const std::string tsv = read_file(tmp.file("out.tsv"));
    CHECK(tsv.rfind("He\tN\t1\tS\tNP\n", 0) == 0);
    // stats line on stderr mentions the vocabulary sizes
    CHECK(r.output.find("column") != std::string::npos);
    // manifest written next to the output
    const std::string manifest =
        read_file(tmp.file("out.tsv") + ".run.json");
    const nlohmann::json j = nlohmann::json::parse(manifest);
    CHECK(j.at("command") == "encode");
    CHECK(j.at("timing").at("wall_seconds").get<double>() >= 0.0);
}

TEST_CASE("cli encode/decode round-trips a treebank byte-identically") {
    TempDir tmp;
    std::mt19937_64 rng(5005);
    std::string original;
    for (int i = 0; i < 50; ++i)
        original += write_bracketed(testgen::random_const_tree(rng)) + "\n";
    write_file(tmp.file("in.brackets"), original);

    REQUIRE(run_cli("encode --paradigm const --input " +
                    tmp.file("in.brackets") + " --output " + tmp.file("l.tsv"))
                .exit_code == 0);
    REQUIRE(run_cli("decode --paradigm const --input " + tmp.file("l.tsv") +
                    " --output " + tmp.file("back.brackets"))
                .exit_code == 0);
    CHECK(read_file(tmp.file("back.brackets")) == original);
}

TEST_CASE("cli dependency pipeline round-trips CoNLL") {
    TempDir tmp;
    std::mt19937_64 rng(6006);
    std::vector<ConllSentence> sentences;
    for (int i = 0; i < 40; ++i) {
        auto [tokens, tree] = testgen::random_dep_sentence(rng, 12);
        sentences.push_back(ConllSentence{std::move(tokens), std::move(tree)});
    }
    const std::string original = write_conll_file(sentences);
    write_file(tmp.file("in.conll"), original);

    REQUIRE(run_cli("encode --paradigm dep --input " + tmp.file("in.conll") +
                    " --output " + tmp.file("l.tsv") +
                    " --factorization 2task")
                .exit_code == 0);
    REQUIRE(run_cli("decode --paradigm dep --input " + tmp.file("l.tsv") +
                    " --output " + tmp.file("back.conll"))
                .exit_code == 0);
    CHECK(read_file(tmp.file("back.conll")) == original);
}

TEST_CASE("cli empty input gives empty output and exit 0") {
    TempDir tmp;
    write_file(tmp.file("empty.brackets"), "");
    const CliResult r = run_cli("encode --paradigm const --input " +
                                tmp.file("empty.brackets") + " --output " +
                                tmp.file("out.tsv"));
    CHECK(r.exit_code == 0);
    CHECK(read_file(tmp.file("out.tsv")).empty());
}

TEST_CASE("cli exit codes: 1 for usage, 2 for data") {
    TempDir tmp;
    write_file(tmp.file("in.brackets"), kExampleBrackets);
    // unknown paradigm -> usage error
    CHECK(run_cli("encode --paradigm nope --input " + tmp.file("in.brackets") +
                  " --output " + tmp.file("o.tsv"))
              .exit_code == 1);
    // constituency has no 2task factorization -> usage error
    CHECK(run_cli("encode --paradigm const --factorization 2task --input " +
                  tmp.file("in.brackets") + " --output " + tmp.file("o.tsv"))
              .exit_code == 1);
    // malformed treebank -> data error
    write_file(tmp.file("bad.brackets"), "(S (N x)");
    CHECK(run_cli("encode --paradigm const --input " +
                  tmp.file("bad.brackets") + " --output " + tmp.file("o.tsv"))
              .exit_code == 2);
    // missing file -> data error
    CHECK(run_cli("encode --paradigm const --input " +
                  tmp.file("missing.brackets") + " --output " +
                  tmp.file("o.tsv"))
              .exit_code == 2);
    // missing required flag -> usage error
    CHECK(run_cli("encode --paradigm const").exit_code == 1);
}

TEST_CASE("cli eval scores constituency and dependency files") {
    TempDir tmp;
    write_file(tmp.file("gold.brackets"), kExampleBrackets);
    write_file(
        tmp.file("pred.brackets"),
        "(S (NP (N He)) (VP (V has) (J good) (N control)) (. .))\n");
    const CliResult r = run_cli(
        "eval --paradigm const --gold " + tmp.file("gold.brackets") +
        " --pred " + tmp.file("pred.brackets") + " --params none --out " +
        tmp.file("report.kv"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("F1=0.857") != std::string::npos);
    CHECK(read_file(tmp.file("report.kv")).find("const.f1=0.857") !=
          std::string::npos);

    // collins parameters drop the punctuation leaf
    const CliResult collins = run_cli(
        "eval --paradigm const --gold " + tmp.file("gold.brackets") +
        " --pred " + tmp.file("gold.brackets") + " --params collins");
    REQUIRE(collins.exit_code == 0);
    CHECK(collins.output.find("F1=1.0000") != std::string::npos);

    // dependency side
    std::string conll;
    {
        DepTree tree;
        tree.heads = {2, 0, 4, 2, 2};
        tree.rels = {"nsubj", "root", "amod", "dobj", "punct"};
        const Sentence tokens = {{"He", "N"},
                                 {"has", "V"},
                                 {"good", "J"},
                                 {"control", "N"},
                                 {".", "."}};
        conll = write_conll(tokens, tree) + "\n";
    }
    write_file(tmp.file("gold.conll"), conll);
    const CliResult dep =
        run_cli("eval --paradigm dep --gold " + tmp.file("gold.conll") +
                " --pred " + tmp.file("gold.conll") + " --params none");
    REQUIRE(dep.exit_code == 0);
    CHECK(dep.output.find("UAS=1.0000") != std::string::npos);
}

TEST_CASE("cli stats reports corpus counts") {
    TempDir tmp;
    write_file(tmp.file("in.brackets"), kExampleBrackets);
    const CliResult r = run_cli("stats --format bracketed --input " +
                                tmp.file("in.brackets"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("sentences=1") != std::string::npos);
    CHECK(r.output.find("tokens=5") != std::string::npos);
}

TEST_CASE("cli train, predict and bench work end to end") {
    TempDir tmp;
    const testgen::SyntheticCorpus corpus =
        testgen::make_synthetic_corpus(7007, 60, 10);

    write_file(tmp.file("train.const.tsv"),
               write_labels(testgen::const_labeled(corpus.train, true)));
    write_file(tmp.file("dev.const.tsv"),
               write_labels(testgen::const_labeled(corpus.dev, true)));
    write_file(tmp.file("train.dep.tsv"),
               write_labels(testgen::dep_labeled(corpus.train,
                                                 DepFactorMode::two_task)));
    write_file(tmp.file("dev.dep.tsv"),
               write_labels(testgen::dep_labeled(corpus.dev,
                                                 DepFactorMode::two_task)));
    write_file(tmp.file("config.txt"),
               "learning_rate=0.05\nword_emb_dim=16\nchar_emb_dim=4\n"
               "char_hidden=8\nself_emb_dim=6\nword_hidden=32\nlayers=1\n"
               "dropout=0\nmax_epochs=12\npatience=6\nseed=3\n");

    const CliResult trained = run_cli(
        "train --kind dmtl --paradigm both --train-const " +
        tmp.file("train.const.tsv") + " --train-dep " +
        tmp.file("train.dep.tsv") + " --dev-const " +
        tmp.file("dev.const.tsv") + " --dev-dep " + tmp.file("dev.dep.tsv") +
        " --config " + tmp.file("config.txt") + " --model-out " +
        tmp.file("model.bin"));
    REQUIRE_MESSAGE(trained.exit_code == 0, trained.output);
    CHECK(trained.output.find("best epoch") != std::string::npos);
    CHECK(fs::exists(tmp.file("model.bin")));
    CHECK(fs::exists(tmp.file("model.bin.log")));
    CHECK(fs::exists(tmp.file("model.bin.run.json")));

    // prediction input: bare form/pos pairs
    std::string input;
    for (const auto& s : corpus.dev) {
        for (const Token& t : s.tokens) input += t.form + "\t" + t.pos + "\n";
        input += "\n";
    }
    write_file(tmp.file("input.tsv"), input);

    const CliResult predicted = run_cli(
        "predict --model " + tmp.file("model.bin") + " --input " +
        tmp.file("input.tsv") + " --out-const " + tmp.file("pred.brackets") +
        " --out-dep " + tmp.file("pred.conll") + " --out-labels " +
        tmp.file("pred.tsv"));
    REQUIRE_MESSAGE(predicted.exit_code == 0, predicted.output);
    // one pass yields both a bracketed file and a CoNLL file
    const auto pred_trees = read_bracketed(read_file(tmp.file("pred.brackets")));
    CHECK(pred_trees.size() == corpus.dev.size());
    const auto pred_conll = read_conll(read_file(tmp.file("pred.conll")));
    CHECK(pred_conll.sentences.size() == corpus.dev.size());
    CHECK(pred_conll.warnings.empty());  // decoded trees are always valid
    const auto pred_labels = read_labels(read_file(tmp.file("pred.tsv")));
    CHECK(pred_labels.size() == corpus.dev.size());
    CHECK(pred_labels[0].columns() == 5);

    // bench on a one-sentence input writes a manifest with timing fields
    write_file(tmp.file("one.tsv"), "the\tD\ndog\tN\nwalks\tV\n\n");
    const CliResult benched =
        run_cli("bench --model " + tmp.file("model.bin") + " --input " +
                tmp.file("one.tsv") + " --manifest " + tmp.file("bench.json"));
    REQUIRE_MESSAGE(benched.exit_code == 0, benched.output);
    CHECK(benched.output.find("sentences_per_second=") != std::string::npos);
    const nlohmann::json manifest =
        nlohmann::json::parse(read_file(tmp.file("bench.json")));
    CHECK(manifest.at("command") == "bench");
    CHECK(manifest.at("timing").at("sentences_per_second").get<double>() >
          0.0);

    // model without constituency tasks rejects --out-const
    const CliResult wrong = run_cli(
        "predict --model " + tmp.file("model.bin") + " --input " +
        tmp.file("input.tsv"));
    CHECK(wrong.exit_code == 1);  // no output requested
}

TEST_CASE("cli bench throughput is positive and stable across runs") {
    TempDir tmp;
    const testgen::SyntheticCorpus corpus =
        testgen::make_synthetic_corpus(8008, 40, 5);
    write_file(tmp.file("train.tsv"),
               write_labels(testgen::dep_labeled(corpus.train,
                                                 DepFactorMode::two_task)));
    write_file(tmp.file("dev.tsv"),
               write_labels(testgen::dep_labeled(corpus.dev,
                                                 DepFactorMode::two_task)));
    write_file(tmp.file("config.txt"),
               "learning_rate=0.05\nword_emb_dim=16\nchar_emb_dim=4\n"
               "char_hidden=8\nself_emb_dim=6\nword_hidden=32\nlayers=1\n"
               "dropout=0\nmax_epochs=2\nseed=4\n");
    REQUIRE(run_cli("train --kind smtl --paradigm dep --train-dep " +
                    tmp.file("train.tsv") + " --dev-dep " + tmp.file("dev.tsv") +
                    " --config " + tmp.file("config.txt") + " --model-out " +
                    tmp.file("m.bin"))
                .exit_code == 0);

    // sizable fixed input so per-run wall time dominates timer noise
    std::string input;
    for (int rep = 0; rep < 40; ++rep)
        for (const auto& s : corpus.train) {
            for (const Token& t : s.tokens)
                input += t.form + "\t" + t.pos + "\n";
            input += "\n";
        }
    write_file(tmp.file("bench_in.tsv"), input);

    auto stable = [&]() -> bool {
        const CliResult r = run_cli("bench --model " + tmp.file("m.bin") +
                                    " --input " + tmp.file("bench_in.tsv") +
                                    " --runs 3");
        if (r.exit_code != 0) return false;
        std::vector<double> sps;
        std::istringstream lines(r.output);
        for (std::string line; std::getline(lines, line);) {
            double value = 0.0;
            int run_no = 0;
            if (std::sscanf(line.c_str(), "run %d: %lf", &run_no, &value) == 2)
                sps.push_back(value);
        }
        if (sps.size() != 3) return false;
        const double mean = (sps[0] + sps[1] + sps[2]) / 3.0;
        if (mean <= 0) return false;
        for (double v : sps)
            if (std::abs(v - mean) > 0.2 * mean) return false;
        return true;
    };
    // one retry shields against a scheduler hiccup on shared machines
    CHECK((stable() || stable()));
}

TEST_CASE("cli decode reports repairs on corrupt labels") {
    TempDir tmp;
    write_file(tmp.file("labels.tsv"),
               "a\tN\t9@S@NONE\nb\tN\t-9@S@NONE\nc\tN\tNONE@NONE@NONE\n\n");
    const CliResult r =
        run_cli("decode --paradigm const --input " + tmp.file("labels.tsv") +
                " --output " + tmp.file("out.brackets"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("clamped_levels=2") != std::string::npos);
    const auto trees = read_bracketed(read_file(tmp.file("out.brackets")));
    REQUIRE(trees.size() == 1);
    CHECK(trees[0].size() == 3);
}
