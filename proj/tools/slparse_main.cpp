// slparse: treebanks <-> label sequences <-> trained taggers.

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slparse/const_codec.hpp"
#include "slparse/dep_codec.hpp"
#include "slparse/metrics.hpp"
#include "slparse/tagger.hpp"
#include "slparse/treebank_io.hpp"
#include "slparse/version.hpp"

namespace {

using namespace slparse;

// flag combinations we reject before touching any data
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
}

struct Manifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    double sentences_per_second = 0.0;

    // written next to the command's first output unless overridden
    void write(const std::string& explicit_path) const {
        std::string path = explicit_path;
        if (path.empty()) {
            if (outputs.empty()) return;
            path = outputs.front() + ".run.json";
        }
        nlohmann::json j;
        j["command"] = command;
        j["version"] = kVersion;
        j["seed"] = seed;
        j["config"] = config;
        j["inputs"] = inputs;
        j["outputs"] = outputs;
        j["timing"] = {{"wall_seconds", wall_seconds},
                       {"sentences_per_second", sentences_per_second}};
        write_file(path, j.dump(2) + "\n");
    }
};

EvalParams load_eval_params(const std::string& name) {
    if (name == "collins") return EvalParams::collins();
    if (name == "spmrl") return EvalParams::spmrl();
    if (name == "none") return EvalParams::none();
    return EvalParams::from_file_text(read_file(name));
}

DepFactorMode parse_factorization(const std::string& s, Paradigm paradigm) {
    if (s == "single") return DepFactorMode::single;
    if (s == "2task") {
        if (paradigm == Paradigm::constituency)
            throw UsageError("constituency labels factor into 1 or 3 tasks");
        return DepFactorMode::two_task;
    }
    if (s == "3task") return DepFactorMode::three_task;
    throw UsageError("unknown factorization '" + s +
                     "' (expected single|2task|3task)");
}

std::vector<ConstLabel> const_labels_from_columns(
    const LabeledSentence& s, std::size_t sentence_index) {
    std::vector<ConstLabel> labels(s.tokens.size());
    if (s.columns() == 1) {
        for (std::size_t i = 0; i < s.tokens.size(); ++i)
            labels[i] = parse_const_label(s.labels[0][i]);
    } else if (s.columns() == 3) {
        for (std::size_t i = 0; i < s.tokens.size(); ++i)
            labels[i] = unfactor_const(s.labels[0][i], s.labels[1][i],
                                       s.labels[2][i]);
    } else {
        throw std::runtime_error(
            "sentence " + std::to_string(sentence_index + 1) + ": expected 1 "
            "or 3 constituency label columns, got " +
            std::to_string(s.columns()));
    }
    return labels;
}

std::vector<DepLabel> dep_labels_from_columns(const LabeledSentence& s,
                                              std::size_t sentence_index) {
    std::vector<DepLabel> labels(s.tokens.size());
    DepFactorMode mode;
    switch (s.columns()) {
        case 1: mode = DepFactorMode::single; break;
        case 2: mode = DepFactorMode::two_task; break;
        case 3: mode = DepFactorMode::three_task; break;
        default:
            throw std::runtime_error(
                "sentence " + std::to_string(sentence_index + 1) +
                ": expected 1, 2 or 3 dependency label columns, got " +
                std::to_string(s.columns()));
    }
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        std::vector<std::string> parts;
        for (const auto& col : s.labels) parts.push_back(col[i]);
        labels[i] = unfactor_dep(parts, mode);
    }
    return labels;
}

// ---------------------------------------------------------------------------

struct EncodeArgs {
    std::string paradigm = "const";
    std::string input, output;
    std::string factorization = "single";
    bool keep_wrapper = false;
    std::string manifest;
};

void cmd_encode(const EncodeArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const Paradigm paradigm = parse_paradigm(args.paradigm);
    if (paradigm == Paradigm::both)
        throw UsageError("encode takes one paradigm at a time");
    const std::string text = read_file(args.input);

    std::vector<LabeledSentence> out;
    if (paradigm == Paradigm::constituency) {
        if (args.factorization == "2task")
            throw UsageError("constituency labels factor into 1 or 3 tasks");
        BracketReadOptions opts;
        opts.strip_wrapper = !args.keep_wrapper;
        for (const ConstTree& tree : read_bracketed(text, opts)) {
            LabeledSentence ls;
            ls.tokens = tree.tokens();
            const std::vector<ConstLabel> labels = encode_const(tree);
            if (args.factorization == "single") {
                ls.labels.resize(1);
                for (const ConstLabel& l : labels)
                    ls.labels[0].push_back(to_string(l));
            } else {
                ls.labels.resize(3);
                for (const ConstLabel& l : labels) {
                    const auto parts = factor_const(l);
                    for (int c = 0; c < 3; ++c)
                        ls.labels[c].push_back(parts[c]);
                }
            }
            out.push_back(std::move(ls));
        }
    } else {
        const DepFactorMode mode =
            parse_factorization(args.factorization, paradigm);
        const ConllReadResult conll = read_conll(text);
        for (const std::string& w : conll.warnings)
            std::cerr << "warning: " << w << "\n";
        const std::size_t ncols =
            mode == DepFactorMode::single
                ? 1
                : (mode == DepFactorMode::two_task ? 2 : 3);
        for (const ConllSentence& s : conll.sentences) {
            LabeledSentence ls;
            ls.tokens = s.tokens;
            const std::vector<DepLabel> labels = encode_dep(s.tokens, s.tree);
            ls.labels.resize(ncols);
            for (const DepLabel& l : labels) {
                const auto parts = factor_dep(l, mode);
                for (std::size_t c = 0; c < parts.size(); ++c)
                    ls.labels[c].push_back(parts[c]);
            }
            out.push_back(std::move(ls));
        }
    }
    write_file(args.output, write_labels(out));

    std::vector<std::set<std::string>> vocab;
    for (const LabeledSentence& s : out) {
        vocab.resize(std::max(vocab.size(), s.columns()));
        for (std::size_t c = 0; c < s.columns(); ++c)
            vocab[c].insert(s.labels[c].begin(), s.labels[c].end());
    }
    std::cerr << "encoded " << out.size() << " sentences;";
    for (std::size_t c = 0; c < vocab.size(); ++c)
        std::cerr << " column " << c + 1 << ": " << vocab[c].size()
                  << " labels";
    std::cerr << "\n";

    Manifest m;
    m.command = "encode";
    m.config = {{"paradigm", args.paradigm},
                {"factorization", args.factorization}};
    m.inputs = {args.input};
    m.outputs = {args.output};
    m.wall_seconds = elapsed_seconds(t0);
    m.sentences_per_second =
        m.wall_seconds > 0 ? static_cast<double>(out.size()) / m.wall_seconds
                           : 0.0;
    m.write(args.manifest);
}

struct DecodeArgs {
    std::string paradigm = "const";
    std::string input, output;
    std::string fallback = "X";
    std::string manifest;
};

void cmd_decode(const DecodeArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const Paradigm paradigm = parse_paradigm(args.paradigm);
    if (paradigm == Paradigm::both)
        throw UsageError("decode takes one paradigm at a time");
    const std::vector<LabeledSentence> data =
        read_labels(read_file(args.input));

    std::string out;
    ConstRepairReport const_repairs;
    DepRepairReport dep_repairs;
    for (std::size_t s = 0; s < data.size(); ++s) {
        if (paradigm == Paradigm::constituency) {
            const auto labels = const_labels_from_columns(data[s], s);
            ConstDecodeResult res = decode_const(
                labels, data[s].tokens, ConstDecodeOptions{args.fallback});
            const_repairs += res.repairs;
            out += write_bracketed(res.tree);
            out.push_back('\n');
        } else {
            const auto labels = dep_labels_from_columns(data[s], s);
            DepDecodeResult res = decode_dep(labels, data[s].tokens);
            dep_repairs += res.repairs;
            out += write_conll(data[s].tokens, res.tree);
            out.push_back('\n');
        }
    }
    write_file(args.output, out);

    Manifest m;
    m.command = "decode";
    m.config = {{"paradigm", args.paradigm}, {"fallback", args.fallback}};
    if (paradigm == Paradigm::constituency) {
        std::cerr << "decoded " << data.size() << " sentences; repairs:"
                  << " clamped_levels=" << const_repairs.clamped_levels
                  << " forced_min_level=" << const_repairs.forced_min_level
                  << " conflicting_nonterminals="
                  << const_repairs.conflicting_nonterminals
                  << " missing_nonterminals="
                  << const_repairs.missing_nonterminals << "\n";
        m.config["repairs.clamped_levels"] =
            std::to_string(const_repairs.clamped_levels);
        m.config["repairs.forced_min_level"] =
            std::to_string(const_repairs.forced_min_level);
        m.config["repairs.conflicting_nonterminals"] =
            std::to_string(const_repairs.conflicting_nonterminals);
        m.config["repairs.missing_nonterminals"] =
            std::to_string(const_repairs.missing_nonterminals);
    } else {
        std::cerr << "decoded " << data.size() << " sentences; repairs:"
                  << " unresolvable_heads=" << dep_repairs.unresolvable_heads
                  << " extra_roots=" << dep_repairs.extra_roots
                  << " zero_roots=" << dep_repairs.zero_roots
                  << " cycles_broken=" << dep_repairs.cycles_broken << "\n";
        m.config["repairs.unresolvable_heads"] =
            std::to_string(dep_repairs.unresolvable_heads);
        m.config["repairs.extra_roots"] =
            std::to_string(dep_repairs.extra_roots);
        m.config["repairs.zero_roots"] = std::to_string(dep_repairs.zero_roots);
        m.config["repairs.cycles_broken"] =
            std::to_string(dep_repairs.cycles_broken);
    }
    m.inputs = {args.input};
    m.outputs = {args.output};
    m.wall_seconds = elapsed_seconds(t0);
    m.sentences_per_second =
        m.wall_seconds > 0 ? static_cast<double>(data.size()) / m.wall_seconds
                           : 0.0;
    m.write(args.manifest);
}

struct TrainArgs {
    std::string kind = "ss";
    std::string paradigm = "const";
    std::string train_const, train_dep, dev_const, dev_dep;
    std::string config_path;
    std::string model_out;
    std::string log_path;
    std::string input_from = "auto";
    std::string criterion = "auto";
    double aux_beta = -1.0;
    std::int64_t seed = -1;
    bool dep_filter = false;
    std::string manifest;
};

void cmd_train(const TrainArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelKind kind = parse_kind(args.kind);
    const Paradigm paradigm = parse_paradigm(args.paradigm);

    std::vector<TaskSpec> tasks =
        configure_paradigm(kind, paradigm, args.aux_beta);
    const bool need_const = has_const_tasks(tasks);
    const bool need_dep = has_dep_tasks(tasks);
    if (need_const && (args.train_const.empty() || args.dev_const.empty()))
        throw UsageError("this configuration needs --train-const/--dev-const");
    if (need_dep && (args.train_dep.empty() || args.dev_dep.empty()))
        throw UsageError("this configuration needs --train-dep/--dev-dep");

    TrainConfig cfg = args.config_path.empty()
                          ? TrainConfig{}
                          : TrainConfig::from_kv(read_file(args.config_path));
    if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
    cfg.validate();

    Paradigm input_from;
    if (args.input_from == "auto") {
        // the main paradigm's file provides the input features; with two
        // main paradigms the dependency file is the default
        input_from = need_const && need_dep
                         ? (kind == ModelKind::dmtl ? Paradigm::dependency
                                                    : paradigm)
                         : (need_const ? Paradigm::constituency
                                       : Paradigm::dependency);
    } else {
        input_from = parse_paradigm(args.input_from);
        if (input_from == Paradigm::both)
            throw UsageError("--input-from must be const or dep");
    }

    std::vector<LabeledSentence> train_const, train_dep, dev_const, dev_dep;
    if (need_const) {
        train_const = read_labels(read_file(args.train_const));
        dev_const = read_labels(read_file(args.dev_const));
    }
    if (need_dep) {
        train_dep = read_labels(read_file(args.train_dep));
        dev_dep = read_labels(read_file(args.dev_dep));
    }
    const Dataset train_data =
        build_dataset(tasks, need_const ? &train_const : nullptr,
                      need_dep ? &train_dep : nullptr, input_from);
    const Dataset dev_data =
        build_dataset(tasks, need_const ? &dev_const : nullptr,
                      need_dep ? &dev_dep : nullptr, input_from);
    if (train_data.empty()) throw std::runtime_error("empty training set");

    attach_task_vocabularies(tasks, train_data);
    std::vector<std::string> forms, poses;
    for (const TrainingSentence& s : train_data)
        for (const Token& t : s.tokens) {
            forms.push_back(t.form);
            poses.push_back(t.pos);
        }
    const std::string fallback = most_frequent_nonterminal(tasks, train_data);
    const bool want_filter = args.dep_filter;
    DepPairFilter filter;
    if (want_filter) filter = build_dep_pair_filter(tasks, train_data);
    TaggerModel model;
    model.build(cfg, std::move(tasks), Vocab::build(forms),
                ByteVocab::build(forms), Vocab::build(poses), fallback);
    if (want_filter) model.set_dep_filter(std::move(filter));

    SelectionCriterion criterion;
    if (args.criterion == "auto")
        criterion = default_criterion(model.tasks());
    else if (args.criterion == "f1")
        criterion = SelectionCriterion::f1;
    else if (args.criterion == "las")
        criterion = SelectionCriterion::las;
    else if (args.criterion == "harmonic")
        criterion = SelectionCriterion::harmonic;
    else
        throw UsageError("unknown criterion '" + args.criterion + "'");

    const std::string log_path =
        args.log_path.empty() ? args.model_out + ".log" : args.log_path;
    std::ofstream log_stream(log_path);
    if (!log_stream)
        throw std::runtime_error("cannot open log file: " + log_path);

    const TrainResult result =
        train(model, train_data, dev_data, criterion, args.model_out,
              &log_stream);
    if (result.best_epoch < 0) throw std::runtime_error("training failed");
    std::cerr << "best epoch " << result.best_epoch << " metric "
              << result.best_metric << " (" << result.epochs.size()
              << " epochs";
    if (model.oov_gold_count() > 0)
        std::cerr << ", " << model.oov_gold_count()
                  << " out-of-vocabulary gold labels";
    std::cerr << ")\n";

    Manifest m;
    m.command = "train";
    m.seed = cfg.seed;
    m.config = {{"kind", args.kind},
                {"paradigm", args.paradigm},
                {"criterion", args.criterion},
                {"input_from", to_string(input_from)},
                {"best_epoch", std::to_string(result.best_epoch)},
                {"best_metric", std::to_string(result.best_metric)}};
    std::istringstream cfg_kv(cfg.to_kv());
    for (std::string line; std::getline(cfg_kv, line);) {
        const auto eq = line.find('=');
        m.config["train." + line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (const std::string& p :
         {args.train_const, args.train_dep, args.dev_const, args.dev_dep})
        if (!p.empty()) m.inputs.push_back(p);
    m.outputs = {args.model_out, log_path};
    m.wall_seconds = elapsed_seconds(t0);
    m.write(args.manifest);
}

struct PredictArgs {
    std::string model;
    std::string input;
    std::string out_const, out_dep, out_labels;
    bool emit_aux = false;
    std::string manifest;
};

void cmd_predict(const PredictArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const TaggerModel model = TaggerModel::load(args.model);
    const std::vector<Sentence> sentences =
        read_tagged_sentences(read_file(args.input));
    const auto& tasks = model.tasks();

    if (!args.out_const.empty() && !has_const_tasks(tasks))
        throw UsageError("model has no constituency tasks");
    if (!args.out_dep.empty() && !has_dep_tasks(tasks))
        throw UsageError("model has no dependency tasks");
    if (args.out_const.empty() && args.out_dep.empty() &&
        args.out_labels.empty())
        throw UsageError(
            "predict needs --out-const, --out-dep or --out-labels");

    std::string const_out, dep_out;
    std::vector<LabeledSentence> label_out;
    ConstRepairReport const_repairs;
    DepRepairReport dep_repairs;
    for (const Sentence& sentence : sentences) {
        const auto labels = model.predict_labels(sentence);
        const DecodedPrediction decoded =
            decode_prediction(model, labels, sentence);
        if (!args.out_const.empty()) {
            const_out += write_bracketed(*decoded.const_tree);
            const_out.push_back('\n');
            const_repairs += decoded.const_repairs;
        }
        if (!args.out_dep.empty()) {
            dep_out += write_conll(sentence, *decoded.dep_tree);
            dep_out.push_back('\n');
            dep_repairs += decoded.dep_repairs;
        }
        if (!args.out_labels.empty()) {
            LabeledSentence ls;
            ls.tokens = sentence;
            for (std::size_t t = 0; t < tasks.size(); ++t)
                if (args.emit_aux || tasks[t].role == TaskRole::main)
                    ls.labels.push_back(labels[t]);
            label_out.push_back(std::move(ls));
        }
    }

    Manifest m;
    m.command = "predict";
    m.config = {{"model", args.model},
                {"emit_aux", args.emit_aux ? "true" : "false"}};
    m.inputs = {args.input, args.model};
    if (!args.out_const.empty()) {
        write_file(args.out_const, const_out);
        m.outputs.push_back(args.out_const);
        std::cerr << "constituency repairs: " << const_repairs.total() << "\n";
    }
    if (!args.out_dep.empty()) {
        write_file(args.out_dep, dep_out);
        m.outputs.push_back(args.out_dep);
        std::cerr << "dependency repairs: " << dep_repairs.total() << "\n";
    }
    if (!args.out_labels.empty()) {
        write_file(args.out_labels, write_labels(label_out));
        m.outputs.push_back(args.out_labels);
    }
    m.wall_seconds = elapsed_seconds(t0);
    m.sentences_per_second =
        m.wall_seconds > 0
            ? static_cast<double>(sentences.size()) / m.wall_seconds
            : 0.0;
    m.write(args.manifest);
}

struct EvalArgs {
    std::string paradigm = "const";
    std::string gold, pred;
    std::string gold_dep, pred_dep;
    std::string params = "none";
    std::string out;
    std::string manifest;
};

void cmd_eval(const EvalArgs& args) {
    const auto t0 = std::chrono::steady_clock::now();
    const Paradigm paradigm = parse_paradigm(args.paradigm);
    const EvalParams params = load_eval_params(args.params);

    ScoreReport report;
    std::size_t sentence_count = 0;
    if (paradigm == Paradigm::constituency || paradigm == Paradigm::both) {
        const auto gold = read_bracketed(read_file(args.gold));
        const auto pred = read_bracketed(read_file(args.pred));
        report.constituency =
            bracket_f1(gold, pred, params).constituency;
        sentence_count = gold.size();
    }
    if (paradigm == Paradigm::dependency || paradigm == Paradigm::both) {
        const std::string gold_path =
            paradigm == Paradigm::both ? args.gold_dep : args.gold;
        const std::string pred_path =
            paradigm == Paradigm::both ? args.pred_dep : args.pred;
        if (gold_path.empty() || pred_path.empty())
            throw UsageError("dependency evaluation needs gold and pred "
                             "CoNLL files");
        const ConllReadResult gold = read_conll(read_file(gold_path));
        const ConllReadResult pred = read_conll(read_file(pred_path));
        std::vector<DepTree> gold_trees, pred_trees;
        std::vector<Sentence> sentences;
        for (const ConllSentence& s : gold.sentences) {
            gold_trees.push_back(s.tree);
            sentences.push_back(s.tokens);
        }
        for (const ConllSentence& s : pred.sentences)
            pred_trees.push_back(s.tree);
        report.dependency =
            uas_las(gold_trees, pred_trees, sentences, params).dependency;
        sentence_count = std::max(sentence_count, gold_trees.size());
    }

    std::cout << report.to_text();
    Manifest m;
    m.command = "eval";
    m.config = {{"paradigm", args.paradigm}, {"params", args.params}};
    m.inputs = {args.gold, args.pred};
    if (!args.gold_dep.empty()) m.inputs.push_back(args.gold_dep);
    if (!args.pred_dep.empty()) m.inputs.push_back(args.pred_dep);
    if (!args.out.empty()) {
        write_file(args.out, report.to_kv());
        m.outputs = {args.out};
    }
    m.wall_seconds = elapsed_seconds(t0);
    m.sentences_per_second =
        m.wall_seconds > 0
            ? static_cast<double>(sentence_count) / m.wall_seconds
            : 0.0;
    m.write(args.manifest);
}

struct StatsArgs {
    std::string format = "labels";
    std::string input;
};

void cmd_stats(const StatsArgs& args) {
    const std::string text = read_file(args.input);
    if (args.format == "bracketed") {
        const auto trees = read_bracketed(text);
        std::size_t tokens = 0;
        std::set<std::string> nonterminals, preterminals;
        for (const ConstTree& tree : trees) {
            for (const Token& t : tree.tokens()) preterminals.insert(t.pos);
            tokens += tree.size();
            auto walk = [&](auto&& self, const ConstNode& n) -> void {
                if (n.is_leaf()) return;
                nonterminals.insert(n.label);
                for (const ConstNode& c : n.children) self(self, c);
            };
            walk(walk, tree.root);
        }
        std::cout << "sentences=" << trees.size() << "\ntokens=" << tokens
                  << "\nnonterminals=" << nonterminals.size()
                  << "\npreterminals=" << preterminals.size() << "\n";
    } else if (args.format == "conll") {
        const ConllReadResult result = read_conll(text);
        std::size_t tokens = 0;
        std::set<std::string> rels, poses;
        for (const ConllSentence& s : result.sentences) {
            tokens += s.tokens.size();
            for (const Token& t : s.tokens) poses.insert(t.pos);
            rels.insert(s.tree.rels.begin(), s.tree.rels.end());
        }
        std::cout << "sentences=" << result.sentences.size()
                  << "\ntokens=" << tokens << "\nrelations=" << rels.size()
                  << "\npos_tags=" << poses.size()
                  << "\nwarnings=" << result.warnings.size() << "\n";
    } else if (args.format == "labels") {
        const auto data = read_labels(text);
        std::size_t tokens = 0;
        std::vector<std::set<std::string>> vocab;
        for (const LabeledSentence& s : data) {
            tokens += s.tokens.size();
            vocab.resize(std::max(vocab.size(), s.columns()));
            for (std::size_t c = 0; c < s.columns(); ++c)
                vocab[c].insert(s.labels[c].begin(), s.labels[c].end());
        }
        std::cout << "sentences=" << data.size() << "\ntokens=" << tokens
                  << "\ncolumns=" << vocab.size() << "\n";
        for (std::size_t c = 0; c < vocab.size(); ++c)
            std::cout << "column" << c + 1 << "_labels=" << vocab[c].size()
                      << "\n";
    } else {
        throw UsageError("unknown format '" + args.format +
                         "' (expected bracketed|conll|labels)");
    }
}

struct BenchArgs {
    std::string model;
    std::string input;
    int runs = 1;
    std::string manifest;
};

void cmd_bench(const BenchArgs& args) {
    if (args.runs < 1) throw UsageError("--runs must be positive");
    const TaggerModel model = TaggerModel::load(args.model);
    const std::vector<Sentence> sentences =
        read_tagged_sentences(read_file(args.input));
    if (sentences.empty()) throw std::runtime_error("no input sentences");

    // end-to-end: tagging plus decoding back into trees, single-threaded
    double mean_sps = 0.0;
    for (int run = 0; run < args.runs; ++run) {
        const auto t0 = std::chrono::steady_clock::now();
        std::size_t decoded = 0;
        for (const Sentence& sentence : sentences) {
            const auto labels = model.predict_labels(sentence);
            const DecodedPrediction p =
                decode_prediction(model, labels, sentence);
            decoded += (p.const_tree ? 1 : 0) + (p.dep_tree ? 1 : 0);
        }
        const double seconds = elapsed_seconds(t0);
        const double sps =
            seconds > 0 ? static_cast<double>(sentences.size()) / seconds
                        : 0.0;
        mean_sps += sps;
        std::cout << "run " << run + 1 << ": " << sps
                  << " sentences/second (" << sentences.size()
                  << " sentences, " << decoded << " trees)\n";
    }
    mean_sps /= args.runs;
    std::cout << "sentences_per_second=" << mean_sps << "\n";

    Manifest m;
    m.command = "bench";
    m.config = {{"model", args.model}, {"runs", std::to_string(args.runs)}};
    m.inputs = {args.input, args.model};
    m.sentences_per_second = mean_sps;
    m.wall_seconds = 0.0;
    m.write(args.manifest.empty() ? args.input + ".bench.run.json"
                                  : args.manifest);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sequence-labeling constituency and dependency parsing"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    std::uint64_t global_seed = 1;
    bool deterministic = false;
    app.add_option("--seed", global_seed, "global random seed");
    app.add_flag("--deterministic", deterministic,
                 "single-threaded 64-bit mode (always on; recorded in "
                 "manifests)");

    EncodeArgs encode_args;
    auto* enc = app.add_subcommand("encode", "treebank -> label TSV");
    enc->add_option("--paradigm", encode_args.paradigm, "const|dep");
    enc->add_option("--input", encode_args.input)->required();
    enc->add_option("--output", encode_args.output)->required();
    enc->add_option("--factorization", encode_args.factorization,
                    "single|2task|3task");
    enc->add_flag("--keep-wrapper", encode_args.keep_wrapper,
                  "do not strip a TOP/empty root wrapper");
    enc->add_option("--manifest", encode_args.manifest);

    DecodeArgs decode_args;
    auto* dec = app.add_subcommand("decode", "label TSV -> treebank");
    dec->add_option("--paradigm", decode_args.paradigm, "const|dep");
    dec->add_option("--input", decode_args.input)->required();
    dec->add_option("--output", decode_args.output)->required();
    dec->add_option("--fallback", decode_args.fallback,
                    "nonterminal substituted for missing labels");
    dec->add_option("--manifest", decode_args.manifest);

    TrainArgs train_args;
    auto* trn = app.add_subcommand("train", "train a tagger");
    trn->add_option("--kind", train_args.kind, "ss|smtl|dmtl-aux|dmtl");
    trn->add_option("--paradigm", train_args.paradigm,
                    "const|dep|both (for dmtl-aux: the main paradigm)");
    trn->add_option("--train-const", train_args.train_const);
    trn->add_option("--train-dep", train_args.train_dep);
    trn->add_option("--dev-const", train_args.dev_const);
    trn->add_option("--dev-dep", train_args.dev_dep);
    trn->add_option("--config", train_args.config_path,
                    "key=value training configuration file");
    trn->add_option("--model-out", train_args.model_out)->required();
    trn->add_option("--log", train_args.log_path);
    trn->add_option("--input-from", train_args.input_from,
                    "which file provides input features (const|dep|auto)");
    trn->add_option("--criterion", train_args.criterion,
                    "f1|las|harmonic|auto");
    trn->add_option("--aux-beta", train_args.aux_beta,
                    "override auxiliary loss weights");
    trn->add_flag("--dep-filter", train_args.dep_filter,
                  "restrict predicted relations to (head, relation) pairs "
                  "observed in training");
    trn->add_option("--manifest", train_args.manifest);

    PredictArgs predict_args;
    auto* prd = app.add_subcommand("predict", "tag and decode sentences");
    prd->add_option("--model", predict_args.model)->required();
    prd->add_option("--input", predict_args.input,
                    "TSV with form<TAB>pos per token")
        ->required();
    prd->add_option("--out-const", predict_args.out_const);
    prd->add_option("--out-dep", predict_args.out_dep);
    prd->add_option("--out-labels", predict_args.out_labels);
    prd->add_flag("--emit-aux", predict_args.emit_aux,
                  "include auxiliary task columns in --out-labels");
    prd->add_option("--manifest", predict_args.manifest);

    EvalArgs eval_args;
    auto* evl = app.add_subcommand("eval", "score predictions");
    evl->add_option("--paradigm", eval_args.paradigm, "const|dep|both");
    evl->add_option("--gold", eval_args.gold)->required();
    evl->add_option("--pred", eval_args.pred)->required();
    evl->add_option("--gold-dep", eval_args.gold_dep,
                    "dependency gold (with --paradigm both)");
    evl->add_option("--pred-dep", eval_args.pred_dep);
    evl->add_option("--params", eval_args.params,
                    "collins|spmrl|none|<file>");
    evl->add_option("--out", eval_args.out, "write key=value report here");
    evl->add_option("--manifest", eval_args.manifest);

    StatsArgs stats_args;
    auto* sts = app.add_subcommand("stats", "corpus statistics");
    sts->add_option("--format", stats_args.format, "bracketed|conll|labels");
    sts->add_option("--input", stats_args.input)->required();

    BenchArgs bench_args;
    auto* bch = app.add_subcommand("bench", "prediction throughput");
    bch->add_option("--model", bench_args.model)->required();
    bch->add_option("--input", bench_args.input)->required();
    bch->add_option("--runs", bench_args.runs);
    bch->add_option("--manifest", bench_args.manifest);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (train_args.seed < 0 && app.count("--seed"))
            train_args.seed = static_cast<std::int64_t>(global_seed);
        if (enc->parsed()) cmd_encode(encode_args);
        if (dec->parsed()) cmd_decode(decode_args);
        if (trn->parsed()) cmd_train(train_args);
        if (prd->parsed()) cmd_predict(predict_args);
        if (evl->parsed()) cmd_eval(eval_args);
        if (sts->parsed()) cmd_stats(stats_args);
        if (bch->parsed()) cmd_bench(bench_args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
