// Converts synthetic-grammar sentences into labeled datasets for the
// tagger, mirroring what the encode command produces.
#pragma once

#include <vector>

#include "slparse/const_codec.hpp"
#include "slparse/dep_codec.hpp"
#include "slparse/tagger.hpp"
#include "slparse/treebank_io.hpp"
#include "support/synthetic_grammar.hpp"

namespace testgen {

using namespace slparse;

inline std::vector<LabeledSentence> const_labeled(
    const std::vector<ParallelSentence>& sentences, bool three_task) {
    std::vector<LabeledSentence> out;
    for (const ParallelSentence& s : sentences) {
        LabeledSentence ls;
        ls.tokens = s.tokens;
        const std::vector<ConstLabel> labels = encode_const(s.tree);
        if (three_task) {
            ls.labels.resize(3);
            for (const ConstLabel& l : labels) {
                const auto parts = factor_const(l);
                for (int c = 0; c < 3; ++c) ls.labels[c].push_back(parts[c]);
            }
        } else {
            ls.labels.resize(1);
            for (const ConstLabel& l : labels)
                ls.labels[0].push_back(to_string(l));
        }
        out.push_back(std::move(ls));
    }
    return out;
}

inline std::vector<LabeledSentence> dep_labeled(
    const std::vector<ParallelSentence>& sentences, DepFactorMode mode) {
    std::vector<LabeledSentence> out;
    for (const ParallelSentence& s : sentences) {
        LabeledSentence ls;
        ls.tokens = s.tokens;
        const std::vector<DepLabel> labels = encode_dep(s.tokens, s.dep);
        const std::size_t ncols =
            mode == DepFactorMode::single
                ? 1
                : (mode == DepFactorMode::two_task ? 2 : 3);
        ls.labels.resize(ncols);
        for (const DepLabel& l : labels) {
            const auto parts = factor_dep(l, mode);
            for (std::size_t c = 0; c < ncols; ++c)
                ls.labels[c].push_back(parts[c]);
        }
        out.push_back(std::move(ls));
    }
    return out;
}

/// Labeled data in the column layout each model kind expects.
struct KindData {
    std::vector<LabeledSentence> const_data;
    std::vector<LabeledSentence> dep_data;
    bool has_const = false;
    bool has_dep = false;
};

inline KindData kind_data(ModelKind kind, Paradigm paradigm,
                          const std::vector<ParallelSentence>& sentences) {
    KindData data;
    const bool single = kind == ModelKind::ss;
    const bool wants_const =
        paradigm != Paradigm::dependency || kind == ModelKind::dmtl_aux;
    const bool wants_dep =
        paradigm != Paradigm::constituency || kind == ModelKind::dmtl_aux;
    if (wants_const) {
        data.const_data = const_labeled(sentences, !single);
        data.has_const = true;
    }
    if (wants_dep) {
        data.dep_data =
            dep_labeled(sentences, single ? DepFactorMode::single
                                          : DepFactorMode::two_task);
        data.has_dep = true;
    }
    return data;
}

/// Convenience wrapper: configured tasks with vocabularies plus train
/// and dev datasets for one model kind.
struct PreparedRun {
    std::vector<TaskSpec> tasks;
    Dataset train;
    Dataset dev;
};

inline PreparedRun prepare_run(ModelKind kind, Paradigm paradigm,
                               const SyntheticCorpus& corpus,
                               double aux_beta_override = -1.0) {
    PreparedRun run;
    run.tasks = configure_paradigm(kind, paradigm, aux_beta_override);
    const KindData train_data = kind_data(kind, paradigm, corpus.train);
    const KindData dev_data = kind_data(kind, paradigm, corpus.dev);
    const Paradigm features = has_dep_tasks(run.tasks)
                                  ? Paradigm::dependency
                                  : Paradigm::constituency;
    run.train = build_dataset(
        run.tasks, train_data.has_const ? &train_data.const_data : nullptr,
        train_data.has_dep ? &train_data.dep_data : nullptr, features);
    run.dev = build_dataset(
        run.tasks, dev_data.has_const ? &dev_data.const_data : nullptr,
        dev_data.has_dep ? &dev_data.dep_data : nullptr, features);
    attach_task_vocabularies(run.tasks, run.train);
    return run;
}

inline TrainConfig small_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.word_emb_dim = 5;
    cfg.char_emb_dim = 3;
    cfg.self_emb_dim = 3;
    cfg.char_hidden = 4;
    cfg.word_hidden = 8;
    cfg.layers = 2;
    cfg.dropout = 0.0;
    cfg.seed = seed;
    return cfg;
}

inline TaggerModel build_model(const TrainConfig& cfg,
                               const PreparedRun& run) {
    std::vector<std::string> forms, poses;
    for (const TrainingSentence& s : run.train)
        for (const Token& t : s.tokens) {
            forms.push_back(t.form);
            poses.push_back(t.pos);
        }
    TaggerModel model;
    model.build(cfg, run.tasks, Vocab::build(forms), ByteVocab::build(forms),
                Vocab::build(poses),
                most_frequent_nonterminal(run.tasks, run.train));
    return model;
}

}  // namespace testgen
