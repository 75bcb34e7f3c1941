#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "slparse/const_codec.hpp"
#include "slparse/dep_codec.hpp"
#include "slparse/nn.hpp"
#include "slparse/token.hpp"
#include "slparse/treebank_io.hpp"

namespace slparse {

/// Out-of-vocabulary entry, index 0 of every vocabulary.
inline const std::string kUnk = "<unk>";

enum class Paradigm { constituency, dependency, both };
enum class ModelKind { ss, smtl, dmtl_aux, dmtl };
enum class TaskRole { main, auxiliary };

/// What one output head predicts.
enum class SubTask {
    const_whole,  // "n@c@u"
    const_n,
    const_c,
    const_u,
    dep_whole,  // "o@p@d"
    dep_head,   // "o@p"
    dep_rel,    // "d"
};

std::string to_string(Paradigm p);
std::string to_string(ModelKind k);
std::string to_string(SubTask s);
Paradigm parse_paradigm(std::string_view s);
ModelKind parse_kind(std::string_view s);
SubTask parse_subtask(std::string_view s);

struct TaskSpec {
    std::string name;
    SubTask sub = SubTask::const_whole;
    TaskRole role = TaskRole::main;
    double beta = 1.0;  // loss weight; 1 for main tasks
    std::vector<std::string> labels;  // labels[0] == kUnk
    std::unordered_map<std::string, int> label_ids;

    bool is_const() const {
        return sub == SubTask::const_whole || sub == SubTask::const_n ||
               sub == SubTask::const_c || sub == SubTask::const_u;
    }

    /// -1 when the label was never seen.
    int lookup(const std::string& label) const {
        const auto it = label_ids.find(label);
        return it == label_ids.end() ? -1 : it->second;
    }
};

/// Task sets for the four model configurations. For dmtl_aux, `paradigm`
/// names the main paradigm. Constituency factors into 3 sub-tasks and
/// dependency into 2; single-task models predict the whole label.
/// aux_beta_override, when >= 0, replaces the default auxiliary weights
/// (0.2 for auxiliary constituency, 0.1 for auxiliary dependency).
std::vector<TaskSpec> configure_paradigm(ModelKind kind, Paradigm paradigm,
                                         double aux_beta_override = -1.0);

struct TrainConfig {
    double learning_rate = 0.02;
    double decay = 0.05;  // lr at epoch e is learning_rate / (1 + decay*e)
    double momentum = 0.9;
    double dropout = 0.5;
    double word_dropout = 0.0;  // train-time chance of replacing a word
                                // embedding with the OOV entry
    int batch_size = 8;
    int max_epochs = 150;
    int word_emb_dim = 100;
    int char_emb_dim = 30;
    int self_emb_dim = 20;  // PoS embedding
    int char_hidden = 50;   // total over both directions
    int word_hidden = 800;  // total over both directions
    int layers = 2;
    std::uint64_t seed = 1;
    int patience = 0;  // stop after this many non-improving epochs; 0 = never

    void validate() const;
    std::string to_kv() const;
    static TrainConfig from_kv(std::string_view text);
};

struct Vocab {
    std::vector<std::string> items;  // items[0] == kUnk
    std::unordered_map<std::string, int> ids;

    static Vocab build(std::vector<std::string> values);
    int id(const std::string& s) const {
        const auto it = ids.find(s);
        return it == ids.end() ? 0 : it->second;
    }
    int size() const { return static_cast<int>(items.size()); }
};

/// Character vocabulary over the bytes of token forms.
struct ByteVocab {
    std::array<int, 256> ids{};   // byte value -> id, 0 = OOV
    std::vector<int> byte_of_id;  // id -> byte value; byte_of_id[0] == -1
    static ByteVocab build(const std::vector<std::string>& forms);
    int size() const { return static_cast<int>(byte_of_id.size()); }
};

struct TrainingSentence {
    Sentence tokens;
    std::vector<std::vector<std::string>> gold;  // [task][token]
};
using Dataset = std::vector<TrainingSentence>;

/// Joins label files into per-task gold columns following the task
/// order. Both files must agree on token forms when present;
/// input_features picks which file provides the PoS feature.
Dataset build_dataset(std::span<const TaskSpec> tasks,
                      const std::vector<LabeledSentence>* const_data,
                      const std::vector<LabeledSentence>* dep_data,
                      Paradigm input_features);

/// Builds each task's label vocabulary from the dataset (sorted unique,
/// kUnk first).
void attach_task_vocabularies(std::vector<TaskSpec>& tasks,
                              const Dataset& data);

/// Most frequent constituency nonterminal (c component) of the dataset;
/// "X" when there is none. Used as the decoder fallback.
std::string most_frequent_nonterminal(std::span<const TaskSpec> tasks,
                                      const Dataset& data);

bool has_const_tasks(std::span<const TaskSpec> tasks);
bool has_dep_tasks(std::span<const TaskSpec> tasks);

/// Head sub-label ("o@p") -> relations observed with it in training.
/// Optional prediction-time filter for factored dependency models: the
/// single-label setup never proposes unseen (o,p,d) combinations, and
/// this table lets the 2-task setup share that property. Off by default.
using DepPairFilter = std::map<std::string, std::vector<std::string>>;

DepPairFilter build_dep_pair_filter(std::span<const TaskSpec> tasks,
                                    const Dataset& data);

/// Reassembles structured labels from per-task label strings (task
/// order must match `tasks`). kUnk sub-labels count as absent.
std::vector<ConstLabel> assemble_const_labels(
    std::span<const TaskSpec> tasks,
    const std::vector<std::vector<std::string>>& columns, std::size_t n_tokens);
std::vector<DepLabel> assemble_dep_labels(
    std::span<const TaskSpec> tasks,
    const std::vector<std::vector<std::string>>& columns, std::size_t n_tokens);

/// Hard-sharing multi-task tagger: embeddings and stacked bidirectional
/// recurrent layers are shared; each task owns one affine+softmax head
/// reading the same token vectors.
class TaggerModel {
  public:
    TaggerModel() = default;

    void build(TrainConfig cfg, std::vector<TaskSpec> tasks, Vocab words,
               ByteVocab chars, Vocab pos, std::string fallback_nonterminal);

    const TrainConfig& config() const { return cfg_; }
    const std::vector<TaskSpec>& tasks() const { return tasks_; }
    const std::string& fallback_nonterminal() const {
        return fallback_nonterminal_;
    }

    /// Per-token encoder outputs with dropout disabled. Throws
    /// std::invalid_argument on an empty sentence.
    std::vector<nn::Vec> encode_tokens(const Sentence& sentence) const;

    /// Weighted loss of one sentence without touching gradients.
    /// weight_override, when given, replaces each task's loss weight.
    double loss(const TrainingSentence& sentence,
                std::vector<double>* per_task_losses = nullptr,
                const std::vector<double>* weight_override = nullptr) const;

    /// Forward + backward for one sentence; adds into parameter grads
    /// and returns the weighted loss. dropout_rng == nullptr disables
    /// dropout. Gold labels outside a task's vocabulary map to kUnk and
    /// are tallied (oov_gold_count).
    double accumulate_gradients(const TrainingSentence& sentence,
                                std::mt19937_64* dropout_rng,
                                std::vector<double>* per_task_losses = nullptr,
                                const std::vector<double>* weight_override =
                                    nullptr);

    /// Argmax label strings per task (ties -> lowest index). Dropout off.
    /// With a dependency pair filter installed, the relation head picks
    /// the best relation observed with the predicted head sub-label.
    std::vector<std::vector<std::string>> predict_labels(
        const Sentence& sentence) const;

    void set_dep_filter(DepPairFilter filter) {
        dep_filter_ = std::move(filter);
    }
    const std::optional<DepPairFilter>& dep_filter() const {
        return dep_filter_;
    }

    std::vector<nn::Parameter*> parameters() const { return store_.all(); }
    std::vector<nn::Parameter*> shared_parameters() const {
        return shared_params_;
    }
    std::vector<nn::Parameter*> head_parameters(std::size_t task_index) const;
    void zero_grads() { store_.zero_grads(); }

    /// Bitwise checksum of embeddings + encoder parameters.
    std::uint64_t shared_checksum() const;

    std::size_t oov_gold_count() const { return oov_gold_; }

    /// Self-describing binary container (versioned JSON header + raw
    /// little-endian doubles).
    void save(const std::string& path) const;
    static TaggerModel load(const std::string& path);

  private:
    struct Head {
        nn::Parameter* w = nullptr;
        nn::Parameter* b = nullptr;
    };
    struct Forward;

    void run_forward(const Sentence& sentence, std::mt19937_64* dropout_rng,
                     Forward& f) const;
    double run_losses(const TrainingSentence& sentence, bool with_grads,
                      std::mt19937_64* dropout_rng,
                      std::vector<double>* per_task_losses,
                      const std::vector<double>* weight_override) const;

    TrainConfig cfg_;
    std::vector<TaskSpec> tasks_;
    Vocab words_;
    ByteVocab chars_;
    Vocab pos_;
    std::string fallback_nonterminal_ = "X";
    std::optional<DepPairFilter> dep_filter_;

    nn::ParameterStore store_;
    nn::Parameter* word_emb_ = nullptr;
    nn::Parameter* char_emb_ = nullptr;
    nn::Parameter* pos_emb_ = nullptr;
    nn::LstmParams char_fwd_, char_bwd_;
    std::vector<nn::BiLstmParams> layers_;
    std::vector<Head> heads_;
    std::vector<nn::Parameter*> shared_params_;
    mutable std::size_t oov_gold_ = 0;
};

enum class SelectionCriterion { f1, las, harmonic };

SelectionCriterion default_criterion(std::span<const TaskSpec> tasks);

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    std::vector<double> task_losses;  // unweighted, task order
    double dev_f1 = -1.0;             // -1 = not evaluated
    double dev_uas = -1.0;
    double dev_las = -1.0;
    double dev_metric = 0.0;
    bool improved = false;
    std::uint64_t shared_checksum = 0;
};

struct TrainResult {
    std::vector<EpochLog> epochs;
    int best_epoch = -1;
    double best_metric = -1.0;
};

/// SGD with momentum over shuffled batches; evaluates the dev set each
/// epoch and keeps the checkpoint whenever the selection metric strictly
/// improves (written to checkpoint_path when non-empty). Training stops
/// early when the metric is perfect or patience is exhausted.
TrainResult train(TaggerModel& model, const Dataset& train_data,
                  const Dataset& dev_data, SelectionCriterion criterion,
                  const std::string& checkpoint_path = "",
                  std::ostream* log_stream = nullptr);

/// Decodes per-task predicted labels into trees for evaluation or file
/// output. Only paradigms whose tasks are present are filled.
struct DecodedPrediction {
    std::optional<ConstTree> const_tree;
    std::optional<DepTree> dep_tree;
    ConstRepairReport const_repairs;
    DepRepairReport dep_repairs;
};

DecodedPrediction decode_prediction(
    const TaggerModel& model,
    const std::vector<std::vector<std::string>>& task_labels,
    const Sentence& sentence);

}  // namespace slparse
