#include "slparse/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "slparse/metrics.hpp"

namespace slparse {

using nn::Mat;
using nn::Vec;

namespace {

std::string clean_sublabel(const std::string& s) {
    return s == kUnk ? kAbsent : s;
}

int find_task(std::span<const TaskSpec> tasks, SubTask sub) {
    for (std::size_t t = 0; t < tasks.size(); ++t)
        if (tasks[t].sub == sub) return static_cast<int>(t);
    return -1;
}

double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::runtime_error("config: bad numeric value for " + key +
                                 ": '" + v + "'");
    }
}

long long to_int(const std::string& v, const std::string& key) {
    const double d = to_double(v, key);
    const long long i = static_cast<long long>(d);
    if (static_cast<double>(i) != d)
        throw std::runtime_error("config: expected integer for " + key);
    return i;
}

}  // namespace

std::string to_string(Paradigm p) {
    switch (p) {
        case Paradigm::constituency: return "const";
        case Paradigm::dependency: return "dep";
        case Paradigm::both: return "both";
    }
    return "?";
}

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::ss: return "ss";
        case ModelKind::smtl: return "smtl";
        case ModelKind::dmtl_aux: return "dmtl-aux";
        case ModelKind::dmtl: return "dmtl";
    }
    return "?";
}

std::string to_string(SubTask s) {
    switch (s) {
        case SubTask::const_whole: return "const";
        case SubTask::const_n: return "n";
        case SubTask::const_c: return "c";
        case SubTask::const_u: return "u";
        case SubTask::dep_whole: return "dep";
        case SubTask::dep_head: return "head";
        case SubTask::dep_rel: return "rel";
    }
    return "?";
}

Paradigm parse_paradigm(std::string_view s) {
    if (s == "const") return Paradigm::constituency;
    if (s == "dep") return Paradigm::dependency;
    if (s == "both") return Paradigm::both;
    throw std::invalid_argument("unknown paradigm: '" + std::string(s) +
                                "' (expected const|dep|both)");
}

ModelKind parse_kind(std::string_view s) {
    if (s == "ss") return ModelKind::ss;
    if (s == "smtl") return ModelKind::smtl;
    if (s == "dmtl-aux") return ModelKind::dmtl_aux;
    if (s == "dmtl") return ModelKind::dmtl;
    throw std::invalid_argument("unknown model kind: '" + std::string(s) +
                                "' (expected ss|smtl|dmtl-aux|dmtl)");
}

SubTask parse_subtask(std::string_view s) {
    if (s == "const") return SubTask::const_whole;
    if (s == "n") return SubTask::const_n;
    if (s == "c") return SubTask::const_c;
    if (s == "u") return SubTask::const_u;
    if (s == "dep") return SubTask::dep_whole;
    if (s == "head") return SubTask::dep_head;
    if (s == "rel") return SubTask::dep_rel;
    throw std::invalid_argument("unknown sub-task: '" + std::string(s) + "'");
}

std::vector<TaskSpec> configure_paradigm(ModelKind kind, Paradigm paradigm,
                                         double aux_beta_override) {
    const double aux_const =
        aux_beta_override >= 0.0 ? aux_beta_override : 0.2;
    const double aux_dep = aux_beta_override >= 0.0 ? aux_beta_override : 0.1;

    auto task = [](std::string name, SubTask sub, TaskRole role, double beta) {
        TaskSpec spec;
        spec.name = std::move(name);
        spec.sub = sub;
        spec.role = role;
        spec.beta = role == TaskRole::main ? 1.0 : beta;
        return spec;
    };
    auto const_tasks = [&](TaskRole role, double beta) {
        return std::vector<TaskSpec>{
            task("n", SubTask::const_n, role, beta),
            task("c", SubTask::const_c, role, beta),
            task("u", SubTask::const_u, role, beta)};
    };
    auto dep_tasks = [&](TaskRole role, double beta) {
        return std::vector<TaskSpec>{
            task("head", SubTask::dep_head, role, beta),
            task("rel", SubTask::dep_rel, role, beta)};
    };
    auto concat = [](std::vector<TaskSpec> a, std::vector<TaskSpec> b) {
        for (auto& t : b) a.push_back(std::move(t));
        return a;
    };

    switch (kind) {
        case ModelKind::ss:
            if (paradigm == Paradigm::constituency)
                return {task("const", SubTask::const_whole, TaskRole::main, 1)};
            if (paradigm == Paradigm::dependency)
                return {task("dep", SubTask::dep_whole, TaskRole::main, 1)};
            break;
        case ModelKind::smtl:
            if (paradigm == Paradigm::constituency)
                return const_tasks(TaskRole::main, 1);
            if (paradigm == Paradigm::dependency)
                return dep_tasks(TaskRole::main, 1);
            break;
        case ModelKind::dmtl_aux:
            // `paradigm` is the main paradigm; the other one is auxiliary
            if (paradigm == Paradigm::constituency)
                return concat(const_tasks(TaskRole::main, 1),
                              dep_tasks(TaskRole::auxiliary, aux_dep));
            if (paradigm == Paradigm::dependency)
                return concat(const_tasks(TaskRole::auxiliary, aux_const),
                              dep_tasks(TaskRole::main, 1));
            break;
        case ModelKind::dmtl:
            if (paradigm == Paradigm::both)
                return concat(const_tasks(TaskRole::main, 1),
                              dep_tasks(TaskRole::main, 1));
            break;
    }
    throw std::invalid_argument("configure_paradigm: paradigm '" +
                                to_string(paradigm) +
                                "' is not valid for kind '" + to_string(kind) +
                                "'");
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("config: ") + what);
    };
    require(learning_rate > 0, "learning_rate must be positive");
    require(decay >= 0, "decay must be non-negative");
    require(momentum >= 0 && momentum < 1, "momentum must be in [0,1)");
    require(dropout >= 0 && dropout < 1, "dropout must be in [0,1)");
    require(word_dropout >= 0 && word_dropout < 1,
            "word_dropout must be in [0,1)");
    require(batch_size >= 1, "batch_size must be positive");
    require(max_epochs >= 1, "max_epochs must be positive");
    require(word_emb_dim >= 1 && char_emb_dim >= 1 && self_emb_dim >= 1,
            "embedding dims must be positive");
    require(char_hidden >= 2 && char_hidden % 2 == 0,
            "char_hidden must be positive and even");
    require(word_hidden >= 2 && word_hidden % 2 == 0,
            "word_hidden must be positive and even");
    require(layers >= 1, "layers must be positive");
    require(patience >= 0, "patience must be non-negative");
}

std::string TrainConfig::to_kv() const {
    std::ostringstream out;
    out << "learning_rate=" << learning_rate << "\n";
    out << "decay=" << decay << "\n";
    out << "momentum=" << momentum << "\n";
    out << "dropout=" << dropout << "\n";
    out << "word_dropout=" << word_dropout << "\n";
    out << "batch_size=" << batch_size << "\n";
    out << "max_epochs=" << max_epochs << "\n";
    out << "word_emb_dim=" << word_emb_dim << "\n";
    out << "char_emb_dim=" << char_emb_dim << "\n";
    out << "self_emb_dim=" << self_emb_dim << "\n";
    out << "char_hidden=" << char_hidden << "\n";
    out << "word_hidden=" << word_hidden << "\n";
    out << "layers=" << layers << "\n";
    out << "seed=" << seed << "\n";
    out << "patience=" << patience << "\n";
    return out.str();
}

TrainConfig TrainConfig::from_kv(std::string_view text) {
    TrainConfig cfg;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (start > text.size() && line.empty()) break;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        // trim
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t");
        line = line.substr(b, e - b + 1);

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(line_no) +
                                     ": expected key=value, got '" + line +
                                     "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key == "learning_rate") cfg.learning_rate = to_double(value, key);
        else if (key == "decay") cfg.decay = to_double(value, key);
        else if (key == "momentum") cfg.momentum = to_double(value, key);
        else if (key == "dropout") cfg.dropout = to_double(value, key);
        else if (key == "word_dropout") cfg.word_dropout = to_double(value, key);
        else if (key == "batch_size") cfg.batch_size = static_cast<int>(to_int(value, key));
        else if (key == "max_epochs") cfg.max_epochs = static_cast<int>(to_int(value, key));
        else if (key == "word_emb_dim") cfg.word_emb_dim = static_cast<int>(to_int(value, key));
        else if (key == "char_emb_dim") cfg.char_emb_dim = static_cast<int>(to_int(value, key));
        else if (key == "self_emb_dim") cfg.self_emb_dim = static_cast<int>(to_int(value, key));
        else if (key == "char_hidden") cfg.char_hidden = static_cast<int>(to_int(value, key));
        else if (key == "word_hidden") cfg.word_hidden = static_cast<int>(to_int(value, key));
        else if (key == "layers") cfg.layers = static_cast<int>(to_int(value, key));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(value, key));
        else if (key == "patience") cfg.patience = static_cast<int>(to_int(value, key));
        else
            throw std::runtime_error("config: unknown key '" + key + "'");
    }
    return cfg;
}

Vocab Vocab::build(std::vector<std::string> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    Vocab vocab;
    vocab.items.push_back(kUnk);
    for (std::string& v : values)
        if (v != kUnk) vocab.items.push_back(std::move(v));
    for (std::size_t i = 0; i < vocab.items.size(); ++i)
        vocab.ids[vocab.items[i]] = static_cast<int>(i);
    return vocab;
}

ByteVocab ByteVocab::build(const std::vector<std::string>& forms) {
    std::array<bool, 256> seen{};
    for (const std::string& form : forms)
        for (unsigned char c : form) seen[c] = true;
    ByteVocab vocab;
    vocab.ids.fill(0);
    vocab.byte_of_id.push_back(-1);
    for (int b = 0; b < 256; ++b) {
        if (!seen[b]) continue;
        vocab.ids[b] = static_cast<int>(vocab.byte_of_id.size());
        vocab.byte_of_id.push_back(b);
    }
    return vocab;
}

DepPairFilter build_dep_pair_filter(std::span<const TaskSpec> tasks,
                                    const Dataset& data) {
    const int ih = find_task(tasks, SubTask::dep_head);
    const int ir = find_task(tasks, SubTask::dep_rel);
    if (ih < 0 || ir < 0)
        throw std::invalid_argument(
            "build_dep_pair_filter: needs factored dependency tasks");
    std::map<std::string, std::set<std::string>> seen;
    for (const TrainingSentence& s : data)
        for (std::size_t i = 0; i < s.tokens.size(); ++i)
            seen[s.gold[ih][i]].insert(s.gold[ir][i]);
    DepPairFilter filter;
    for (auto& [head, rels] : seen)
        filter[head].assign(rels.begin(), rels.end());
    return filter;
}

bool has_const_tasks(std::span<const TaskSpec> tasks) {
    if (find_task(tasks, SubTask::const_whole) >= 0) return true;
    return find_task(tasks, SubTask::const_n) >= 0 &&
           find_task(tasks, SubTask::const_c) >= 0 &&
           find_task(tasks, SubTask::const_u) >= 0;
}

bool has_dep_tasks(std::span<const TaskSpec> tasks) {
    if (find_task(tasks, SubTask::dep_whole) >= 0) return true;
    return find_task(tasks, SubTask::dep_head) >= 0 &&
           find_task(tasks, SubTask::dep_rel) >= 0;
}

Dataset build_dataset(std::span<const TaskSpec> tasks,
                      const std::vector<LabeledSentence>* const_data,
                      const std::vector<LabeledSentence>* dep_data,
                      Paradigm input_features) {
    std::size_t n_const = 0, n_dep = 0;
    for (const TaskSpec& t : tasks) (t.is_const() ? n_const : n_dep)++;

    if (n_const > 0 && !const_data)
        throw std::invalid_argument(
            "build_dataset: constituency labels required but not given");
    if (n_dep > 0 && !dep_data)
        throw std::invalid_argument(
            "build_dataset: dependency labels required but not given");
    if (n_const == 0) const_data = nullptr;
    if (n_dep == 0) dep_data = nullptr;

    const std::vector<LabeledSentence>* feats = nullptr;
    switch (input_features) {
        case Paradigm::constituency: feats = const_data; break;
        case Paradigm::dependency: feats = dep_data; break;
        case Paradigm::both:
            if (const_data && dep_data)
                throw std::invalid_argument(
                    "build_dataset: two input files; choose which provides "
                    "the input features");
            feats = const_data ? const_data : dep_data;
            break;
    }
    if (!feats)
        throw std::invalid_argument(
            "build_dataset: the requested feature source is absent");

    if (const_data && dep_data && const_data->size() != dep_data->size())
        throw std::invalid_argument(
            "build_dataset: parallel files disagree on sentence count (" +
            std::to_string(const_data->size()) + " vs " +
            std::to_string(dep_data->size()) + ")");

    Dataset data;
    const std::size_t n_sentences = feats->size();
    for (std::size_t s = 0; s < n_sentences; ++s) {
        TrainingSentence out;
        out.tokens = (*feats)[s].tokens;
        auto take = [&](const std::vector<LabeledSentence>& src,
                        std::size_t expect_cols, const char* which) {
            const LabeledSentence& ls = src[s];
            if (ls.columns() != expect_cols)
                throw std::invalid_argument(
                    "build_dataset: sentence " + std::to_string(s + 1) +
                    ": expected " + std::to_string(expect_cols) + " " + which +
                    " label columns, got " + std::to_string(ls.columns()));
            if (ls.tokens.size() != out.tokens.size())
                throw std::invalid_argument(
                    "build_dataset: sentence " + std::to_string(s + 1) +
                    ": token count mismatch between parallel files");
            for (std::size_t i = 0; i < ls.tokens.size(); ++i)
                if (ls.tokens[i].form != out.tokens[i].form)
                    throw std::invalid_argument(
                        "build_dataset: sentence " + std::to_string(s + 1) +
                        ": token " + std::to_string(i + 1) +
                        " differs between parallel files ('" +
                        ls.tokens[i].form + "' vs '" + out.tokens[i].form +
                        "')");
            for (const auto& col : ls.labels) out.gold.push_back(col);
        };
        if (const_data) take(*const_data, n_const, "constituency");
        if (dep_data) take(*dep_data, n_dep, "dependency");
        data.push_back(std::move(out));
    }
    return data;
}

void attach_task_vocabularies(std::vector<TaskSpec>& tasks,
                              const Dataset& data) {
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        std::vector<std::string> values;
        for (const TrainingSentence& s : data) {
            if (s.gold.size() != tasks.size())
                throw std::invalid_argument(
                    "attach_task_vocabularies: gold column count mismatch");
            for (const std::string& v : s.gold[t]) values.push_back(v);
        }
        Vocab vocab = Vocab::build(std::move(values));
        tasks[t].labels = std::move(vocab.items);
        tasks[t].label_ids.clear();
        for (std::size_t i = 0; i < tasks[t].labels.size(); ++i)
            tasks[t].label_ids[tasks[t].labels[i]] = static_cast<int>(i);
    }
}

std::string most_frequent_nonterminal(std::span<const TaskSpec> tasks,
                                      const Dataset& data) {
    const int iw = find_task(tasks, SubTask::const_whole);
    const int ic = find_task(tasks, SubTask::const_c);
    std::map<std::string, std::size_t> counts;
    for (const TrainingSentence& s : data) {
        if (iw >= 0) {
            for (const std::string& v : s.gold[iw]) {
                const ConstLabel label = parse_const_label(v);
                if (!label.lca.empty()) ++counts[label.lca];
            }
        } else if (ic >= 0) {
            for (const std::string& v : s.gold[ic])
                if (v != kAbsent && !v.empty()) ++counts[v];
        }
    }
    std::string best = "X";
    std::size_t best_count = 0;
    for (const auto& [label, count] : counts) {
        if (count > best_count) {  // ties resolve to the smallest label
            best = label;
            best_count = count;
        }
    }
    return best;
}

std::vector<ConstLabel> assemble_const_labels(
    std::span<const TaskSpec> tasks,
    const std::vector<std::vector<std::string>>& columns,
    std::size_t n_tokens) {
    std::vector<ConstLabel> labels(n_tokens);
    const int iw = find_task(tasks, SubTask::const_whole);
    if (iw >= 0) {
        for (std::size_t i = 0; i < n_tokens; ++i)
            labels[i] = parse_const_label(clean_sublabel(columns[iw][i]));
        return labels;
    }
    const int in = find_task(tasks, SubTask::const_n);
    const int ic = find_task(tasks, SubTask::const_c);
    const int iu = find_task(tasks, SubTask::const_u);
    if (in < 0 || ic < 0 || iu < 0)
        throw std::invalid_argument(
            "assemble_const_labels: no constituency tasks");
    for (std::size_t i = 0; i < n_tokens; ++i)
        labels[i] = unfactor_const(clean_sublabel(columns[in][i]),
                                   clean_sublabel(columns[ic][i]),
                                   clean_sublabel(columns[iu][i]));
    return labels;
}

std::vector<DepLabel> assemble_dep_labels(
    std::span<const TaskSpec> tasks,
    const std::vector<std::vector<std::string>>& columns,
    std::size_t n_tokens) {
    std::vector<DepLabel> labels(n_tokens);
    const int iw = find_task(tasks, SubTask::dep_whole);
    if (iw >= 0) {
        for (std::size_t i = 0; i < n_tokens; ++i)
            labels[i] = parse_dep_label(clean_sublabel(columns[iw][i]));
        return labels;
    }
    const int ih = find_task(tasks, SubTask::dep_head);
    const int ir = find_task(tasks, SubTask::dep_rel);
    if (ih < 0 || ir < 0)
        throw std::invalid_argument("assemble_dep_labels: no dependency tasks");
    for (std::size_t i = 0; i < n_tokens; ++i) {
        const std::array<std::string, 2> parts = {
            clean_sublabel(columns[ih][i]), clean_sublabel(columns[ir][i])};
        labels[i] = unfactor_dep(std::span<const std::string>(parts),
                                 DepFactorMode::two_task);
    }
    return labels;
}

// ---------------------------------------------------------------------------
// TaggerModel
// ---------------------------------------------------------------------------

struct TaggerModel::Forward {
    std::vector<int> word_ids, pos_ids;
    std::vector<std::vector<int>> char_ids;
    std::vector<nn::LstmCache> char_f, char_b;
    std::vector<Vec> feats;
    std::vector<Vec> feat_masks;  // empty in eval mode
    std::vector<nn::BiLstmCache> layer_caches;
    std::vector<std::vector<Vec>> layer_out;
    std::vector<std::vector<Vec>> layer_masks;

    const std::vector<Vec>& hidden() const { return layer_out.back(); }
};

void TaggerModel::build(TrainConfig cfg, std::vector<TaskSpec> tasks,
                        Vocab words, ByteVocab chars, Vocab pos,
                        std::string fallback_nonterminal) {
    cfg.validate();
    if (tasks.empty())
        throw std::invalid_argument("TaggerModel: no tasks configured");
    for (TaskSpec& t : tasks) {
        if (t.labels.empty() || t.labels[0] != kUnk)
            throw std::invalid_argument("TaggerModel: task '" + t.name +
                                        "' has no vocabulary");
        if (t.role == TaskRole::main) t.beta = 1.0;
        if (t.beta < 0)
            throw std::invalid_argument("TaggerModel: negative beta for '" +
                                        t.name + "'");
    }
    cfg_ = cfg;
    tasks_ = std::move(tasks);
    words_ = std::move(words);
    chars_ = std::move(chars);
    pos_ = std::move(pos);
    fallback_nonterminal_ = std::move(fallback_nonterminal);

    const int ch2 = cfg_.char_hidden / 2;
    const int feat_dim = cfg_.word_emb_dim + cfg_.char_hidden +
                         cfg_.self_emb_dim;

    word_emb_ = store_.add("word_emb", cfg_.word_emb_dim, words_.size());
    char_emb_ = store_.add("char_emb", cfg_.char_emb_dim, chars_.size());
    pos_emb_ = store_.add("pos_emb", cfg_.self_emb_dim, pos_.size());
    nn::init_uniform(*word_emb_, std::sqrt(3.0 / cfg_.word_emb_dim),
                     nn::name_seed(cfg_.seed, "word_emb"));
    nn::init_uniform(*char_emb_, std::sqrt(3.0 / cfg_.char_emb_dim),
                     nn::name_seed(cfg_.seed, "char_emb"));
    nn::init_uniform(*pos_emb_, std::sqrt(3.0 / cfg_.self_emb_dim),
                     nn::name_seed(cfg_.seed, "pos_emb"));

    char_fwd_ = nn::make_lstm(store_, "char.fwd", cfg_.char_emb_dim, ch2,
                              cfg_.seed);
    char_bwd_ = nn::make_lstm(store_, "char.bwd", cfg_.char_emb_dim, ch2,
                              cfg_.seed);

    layers_.clear();
    for (int l = 0; l < cfg_.layers; ++l) {
        const int input_dim = l == 0 ? feat_dim : cfg_.word_hidden;
        layers_.push_back(nn::make_bilstm(store_, "layer" + std::to_string(l),
                                          input_dim, cfg_.word_hidden / 2,
                                          cfg_.seed));
    }
    shared_params_ = store_.all();
    dep_filter_.reset();

    heads_.clear();
    for (const TaskSpec& t : tasks_) {
        Head head;
        head.w = store_.add("head." + t.name + ".w",
                            static_cast<Eigen::Index>(t.labels.size()),
                            cfg_.word_hidden);
        head.b = store_.add("head." + t.name + ".b",
                            static_cast<Eigen::Index>(t.labels.size()), 1);
        nn::init_glorot(*head.w, nn::name_seed(cfg_.seed, head.w->name));
        heads_.push_back(head);
    }
    oov_gold_ = 0;
}

void TaggerModel::run_forward(const Sentence& sentence,
                              std::mt19937_64* dropout_rng, Forward& f) const {
    if (sentence.empty())
        throw std::invalid_argument("TaggerModel: empty sentence");
    const std::size_t T = sentence.size();
    const bool training = dropout_rng != nullptr;
    const bool train = training && cfg_.dropout > 0.0;  // feature masks
    const int ch2 = cfg_.char_hidden / 2;

    f.word_ids.resize(T);
    f.pos_ids.resize(T);
    f.char_ids.resize(T);
    f.char_f.resize(T);
    f.char_b.resize(T);
    f.feats.resize(T);
    if (train) f.feat_masks.resize(T);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < T; ++i) {
        const Token& token = sentence[i];
        f.word_ids[i] = words_.id(token.form);
        if (training && cfg_.word_dropout > 0.0 &&
            unit(*dropout_rng) < cfg_.word_dropout)
            f.word_ids[i] = 0;
        f.pos_ids[i] = pos_.id(token.pos);
        std::vector<int>& cids = f.char_ids[i];
        cids.clear();
        for (unsigned char c : token.form) cids.push_back(chars_.ids[c]);
        if (cids.empty()) cids.push_back(0);

        std::vector<Vec> ce(cids.size());
        for (std::size_t k = 0; k < cids.size(); ++k)
            ce[k] = char_emb_->value.col(cids[k]);
        std::vector<Vec> ce_rev(ce.rbegin(), ce.rend());
        const std::vector<Vec> hf = nn::lstm_forward(char_fwd_, ce,
                                                     &f.char_f[i]);
        const std::vector<Vec> hb = nn::lstm_forward(char_bwd_, ce_rev,
                                                     &f.char_b[i]);

        Vec feat(cfg_.word_emb_dim + 2 * ch2 + cfg_.self_emb_dim);
        feat << word_emb_->value.col(f.word_ids[i]), hf.back(), hb.back(),
            pos_emb_->value.col(f.pos_ids[i]);
        if (train) {
            f.feat_masks[i] = nn::dropout_mask(feat.size(), cfg_.dropout,
                                               *dropout_rng);
            feat = feat.cwiseProduct(f.feat_masks[i]);
        }
        f.feats[i] = std::move(feat);
    }

    f.layer_caches.resize(layers_.size());
    f.layer_out.resize(layers_.size());
    if (train) f.layer_masks.resize(layers_.size());
    const std::vector<Vec>* xs = &f.feats;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        std::vector<Vec> ys = nn::bilstm_forward(layers_[l], *xs,
                                                 &f.layer_caches[l]);
        if (train) {
            f.layer_masks[l].resize(T);
            for (std::size_t i = 0; i < T; ++i) {
                f.layer_masks[l][i] = nn::dropout_mask(ys[i].size(),
                                                       cfg_.dropout,
                                                       *dropout_rng);
                ys[i] = ys[i].cwiseProduct(f.layer_masks[l][i]);
            }
        }
        f.layer_out[l] = std::move(ys);
        xs = &f.layer_out[l];
    }
}

std::vector<Vec> TaggerModel::encode_tokens(const Sentence& sentence) const {
    Forward f;
    run_forward(sentence, nullptr, f);
    return f.hidden();
}

double TaggerModel::run_losses(const TrainingSentence& sentence,
                               bool with_grads, std::mt19937_64* dropout_rng,
                               std::vector<double>* per_task_losses,
                               const std::vector<double>* weight_override)
    const {
    if (sentence.gold.size() != tasks_.size())
        throw std::invalid_argument(
            "TaggerModel: expected " + std::to_string(tasks_.size()) +
            " gold label columns, got " + std::to_string(sentence.gold.size()));
    if (weight_override && weight_override->size() != tasks_.size())
        throw std::invalid_argument("TaggerModel: weight override size");

    Forward f;
    run_forward(sentence.tokens, dropout_rng, f);
    const std::vector<Vec>& hidden = f.hidden();
    const std::size_t T = sentence.tokens.size();

    std::vector<Vec> dhidden;
    if (with_grads) dhidden.assign(T, Vec::Zero(cfg_.word_hidden));

    if (per_task_losses) per_task_losses->assign(tasks_.size(), 0.0);
    double total = 0.0;
    Vec dlogits;
    for (std::size_t t = 0; t < tasks_.size(); ++t) {
        const TaskSpec& task = tasks_[t];
        if (sentence.gold[t].size() != T)
            throw std::invalid_argument("TaggerModel: gold/token length "
                                        "mismatch for task '" + task.name +
                                        "'");
        const double weight =
            weight_override ? (*weight_override)[t]
                            : (task.role == TaskRole::main ? 1.0 : task.beta);
        const bool need_grad = with_grads && weight != 0.0;
        double task_loss = 0.0;
        for (std::size_t i = 0; i < T; ++i) {
            int gold = task.lookup(sentence.gold[t][i]);
            if (gold < 0) {
                gold = 0;
                ++oov_gold_;
            }
            const Vec logits = heads_[t].w->value * hidden[i] +
                               heads_[t].b->value.col(0);
            task_loss += nn::softmax_cross_entropy(
                logits, gold, need_grad ? &dlogits : nullptr);
            if (need_grad) {
                heads_[t].w->grad +=
                    weight * (dlogits * hidden[i].transpose());
                heads_[t].b->grad.col(0) += weight * dlogits;
                dhidden[i] += weight *
                              (heads_[t].w->value.transpose() * dlogits);
            }
        }
        if (per_task_losses) (*per_task_losses)[t] = task_loss;
        total += weight * task_loss;
    }

    if (with_grads) {
        // encoder backward: layers in reverse, then features
        const bool train = !f.feat_masks.empty();
        std::vector<Vec> dcur = std::move(dhidden);
        for (std::size_t l = layers_.size(); l-- > 0;) {
            if (train)
                for (std::size_t i = 0; i < T; ++i)
                    dcur[i] = dcur[i].cwiseProduct(f.layer_masks[l][i]);
            dcur = nn::bilstm_backward(layers_[l], f.layer_caches[l], dcur);
        }
        const int ch2 = cfg_.char_hidden / 2;
        for (std::size_t i = 0; i < T; ++i) {
            Vec d = train ? dcur[i].cwiseProduct(f.feat_masks[i]).eval()
                          : dcur[i];
            word_emb_->grad.col(f.word_ids[i]) +=
                d.segment(0, cfg_.word_emb_dim);
            pos_emb_->grad.col(f.pos_ids[i]) +=
                d.segment(cfg_.word_emb_dim + 2 * ch2, cfg_.self_emb_dim);

            const std::vector<int>& cids = f.char_ids[i];
            const std::size_t n = cids.size();
            std::vector<Vec> dh(n, Vec::Zero(ch2));
            dh[n - 1] = d.segment(cfg_.word_emb_dim, ch2);
            const std::vector<Vec> dxf =
                nn::lstm_backward(char_fwd_, f.char_f[i], dh);
            for (std::size_t k = 0; k < n; ++k)
                char_emb_->grad.col(cids[k]) += dxf[k];
            dh.assign(n, Vec::Zero(ch2));
            dh[n - 1] = d.segment(cfg_.word_emb_dim + ch2, ch2);
            const std::vector<Vec> dxb =
                nn::lstm_backward(char_bwd_, f.char_b[i], dh);
            for (std::size_t k = 0; k < n; ++k)
                char_emb_->grad.col(cids[n - 1 - k]) += dxb[k];
        }
    }
    return total;
}

double TaggerModel::loss(const TrainingSentence& sentence,
                         std::vector<double>* per_task_losses,
                         const std::vector<double>* weight_override) const {
    return run_losses(sentence, false, nullptr, per_task_losses,
                      weight_override);
}

double TaggerModel::accumulate_gradients(
    const TrainingSentence& sentence, std::mt19937_64* dropout_rng,
    std::vector<double>* per_task_losses,
    const std::vector<double>* weight_override) {
    return run_losses(sentence, true, dropout_rng, per_task_losses,
                      weight_override);
}

std::vector<std::vector<std::string>> TaggerModel::predict_labels(
    const Sentence& sentence) const {
    Forward f;
    run_forward(sentence, nullptr, f);
    const std::vector<Vec>& hidden = f.hidden();
    std::vector<std::vector<std::string>> out(tasks_.size());
    for (std::size_t t = 0; t < tasks_.size(); ++t) {
        out[t].reserve(sentence.size());
        for (const Vec& h : hidden) {
            const Vec logits = heads_[t].w->value * h +
                               heads_[t].b->value.col(0);
            out[t].push_back(tasks_[t].labels[nn::argmax(logits)]);
        }
    }

    const int ih = find_task(tasks_, SubTask::dep_head);
    const int ir = find_task(tasks_, SubTask::dep_rel);
    if (dep_filter_ && ih >= 0 && ir >= 0) {
        const TaskSpec& rel_task = tasks_[ir];
        for (std::size_t i = 0; i < sentence.size(); ++i) {
            const auto allowed = dep_filter_->find(out[ih][i]);
            if (allowed == dep_filter_->end() || allowed->second.empty())
                continue;  // unseen head sub-label: leave unconstrained
            const Vec logits = heads_[ir].w->value * hidden[i] +
                               heads_[ir].b->value.col(0);
            int best = -1;
            for (const std::string& rel : allowed->second) {
                const int id = rel_task.lookup(rel);
                if (id < 0) continue;
                if (best < 0 || logits(id) > logits(best)) best = id;
            }
            if (best >= 0) out[ir][i] = rel_task.labels[best];
        }
    }
    return out;
}

std::vector<nn::Parameter*> TaggerModel::head_parameters(
    std::size_t task_index) const {
    return {heads_.at(task_index).w, heads_.at(task_index).b};
}

std::uint64_t TaggerModel::shared_checksum() const {
    return nn::checksum(shared_params_);
}

DecodedPrediction decode_prediction(
    const TaggerModel& model,
    const std::vector<std::vector<std::string>>& task_labels,
    const Sentence& sentence) {
    DecodedPrediction out;
    const auto& tasks = model.tasks();
    if (has_const_tasks(tasks)) {
        const auto labels =
            assemble_const_labels(tasks, task_labels, sentence.size());
        ConstDecodeResult res = decode_const(
            labels, sentence,
            ConstDecodeOptions{model.fallback_nonterminal()});
        out.const_tree = std::move(res.tree);
        out.const_repairs = res.repairs;
    }
    if (has_dep_tasks(tasks)) {
        const auto labels =
            assemble_dep_labels(tasks, task_labels, sentence.size());
        DepDecodeResult res = decode_dep(labels, sentence);
        out.dep_tree = std::move(res.tree);
        out.dep_repairs = res.repairs;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Checkpoint container
// ---------------------------------------------------------------------------

namespace {
constexpr char kModelMagic[] = "SLPARSEMODEL1\n";
}

void TaggerModel::save(const std::string& path) const {
    nlohmann::json header;
    header["format"] = "slparse-model";
    header["version"] = 1;
    nlohmann::json cfg;
    cfg["learning_rate"] = cfg_.learning_rate;
    cfg["decay"] = cfg_.decay;
    cfg["momentum"] = cfg_.momentum;
    cfg["dropout"] = cfg_.dropout;
    cfg["word_dropout"] = cfg_.word_dropout;
    cfg["batch_size"] = cfg_.batch_size;
    cfg["max_epochs"] = cfg_.max_epochs;
    cfg["word_emb_dim"] = cfg_.word_emb_dim;
    cfg["char_emb_dim"] = cfg_.char_emb_dim;
    cfg["self_emb_dim"] = cfg_.self_emb_dim;
    cfg["char_hidden"] = cfg_.char_hidden;
    cfg["word_hidden"] = cfg_.word_hidden;
    cfg["layers"] = cfg_.layers;
    cfg["seed"] = cfg_.seed;
    cfg["patience"] = cfg_.patience;
    header["config"] = cfg;
    header["fallback_nonterminal"] = fallback_nonterminal_;
    header["words"] = words_.items;
    header["pos"] = pos_.items;
    std::vector<int> char_bytes(chars_.byte_of_id.begin() + 1,
                                chars_.byte_of_id.end());
    header["chars"] = char_bytes;
    nlohmann::json jtasks = nlohmann::json::array();
    for (const TaskSpec& t : tasks_) {
        nlohmann::json jt;
        jt["name"] = t.name;
        jt["sub"] = to_string(t.sub);
        jt["role"] = t.role == TaskRole::main ? "main" : "aux";
        jt["beta"] = t.beta;
        jt["labels"] = t.labels;
        jtasks.push_back(std::move(jt));
    }
    header["tasks"] = std::move(jtasks);
    if (dep_filter_) header["dep_filter"] = *dep_filter_;
    nlohmann::json jtensors = nlohmann::json::array();
    for (const nn::Parameter* p : store_.all()) {
        nlohmann::json jt;
        jt["name"] = p->name;
        jt["rows"] = p->value.rows();
        jt["cols"] = p->value.cols();
        jtensors.push_back(std::move(jt));
    }
    header["tensors"] = std::move(jtensors);

    const std::string header_text = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kModelMagic, sizeof(kModelMagic) - 1);
    const std::uint64_t len = header_text.size();
    unsigned char len_bytes[8];
    for (int i = 0; i < 8; ++i)
        len_bytes[i] = static_cast<unsigned char>((len >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(len_bytes), 8);
    out.write(header_text.data(),
              static_cast<std::streamsize>(header_text.size()));
    for (const nn::Parameter* p : store_.all())
        out.write(reinterpret_cast<const char*>(p->value.data()),
                  static_cast<std::streamsize>(sizeof(double) *
                                               p->value.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

TaggerModel TaggerModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    const std::size_t magic_len = sizeof(kModelMagic) - 1;
    if (content.size() < magic_len + 8 ||
        content.compare(0, magic_len, kModelMagic) != 0)
        throw std::runtime_error("not a model file: " + path);
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i)
        len |= static_cast<std::uint64_t>(
                   static_cast<unsigned char>(content[magic_len + i]))
               << (8 * i);
    if (content.size() < magic_len + 8 + len)
        throw std::runtime_error("truncated model header: " + path);
    const nlohmann::json header =
        nlohmann::json::parse(content.substr(magic_len + 8, len));
    if (header.at("format") != "slparse-model" || header.at("version") != 1)
        throw std::runtime_error("unsupported model format in " + path);

    TrainConfig cfg;
    const nlohmann::json& jc = header.at("config");
    cfg.learning_rate = jc.at("learning_rate");
    cfg.decay = jc.at("decay");
    cfg.momentum = jc.at("momentum");
    cfg.dropout = jc.at("dropout");
    cfg.word_dropout = jc.at("word_dropout");
    cfg.batch_size = jc.at("batch_size");
    cfg.max_epochs = jc.at("max_epochs");
    cfg.word_emb_dim = jc.at("word_emb_dim");
    cfg.char_emb_dim = jc.at("char_emb_dim");
    cfg.self_emb_dim = jc.at("self_emb_dim");
    cfg.char_hidden = jc.at("char_hidden");
    cfg.word_hidden = jc.at("word_hidden");
    cfg.layers = jc.at("layers");
    cfg.seed = jc.at("seed");
    cfg.patience = jc.at("patience");

    auto load_vocab = [](const nlohmann::json& items) {
        Vocab vocab;
        vocab.items = items.get<std::vector<std::string>>();
        for (std::size_t i = 0; i < vocab.items.size(); ++i)
            vocab.ids[vocab.items[i]] = static_cast<int>(i);
        return vocab;
    };
    Vocab words = load_vocab(header.at("words"));
    Vocab pos = load_vocab(header.at("pos"));
    ByteVocab chars;
    chars.ids.fill(0);
    chars.byte_of_id.push_back(-1);
    for (int b : header.at("chars").get<std::vector<int>>()) {
        chars.ids[static_cast<unsigned char>(b)] =
            static_cast<int>(chars.byte_of_id.size());
        chars.byte_of_id.push_back(b);
    }

    std::vector<TaskSpec> tasks;
    for (const nlohmann::json& jt : header.at("tasks")) {
        TaskSpec t;
        t.name = jt.at("name");
        t.sub = parse_subtask(jt.at("sub").get<std::string>());
        t.role = jt.at("role") == "main" ? TaskRole::main : TaskRole::auxiliary;
        t.beta = jt.at("beta");
        t.labels = jt.at("labels").get<std::vector<std::string>>();
        for (std::size_t i = 0; i < t.labels.size(); ++i)
            t.label_ids[t.labels[i]] = static_cast<int>(i);
        tasks.push_back(std::move(t));
    }

    TaggerModel model;
    model.build(cfg, std::move(tasks), std::move(words), std::move(chars),
                std::move(pos), header.at("fallback_nonterminal"));
    if (header.contains("dep_filter"))
        model.set_dep_filter(header.at("dep_filter").get<DepPairFilter>());

    const std::vector<nn::Parameter*> params = model.store_.all();
    const nlohmann::json& jtensors = header.at("tensors");
    if (jtensors.size() != params.size())
        throw std::runtime_error("model tensor manifest mismatch in " + path);
    std::size_t offset = magic_len + 8 + len;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const nlohmann::json& jt = jtensors[i];
        if (jt.at("name") != params[i]->name ||
            jt.at("rows") != params[i]->value.rows() ||
            jt.at("cols") != params[i]->value.cols())
            throw std::runtime_error("model tensor mismatch at '" +
                                     params[i]->name + "' in " + path);
        const std::size_t bytes =
            sizeof(double) * static_cast<std::size_t>(params[i]->value.size());
        if (offset + bytes > content.size())
            throw std::runtime_error("truncated model data: " + path);
        std::memcpy(params[i]->value.data(), content.data() + offset, bytes);
        offset += bytes;
    }
    if (offset != content.size())
        throw std::runtime_error("trailing bytes in model file: " + path);
    return model;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

SelectionCriterion default_criterion(std::span<const TaskSpec> tasks) {
    bool main_const = false, main_dep = false;
    for (const TaskSpec& t : tasks)
        if (t.role == TaskRole::main)
            (t.is_const() ? main_const : main_dep) = true;
    if (main_const && main_dep) return SelectionCriterion::harmonic;
    if (main_dep) return SelectionCriterion::las;
    return SelectionCriterion::f1;
}

TrainResult train(TaggerModel& model, const Dataset& train_data,
                  const Dataset& dev_data, SelectionCriterion criterion,
                  const std::string& checkpoint_path,
                  std::ostream* log_stream) {
    if (train_data.empty())
        throw std::invalid_argument("train: empty training set");
    if (dev_data.empty())
        throw std::invalid_argument("train: empty development set");
    const TrainConfig& cfg = model.config();
    const auto& tasks = model.tasks();

    const bool can_const = has_const_tasks(tasks);
    const bool can_dep = has_dep_tasks(tasks);
    if ((criterion == SelectionCriterion::f1 && !can_const) ||
        (criterion == SelectionCriterion::las && !can_dep) ||
        (criterion == SelectionCriterion::harmonic && !(can_const && can_dep)))
        throw std::invalid_argument(
            "train: selection criterion needs tasks the model lacks");

    // gold dev structures, decoded once from the gold label columns
    std::vector<Sentence> dev_sentences;
    std::vector<ConstTree> gold_const;
    std::vector<DepTree> gold_dep;
    for (const TrainingSentence& s : dev_data) {
        dev_sentences.push_back(s.tokens);
        if (can_const)
            gold_const.push_back(
                decode_const(
                    assemble_const_labels(tasks, s.gold, s.tokens.size()),
                    s.tokens,
                    ConstDecodeOptions{model.fallback_nonterminal()})
                    .tree);
        if (can_dep)
            gold_dep.push_back(
                decode_dep(assemble_dep_labels(tasks, s.gold, s.tokens.size()),
                           s.tokens)
                    .tree);
    }

    nn::SgdMomentum optimizer(cfg.momentum);
    const std::vector<nn::Parameter*> params = model.parameters();
    const EvalParams eval_params = EvalParams::none();

    TrainResult result;
    int since_best = 0;
    std::vector<std::size_t> order(train_data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = cfg.learning_rate / (1.0 + cfg.decay * epoch);
        std::mt19937_64 shuffle_rng(
            nn::name_seed(cfg.seed, "shuffle." + std::to_string(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        EpochLog elog;
        elog.epoch = epoch;
        elog.lr = lr;
        elog.task_losses.assign(tasks.size(), 0.0);

        std::vector<double> sentence_losses;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(),
                         start + static_cast<std::size_t>(cfg.batch_size));
            model.zero_grads();
            for (std::size_t k = start; k < stop; ++k) {
                const std::size_t idx = order[k];
                std::mt19937_64 dropout_rng(nn::name_seed(
                    cfg.seed, "dropout." + std::to_string(epoch) + "." +
                                  std::to_string(idx)));
                const bool stochastic =
                    cfg.dropout > 0.0 || cfg.word_dropout > 0.0;
                elog.train_loss += model.accumulate_gradients(
                    train_data[idx], stochastic ? &dropout_rng : nullptr,
                    &sentence_losses);
                for (std::size_t t = 0; t < tasks.size(); ++t)
                    elog.task_losses[t] += sentence_losses[t];
            }
            optimizer.step(params, lr);
        }

        // development evaluation
        std::vector<ConstTree> pred_const;
        std::vector<DepTree> pred_dep;
        for (const TrainingSentence& s : dev_data) {
            const auto labels = model.predict_labels(s.tokens);
            const DecodedPrediction decoded =
                decode_prediction(model, labels, s.tokens);
            if (can_const) pred_const.push_back(*decoded.const_tree);
            if (can_dep) pred_dep.push_back(*decoded.dep_tree);
        }
        if (can_const) {
            const ScoreReport report =
                bracket_f1(gold_const, pred_const, eval_params);
            elog.dev_f1 = report.constituency->f1;
        }
        if (can_dep) {
            const ScoreReport report =
                uas_las(gold_dep, pred_dep, dev_sentences, eval_params);
            elog.dev_uas = report.dependency->uas;
            elog.dev_las = report.dependency->las;
        }
        switch (criterion) {
            case SelectionCriterion::f1: elog.dev_metric = elog.dev_f1; break;
            case SelectionCriterion::las:
                elog.dev_metric = elog.dev_las;
                break;
            case SelectionCriterion::harmonic:
                elog.dev_metric = harmonic_mean(elog.dev_las, elog.dev_f1);
                break;
        }

        if (elog.dev_metric > result.best_metric) {
            result.best_metric = elog.dev_metric;
            result.best_epoch = epoch;
            elog.improved = true;
            since_best = 0;
            if (!checkpoint_path.empty()) model.save(checkpoint_path);
        } else {
            ++since_best;
        }
        elog.shared_checksum = model.shared_checksum();

        if (log_stream) {
            (*log_stream) << "epoch " << epoch << " lr " << lr << " loss "
                          << elog.train_loss;
            if (elog.dev_f1 >= 0) (*log_stream) << " dev_f1 " << elog.dev_f1;
            if (elog.dev_uas >= 0)
                (*log_stream) << " dev_uas " << elog.dev_uas << " dev_las "
                              << elog.dev_las;
            (*log_stream) << " metric " << elog.dev_metric
                          << (elog.improved ? " *" : "") << "\n";
        }
        result.epochs.push_back(std::move(elog));

        if (result.best_metric >= 1.0 - 1e-12) break;  // cannot improve
        if (cfg.patience > 0 && since_best >= cfg.patience) break;
    }
    return result;
}

}  // namespace slparse
