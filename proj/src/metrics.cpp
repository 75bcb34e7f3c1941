#include "slparse/metrics.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace slparse {

namespace {

const std::set<std::string> kPtbPunctPos = {".", ",", ":", "``", "''",
                                            "-NONE-"};

// Recursive span collection. Returns the subtree's post-filter width;
// appends the node's span unless deleted, preterminal, or empty.
int collect_spans(const ConstNode& node, const EvalParams& params,
                  int next_index, std::vector<LabeledSpan>& out) {
    if (node.is_leaf())
        return params.delete_pos.count(node.label) ? 0 : 1;

    int width = 0;
    for (const ConstNode& child : node.children)
        width += collect_spans(child, params, next_index + width, out);
    if (width > 0 && !params.delete_labels.count(node.label))
        out.push_back(LabeledSpan{params.canonical(node.label), next_index,
                                  next_index + width - 1});
    return width;
}

Sentence filtered_tokens(const ConstTree& tree, const EvalParams& params) {
    Sentence kept;
    for (const Token& token : tree.tokens())
        if (!params.delete_pos.count(token.pos)) kept.push_back(token);
    return kept;
}

std::size_t multiset_intersection(const std::vector<LabeledSpan>& a,
                                  const std::vector<LabeledSpan>& b) {
    std::size_t matched = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++matched;
            ++i;
            ++j;
        }
    }
    return matched;
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void append_kv(std::ostringstream& out, const char* key, double value) {
    out << key << "=" << value << "\n";
}

}  // namespace

EvalParams EvalParams::collins() {
    EvalParams params;
    params.delete_labels = {"TOP"};
    params.delete_pos = kPtbPunctPos;
    params.equivalent_labels = {{"PRT", "ADVP"}};
    params.punctuation_pos = kPtbPunctPos;
    return params;
}

EvalParams EvalParams::spmrl() {
    EvalParams params;
    params.delete_labels = {"TOP", "ROOT", "VROOT"};
    return params;
}

EvalParams EvalParams::none() { return {}; }

EvalParams EvalParams::from_file_text(std::string_view text) {
    EvalParams params;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string line(text.substr(start, end - start));
        start = end + 1;
        ++line_no;
        if (start > text.size() && line.empty()) break;

        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream in(line);
        std::string directive;
        if (!(in >> directive)) continue;
        std::string a, b;
        if (directive == "DELETE_LABEL" && (in >> a)) {
            params.delete_labels.insert(a);
        } else if (directive == "DELETE_POS" && (in >> a)) {
            params.delete_pos.insert(a);
            params.punctuation_pos.insert(a);
        } else if (directive == "EQ_LABEL" && (in >> a >> b)) {
            params.equivalent_labels[b] = a;
        } else {
            throw std::runtime_error("parameter file line " +
                                     std::to_string(line_no) +
                                     ": bad directive '" + line + "'");
        }
    }
    // idempotency: canonical targets must not be remapped themselves
    for (const auto& [alias, canon] : params.equivalent_labels)
        if (params.equivalent_labels.count(canon))
            throw std::runtime_error("EQ_LABEL chains are not allowed ('" +
                                     alias + "' -> '" + canon + "' -> ...)");
    return params;
}

std::string EvalParams::canonical(const std::string& label) const {
    const auto it = equivalent_labels.find(label);
    return it == equivalent_labels.end() ? label : it->second;
}

std::vector<LabeledSpan> extract_spans(const ConstTree& tree,
                                       const EvalParams& params) {
    std::vector<LabeledSpan> spans;
    collect_spans(tree.root, params, 1, spans);
    std::sort(spans.begin(), spans.end());
    return spans;
}

ScoreReport bracket_f1(const std::vector<ConstTree>& gold,
                       const std::vector<ConstTree>& pred,
                       const EvalParams& params) {
    if (gold.size() != pred.size())
        throw std::invalid_argument("bracket_f1: sentence count mismatch (" +
                                    std::to_string(gold.size()) + " gold vs " +
                                    std::to_string(pred.size()) + " pred)");
    ConstScore score;
    score.sentences = gold.size();
    std::size_t exact = 0;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        if (filtered_tokens(gold[s], params) !=
            filtered_tokens(pred[s], params)) {
            ++score.skipped;
            continue;
        }
        const std::vector<LabeledSpan> g = extract_spans(gold[s], params);
        const std::vector<LabeledSpan> p = extract_spans(pred[s], params);
        score.gold_spans += g.size();
        score.pred_spans += p.size();
        score.matched += multiset_intersection(g, p);
        if (g == p) ++exact;
    }
    score.precision = ratio(score.matched, score.pred_spans);
    score.recall = ratio(score.matched, score.gold_spans);
    score.f1 = harmonic_mean(score.precision, score.recall);
    score.exact_match = ratio(exact, score.sentences - score.skipped);
    ScoreReport report;
    report.constituency = score;
    return report;
}

ScoreReport uas_las(const std::vector<DepTree>& gold,
                    const std::vector<DepTree>& pred,
                    const std::vector<Sentence>& sentences,
                    const EvalParams& params) {
    if (gold.size() != pred.size() || gold.size() != sentences.size())
        throw std::invalid_argument("uas_las: sentence count mismatch");
    DepScore score;
    score.sentences = gold.size();
    std::size_t head_ok = 0, both_ok = 0;
    for (std::size_t s = 0; s < gold.size(); ++s) {
        const std::size_t n = sentences[s].size();
        if (gold[s].size() != n || pred[s].size() != n)
            throw std::invalid_argument("uas_las: token count mismatch in "
                                        "sentence " + std::to_string(s + 1));
        for (std::size_t i = 0; i < n; ++i) {
            if (params.punctuation_pos.count(sentences[s][i].pos)) {
                ++score.excluded_tokens;
                continue;
            }
            ++score.scored_tokens;
            if (gold[s].heads[i] == pred[s].heads[i]) {
                ++head_ok;
                if (gold[s].rels[i] == pred[s].rels[i]) ++both_ok;
            }
        }
    }
    score.uas = ratio(head_ok, score.scored_tokens);
    score.las = ratio(both_ok, score.scored_tokens);
    ScoreReport report;
    report.dependency = score;
    return report;
}

double harmonic_mean(double a, double b) {
    if (a + b == 0.0) return 0.0;
    return 2.0 * a * b / (a + b);
}

std::string ScoreReport::to_text() const {
    std::ostringstream out;
    out.precision(4);
    out << std::fixed;
    if (constituency) {
        const ConstScore& c = *constituency;
        out << "Constituency: P=" << c.precision << " R=" << c.recall
            << " F1=" << c.f1 << " exact=" << c.exact_match << " ("
            << c.matched << "/" << c.pred_spans << " pred, " << c.matched
            << "/" << c.gold_spans << " gold, " << c.sentences << " sentences";
        if (c.skipped) out << ", " << c.skipped << " skipped";
        out << ")\n";
    }
    if (dependency) {
        const DepScore& d = *dependency;
        out << "Dependency: UAS=" << d.uas << " LAS=" << d.las << " ("
            << d.scored_tokens << " scored, " << d.excluded_tokens
            << " excluded, " << d.sentences << " sentences)\n";
    }
    if (constituency && dependency)
        out << "Harmonic mean (LAS, F1): "
            << harmonic_mean(dependency->las, constituency->f1) << "\n";
    return out.str();
}

std::string ScoreReport::to_kv() const {
    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    if (constituency) {
        const ConstScore& c = *constituency;
        append_kv(out, "const.precision", c.precision);
        append_kv(out, "const.recall", c.recall);
        append_kv(out, "const.f1", c.f1);
        append_kv(out, "const.exact_match", c.exact_match);
        out << "const.matched=" << c.matched << "\n";
        out << "const.gold_spans=" << c.gold_spans << "\n";
        out << "const.pred_spans=" << c.pred_spans << "\n";
        out << "const.sentences=" << c.sentences << "\n";
        out << "const.skipped=" << c.skipped << "\n";
    }
    if (dependency) {
        const DepScore& d = *dependency;
        append_kv(out, "dep.uas", d.uas);
        append_kv(out, "dep.las", d.las);
        out << "dep.scored_tokens=" << d.scored_tokens << "\n";
        out << "dep.excluded_tokens=" << d.excluded_tokens << "\n";
        out << "dep.sentences=" << d.sentences << "\n";
    }
    if (constituency && dependency)
        append_kv(out, "harmonic_mean",
                  harmonic_mean(dependency->las, constituency->f1));
    return out.str();
}

}  // namespace slparse
