#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "slparse/const_tree.hpp"
#include "slparse/dep_tree.hpp"
#include "slparse/token.hpp"

namespace slparse {

/// Evaluation parameters in the style of bracketing-scorer parameter
/// files. delete_labels removes matching brackets (children promoted);
/// delete_pos removes leaves with matching tags before spans are
/// indexed; equivalent_labels maps labels to a canonical form;
/// punctuation_pos excludes tokens from dependency scoring.
struct EvalParams {
    std::set<std::string> delete_labels;
    std::set<std::string> delete_pos;
    std::map<std::string, std::string> equivalent_labels;
    std::set<std::string> punctuation_pos;

    /// PTB-style: deletes TOP and punctuation tags, ADVP/PRT equivalent.
    static EvalParams collins();
    /// Root-wrapper deletion only; nothing else removed.
    static EvalParams spmrl();
    /// No deletions, no equivalences.
    static EvalParams none();

    /// Parses one directive per line: DELETE_LABEL X, DELETE_POS X,
    /// EQ_LABEL CANONICAL ALIAS. '#' starts a comment. delete_pos doubles
    /// as the dependency punctuation set.
    static EvalParams from_file_text(std::string_view text);

    std::string canonical(const std::string& label) const;
};

struct ConstScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double exact_match = 0.0;
    std::size_t matched = 0;
    std::size_t gold_spans = 0;
    std::size_t pred_spans = 0;
    std::size_t sentences = 0;
    std::size_t skipped = 0;  // token mismatch after filtering
};

struct DepScore {
    double uas = 0.0;
    double las = 0.0;
    std::size_t scored_tokens = 0;
    std::size_t excluded_tokens = 0;
    std::size_t sentences = 0;
};

struct ScoreReport {
    std::optional<ConstScore> constituency;
    std::optional<DepScore> dependency;

    std::string to_text() const;
    /// Machine-readable key=value lines.
    std::string to_kv() const;
};

/// Labeled span over post-deletion token indices (1-based, inclusive).
struct LabeledSpan {
    std::string label;
    int start = 0;
    int end = 0;

    friend auto operator<=>(const LabeledSpan&, const LabeledSpan&) = default;
};

/// Spans of all nonterminals (preterminals excluded) after applying
/// params; sorted, duplicates kept (multiset semantics).
std::vector<LabeledSpan> extract_spans(const ConstTree& tree,
                                       const EvalParams& params);

/// Corpus bracketing precision/recall/F1. Requires equal sentence
/// counts; sentences whose token sequences disagree after delete_pos
/// filtering are skipped and counted.
ScoreReport bracket_f1(const std::vector<ConstTree>& gold,
                       const std::vector<ConstTree>& pred,
                       const EvalParams& params);

/// UAS/LAS over tokens whose PoS is not in punctuation_pos. Throws on
/// length mismatch.
ScoreReport uas_las(const std::vector<DepTree>& gold,
                    const std::vector<DepTree>& pred,
                    const std::vector<Sentence>& sentences,
                    const EvalParams& params);

/// 2ab/(a+b); 0 when both are 0.
double harmonic_mean(double a, double b);

}  // namespace slparse
