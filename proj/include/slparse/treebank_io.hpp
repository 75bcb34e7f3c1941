#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "slparse/const_tree.hpp"
#include "slparse/dep_tree.hpp"
#include "slparse/token.hpp"

namespace slparse {

/// Error raised by any reader in this module. line/column are 1-based;
/// column is 0 when it does not apply.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::string message, std::size_t line, std::size_t column = 0)
        : std::runtime_error("line " + std::to_string(line) +
                             (column ? ":" + std::to_string(column) : "") +
                             ": " + message),
          line_(line),
          column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

  private:
    std::size_t line_;
    std::size_t column_;
};

// ---------------------------------------------------------------------------
// Bracketed constituency treebanks
// ---------------------------------------------------------------------------

struct BracketReadOptions {
    // A single outer bracket whose label is one of these is stripped.
    bool strip_wrapper = true;
    std::vector<std::string> wrapper_labels = {"", "TOP"};
    // When a wrapper is kept but unlabeled, it is renamed to this.
    std::string root_label = "TOP";
};

struct BracketWriteOptions {
    bool add_wrapper = false;
    std::string wrapper_label = "TOP";
};

/// Parses a sequence of parenthesized trees. Trees may share a line or
/// span several; tokens are whitespace-delimited; the innermost
/// `(TAG word)` pair is the preterminal.
std::vector<ConstTree> read_bracketed(std::string_view text,
                                      const BracketReadOptions& opts = {});

/// Single-line bracketed form, inverse of read_bracketed.
std::string write_bracketed(const ConstTree& tree,
                            const BracketWriteOptions& opts = {});

// ---------------------------------------------------------------------------
// CoNLL-style dependency treebanks
// ---------------------------------------------------------------------------

/// 1-based column positions; defaults follow CoNLL-X.
struct ConllColumns {
    int id = 1;
    int form = 2;
    int pos = 5;
    int head = 7;
    int deprel = 8;
};

struct ConllSentence {
    Sentence tokens;
    DepTree tree;
};

struct ConllReadResult {
    std::vector<ConllSentence> sentences;
    // Structural violations (multiple roots, cycles, ...) per sentence;
    // repairing them is the decoder's job, not the reader's.
    std::vector<std::string> warnings;
};

ConllReadResult read_conll(std::string_view text, const ConllColumns& cols = {});

/// One sentence in CoNLL form; unowned columns are "_".
std::string write_conll(const Sentence& sentence, const DepTree& tree,
                        const ConllColumns& cols = {});

std::string write_conll_file(const std::vector<ConllSentence>& sentences,
                             const ConllColumns& cols = {});

// ---------------------------------------------------------------------------
// Label-sequence TSV
// ---------------------------------------------------------------------------

/// One token per line: form<TAB>pos<TAB>label1[<TAB>label2...]; a blank
/// line ends a sentence. labels is column-major: labels[c][i] is column c
/// of token i. Column count is constant within a file.
struct LabeledSentence {
    Sentence tokens;
    std::vector<std::vector<std::string>> labels;

    std::size_t columns() const { return labels.size(); }

    friend bool operator==(const LabeledSentence&, const LabeledSentence&) =
        default;
};

std::vector<LabeledSentence> read_labels(std::string_view text);

std::string write_labels(const std::vector<LabeledSentence>& sentences);

/// Prediction input: like read_labels but label columns are optional and
/// ignored; only form and pos are kept.
std::vector<Sentence> read_tagged_sentences(std::string_view text);

// ---------------------------------------------------------------------------

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace slparse
