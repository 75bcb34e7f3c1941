#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slparse/const_tree.hpp"
#include "slparse/token.hpp"

namespace slparse {

/// Per-token constituency label (n, c, u).
///   level (n): relative change of the number of tree ancestors shared
///              with the next token; the first token stores the absolute
///              count, the last token stores nothing.
///   lca   (c): label of the lowest ancestor shared with the next token;
///              a '+'-joined chain when that ancestor is a collapsed
///              unary chain. Empty = absent.
///   unary (u): '+'-joined top-to-bottom chain of nonterminals that
///              dominate exactly this token, sitting between its
///              preterminal and the first ancestor spanning more.
///              Empty = absent.
struct ConstLabel {
    std::optional<int> level;
    std::string lca;
    std::string unary;

    friend bool operator==(const ConstLabel&, const ConstLabel&) = default;
};

/// Serialized form "n@c@u", always three fields, absent -> "NONE".
std::string to_string(const ConstLabel& label);

/// Total inverse of to_string: malformed or missing fields become absent
/// components (repairs are the decoder's job).
ConstLabel parse_const_label(std::string_view text);

/// Splits a label into its (n, c, u) sub-label strings.
std::array<std::string, 3> factor_const(const ConstLabel& label);

/// Merges sub-label strings back into a label; the components need never
/// have been observed together.
ConstLabel unfactor_const(std::string_view n, std::string_view c,
                          std::string_view u);

/// Linearizes a tree into one label per token. Unary chains internal to
/// the tree are collapsed into '+'-joined components, so every valid
/// tree round-trips through decode_const. Throws std::invalid_argument
/// on an empty tree and std::runtime_error if a nonterminal or PoS tag
/// collides with the reserved "NONE" component or contains '@'.
std::vector<ConstLabel> encode_const(const ConstTree& tree);

struct ConstRepairReport {
    std::size_t clamped_levels = 0;       // running level fell outside the
                                          // valid range and was clamped
    std::size_t forced_min_level = 0;     // level component absent at a
                                          // non-final token; forced to 1
    std::size_t conflicting_nonterminals = 0;  // two tokens labeled one node
                                               // differently; leftmost wins
    std::size_t missing_nonterminals = 0;      // absent lca or unlabeled node;
                                               // fallback label substituted

    std::size_t total() const {
        return clamped_levels + forced_min_level + conflicting_nonterminals +
               missing_nonterminals;
    }

    ConstRepairReport& operator+=(const ConstRepairReport& other);
};

struct ConstDecodeOptions {
    // Substituted for absent/unknown nonterminals; typically the most
    // frequent nonterminal of the training data.
    std::string fallback_label = "X";
};

struct ConstDecodeResult {
    ConstTree tree;
    ConstRepairReport repairs;
};

/// Total decoder: any label sequence of the sentence's length yields a
/// valid tree over exactly these tokens. Throws std::invalid_argument
/// only when labels.size() != sentence.size() or the sentence is empty.
ConstDecodeResult decode_const(std::span<const ConstLabel> labels,
                               const Sentence& sentence,
                               const ConstDecodeOptions& opts = {});

}  // namespace slparse
