#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "slparse/token.hpp"

namespace slparse {

/// Node of a phrase-structure tree. A preterminal is represented as a
/// single leaf node: `label` holds the PoS tag and `form` the word.
/// Internal nodes have a nonterminal `label`, an empty `form` and at
/// least one child.
struct ConstNode {
    std::string label;
    std::string form;
    std::vector<ConstNode> children;

    bool is_leaf() const { return children.empty(); }

    friend bool operator==(const ConstNode&, const ConstNode&) = default;
};

/// Rooted constituency tree over a token sequence. Leaves, read left to
/// right, are the sentence tokens; unary chains are preserved as-is.
struct ConstTree {
    ConstNode root;

    /// Tokens of the sentence, left to right.
    Sentence tokens() const;

    /// Number of tokens.
    std::size_t size() const;

    friend bool operator==(const ConstTree&, const ConstTree&) = default;
};

}  // namespace slparse
