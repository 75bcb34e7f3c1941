#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace slparse {

/// Dependency tree as parallel arrays, one entry per token.
/// heads[i] is the 1-based index of token i's head, 0 for the artificial
/// root. A well-formed tree has exactly one root and no cycles; raw data
/// read from disk may violate this (see validate()).
struct DepTree {
    std::vector<int> heads;
    std::vector<std::string> rels;

    std::size_t size() const { return heads.size(); }

    friend bool operator==(const DepTree&, const DepTree&) = default;
};

/// Returns a description of every structural violation: head out of
/// range, self-head, root count != 1, cycles. Empty means well-formed.
std::vector<std::string> validate(const DepTree& tree);

}  // namespace slparse
