#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slparse/dep_tree.hpp"
#include "slparse/token.hpp"

namespace slparse {

/// Per-token dependency label (o, p, d): the head of the token is the
/// |o|-th closest token with PoS tag p, to the right when o > 0 and to
/// the left when o < 0. The artificial root sits leftmost and bears the
/// PoS tag "ROOT". d is the relation. offset == 0 marks an unresolvable
/// (malformed) label; encode never produces it.
struct DepLabel {
    int offset = 0;
    std::string head_pos;
    std::string rel;

    friend bool operator==(const DepLabel&, const DepLabel&) = default;
};

/// Serialized form "o@p@d" with an explicit sign on positive offsets,
/// e.g. "+1@V@nsubj".
std::string to_string(const DepLabel& label);

/// Total inverse of to_string; malformed fields yield offset 0 / empty
/// components, which the decoder repairs.
DepLabel parse_dep_label(std::string_view text);

enum class DepFactorMode {
    single,      // "o@p@d"
    two_task,    // "o@p", "d"
    three_task,  // "o", "p", "d"
};

std::vector<std::string> factor_dep(const DepLabel& label, DepFactorMode mode);

DepLabel unfactor_dep(std::span<const std::string> parts, DepFactorMode mode);

/// Linearizes a dependency tree. Requires a valid tree (heads in range,
/// no self-heads); throws std::invalid_argument otherwise or on a size
/// mismatch, and std::runtime_error on reserved-symbol collisions.
std::vector<DepLabel> encode_dep(const Sentence& sentence, const DepTree& tree);

struct DepRepairReport {
    std::size_t unresolvable_heads = 0;  // no |o|-th token with tag p in that
                                         // direction; attached locally
    std::size_t extra_roots = 0;         // extra roots reattached to leftmost
    std::size_t zero_roots = 0;          // no root; one token promoted
    std::size_t cycles_broken = 0;

    std::size_t total() const {
        return unresolvable_heads + extra_roots + zero_roots + cycles_broken;
    }

    DepRepairReport& operator+=(const DepRepairReport& other);
};

struct DepDecodeResult {
    DepTree tree;
    DepRepairReport repairs;
};

/// Total decoder: always returns a single-rooted acyclic tree. Throws
/// std::invalid_argument only on a size mismatch or empty sentence.
DepDecodeResult decode_dep(std::span<const DepLabel> labels,
                           const Sentence& sentence);

}  // namespace slparse
