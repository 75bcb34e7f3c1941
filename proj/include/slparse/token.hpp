#pragma once

#include <string>
#include <vector>

namespace slparse {

// Separator between the serialized components of a label ("1@S@NP").
inline constexpr char kLabelSep = '@';
// Joiner inside a chained nonterminal component ("S+VP"). Reserved: input
// labels must not contain it, or chains will be re-split on decode.
inline constexpr char kChainSep = '+';
// Serialized form of an absent label component.
inline const std::string kAbsent = "NONE";
// PoS tag of the artificial root token in the dependency encoding.
inline const std::string kRootPos = "ROOT";

struct Token {
    std::string form;  // surface word, non-empty, no tab/newline
    std::string pos;   // PoS tag, non-empty, no tab/newline/'@'

    friend bool operator==(const Token&, const Token&) = default;
};

using Sentence = std::vector<Token>;

}  // namespace slparse
