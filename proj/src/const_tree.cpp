#include "slparse/const_tree.hpp"

namespace slparse {

namespace {

void collect_tokens(const ConstNode& node, Sentence& out) {
    if (node.is_leaf()) {
        out.push_back(Token{node.form, node.label});
        return;
    }
    for (const ConstNode& child : node.children) collect_tokens(child, out);
}

}  // namespace

Sentence ConstTree::tokens() const {
    Sentence out;
    collect_tokens(root, out);
    return out;
}

std::size_t ConstTree::size() const {
    return tokens().size();
}

}  // namespace slparse
