#include "slparse/const_codec.hpp"

#include <charconv>
#include <stdexcept>
#include <utility>

namespace slparse {

namespace {

std::string show(const std::string& component) {
    return component.empty() ? kAbsent : component;
}

std::optional<int> parse_level(std::string_view field) {
    if (field.empty() || field == kAbsent) return std::nullopt;
    int value = 0;
    const char* first = field.data();
    if (field.front() == '+') ++first;  // accept explicit plus
    auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
        return std::nullopt;
    return value;
}

std::string parse_component(std::string_view field) {
    if (field == kAbsent) return {};
    return std::string(field);
}

std::vector<std::string> split_chain(std::string_view chain) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= chain.size(); ++i) {
        if (i == chain.size() || chain[i] == kChainSep) {
            if (i > start) parts.emplace_back(chain.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

void check_symbol(const std::string& symbol, const char* what) {
    if (symbol.empty())
        throw std::invalid_argument(std::string(what) + " is empty");
    if (symbol == kAbsent)
        throw std::runtime_error(std::string(what) + " collides with the "
                                 "reserved empty-component string '" + kAbsent +
                                 "'");
    if (symbol.find(kLabelSep) != std::string::npos)
        throw std::runtime_error(std::string(what) + " '" + symbol +
                                 "' contains the label separator '@'");
}

// Collapsed working form of the tree: leaf unary chains are pulled out
// into per-token strings and internal unary chains are merged into
// '+'-joined labels, which makes the level encoding invertible.
struct FlatNode {
    std::string label;
    std::vector<int> children;  // >=0: FlatNode index, <0: token ~(index)
};

struct Collapsed {
    std::vector<FlatNode> nodes;  // node 0 is the root (when any exist)
    std::vector<std::string> leaf_chains;  // '+'-joined, may be empty
};

std::size_t leaf_count(const ConstNode& node) {
    if (node.is_leaf()) return 1;
    std::size_t n = 0;
    for (const ConstNode& c : node.children) n += leaf_count(c);
    return n;
}

// Walks `node`, appending to `out`; returns the child reference for the
// parent. Nonterminals dominating a single leaf accumulate into that
// token's chain entry.
int collapse_node(const ConstNode& node, Collapsed& out, int& next_token) {
    if (node.is_leaf()) {
        check_symbol(node.label, "PoS tag");
        return ~next_token++;
    }
    check_symbol(node.label, "nonterminal");
    if (leaf_count(node) == 1) {
        // part of a leaf unary chain; record top-to-bottom
        const int token_before = next_token;
        std::string& chain = out.leaf_chains[token_before];
        if (!chain.empty()) chain.push_back(kChainSep);
        chain += node.label;
        return collapse_node(node.children[0], out, next_token);
    }
    // merge any internal unary descent into one label
    std::string label = node.label;
    const ConstNode* cur = &node;
    while (cur->children.size() == 1 && !cur->children[0].is_leaf() &&
           leaf_count(cur->children[0]) == leaf_count(*cur)) {
        cur = &cur->children[0];
        check_symbol(cur->label, "nonterminal");
        label.push_back(kChainSep);
        label += cur->label;
    }
    const int id = static_cast<int>(out.nodes.size());
    out.nodes.push_back(FlatNode{std::move(label), {}});
    std::vector<int> children;
    for (const ConstNode& child : cur->children)
        children.push_back(collapse_node(child, out, next_token));
    out.nodes[id].children = std::move(children);
    return id;
}

Collapsed collapse(const ConstTree& tree, std::size_t n_tokens) {
    Collapsed out;
    out.leaf_chains.resize(n_tokens);
    int next_token = 0;
    collapse_node(tree.root, out, next_token);
    return out;
}

// Ancestor node ids from the root down to each token's attachment point.
std::vector<std::vector<int>> ancestor_paths(const Collapsed& c,
                                             std::size_t n_tokens) {
    std::vector<std::vector<int>> paths(n_tokens);
    std::vector<int> stack;
    auto walk = [&](auto&& self, int ref) -> void {
        if (ref < 0) {
            paths[~ref] = stack;
            return;
        }
        stack.push_back(ref);
        for (int child : c.nodes[ref].children) self(self, child);
        stack.pop_back();
    };
    if (!c.nodes.empty()) walk(walk, 0);
    return paths;
}

ConstNode expand_label_chain(const std::string& label,
                             std::vector<ConstNode> children,
                             const std::string& fallback) {
    std::vector<std::string> parts = split_chain(label);
    if (parts.empty()) parts.push_back(fallback);
    ConstNode node;
    node.label = parts.back();
    node.children = std::move(children);
    for (std::size_t i = parts.size() - 1; i-- > 0;) {
        ConstNode wrapper;
        wrapper.label = parts[i];
        wrapper.children.push_back(std::move(node));
        node = std::move(wrapper);
    }
    return node;
}

ConstNode make_leaf_chain(const std::string& chain, const Token& token) {
    ConstNode leaf{token.pos, token.form, {}};
    std::vector<std::string> parts = split_chain(chain);
    for (std::size_t i = parts.size(); i-- > 0;) {
        ConstNode wrapper;
        wrapper.label = parts[i];
        wrapper.children.push_back(std::move(leaf));
        leaf = std::move(wrapper);
    }
    return leaf;
}

}  // namespace

std::string to_string(const ConstLabel& label) {
    std::string n = label.level ? std::to_string(*label.level) : kAbsent;
    return n + kLabelSep + show(label.lca) + kLabelSep + show(label.unary);
}

ConstLabel parse_const_label(std::string_view text) {
    const std::size_t first = text.find(kLabelSep);
    if (first == std::string_view::npos)
        return ConstLabel{parse_level(text), {}, {}};
    const std::size_t second = text.find(kLabelSep, first + 1);
    ConstLabel label;
    label.level = parse_level(text.substr(0, first));
    if (second == std::string_view::npos) {
        label.lca = parse_component(text.substr(first + 1));
    } else {
        label.lca = parse_component(
            text.substr(first + 1, second - first - 1));
        label.unary = parse_component(text.substr(second + 1));
    }
    return label;
}

std::array<std::string, 3> factor_const(const ConstLabel& label) {
    return {label.level ? std::to_string(*label.level) : kAbsent,
            show(label.lca), show(label.unary)};
}

ConstLabel unfactor_const(std::string_view n, std::string_view c,
                          std::string_view u) {
    return ConstLabel{parse_level(n), parse_component(c), parse_component(u)};
}

std::vector<ConstLabel> encode_const(const ConstTree& tree) {
    const Sentence tokens = tree.tokens();
    const std::size_t m = tokens.size();
    if (m == 0) throw std::invalid_argument("encode_const: empty tree");

    if (m == 1) {
        // Everything above the preterminal dominates the single token, so
        // the whole spine lives in the unary component.
        std::string chain;
        const ConstNode* cur = &tree.root;
        while (!cur->is_leaf()) {
            check_symbol(cur->label, "nonterminal");
            if (!chain.empty()) chain.push_back(kChainSep);
            chain += cur->label;
            cur = &cur->children[0];
        }
        check_symbol(cur->label, "PoS tag");
        return {ConstLabel{std::nullopt, {}, chain}};
    }

    const Collapsed flat = collapse(tree, m);
    const std::vector<std::vector<int>> paths = ancestor_paths(flat, m);

    std::vector<ConstLabel> labels(m);
    int prev_common = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const std::vector<int>& a = paths[i];
        const std::vector<int>& b = paths[i + 1];
        std::size_t common = 0;
        while (common < a.size() && common < b.size() &&
               a[common] == b[common])
            ++common;
        const int level = static_cast<int>(common);
        labels[i].level = (i == 0) ? level : level - prev_common;
        labels[i].lca = flat.nodes[a[common - 1]].label;
        labels[i].unary = flat.leaf_chains[i];
        prev_common = level;
    }
    labels[m - 1] = ConstLabel{std::nullopt, {}, flat.leaf_chains[m - 1]};
    return labels;
}

ConstRepairReport& ConstRepairReport::operator+=(
    const ConstRepairReport& other) {
    clamped_levels += other.clamped_levels;
    forced_min_level += other.forced_min_level;
    conflicting_nonterminals += other.conflicting_nonterminals;
    missing_nonterminals += other.missing_nonterminals;
    return *this;
}

ConstDecodeResult decode_const(std::span<const ConstLabel> labels,
                               const Sentence& sentence,
                               const ConstDecodeOptions& opts) {
    const std::size_t m = sentence.size();
    if (m == 0) throw std::invalid_argument("decode_const: empty sentence");
    if (labels.size() != m)
        throw std::invalid_argument(
            "decode_const: " + std::to_string(labels.size()) + " labels for " +
            std::to_string(m) + " tokens");

    ConstDecodeResult result;
    if (m == 1) {
        ConstNode leaf = make_leaf_chain(labels[0].unary, sentence[0]);
        if (leaf.is_leaf()) {
            // no unary chain: a bare fallback root keeps the tree valid
            ConstNode root{opts.fallback_label, {}, {}};
            root.children.push_back(std::move(leaf));
            leaf = std::move(root);
            result.repairs.missing_nonterminals++;
        }
        result.tree.root = std::move(leaf);
        return result;
    }

    // Absolute shared-ancestor counts, repaired into [1, m-1]. A node at
    // depth d of the collapsed tree spans >= d+1 tokens, so valid levels
    // never exceed m-1.
    const int max_level = static_cast<int>(m) - 1;
    std::vector<int> level(m - 1);
    int prev = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        int abs_level;
        if (labels[i].level) {
            const long long raw =
                (i == 0) ? static_cast<long long>(*labels[i].level)
                         : static_cast<long long>(prev) + *labels[i].level;
            if (raw < 1) {
                abs_level = 1;
                result.repairs.clamped_levels++;
            } else if (raw > max_level) {
                abs_level = max_level;
                result.repairs.clamped_levels++;
            } else {
                abs_level = static_cast<int>(raw);
            }
        } else {
            abs_level = 1;
            result.repairs.forced_min_level++;
        }
        level[i] = abs_level;
        prev = abs_level;
    }

    struct BuildNode {
        std::string label;
        std::vector<int> children;  // >=0 node id, <0 token ~(index)
    };
    std::vector<BuildNode> nodes;
    std::vector<int> stack;  // open node ids, outermost first

    for (std::size_t i = 0; i < m; ++i) {
        const int target = (i + 1 < m) ? level[i] : 0;
        const int depth =
            (i + 1 < m) ? std::max(static_cast<int>(stack.size()), target)
                        : static_cast<int>(stack.size());
        while (static_cast<int>(stack.size()) < depth) {
            const int id = static_cast<int>(nodes.size());
            nodes.push_back(BuildNode{});
            if (!stack.empty()) nodes[stack.back()].children.push_back(id);
            stack.push_back(id);
        }
        nodes[stack.back()].children.push_back(~static_cast<int>(i));
        while (static_cast<int>(stack.size()) > target) stack.pop_back();

        if (i + 1 < m) {
            BuildNode& owner = nodes[stack.back()];
            std::string lca = labels[i].lca;
            if (lca.empty()) {
                lca = opts.fallback_label;
                result.repairs.missing_nonterminals++;
            }
            if (owner.label.empty())
                owner.label = std::move(lca);
            else if (owner.label != lca)
                result.repairs.conflicting_nonterminals++;
        }
    }

    for (BuildNode& node : nodes) {
        if (node.label.empty()) {
            node.label = opts.fallback_label;
            result.repairs.missing_nonterminals++;
        }
    }

    auto materialize = [&](auto&& self, int ref) -> ConstNode {
        if (ref < 0) {
            const std::size_t t = static_cast<std::size_t>(~ref);
            return make_leaf_chain(labels[t].unary, sentence[t]);
        }
        std::vector<ConstNode> children;
        children.reserve(nodes[ref].children.size());
        for (int child : nodes[ref].children)
            children.push_back(self(self, child));
        return expand_label_chain(nodes[ref].label, std::move(children),
                                  opts.fallback_label);
    };
    result.tree.root = materialize(materialize, 0);
    return result;
}

}  // namespace slparse
