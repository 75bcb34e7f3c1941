#include "slparse/dep_codec.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace slparse {

namespace {

std::string show(const std::string& component) {
    return component.empty() ? kAbsent : component;
}

int parse_offset(std::string_view field) {
    if (field.empty() || field == kAbsent) return 0;
    int value = 0;
    const char* first = field.data();
    if (field.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size()) return 0;
    return value;
}

std::string parse_component(std::string_view field) {
    if (field == kAbsent) return {};
    return std::string(field);
}

std::string offset_string(int offset) {
    return (offset > 0 ? "+" : "") + std::to_string(offset);
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

}  // namespace

std::string to_string(const DepLabel& label) {
    return offset_string(label.offset) + kLabelSep + show(label.head_pos) +
           kLabelSep + show(label.rel);
}

DepLabel parse_dep_label(std::string_view text) {
    DepLabel label;
    const std::size_t first = text.find(kLabelSep);
    if (first == std::string_view::npos) {
        label.offset = parse_offset(text);
        return label;
    }
    label.offset = parse_offset(text.substr(0, first));
    const std::size_t second = text.find(kLabelSep, first + 1);
    if (second == std::string_view::npos) {
        label.head_pos = parse_component(text.substr(first + 1));
    } else {
        label.head_pos =
            parse_component(text.substr(first + 1, second - first - 1));
        label.rel = parse_component(text.substr(second + 1));
    }
    return label;
}

std::vector<std::string> factor_dep(const DepLabel& label, DepFactorMode mode) {
    switch (mode) {
        case DepFactorMode::single:
            return {to_string(label)};
        case DepFactorMode::two_task:
            return {offset_string(label.offset) + kLabelSep +
                        show(label.head_pos),
                    show(label.rel)};
        case DepFactorMode::three_task:
            return {offset_string(label.offset), show(label.head_pos),
                    show(label.rel)};
    }
    throw std::invalid_argument("factor_dep: unknown mode");
}

DepLabel unfactor_dep(std::span<const std::string> parts, DepFactorMode mode) {
    auto expect = [&](std::size_t n) {
        if (parts.size() != n)
            throw std::invalid_argument(
                "unfactor_dep: expected " + std::to_string(n) +
                " sub-labels, got " + std::to_string(parts.size()));
    };
    switch (mode) {
        case DepFactorMode::single:
            expect(1);
            return parse_dep_label(parts[0]);
        case DepFactorMode::two_task: {
            expect(2);
            DepLabel label = parse_dep_label(parts[0]);  // "o@p"
            label.rel = parse_component(parts[1]);
            return label;
        }
        case DepFactorMode::three_task:
            expect(3);
            return DepLabel{parse_offset(parts[0]), parse_component(parts[1]),
                            parse_component(parts[2])};
    }
    throw std::invalid_argument("unfactor_dep: unknown mode");
}

std::vector<DepLabel> encode_dep(const Sentence& sentence,
                                 const DepTree& tree) {
    const int m = static_cast<int>(sentence.size());
    if (m == 0) throw std::invalid_argument("encode_dep: empty sentence");
    if (tree.size() != sentence.size() || tree.rels.size() != sentence.size())
        throw std::invalid_argument("encode_dep: tree/sentence size mismatch");

    for (const Token& token : sentence) check_symbol(token.pos, "PoS tag");
    for (const std::string& rel : tree.rels) check_symbol(rel, "relation");

    std::vector<DepLabel> labels(sentence.size());
    for (int i = 1; i <= m; ++i) {
        const int h = tree.heads[i - 1];
        if (h < 0 || h > m || h == i)
            throw std::invalid_argument("encode_dep: invalid head " +
                                        std::to_string(h) + " for token " +
                                        std::to_string(i));
        DepLabel& label = labels[i - 1];
        label.head_pos = (h == 0) ? kRootPos : sentence[h - 1].pos;
        label.rel = tree.rels[i - 1];
        if (h > i) {
            int rank = 0;
            for (int j = i + 1; j <= h; ++j)
                if (sentence[j - 1].pos == label.head_pos) ++rank;
            label.offset = rank;
        } else if (h >= 1) {
            int rank = 0;
            for (int j = i - 1; j >= h; --j)
                if (sentence[j - 1].pos == label.head_pos) ++rank;
            label.offset = -rank;
        } else {
            // artificial root: leftmost position, ranked after any real
            // token that happens to carry the ROOT tag
            int rank = 1;
            for (int j = i - 1; j >= 1; --j)
                if (sentence[j - 1].pos == kRootPos) ++rank;
            label.offset = -rank;
        }
    }
    return labels;
}

DepRepairReport& DepRepairReport::operator+=(const DepRepairReport& other) {
    unresolvable_heads += other.unresolvable_heads;
    extra_roots += other.extra_roots;
    zero_roots += other.zero_roots;
    cycles_broken += other.cycles_broken;
    return *this;
}

DepDecodeResult decode_dep(std::span<const DepLabel> labels,
                           const Sentence& sentence) {
    const int m = static_cast<int>(sentence.size());
    if (m == 0) throw std::invalid_argument("decode_dep: empty sentence");
    if (static_cast<int>(labels.size()) != m)
        throw std::invalid_argument(
            "decode_dep: " + std::to_string(labels.size()) + " labels for " +
            std::to_string(m) + " tokens");

    DepDecodeResult result;
    DepTree& tree = result.tree;
    tree.heads.assign(sentence.size(), -1);
    tree.rels.resize(sentence.size());

    // 1. head resolution; unresolvable tokens attach to their left
    //    neighbour (the first token to the root) with the relation kept
    for (int i = 1; i <= m; ++i) {
        const DepLabel& label = labels[i - 1];
        tree.rels[i - 1] = label.rel.empty() ? "dep" : label.rel;
        int head = -1;
        if (label.offset > 0) {
            int remaining = label.offset;
            for (int j = i + 1; j <= m; ++j) {
                if (sentence[j - 1].pos == label.head_pos && --remaining == 0) {
                    head = j;
                    break;
                }
            }
        } else if (label.offset < 0) {
            int remaining = -label.offset;
            for (int j = i - 1; j >= 1 && head < 0; --j)
                if (sentence[j - 1].pos == label.head_pos && --remaining == 0)
                    head = j;
            if (head < 0 && label.head_pos == kRootPos && remaining == 1)
                head = 0;
        }
        if (head < 0) {
            head = i - 1;  // previous token; 0 = root for the first one
            result.repairs.unresolvable_heads++;
        }
        tree.heads[i - 1] = head;
    }

    // 2. root normalization: exactly one token may head the sentence
    std::vector<int> roots;
    for (int i = 1; i <= m; ++i)
        if (tree.heads[i - 1] == 0) roots.push_back(i);
    int root = -1;
    if (roots.empty()) {
        int promoted = 1;
        for (int i = 1; i <= m; ++i) {
            if (labels[i - 1].head_pos == kRootPos) {
                promoted = i;
                break;
            }
        }
        tree.heads[promoted - 1] = 0;
        tree.rels[promoted - 1] = "root";
        result.repairs.zero_roots++;
        root = promoted;
    } else {
        root = roots.front();
        for (std::size_t k = 1; k < roots.size(); ++k) {
            tree.heads[roots[k] - 1] = root;
            result.repairs.extra_roots++;
        }
    }

    // 3. cycle breaking: each node has one outgoing head pointer, so
    //    cycles are disjoint; reattach each cycle's leftmost member to
    //    the root token
    std::vector<int> state(m + 1, 0);  // 0 unseen, 1 on path, 2 done
    state[0] = 2;
    for (int start = 1; start <= m; ++start) {
        if (state[start] != 0) continue;
        std::vector<int> path;
        int cur = start;
        while (state[cur] == 0) {
            state[cur] = 1;
            path.push_back(cur);
            cur = tree.heads[cur - 1];
        }
        if (state[cur] == 1) {
            // found a new cycle: the path suffix from cur onwards
            int leftmost = cur;
            for (std::size_t k = path.size(); k-- > 0;) {
                leftmost = std::min(leftmost, path[k]);
                if (path[k] == cur) break;
            }
            tree.heads[leftmost - 1] = root;
            result.repairs.cycles_broken++;
        }
        for (int t : path) state[t] = 2;
    }
    return result;
}

}  // namespace slparse
