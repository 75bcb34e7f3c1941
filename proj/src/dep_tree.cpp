#include "slparse/dep_tree.hpp"

#include <string>

namespace slparse {

std::vector<std::string> validate(const DepTree& tree) {
    std::vector<std::string> issues;
    const int n = static_cast<int>(tree.size());
    if (tree.rels.size() != tree.heads.size())
        issues.push_back("heads/rels length mismatch");

    int roots = 0;
    for (int i = 0; i < n; ++i) {
        const int h = tree.heads[i];
        if (h < 0 || h > n)
            issues.push_back("token " + std::to_string(i + 1) +
                             ": head out of range (" + std::to_string(h) + ")");
        if (h == i + 1)
            issues.push_back("token " + std::to_string(i + 1) + ": self-head");
        if (h == 0) ++roots;
    }
    if (roots != 1)
        issues.push_back("root count is " + std::to_string(roots));

    // Cycle check: walk head pointers from each token; a functional graph
    // has a cycle iff some walk revisits a node before reaching 0.
    std::vector<int> state(n, 0);  // 0 unseen, 1 in progress, 2 done
    for (int start = 0; start < n; ++start) {
        if (state[start] != 0) continue;
        int cur = start;
        std::vector<int> path;
        while (cur != 0 && cur >= 1 && cur <= n && state[cur - 1] == 0) {
            state[cur - 1] = 1;
            path.push_back(cur);
            cur = tree.heads[cur - 1];
        }
        if (cur >= 1 && cur <= n && state[cur - 1] == 1)
            issues.push_back("cycle through token " + std::to_string(cur));
        for (int t : path) state[t - 1] = 2;
    }
    return issues;
}

}  // namespace slparse
