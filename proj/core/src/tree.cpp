#include "probeset/tree.hpp"

#include <string>

#include "probeset/errors.hpp"

namespace probeset {

Tree::Tree(std::vector<std::int32_t> parents) : parents_(std::move(parents)) {
    auto n = static_cast<std::int32_t>(parents_.size());
    if (n == 0) throw DomainError("tree must have at least one node");
    if (parents_[0] != -1) throw DomainError("node 0 must be the root (parent -1)");
    children_.resize(static_cast<std::size_t>(n));
    depth_.assign(static_cast<std::size_t>(n), 0);
    for (std::int32_t v = 1; v < n; ++v) {
        std::int32_t p = parents_[static_cast<std::size_t>(v)];
        if (p < 0 || p >= v)
            throw DomainError("node " + std::to_string(v) + " needs a parent with a smaller id");
        children_[static_cast<std::size_t>(p)].push_back(v);
        depth_[static_cast<std::size_t>(v)] = depth_[static_cast<std::size_t>(p)] + 1;
    }
    for (std::int32_t v = 0; v < n; ++v)
        if (children_[static_cast<std::size_t>(v)].empty()) leaves_.push_back(v);

    preorder_.reserve(static_cast<std::size_t>(n));
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
        std::int32_t v = stack.back();
        stack.pop_back();
        preorder_.push_back(v);
        const auto& ch = children_[static_cast<std::size_t>(v)];
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
}

void Tree::check_node(std::int32_t v) const {
    if (v < 0 || v >= node_count())
        throw DomainError("tree node " + std::to_string(v) + " out of range");
}

bool Tree::is_ancestor(std::int32_t anc, std::int32_t v) const {
    check_node(anc);
    check_node(v);
    while (v != -1 && depth_[static_cast<std::size_t>(v)] >= depth_[static_cast<std::size_t>(anc)]) {
        if (v == anc) return true;
        v = parents_[static_cast<std::size_t>(v)];
    }
    return false;
}

std::int32_t Tree::common_ancestor(std::int32_t u, std::int32_t v) const {
    check_node(u);
    check_node(v);
    while (depth_[static_cast<std::size_t>(u)] > depth_[static_cast<std::size_t>(v)])
        u = parents_[static_cast<std::size_t>(u)];
    while (depth_[static_cast<std::size_t>(v)] > depth_[static_cast<std::size_t>(u)])
        v = parents_[static_cast<std::size_t>(v)];
    while (u != v) {
        u = parents_[static_cast<std::size_t>(u)];
        v = parents_[static_cast<std::size_t>(v)];
    }
    return u;
}

std::int32_t Tree::distance(std::int32_t u, std::int32_t v) const {
    std::int32_t a = common_ancestor(u, v);
    return (depth_[static_cast<std::size_t>(u)] - depth_[static_cast<std::size_t>(a)]) +
           (depth_[static_cast<std::size_t>(v)] - depth_[static_cast<std::size_t>(a)]);
}

namespace {

void split_leaves(std::vector<std::int32_t>& parents, std::int32_t node, std::int32_t leaves,
                  std::int32_t branching) {
    if (leaves == 1) return;  // `node` stays a leaf
    std::int32_t parts = std::min(branching, leaves);
    std::int32_t base = leaves / parts;
    std::int32_t rem = leaves % parts;
    for (std::int32_t i = 0; i < parts; ++i) {
        std::int32_t count = base + (i < rem ? 1 : 0);
        auto child = static_cast<std::int32_t>(parents.size());
        parents.push_back(node);
        split_leaves(parents, child, count, branching);
    }
}

}  // namespace

Tree make_balanced_tree(std::int32_t leaves, std::int32_t branching) {
    if (leaves < 1) throw DomainError("tree needs at least one leaf");
    if (branching < 2) throw DomainError("branching factor must be at least 2");
    std::vector<std::int32_t> parents{-1};
    split_leaves(parents, 0, leaves, branching);
    return Tree(std::move(parents));
}

}  // namespace probeset
