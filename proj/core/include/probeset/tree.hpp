#pragma once

#include <cstdint>
#include <vector>

namespace probeset {

// Rooted tree as a parent array: node 0 is the root, parents[0] == -1, and
// every other node's parent has a smaller id (so the array order is already
// topological). Derived structure is built once at construction.
class Tree {
public:
    Tree() = default;
    explicit Tree(std::vector<std::int32_t> parents);

    std::int32_t node_count() const { return static_cast<std::int32_t>(parents_.size()); }
    std::int32_t parent(std::int32_t v) const { return parents_[static_cast<std::size_t>(v)]; }
    const std::vector<std::int32_t>& parents() const { return parents_; }
    const std::vector<std::int32_t>& children(std::int32_t v) const {
        return children_[static_cast<std::size_t>(v)];
    }
    const std::vector<std::int32_t>& leaves() const { return leaves_; }
    bool is_leaf(std::int32_t v) const { return children_[static_cast<std::size_t>(v)].empty(); }
    std::int32_t depth(std::int32_t v) const { return depth_[static_cast<std::size_t>(v)]; }

    // Reflexive ancestry: is_ancestor(v, v) is true.
    bool is_ancestor(std::int32_t anc, std::int32_t v) const;

    std::int32_t common_ancestor(std::int32_t u, std::int32_t v) const;

    // Edge-count distance between any two nodes.
    std::int32_t distance(std::int32_t u, std::int32_t v) const;

    // Depth-first order from the root, children visited in ascending id order.
    const std::vector<std::int32_t>& preorder() const { return preorder_; }

    void check_node(std::int32_t v) const;

private:
    std::vector<std::int32_t> parents_;
    std::vector<std::vector<std::int32_t>> children_;
    std::vector<std::int32_t> leaves_;
    std::vector<std::int32_t> depth_;
    std::vector<std::int32_t> preorder_;
};

// Balanced-ish tree with exactly `leaves` leaves: leaf counts are split as
// evenly as possible into at most `branching` children per node.
Tree make_balanced_tree(std::int32_t leaves, std::int32_t branching);

}  // namespace probeset
