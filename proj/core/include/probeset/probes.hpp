#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "probeset/tree.hpp"

namespace probeset {

// Probe answers and predictions are always hard +/-1 values; 0 appears only
// as the "members disagree" marker returned by probe_of_explicit_set.
using Sign = std::int8_t;

// Structured labels. A permutation stores the item at each rank: items[k] is
// the item placed at rank k+1, items are 1..K. A bit vector stores +/-1 per
// position. A tree label is a leaf id in the family's tree.
struct Permutation {
    std::vector<std::int32_t> items;
    bool operator==(const Permutation&) const = default;
};
struct BitVector {
    std::vector<Sign> bits;
    bool operator==(const BitVector&) const = default;
};
struct TreeLeaf {
    std::int32_t node = 0;
    bool operator==(const TreeLeaf&) const = default;
};
using Label = std::variant<Permutation, BitVector, TreeLeaf>;

enum class FamilyKind {
    pairwise_ranking,  // phi_{i,j}(y) = sign(rank(j) - rank(i)), i < j
    rank_position,     // phi_{k,j}(y) = +1 iff the item at rank k is j
    tree_ancestor,     // phi_v(y) = +1 iff v is a (reflexive) ancestor of y
    bitvector,         // phi_k(y) = y_k
};

// Family-specific probe key. Meaning of the components by kind:
//   pairwise_ranking: (i, j) with 1 <= i < j <= K
//   rank_position:    (rank, item), both in 1..K
//   tree_ancestor:    (node, -1), node in 0..node_count-1
//   bitvector:        (position, -1), position in 1..K
struct ProbeIndex {
    std::int32_t a = 0;
    std::int32_t b = -1;
    auto operator<=>(const ProbeIndex&) const = default;
};

// One of the four shipped probe families over a concrete label space.
struct ProbeFamily {
    FamilyKind kind = FamilyKind::pairwise_ranking;
    std::int32_t k = 0;  // items (pairwise/rank) or bits; unused for trees
    Tree tree;           // tree_ancestor only

    std::int32_t item_count() const { return k; }
};

ProbeFamily make_pairwise_family(std::int32_t k);
ProbeFamily make_rank_position_family(std::int32_t k);
ProbeFamily make_tree_family(Tree tree);
ProbeFamily make_bitvector_family(std::int32_t k);

// A probe-adapted predictive set, represented by the probes it answers. An
// empty map is the whole label space. Values are +/-1.
struct ProbeAdaptedSet {
    std::map<ProbeIndex, Sign> answers;

    std::size_t answered_count() const { return answers.size(); }
    bool operator==(const ProbeAdaptedSet&) const = default;
};

// All probe indices of the family in canonical order: pairwise (i,j)
// lexicographic, rank-position (rank, item) lexicographic, tree nodes in
// preorder, bit positions ascending.
std::vector<ProbeIndex> enumerate_indices(const ProbeFamily& family);

// Validates the index against the family; throws DomainError if malformed.
void check_index(const ProbeFamily& family, const ProbeIndex& index);

// Validates a label against the family's label space.
void check_label(const ProbeFamily& family, const Label& label);

// phi_i(y). Throws DomainError on a malformed index or label.
Sign evaluate_probe(const ProbeFamily& family, const ProbeIndex& index, const Label& label);

// phi_i(C) for an explicit nonempty set of labels: the common value if all
// members agree, 0 otherwise.
Sign probe_of_explicit_set(const ProbeFamily& family, const ProbeIndex& index,
                           const std::vector<Label>& members);

// Is the label consistent with every answered probe of the set?
bool membership(const ProbeAdaptedSet& set, const ProbeFamily& family, const Label& label);

// Number of labels in the family's label space, if it fits in 64 bits.
std::optional<std::uint64_t> space_size(const ProbeFamily& family);

// Every label of the space, in a fixed deterministic order. Throws
// CapacityError if the space exceeds max_space_size labels.
std::vector<Label> enumerate_labels(const ProbeFamily& family, std::uint64_t max_space_size);

// Do distinct labels always produce distinct full probe vectors? Exhaustive
// over the label space; throws CapacityError past the cap.
bool check_identifiability(const ProbeFamily& family, std::uint64_t max_space_size);

// Core of check_identifiability, exposed for families constructed in tests:
// true iff all probe vectors are pairwise distinct.
bool probe_vectors_distinct(const std::vector<std::vector<Sign>>& vectors);

// All labels consistent with the given answers on `queries` (answers must
// cover every query). No queries means the whole space.
std::vector<Label> materialize_weak_set(const ProbeFamily& family,
                                        const std::vector<ProbeIndex>& queries,
                                        const std::map<ProbeIndex, Sign>& answers,
                                        std::uint64_t max_space_size);

// Probe keys on the wire: "p:i-j" (pairwise), "r:rank-item" (rank-position),
// "t:node" (tree-ancestor), "b:position" (bitvector).
std::string format_probe_key(FamilyKind kind, const ProbeIndex& index);
std::pair<FamilyKind, ProbeIndex> parse_probe_key(const std::string& key);

}  // namespace probeset
