#include "probeset/probes.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <set>

#include "probeset/errors.hpp"

namespace probeset {

namespace {

const char* kind_name(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::pairwise_ranking: return "pairwise";
        case FamilyKind::rank_position: return "rank-position";
        case FamilyKind::tree_ancestor: return "tree-ancestor";
        case FamilyKind::bitvector: return "bitvector";
    }
    return "?";
}

std::int32_t parse_int(std::string_view text, const std::string& key) {
    std::int32_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw DomainError("malformed probe key '" + key + "'");
    return value;
}

}  // namespace

ProbeFamily make_pairwise_family(std::int32_t k) {
    if (k < 2) throw DomainError("pairwise family needs at least 2 items");
    return ProbeFamily{FamilyKind::pairwise_ranking, k, Tree{}};
}

ProbeFamily make_rank_position_family(std::int32_t k) {
    if (k < 1) throw DomainError("rank-position family needs at least 1 item");
    return ProbeFamily{FamilyKind::rank_position, k, Tree{}};
}

ProbeFamily make_tree_family(Tree tree) {
    return ProbeFamily{FamilyKind::tree_ancestor, 0, std::move(tree)};
}

ProbeFamily make_bitvector_family(std::int32_t k) {
    if (k < 1) throw DomainError("bitvector family needs at least 1 bit");
    return ProbeFamily{FamilyKind::bitvector, k, Tree{}};
}

std::vector<ProbeIndex> enumerate_indices(const ProbeFamily& family) {
    std::vector<ProbeIndex> out;
    switch (family.kind) {
        case FamilyKind::pairwise_ranking:
            out.reserve(static_cast<std::size_t>(family.k) * (family.k - 1) / 2);
            for (std::int32_t i = 1; i <= family.k; ++i)
                for (std::int32_t j = i + 1; j <= family.k; ++j) out.push_back({i, j});
            break;
        case FamilyKind::rank_position:
            out.reserve(static_cast<std::size_t>(family.k) * family.k);
            for (std::int32_t rank = 1; rank <= family.k; ++rank)
                for (std::int32_t item = 1; item <= family.k; ++item) out.push_back({rank, item});
            break;
        case FamilyKind::tree_ancestor:
            for (std::int32_t v : family.tree.preorder()) out.push_back({v, -1});
            break;
        case FamilyKind::bitvector:
            for (std::int32_t i = 1; i <= family.k; ++i) out.push_back({i, -1});
            break;
    }
    return out;
}

void check_index(const ProbeFamily& family, const ProbeIndex& index) {
    switch (family.kind) {
        case FamilyKind::pairwise_ranking:
            if (index.a < 1 || index.b <= index.a || index.b > family.k)
                throw DomainError("pairwise probe needs 1 <= i < j <= " + std::to_string(family.k));
            return;
        case FamilyKind::rank_position:
            if (index.a < 1 || index.a > family.k || index.b < 1 || index.b > family.k)
                throw DomainError("rank-position probe needs rank and item in 1.." +
                                  std::to_string(family.k));
            return;
        case FamilyKind::tree_ancestor:
            family.tree.check_node(index.a);
            if (index.b != -1) throw DomainError("tree probe key has a single component");
            return;
        case FamilyKind::bitvector:
            if (index.a < 1 || index.a > family.k)
                throw DomainError("bit probe position out of range 1.." + std::to_string(family.k));
            if (index.b != -1) throw DomainError("bit probe key has a single component");
            return;
    }
}

void check_label(const ProbeFamily& family, const Label& label) {
    switch (family.kind) {
        case FamilyKind::pairwise_ranking:
        case FamilyKind::rank_position: {
            const auto* perm = std::get_if<Permutation>(&label);
            if (!perm) throw DomainError("label must be a permutation");
            if (static_cast<std::int32_t>(perm->items.size()) != family.k)
                throw DomainError("permutation must have " + std::to_string(family.k) + " items");
            std::vector<bool> seen(static_cast<std::size_t>(family.k), false);
            for (std::int32_t item : perm->items) {
                if (item < 1 || item > family.k || seen[static_cast<std::size_t>(item - 1)])
                    throw DomainError("not a permutation of 1.." + std::to_string(family.k));
                seen[static_cast<std::size_t>(item - 1)] = true;
            }
            return;
        }
        case FamilyKind::tree_ancestor: {
            const auto* leaf = std::get_if<TreeLeaf>(&label);
            if (!leaf) throw DomainError("label must be a tree leaf");
            family.tree.check_node(leaf->node);
            if (!family.tree.is_leaf(leaf->node))
                throw DomainError("node " + std::to_string(leaf->node) + " is not a leaf");
            return;
        }
        case FamilyKind::bitvector: {
            const auto* bits = std::get_if<BitVector>(&label);
            if (!bits) throw DomainError("label must be a bit vector");
            if (static_cast<std::int32_t>(bits->bits.size()) != family.k)
                throw DomainError("bit vector must have " + std::to_string(family.k) + " bits");
            for (Sign s : bits->bits)
                if (s != 1 && s != -1) throw DomainError("bit values must be +1 or -1");
            return;
        }
    }
}

Sign evaluate_probe(const ProbeFamily& family, const ProbeIndex& index, const Label& label) {
    check_index(family, index);
    check_label(family, label);
    switch (family.kind) {
        case FamilyKind::pairwise_ranking: {
            const auto& items = std::get<Permutation>(label).items;
            // ranks are positions in the item list; probe is the sign of
            // rank(j) - rank(i), i.e. +1 when i is ranked above j
            std::int32_t rank_i = 0, rank_j = 0;
            for (std::int32_t pos = 0; pos < family.k; ++pos) {
                if (items[static_cast<std::size_t>(pos)] == index.a) rank_i = pos + 1;
                if (items[static_cast<std::size_t>(pos)] == index.b) rank_j = pos + 1;
            }
            return rank_j > rank_i ? Sign{1} : Sign{-1};
        }
        case FamilyKind::rank_position: {
            const auto& items = std::get<Permutation>(label).items;
            return items[static_cast<std::size_t>(index.a - 1)] == index.b ? Sign{1} : Sign{-1};
        }
        case FamilyKind::tree_ancestor: {
            auto node = std::get<TreeLeaf>(label).node;
            return family.tree.is_ancestor(index.a, node) ? Sign{1} : Sign{-1};
        }
        case FamilyKind::bitvector: {
            const auto& bits = std::get<BitVector>(label).bits;
            return bits[static_cast<std::size_t>(index.a - 1)];
        }
    }
    throw DomainError("unknown family kind");
}

Sign probe_of_explicit_set(const ProbeFamily& family, const ProbeIndex& index,
                           const std::vector<Label>& members) {
    if (members.empty()) throw DomainError("probe of an empty explicit set is undefined");
    Sign first = evaluate_probe(family, index, members.front());
    for (std::size_t i = 1; i < members.size(); ++i)
        if (evaluate_probe(family, index, members[i]) != first) return 0;
    return first;
}

bool membership(const ProbeAdaptedSet& set, const ProbeFamily& family, const Label& label) {
    for (const auto& [index, sign] : set.answers)
        if (evaluate_probe(family, index, label) != sign) return false;
    return true;
}

std::optional<std::uint64_t> space_size(const ProbeFamily& family) {
    switch (family.kind) {
        case FamilyKind::pairwise_ranking:
        case FamilyKind::rank_position: {
            if (family.k > 20) return std::nullopt;  // 21! overflows
            std::uint64_t f = 1;
            for (std::int32_t i = 2; i <= family.k; ++i) f *= static_cast<std::uint64_t>(i);
            return f;
        }
        case FamilyKind::tree_ancestor:
            return family.tree.leaves().size();
        case FamilyKind::bitvector:
            if (family.k >= 64) return std::nullopt;
            return std::uint64_t{1} << family.k;
    }
    return std::nullopt;
}

std::vector<Label> enumerate_labels(const ProbeFamily& family, std::uint64_t max_space_size) {
    auto size = space_size(family);
    if (!size || *size > max_space_size)
        throw CapacityError("label space larger than cap " + std::to_string(max_space_size));
    std::vector<Label> out;
    out.reserve(static_cast<std::size_t>(*size));
    switch (family.kind) {
        case FamilyKind::pairwise_ranking:
        case FamilyKind::rank_position: {
            std::vector<std::int32_t> items(static_cast<std::size_t>(family.k));
            std::iota(items.begin(), items.end(), 1);
            do {
                out.push_back(Permutation{items});
            } while (std::next_permutation(items.begin(), items.end()));
            break;
        }
        case FamilyKind::tree_ancestor:
            for (std::int32_t leaf : family.tree.leaves()) out.push_back(TreeLeaf{leaf});
            break;
        case FamilyKind::bitvector:
            for (std::uint64_t mask = 0; mask < *size; ++mask) {
                BitVector bits;
                bits.bits.resize(static_cast<std::size_t>(family.k));
                for (std::int32_t i = 0; i < family.k; ++i)
                    bits.bits[static_cast<std::size_t>(i)] =
                        (mask >> i) & 1 ? Sign{1} : Sign{-1};
                out.push_back(std::move(bits));
            }
            break;
    }
    return out;
}

bool probe_vectors_distinct(const std::vector<std::vector<Sign>>& vectors) {
    std::set<std::vector<Sign>> seen;
    for (const auto& v : vectors)
        if (!seen.insert(v).second) return false;
    return true;
}

bool check_identifiability(const ProbeFamily& family, std::uint64_t max_space_size) {
    auto labels = enumerate_labels(family, max_space_size);
    auto indices = enumerate_indices(family);
    std::vector<std::vector<Sign>> vectors;
    vectors.reserve(labels.size());
    for (const auto& label : labels) {
        std::vector<Sign> v;
        v.reserve(indices.size());
        for (const auto& index : indices) v.push_back(evaluate_probe(family, index, label));
        vectors.push_back(std::move(v));
    }
    return probe_vectors_distinct(vectors);
}

std::vector<Label> materialize_weak_set(const ProbeFamily& family,
                                        const std::vector<ProbeIndex>& queries,
                                        const std::map<ProbeIndex, Sign>& answers,
                                        std::uint64_t max_space_size) {
    for (const auto& q : queries) {
        check_index(family, q);
        if (!answers.contains(q))
            throw DomainError("query " + format_probe_key(family.kind, q) + " has no answer");
    }
    auto labels = enumerate_labels(family, max_space_size);
    std::vector<Label> out;
    for (const auto& label : labels) {
        bool keep = true;
        for (const auto& q : queries) {
            if (evaluate_probe(family, q, label) != answers.at(q)) {
                keep = false;
                break;
            }
        }
        if (keep) out.push_back(label);
    }
    return out;
}

std::string format_probe_key(FamilyKind kind, const ProbeIndex& index) {
    switch (kind) {
        case FamilyKind::pairwise_ranking:
            return "p:" + std::to_string(index.a) + "-" + std::to_string(index.b);
        case FamilyKind::rank_position:
            return "r:" + std::to_string(index.a) + "-" + std::to_string(index.b);
        case FamilyKind::tree_ancestor:
            return "t:" + std::to_string(index.a);
        case FamilyKind::bitvector:
            return "b:" + std::to_string(index.a);
    }
    throw DomainError("unknown family kind");
}

std::pair<FamilyKind, ProbeIndex> parse_probe_key(const std::string& key) {
    if (key.size() < 3 || key[1] != ':') throw DomainError("malformed probe key '" + key + "'");
    std::string_view body(key.data() + 2, key.size() - 2);
    auto split_pair = [&]() -> ProbeIndex {
        auto dash = body.find('-');
        if (dash == std::string_view::npos || dash == 0 || dash + 1 == body.size())
            throw DomainError("malformed probe key '" + key + "'");
        return {parse_int(body.substr(0, dash), key), parse_int(body.substr(dash + 1), key)};
    };
    switch (key[0]) {
        case 'p': return {FamilyKind::pairwise_ranking, split_pair()};
        case 'r': return {FamilyKind::rank_position, split_pair()};
        case 't': return {FamilyKind::tree_ancestor, {parse_int(body, key), -1}};
        case 'b': return {FamilyKind::bitvector, {parse_int(body, key), -1}};
        default: throw DomainError("unknown probe key prefix '" + key + "'");
    }
}

}  // namespace probeset
