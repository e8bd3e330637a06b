#include "probeset/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "probeset/errors.hpp"

namespace probeset {

RankingExample gen_ranking_example(const RankingModel& model, SplitRng& rng) {
    if (model.k < 2) throw DomainError("ranking model needs at least 2 items");
    RankingExample example;
    example.relevances.resize(static_cast<std::size_t>(model.k));
    for (auto& r : example.relevances) r = model.relevance_scale * rng.next_exponential();

    // Plackett-Luce via Gumbel-max: sorting r + Gumbel noise descending draws
    // the permutation with the listwise softmax likelihood, with no overflow
    // for large relevances.
    std::vector<std::pair<double, std::int32_t>> keyed(static_cast<std::size_t>(model.k));
    for (std::int32_t i = 0; i < model.k; ++i)
        keyed[static_cast<std::size_t>(i)] = {example.relevances[static_cast<std::size_t>(i)] +
                                                  rng.next_gumbel(),
                                              i + 1};
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    example.label.items.resize(static_cast<std::size_t>(model.k));
    for (std::int32_t pos = 0; pos < model.k; ++pos)
        example.label.items[static_cast<std::size_t>(pos)] = keyed[static_cast<std::size_t>(pos)].second;

    std::vector<double> observed(static_cast<std::size_t>(model.k));
    for (std::int32_t i = 0; i < model.k; ++i)
        observed[static_cast<std::size_t>(i)] =
            example.relevances[static_cast<std::size_t>(i)] + model.noise_sigma * rng.next_gaussian();
    // positive score predicts i ranked above j
    for (std::int32_t i = 1; i <= model.k; ++i)
        for (std::int32_t j = i + 1; j <= model.k; ++j)
            example.scores.scores.emplace(
                ProbeIndex{i, j},
                observed[static_cast<std::size_t>(i - 1)] - observed[static_cast<std::size_t>(j - 1)]);
    return example;
}

std::vector<ProbeIndex> sample_pair_queries(const std::vector<double>& relevances,
                                            const PairQueryParams& params, SplitRng& rng) {
    auto k = static_cast<std::int32_t>(relevances.size());
    if (k < 2) throw DomainError("pair queries need at least 2 items");
    double shift = 0.0;
    for (double r : relevances) shift = std::min(shift, r);
    std::vector<ProbeIndex> queries;
    for (std::int32_t i = 1; i <= k; ++i) {
        for (std::int32_t j = i + 1; j <= k; ++j) {
            double ri = relevances[static_cast<std::size_t>(i - 1)] - shift;
            double rj = relevances[static_cast<std::size_t>(j - 1)] - shift;
            double low = std::min(ri, rj);
            double gap = std::abs(ri - rj);
            double p = 1.0 - std::exp(-params.c1 * low * (1.0 + params.c2 * gap));
            if (rng.next_bernoulli(p)) queries.push_back({i, j});
        }
    }
    return queries;
}

TreeModel make_default_tree_model(std::int32_t leaves, std::int32_t branching) {
    TreeModel model;
    model.tree = make_balanced_tree(leaves, branching);
    return model;
}

TreeExample gen_tree_example(const TreeModel& model, SplitRng& rng) {
    const auto& leaves = model.tree.leaves();
    if (leaves.size() < 2) throw DomainError("tree model needs at least 2 leaves");

    // Dirichlet concentrated on a uniformly drawn prototype; the true leaf is
    // then sampled from the drawn probabilities, so they are exactly the
    // conditional law of the label.
    auto proto = static_cast<std::size_t>(rng.next_u64() % leaves.size());
    std::vector<double> gamma(leaves.size());
    double total = 0.0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        double shape = model.dirichlet_base + (i == proto ? model.dirichlet_boost : 0.0);
        gamma[i] = rng.next_gamma(shape);
        total += gamma[i];
    }
    TreeExample example;
    example.leaf_probs.resize(leaves.size());
    for (std::size_t i = 0; i < leaves.size(); ++i) example.leaf_probs[i] = gamma[i] / total;

    double u = rng.next_double();
    std::size_t drawn = leaves.size() - 1;
    double acc_mass = 0.0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
        acc_mass += example.leaf_probs[i];
        if (u < acc_mass) {
            drawn = i;
            break;
        }
    }
    example.label = TreeLeaf{leaves[drawn]};

    // node mass = sum of its subtree's leaf probabilities; parents come
    // before children in the parent array, so accumulate in reverse
    auto n = static_cast<std::size_t>(model.tree.node_count());
    std::vector<double> mass(n, 0.0);
    for (std::size_t i = 0; i < leaves.size(); ++i)
        mass[static_cast<std::size_t>(leaves[i])] = example.leaf_probs[i];
    for (std::size_t v = n; v-- > 1;)
        mass[static_cast<std::size_t>(model.tree.parent(static_cast<std::int32_t>(v)))] += mass[v];

    for (std::size_t v = 0; v < n; ++v) {
        // accumulation error can push a mass an ulp past 1, which would make
        // the accuracy estimate invalid
        double p = std::clamp(mass[v], 0.0, 1.0);
        double odds;
        if (p <= 0.0)
            odds = -model.s_max;
        else if (p >= 1.0)
            odds = model.s_max;
        else
            odds = std::clamp(std::log(p / (1.0 - p)), -model.s_max, model.s_max);
        ProbeIndex index{static_cast<std::int32_t>(v), -1};
        example.scores.scores.emplace(index, odds);
        example.acc.accuracies.emplace(index, std::max(p, 1.0 - p));
        example.acc.predictions.emplace(index, p > 0.5 ? Sign{1} : Sign{-1});
    }
    return example;
}

std::vector<ProbeIndex> sample_tree_queries(const Tree& tree, const TreeLeaf& label,
                                            const TreeQueryParams& params, SplitRng& rng) {
    tree.check_node(label.node);
    std::vector<ProbeIndex> queries;
    for (std::int32_t v = 0; v < tree.node_count(); ++v) {
        std::int32_t u = tree.common_ancestor(label.node, v);
        double dy = tree.depth(label.node) - tree.depth(u);
        double dv = tree.depth(v) - tree.depth(u);
        double p = std::min(1.0, params.a * std::exp(-params.b * dy - params.c * dv));
        if (rng.next_bernoulli(p)) queries.push_back({v, -1});
    }
    return queries;
}

namespace {

// Logistic link turning a score magnitude into a data-supplied accuracy.
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

UserFeedback answer_queries(const ProbeFamily& family, const Label& label,
                            const std::vector<ProbeIndex>& queries) {
    UserFeedback feedback;
    for (const auto& q : queries) feedback.answers.emplace(q, evaluate_probe(family, q, label));
    return feedback;
}

}  // namespace

CalibSample make_ranking_dataset(const RankingModel& model, const PairQueryParams& params,
                                 SetFamily family, std::size_t n, std::uint64_t seed) {
    ProbeFamily probes = make_pairwise_family(model.k);
    SplitRng root(seed);
    CalibSample sample;
    sample.family = family;
    sample.examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SplitRng rng = root.split(i);
        RankingExample drawn = gen_ranking_example(model, rng);
        std::vector<ProbeIndex> queries = sample_pair_queries(drawn.relevances, params, rng);
        while (queries.empty()) queries = sample_pair_queries(drawn.relevances, params, rng);

        Example example;
        example.id = "rank-" + std::to_string(seed) + "-" + std::to_string(i);
        example.feedback = answer_queries(probes, drawn.label, queries);
        example.label = drawn.label;
        if (family == SetFamily::bernoulli) {
            AccuracyVector acc;
            for (const auto& [index, s] : drawn.scores.scores) {
                acc.accuracies.emplace(index, logistic(std::abs(s)));
                acc.predictions.emplace(index, s > 0 ? Sign{1} : Sign{-1});
            }
            example.acc = std::move(acc);
        }
        example.scores = std::move(drawn.scores);
        sample.examples.push_back(std::move(example));
    }
    return sample;
}

CalibSample make_tree_dataset(const TreeModel& model, const TreeQueryParams& params,
                              SetFamily family, std::size_t n, std::uint64_t seed) {
    ProbeFamily probes = make_tree_family(model.tree);
    SplitRng root(seed);
    CalibSample sample;
    sample.family = family;
    sample.examples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SplitRng rng = root.split(i);
        TreeExample drawn = gen_tree_example(model, rng);
        std::vector<ProbeIndex> queries =
            sample_tree_queries(model.tree, drawn.label, params, rng);
        while (queries.empty()) queries = sample_tree_queries(model.tree, drawn.label, params, rng);

        Example example;
        example.id = "tree-" + std::to_string(seed) + "-" + std::to_string(i);
        example.feedback = answer_queries(probes, drawn.label, queries);
        example.label = drawn.label;
        example.scores = std::move(drawn.scores);
        example.acc = std::move(drawn.acc);
        sample.examples.push_back(std::move(example));
    }
    return sample;
}

AnsatzInstance gen_ansatz_instance(std::size_t probes, SplitRng& rng) {
    if (probes == 0) throw DomainError("ansatz instance needs at least one probe");
    AnsatzInstance instance;
    for (std::size_t i = 0; i < probes; ++i) {
        // bimodal accuracies: mostly confident probes, a tail of uncertain ones
        double pi = rng.next_bernoulli(0.6) ? 0.85 + 0.15 * rng.next_double()
                                            : 0.5 + 0.35 * rng.next_double();
        ProbeIndex index{static_cast<std::int32_t>(i + 1), -1};
        instance.acc.accuracies.emplace(index, pi);
        instance.acc.predictions.emplace(index, Sign{1});
        instance.queries.push_back(index);
    }
    return instance;
}

UserFeedback sample_ansatz_feedback(const AnsatzInstance& instance, SplitRng& rng) {
    UserFeedback feedback;
    for (const auto& [index, pi] : instance.acc.accuracies) {
        Sign predicted = instance.acc.predictions.at(index);
        bool correct = rng.next_bernoulli(pi);
        feedback.answers.emplace(index, correct ? predicted : Sign(-predicted));
    }
    return feedback;
}

}  // namespace probeset
