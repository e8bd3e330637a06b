#pragma once

#include <cstdint>
#include <vector>

#include "probeset/calibrate.hpp"
#include "probeset/nested.hpp"
#include "probeset/probes.hpp"
#include "probeset/rng.hpp"
#include "probeset/tree.hpp"

namespace probeset {

// Listwise ranking task: latent item relevances, a Plackett-Luce permutation,
// and noisy pairwise scores.
struct RankingModel {
    std::int32_t k = 8;
    double relevance_scale = 6.0;  // relevances are scale * Exp(1) i.i.d.
    double noise_sigma = 0.5;      // Gaussian noise on observed relevances
};

// Pair (i,j) is queried with probability
//   1 - exp(-c1 * min(r_i, r_j) * (1 + c2 * |r_i - r_j|)),
// so users ask mostly about pairs of jointly relevant items.
struct PairQueryParams {
    double c1 = 0.05;
    double c2 = 0.2;
};

struct RankingExample {
    Permutation label;
    ScoreVector scores;               // all pairs (i,j), i < j: noisy r_i - r_j
    std::vector<double> relevances;   // latent truth, drives the query sampler
};

// Draws relevances, the Plackett-Luce permutation (Gumbel-max), and pairwise
// scores from noisy per-item relevances.
RankingExample gen_ranking_example(const RankingModel& model, SplitRng& rng);

// Query sampler over all item pairs. Negative relevances are shifted up to
// zero first.
std::vector<ProbeIndex> sample_pair_queries(const std::vector<double>& relevances,
                                            const PairQueryParams& params, SplitRng& rng);

// Hierarchical classification task: leaf probabilities from a Dirichlet
// concentrated on a uniformly drawn prototype leaf, the true leaf sampled
// from those probabilities, node scores from aggregated log odds.
struct TreeModel {
    Tree tree;
    double dirichlet_base = 0.1;
    double dirichlet_boost = 10.0;
    double s_max = 30.0;  // log-odds clamp
};

TreeModel make_default_tree_model(std::int32_t leaves = 1000, std::int32_t branching = 8);

// Node v is queried with probability min(1, a * exp(-b*d(y,u) - c*d(v,u)))
// where u is the common ancestor of the true leaf y and v: users drill down
// near the truth and rarely ask about distant branches.
struct TreeQueryParams {
    double a = 2.0;
    double b = 0.1;
    double c = 1.5;
};

struct TreeExample {
    TreeLeaf label;
    ScoreVector scores;        // per node: clamped log odds of the subtree mass
    AccuracyVector acc;        // per node: max(p_v, 1 - p_v) and the hard call
    std::vector<double> leaf_probs;
};

TreeExample gen_tree_example(const TreeModel& model, SplitRng& rng);

std::vector<ProbeIndex> sample_tree_queries(const Tree& tree, const TreeLeaf& label,
                                            const TreeQueryParams& params, SplitRng& rng);

// Full weakly supervised datasets: per example the query set is resampled
// until nonempty and answered truthfully from the drawn label. Ranking
// accuracy estimates use the logistic link on |score|.
CalibSample make_ranking_dataset(const RankingModel& model, const PairQueryParams& params,
                                 SetFamily family, std::size_t n, std::uint64_t seed);

CalibSample make_tree_dataset(const TreeModel& model, const TreeQueryParams& params,
                              SetFamily family, std::size_t n, std::uint64_t seed);

// Independence-ansatz instance: abstract probes with known true per-probe
// accuracies (mixture of confident and uncertain probes); user answers flip
// the prediction independently with probability 1 - pi_i. The accuracy vector
// carries the true pi, so adaptive-threshold expectations are exact.
struct AnsatzInstance {
    AccuracyVector acc;                 // true accuracies, predictions all +1
    std::vector<ProbeIndex> queries;    // all probes are queried
};

AnsatzInstance gen_ansatz_instance(std::size_t probes, SplitRng& rng);

// One simulated user answer set for the instance (fresh mistakes each call).
UserFeedback sample_ansatz_feedback(const AnsatzInstance& instance, SplitRng& rng);

}  // namespace probeset
