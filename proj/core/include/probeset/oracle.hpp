#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "probeset/calibrate.hpp"
#include "probeset/nested.hpp"
#include "probeset/synthetic.hpp"

namespace probeset {
// Slow, independent re-derivations of the fast paths plus Monte-Carlo checks
// of the distributional guarantees. Nothing here shares code with the
// implementations it validates beyond the public types.
namespace oracle {

// 0, every breakpoint magnitude, midpoints between neighbors, and a point
// past the largest: enough samples to pin a piecewise-constant curve on
// every interval.
std::vector<double> dense_grid(const ScoreVector& scores, const UserFeedback& feedback);

// Loss at one threshold, recomputed from the definitions by filtering and
// counting (no trace, no set type). Returns {wrong, answered}.
std::pair<std::int64_t, std::int64_t> brute_loss_at(const ScoreVector& scores,
                                                    const UserFeedback& feedback, double lambda);

double brute_stepdown_score(const ScoreVector& scores, const UserFeedback& feedback, double delta);
double brute_stepup_score(const ScoreVector& scores, const UserFeedback& feedback, double delta);

// Population-exact targets over a finite stand-in population: the smallest
// candidate parameter at which at least 1-alpha of the population satisfies
// the pointwise (up) or tail (down) loss condition. Candidates are 0 and
// every population breakpoint. up <= down always.
struct LambdaTargets {
    double lambda_up = 0.0;
    double lambda_down = 0.0;
};
LambdaTargets brute_lambda_targets(const CalibSample& population, double delta, double alpha);

// P(Bin(n,p) <= m) summed term by term in extended precision; the reference
// for the p-value's binomial branch.
long double exact_binomial_cdf(std::int64_t n, double p, std::int64_t m);

struct McResult {
    double rate = 0.0;       // frequency of the checked event
    double std_error = 0.0;  // binomial SE of `rate`
    std::int64_t hits = 0;
    std::int64_t trials = 0;
};

// Fresh calibration sample + one test draw per trial; event: test FPP at the
// calibrated parameter stays within delta.
McResult mc_stepdown_coverage(const RankingModel& model, const PairQueryParams& params,
                              SetFamily family, std::size_t n, double delta, double alpha,
                              std::int64_t trials, std::uint64_t seed, int jobs = 1);

struct StepupMcResult {
    McResult exceedance;   // event: test FPP exceeds delta
    double err_mean = 0.0; // mean estimated slack term across trials
    double err_se = 0.0;
};
StepupMcResult mc_stepup_exceedance(const RankingModel& model, const PairQueryParams& params,
                                    std::size_t n, std::size_t holdout_n, double delta,
                                    double alpha, double epsilon, std::int64_t trials,
                                    std::uint64_t seed, int jobs = 1);

// Synthetic decreasing-risk model for the fixed-sequence guarantee: the true
// expected loss falls linearly across the grid and equals delta exactly at an
// interior grid point; per-example losses are comonotone Bernoulli draws.
// Event: the selected parameter's true expected loss exceeds delta.
McResult mc_fst_violation(std::size_t n, std::size_t grid_points, double delta, double alpha_fst,
                          std::int64_t trials, std::uint64_t seed, int jobs = 1);

// Conditional expected FPP of the adaptive-threshold set for one fixed
// instance, averaged over simulated user answers.
struct ConditionalFpp {
    double mean = 0.0;
    double std_error = 0.0;
};
ConditionalFpp alg4_conditional_fpp(const AnsatzInstance& instance, double delta_acc,
                                    std::int64_t draws, std::uint64_t seed);

// Self-check suite: every oracle-backed property at configurable Monte-Carlo
// size. trials_scale = 1 reproduces the reference sizes.
struct CheckResult {
    std::string name;
    bool passed = false;
    double observed = 0.0;
    double bound = 0.0;
    std::string details;
};

struct SelfCheckOptions {
    double trials_scale = 1.0;
    std::uint64_t seed = 20260816;
    int jobs = 1;
    bool inject_quantile_bug = false;  // k-1 fault; the suite must then fail
};

std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& options);

}  // namespace oracle
}  // namespace probeset
