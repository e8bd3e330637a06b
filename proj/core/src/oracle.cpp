#include "probeset/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "probeset/errors.hpp"
#include "probeset/parallel.hpp"

namespace probeset {
namespace oracle {

std::vector<double> dense_grid(const ScoreVector& scores, const UserFeedback& feedback) {
    std::set<double> magnitudes;
    for (const auto& [index, answer] : feedback.answers) {
        auto it = scores.scores.find(index);
        if (it != scores.scores.end() && it->second != 0.0) magnitudes.insert(std::abs(it->second));
    }
    std::vector<double> grid{0.0};
    double prev = 0.0;
    for (double m : magnitudes) {
        if (m > prev) grid.push_back(0.5 * (prev + m));
        grid.push_back(m);
        prev = m;
    }
    grid.push_back(prev + 1.0);
    return grid;
}

std::pair<std::int64_t, std::int64_t> brute_loss_at(const ScoreVector& scores,
                                                    const UserFeedback& feedback, double lambda) {
    std::int64_t wrong = 0, answered = 0;
    for (const auto& [index, answer] : feedback.answers) {
        auto it = scores.scores.find(index);
        if (it == scores.scores.end()) continue;
        double s = it->second;
        if (std::abs(s) > lambda) {
            ++answered;
            if ((s > 0 ? 1 : -1) != answer) ++wrong;
        }
    }
    return {wrong, answered};
}

namespace {

double brute_loss_value(const ScoreVector& scores, const UserFeedback& feedback, double lambda) {
    auto [wrong, answered] = brute_loss_at(scores, feedback, lambda);
    return answered > 0 ? static_cast<double>(wrong) / static_cast<double>(answered) : 0.0;
}

std::vector<double> sorted_magnitudes(const ScoreVector& scores, const UserFeedback& feedback) {
    std::set<double> magnitudes;
    for (const auto& [index, answer] : feedback.answers) {
        auto it = scores.scores.find(index);
        if (it != scores.scores.end() && it->second != 0.0) magnitudes.insert(std::abs(it->second));
    }
    return {magnitudes.begin(), magnitudes.end()};
}

}  // namespace

double brute_stepdown_score(const ScoreVector& scores, const UserFeedback& feedback,
                            double delta) {
    std::vector<double> grid = dense_grid(scores, feedback);
    std::vector<double> magnitudes = sorted_magnitudes(scores, feedback);
    // the last failing sample pins the failing interval; the score is that
    // interval's right endpoint
    double last_failing = -1.0;
    for (double g : grid)
        if (brute_loss_value(scores, feedback, g) > delta) last_failing = g;
    if (last_failing < 0.0) return 0.0;
    for (double m : magnitudes)
        if (m > last_failing) return m;
    return std::numeric_limits<double>::infinity();
}

double brute_stepup_score(const ScoreVector& scores, const UserFeedback& feedback, double delta) {
    std::vector<double> grid = dense_grid(scores, feedback);
    std::vector<double> magnitudes = sorted_magnitudes(scores, feedback);
    for (double g : grid) {
        if (brute_loss_value(scores, feedback, g) <= delta) {
            // the curve is constant from the last magnitude at or below g
            double score = 0.0;
            for (double m : magnitudes)
                if (m <= g) score = m;
            return score;
        }
    }
    return std::numeric_limits<double>::infinity();
}

LambdaTargets brute_lambda_targets(const CalibSample& population, double delta, double alpha) {
    check_sample(population);
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");

    std::vector<PiecewiseTrace> traces;
    traces.reserve(population.examples.size());
    std::set<double> candidate_set{0.0};
    for (const auto& example : population.examples) {
        traces.push_back(example_trace(example, population.family));
        for (double b : traces.back().breakpoints) candidate_set.insert(b);
    }

    auto n = static_cast<std::int64_t>(traces.size());
    std::int64_t needed = detail::snapped_ceil((1.0 - alpha) * static_cast<double>(n));

    auto tail_ok = [](const PiecewiseTrace& trace, double lambda, double delta_) {
        // every interval that extends past lambda must qualify
        for (std::size_t k = 0; k < trace.values.size(); ++k) {
            double end = k < trace.breakpoints.size() ? trace.breakpoints[k]
                                                      : std::numeric_limits<double>::infinity();
            if (end <= lambda) continue;
            if (trace.values[k].value() > delta_) return false;
        }
        return true;
    };

    LambdaTargets targets{std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::infinity()};
    bool up_found = false, down_found = false;
    for (double candidate : candidate_set) {
        if (!up_found) {
            std::int64_t satisfied = 0;
            for (const auto& trace : traces)
                if (trace.evaluate(candidate).value() <= delta) ++satisfied;
            if (satisfied >= needed) {
                targets.lambda_up = candidate;
                up_found = true;
            }
        }
        if (!down_found) {
            std::int64_t satisfied = 0;
            for (const auto& trace : traces)
                if (tail_ok(trace, candidate, delta)) ++satisfied;
            if (satisfied >= needed) {
                targets.lambda_down = candidate;
                down_found = true;
            }
        }
        if (up_found && down_found) break;
    }
    return targets;
}

long double exact_binomial_cdf(std::int64_t n, double p, std::int64_t m) {
    if (n < 0) throw DomainError("binomial cdf needs n >= 0");
    if (m < 0) return 0.0L;
    if (m >= n) return 1.0L;
    if (p <= 0.0) return 1.0L;
    if (p >= 1.0) return 0.0L;
    long double lp = static_cast<long double>(p);
    long double lq = 1.0L - lp;
    long double term = powl(lq, static_cast<long double>(n));
    long double sum = term;
    for (std::int64_t k = 0; k < m; ++k) {
        term *= static_cast<long double>(n - k) / static_cast<long double>(k + 1) * (lp / lq);
        sum += term;
    }
    return sum > 1.0L ? 1.0L : sum;
}

namespace {

McResult reduce_hits(const std::vector<char>& hits) {
    McResult result;
    result.trials = static_cast<std::int64_t>(hits.size());
    for (char h : hits) result.hits += h ? 1 : 0;
    result.rate = static_cast<double>(result.hits) / static_cast<double>(result.trials);
    result.std_error =
        std::sqrt(result.rate * (1.0 - result.rate) / static_cast<double>(result.trials));
    return result;
}

}  // namespace

McResult mc_stepdown_coverage(const RankingModel& model, const PairQueryParams& params,
                              SetFamily family, std::size_t n, double delta, double alpha,
                              std::int64_t trials, std::uint64_t seed, int jobs) {
    if (trials < 1) throw DomainError("need at least one trial");
    std::vector<char> hits(static_cast<std::size_t>(trials), 0);
    SplitRng root(seed);
    parallel_for(trials, jobs, [&](std::int64_t t) {
        SplitRng stream = root.split(static_cast<std::uint64_t>(t));
        std::uint64_t calib_seed = stream.next_u64();
        std::uint64_t test_seed = stream.next_u64();
        CalibSample sample = make_ranking_dataset(model, params, family, n, calib_seed);
        CalibSample test = make_ranking_dataset(model, params, family, 1, test_seed);
        CalibrationOutcome outcome = calibrate_stepdown(sample, delta, alpha);
        ProbeAdaptedSet set = apply_outcome(outcome, test.examples[0]);
        double loss = fpp_loss(test.examples[0].feedback, set).value();
        hits[static_cast<std::size_t>(t)] = loss <= delta ? 1 : 0;
    });
    return reduce_hits(hits);
}

StepupMcResult mc_stepup_exceedance(const RankingModel& model, const PairQueryParams& params,
                                    std::size_t n, std::size_t holdout_n, double delta,
                                    double alpha, double epsilon, std::int64_t trials,
                                    std::uint64_t seed, int jobs) {
    if (trials < 1) throw DomainError("need at least one trial");
    std::vector<char> exceed(static_cast<std::size_t>(trials), 0);
    std::vector<double> errs(static_cast<std::size_t>(trials), 0.0);
    SplitRng root(seed);
    parallel_for(trials, jobs, [&](std::int64_t t) {
        SplitRng stream = root.split(static_cast<std::uint64_t>(t));
        std::uint64_t calib_seed = stream.next_u64();
        std::uint64_t holdout_seed = stream.next_u64();
        std::uint64_t test_seed = stream.next_u64();
        CalibSample sample =
            make_ranking_dataset(model, params, SetFamily::threshold, n, calib_seed);
        CalibSample holdout =
            make_ranking_dataset(model, params, SetFamily::threshold, holdout_n, holdout_seed);
        CalibSample test = make_ranking_dataset(model, params, SetFamily::threshold, 1, test_seed);
        CalibrationOutcome outcome = calibrate_stepup(sample, delta, alpha, epsilon);
        double raw_quantile = outcome.parameter - epsilon;
        errs[static_cast<std::size_t>(t)] =
            estimate_err(holdout, raw_quantile, epsilon, delta).probability;
        ProbeAdaptedSet set = apply_outcome(outcome, test.examples[0]);
        double loss = fpp_loss(test.examples[0].feedback, set).value();
        exceed[static_cast<std::size_t>(t)] = loss > delta ? 1 : 0;
    });
    StepupMcResult result;
    result.exceedance = reduce_hits(exceed);
    double sum = 0.0;
    for (double e : errs) sum += e;
    result.err_mean = sum / static_cast<double>(trials);
    double var = 0.0;
    for (double e : errs) var += (e - result.err_mean) * (e - result.err_mean);
    var /= static_cast<double>(trials) * std::max<double>(1.0, static_cast<double>(trials - 1));
    result.err_se = std::sqrt(var);
    return result;
}

McResult mc_fst_violation(std::size_t n, std::size_t grid_points, double delta, double alpha_fst,
                          std::int64_t trials, std::uint64_t seed, int jobs) {
    if (trials < 1) throw DomainError("need at least one trial");
    if (grid_points < 2) throw DomainError("need at least two grid points");
    // true expected loss falls linearly and crosses delta exactly at the grid
    // midpoint, the hardest boundary for the test
    std::vector<double> mu(grid_points);
    for (std::size_t k = 0; k < grid_points; ++k) {
        double lambda = static_cast<double>(k + 1) / static_cast<double>(grid_points);
        mu[k] = std::clamp(delta + 0.3 * (0.5 - lambda), 0.001, 0.999);
    }
    std::vector<char> violations(static_cast<std::size_t>(trials), 0);
    SplitRng root(seed);
    parallel_for(trials, jobs, [&](std::int64_t t) {
        SplitRng stream = root.split(static_cast<std::uint64_t>(t));
        // comonotone Bernoulli losses: one uniform per example drives every
        // grid point, so per-example losses are nonincreasing in lambda
        std::vector<double> means(grid_points, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            double u = stream.next_double();
            for (std::size_t k = 0; k < grid_points; ++k)
                if (u < mu[k]) means[k] += 1.0;
        }
        for (auto& m : means) m /= static_cast<double>(n);
        FstSelection sel = fst_select(means, static_cast<std::int64_t>(n), delta, alpha_fst);
        bool violated = sel.first_accepted < grid_points && mu[sel.first_accepted] > delta;
        violations[static_cast<std::size_t>(t)] = violated ? 1 : 0;
    });
    return reduce_hits(violations);
}

ConditionalFpp alg4_conditional_fpp(const AnsatzInstance& instance, double delta_acc,
                                    std::int64_t draws, std::uint64_t seed) {
    if (draws < 2) throw DomainError("need at least two draws");
    double eta = bernoulli_threshold(instance.acc, instance.queries, delta_acc);
    ProbeAdaptedSet set = eta_set(instance.acc, eta);
    SplitRng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t d = 0; d < draws; ++d) {
        UserFeedback feedback = sample_ansatz_feedback(instance, rng);
        double loss = fpp_loss(feedback, set).value();
        sum += loss;
        sumsq += loss * loss;
    }
    ConditionalFpp out;
    out.mean = sum / static_cast<double>(draws);
    double var = (sumsq - sum * sum / static_cast<double>(draws)) / static_cast<double>(draws - 1);
    out.std_error = std::sqrt(std::max(0.0, var) / static_cast<double>(draws));
    return out;
}

}  // namespace oracle
}  // namespace probeset
