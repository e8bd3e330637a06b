// Release gate: one check per guarantee the library ships. Each criterion
// prints a single PASS/FAIL line with the observed statistic and its bound;
// the process exits nonzero if any line fails. Statistical checks use fixed
// seeds and three-sigma slack, so a failure means a broken invariant, not an
// unlucky draw.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "probeset/calibrate.hpp"
#include "probeset/experiment.hpp"
#include "probeset/loss.hpp"
#include "probeset/nested.hpp"
#include "probeset/oracle.hpp"
#include "probeset/probes.hpp"
#include "probeset/rng.hpp"
#include "probeset/synthetic.hpp"
#include "probeset/tree.hpp"

using namespace probeset;

namespace {

int failures = 0;

void report(int id, const char* name, bool passed, const std::string& detail) {
    std::printf("%s  %d  %-26s %s\n", passed ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!passed) ++failures;
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof buf, pattern, args);
    va_end(args);
    return buf;
}

// --- 1. coverage of the step-down conformal calibration -------------------

void criterion_coverage() {
    auto start = std::chrono::steady_clock::now();
    oracle::McResult mc = oracle::mc_stepdown_coverage(
        RankingModel{}, PairQueryParams{}, SetFamily::threshold,
        /*n=*/200, /*delta=*/0.2, /*alpha=*/0.1, /*trials=*/500, /*seed=*/1101, /*jobs=*/1);
    double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    double bound = 0.9 - 3.0 * std::sqrt(0.9 * 0.1 / 500.0);
    bool passed = mc.rate >= bound && elapsed < 120.0;
    report(1, "stepdown-coverage", passed,
           fmt("coverage=%.4f bound>=%.4f trials=%lld elapsed=%.1fs (limit 120s)", mc.rate, bound,
               static_cast<long long>(mc.trials), elapsed));
}

// --- 2. fixed-sequence selection rarely overshoots the true risk ----------

void criterion_fst_violation() {
    oracle::McResult mc =
        oracle::mc_fst_violation(/*n=*/100, /*grid_points=*/50, /*delta=*/0.2,
                                 /*alpha_fst=*/0.1, /*trials=*/500, /*seed=*/1202, /*jobs=*/1);
    double bound = 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / 500.0);
    bool passed = mc.rate <= bound;
    report(2, "fst-violation-rate", passed,
           fmt("violations=%.4f bound<=%.4f trials=%lld", mc.rate, bound,
               static_cast<long long>(mc.trials)));
}

// --- 3. the concentration p-value against an independent re-derivation ----

long double bernoulli_kl_ld(long double a, long double b) {
    if (a <= 0.0L) return -std::log(1.0L - b);
    if (a >= 1.0L) return -std::log(b);
    return a * std::log(a / b) + (1.0L - a) * std::log((1.0L - a) / (1.0L - b));
}

long double reference_pvalue(double mean, std::int64_t n, double delta) {
    long double a = std::min<long double>(mean, delta);
    long double exponential = std::exp(-static_cast<long double>(n) * bernoulli_kl_ld(a, delta));
    long double scaled = static_cast<long double>(n) * static_cast<long double>(mean);
    auto m = static_cast<std::int64_t>(std::ceil(scaled - 1e-12L * static_cast<long double>(n)));
    m = std::clamp<std::int64_t>(m, 0, n);
    long double binomial = std::exp(1.0L) * oracle::exact_binomial_cdf(n, delta, m);
    return std::min({1.0L, exponential, binomial});
}

void criterion_pvalue() {
    long double worst = 0.0L;
    std::int64_t worst_n = 0;
    double worst_delta = 0.0;
    double worst_mean = 0.0;
    for (std::int64_t n = 1; n <= 200; ++n) {
        for (double delta : {0.05, 0.1, 0.2, 0.5}) {
            for (int i = 0; i <= 100; ++i) {
                double mean = 0.01 * i;
                long double fast = hb_pvalue(mean, n, delta);
                long double ref = reference_pvalue(mean, n, delta);
                long double rel = std::abs(fast - ref) / std::max(1e-300L, ref);
                if (rel > worst) {
                    worst = rel;
                    worst_n = n;
                    worst_delta = delta;
                    worst_mean = mean;
                }
            }
        }
    }
    bool agree = worst <= 1e-12L;

    // super-uniformity: under losses that exactly meet the level, small
    // p-values appear no more often than their size
    const double delta = 0.2;
    const std::int64_t n = 100;
    const std::int64_t trials = 2000;
    SplitRng root(1303);
    std::vector<double> pvalues;
    pvalues.reserve(trials);
    for (std::int64_t t = 0; t < trials; ++t) {
        SplitRng rng = root.split(static_cast<std::uint64_t>(t));
        std::int64_t sum = 0;
        for (std::int64_t i = 0; i < n; ++i) sum += rng.next_bernoulli(delta) ? 1 : 0;
        pvalues.push_back(hb_pvalue(static_cast<double>(sum) / static_cast<double>(n), n, delta));
    }
    bool uniform = true;
    double worst_excess = 0.0;
    for (double alpha : {0.05, 0.1, 0.2}) {
        std::int64_t hits = 0;
        for (double p : pvalues) hits += p <= alpha ? 1 : 0;
        double rate = static_cast<double>(hits) / static_cast<double>(trials);
        double bound = alpha + 3.0 * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(trials));
        worst_excess = std::max(worst_excess, rate - bound);
        uniform = uniform && rate <= bound;
    }

    report(3, "pvalue-oracle-agreement", agree && uniform,
           fmt("worst_rel=%.3Lg (n=%lld delta=%.2f mean=%.2f, tol 1e-12); "
               "super-uniform excess=%.4f (<=0 required)",
               worst, static_cast<long long>(worst_n), worst_delta, worst_mean, worst_excess));
}

// --- 4. fast threshold-family paths equal brute-force re-derivations ------

struct RandomInstance {
    ScoreVector scores;
    UserFeedback feedback;
};

// Adversarial shapes on purpose: exact ties, zero scores, probes scored but
// never queried, probes queried but never scored.
RandomInstance random_instance(SplitRng& rng) {
    RandomInstance instance;
    auto probes = static_cast<std::int32_t>(1 + rng.next_u64() % 20);
    int queried = 0;
    for (std::int32_t i = 1; i <= probes; ++i) {
        ProbeIndex index{i, -1};
        bool scored = rng.next_bernoulli(0.9);
        if (scored) {
            double magnitude;
            switch (rng.next_u64() % 4) {
                case 0: magnitude = 0.0; break;
                case 1: magnitude = 0.5; break;
                case 2: magnitude = 1.0; break;
                default: magnitude = 3.0 * rng.next_double(); break;
            }
            double sign = rng.next_bernoulli(0.5) ? 1.0 : -1.0;
            instance.scores.scores.emplace(index, sign * magnitude);
        }
        if (rng.next_bernoulli(0.8) || (!scored && queried == 0 && i == probes)) {
            instance.feedback.answers.emplace(index, rng.next_bernoulli(0.5) ? Sign{1} : Sign{-1});
            ++queried;
        }
    }
    if (queried == 0) instance.feedback.answers.emplace(ProbeIndex{1, -1}, Sign{1});
    return instance;
}

void criterion_oracle_equivalence() {
    SplitRng root(1404);
    const double delta = 0.25;
    std::int64_t mismatches = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        SplitRng rng = root.split(static_cast<std::uint64_t>(rep));
        RandomInstance instance = random_instance(rng);
        PiecewiseTrace trace = loss_trace(instance.scores, instance.feedback);
        bool ok =
            stepdown_score(trace, delta) ==
                oracle::brute_stepdown_score(instance.scores, instance.feedback, delta) &&
            stepup_score(trace, delta) ==
                oracle::brute_stepup_score(instance.scores, instance.feedback, delta);
        for (double lambda : oracle::dense_grid(instance.scores, instance.feedback)) {
            auto [wrong, answered] =
                oracle::brute_loss_at(instance.scores, instance.feedback, lambda);
            const FppLoss& fast = trace.evaluate(lambda);
            ok = ok && fast.wrong == wrong && fast.overlap == answered;
            FppLoss direct = fpp_loss(instance.feedback, threshold_set(instance.scores, lambda));
            ok = ok && direct.wrong == wrong && direct.overlap == answered;
        }
        if (!ok) ++mismatches;
    }

    // the first-crossing target never exceeds the stay-below target
    std::int64_t ordered = 0;
    const int samples = 100;
    for (int rep = 0; rep < samples; ++rep) {
        SplitRng rng = root.split(10'000 + static_cast<std::uint64_t>(rep));
        CalibSample population;
        population.family = SetFamily::threshold;
        auto n = static_cast<std::size_t>(20 + rng.next_u64() % 30);
        for (std::size_t i = 0; i < n; ++i) {
            SplitRng item = rng.split(i);
            RandomInstance instance = random_instance(item);
            Example example;
            example.id = "r" + std::to_string(i);
            example.scores = instance.scores;
            example.feedback = instance.feedback;
            population.examples.push_back(std::move(example));
        }
        oracle::LambdaTargets targets = oracle::brute_lambda_targets(population, 0.25, 0.2);
        CalibrationOutcome down = calibrate_stepdown(population, 0.25, 0.2);
        CalibrationOutcome up = calibrate_stepup(population, 0.25, 0.2, 1e-9);
        if (targets.lambda_up <= targets.lambda_down &&
            up.parameter - 1e-9 <= down.parameter)
            ++ordered;
    }

    bool passed = mismatches == 0 && ordered == samples;
    report(4, "oracle-equivalence", passed,
           fmt("mismatches=%lld/1000 (exact), up<=down on %lld/%d samples",
               static_cast<long long>(mismatches), static_cast<long long>(ordered), samples));
}

// --- 5. adaptive accuracy threshold controls conditional expected loss ----

void criterion_adaptive_expectation() {
    SplitRng root(1505);
    const double delta_acc = 0.9;
    double worst_margin = -1.0;
    int ok = 0;
    const int instances = 20;
    for (int i = 0; i < instances; ++i) {
        SplitRng rng = root.split(static_cast<std::uint64_t>(i));
        AnsatzInstance instance = gen_ansatz_instance(40, rng);
        oracle::ConditionalFpp fpp =
            oracle::alg4_conditional_fpp(instance, delta_acc, /*draws=*/10'000,
                                         /*seed=*/rng.next_u64());
        double bound = (1.0 - delta_acc) + 3.0 * fpp.std_error;
        double margin = fpp.mean - bound;
        worst_margin = std::max(worst_margin, margin);
        if (margin <= 0.0) ++ok;
    }
    report(5, "adaptive-expectation", ok == instances,
           fmt("instances_ok=%d/%d worst(mean - bound)=%.5f (<=0 required)", ok, instances,
               worst_margin));
}

// --- 6. every shipped family tells all labels apart ------------------------

void criterion_identifiability() {
    const std::uint64_t cap = 2'000'000;
    int checked = 0;
    int ok = 0;
    auto expect = [&](const ProbeFamily& family) {
        ++checked;
        if (check_identifiability(family, cap)) ++ok;
    };
    for (std::int32_t k = 2; k <= 5; ++k) expect(make_pairwise_family(k));
    for (std::int32_t k = 1; k <= 5; ++k) expect(make_rank_position_family(k));
    for (std::int32_t k = 1; k <= 12; ++k) expect(make_bitvector_family(k));
    const std::pair<std::int32_t, std::int32_t> shapes[] = {
        {2, 2}, {17, 3}, {33, 5}, {64, 2}, {64, 8}};
    for (auto [leaves, branching] : shapes)
        expect(make_tree_family(make_balanced_tree(leaves, branching)));
    report(6, "identifiability", ok == checked, fmt("families_ok=%d/%d (exhaustive)", ok, checked));
}

// --- 7. the methods order as conservative / middle / optimistic -----------

void criterion_sweep_ordering() {
    SweepConfig config;  // the struct defaults are this experiment's regime
    config.methods = {Method::stepdown, Method::fst_quantile, Method::stepup};
    config.families = {SetFamily::threshold};
    config.alphas = {0.1, 0.15, 0.2};
    config.deltas = {0.1, 0.15, 0.2, 0.25};

    SweepResult result = run_sweep(config, /*jobs=*/0);

    std::map<std::pair<double, double>, std::map<Method, const SweepSummary*>> cells;
    for (const auto& summary : result.summaries)
        cells[{summary.alpha, summary.delta}][summary.method] = &summary;

    int gap_ok = 0;
    int abstention_ok = 0;
    int total = 0;
    for (const auto& [key, methods] : cells) {
        ++total;
        const SweepSummary* down = methods.at(Method::stepdown);
        const SweepSummary* fst = methods.at(Method::fst_quantile);
        const SweepSummary* up = methods.at(Method::stepup);
        if (down->gap_mean <= fst->gap_mean && fst->gap_mean <= up->gap_mean) ++gap_ok;
        if (down->abstention_mean >= fst->abstention_mean &&
            fst->abstention_mean >= up->abstention_mean)
            ++abstention_ok;
    }
    // ceil(0.8 * 12) = 10 cells
    int need = (total * 4 + 4) / 5;
    bool passed = gap_ok >= need && abstention_ok >= need;
    report(7, "sweep-method-ordering", passed,
           fmt("gap_cells=%d/%d abstention_cells=%d/%d need>=%d", gap_ok, total, abstention_ok,
               total, need));
}

// --- 8. tree query sampler volume ------------------------------------------

void criterion_tree_queries() {
    TreeModel model = make_default_tree_model(1000, 8);
    TreeQueryParams params;  // a=2, b=0.1, c=1.5
    SplitRng root(1808);
    const int instances = 500;
    double total = 0.0;
    for (int i = 0; i < instances; ++i) {
        SplitRng rng = root.split(static_cast<std::uint64_t>(i));
        TreeExample example = gen_tree_example(model, rng);
        total += static_cast<double>(
            sample_tree_queries(model.tree, example.label, params, rng).size());
    }
    double mean = total / instances;
    bool passed = mean >= 20.0 && mean <= 45.0;
    report(8, "tree-query-volume", passed,
           fmt("mean_queries=%.2f target=[20,45] instances=%d", mean, instances));
}

}  // namespace

int main() {
    criterion_coverage();
    criterion_fst_violation();
    criterion_pvalue();
    criterion_oracle_equivalence();
    criterion_adaptive_expectation();
    criterion_identifiability();
    criterion_sweep_ordering();
    criterion_tree_queries();

    std::printf("acceptance: %d/8 criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}
