#include "probeset/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "probeset/errors.hpp"

namespace probeset {

namespace detail {
std::atomic<int> quantile_index_offset{0};

// ceil with a snap to the nearest integer (relative 1e-9) so values like
// 100 * 0.9 that land a few ulp above the exact integer do not round up.
std::int64_t snapped_ceil(double x) {
    double r = std::nearbyint(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::int64_t>(r);
    return static_cast<std::int64_t>(std::ceil(x));
}

// k = ceil((n+1)(1-alpha)) clamped to 1..n, plus the fault-injection offset.
std::int64_t conformal_index(std::int64_t n, double alpha) {
    std::int64_t k = snapped_ceil(static_cast<double>(n + 1) * (1.0 - alpha));
    k += quantile_index_offset.load(std::memory_order_relaxed);
    return std::clamp<std::int64_t>(k, 1, n);
}
}  // namespace detail

std::string to_string(SetFamily family) {
    return family == SetFamily::threshold ? "threshold" : "bernoulli";
}

std::string to_string(Method method) {
    switch (method) {
        case Method::stepdown: return "stepdown";
        case Method::stepup: return "stepup";
        case Method::fst: return "fst";
        case Method::fst_quantile: return "fst-quantile";
    }
    return "?";
}

SetFamily family_from_name(const std::string& name) {
    if (name == "threshold") return SetFamily::threshold;
    if (name == "bernoulli") return SetFamily::bernoulli;
    throw DomainError("unknown set family '" + name + "'");
}

Method method_from_name(const std::string& name) {
    if (name == "stepdown") return Method::stepdown;
    if (name == "stepup") return Method::stepup;
    if (name == "fst") return Method::fst;
    if (name == "fst-quantile") return Method::fst_quantile;
    throw DomainError("unknown method '" + name + "'");
}

void check_sample(const CalibSample& sample) {
    if (sample.examples.empty()) throw DomainError("calibration sample is empty");
    for (const auto& example : sample.examples) {
        if (example.feedback.answers.empty())
            throw DomainError("example '" + example.id + "' has no queries");
        if (sample.family == SetFamily::threshold) {
            if (!example.scores)
                throw DomainError("example '" + example.id + "' has no scores");
            check_scores(*example.scores);
        } else {
            if (!example.acc)
                throw DomainError("example '" + example.id + "' has no accuracy estimates");
            check_accuracies(*example.acc);
            for (const auto& [index, answer] : example.feedback.answers)
                if (!example.acc->accuracies.contains(index))
                    throw DomainError("example '" + example.id +
                                      "' queries a probe without an accuracy estimate");
        }
    }
}

PiecewiseTrace example_trace(const Example& example, SetFamily family) {
    if (family == SetFamily::threshold) {
        if (!example.scores) throw DomainError("threshold family needs scores");
        return loss_trace(*example.scores, example.feedback);
    }
    if (!example.acc) throw DomainError("bernoulli family needs accuracy estimates");
    return bernoulli_loss_trace(*example.acc, example.feedback);
}

FppLoss example_loss_at(const Example& example, SetFamily family, double parameter) {
    if (family == SetFamily::threshold) {
        if (!example.scores) throw DomainError("threshold family needs scores");
        return fpp_loss(example.feedback, threshold_set(*example.scores, parameter));
    }
    if (!example.acc) throw DomainError("bernoulli family needs accuracy estimates");
    std::vector<ProbeIndex> queries;
    queries.reserve(example.feedback.answers.size());
    for (const auto& [index, answer] : example.feedback.answers) queries.push_back(index);
    double eta = bernoulli_threshold(*example.acc, queries, parameter);
    return fpp_loss(example.feedback, eta_set(*example.acc, eta));
}

double stepdown_score(const PiecewiseTrace& trace, double delta) {
    // last interval whose loss exceeds delta forces the score to its right
    // endpoint; past the final breakpoint the curve must already qualify
    for (std::size_t k = trace.values.size(); k-- > 0;) {
        if (trace.values[k].value() > delta) {
            if (k == trace.breakpoints.size()) return std::numeric_limits<double>::infinity();
            return trace.breakpoints[k];
        }
    }
    return 0.0;
}

double stepup_score(const PiecewiseTrace& trace, double delta) {
    for (std::size_t k = 0; k < trace.values.size(); ++k)
        if (trace.values[k].value() <= delta) return k == 0 ? 0.0 : trace.breakpoints[k - 1];
    return std::numeric_limits<double>::infinity();
}

double conformal_quantile(std::vector<double> scores, double alpha) {
    if (scores.empty()) throw DomainError("conformal quantile of an empty sample");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    auto n = static_cast<std::int64_t>(scores.size());
    std::int64_t k = detail::conformal_index(n, alpha);
    std::sort(scores.begin(), scores.end());
    return scores[static_cast<std::size_t>(k - 1)];
}

namespace {

// Kullback-Leibler divergence between Bernoulli(a) and Bernoulli(b), the
// exponent of the Hoeffding branch. a <= b < 1 here.
double bernoulli_kl(double a, double b) {
    if (a <= 0.0) return -std::log1p(-b);
    double t1 = a * std::log(a / b);
    double t2 = (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
    return t1 + t2;
}

// log P(Bin(n, p) <= m) by a streaming logsumexp over log pmf terms.
double log_binomial_cdf(std::int64_t n, double p, std::int64_t m) {
    if (m >= n) return 0.0;
    double log_p = std::log(p);
    double log_q = std::log1p(-p);
    double log_term = static_cast<double>(n) * log_q;  // k = 0
    double running = log_term;
    for (std::int64_t k = 0; k < m; ++k) {
        log_term += std::log(static_cast<double>(n - k)) - std::log(static_cast<double>(k + 1)) +
                    log_p - log_q;
        double hi = std::max(running, log_term);
        running = hi + std::log(std::exp(running - hi) + std::exp(log_term - hi));
    }
    return running;
}

}  // namespace

double hb_pvalue(double mean_loss, std::int64_t n, double delta) {
    if (n < 1) throw DomainError("p-value needs at least one observation");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    if (!(mean_loss >= -1e-12 && mean_loss <= 1.0 + 1e-12))
        throw DomainError("mean loss must lie in [0,1]");
    mean_loss = std::clamp(mean_loss, 0.0, 1.0);

    double a = std::min(mean_loss, delta);
    double hoeffding = std::exp(-static_cast<double>(n) * bernoulli_kl(a, delta));
    std::int64_t m = detail::snapped_ceil(static_cast<double>(n) * mean_loss);
    m = std::clamp<std::int64_t>(m, 0, n);
    double bentkus = std::exp(1.0 + log_binomial_cdf(n, delta, m));
    return std::min({1.0, hoeffding, bentkus});
}

namespace {

std::vector<double> per_example_scores(const CalibSample& sample, double delta, bool stepdown) {
    std::vector<double> scores;
    scores.reserve(sample.examples.size());
    for (const auto& example : sample.examples) {
        PiecewiseTrace trace = example_trace(example, sample.family);
        scores.push_back(stepdown ? stepdown_score(trace, delta) : stepup_score(trace, delta));
    }
    return scores;
}

void check_levels(double delta, double alpha) {
    if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must lie in [0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

}  // namespace

CalibrationOutcome calibrate_stepdown(const CalibSample& sample, double delta, double alpha) {
    check_levels(delta, alpha);
    check_sample(sample);
    CalibrationOutcome outcome;
    outcome.method = Method::stepdown;
    outcome.family = sample.family;
    outcome.delta = delta;
    outcome.alpha = alpha;
    outcome.scores_sorted = per_example_scores(sample, delta, /*stepdown=*/true);
    std::sort(outcome.scores_sorted.begin(), outcome.scores_sorted.end());
    auto n = static_cast<std::int64_t>(outcome.scores_sorted.size());
    outcome.quantile_index = detail::conformal_index(n, alpha);
    outcome.parameter = outcome.scores_sorted[static_cast<std::size_t>(outcome.quantile_index - 1)];
    return outcome;
}

CalibrationOutcome calibrate_stepup(const CalibSample& sample, double delta, double alpha,
                                    double epsilon) {
    check_levels(delta, alpha);
    if (!(epsilon > 0.0)) throw DomainError("stepup requires epsilon > 0");
    check_sample(sample);
    CalibrationOutcome outcome;
    outcome.method = Method::stepup;
    outcome.family = sample.family;
    outcome.delta = delta;
    outcome.alpha = alpha;
    outcome.epsilon = epsilon;
    outcome.scores_sorted = per_example_scores(sample, delta, /*stepdown=*/false);
    std::sort(outcome.scores_sorted.begin(), outcome.scores_sorted.end());
    auto n = static_cast<std::int64_t>(outcome.scores_sorted.size());
    outcome.quantile_index = detail::conformal_index(n, alpha);
    outcome.parameter =
        outcome.scores_sorted[static_cast<std::size_t>(outcome.quantile_index - 1)] + epsilon;
    return outcome;
}

FstSelection fst_select(const std::vector<double>& mean_losses, std::int64_t n, double delta,
                        double alpha_fst) {
    if (!(alpha_fst > 0.0 && alpha_fst < 1.0)) throw DomainError("alpha_fst must lie in (0,1)");
    FstSelection sel;
    sel.p_values.reserve(mean_losses.size());
    for (double mean : mean_losses) sel.p_values.push_back(hb_pvalue(mean, n, delta));
    // first index whose whole suffix rejects
    std::size_t first = sel.p_values.size();
    for (std::size_t k = sel.p_values.size(); k-- > 0;) {
        if (sel.p_values[k] <= alpha_fst)
            first = k;
        else
            break;
    }
    sel.first_accepted = first;
    return sel;
}

namespace {

void check_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw DomainError("grid must be nonempty");
    if (!(grid.front() > 0.0)) throw DomainError("grid values must be positive");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1])) throw DomainError("grid must be strictly increasing");
}

CalibrationOutcome fst_common(const CalibSample& sample, Method method, double delta,
                              double tested_level, double alpha_fst,
                              const std::vector<double>& grid) {
    check_sample(sample);
    check_grid(grid);
    auto n = static_cast<std::int64_t>(sample.examples.size());

    std::vector<double> means;
    means.reserve(grid.size());
    for (double parameter : grid) {
        double sum = 0.0;
        for (const auto& example : sample.examples) {
            double loss = example_loss_at(example, sample.family, parameter).value();
            sum += method == Method::fst ? loss : (loss > delta ? 1.0 : 0.0);
        }
        means.push_back(sum / static_cast<double>(n));
    }

    FstSelection sel = fst_select(means, n, tested_level, alpha_fst);

    CalibrationOutcome outcome;
    outcome.method = method;
    outcome.family = sample.family;
    outcome.delta = delta;
    outcome.alpha_fst = alpha_fst;
    outcome.grid = grid;
    outcome.p_values = std::move(sel.p_values);
    if (sel.first_accepted == grid.size()) {
        outcome.abstain_all = true;
        outcome.grid_index = 0;
        double step = grid.size() > 1 ? grid[grid.size() - 1] - grid[grid.size() - 2] : 1.0;
        outcome.parameter = grid.back() + step;
        outcome.warning = "no grid point passed the fixed-sequence test; abstaining everywhere";
    } else {
        outcome.grid_index = static_cast<std::int64_t>(sel.first_accepted) + 1;
        outcome.parameter = grid[sel.first_accepted];
    }
    return outcome;
}

}  // namespace

CalibrationOutcome calibrate_fst(const CalibSample& sample, double delta, double alpha_fst,
                                 const std::vector<double>& grid) {
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
    return fst_common(sample, Method::fst, delta, delta, alpha_fst, grid);
}

CalibrationOutcome calibrate_fst_quantile(const CalibSample& sample, double delta, double alpha,
                                          double alpha_fst, const std::vector<double>& grid) {
    if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must lie in [0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
    auto outcome = fst_common(sample, Method::fst_quantile, delta, alpha, alpha_fst, grid);
    outcome.alpha = alpha;
    return outcome;
}

double parameter_span(const CalibSample& sample) {
    if (sample.family == SetFamily::bernoulli) return 1.0;
    double span = 0.0;
    for (const auto& example : sample.examples)
        if (example.scores)
            for (const auto& [index, s] : example.scores->scores)
                span = std::max(span, std::abs(s));
    return span > 0.0 ? span : 1.0;
}

std::vector<double> default_grid(const CalibSample& sample, std::size_t points) {
    if (points == 0) throw DomainError("grid needs at least one point");
    double span = parameter_span(sample);
    std::vector<double> grid(points);
    for (std::size_t k = 0; k < points; ++k)
        grid[k] = span * static_cast<double>(k + 1) / static_cast<double>(points);
    return grid;
}

ErrEstimate estimate_err(const CalibSample& holdout, double lambda, double epsilon, double delta) {
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
    check_sample(holdout);
    ErrEstimate est;
    est.n = static_cast<std::int64_t>(holdout.examples.size());
    for (const auto& example : holdout.examples) {
        PiecewiseTrace trace = example_trace(example, holdout.family);
        if (!(trace.evaluate(lambda + epsilon).value() > delta)) continue;
        // did the curve qualify anywhere at or below lambda?
        bool dipped = false;
        for (std::size_t k = 0; k < trace.values.size(); ++k) {
            double start = k == 0 ? 0.0 : trace.breakpoints[k - 1];
            if (start > lambda) break;
            if (trace.values[k].value() <= delta) {
                dipped = true;
                break;
            }
        }
        if (dipped) ++est.hits;
    }
    est.probability = static_cast<double>(est.hits) / static_cast<double>(est.n);
    est.std_error =
        std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(est.n));
    return est;
}

ProbeAdaptedSet apply_outcome(const CalibrationOutcome& outcome, const Example& instance) {
    if (outcome.abstain_all) return ProbeAdaptedSet{};
    if (outcome.family == SetFamily::threshold) {
        if (!instance.scores) throw DomainError("threshold outcome needs instance scores");
        return threshold_set(*instance.scores, outcome.parameter);
    }
    if (!instance.acc) throw DomainError("bernoulli outcome needs instance accuracy estimates");
    if (instance.feedback.answers.empty())
        throw DomainError("bernoulli outcome needs the instance's query set");
    std::vector<ProbeIndex> queries;
    queries.reserve(instance.feedback.answers.size());
    for (const auto& [index, answer] : instance.feedback.answers) queries.push_back(index);
    double eta = bernoulli_threshold(*instance.acc, queries, outcome.parameter);
    return eta_set(*instance.acc, eta);
}

}  // namespace probeset
