#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "probeset/nested.hpp"

namespace probeset {

// Which nested family a calibration searches over. The threshold family is
// parameterized by the score cutoff lambda; the Bernoulli family by the
// nominal accuracy target handed to the adaptive threshold.
enum class SetFamily { threshold, bernoulli };

enum class Method { stepdown, stepup, fst, fst_quantile };

std::string to_string(SetFamily family);
std::string to_string(Method method);

// Inverse of to_string; throws DomainError on an unknown name.
SetFamily family_from_name(const std::string& name);
Method method_from_name(const std::string& name);

// One weakly supervised example as the calibrators see it: scores and/or
// accuracy estimates, plus the user's probe answers.
struct Example {
    std::string id;
    std::optional<ScoreVector> scores;
    std::optional<AccuracyVector> acc;
    UserFeedback feedback;
    std::optional<Label> label;  // ground truth, oracle use only
};

struct CalibSample {
    SetFamily family = SetFamily::threshold;
    std::vector<Example> examples;
};

// Checks every example supports the sample's family (scores present for
// threshold, accuracies covering the queries for bernoulli) and has at least
// one query. Throws DomainError.
void check_sample(const CalibSample& sample);

// The family's loss curve for one example; parameter is lambda or the
// nominal accuracy target depending on the family.
PiecewiseTrace example_trace(const Example& example, SetFamily family);

// Loss of the example's set at one parameter value, evaluated directly from
// the family definition (exact at trace breakpoints too).
FppLoss example_loss_at(const Example& example, SetFamily family, double parameter);

// Smallest parameter from which the trace stays at or below delta for every
// larger parameter. 0 when the whole curve qualifies.
double stepdown_score(const PiecewiseTrace& trace, double delta);

// First parameter at which the trace reaches delta or below (no tail
// requirement). Always <= stepdown_score.
double stepup_score(const PiecewiseTrace& trace, double delta);

// The k-th smallest score with k = ceil((n+1)(1-alpha)), clamped to n.
// Duplicates count with multiplicity. alpha must be in (0,1).
double conformal_quantile(std::vector<double> scores, double alpha);

// Hoeffding-Bentkus p-value for "expected loss > delta" given an observed
// mean of n losses in [0,1].
double hb_pvalue(double mean_loss, std::int64_t n, double delta);

namespace detail {
// Fault-injection hook for the self check suite: shifts the conformal
// quantile index by this many positions. Never set outside selfcheck runs.
extern std::atomic<int> quantile_index_offset;

// ceil with a snap to the nearest integer (relative 1e-9), so products like
// 100 * 0.9 that land an ulp above the exact integer do not round up.
std::int64_t snapped_ceil(double x);

// k = ceil((n+1)(1-alpha)) clamped to 1..n (fault offset applied).
std::int64_t conformal_index(std::int64_t n, double alpha);
}  // namespace detail

struct CalibrationOutcome {
    Method method = Method::stepdown;
    SetFamily family = SetFamily::threshold;
    double parameter = 0.0;  // final: includes +epsilon for stepup
    double delta = 0.0;
    std::optional<double> alpha;
    std::optional<double> epsilon;
    std::optional<double> alpha_fst;
    // diagnostics
    std::vector<double> scores_sorted;  // conformal methods
    std::int64_t quantile_index = 0;    // 1-based k, conformal methods
    std::vector<double> grid;           // fixed-sequence methods
    std::vector<double> p_values;       // fixed-sequence methods
    std::int64_t grid_index = 0;        // 1-based k-hat, 0 when abstaining
    bool abstain_all = false;
    std::string created_from;  // dataset digest
    std::string warning;
};

// Conformal step-down calibration: per-example scores are the points from
// which the loss curve stays controlled, so the guarantee covers the whole
// tail above the chosen parameter.
CalibrationOutcome calibrate_stepdown(const CalibSample& sample, double delta, double alpha);

// Step-up variant: scores are first crossing points; the chosen parameter is
// the conformal quantile plus an explicit epsilon > 0.
CalibrationOutcome calibrate_stepup(const CalibSample& sample, double delta, double alpha,
                                    double epsilon);

// Fixed-sequence testing over an increasing grid: walk p-values for
// "expected loss > delta" and pick the first grid point from which every
// later one also rejects. No qualifying point -> abstain-all sentinel.
CalibrationOutcome calibrate_fst(const CalibSample& sample, double delta, double alpha_fst,
                                 const std::vector<double>& grid);

// Quantile-flavored fixed-sequence testing: the tested mean is the exceedance
// indicator 1{loss > delta} and the tested level is alpha.
CalibrationOutcome calibrate_fst_quantile(const CalibSample& sample, double delta, double alpha,
                                          double alpha_fst, const std::vector<double>& grid);

// Selection core shared by both FST flavors and the oracle harness: p-values
// per grid position plus the first index whose whole suffix rejects (0-based;
// returns grid size when none qualifies).
struct FstSelection {
    std::vector<double> p_values;
    std::size_t first_accepted = 0;
};
FstSelection fst_select(const std::vector<double>& mean_losses, std::int64_t n, double delta,
                        double alpha_fst);

// Default FST grid: `points` evenly spaced values ending at the sample's
// largest parameter scale (max |score| for threshold, 1 for bernoulli).
std::vector<double> default_grid(const CalibSample& sample, std::size_t points);

// Largest useful parameter for the sample's family (the default grid's right
// endpoint and the scale behind the default stepup epsilon).
double parameter_span(const CalibSample& sample);

// Monte-Carlo estimate, over a holdout sample, of the step-up slack term:
// the probability that the loss curve dips to delta somewhere at or below
// lambda yet sits above delta at lambda + epsilon.
struct ErrEstimate {
    double probability = 0.0;
    double std_error = 0.0;
    std::int64_t hits = 0;
    std::int64_t n = 0;
};
ErrEstimate estimate_err(const CalibSample& holdout, double lambda, double epsilon, double delta);

// Instantiate the calibrated set on a new instance. Threshold outcomes need
// scores; bernoulli outcomes need accuracies plus the instance's query set.
// An abstain-all outcome yields the empty (whole-space) set.
ProbeAdaptedSet apply_outcome(const CalibrationOutcome& outcome, const Example& instance);

}  // namespace probeset
