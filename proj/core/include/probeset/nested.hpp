#pragma once

#include <map>
#include <vector>

#include "probeset/loss.hpp"
#include "probeset/probes.hpp"

namespace probeset {

// Real-valued probe scores; sign is the predicted answer, magnitude is
// confidence. Entries must be finite. A probe without an entry behaves like
// score 0 (never answered).
struct ScoreVector {
    std::map<ProbeIndex, double> scores;
    bool operator==(const ScoreVector&) const = default;
};

// Per-probe accuracy estimates in [0,1] plus the hard prediction they refer
// to. The two maps share one key set.
struct AccuracyVector {
    std::map<ProbeIndex, double> accuracies;
    std::map<ProbeIndex, Sign> predictions;
};

void check_scores(const ScoreVector& scores);
void check_accuracies(const AccuracyVector& acc);

// C_lambda: answer probe i with sign(s_i) iff |s_i| > lambda (strict, so a
// zero score is never answered). Requires lambda >= 0.
ProbeAdaptedSet threshold_set(const ScoreVector& scores, double lambda);

// Two-sided generalization: answer -1 where s_i < lambda_minus and +1 where
// s_i > lambda_plus. threshold_set(s, l) == threshold_set_asymmetric(s, -l, l).
ProbeAdaptedSet threshold_set_asymmetric(const ScoreVector& scores, double lambda_minus,
                                         double lambda_plus);

// Right-continuous piecewise-constant loss curve. values[k] holds on
// [breakpoints[k-1], breakpoints[k]) with breakpoints[-1] = 0, and
// values.back() holds from breakpoints.back() on. Losses are exact ratios.
struct PiecewiseTrace {
    std::vector<double> breakpoints;  // strictly increasing, all > 0
    std::vector<FppLoss> values;      // size breakpoints.size() + 1

    const FppLoss& evaluate(double lambda) const;
};

// lambda -> fpp_loss(feedback, threshold_set(scores, lambda)) for the whole
// threshold family at once. O(|I| log |I|).
PiecewiseTrace loss_trace(const ScoreVector& scores, const UserFeedback& feedback);

// Adaptive accuracy threshold: sort the queried probes' accuracies
// descending, take the longest prefix whose mean is >= delta_acc (J = 0 if
// none), and cut strictly below the prefix: eta = (J+1)-th largest accuracy,
// or 0 if the whole query set qualifies. Requires a nonempty query set.
double bernoulli_threshold(const AccuracyVector& acc, const std::vector<ProbeIndex>& queries,
                           double delta_acc);

// C_eta: answer probe i with its prediction iff its accuracy estimate
// exceeds eta (strict).
ProbeAdaptedSet eta_set(const AccuracyVector& acc, double eta);

// Loss curve of the Bernoulli family in the nominal accuracy target t: the
// parameter-to-set map is t -> eta_set(acc, bernoulli_threshold(acc, I, t)).
// Interval interiors are exact; at a breakpoint itself the family uses the
// left interval's set (the prefix-mean tie goes to the larger prefix), so
// callers that need exact at-breakpoint values must evaluate directly.
PiecewiseTrace bernoulli_loss_trace(const AccuracyVector& acc, const UserFeedback& feedback);

}  // namespace probeset
