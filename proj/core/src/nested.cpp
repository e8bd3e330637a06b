#include "probeset/nested.hpp"

#include <algorithm>
#include <cmath>

#include "probeset/errors.hpp"

namespace probeset {

void check_scores(const ScoreVector& scores) {
    for (const auto& [index, s] : scores.scores)
        if (!std::isfinite(s)) throw DomainError("probe scores must be finite");
}

void check_accuracies(const AccuracyVector& acc) {
    if (acc.accuracies.size() != acc.predictions.size())
        throw DomainError("accuracies and predictions must share one key set");
    auto ait = acc.accuracies.begin();
    auto pit = acc.predictions.begin();
    for (; ait != acc.accuracies.end(); ++ait, ++pit) {
        if (ait->first != pit->first)
            throw DomainError("accuracies and predictions must share one key set");
        if (!(ait->second >= 0.0 && ait->second <= 1.0))
            throw DomainError("accuracy estimates must lie in [0,1]");
        if (pit->second != 1 && pit->second != -1)
            throw DomainError("predictions must be +1 or -1");
    }
}

ProbeAdaptedSet threshold_set(const ScoreVector& scores, double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("threshold must be nonnegative");
    ProbeAdaptedSet set;
    for (const auto& [index, s] : scores.scores) {
        if (!std::isfinite(s)) throw DomainError("probe scores must be finite");
        if (std::abs(s) > lambda) set.answers.emplace(index, s > 0 ? Sign{1} : Sign{-1});
    }
    return set;
}

ProbeAdaptedSet threshold_set_asymmetric(const ScoreVector& scores, double lambda_minus,
                                         double lambda_plus) {
    if (!(lambda_minus <= lambda_plus)) throw DomainError("thresholds must satisfy minus <= plus");
    ProbeAdaptedSet set;
    for (const auto& [index, s] : scores.scores) {
        if (!std::isfinite(s)) throw DomainError("probe scores must be finite");
        if (s < lambda_minus)
            set.answers.emplace(index, Sign{-1});
        else if (s > lambda_plus)
            set.answers.emplace(index, Sign{1});
    }
    return set;
}

const FppLoss& PiecewiseTrace::evaluate(double lambda) const {
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), lambda);
    return values[static_cast<std::size_t>(it - breakpoints.begin())];
}

PiecewiseTrace loss_trace(const ScoreVector& scores, const UserFeedback& feedback) {
    // Only queried probes matter. A queried probe with no (or zero) score is
    // never answered by any C_lambda and drops out entirely.
    struct Queried {
        double magnitude;
        bool wrong;
    };
    std::vector<Queried> probes;
    probes.reserve(feedback.answers.size());
    for (const auto& [index, answer] : feedback.answers) {
        auto it = scores.scores.find(index);
        if (it == scores.scores.end() || it->second == 0.0) continue;
        if (!std::isfinite(it->second)) throw DomainError("probe scores must be finite");
        Sign predicted = it->second > 0 ? Sign{1} : Sign{-1};
        probes.push_back({std::abs(it->second), predicted != answer});
    }
    std::sort(probes.begin(), probes.end(),
              [](const Queried& a, const Queried& b) { return a.magnitude < b.magnitude; });

    PiecewiseTrace trace;
    // At lambda = 0 everything with a nonzero score is answered; each distinct
    // magnitude then drops its probes as lambda passes it.
    std::int64_t overlap = static_cast<std::int64_t>(probes.size());
    std::int64_t wrong = 0;
    for (const auto& p : probes) wrong += p.wrong ? 1 : 0;

    trace.values.push_back({wrong, overlap});
    std::size_t i = 0;
    while (i < probes.size()) {
        double magnitude = probes[i].magnitude;
        while (i < probes.size() && probes[i].magnitude == magnitude) {
            --overlap;
            wrong -= probes[i].wrong ? 1 : 0;
            ++i;
        }
        trace.breakpoints.push_back(magnitude);
        trace.values.push_back({wrong, overlap});
    }
    return trace;
}

double bernoulli_threshold(const AccuracyVector& acc, const std::vector<ProbeIndex>& queries,
                           double delta_acc) {
    if (queries.empty()) throw DomainError("adaptive threshold needs at least one query");
    std::vector<double> pi;
    pi.reserve(queries.size());
    for (const auto& q : queries) {
        auto it = acc.accuracies.find(q);
        if (it == acc.accuracies.end())
            throw DomainError("query has no accuracy estimate");
        pi.push_back(it->second);
    }
    std::sort(pi.begin(), pi.end(), std::greater<>());

    std::size_t n = pi.size();
    std::size_t best = 0;  // longest prefix whose mean accuracy reaches the target
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        sum += pi[j];
        if (sum >= delta_acc * static_cast<double>(j + 1)) best = j + 1;
    }
    return best < n ? pi[best] : 0.0;
}

ProbeAdaptedSet eta_set(const AccuracyVector& acc, double eta) {
    ProbeAdaptedSet set;
    for (const auto& [index, pi] : acc.accuracies) {
        if (pi > eta) {
            auto pit = acc.predictions.find(index);
            if (pit == acc.predictions.end())
                throw DomainError("accuracy entry has no prediction");
            set.answers.emplace(index, pit->second);
        }
    }
    return set;
}

PiecewiseTrace bernoulli_loss_trace(const AccuracyVector& acc, const UserFeedback& feedback) {
    if (feedback.answers.empty()) throw DomainError("trace needs at least one query");
    std::vector<ProbeIndex> queries;
    queries.reserve(feedback.answers.size());
    for (const auto& [index, answer] : feedback.answers) queries.push_back(index);

    std::vector<double> pi;
    pi.reserve(queries.size());
    for (const auto& q : queries) {
        auto it = acc.accuracies.find(q);
        if (it == acc.accuracies.end()) throw DomainError("query has no accuracy estimate");
        pi.push_back(it->second);
    }
    std::sort(pi.begin(), pi.end(), std::greater<>());

    // Prefix means of the sorted accuracies are nonincreasing, so the target
    // t sweeps through them as breakpoints. Below the smallest mean the whole
    // query set qualifies (eta = 0); past the largest nothing does.
    std::size_t n = pi.size();
    std::vector<double> means(n);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        sum += pi[j];
        means[j] = sum / static_cast<double>(j + 1);
    }

    auto loss_at_prefix = [&](std::size_t prefix) {
        // prefix = J; the cut sits at the (J+1)-th largest accuracy, and at 0
        // once the whole query set qualifies. J = 0 cuts at the top accuracy.
        double eta = prefix < n ? pi[prefix] : 0.0;
        return fpp_loss(feedback, eta_set(acc, eta));
    };

    PiecewiseTrace trace;
    trace.values.push_back(loss_at_prefix(n));
    // walk distinct means from smallest (largest prefix) upward
    std::size_t j = n;
    while (j > 0) {
        double m = means[j - 1];
        while (j > 0 && means[j - 1] == m) --j;
        trace.breakpoints.push_back(m);
        trace.values.push_back(loss_at_prefix(j));
    }
    return trace;
}

}  // namespace probeset
