#include "probeset/loss.hpp"

#include "probeset/errors.hpp"

namespace probeset {

FppLoss fpp_loss(const UserFeedback& feedback, const ProbeAdaptedSet& set) {
    FppLoss loss;
    // both maps are ordered by ProbeIndex; walk them together
    auto fit = feedback.answers.begin();
    auto sit = set.answers.begin();
    while (fit != feedback.answers.end() && sit != set.answers.end()) {
        if (fit->first < sit->first) {
            ++fit;
        } else if (sit->first < fit->first) {
            ++sit;
        } else {
            ++loss.overlap;
            if (fit->second != sit->second) ++loss.wrong;
            ++fit;
            ++sit;
        }
    }
    return loss;
}

double abstention(const UserFeedback& feedback, const ProbeAdaptedSet& set) {
    if (feedback.answers.empty()) throw DomainError("abstention needs at least one query");
    FppLoss loss = fpp_loss(feedback, set);
    auto total = static_cast<double>(feedback.answers.size());
    return 1.0 - static_cast<double>(loss.overlap) / total;
}

}  // namespace probeset
