#pragma once

#include <cstdint>
#include <map>

#include "probeset/probes.hpp"

namespace probeset {

// A weakly supervised example: the probes the user asked about and the
// answers given. The query set is exactly the key set of `answers`, so the
// two can never disagree.
struct UserFeedback {
    std::map<ProbeIndex, Sign> answers;

    std::size_t query_count() const { return answers.size(); }
    bool operator==(const UserFeedback&) const = default;
};

// False-positive-probe loss as an exact ratio of counts. `wrong` is the
// number of queried probes the set answers incorrectly, `overlap` the number
// of queried probes it answers at all.
struct FppLoss {
    std::int64_t wrong = 0;
    std::int64_t overlap = 0;

    double value() const { return overlap > 0 ? static_cast<double>(wrong) / static_cast<double>(overlap) : 0.0; }
    bool operator==(const FppLoss&) const = default;
};

// |{i in I ∩ I(C) : set answer differs from user answer}| / (|I ∩ I(C)| or 1).
FppLoss fpp_loss(const UserFeedback& feedback, const ProbeAdaptedSet& set);

// 1 - |I ∩ I(C)| / |I|; requires at least one query.
double abstention(const UserFeedback& feedback, const ProbeAdaptedSet& set);

}  // namespace probeset
