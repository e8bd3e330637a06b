#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "probeset/errors.hpp"
#include "probeset/nested.hpp"
#include "probeset/rng.hpp"

using namespace probeset;

TEST_SUITE("nested") {

static ProbeIndex bit(std::int32_t i) { return {i, -1}; }

static ScoreVector random_scores(SplitRng& rng, std::int32_t probes) {
    ScoreVector s;
    for (std::int32_t i = 1; i <= probes; ++i) {
        double magnitude;
        switch (rng.next_u64() % 4) {
            case 0: magnitude = 0.5 * static_cast<double>(rng.next_u64() % 5); break;
            case 1: magnitude = 0.0; break;
            default: magnitude = 3.0 * rng.next_double(); break;
        }
        s.scores.emplace(bit(i), (rng.next_bernoulli(0.5) ? 1.0 : -1.0) * magnitude);
    }
    return s;
}

static UserFeedback random_feedback(SplitRng& rng, std::int32_t probes) {
    UserFeedback fb;
    for (std::int32_t i = 1; i <= probes; ++i)
        if (rng.next_bernoulli(0.7))
            fb.answers.emplace(bit(i), rng.next_bernoulli(0.5) ? Sign{1} : Sign{-1});
    if (fb.answers.empty()) fb.answers.emplace(bit(1), Sign{1});
    return fb;
}

TEST_CASE("threshold set answers strictly above the cutoff with the score's sign") {
    ScoreVector s;
    s.scores = {{bit(1), 2.0}, {bit(2), -1.0}, {bit(3), 0.5}, {bit(4), 0.0}};
    ProbeAdaptedSet set = threshold_set(s, 1.0);
    CHECK(set.answers == std::map<ProbeIndex, Sign>{{bit(1), 1}});
    set = threshold_set(s, 0.0);
    // zero scores are never answered even at lambda = 0
    CHECK(set.answers ==
          std::map<ProbeIndex, Sign>{{bit(1), 1}, {bit(2), -1}, {bit(3), 1}});
    CHECK_THROWS_AS(threshold_set(s, -0.1), DomainError);
    ScoreVector bad;
    bad.scores = {{bit(1), std::numeric_limits<double>::infinity()}};
    CHECK_THROWS_AS(threshold_set(bad, 1.0), DomainError);
    CHECK_THROWS_AS(check_scores(bad), DomainError);
}

TEST_CASE("symmetric threshold is the asymmetric one at (-l, l)") {
    SplitRng rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        ScoreVector s = random_scores(rng, 10);
        double l = 2.5 * rng.next_double();
        CHECK(threshold_set(s, l) == threshold_set_asymmetric(s, -l, l));
    }
    ScoreVector s = random_scores(rng, 5);
    CHECK_THROWS_AS(threshold_set_asymmetric(s, 1.0, -1.0), DomainError);
}

TEST_CASE("threshold family is nested: larger cutoffs answer a subset") {
    SplitRng rng(5);
    for (int rep = 0; rep < 300; ++rep) {
        ScoreVector s = random_scores(rng, 12);
        double l1 = 3.0 * rng.next_double();
        double l2 = l1 + 2.0 * rng.next_double();
        ProbeAdaptedSet big = threshold_set(s, l1);
        ProbeAdaptedSet small = threshold_set(s, l2);
        for (const auto& [index, sign] : small.answers) {
            auto it = big.answers.find(index);
            REQUIRE(it != big.answers.end());
            CHECK(it->second == sign);
        }
    }
}

TEST_CASE("loss trace equals the direct loss everywhere") {
    SplitRng rng(7);
    for (int rep = 0; rep < 1000; ++rep) {
        auto probes = static_cast<std::int32_t>(1 + rng.next_u64() % 20);
        ScoreVector s = random_scores(rng, probes);
        UserFeedback fb = random_feedback(rng, probes);
        PiecewiseTrace trace = loss_trace(s, fb);

        REQUIRE(trace.values.size() == trace.breakpoints.size() + 1);
        for (std::size_t i = 1; i < trace.breakpoints.size(); ++i)
            CHECK(trace.breakpoints[i - 1] < trace.breakpoints[i]);

        std::vector<double> lambdas{0.0};
        for (std::size_t i = 0; i < trace.breakpoints.size(); ++i) {
            lambdas.push_back(trace.breakpoints[i]);
            double next = i + 1 < trace.breakpoints.size() ? trace.breakpoints[i + 1]
                                                           : trace.breakpoints[i] + 1.0;
            lambdas.push_back(0.5 * (trace.breakpoints[i] + next));
        }
        for (double lambda : lambdas) {
            FppLoss direct = fpp_loss(fb, threshold_set(s, lambda));
            const FppLoss& fast = trace.evaluate(lambda);
            CHECK(fast.wrong == direct.wrong);
            CHECK(fast.overlap == direct.overlap);
        }
    }
}

TEST_CASE("trace evaluation is right-continuous at breakpoints") {
    ScoreVector s;
    s.scores = {{bit(1), 1.0}, {bit(2), -2.0}};
    UserFeedback fb;
    fb.answers = {{bit(1), -1}, {bit(2), -1}};  // probe 1 wrong, probe 2 right
    PiecewiseTrace trace = loss_trace(s, fb);
    REQUIRE(trace.breakpoints == std::vector<double>{1.0, 2.0});
    // on [0,1): both answered, one wrong; on [1,2): probe 1 drops out; from 2: empty
    CHECK(trace.evaluate(0.0) == FppLoss{1, 2});
    CHECK(trace.evaluate(1.0) == FppLoss{0, 1});
    CHECK(trace.evaluate(1.5) == FppLoss{0, 1});
    CHECK(trace.evaluate(2.0) == FppLoss{0, 0});
    CHECK(trace.evaluate(100.0) == FppLoss{0, 0});
}

TEST_CASE("adaptive accuracy threshold: worked prefixes") {
    AccuracyVector acc;
    std::vector<double> pis{0.99, 0.95, 0.90, 0.60, 0.50};
    std::vector<ProbeIndex> queries;
    for (std::int32_t i = 1; i <= 5; ++i) {
        acc.accuracies.emplace(bit(i), pis[static_cast<std::size_t>(i - 1)]);
        acc.predictions.emplace(bit(i), Sign{1});
        queries.push_back(bit(i));
    }
    // longest prefix with mean >= 0.9 is the first three; cutoff below it
    CHECK(bernoulli_threshold(acc, queries, 0.9) == 0.60);
    CHECK(eta_set(acc, 0.60).answered_count() == 3);

    // nothing qualifies: even the best accuracy is excluded
    CHECK(bernoulli_threshold(acc, queries, 0.995) == 0.99);
    CHECK(eta_set(acc, 0.99).answered_count() == 0);

    // everything qualifies: cutoff drops to zero
    CHECK(bernoulli_threshold(acc, queries, 0.1) == 0.0);
    CHECK(eta_set(acc, 0.0).answered_count() == 5);

    CHECK_THROWS_AS(bernoulli_threshold(acc, {}, 0.9), DomainError);
    CHECK_THROWS_AS(bernoulli_threshold(acc, {bit(9)}, 0.9), DomainError);
}

TEST_CASE("accuracy vector validation") {
    AccuracyVector acc;
    acc.accuracies = {{bit(1), 0.7}};
    acc.predictions = {{bit(1), 1}};
    check_accuracies(acc);
    acc.accuracies[bit(1)] = 1.2;
    CHECK_THROWS_AS(check_accuracies(acc), DomainError);
    acc.accuracies[bit(1)] = 0.7;
    acc.predictions[bit(1)] = 0;
    CHECK_THROWS_AS(check_accuracies(acc), DomainError);
    acc.predictions = {{bit(2), 1}};
    CHECK_THROWS_AS(check_accuracies(acc), DomainError);
}

TEST_CASE("bernoulli family is nested in the accuracy target") {
    SplitRng rng(17);
    for (int rep = 0; rep < 300; ++rep) {
        AccuracyVector acc;
        std::vector<ProbeIndex> queries;
        auto probes = static_cast<std::int32_t>(1 + rng.next_u64() % 12);
        for (std::int32_t i = 1; i <= probes; ++i) {
            acc.accuracies.emplace(bit(i), rng.next_double());
            acc.predictions.emplace(bit(i), rng.next_bernoulli(0.5) ? Sign{1} : Sign{-1});
            queries.push_back(bit(i));
        }
        double t1 = rng.next_double();
        double t2 = t1 + (1.0 - t1) * rng.next_double();  // t1 <= t2
        ProbeAdaptedSet lax = eta_set(acc, bernoulli_threshold(acc, queries, t1));
        ProbeAdaptedSet strict = eta_set(acc, bernoulli_threshold(acc, queries, t2));
        for (const auto& [index, sign] : strict.answers) {
            auto it = lax.answers.find(index);
            REQUIRE(it != lax.answers.end());
            CHECK(it->second == sign);
        }
    }
}

TEST_CASE("bernoulli loss trace matches direct evaluation on interval interiors") {
    SplitRng rng(19);
    for (int rep = 0; rep < 300; ++rep) {
        AccuracyVector acc;
        UserFeedback fb;
        std::vector<ProbeIndex> queries;
        auto probes = static_cast<std::int32_t>(1 + rng.next_u64() % 10);
        for (std::int32_t i = 1; i <= probes; ++i) {
            acc.accuracies.emplace(bit(i), rng.next_double());
            acc.predictions.emplace(bit(i), rng.next_bernoulli(0.5) ? Sign{1} : Sign{-1});
            fb.answers.emplace(bit(i), rng.next_bernoulli(0.5) ? Sign{1} : Sign{-1});
            queries.push_back(bit(i));
        }
        PiecewiseTrace trace = bernoulli_loss_trace(acc, fb);
        std::vector<double> targets;
        double low = 0.0;
        for (double breakpoint : trace.breakpoints) {
            targets.push_back(0.5 * (low + breakpoint));
            low = breakpoint;
        }
        targets.push_back(0.5 * (low + 1.0) + 0.5);  // past the last breakpoint
        for (double t : targets) {
            FppLoss direct = fpp_loss(fb, eta_set(acc, bernoulli_threshold(acc, queries, t)));
            const FppLoss& fast = trace.evaluate(t);
            CHECK(fast.wrong == direct.wrong);
            CHECK(fast.overlap == direct.overlap);
        }
    }
}

}  // TEST_SUITE
