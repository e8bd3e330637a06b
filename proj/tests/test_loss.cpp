#include <vector>

#include "doctest.h"
#include "probeset/errors.hpp"
#include "probeset/loss.hpp"
#include "probeset/rng.hpp"

using namespace probeset;

TEST_SUITE("loss") {

static ProbeIndex bit(std::int32_t i) { return {i, -1}; }

TEST_CASE("fpp counts wrong answers over the overlap") {
    // user asks {1,2,3}; set answers {2,3,4}; disagreement only on 3
    UserFeedback fb;
    fb.answers = {{bit(1), 1}, {bit(2), 1}, {bit(3), -1}};
    ProbeAdaptedSet set;
    set.answers = {{bit(2), 1}, {bit(3), 1}, {bit(4), -1}};
    FppLoss loss = fpp_loss(fb, set);
    CHECK(loss.wrong == 1);
    CHECK(loss.overlap == 2);
    CHECK(loss.value() == 0.5);
}

TEST_CASE("empty overlap means zero loss") {
    UserFeedback fb;
    fb.answers = {{bit(1), 1}};
    ProbeAdaptedSet set;
    set.answers = {{bit(2), -1}};
    FppLoss loss = fpp_loss(fb, set);
    CHECK(loss.wrong == 0);
    CHECK(loss.overlap == 0);
    CHECK(loss.value() == 0.0);

    CHECK(fpp_loss(fb, ProbeAdaptedSet{}).value() == 0.0);  // whole-space set answers nothing
}

TEST_CASE("full agreement means zero loss at full overlap") {
    UserFeedback fb;
    fb.answers = {{bit(1), 1}, {bit(2), -1}};
    ProbeAdaptedSet set;
    set.answers = fb.answers;
    FppLoss loss = fpp_loss(fb, set);
    CHECK(loss.wrong == 0);
    CHECK(loss.overlap == 2);
}

TEST_CASE("abstention is the unanswered fraction of the queries") {
    UserFeedback fb;
    fb.answers = {{bit(1), 1}, {bit(2), 1}, {bit(3), 1}, {bit(4), 1}};
    ProbeAdaptedSet superset;
    superset.answers = {{bit(1), 1}, {bit(2), -1}, {bit(3), 1}, {bit(4), 1}, {bit(5), 1}};
    CHECK(abstention(fb, superset) == 0.0);
    CHECK(abstention(fb, ProbeAdaptedSet{}) == 1.0);
    ProbeAdaptedSet three;
    three.answers = {{bit(1), 1}, {bit(2), 1}, {bit(4), -1}};
    CHECK(abstention(fb, three) == 0.25);

    CHECK_THROWS_AS(abstention(UserFeedback{}, superset), DomainError);
}

TEST_CASE("loss is an exact count ratio and shrinking the set never adds wrong answers") {
    SplitRng rng(11);
    for (int rep = 0; rep < 500; ++rep) {
        UserFeedback fb;
        ProbeAdaptedSet set;
        for (std::int32_t i = 1; i <= 12; ++i) {
            if (rng.next_bernoulli(0.6))
                fb.answers.emplace(bit(i), rng.next_bernoulli(0.5) ? Sign{1} : Sign{-1});
            if (rng.next_bernoulli(0.6))
                set.answers.emplace(bit(i), rng.next_bernoulli(0.5) ? Sign{1} : Sign{-1});
        }
        FppLoss loss = fpp_loss(fb, set);
        CHECK(loss.wrong >= 0);
        CHECK(loss.wrong <= loss.overlap);
        CHECK(loss.overlap <= static_cast<std::int64_t>(fb.answers.size()));
        if (!set.answers.empty()) {
            ProbeAdaptedSet smaller = set;
            smaller.answers.erase(std::next(smaller.answers.begin(),
                                            static_cast<std::ptrdiff_t>(
                                                rng.next_u64() % smaller.answers.size())));
            CHECK(fpp_loss(fb, smaller).wrong <= loss.wrong);
        }
    }
}

TEST_CASE("a set containing the truth never pays fpp loss") {
    // truthful user: answers are the true label's probe values, so any set
    // the true label belongs to agrees wherever both commit
    ProbeFamily fam = make_bitvector_family(8);
    SplitRng rng(13);
    auto labels = enumerate_labels(fam, 1 << 10);
    auto indices = enumerate_indices(fam);
    for (int rep = 0; rep < 300; ++rep) {
        const Label& truth = labels[rng.next_u64() % labels.size()];
        UserFeedback fb;
        ProbeAdaptedSet set;
        for (const auto& index : indices) {
            if (rng.next_bernoulli(0.5)) fb.answers.emplace(index, evaluate_probe(fam, index, truth));
            if (rng.next_bernoulli(0.5)) set.answers.emplace(index, evaluate_probe(fam, index, truth));
        }
        if (fb.answers.empty()) continue;
        REQUIRE(membership(set, fam, truth));
        CHECK(fpp_loss(fb, set).wrong == 0);
    }
}

}  // TEST_SUITE
