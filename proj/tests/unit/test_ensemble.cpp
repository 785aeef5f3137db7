#include <doctest.h>

#include "../oracles.hpp"
#include "mempredict/ensemble.hpp"
#include "mempredict/errors.hpp"
#include "mempredict/random.hpp"

using namespace mempredict;

namespace {

std::shared_ptr<const TrainedModel> constant(int bin) {
    auto m = std::make_shared<TrainedModel>();
    m->classes = {bin};
    m->width = 1;
    m->fitted = ConstantModel{bin};
    return m;
}

QueryRows any_row() { return {{0.0}, {0.0}}; }

}  // namespace

TEST_CASE("accuracy") {
    const std::vector<int> p = {1, 2, 3, 4};
    const std::vector<int> a = {1, 2, 0, 4};
    CHECK(accuracy(p, a) == 0.75);
    const std::vector<int> shorter = {1};
    CHECK_THROWS_AS(accuracy(p, shorter), LengthMismatch);
    CHECK_THROWS_AS(accuracy(std::vector<int>{}, std::vector<int>{}), EmptyInput);
}

TEST_CASE("ranking sorts by accuracy, ties by method order") {
    const std::vector<int> labels = {1, 1, 1, 1};
    std::vector<ScoredModel> models = {
        {Method::Knn2, constant(1), {1, 1, 1, 1}},
        {Method::Svm2, constant(1), {1, 0, 1, 1}},
        {Method::Mlp1, constant(1), {1, 1, 1, 1}},
        {Method::Svm1, constant(1), {0, 0, 1, 1}},
    };
    const auto ranked = rank_models(models, labels);
    REQUIRE(ranked.size() == 4);
    CHECK(ranked.entries[0].method == Method::Mlp1);
    CHECK(ranked.entries[1].method == Method::Knn2);
    CHECK(ranked.entries[2].method == Method::Svm2);
    CHECK(ranked.entries[2].validation_accuracy == 0.75);
    CHECK(ranked.entries[3].method == Method::Svm1);
}

TEST_CASE("poll examples") {
    CHECK(poll_votes(std::vector<Vote>{{2, 0.9}, {2, 0.8}, {2, 0.7}, {2, 0.6}}) == 2);
    CHECK(poll_votes(std::vector<Vote>{{1, 0.9}, {2, 0.5}, {2, 0.5}}) == 2);
    // 0.3 + 0.6 against 0.9 is a tie; the higher-ranked voter's bin wins.
    CHECK(poll_votes(std::vector<Vote>{{5, 0.9}, {6, 0.6}, {6, 0.3}}) == 5);
    CHECK(poll_votes(std::vector<Vote>{{6, 0.6}, {5, 0.9}, {6, 0.3}}) == 6);
    CHECK_THROWS_AS(poll_votes(std::vector<Vote>{}), EmptyInput);
}

TEST_CASE("poll matches exact enumeration and ignores weight rescaling") {
    Rng rng(123);
    for (int trial = 0; trial < 3000; ++trial) {
        const std::size_t voters = 1 + rng.below(5);
        std::vector<int> bins(voters);
        std::vector<long> milli(voters);
        for (std::size_t v = 0; v < voters; ++v) {
            bins[v] = static_cast<int>(rng.below(10));
            // Few distinct weights so ties are common.
            milli[v] = trial % 2 == 0 ? 100 * static_cast<long>(1 + rng.below(4)) : static_cast<long>(1 + rng.below(1000));
        }
        const int expected = oracle::poll(bins, milli);
        std::vector<Vote> votes;
        for (std::size_t v = 0; v < voters; ++v) votes.push_back({bins[v], static_cast<double>(milli[v]) / 1000.0});
        CHECK(poll_votes(votes) == expected);
        const double c = std::exp(rng.uniform(-5.0, 5.0));
        for (auto& v : votes) v.weight *= c;
        CHECK(poll_votes(votes) == expected);
    }
}

TEST_CASE("weighted poll reads the top-n models only") {
    RankedModels ranked;
    ranked.entries = {{Method::Svm1, constant(3), 0.9},
                      {Method::Svm2, constant(4), 0.5},
                      {Method::RForest, constant(4), 0.45},
                      {Method::Mlp1, constant(7), 0.1},
                      {Method::Mlp2, constant(7), 0.1},
                      {Method::Knn1, constant(7), 0.1},
                      {Method::Knn2, constant(7), 0.1}};
    CHECK(weighted_poll(ranked, {1}, any_row()) == 3);
    CHECK(weighted_poll(ranked, {3}, any_row()) == 4);
    CHECK(weighted_poll(ranked, {7}, any_row()) == 4);  // 0.95 for bin 4 beats 0.9 and 0.4
    const auto explained = weighted_poll_explained(ranked, {2}, any_row());
    REQUIRE(explained.voters.size() == 2);
    CHECK(explained.voters[1].rank == 2);
    CHECK(explained.voters[1].method == Method::Svm2);
    CHECK(explained.voters[1].bin == 4);
    CHECK(explained.voters[1].weight == 0.5);
    CHECK_THROWS_AS(weighted_poll(ranked, {0}, any_row()), InvalidConfig);
    CHECK_THROWS_AS(weighted_poll(ranked, {8}, any_row()), InvalidConfig);
}

TEST_CASE("mode baseline") {
    CHECK(mode_baseline(std::vector<int>{3, 1, 3, 1, 2}) == 1);
    CHECK(mode_baseline(std::vector<int>{5, 5, 0}) == 5);
    CHECK_THROWS_AS(mode_baseline(std::vector<int>{}), EmptyInput);
}
