#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mempredict/errors.hpp"
#include "mempredict/featurization.hpp"
#include "mempredict/random.hpp"

using namespace mempredict;
using testutil::job;

namespace {

FeatureSelection users_and_procs() {
    FeatureSelection s;
    s.categorical = {CategoricalFeature::User};
    s.numeric = {NumericFeature::ReqProcs};
    return s;
}

std::vector<JobRecord> users(const std::vector<std::string>& names) {
    std::vector<JobRecord> out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto j = job("j" + std::to_string(i), 100, 200, 1000.0);
        j.user = names[i];
        out.push_back(j);
    }
    return out;
}

}  // namespace

TEST_CASE("feature names parse back") {
    for (auto f : FeatureSelection::all().categorical) CHECK(parse_categorical(feature_name(f)) == f);
    for (auto f : FeatureSelection::all().numeric) CHECK(parse_numeric(feature_name(f)) == f);
    CHECK_FALSE(parse_numeric("colour").has_value());
    CHECK(FeatureSelection::all().categorical.size() + FeatureSelection::all().numeric.size() == 12);
}

TEST_CASE("selection validation") {
    FeatureSelection empty;
    CHECK_THROWS_AS(empty.validate(), InvalidConfig);
    FeatureSelection twice;
    twice.categorical = {CategoricalFeature::User, CategoricalFeature::User};
    CHECK_THROWS_AS(twice.validate(), InvalidConfig);
}

TEST_CASE("dictionary keeps the most frequent categories, ties by name") {
    const auto jobs = users({"carol", "bob", "carol", "dave", "bob", "alice", "erin"});
    const auto dict = build_dictionary(jobs, users_and_procs(), 3);
    REQUIRE(dict.maps.size() == 1);
    const auto& m = dict.maps[0];
    CHECK(m.categories() == std::vector<std::string>{"bob", "carol", "alice"});
    CHECK(m.id("bob") == 0);
    CHECK(m.id("dave") == m.other_id());
    CHECK(m.id("never-seen") == m.other_id());
    CHECK(m.other_id() == 3);
}

TEST_CASE("column layout lists categories, an OTHER slot, then numerics") {
    const auto jobs = users({"b", "a", "b"});
    const auto snap = fit_encoder(jobs, users_and_procs());
    CHECK(snap.column_layout == std::vector<std::string>{"user=b", "user=a", "user=#OTHER", "req_procs"});
    CHECK(snap.width() == 4);
}

TEST_CASE("numeric statistics use the population standard deviation") {
    auto jobs = users({"a", "a", "a"});
    jobs[0].req_procs = 1;
    jobs[1].req_procs = 2;
    jobs[2].req_procs = 3;
    const auto snap = fit_encoder(jobs, users_and_procs());
    REQUIRE(snap.numeric.size() == 1);
    CHECK(snap.numeric[0].mean == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(snap.numeric[0].stddev == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    const auto row = encode_job(jobs[2], snap);
    CHECK(row.back() == doctest::Approx(1.0 / std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(encode_job(jobs[2], snap, Scaling::Raw).back() == 3.0);
}

TEST_CASE("constant numeric columns encode as zero") {
    const auto jobs = users({"a", "b"});
    const auto snap = fit_encoder(jobs, users_and_procs());
    CHECK(snap.numeric[0].stddev == 0.0);
    auto other = jobs[0];
    other.req_procs = 64;
    CHECK(encode_job(other, snap).back() == 0.0);
}

TEST_CASE("unseen categories land in OTHER without error") {
    const auto jobs = users({"a", "b"});
    const auto snap = fit_encoder(jobs, users_and_procs());
    auto q = job("q", 1);
    q.user = "zed";
    const auto row = encode_job(q, snap);
    CHECK(row[0] == 0.0);
    CHECK(row[1] == 0.0);
    CHECK(row[2] == 1.0);
}

TEST_CASE("fitting needs labels and rows") {
    CHECK_THROWS_AS(fit_encoder({}, FeatureSelection::all()), EmptyTrainingSet);
    const std::vector<JobRecord> unlabeled = {job("u", 1)};
    CHECK_THROWS_AS(fit_encoder(unlabeled, FeatureSelection::all()), MissingLabel);
}

TEST_CASE("exactly one hot column per categorical feature") {
    SyntheticConfig cfg;
    cfg.n_jobs = 3000;
    cfg.seed = 21;
    const auto w = generate_synthetic(cfg);
    const auto snap = fit_encoder(w.jobs, FeatureSelection::all(), {512, 256, 8});
    Rng rng(4);
    for (int i = 0; i < 2000; ++i) {
        auto j = w.jobs[rng.below(w.jobs.size())];
        if (rng.uniform() < 0.3) j.user = "stranger" + std::to_string(i);
        if (rng.uniform() < 0.3) j.cwd = "/tmp/" + std::to_string(i);
        const auto row = encode_job(j, snap);
        std::size_t offset = 0;
        for (const auto& m : snap.dictionary.maps) {
            int hot = 0;
            for (std::size_t c = 0; c <= m.cardinality(); ++c) {
                const double v = row[offset + c];
                CHECK((v == 0.0 || v == 1.0));
                hot += v == 1.0;
            }
            CHECK(hot == 1);
            offset += m.cardinality() + 1;
        }
    }
}

TEST_CASE("memory bins are half-open and clamp at max_bin") {
    CHECK(memory_to_bin(0.0, 512, 256) == 0);
    CHECK(memory_to_bin(511.999, 512, 256) == 0);
    CHECK(memory_to_bin(512.0, 512, 256) == 1);
    CHECK(memory_to_bin(1e12, 512, 256) == 256);
    CHECK(bin_to_request_mib(2, 512) == 1536.0);
    CHECK(bin_to_request_mib(0, 512) == 512.0);
}

TEST_CASE("encoded datasets carry bins, raw memory and ids") {
    const std::vector<JobRecord> jobs = {job("a", 1, 2, 100.0), job("b", 1, 2, 1600.0)};
    const auto snap = fit_encoder(jobs, users_and_procs());
    const auto ds = encode_dataset(jobs, snap);
    CHECK(ds.labels == std::vector<int>{0, 3});
    CHECK(ds.memory_mib == std::vector<double>{100.0, 1600.0});
    CHECK(ds.job_ids == std::vector<std::string>{"a", "b"});
    const std::vector<std::size_t> pick = {1};
    const auto sub = ds.subset(pick);
    CHECK(sub.size() == 1);
    CHECK(sub.labels[0] == 3);
    CHECK(sub.width() == ds.width());
}

TEST_CASE("feature matrix rejects ragged rows") {
    FeatureMatrix m(0, 3);
    const std::vector<double> two = {1.0, 2.0};
    CHECK_THROWS_AS(m.append_row(two), WidthMismatch);
}
