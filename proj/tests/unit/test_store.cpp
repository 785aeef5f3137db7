#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "mempredict/errors.hpp"
#include "mempredict/random.hpp"
#include "mempredict/serialization.hpp"
#include "mempredict/store.hpp"
#include "small_models.hpp"

using namespace mempredict;
namespace fs = std::filesystem;

namespace {

const testutil::SmallWorld& world() {
    static const testutil::SmallWorld w = testutil::small_world(11);
    return w;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

JobRecord random_query(Rng& rng, std::int64_t t) {
    auto j = world().workload.jobs[rng.below(world().workload.jobs.size())];
    if (rng.uniform() < 0.2) j.user = "visitor";
    if (rng.uniform() < 0.2) j.queue = "unknown-queue";
    j.submit_time = t + static_cast<std::int64_t>(rng.below(100000));
    j.req_procs = 1 + static_cast<std::int64_t>(rng.below(64));
    return j;
}

}  // namespace

TEST_CASE("persisted model sets load back identical and predict bit-for-bit") {
    testutil::TempDir dir("store");
    const ModelSet& set = world().set;
    const auto snapshot = persist_model_set(set, dir.path());
    CHECK(snapshot.filename() == "snapshot-000001");
    const ModelSet loaded = load_model_set(dir.path());

    CHECK(loaded.schema_version == kModelSetSchemaVersion);
    CHECK(loaded.config == set.config);
    CHECK(loaded.encoder == set.encoder);
    CHECK(loaded.mode_bin == set.mode_bin);
    CHECK(loaded.created_at == set.created_at);
    CHECK(loaded.finished_consumed == set.finished_consumed);
    CHECK(loaded.window_job_ids == set.window_job_ids);
    REQUIRE(loaded.ranked.size() == set.ranked.size());
    for (std::size_t r = 0; r < set.ranked.size(); ++r) {
        CHECK(loaded.ranked.entries[r].method == set.ranked.entries[r].method);
        CHECK(loaded.ranked.entries[r].validation_accuracy == set.ranked.entries[r].validation_accuracy);
        CHECK(*loaded.ranked.entries[r].model == *set.ranked.entries[r].model);
    }

    Rng rng(42);
    for (int i = 0; i < 100; ++i) {
        const auto q = random_query(rng, world().as_of);
        const auto a = predict_with_models(set, q);
        const auto b = predict_with_models(loaded, q);
        CHECK(a.bin == b.bin);
        CHECK(a.request_mib == b.request_mib);
        const auto rows = encode_query(q, set.encoder);
        for (std::size_t r = 0; r < set.ranked.size(); ++r)
            CHECK(predict(*set.ranked.entries[r].model, rows.for_scaling(set.ranked.entries[r].model->scaling)) ==
                  predict(*loaded.ranked.entries[r].model, rows.for_scaling(loaded.ranked.entries[r].model->scaling)));
    }
}

TEST_CASE("publishing again swaps CURRENT and leaves no staging behind") {
    testutil::TempDir dir("swap");
    persist_model_set(world().set, dir.path());
    ModelSet newer = world().set;
    newer.created_at += 1;
    const auto second = persist_model_set(newer, dir.path());
    CHECK(second.filename() == "snapshot-000002");
    CHECK(load_model_set(dir.path()).created_at == newer.created_at);
    CHECK(fs::exists(dir.path() / "snapshot-000001"));
    for (const auto& e : fs::directory_iterator(dir.path())) CHECK(e.path().filename().string()[0] != '.');
}

TEST_CASE("identical model sets persist to identical bytes") {
    testutil::TempDir a("bytes-a"), b("bytes-b");
    persist_model_set(world().set, a.path());
    persist_model_set(world().set, b.path());
    for (const auto& e : fs::directory_iterator(a.path() / "snapshot-000001"))
        CHECK(slurp(e.path()) == slurp(b.path() / "snapshot-000001" / e.path().filename()));
}

TEST_CASE("a missing store is NotFound") {
    testutil::TempDir dir("missing");
    CHECK_THROWS_AS(load_model_set(dir.path() / "nothing-here"), NotFound);
    CHECK_THROWS_AS(load_model_set(dir.path()), NotFound);
}

TEST_CASE("damaged stores are rejected") {
    testutil::TempDir dir("damage");
    const auto snap = persist_model_set(world().set, dir.path());
    const auto model = snap / "model-knn-1.json";
    const std::string original = slurp(model);

    SUBCASE("truncated model file") {
        spit(model, original.substr(0, original.size() / 2));
        CHECK_THROWS_AS(load_model_set(dir.path()), StoreCorrupt);
    }
    SUBCASE("flipped byte") {
        std::string bad = original;
        bad[bad.size() / 3] = bad[bad.size() / 3] == '1' ? '2' : '1';
        spit(model, bad);
        CHECK_THROWS_AS(load_model_set(dir.path()), StoreCorrupt);
    }
    SUBCASE("deleted encoder") {
        fs::remove(snap / "encoder.json");
        CHECK_THROWS_AS(load_model_set(dir.path()), StoreCorrupt);
    }
    SUBCASE("truncated manifest") {
        const std::string m = slurp(snap / "manifest.json");
        spit(snap / "manifest.json", m.substr(0, m.size() - 20));
        CHECK_THROWS_AS(load_model_set(dir.path()), StoreCorrupt);
    }
    SUBCASE("CURRENT names a missing snapshot") {
        spit(dir.path() / "CURRENT", "snapshot-000099\n");
        CHECK_THROWS_AS(load_model_set(dir.path()), StoreCorrupt);
    }
    SUBCASE("ranking disagrees with the stored accuracies") {
        auto manifest = Json::parse(slurp(snap / "manifest.json"));
        auto& ranking = manifest["ranking"];
        std::swap(ranking[0]["validation_accuracy"], ranking[6]["validation_accuracy"]);
        if (ranking[0]["validation_accuracy"] == ranking[6]["validation_accuracy"])
            ranking[6]["validation_accuracy"] = 2.0;
        spit(snap / "manifest.json", manifest.dump(2));
        CHECK_THROWS_AS(load_model_set(dir.path()), StoreCorrupt);
    }
    SUBCASE("a method is missing") {
        auto manifest = Json::parse(slurp(snap / "manifest.json"));
        manifest["ranking"].erase(manifest["ranking"].size() - 1);
        spit(snap / "manifest.json", manifest.dump(2));
        CHECK_THROWS_AS(load_model_set(dir.path()), StoreCorrupt);
    }
    SUBCASE("a newer schema version") {
        auto manifest = Json::parse(slurp(snap / "manifest.json"));
        manifest["schema_version"] = 2;
        spit(snap / "manifest.json", manifest.dump(2));
        try {
            load_model_set(dir.path());
            FAIL("expected VersionMismatch");
        } catch (const VersionMismatch& e) {
            CHECK(e.found() == 2);
            CHECK(e.expected() == 1);
        }
    }
}

TEST_CASE("model json rejects self-inconsistent parameters") {
    const auto& entry = world().set.ranked.entries.front();
    Json j = to_json(*entry.model);
    CHECK(model_from_json(j) == *entry.model);
    Json wrong = j;
    wrong["width"] = entry.model->width + 1;
    CHECK_THROWS(model_from_json(wrong));
    Json unknown = j;
    unknown["fitted"]["kind"] = "oracle";
    CHECK_THROWS(model_from_json(unknown));
}

TEST_CASE("config hash tracks config content") {
    PipelineConfig a, b;
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 1;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("fnv1a64 reference values") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
