// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "../oracles.hpp"
#include "../unit/helpers.hpp"
#include "../unit/small_models.hpp"
#include "mempredict/cli.hpp"
#include "mempredict/ensemble.hpp"
#include "mempredict/errors.hpp"
#include "mempredict/evaluation.hpp"
#include "mempredict/learners.hpp"
#include "mempredict/pipeline.hpp"
#include "mempredict/store.hpp"

using namespace mempredict;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

void progress(const std::string& s) { std::cerr << "[acceptance] " << s << std::endl; }

/// The planted trace, evaluated once through the library and once through the CLI.
struct PlantedRun {
    testutil::TempDir dir{"acceptance"};
    fs::path trace_path = dir.path() / "trace.jsonl";
    fs::path library_out = dir.path() / "library";
    fs::path cli_out = dir.path() / "cli";
    SyntheticWorkload workload;
    std::vector<JobRecord> trace;
    EvaluationReport report;
    double eval_seconds = 0.0;
    double oracle_accuracy = 0.0;
    int generate_code = -1;
    int evaluate_code = -1;

    PlantedRun();
};

PlantedRun::PlantedRun() {
    generate_code = cli({"generate", "--jobs", "35000", "--seed", "7", "--out", trace_path.string()});
    std::ifstream in(trace_path);
    trace = parse_trace(in);

    SyntheticConfig sc;
    sc.n_jobs = 35000;
    sc.seed = 7;
    workload = generate_synthetic(sc);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < workload.jobs.size(); ++i)
        hits += memory_to_bin(*workload.jobs[i].max_mem_mib, 512, 256) == workload.planted_bin(i);
    oracle_accuracy = static_cast<double>(hits) / static_cast<double>(workload.jobs.size());

    EvalConfig ec;
    ec.pipeline.grid_profile = GridProfile::Fast;
    ec.log = [](std::string_view s) { progress("library run: " + std::string(s)); };
    const auto t0 = std::chrono::steady_clock::now();
    report = run_segmented_evaluation(trace, ec);
    emit_report(report, library_out);
    eval_seconds = seconds_since(t0);

    progress("second run through the command line");
    evaluate_code = cli({"evaluate", "--trace", trace_path.string(), "--out", cli_out.string(), "--profile",
                           "fast", "--quiet"});
}

PlantedRun& planted() {
    static PlantedRun run;
    return run;
}

Outcome planted_end_to_end() {
    auto& r = planted();
    Outcome o;
    if (r.generate_code != 0 || r.trace.size() != 35000 || r.trace != r.workload.jobs) {
        return {false, "generated trace does not match the generator"};
    }
    std::size_t poll_beats_mode = 0;
    std::string per_segment;
    for (const auto& s : r.report.segments) {
        if (s.mode_test_accuracy > 0.40) o.pass = false;
        if (s.poll_validation_accuracy < 0.90) o.pass = false;
        poll_beats_mode += s.poll_validation_accuracy >= s.mode_test_accuracy;
        per_segment += " s" + std::to_string(s.index) + "(mode " + fmt("%.4f", s.mode_test_accuracy) + ", poll " +
                       fmt("%.4f", s.poll_validation_accuracy) + ")";
    }
    if (r.report.segments.size() != 5 || poll_beats_mode < 4 || r.eval_seconds > 900.0) o.pass = false;
    o.detail = "evaluate " + fmt("%.0f", r.eval_seconds) + " s <= 900 s;" + per_segment +
               "; poll>=mode in " + std::to_string(poll_beats_mode) + "/5; planted-rule accuracy " +
               fmt("%.4f", r.oracle_accuracy);
    return o;
}

Outcome clouds_accuracy(const GridOptions& grid) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto train_set = oracle::clouds(600, 101);
    const auto test_set = oracle::clouds(300, 202);
    Outcome o;
    for (Method m : kAllMethods) {
        auto data = train_set;
        data.scaling = preferred_scaling(m);
        const auto model = train(resolve_spec(m, data, grid, 17), data, 17);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < test_set.size(); ++i)
            hits += predict(model, test_set.features.row(i)) == test_set.labels[i];
        const double acc = static_cast<double>(hits) / static_cast<double>(test_set.size());
        if (acc < 0.95) o.pass = false;
        o.detail += std::string(method_name(m)) + " " + fmt("%.4f", acc) + " ";
    }
    const double secs = seconds_since(t0);
    if (secs > 60.0) o.pass = false;
    o.detail += "in " + fmt("%.1f", secs) + " s <= 60 s";
    return o;
}

Outcome learner_sanity() {
    GridOptions fast;
    fast.profile = GridProfile::Fast;
    Outcome o = clouds_accuracy(fast);
    o.detail = "fast grids: " + o.detail;
    return o;
}

Outcome knn_oracle() {
    Rng rng(303);
    EncodedDataset ds;
    ds.features = FeatureMatrix(0, 6);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> row(6);
        // Half the columns on a coarse grid so distance ties occur.
        for (int c = 0; c < 3; ++c) row[c] = static_cast<double>(rng.below(3));
        for (int c = 3; c < 6; ++c) row[c] = rng.normal();
        ds.features.append_row(row);
        const int label = static_cast<int>(rng.below(6));
        ds.labels.push_back(label);
        ds.memory_mib.push_back(label * 512.0 + rng.uniform(0.0, 512.0));
        ds.job_ids.push_back(std::to_string(i));
    }
    const auto vote = train(default_spec(Method::Knn1), ds, 1);
    const auto regress = train(default_spec(Method::Knn2), ds, 1);
    const std::size_t k1 = std::get<KnnParams>(vote.spec.params).k;
    const std::size_t k2 = std::get<KnnParams>(regress.spec.params).k;
    std::size_t mismatches = 0;
    for (int q = 0; q < 100; ++q) {
        std::vector<double> row(6);
        for (int c = 0; c < 3; ++c) row[c] = q % 2 == 0 ? static_cast<double>(rng.below(3)) : rng.uniform(-1.0, 3.0);
        for (int c = 3; c < 6; ++c) row[c] = q % 4 == 0 ? 0.0 : rng.normal();
        mismatches += predict(vote, row) != oracle::knn_vote(ds, row, k1);
        mismatches += predict(regress, row) != oracle::knn_regression(ds, row, k2, regress.classes);
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches over 200 predictions (k=" +
                                 std::to_string(k1) + "," + std::to_string(k2) + ")"};
}

Outcome information_gain_oracle() {
    double worst = 0.0;
    const std::vector<int> ab = {0, 0, 0, 0, 1, 1, 1, 1};
    const std::vector<int> parent = {0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
    const std::vector<std::pair<std::vector<int>, std::vector<std::vector<int>>>> worked = {
        {ab, {{0, 0, 0, 0}, {1, 1, 1, 1}}},
        {ab, {{0, 0, 1, 1}, {0, 0, 1, 1}}},
        {parent, {{0, 0, 0, 0, 0, 0}, {0, 0, 1, 1, 1, 1}}},
    };
    const double hand[] = {1.0, 0.0, 0.45915};
    bool hand_ok = true;
    for (std::size_t i = 0; i < worked.size(); ++i) {
        const double g = information_gain(worked[i].first, worked[i].second);
        worst = std::max(worst, std::abs(g - oracle::information_gain(worked[i].first, worked[i].second)));
        hand_ok = hand_ok && std::abs(g - hand[i]) <= 5e-6;
    }
    Rng rng(404);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<int> labels(1 + rng.below(40));
        const std::size_t classes = 1 + rng.below(5);
        for (int& l : labels) l = static_cast<int>(rng.below(classes));
        std::vector<std::vector<int>> parts(1 + rng.below(5));
        for (int l : labels) parts[rng.below(parts.size())].push_back(l);
        worst = std::max(worst, std::abs(information_gain(labels, parts) - oracle::information_gain(labels, parts)));
    }
    return {worst <= 1e-12 && hand_ok,
            "max |error| " + fmt("%.3g", worst) + " <= 1e-12 over 1003 cases; worked examples " +
                (hand_ok ? "match" : "differ")};
}

Outcome gradient_check() {
    Rng rng(505);
    const std::vector<int> hidden = {8, 4};
    double worst = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        const auto net = init_network(5, hidden, 3, 1000 + draw);
        RowMatrix batch(8, 5);
        std::vector<std::size_t> targets(8);
        for (int r = 0; r < 8; ++r) {
            for (int c = 0; c < 5; ++c) batch(r, c) = rng.normal();
            targets[r] = rng.below(3);
        }
        const auto analytic = mlp_gradient(net, batch, targets, 1e-4).flatten();
        const auto numeric = oracle::numeric_gradient(net, batch, targets, 1e-4, 1e-5);
        if (analytic.size() != numeric.size()) return {false, "gradient length mismatch"};
        for (std::size_t p = 0; p < analytic.size(); ++p) {
            const double scale = std::max({std::abs(analytic[p]), std::abs(numeric[p]), 1e-6});
            worst = std::max(worst, std::abs(analytic[p] - numeric[p]) / scale);
        }
    }
    return {worst <= 1e-4, "max relative error " + fmt("%.3g", worst) + " <= 1e-4 over 20 draws"};
}

Outcome poll_oracle() {
    Rng rng(606);
    std::size_t mismatches = 0, rescale_changes = 0, tie_cases = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t voters = 1 + rng.below(5);
        std::vector<int> bins(voters);
        std::vector<long> milli(voters);
        for (std::size_t v = 0; v < voters; ++v) {
            bins[v] = static_cast<int>(rng.below(10));
            milli[v] = trial % 2 == 0 ? 100 * static_cast<long>(1 + rng.below(4)) : static_cast<long>(1 + rng.below(1000));
        }
        std::map<int, long> totals;
        for (std::size_t v = 0; v < voters; ++v) totals[bins[v]] += milli[v];
        long best = 0;
        int at_best = 0;
        for (const auto& [b, t] : totals) best = std::max(best, t);
        for (const auto& [b, t] : totals) at_best += t == best;
        tie_cases += at_best > 1;

        const int expected = oracle::poll(bins, milli);
        std::vector<Vote> votes;
        for (std::size_t v = 0; v < voters; ++v) votes.push_back({bins[v], static_cast<double>(milli[v]) / 1000.0});
        const int got = poll_votes(votes);
        mismatches += got != expected;
        const double c = std::exp(rng.uniform(-6.0, 6.0));
        for (auto& v : votes) v.weight *= c;
        rescale_changes += poll_votes(votes) != got;
    }
    return {mismatches == 0 && rescale_changes == 0,
            std::to_string(mismatches) + " mismatches, " + std::to_string(rescale_changes) +
                " rescaling changes over 10000 cases (" + std::to_string(tie_cases) + " with tied totals)"};
}

Outcome leakage_audit() {
    auto& r = planted();
    const auto clean = audit_leakage(r.report.artifacts, r.trace);
    std::size_t windows = 0;
    for (const auto& a : r.report.artifacts) windows += a.model_sets.size();

    std::size_t caught = 0;
    for (std::size_t s = 0; s < r.report.artifacts.size(); ++s) {
        auto mutated = r.report.artifacts;
        auto& set = mutated[s].model_sets[0];
        const JobRecord* future = nullptr;
        for (const auto& j : r.trace)
            if (j.finish_time && *j.finish_time >= set.as_of && (!future || *j.finish_time < *future->finish_time))
                future = &j;
        if (!future) continue;
        set.window_job_ids.push_back(future->job_id);
        const auto findings = audit_leakage(mutated, r.trace);
        caught += findings.size() == 1 && findings[0].segment == s && findings[0].job_id == future->job_id;
    }
    return {clean.empty() && windows == 5 && caught == 5,
            std::to_string(clean.size()) + " leaked jobs across " + std::to_string(windows) +
                " windows; widened windows caught " + std::to_string(caught) + "/5"};
}

/// Records each retrain's finished-job count without fitting anything.
struct CountingTrainer {
    std::vector<std::size_t>* calls;
    ModelSet operator()(std::span<const JobRecord>, std::span<const JobRecord>, const PipelineConfig& c,
                        std::int64_t as_of, std::size_t consumed) const {
        calls->push_back(consumed);
        ModelSet s;
        s.config = c;
        s.created_at = as_of;
        s.finished_consumed = consumed;
        return s;
    }
};

Outcome cadence() {
    const auto& r = planted();
    std::unordered_map<std::string, const JobRecord*> by_id;
    for (const auto& j : r.trace) by_id[j.job_id] = &j;
    std::vector<std::size_t> calls;
    Pipeline p(PipelineConfig{}, CountingTrainer{&calls});
    std::int64_t horizon = 0;
    for (const auto& j : r.trace) horizon = std::max(horizon, j.submit_time);
    for (const auto& e : event_stream(r.trace)) {
        if (e.time > horizon) break;
        if (e.kind != EventKind::Finished) continue;
        p.observe_finished(*by_id.at(e.job_id));
        p.retrain_if_due(e.time + 1);
    }
    std::string seen;
    for (std::size_t c : calls) seen += (seen.empty() ? "" : ",") + std::to_string(c);
    return {calls == std::vector<std::size_t>{10000, 15000, 20000, 25000, 30000}, "retrains at " + seen};
}

Outcome persistence_identity() {
    const auto world = testutil::small_world(909);
    testutil::TempDir dir("persist");
    const auto snapshot = persist_model_set(world.set, dir.path());
    const auto loaded = load_model_set(dir.path());
    Rng rng(910);
    std::size_t differences = 0;
    for (int i = 0; i < 100; ++i) {
        auto q = world.workload.jobs[rng.below(world.workload.jobs.size())];
        if (rng.uniform() < 0.2) q.user = "visitor";
        if (rng.uniform() < 0.2) q.cwd = "/scratch/" + std::to_string(i);
        q.submit_time = world.as_of + static_cast<std::int64_t>(rng.below(86400));
        q.req_procs = 1 + static_cast<std::int64_t>(rng.below(64));
        const auto a = predict_with_models(world.set, q);
        const auto b = predict_with_models(loaded, q);
        differences += a.bin != b.bin || a.request_mib != b.request_mib || a.voters.size() != b.voters.size();
        const auto rows = encode_query(q, world.set.encoder);
        const auto rows_loaded = encode_query(q, loaded.encoder);
        differences += rows.normalized != rows_loaded.normalized || rows.raw != rows_loaded.raw;
        for (std::size_t m = 0; m < world.set.ranked.size(); ++m) {
            const auto& x = *world.set.ranked.entries[m].model;
            const auto& y = *loaded.ranked.entries[m].model;
            differences += predict(x, rows.for_scaling(x.scaling)) != predict(y, rows_loaded.for_scaling(y.scaling));
        }
    }

    const auto victim = snapshot / "model-svm-2.json";
    std::string bytes = slurp(victim);
    bytes[bytes.size() / 2] = bytes[bytes.size() / 2] == '3' ? '4' : '3';
    std::ofstream(victim, std::ios::binary | std::ios::trunc) << bytes;
    bool corrupt_detected = false;
    try {
        load_model_set(dir.path());
    } catch (const StoreCorrupt&) {
        corrupt_detected = true;
    }
    return {differences == 0 && corrupt_detected,
            std::to_string(differences) + " differences over 100 queries; corrupted store " +
                (corrupt_detected ? "raises StoreCorrupt" : "was accepted")};
}

Outcome determinism() {
    auto& r = planted();
    if (r.evaluate_code != 0) return {false, "command-line evaluate exited " + std::to_string(r.evaluate_code)};
    std::size_t files = 0, identical = 0;
    for (const auto& e : fs::directory_iterator(r.library_out)) {
        ++files;
        const auto other = r.cli_out / e.path().filename();
        identical += fs::exists(other) && slurp(e.path()) == slurp(other);
    }
    std::size_t cli_files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(r.cli_out)) ++cli_files;
    return {files > 0 && identical == files && cli_files == files,
            std::to_string(identical) + "/" + std::to_string(files) + " report files byte-identical across two runs"};
}

Outcome grid_bookkeeping() {
    const GridOptions full;
    const std::size_t svm = grid_candidates(Method::Svm2, full).size();
    const std::size_t mlp = grid_candidates(Method::Mlp2, full).size();

    EncodedDataset ds;
    ds.features = FeatureMatrix(0, 2);
    for (int i = 0; i < 30; ++i) {
        const std::vector<double> row = {static_cast<double>(i), static_cast<double>(i % 4)};
        ds.features.append_row(row);
        ds.labels.push_back(3);
        ds.memory_mib.push_back(1800.0);
        ds.job_ids.push_back(std::to_string(i));
    }
    bool earliest = true;
    for (Method m : {Method::Svm2, Method::Mlp2}) {
        const auto candidates = grid_candidates(m, full);
        const auto result = cross_validate(candidates, ds, 3, 7);
        earliest = earliest && result.best_index == 0 && result.best == candidates.front();
    }
    return {svm == 12 && mlp == 72 && earliest,
            "svm-2 " + std::to_string(svm) + " candidates, mlp-2 " + std::to_string(mlp) +
                "; all-tie selection " + (earliest ? "returns the first candidate" : "does not return the first")};
}

Outcome encoding_invariants() {
    SyntheticConfig sc;
    sc.n_jobs = 10000;
    sc.n_users = 40;
    sc.n_commands = 15;
    sc.seed = 1212;
    const auto w = generate_synthetic(sc);
    const auto snap = fit_encoder(w.jobs, FeatureSelection::all());
    const auto ds = encode_dataset(w.jobs, snap);

    const std::size_t numeric_start = snap.width() - snap.numeric.size();
    double worst_mean = 0.0, worst_std = 0.0;
    for (std::size_t c = numeric_start; c < snap.width(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < ds.size(); ++r) sum += ds.features(r, c);
        const double mean = sum / static_cast<double>(ds.size());
        double ss = 0.0;
        for (std::size_t r = 0; r < ds.size(); ++r) ss += (ds.features(r, c) - mean) * (ds.features(r, c) - mean);
        const double sd = std::sqrt(ss / static_cast<double>(ds.size()));
        worst_mean = std::max(worst_mean, std::abs(mean));
        worst_std = std::max(worst_std, sd == 0.0 ? 0.0 : std::abs(sd - 1.0));
    }

    Rng rng(1213);
    std::size_t bad_rows = 0;
    for (int i = 0; i < 10000; ++i) {
        auto j = w.jobs[rng.below(w.jobs.size())];
        if (rng.uniform() < 0.3) j.user = "stranger" + std::to_string(i);
        if (rng.uniform() < 0.3) j.cwd = "/tmp/" + std::to_string(i);
        if (rng.uniform() < 0.1) j.queue = "";
        const auto row = encode_job(j, snap);
        std::size_t offset = 0;
        bool ok = row.size() == snap.width();
        for (const auto& m : snap.dictionary.maps) {
            int hot = 0;
            for (std::size_t c = 0; c <= m.cardinality(); ++c) {
                ok = ok && (row[offset + c] == 0.0 || row[offset + c] == 1.0);
                hot += row[offset + c] == 1.0;
            }
            ok = ok && hot == 1;
            offset += m.cardinality() + 1;
        }
        bad_rows += !ok;
    }

    std::size_t uncovered = 0;
    const double cap = static_cast<double>(snap.max_bin) * snap.bin_size_mib;
    for (int i = 0; i < 10000; ++i) {
        const double m = i < 10 ? i * 512.0 : rng.uniform(0.0, cap);
        uncovered += bin_to_request_mib(memory_to_bin(m, snap.bin_size_mib, snap.max_bin), snap.bin_size_mib) < m;
    }
    const bool pass = worst_mean <= 1e-9 && worst_std <= 1e-9 && bad_rows == 0 && uncovered == 0;
    return {pass, std::to_string(bad_rows) + " rows not one-hot of 10000; max |mean| " + fmt("%.3g", worst_mean) +
                      ", max |std-1| " + fmt("%.3g", worst_std) + "; " + std::to_string(uncovered) +
                      " of 10000 bin requests below usage"};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"planted workload end-to-end", planted_end_to_end},
        {"learner sanity on separated clouds", learner_sanity},
        {"kNN matches brute-force oracle", knn_oracle},
        {"information gain matches entropy formula", information_gain_oracle},
        {"MLP gradient check", gradient_check},
        {"poll matches vote enumeration", poll_oracle},
        {"temporal leakage audit", leakage_audit},
        {"retrain cadence", cadence},
        {"persistence identity", persistence_identity},
        {"evaluation determinism", determinism},
        {"grid bookkeeping", grid_bookkeeping},
        {"encoding invariants", encoding_invariants},
    };
    std::vector<std::string> lines;
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        progress("criterion " + std::to_string(i + 1));
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        all = all && o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }

    progress("full-grid clouds run");
    try {
        const Outcome full = clouds_accuracy(GridOptions{});
        std::printf("INFO learner sanity with full grids: %s (%s)\n", full.detail.c_str(),
                    full.pass ? "within budget" : "over budget or below 0.95");
    } catch (const std::exception& e) {
        std::printf("INFO learner sanity with full grids threw: %s\n", e.what());
    }

    const auto& r = planted();
    for (const auto& s : r.report.segments) {
        const double gap = std::abs(s.poll_validation_accuracy - s.poll_perfect_accuracy);
        std::printf("INFO segment %zu: |poll_validation - poll_perfect| = %.4f (<= 0.05 %s)\n", s.index, gap,
                    gap <= 0.05 ? "holds" : "violated");
        std::string methods;
        for (std::size_t m = 0; m < kAllMethods.size(); ++m)
            methods += " " + std::string(method_name(kAllMethods[m])) + " " + fmt("%.4f", s.test_accuracy[m]);
        std::printf("INFO segment %zu test accuracy:%s\n", s.index, methods.c_str());
    }
    return all ? 0 : 1;
}
