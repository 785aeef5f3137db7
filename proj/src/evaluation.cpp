#include "mempredict/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <tuple>
#include <unordered_map>

#include "mempredict/errors.hpp"
#include "mempredict/parallel.hpp"
#include "mempredict/serialization.hpp"

namespace fs = std::filesystem;

namespace mempredict {

namespace {

std::size_t method_index(Method m) { return static_cast<std::size_t>(m); }

double share(std::size_t hits, std::size_t total) {
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

double accuracy_of(std::span<const int> predicted, std::span<const int> actual) {
    return predicted.empty() ? 0.0 : accuracy(predicted, actual);
}

std::vector<int> poll_all(const SegmentArtifacts& seg, std::size_t top_n,
                          const std::function<const MethodScores&(std::size_t job)>& weights_for) {
    std::vector<int> out(seg.test_labels.size());
    const std::vector<Method> methods(kAllMethods.begin(), kAllMethods.end());
    for (std::size_t j = 0; j < out.size(); ++j) {
        const MethodScores& w = weights_for(j);
        const auto order = ranking_order(methods, w);
        std::vector<Vote> votes;
        for (std::size_t r = 0; r < std::min(top_n, order.size()); ++r)
            votes.push_back({seg.test_predictions[order[r]][j], w[order[r]]});
        out[j] = poll_votes(votes);
    }
    return out;
}

struct TrainedSet {
    EvalModelSet summary;
    std::shared_ptr<const ModelSet> set;
};

TrainedSet train_for(std::span<const JobRecord> window, const EvalConfig& config, std::int64_t as_of,
                     std::size_t consumed) {
    const WindowSplit split = split_available(window, config.pipeline);
    auto set = std::make_shared<const ModelSet>(
        train_model_set(split.train, split.validation, config.pipeline, as_of, consumed));
    TrainedSet out;
    out.set = set;
    out.summary.as_of = as_of;
    out.summary.window_job_ids = set->window_job_ids;
    out.summary.mode_bin = set->mode_bin;
    out.summary.specs.resize(kAllMethods.size());
    for (const auto& e : set->ranked.entries) {
        out.summary.validation_accuracy[method_index(e.method)] = e.validation_accuracy;
        out.summary.specs[method_index(e.method)] = e.model->spec;
    }
    std::size_t hits = 0;
    for (const auto& j : split.validation)
        if (memory_to_bin(*j.max_mem_mib, config.pipeline.bin_size_mib, config.pipeline.max_bin) == set->mode_bin) ++hits;
    out.summary.mode_validation_accuracy = share(hits, split.validation.size());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    if (!out) throw IoError("cannot write " + path.string());
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string method_header() {
    std::string h;
    for (Method m : kAllMethods) h += "," + std::string(method_name(m));
    return h;
}

}  // namespace

void EvalConfig::validate() const {
    if (segments == 0 || segment_size == 0) throw InvalidConfig("segments and segment_size must be positive");
    if (max_top_n < 1 || max_top_n > kAllMethods.size()) throw InvalidConfig("max_top_n must lie in [1, 7]");
    pipeline.validate();
}

std::vector<int> poll_with_validation_weights(const SegmentArtifacts& seg, std::size_t top_n) {
    return poll_all(seg, top_n, [&](std::size_t j) -> const MethodScores& {
        return seg.model_sets[seg.test_model_set[j]].validation_accuracy;
    });
}

MethodScores test_accuracies(const SegmentArtifacts& seg) {
    MethodScores out{};
    for (std::size_t m = 0; m < kAllMethods.size(); ++m)
        out[m] = accuracy_of(seg.test_predictions[m], seg.test_labels);
    return out;
}

std::vector<int> poll_with_perfect_weights(const SegmentArtifacts& seg, std::size_t top_n) {
    const MethodScores perfect = test_accuracies(seg);
    return poll_all(seg, top_n, [&](std::size_t) -> const MethodScores& { return perfect; });
}

std::vector<double> top_n_sweep(const SegmentArtifacts& seg, std::size_t max_n) {
    std::vector<double> out;
    for (std::size_t n = 1; n <= max_n; ++n) out.push_back(accuracy_of(poll_with_validation_weights(seg, n), seg.test_labels));
    return out;
}

EvaluationReport run_segmented_evaluation(std::span<const JobRecord> trace, const EvalConfig& config) {
    config.validate();
    if (trace.size() < config.required_jobs()) throw TraceTooShort(config.required_jobs(), trace.size());
    for (const auto& j : trace)
        if (!j.finished()) throw MissingLabel(j.job_id);
    const PipelineConfig& pc = config.pipeline;

    std::vector<JobRecord> by_submit(trace.begin(), trace.end());
    std::sort(by_submit.begin(), by_submit.end(), [](const JobRecord& a, const JobRecord& b) {
        return std::tie(a.submit_time, a.job_id) < std::tie(b.submit_time, b.job_id);
    });
    std::vector<JobRecord> by_finish(trace.begin(), trace.end());
    std::sort(by_finish.begin(), by_finish.end(), [](const JobRecord& a, const JobRecord& b) {
        return std::tie(*a.finish_time, a.job_id) < std::tie(*b.finish_time, b.job_id);
    });
    auto finished_before = [&](std::int64_t as_of) {
        return static_cast<std::size_t>(
            std::partition_point(by_finish.begin(), by_finish.end(),
                                 [&](const JobRecord& j) { return *j.finish_time < as_of; }) -
            by_finish.begin());
    };

    EvaluationReport report;
    report.top_n = pc.top_n;
    report.max_top_n = config.max_top_n;
    for (std::size_t s = 0; s < config.segments; ++s) {
        const auto first = by_submit.begin() + static_cast<std::ptrdiff_t>(config.warmup + s * config.segment_size);
        const std::span<const JobRecord> test(&*first, config.segment_size);

        SegmentArtifacts seg;
        seg.index = s;
        seg.as_of = test.front().submit_time;
        for (const auto& j : test) {
            seg.test_job_ids.push_back(j.job_id);
            seg.test_labels.push_back(memory_to_bin(*j.max_mem_mib, pc.bin_size_mib, pc.max_bin));
        }

        // Each model set covers the jobs whose availability window it was trained on.
        std::vector<std::shared_ptr<const ModelSet>> sets;
        std::size_t current_end = 0;
        for (std::size_t j = 0; j < test.size(); ++j) {
            const std::int64_t as_of = j == 0 || config.strict_per_job ? test[j].submit_time : seg.as_of;
            const std::size_t end = finished_before(as_of);
            if (sets.empty() || end != current_end) {
                const std::size_t begin = end - std::min(end, pc.window_size);
                if (config.log) {
                    char line[160];
                    std::snprintf(line, sizeof line, "segment %zu: training on %zu finished jobs as of %lld", s,
                                  end - begin, static_cast<long long>(as_of));
                    config.log(line);
                }
                TrainedSet trained = train_for(std::span<const JobRecord>(by_finish).subspan(begin, end - begin),
                                               config, as_of, end);
                seg.model_sets.push_back(std::move(trained.summary));
                sets.push_back(std::move(trained.set));
                current_end = end;
            }
            seg.test_model_set.push_back(sets.size() - 1);
        }

        seg.test_predictions.assign(kAllMethods.size(), std::vector<int>(test.size()));
        std::vector<QueryRows> rows(test.size());
        parallel_for(test.size(), [&](std::size_t j) {
            rows[j] = encode_query(test[j], sets[seg.test_model_set[j]]->encoder);
        });
        parallel_for(kAllMethods.size(), [&](std::size_t m) {
            for (std::size_t j = 0; j < test.size(); ++j) {
                const ModelSet& set = *sets[seg.test_model_set[j]];
                for (const auto& e : set.ranked.entries)
                    if (method_index(e.method) == m)
                        seg.test_predictions[m][j] = predict(*e.model, rows[j].for_scaling(e.model->scaling));
            }
        });

        SegmentResult r;
        r.index = s;
        r.as_of = seg.as_of;
        r.model_sets = seg.model_sets.size();
        r.validation_accuracy = seg.model_sets.front().validation_accuracy;
        r.mode_validation_accuracy = seg.model_sets.front().mode_validation_accuracy;
        r.test_accuracy = test_accuracies(seg);
        for (std::size_t j = 0; j < test.size(); ++j)
            r.mode_predictions.push_back(seg.model_sets[seg.test_model_set[j]].mode_bin);
        r.mode_test_accuracy = accuracy(r.mode_predictions, seg.test_labels);
        r.poll_validation_predictions = poll_with_validation_weights(seg, pc.top_n);
        r.poll_perfect_predictions = poll_with_perfect_weights(seg, pc.top_n);
        r.poll_validation_accuracy = accuracy(r.poll_validation_predictions, seg.test_labels);
        r.poll_perfect_accuracy = accuracy(r.poll_perfect_predictions, seg.test_labels);
        r.top_n_accuracy = top_n_sweep(seg, config.max_top_n);

        report.artifacts.push_back(std::move(seg));
        report.segments.push_back(std::move(r));
    }
    return report;
}

std::vector<LeakageFinding> audit_leakage(std::span<const SegmentArtifacts> artifacts,
                                          std::span<const JobRecord> trace) {
    std::unordered_map<std::string, std::int64_t> finish;
    for (const auto& j : trace) finish[j.job_id] = j.finish_time.value_or(std::numeric_limits<std::int64_t>::max());
    std::vector<LeakageFinding> out;
    for (const auto& seg : artifacts)
        for (std::size_t k = 0; k < seg.model_sets.size(); ++k) {
            const auto& ms = seg.model_sets[k];
            for (const auto& id : ms.window_job_ids) {
                auto it = finish.find(id);
                const std::int64_t f = it == finish.end() ? std::numeric_limits<std::int64_t>::max() : it->second;
                if (f >= ms.as_of) out.push_back({seg.index, k, id, f, ms.as_of});
            }
        }
    return out;
}

void emit_report(const EvaluationReport& report, const fs::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

    std::string validation = "segment,mode" + method_header() + "\n";
    std::string test = validation;
    std::string topn = "segment";
    for (std::size_t n = 1; n < report.max_top_n; ++n) topn += ",top" + std::to_string(n);
    topn += ",all\n";
    std::string poll = "segment,mode,poll_validation,poll_perfect\n";
    std::string predictions = "segment,job_id,actual_bin,mode" + method_header() + ",poll_validation,poll_perfect\n";

    Json segments = Json::array();
    for (std::size_t i = 0; i < report.segments.size(); ++i) {
        const SegmentResult& r = report.segments[i];
        const SegmentArtifacts& a = report.artifacts[i];
        const std::string id = std::to_string(r.index);
        validation += id + "," + fixed4(r.mode_validation_accuracy);
        test += id + "," + fixed4(r.mode_test_accuracy);
        for (std::size_t m = 0; m < kAllMethods.size(); ++m) {
            validation += "," + fixed4(r.validation_accuracy[m]);
            test += "," + fixed4(r.test_accuracy[m]);
        }
        validation += "\n";
        test += "\n";
        topn += id;
        for (double v : r.top_n_accuracy) topn += "," + fixed4(v);
        topn += "\n";
        poll += id + "," + fixed4(r.mode_test_accuracy) + "," + fixed4(r.poll_validation_accuracy) + "," +
                fixed4(r.poll_perfect_accuracy) + "\n";
        for (std::size_t j = 0; j < a.test_job_ids.size(); ++j) {
            predictions += id + "," + a.test_job_ids[j] + "," + std::to_string(a.test_labels[j]) + "," +
                           std::to_string(r.mode_predictions[j]);
            for (std::size_t m = 0; m < kAllMethods.size(); ++m)
                predictions += "," + std::to_string(a.test_predictions[m][j]);
            predictions += "," + std::to_string(r.poll_validation_predictions[j]) + "," +
                           std::to_string(r.poll_perfect_predictions[j]) + "\n";
        }

        Json methods = Json::object();
        for (std::size_t m = 0; m < kAllMethods.size(); ++m) {
            Json entry = {{"validation_accuracy", r.validation_accuracy[m]}, {"test_accuracy", r.test_accuracy[m]}};
            if (!a.model_sets.empty()) entry["spec"] = to_json(a.model_sets.front().specs[m])["params"];
            methods[std::string(method_name(kAllMethods[m]))] = entry;
        }
        Json ranking = Json::array();
        const std::vector<Method> order_methods(kAllMethods.begin(), kAllMethods.end());
        for (std::size_t k : ranking_order(order_methods, r.validation_accuracy))
            ranking.push_back(std::string(method_name(kAllMethods[k])));
        segments.push_back({{"segment", r.index},
                            {"as_of", r.as_of},
                            {"test_jobs", a.test_job_ids.size()},
                            {"model_sets", r.model_sets},
                            {"mode_bin", a.model_sets.empty() ? 0 : a.model_sets.front().mode_bin},
                            {"mode", {{"validation_accuracy", r.mode_validation_accuracy},
                                      {"test_accuracy", r.mode_test_accuracy}}},
                            {"methods", methods},
                            {"validation_ranking", ranking},
                            {"poll_validation_accuracy", r.poll_validation_accuracy},
                            {"poll_perfect_accuracy", r.poll_perfect_accuracy},
                            {"top_n_accuracy", r.top_n_accuracy}});
    }
    const Json full = {{"top_n", report.top_n}, {"max_top_n", report.max_top_n}, {"segments", segments}};

    write_text(out_dir / "validation.csv", validation);
    write_text(out_dir / "test.csv", test);
    write_text(out_dir / "topn.csv", topn);
    write_text(out_dir / "poll.csv", poll);
    write_text(out_dir / "predictions.csv", predictions);
    write_text(out_dir / "report.json", full.dump(2) + "\n");
}

}  // namespace mempredict
