#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mempredict/pipeline.hpp"

namespace mempredict {

struct EvalConfig {
    std::size_t segments = 5;
    std::size_t segment_size = 5000;
    std::size_t warmup = 10000;
    std::size_t max_top_n = 7;  ///< the sweep covers n = 1..max_top_n
    bool strict_per_job = false;
    PipelineConfig pipeline;
    std::function<void(std::string_view)> log;  ///< optional progress sink

    std::size_t required_jobs() const { return warmup + segments * segment_size; }
    void validate() const;
};

using MethodScores = std::array<double, kAllMethods.size()>;  // indexed like kAllMethods

/// One trained model set as seen by the evaluation: what it was trained on and how it validated.
struct EvalModelSet {
    std::int64_t as_of = 0;
    std::vector<std::string> window_job_ids;
    MethodScores validation_accuracy{};
    double mode_validation_accuracy = 0.0;
    int mode_bin = 0;
    std::vector<LearnerSpec> specs;  ///< resolved, indexed like kAllMethods
};

/// Everything one segment produced; polls and sweeps are recomputed from these
/// cached predictions without retraining.
struct SegmentArtifacts {
    std::size_t index = 0;
    std::int64_t as_of = 0;
    std::vector<EvalModelSet> model_sets;  ///< one unless strict per-job retraining
    std::vector<std::string> test_job_ids;
    std::vector<int> test_labels;
    std::vector<std::size_t> test_model_set;  ///< which model set answered each job
    std::vector<std::vector<int>> test_predictions;  ///< [method][job]
};

struct SegmentResult {
    std::size_t index = 0;
    std::int64_t as_of = 0;
    std::size_t model_sets = 1;
    MethodScores validation_accuracy{};
    MethodScores test_accuracy{};
    double mode_validation_accuracy = 0.0;
    double mode_test_accuracy = 0.0;
    double poll_validation_accuracy = 0.0;
    double poll_perfect_accuracy = 0.0;
    std::vector<double> top_n_accuracy;  ///< n = 1..max_top_n
    std::vector<int> mode_predictions;
    std::vector<int> poll_validation_predictions;
    std::vector<int> poll_perfect_predictions;
};

struct EvaluationReport {
    std::size_t top_n = 4;
    std::size_t max_top_n = 7;
    std::vector<SegmentArtifacts> artifacts;
    std::vector<SegmentResult> segments;
};

/// Replays the trace segment by segment. Jobs are taken in (submit_time, job_id)
/// order; segment i starts after the warmup at job warmup + i * segment_size and
/// its models see only jobs that finished before the segment's first submission.
/// Throws TraceTooShort, MissingLabel.
EvaluationReport run_segmented_evaluation(std::span<const JobRecord> trace, const EvalConfig& config);

/// Poll predictions for every test job with validation ranking and weights.
std::vector<int> poll_with_validation_weights(const SegmentArtifacts& segment, std::size_t top_n);

/// Ranking and weights both come from the methods' test accuracy on the segment.
std::vector<int> poll_with_perfect_weights(const SegmentArtifacts& segment, std::size_t top_n);

/// accuracy[n - 1] for n = 1..max_n.
std::vector<double> top_n_sweep(const SegmentArtifacts& segment, std::size_t max_n);

MethodScores test_accuracies(const SegmentArtifacts& segment);

struct LeakageFinding {
    std::size_t segment;
    std::size_t model_set;
    std::string job_id;
    std::int64_t finish_time;
    std::int64_t as_of;
};

/// Window jobs that had not finished strictly before their model set's as_of,
/// or that the trace does not know.
std::vector<LeakageFinding> audit_leakage(std::span<const SegmentArtifacts> artifacts,
                                          std::span<const JobRecord> trace);

/// validation.csv, test.csv, topn.csv, poll.csv, report.json, predictions.csv.
/// Throws IoError.
void emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir);

}  // namespace mempredict
