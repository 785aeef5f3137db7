#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "mempredict/ensemble.hpp"
#include "mempredict/featurization.hpp"
#include "mempredict/learners.hpp"
#include "mempredict/workload.hpp"

namespace mempredict {

struct PipelineConfig {
    std::size_t window_size = 10000;
    std::size_t train_size = 9000;
    std::size_t valid_size = 1000;
    std::size_t retrain_every = 5000;
    int bin_size_mib = 512;
    int max_bin = 256;
    std::size_t top_n = 4;
    std::uint64_t seed = 0;
    GridProfile grid_profile = GridProfile::Full;
    bool enable_lbfgs = false;
    FeatureSelection features = FeatureSelection::all();
    int default_bin = 1;

    /// Throws InvalidConfig.
    void validate() const;

    EncoderConfig encoder_config() const { return {bin_size_mib, max_bin, kDefaultCardinalityCap}; }
    GridOptions grid_options() const { return {grid_profile, enable_lbfgs, 3}; }

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

inline constexpr int kModelSetSchemaVersion = 1;

/// Seven models trained on one window split, plus what is needed to answer queries.
struct ModelSet {
    int schema_version = kModelSetSchemaVersion;
    PipelineConfig config;
    EncoderSnapshot encoder;
    RankedModels ranked;
    int mode_bin = 0;
    std::int64_t created_at = 0;  ///< the training instant (as_of), not wall-clock
    std::size_t finished_consumed = 0;
    std::vector<std::string> window_job_ids;  ///< train then validation, oldest first
};

/// Newest `window_size` jobs with finish_time < as_of, oldest first.
/// `finished` must be sorted by (finish_time, job_id).
std::vector<JobRecord> assemble_window(std::span<const JobRecord> finished, std::size_t window_size,
                                       std::int64_t as_of);

struct WindowSplit {
    std::vector<JobRecord> train;
    std::vector<JobRecord> validation;
};

/// Oldest train_size for training, newest valid_size for validation.
/// Throws ShortWindow unless the window is exactly full.
WindowSplit split_window(std::span<const JobRecord> window, const PipelineConfig& config);

/// Newest valid_size jobs validate and everything older trains, for windows
/// that may be short of window_size. Throws ShortWindow when nothing is left to train on.
WindowSplit split_available(std::span<const JobRecord> window, const PipelineConfig& config);

/// Fits the encoder on the training split, trains and ranks all seven methods.
ModelSet train_model_set(std::span<const JobRecord> train, std::span<const JobRecord> validation,
                         const PipelineConfig& config, std::int64_t as_of, std::size_t finished_consumed);

QueryRows encode_query(const JobRecord& job, const EncoderSnapshot& encoder);

enum class Tier { Model, Mode, Default };
std::string_view tier_name(Tier t);

struct Prediction {
    int bin = 0;
    double request_mib = 0.0;
    Tier tier = Tier::Default;
    std::vector<VoterBreakdown> voters;
};

Prediction predict_with_models(const ModelSet& set, const JobRecord& job);

/// Sliding-window state: finished jobs, the retrain counter, and the current
/// model snapshot. Ingestion and retraining are serialized; predictions read
/// an immutable snapshot and never wait on training.
class Pipeline {
public:
    using TrainFn = std::function<ModelSet(std::span<const JobRecord> train, std::span<const JobRecord> validation,
                                           const PipelineConfig& config, std::int64_t as_of,
                                           std::size_t finished_consumed)>;

    explicit Pipeline(PipelineConfig config, TrainFn trainer = train_model_set);

    /// Records a finished job. Throws MissingLabel for unfinished jobs.
    void observe_finished(JobRecord job);

    std::vector<JobRecord> assemble_window(std::int64_t as_of) const;

    struct RetrainOutcome {
        bool retrained = false;
        std::shared_ptr<const ModelSet> set;
    };

    /// Trains when a full window exists and either no model exists yet or at
    /// least retrain_every jobs finished since the last training.
    RetrainOutcome retrain_if_due(std::int64_t as_of);

    Prediction predict_job(const JobRecord& job) const;

    std::shared_ptr<const ModelSet> current() const;
    void install(std::shared_ptr<const ModelSet> set);

    std::size_t finished_since_last_train() const;
    std::size_t finished_total() const;
    const PipelineConfig& config() const { return config_; }

private:
    PipelineConfig config_;
    TrainFn trainer_;

    mutable std::mutex state_mutex_;
    std::vector<JobRecord> finished_;  // sorted by (finish_time, job_id)
    std::map<int, std::size_t> bin_counts_;
    std::size_t since_last_train_ = 0;

    std::mutex train_mutex_;

    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const ModelSet> current_;
};

}  // namespace mempredict
