#include "mempredict/pipeline.hpp"

#include <algorithm>
#include <tuple>

#include "mempredict/errors.hpp"
#include "mempredict/parallel.hpp"
#include "mempredict/random.hpp"

namespace mempredict {

namespace {

bool finish_order(const JobRecord& a, const JobRecord& b) {
    return std::tie(*a.finish_time, a.job_id) < std::tie(*b.finish_time, b.job_id);
}

}  // namespace

void PipelineConfig::validate() const {
    if (window_size == 0 || train_size == 0 || valid_size == 0 || retrain_every == 0)
        throw InvalidConfig("window_size, train_size, valid_size and retrain_every must be positive");
    if (train_size + valid_size != window_size)
        throw InvalidConfig("train_size + valid_size must equal window_size");
    if (bin_size_mib <= 0) throw InvalidConfig("bin_size_mib must be positive");
    if (max_bin < 0) throw InvalidConfig("max_bin must be non-negative");
    if (top_n < 1 || top_n > kAllMethods.size()) throw InvalidConfig("top_n must lie in [1, 7]");
    if (default_bin < 0 || default_bin > max_bin) throw InvalidConfig("default_bin must lie in [0, max_bin]");
    features.validate();
}

std::vector<JobRecord> assemble_window(std::span<const JobRecord> finished, std::size_t window_size,
                                       std::int64_t as_of) {
    const auto end = std::partition_point(finished.begin(), finished.end(),
                                          [&](const JobRecord& j) { return *j.finish_time < as_of; });
    const auto available = static_cast<std::size_t>(end - finished.begin());
    const auto begin = end - static_cast<std::ptrdiff_t>(std::min(available, window_size));
    return {begin, end};
}

WindowSplit split_window(std::span<const JobRecord> window, const PipelineConfig& config) {
    if (window.size() != config.window_size) throw ShortWindow(window.size(), config.window_size);
    return {{window.begin(), window.begin() + static_cast<std::ptrdiff_t>(config.train_size)},
            {window.begin() + static_cast<std::ptrdiff_t>(config.train_size), window.end()}};
}

WindowSplit split_available(std::span<const JobRecord> window, const PipelineConfig& config) {
    if (window.size() <= config.valid_size) throw ShortWindow(window.size(), config.valid_size + 1);
    const auto cut = window.begin() + static_cast<std::ptrdiff_t>(window.size() - config.valid_size);
    return {{window.begin(), cut}, {cut, window.end()}};
}

ModelSet train_model_set(std::span<const JobRecord> train_jobs, std::span<const JobRecord> validation,
                         const PipelineConfig& config, std::int64_t as_of, std::size_t finished_consumed) {
    config.validate();
    if (validation.empty()) throw EmptyInput();
    ModelSet set;
    set.config = config;
    set.encoder = fit_encoder(train_jobs, config.features, config.encoder_config());
    set.created_at = as_of;
    set.finished_consumed = finished_consumed;
    for (const auto& j : train_jobs) set.window_job_ids.push_back(j.job_id);
    for (const auto& j : validation) set.window_job_ids.push_back(j.job_id);

    const EncodedDataset train_norm = encode_dataset(train_jobs, set.encoder, Scaling::Normalized);
    const EncodedDataset train_raw = encode_dataset(train_jobs, set.encoder, Scaling::Raw);
    const EncodedDataset valid_norm = encode_dataset(validation, set.encoder, Scaling::Normalized);
    const EncodedDataset valid_raw = encode_dataset(validation, set.encoder, Scaling::Raw);
    set.mode_bin = mode_baseline(train_norm.labels);

    std::vector<ScoredModel> scored(kAllMethods.size());
    parallel_for(kAllMethods.size(), [&](std::size_t m) {
        const Method method = kAllMethods[m];
        const bool raw = preferred_scaling(method) == Scaling::Raw;
        const EncodedDataset& data = raw ? train_raw : train_norm;
        const EncodedDataset& valid = raw ? valid_raw : valid_norm;
        const std::uint64_t seed = derive_seed(config.seed, m);
        const LearnerSpec spec = resolve_spec(method, data, config.grid_options(), seed);
        auto model = std::make_shared<const TrainedModel>(train(spec, data, seed));
        std::vector<int> predictions(valid.size());
        for (std::size_t i = 0; i < valid.size(); ++i) predictions[i] = predict(*model, valid.features.row(i));
        scored[m] = {method, std::move(model), std::move(predictions)};
    });
    set.ranked = rank_models(std::move(scored), valid_norm.labels);
    return set;
}

QueryRows encode_query(const JobRecord& job, const EncoderSnapshot& encoder) {
    return {encode_job(job, encoder, Scaling::Normalized), encode_job(job, encoder, Scaling::Raw)};
}

std::string_view tier_name(Tier t) {
    switch (t) {
        case Tier::Model: return "model";
        case Tier::Mode: return "mode";
        case Tier::Default: return "default";
    }
    return "default";
}

Prediction predict_with_models(const ModelSet& set, const JobRecord& job) {
    const PollOutcome outcome =
        weighted_poll_explained(set.ranked, PollConfig{set.config.top_n}, encode_query(job, set.encoder));
    return {outcome.bin, bin_to_request_mib(outcome.bin, set.encoder.bin_size_mib), Tier::Model, outcome.voters};
}

Pipeline::Pipeline(PipelineConfig config, TrainFn trainer)
    : config_(std::move(config)), trainer_(std::move(trainer)) {
    config_.validate();
}

void Pipeline::observe_finished(JobRecord job) {
    validate(job);
    if (!job.finished()) throw MissingLabel(job.job_id);
    const int bin = memory_to_bin(*job.max_mem_mib, config_.bin_size_mib, config_.max_bin);
    std::lock_guard lock(state_mutex_);
    const auto pos = std::upper_bound(finished_.begin(), finished_.end(), job, finish_order);
    finished_.insert(pos, std::move(job));
    ++bin_counts_[bin];
    ++since_last_train_;
}

std::vector<JobRecord> Pipeline::assemble_window(std::int64_t as_of) const {
    std::lock_guard lock(state_mutex_);
    return mempredict::assemble_window(finished_, config_.window_size, as_of);
}

Pipeline::RetrainOutcome Pipeline::retrain_if_due(std::int64_t as_of) {
    std::unique_lock train_lock(train_mutex_, std::try_to_lock);
    if (!train_lock.owns_lock()) return {false, current()};

    std::vector<JobRecord> window;
    std::size_t counted = 0;
    std::size_t consumed = 0;
    {
        std::lock_guard lock(state_mutex_);
        const bool has_model = current() != nullptr;
        if (has_model && since_last_train_ < config_.retrain_every) return {false, current()};
        window = mempredict::assemble_window(finished_, config_.window_size, as_of);
        if (window.size() < config_.window_size) return {false, current()};
        counted = since_last_train_;
        consumed = finished_.size();
    }

    const WindowSplit split = split_window(window, config_);
    auto set = std::make_shared<const ModelSet>(trainer_(split.train, split.validation, config_, as_of, consumed));
    install(set);
    {
        // Jobs that finished while training ran count toward the next retrain.
        std::lock_guard lock(state_mutex_);
        since_last_train_ -= std::min(counted, since_last_train_);
    }
    return {true, set};
}

Prediction Pipeline::predict_job(const JobRecord& job) const {
    if (auto set = current()) return predict_with_models(*set, job);
    std::lock_guard lock(state_mutex_);
    if (bin_counts_.empty())
        return {config_.default_bin, bin_to_request_mib(config_.default_bin, config_.bin_size_mib), Tier::Default, {}};
    auto best = bin_counts_.begin();
    for (auto it = bin_counts_.begin(); it != bin_counts_.end(); ++it)
        if (it->second > best->second) best = it;
    return {best->first, bin_to_request_mib(best->first, config_.bin_size_mib), Tier::Mode, {}};
}

std::shared_ptr<const ModelSet> Pipeline::current() const {
    std::lock_guard lock(snapshot_mutex_);
    return current_;
}

void Pipeline::install(std::shared_ptr<const ModelSet> set) {
    std::lock_guard lock(snapshot_mutex_);
    current_ = std::move(set);
}

std::size_t Pipeline::finished_since_last_train() const {
    std::lock_guard lock(state_mutex_);
    return since_last_train_;
}

std::size_t Pipeline::finished_total() const {
    std::lock_guard lock(state_mutex_);
    return finished_.size();
}

}  // namespace mempredict
