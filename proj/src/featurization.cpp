#include "mempredict/featurization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include "mempredict/errors.hpp"

namespace mempredict {

namespace {

constexpr std::array<std::pair<CategoricalFeature, std::string_view>, 6> kCategoricalNames = {{
    {CategoricalFeature::User, "user"},
    {CategoricalFeature::Group, "group"},
    {CategoricalFeature::Queue, "queue"},
    {CategoricalFeature::Cwd, "cwd"},
    {CategoricalFeature::Resreq, "resreq"},
    {CategoricalFeature::Command, "command"},
}};

constexpr std::array<std::pair<NumericFeature, std::string_view>, 6> kNumericNames = {{
    {NumericFeature::Priority, "priority"},
    {NumericFeature::SubmitTime, "submit_time"},
    {NumericFeature::ReqTime, "req_time"},
    {NumericFeature::ReqProcs, "req_procs"},
    {NumericFeature::Weekday, "weekday"},
    {NumericFeature::TimeSinceMidnight, "time_since_midnight"},
}};

const std::string& category_of(const JobRecord& job, CategoricalFeature f) {
    switch (f) {
        case CategoricalFeature::User: return job.user;
        case CategoricalFeature::Group: return job.group;
        case CategoricalFeature::Queue: return job.queue;
        case CategoricalFeature::Cwd: return job.cwd;
        case CategoricalFeature::Resreq: return job.resreq;
        case CategoricalFeature::Command: return job.command;
    }
    return job.user;
}

}  // namespace

std::string_view feature_name(CategoricalFeature f) {
    for (const auto& [feature, name] : kCategoricalNames)
        if (feature == f) return name;
    return "?";
}

std::string_view feature_name(NumericFeature f) {
    for (const auto& [feature, name] : kNumericNames)
        if (feature == f) return name;
    return "?";
}

std::optional<CategoricalFeature> parse_categorical(std::string_view name) {
    for (const auto& [feature, n] : kCategoricalNames)
        if (n == name) return feature;
    return std::nullopt;
}

std::optional<NumericFeature> parse_numeric(std::string_view name) {
    for (const auto& [feature, n] : kNumericNames)
        if (n == name) return feature;
    return std::nullopt;
}

FeatureSelection FeatureSelection::all() {
    FeatureSelection s;
    for (const auto& [feature, name] : kCategoricalNames) s.categorical.push_back(feature);
    for (const auto& [feature, name] : kNumericNames) s.numeric.push_back(feature);
    return s;
}

void FeatureSelection::validate() const {
    if (categorical.empty() && numeric.empty()) throw InvalidConfig("feature selection is empty");
    std::set<CategoricalFeature> cats(categorical.begin(), categorical.end());
    std::set<NumericFeature> nums(numeric.begin(), numeric.end());
    if (cats.size() != categorical.size() || nums.size() != numeric.size())
        throw InvalidConfig("feature selection repeats a feature");
}

CategoryMap::CategoryMap(CategoricalFeature feature, std::vector<std::string> kept,
                         std::vector<std::pair<std::string, std::size_t>> frequencies)
    : feature_(feature), kept_(std::move(kept)), frequencies_(std::move(frequencies)) {
    for (std::size_t i = 0; i < kept_.size(); ++i) ids_.emplace(kept_[i], i);
}

std::size_t CategoryMap::id(std::string_view category) const {
    auto it = ids_.find(std::string(category));
    return it == ids_.end() ? other_id() : it->second;
}

FeatureDictionary build_dictionary(std::span<const JobRecord> training_jobs,
                                   const FeatureSelection& selection, std::size_t cardinality_cap) {
    if (training_jobs.empty()) throw EmptyTrainingSet();
    FeatureDictionary dict;
    for (CategoricalFeature f : selection.categorical) {
        std::map<std::string, std::size_t> counts;
        for (const auto& job : training_jobs) ++counts[category_of(job, f)];
        std::vector<std::pair<std::string, std::size_t>> freq(counts.begin(), counts.end());
        std::vector<std::pair<std::string, std::size_t>> ranked = freq;
        // Most frequent first, ties by category string.
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        std::vector<std::string> kept;
        for (std::size_t i = 0; i < ranked.size() && i < cardinality_cap; ++i) kept.push_back(ranked[i].first);
        dict.maps.emplace_back(f, std::move(kept), std::move(freq));
    }
    return dict;
}

std::vector<std::string> column_layout(const FeatureSelection& selection,
                                       const FeatureDictionary& dictionary) {
    std::vector<std::string> layout;
    for (const auto& map : dictionary.maps) {
        const std::string prefix(feature_name(map.feature()));
        for (const auto& category : map.categories()) layout.push_back(prefix + "=" + category);
        layout.push_back(prefix + "=#OTHER");
    }
    for (NumericFeature f : selection.numeric) layout.emplace_back(feature_name(f));
    return layout;
}

double numeric_value(const JobRecord& job, NumericFeature feature) {
    switch (feature) {
        case NumericFeature::Priority: return static_cast<double>(job.priority);
        case NumericFeature::SubmitTime: return static_cast<double>(job.submit_time);
        case NumericFeature::ReqTime: return static_cast<double>(job.req_time);
        case NumericFeature::ReqProcs: return static_cast<double>(job.req_procs);
        case NumericFeature::Weekday: return derive_calendar_features(job.submit_time).weekday;
        case NumericFeature::TimeSinceMidnight:
            return derive_calendar_features(job.submit_time).seconds_since_midnight;
    }
    return 0.0;
}

EncoderSnapshot fit_encoder(std::span<const JobRecord> training_jobs, const FeatureSelection& selection,
                            const EncoderConfig& config) {
    selection.validate();
    if (training_jobs.empty()) throw EmptyTrainingSet();
    for (const auto& job : training_jobs)
        if (!job.max_mem_mib) throw MissingLabel(job.job_id);

    EncoderSnapshot snap;
    snap.selection = selection;
    snap.dictionary = build_dictionary(training_jobs, selection, config.cardinality_cap);
    snap.bin_size_mib = config.bin_size_mib;
    snap.max_bin = config.max_bin;
    const double n = static_cast<double>(training_jobs.size());
    for (NumericFeature f : selection.numeric) {
        double sum = 0.0;
        for (const auto& job : training_jobs) sum += numeric_value(job, f);
        const double mean = sum / n;
        double sq = 0.0;
        for (const auto& job : training_jobs) {
            const double d = numeric_value(job, f) - mean;
            sq += d * d;
        }
        snap.numeric.push_back({f, mean, std::sqrt(sq / n)});
    }
    snap.column_layout = column_layout(selection, snap.dictionary);
    return snap;
}

std::vector<double> encode_job(const JobRecord& job, const EncoderSnapshot& snapshot, Scaling scaling) {
    std::vector<double> row(snapshot.width(), 0.0);
    std::size_t offset = 0;
    for (const auto& map : snapshot.dictionary.maps) {
        row[offset + map.id(category_of(job, map.feature()))] = 1.0;
        offset += map.cardinality() + 1;
    }
    for (const auto& stats : snapshot.numeric) {
        const double x = numeric_value(job, stats.feature);
        if (scaling == Scaling::Raw)
            row[offset] = x;
        else
            row[offset] = stats.stddev == 0.0 ? 0.0 : (x - stats.mean) / stats.stddev;
        ++offset;
    }
    return row;
}

void FeatureMatrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw WidthMismatch(cols_, values.size());
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

EncodedDataset EncodedDataset::subset(std::span<const std::size_t> indices) const {
    EncodedDataset out;
    out.features = FeatureMatrix(0, width());
    out.scaling = scaling;
    out.bin_size_mib = bin_size_mib;
    out.max_bin = max_bin;
    for (std::size_t i : indices) {
        out.features.append_row(features.row(i));
        out.labels.push_back(labels[i]);
        out.memory_mib.push_back(memory_mib[i]);
        out.job_ids.push_back(job_ids[i]);
    }
    return out;
}

EncodedDataset encode_dataset(std::span<const JobRecord> jobs, const EncoderSnapshot& snapshot,
                              Scaling scaling) {
    EncodedDataset ds;
    ds.features = FeatureMatrix(0, snapshot.width());
    ds.scaling = scaling;
    ds.bin_size_mib = snapshot.bin_size_mib;
    ds.max_bin = snapshot.max_bin;
    for (const auto& job : jobs) {
        if (!job.max_mem_mib) throw MissingLabel(job.job_id);
        ds.features.append_row(encode_job(job, snapshot, scaling));
        ds.labels.push_back(memory_to_bin(*job.max_mem_mib, snapshot.bin_size_mib, snapshot.max_bin));
        ds.memory_mib.push_back(*job.max_mem_mib);
        ds.job_ids.push_back(job.job_id);
    }
    return ds;
}

int memory_to_bin(double mem_mib, int bin_size_mib, int max_bin) {
    const double bin = std::floor(mem_mib / bin_size_mib);
    if (bin >= static_cast<double>(max_bin)) return max_bin;
    return bin < 0.0 ? 0 : static_cast<int>(bin);
}

double bin_to_request_mib(int bin, int bin_size_mib) {
    return (static_cast<double>(bin) + 1.0) * bin_size_mib;
}

}  // namespace mempredict
