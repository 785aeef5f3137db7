#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mempredict/workload.hpp"

namespace mempredict {

enum class CategoricalFeature { User, Group, Queue, Cwd, Resreq, Command };
enum class NumericFeature { Priority, SubmitTime, ReqTime, ReqProcs, Weekday, TimeSinceMidnight };

std::string_view feature_name(CategoricalFeature f);
std::string_view feature_name(NumericFeature f);
std::optional<CategoricalFeature> parse_categorical(std::string_view name);
std::optional<NumericFeature> parse_numeric(std::string_view name);

/// Which job attributes feed the learners for one label.
struct FeatureSelection {
    std::string label_name = "max_mem";
    std::vector<CategoricalFeature> categorical;
    std::vector<NumericFeature> numeric;

    /// All twelve features.
    static FeatureSelection all();

    /// Throws InvalidConfig when empty or when a feature repeats.
    void validate() const;

    friend bool operator==(const FeatureSelection&, const FeatureSelection&) = default;
};

/// Dense ids for the most frequent categories of one feature; everything
/// else shares the OTHER id, which equals the number of kept categories.
class CategoryMap {
public:
    CategoryMap() = default;
    CategoryMap(CategoricalFeature feature, std::vector<std::string> kept,
                std::vector<std::pair<std::string, std::size_t>> frequencies);

    CategoricalFeature feature() const { return feature_; }
    std::size_t cardinality() const { return kept_.size(); }
    std::size_t other_id() const { return kept_.size(); }
    std::size_t id(std::string_view category) const;
    const std::vector<std::string>& categories() const { return kept_; }
    const std::vector<std::pair<std::string, std::size_t>>& frequencies() const { return frequencies_; }

    friend bool operator==(const CategoryMap& a, const CategoryMap& b) {
        return a.feature_ == b.feature_ && a.kept_ == b.kept_ && a.frequencies_ == b.frequencies_;
    }

private:
    CategoricalFeature feature_ = CategoricalFeature::User;
    std::vector<std::string> kept_;
    std::vector<std::pair<std::string, std::size_t>> frequencies_;  // sorted by category
    std::unordered_map<std::string, std::size_t> ids_;
};

struct FeatureDictionary {
    std::vector<CategoryMap> maps;  ///< one per selected categorical, selection order

    friend bool operator==(const FeatureDictionary&, const FeatureDictionary&) = default;
};

inline constexpr std::size_t kDefaultCardinalityCap = 1024;

FeatureDictionary build_dictionary(std::span<const JobRecord> training_jobs,
                                   const FeatureSelection& selection,
                                   std::size_t cardinality_cap = kDefaultCardinalityCap);

struct NumericStats {
    NumericFeature feature;
    double mean = 0.0;
    double stddev = 0.0;  ///< population; 0 marks a constant column

    friend bool operator==(const NumericStats&, const NumericStats&) = default;
};

struct EncoderConfig {
    int bin_size_mib = 512;
    int max_bin = 256;
    std::size_t cardinality_cap = kDefaultCardinalityCap;
};

/// Everything needed to encode future jobs exactly like the training window.
struct EncoderSnapshot {
    FeatureSelection selection;
    FeatureDictionary dictionary;
    std::vector<NumericStats> numeric;
    std::vector<std::string> column_layout;
    int bin_size_mib = 512;
    int max_bin = 256;

    std::size_t width() const { return column_layout.size(); }

    friend bool operator==(const EncoderSnapshot&, const EncoderSnapshot&) = default;
};

std::vector<std::string> column_layout(const FeatureSelection& selection,
                                       const FeatureDictionary& dictionary);

EncoderSnapshot fit_encoder(std::span<const JobRecord> training_jobs,
                            const FeatureSelection& selection, const EncoderConfig& config = {});

/// Normalized rows feed every learner except the forest, which splits on raw values.
enum class Scaling { Normalized, Raw };

double numeric_value(const JobRecord& job, NumericFeature feature);

std::vector<double> encode_job(const JobRecord& job, const EncoderSnapshot& snapshot,
                               Scaling scaling = Scaling::Normalized);

/// Row-major dense matrix of encoded jobs.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const std::vector<double>& data() const { return data_; }

    void append_row(std::span<const double> values);

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct EncodedDataset {
    FeatureMatrix features;
    std::vector<int> labels;          ///< memory bins
    std::vector<double> memory_mib;   ///< raw labels, used by regression-style kNN
    std::vector<std::string> job_ids;
    Scaling scaling = Scaling::Normalized;
    int bin_size_mib = 512;
    int max_bin = 256;

    std::size_t size() const { return labels.size(); }
    std::size_t width() const { return features.cols(); }

    /// Rows at `indices`, in that order.
    EncodedDataset subset(std::span<const std::size_t> indices) const;
};

EncodedDataset encode_dataset(std::span<const JobRecord> jobs, const EncoderSnapshot& snapshot,
                              Scaling scaling = Scaling::Normalized);

/// Half-open bins [k*size, (k+1)*size), clamped to max_bin.
int memory_to_bin(double mem_mib, int bin_size_mib, int max_bin);

/// Upper edge of the bin: a request of this size covers any usage in it.
double bin_to_request_mib(int bin, int bin_size_mib);

}  // namespace mempredict
