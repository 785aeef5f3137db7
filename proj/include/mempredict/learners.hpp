#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "mempredict/featurization.hpp"
#include "mempredict/learners/forest.hpp"
#include "mempredict/learners/knn.hpp"
#include "mempredict/learners/mlp.hpp"
#include "mempredict/learners/params.hpp"
#include "mempredict/learners/svm.hpp"

namespace mempredict {

/// Predictor fitted on a single-class training set.
struct ConstantModel {
    int label = 0;
    friend bool operator==(const ConstantModel&, const ConstantModel&) = default;
};

using FittedParameters =
    std::variant<ConstantModel, LinearSvmModel, KernelSvmModel, ForestModel, MlpModel, KnnModel>;

struct TrainedModel {
    LearnerSpec spec;
    std::uint64_t seed = 0;
    std::vector<int> classes;  ///< bins seen in training, ascending
    std::size_t width = 0;
    Scaling scaling = Scaling::Normalized;
    FittedParameters fitted;

    friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// Fixed hyperparameters for svm-1, rforest, mlp-1, knn-1, knn-2; the first
/// grid candidate for svm-2 and mlp-2.
LearnerSpec default_spec(Method method);

/// Grid for svm-2 / mlp-2 in enumeration order; a single fixed spec otherwise.
std::vector<LearnerSpec> grid_candidates(Method method, const GridOptions& options);

struct GridResult {
    LearnerSpec best;
    std::size_t best_index = 0;
    std::vector<double> mean_accuracy;  ///< per candidate; empty when there was nothing to compare
};

/// k-fold (round-robin by row index) mean accuracy per candidate; the highest
/// wins and ties go to the earliest candidate.
GridResult cross_validate(std::span<const LearnerSpec> candidates, const EncodedDataset& data,
                          std::size_t folds, std::uint64_t seed);

LearnerSpec grid_search(Method method, const EncodedDataset& data, const GridOptions& options,
                        std::uint64_t seed);

/// grid_search for the searched methods, default_spec otherwise.
LearnerSpec resolve_spec(Method method, const EncodedDataset& data, const GridOptions& options,
                         std::uint64_t seed);

TrainedModel train(const LearnerSpec& spec, const EncodedDataset& data, std::uint64_t seed);

/// Throws WidthMismatch. Always returns one of model.classes.
int predict(const TrainedModel& model, std::span<const double> row);

}  // namespace mempredict
