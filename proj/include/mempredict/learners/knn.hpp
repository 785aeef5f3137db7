#pragma once

#include <span>
#include <vector>

#include "mempredict/featurization.hpp"
#include "mempredict/learners/params.hpp"
#include "mempredict/learners/sparse.hpp"

namespace mempredict {

/// Stored training set for both kNN variants.
struct KnnModel {
    std::size_t width = 0;
    std::vector<SparseRow> rows;
    std::vector<int> labels;
    std::vector<double> memory_mib;
    int bin_size_mib = 512;
    int max_bin = 256;

    friend bool operator==(const KnnModel&, const KnnModel&) = default;
};

struct Neighbor {
    double squared_distance;
    std::size_t index;
};

KnnModel train_knn(const EncodedDataset& data);

/// The k closest training rows ordered by (squared distance, training index).
std::vector<Neighbor> nearest_neighbors(const KnnModel& model, std::span<const double> row, std::size_t k);

/// Majority label; a vote tie goes to the tied class whose nearest member is closest.
int knn_vote(const KnnModel& model, std::span<const Neighbor> neighbors);

/// Inverse-distance-weighted mean memory, weights 1 / (d + 1e-9).
double knn_regress(const KnnModel& model, std::span<const Neighbor> neighbors);

/// Bin containing `mem_mib` if it is in `classes` (sorted); otherwise the class
/// whose bin centre is nearest, ties to the lower bin.
int nearest_observed_bin(double mem_mib, std::span<const int> classes, int bin_size_mib, int max_bin);

}  // namespace mempredict
