#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mempredict/featurization.hpp"
#include "mempredict/learners/params.hpp"

namespace mempredict {

/// Shannon entropy in bits of a label histogram; 0 log 0 is 0.
double entropy_bits(std::span<const std::size_t> counts);

/// H(parent) - sum |part|/|parent| H(part). Throws NotAPartition unless the
/// partitions' multiset union equals the parent.
double information_gain(std::span<const int> parent, std::span<const std::vector<int>> partitions);

/// Flat binary tree; a node with feature < 0 is a leaf.
struct DecisionTree {
    struct Node {
        int feature = -1;
        double threshold = 0.0;  ///< x <= threshold goes left
        int left = -1;
        int right = -1;
        int label = 0;

        friend bool operator==(const Node&, const Node&) = default;
    };
    std::vector<Node> nodes;

    int predict(std::span<const double> row) const;
    std::size_t depth() const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestModel {
    std::size_t width = 0;
    std::vector<DecisionTree> trees;

    friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

/// Grows one information-gain tree on the rows in `sample` (repeats allowed).
DecisionTree grow_tree(const EncodedDataset& data, std::span<const std::size_t> sample,
                       const ForestParams& params, std::uint64_t tree_seed);

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index);

ForestModel train_forest(const EncodedDataset& data, const ForestParams& params, std::uint64_t seed);

/// Majority over trees, ties to the lowest bin.
int predict_forest(const ForestModel& model, std::span<const double> row);

}  // namespace mempredict
