#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mempredict/featurization.hpp"
#include "mempredict/learners/params.hpp"

namespace mempredict {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fully connected tanh network with a softmax output layer. Layer l maps
/// fan_in -> fan_out through weights[l] (fan_in x fan_out) and biases[l].
struct MlpNetwork {
    std::vector<RowMatrix> weights;
    std::vector<Eigen::RowVectorXd> biases;

    std::size_t input_width() const { return weights.empty() ? 0 : static_cast<std::size_t>(weights.front().rows()); }
    std::size_t output_width() const { return weights.empty() ? 0 : static_cast<std::size_t>(weights.back().cols()); }
    std::size_t parameter_count() const;

    /// Weights then biases per layer, row-major.
    std::vector<double> flatten() const;
    void assign(std::span<const double> flat);

    friend bool operator==(const MlpNetwork& a, const MlpNetwork& b) { return a.flatten() == b.flatten() && a.shapes() == b.shapes(); }

    std::vector<std::pair<std::size_t, std::size_t>> shapes() const;
};

/// Glorot-uniform initialisation.
MlpNetwork init_network(std::size_t inputs, std::span<const int> hidden, std::size_t outputs, std::uint64_t seed);

struct MlpGradient {
    std::vector<RowMatrix> weights;
    std::vector<Eigen::RowVectorXd> biases;
    double loss = 0.0;

    std::vector<double> flatten() const;
};

/// Mean cross-entropy over the batch plus alpha * sum of squared weights (biases unregularized).
double mlp_loss(const MlpNetwork& net, const RowMatrix& batch, std::span<const std::size_t> targets, double alpha);

/// Backpropagated gradient of mlp_loss with respect to every weight and bias.
MlpGradient mlp_gradient(const MlpNetwork& net, const RowMatrix& batch, std::span<const std::size_t> targets,
                         double alpha);

/// Softmax probabilities, one row per input row.
RowMatrix mlp_probabilities(const MlpNetwork& net, const RowMatrix& batch);

struct MlpModel {
    MlpNetwork network;

    friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

MlpModel train_mlp(const EncodedDataset& data, std::span<const int> classes, const MlpParams& params,
                   std::uint64_t seed);

/// Index into the training class list of the largest output (ties to the lowest).
std::size_t predict_class(const MlpModel& model, std::span<const double> row);

}  // namespace mempredict
