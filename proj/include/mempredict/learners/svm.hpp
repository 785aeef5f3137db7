#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mempredict/featurization.hpp"
#include "mempredict/learners/params.hpp"
#include "mempredict/learners/sparse.hpp"

namespace mempredict {

/// exp(-gamma * |x - y|^2). Throws WidthMismatch.
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

/// One-vs-all linear SVM; row c of `weights` scores classes[c], with the
/// bias in the last column.
struct LinearSvmModel {
    std::size_t width = 0;
    std::vector<double> weights;  // classes x (width + 1)

    friend bool operator==(const LinearSvmModel&, const LinearSvmModel&) = default;
};

struct KernelSvmModel {
    std::size_t width = 0;
    double gamma = 0.0;
    double scale = 1.0;  ///< 1 / (lambda * T)
    std::vector<SparseRow> support;
    std::vector<double> coefficients;  // support x classes, signed alpha

    friend bool operator==(const KernelSvmModel&, const KernelSvmModel&) = default;
};

/// Primal Pegasos on the L2-regularized hinge loss, lambda = 1 / (C n).
LinearSvmModel train_linear_svm(const EncodedDataset& data, std::span<const int> classes,
                                const SvmParams& params, std::uint64_t seed);

/// Kernelized Pegasos with one shared support set capped at params.support_cap;
/// on overflow the vector with the smallest total |alpha| is dropped.
KernelSvmModel train_kernel_svm(const EncodedDataset& data, std::span<const int> classes,
                                const SvmParams& params, std::uint64_t seed);

/// Per-class decision values.
std::vector<double> decision_values(const LinearSvmModel& model, std::size_t n_classes,
                                    std::span<const double> row);
std::vector<double> decision_values(const KernelSvmModel& model, std::size_t n_classes,
                                    std::span<const double> row);

}  // namespace mempredict
