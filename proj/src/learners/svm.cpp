#include "mempredict/learners/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mempredict/errors.hpp"
#include "mempredict/random.hpp"

namespace mempredict {

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    if (x.size() != y.size()) throw WidthMismatch(x.size(), y.size());
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double t = x[j] - y[j];
        d2 += t * t;
    }
    return std::exp(-gamma * d2);
}

namespace {

std::size_t class_index(std::span<const int> classes, int label) {
    return static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
}

std::vector<SparseRow> sparse_rows(const EncodedDataset& data) {
    std::vector<SparseRow> rows;
    rows.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) rows.push_back(to_sparse(data.features.row(i)));
    return rows;
}

}  // namespace

LinearSvmModel train_linear_svm(const EncodedDataset& data, std::span<const int> classes,
                                const SvmParams& params, std::uint64_t seed) {
    const std::size_t n = data.size();
    const std::size_t width = data.width();
    const std::size_t stride = width + 1;
    const std::size_t n_classes = classes.size();
    if (n == 0) throw EmptyTrainingSet();

    const double lambda = 1.0 / (params.C * static_cast<double>(n));
    const double radius2 = 1.0 / lambda;
    const auto rows = sparse_rows(data);
    std::vector<std::size_t> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = class_index(classes, data.labels[i]);

    // w_c = scale_c * v_c keeps the per-step shrink O(1).
    std::vector<double> v(n_classes * stride, 0.0);
    std::vector<double> scale(n_classes, 1.0);
    std::vector<double> norm2(n_classes, 0.0);  // |v_c|^2

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t t = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const SparseRow& x = rows[i];
            const double x_norm2 = squared_norm(x) + 1.0;
            for (std::size_t c = 0; c < n_classes; ++c) {
                double* vc = v.data() + c * stride;
                double margin = vc[width];
                for (std::size_t k = 0; k < x.nnz(); ++k) margin += vc[x.index[k]] * x.value[k];
                margin *= scale[c];
                const double y = targets[i] == c ? 1.0 : -1.0;

                if (t == 1) {
                    std::fill(vc, vc + stride, 0.0);
                    scale[c] = 1.0;
                    norm2[c] = 0.0;
                } else {
                    scale[c] *= 1.0 - 1.0 / static_cast<double>(t);
                }
                if (y * margin < 1.0) {
                    const double a = eta * y / scale[c];
                    double vx = vc[width];
                    for (std::size_t k = 0; k < x.nnz(); ++k) vx += vc[x.index[k]] * x.value[k];
                    norm2[c] += 2.0 * a * vx + a * a * x_norm2;
                    for (std::size_t k = 0; k < x.nnz(); ++k) vc[x.index[k]] += a * x.value[k];
                    vc[width] += a;
                }
                const double w2 = scale[c] * scale[c] * norm2[c];
                if (w2 > radius2) scale[c] *= std::sqrt(radius2 / w2);
                if (scale[c] < 1e-150) {
                    for (std::size_t j = 0; j < stride; ++j) vc[j] *= scale[c];
                    norm2[c] *= scale[c] * scale[c];
                    scale[c] = 1.0;
                }
            }
        }
    }

    LinearSvmModel model;
    model.width = width;
    model.weights.resize(n_classes * stride);
    for (std::size_t c = 0; c < n_classes; ++c)
        for (std::size_t j = 0; j < stride; ++j) model.weights[c * stride + j] = scale[c] * v[c * stride + j];
    return model;
}

std::vector<double> decision_values(const LinearSvmModel& model, std::size_t n_classes,
                                    std::span<const double> row) {
    if (row.size() != model.width) throw WidthMismatch(model.width, row.size());
    const std::size_t stride = model.width + 1;
    std::vector<double> out(n_classes, 0.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double* w = model.weights.data() + c * stride;
        double s = w[model.width];
        for (std::size_t j = 0; j < model.width; ++j)
            if (row[j] != 0.0) s += w[j] * row[j];
        out[c] = s;
    }
    return out;
}

KernelSvmModel train_kernel_svm(const EncodedDataset& data, std::span<const int> classes,
                                const SvmParams& params, std::uint64_t seed) {
    const std::size_t n = data.size();
    const std::size_t n_classes = classes.size();
    if (n == 0) throw EmptyTrainingSet();
    const double lambda = 1.0 / (params.C * static_cast<double>(n));
    const std::size_t cap = std::max<std::size_t>(1, params.support_cap);

    const auto rows = sparse_rows(data);
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) norms[i] = squared_norm(rows[i]);
    std::vector<std::size_t> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = class_index(classes, data.labels[i]);

    std::vector<std::size_t> support;        // sample index per slot
    std::vector<double> beta;                // slot x class
    std::vector<std::ptrdiff_t> slot_of(n, -1);
    std::vector<double> scratch(data.width(), 0.0);
    std::vector<double> dec(n_classes);
    std::vector<double> kvals;

    Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t t = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t i : order) {
            ++t;
            const SparseRow& x = rows[i];
            for (std::size_t k = 0; k < x.nnz(); ++k) scratch[x.index[k]] = x.value[k];
            std::fill(dec.begin(), dec.end(), 0.0);
            for (std::size_t s = 0; s < support.size(); ++s) {
                const std::size_t j = support[s];
                const double d2 = std::max(0.0, norms[i] + norms[j] - 2.0 * dot(rows[j], scratch));
                const double kv = std::exp(-params.gamma * d2);
                const double* b = beta.data() + s * n_classes;
                for (std::size_t c = 0; c < n_classes; ++c) dec[c] += b[c] * kv;
            }
            for (std::size_t k = 0; k < x.nnz(); ++k) scratch[x.index[k]] = 0.0;

            const double inv = 1.0 / (lambda * static_cast<double>(t));
            bool violated = false;
            for (std::size_t c = 0; c < n_classes; ++c) {
                const double y = targets[i] == c ? 1.0 : -1.0;
                if (y * dec[c] * inv < 1.0) {
                    violated = true;
                    dec[c] = y;  // reuse as the update
                } else {
                    dec[c] = 0.0;
                }
            }
            if (!violated) continue;

            if (slot_of[i] < 0) {
                if (support.size() == cap) {
                    // Drop the smallest total |alpha|; ties go to the lowest sample index.
                    std::size_t victim = 0;
                    double best = -1.0;
                    for (std::size_t s = 0; s < support.size(); ++s) {
                        double mass = 0.0;
                        for (std::size_t c = 0; c < n_classes; ++c) mass += std::abs(beta[s * n_classes + c]);
                        if (best < 0.0 || mass < best || (mass == best && support[s] < support[victim])) {
                            best = mass;
                            victim = s;
                        }
                    }
                    const std::size_t last = support.size() - 1;
                    slot_of[support[victim]] = -1;
                    if (victim != last) {
                        support[victim] = support[last];
                        slot_of[support[victim]] = static_cast<std::ptrdiff_t>(victim);
                        std::copy_n(beta.begin() + last * n_classes, n_classes, beta.begin() + victim * n_classes);
                    }
                    support.pop_back();
                    beta.resize(support.size() * n_classes);
                }
                slot_of[i] = static_cast<std::ptrdiff_t>(support.size());
                support.push_back(i);
                beta.resize(support.size() * n_classes, 0.0);
            }
            double* b = beta.data() + static_cast<std::size_t>(slot_of[i]) * n_classes;
            for (std::size_t c = 0; c < n_classes; ++c) b[c] += dec[c];
        }
    }

    KernelSvmModel model;
    model.width = data.width();
    model.gamma = params.gamma;
    model.scale = 1.0 / (lambda * static_cast<double>(std::max<std::size_t>(t, 1)));
    for (std::size_t s = 0; s < support.size(); ++s) model.support.push_back(rows[support[s]]);
    model.coefficients = std::move(beta);
    return model;
}

std::vector<double> decision_values(const KernelSvmModel& model, std::size_t n_classes,
                                    std::span<const double> row) {
    if (row.size() != model.width) throw WidthMismatch(model.width, row.size());
    const SparseRow x = to_sparse(row);
    const double x_norm = squared_norm(x);
    std::vector<double> out(n_classes, 0.0);
    for (std::size_t s = 0; s < model.support.size(); ++s) {
        const SparseRow& sv = model.support[s];
        const double d2 = std::max(0.0, x_norm + squared_norm(sv) - 2.0 * dot(sv, row));
        const double kv = std::exp(-model.gamma * d2);
        for (std::size_t c = 0; c < n_classes; ++c) out[c] += model.coefficients[s * n_classes + c] * kv;
    }
    for (double& v : out) v *= model.scale;
    return out;
}

}  // namespace mempredict
