#include "mempredict/learners/sparse.hpp"

namespace mempredict {

SparseRow to_sparse(std::span<const double> dense) {
    SparseRow row;
    for (std::size_t j = 0; j < dense.size(); ++j) {
        if (dense[j] != 0.0) {
            row.index.push_back(static_cast<std::uint32_t>(j));
            row.value.push_back(dense[j]);
        }
    }
    return row;
}

double dot(const SparseRow& a, std::span<const double> dense) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.nnz(); ++k) s += a.value[k] * dense[a.index[k]];
    return s;
}

double squared_norm(const SparseRow& a) {
    double s = 0.0;
    for (double v : a.value) s += v * v;
    return s;
}

double squared_distance(const SparseRow& a, const SparseRow& b) {
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.nnz() || j < b.nnz()) {
        double t;
        if (j == b.nnz() || (i < a.nnz() && a.index[i] < b.index[j])) {
            t = a.value[i++] - 0.0;
        } else if (i == a.nnz() || b.index[j] < a.index[i]) {
            t = 0.0 - b.value[j++];
        } else {
            t = a.value[i++] - b.value[j++];
        }
        s += t * t;
    }
    return s;
}

}  // namespace mempredict
