#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mempredict {

/// Nonzero entries of a feature row in increasing column order.
struct SparseRow {
    std::vector<std::uint32_t> index;
    std::vector<double> value;

    std::size_t nnz() const { return index.size(); }
    friend bool operator==(const SparseRow&, const SparseRow&) = default;
};

SparseRow to_sparse(std::span<const double> dense);

double dot(const SparseRow& a, std::span<const double> dense);
double squared_norm(const SparseRow& a);

/// Sum of (a_j - b_j)^2 over columns in increasing order. Columns where both
/// rows are zero contribute an exact 0, so the result is bit-identical to
/// the dense left-to-right sum.
double squared_distance(const SparseRow& a, const SparseRow& b);

}  // namespace mempredict
