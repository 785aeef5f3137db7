#include "mempredict/learners/knn.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mempredict/errors.hpp"

namespace mempredict {

KnnModel train_knn(const EncodedDataset& data) {
    if (data.size() == 0) throw EmptyTrainingSet();
    KnnModel model;
    model.width = data.width();
    model.rows.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) model.rows.push_back(to_sparse(data.features.row(i)));
    model.labels = data.labels;
    model.memory_mib = data.memory_mib;
    model.bin_size_mib = data.bin_size_mib;
    model.max_bin = data.max_bin;
    return model;
}

std::vector<Neighbor> nearest_neighbors(const KnnModel& model, std::span<const double> row, std::size_t k) {
    if (row.size() != model.width) throw WidthMismatch(model.width, row.size());
    const SparseRow query = to_sparse(row);
    const auto closer = [](const Neighbor& a, const Neighbor& b) {
        return a.squared_distance < b.squared_distance ||
               (a.squared_distance == b.squared_distance && a.index < b.index);
    };
    k = std::min(k, model.rows.size());
    // Max-heap of the best k seen so far.
    std::vector<Neighbor> heap;
    heap.reserve(k + 1);
    for (std::size_t i = 0; i < model.rows.size(); ++i) {
        Neighbor cand{squared_distance(model.rows[i], query), i};
        if (heap.size() < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end(), closer);
        } else if (k > 0 && closer(cand, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), closer);
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end(), closer);
        }
    }
    std::sort_heap(heap.begin(), heap.end(), closer);
    return heap;
}

int knn_vote(const KnnModel& model, std::span<const Neighbor> neighbors) {
    if (neighbors.empty()) throw EmptyInput();
    std::map<int, std::size_t> votes;
    for (const auto& nb : neighbors) ++votes[model.labels[nb.index]];
    std::size_t top = 0;
    for (const auto& [label, v] : votes) top = std::max(top, v);
    // Neighbors arrive nearest first, so the first tied class wins.
    for (const auto& nb : neighbors)
        if (votes[model.labels[nb.index]] == top) return model.labels[nb.index];
    return model.labels[neighbors.front().index];
}

double knn_regress(const KnnModel& model, std::span<const Neighbor> neighbors) {
    if (neighbors.empty()) throw EmptyInput();
    double num = 0.0, den = 0.0;
    for (const auto& nb : neighbors) {
        const double w = 1.0 / (std::sqrt(nb.squared_distance) + 1e-9);
        num += w * model.memory_mib[nb.index];
        den += w;
    }
    return num / den;
}

int nearest_observed_bin(double mem_mib, std::span<const int> classes, int bin_size_mib, int max_bin) {
    if (classes.empty()) throw EmptyInput();
    const int containing = memory_to_bin(mem_mib, bin_size_mib, max_bin);
    if (std::binary_search(classes.begin(), classes.end(), containing)) return containing;
    int best = classes.front();
    double best_d = std::abs(mem_mib - (best + 0.5) * bin_size_mib);
    for (int c : classes) {
        const double d = std::abs(mem_mib - (c + 0.5) * bin_size_mib);
        if (d < best_d) {
            best = c;
            best_d = d;
        }
    }
    return best;
}

}  // namespace mempredict
