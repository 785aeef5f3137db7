#include "mempredict/learners/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mempredict/errors.hpp"
#include "mempredict/random.hpp"

namespace mempredict {

double entropy_bits(std::span<const std::size_t> counts) {
    std::size_t total = 0;
    for (std::size_t c : counts) total += c;
    if (total == 0) return 0.0;
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

namespace {

std::vector<std::size_t> histogram(std::span<const int> labels) {
    std::map<int, std::size_t> counts;
    for (int l : labels) ++counts[l];
    std::vector<std::size_t> out;
    for (const auto& [label, c] : counts) out.push_back(c);
    return out;
}

}  // namespace

double information_gain(std::span<const int> parent, std::span<const std::vector<int>> partitions) {
    std::vector<int> merged;
    for (const auto& part : partitions) merged.insert(merged.end(), part.begin(), part.end());
    std::vector<int> sorted_parent(parent.begin(), parent.end());
    std::sort(merged.begin(), merged.end());
    std::sort(sorted_parent.begin(), sorted_parent.end());
    if (merged != sorted_parent) throw NotAPartition();
    if (parent.empty()) return 0.0;

    const double n = static_cast<double>(parent.size());
    double gain = entropy_bits(histogram(parent));
    for (const auto& part : partitions) {
        if (part.empty()) continue;
        gain -= (static_cast<double>(part.size()) / n) * entropy_bits(histogram(part));
    }
    // Rounding can leave a tiny negative residue when no information is gained.
    return std::max(gain, 0.0);
}

int DecisionTree::predict(std::span<const double> row) const {
    int at = 0;
    while (nodes[at].feature >= 0) {
        const Node& node = nodes[at];
        at = row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes[at].label;
}

std::size_t DecisionTree::depth() const {
    std::vector<std::pair<int, std::size_t>> stack = {{0, 0}};
    std::size_t deepest = 0;
    while (!stack.empty()) {
        auto [at, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (nodes[at].feature >= 0) {
            stack.push_back({nodes[at].left, d + 1});
            stack.push_back({nodes[at].right, d + 1});
        }
    }
    return deepest;
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const EncodedDataset& data, const ForestParams& params, std::uint64_t seed)
        : data_(data), params_(params), rng_(seed) {
        for (int l : data.labels) classes_.push_back(l);
        std::sort(classes_.begin(), classes_.end());
        classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
        class_of_.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i)
            class_of_[i] = static_cast<std::size_t>(
                std::lower_bound(classes_.begin(), classes_.end(), data.labels[i]) - classes_.begin());
        const double w = static_cast<double>(data.width());
        mtry_ = static_cast<std::size_t>(std::ceil(std::sqrt(w)));
        columns_.resize(data.width());
        std::iota(columns_.begin(), columns_.end(), std::size_t{0});
    }

    DecisionTree build(std::vector<std::size_t> sample) {
        tree_.nodes.clear();
        grow(std::move(sample), 0);
        return std::move(tree_);
    }

private:
    struct Split {
        double gain = 0.0;
        std::size_t feature = 0;
        double threshold = 0.0;
    };

    int grow(std::vector<std::size_t> sample, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        std::vector<std::size_t> counts(classes_.size(), 0);
        for (std::size_t i : sample) ++counts[class_of_[i]];
        std::size_t majority = 0;
        for (std::size_t c = 1; c < counts.size(); ++c)
            if (counts[c] > counts[majority]) majority = c;
        tree_.nodes[id].label = classes_[majority];

        const bool pure = counts[majority] == sample.size();
        if (pure || depth >= params_.max_depth || sample.size() < params_.min_samples_split) return id;

        const Split split = best_split(sample, counts);
        if (!(split.gain > 1e-12)) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t i : sample)
            (data_.features(i, split.feature) <= split.threshold ? left : right).push_back(i);
        sample.clear();
        sample.shrink_to_fit();

        tree_.nodes[id].feature = static_cast<int>(split.feature);
        tree_.nodes[id].threshold = split.threshold;
        const int l = grow(std::move(left), depth + 1);
        tree_.nodes[id].left = l;
        const int r = grow(std::move(right), depth + 1);
        tree_.nodes[id].right = r;
        return id;
    }

    Split best_split(const std::vector<std::size_t>& sample, const std::vector<std::size_t>& parent_counts) {
        const double n = static_cast<double>(sample.size());
        const double parent_h = entropy_bits(parent_counts);
        rng_.shuffle(std::span<std::size_t>(columns_));

        Split best;
        std::size_t examined = 0;
        std::vector<std::pair<double, std::size_t>> values(sample.size());
        std::vector<std::size_t> boundaries;
        std::vector<std::size_t> left(classes_.size()), right(classes_.size());
        for (std::size_t col : columns_) {
            if (examined == mtry_) break;
            for (std::size_t k = 0; k < sample.size(); ++k)
                values[k] = {data_.features(sample[k], col), class_of_[sample[k]]};
            std::sort(values.begin(), values.end());
            if (values.front().first == values.back().first) continue;  // constant here
            ++examined;

            boundaries.clear();
            for (std::size_t k = 1; k < values.size(); ++k)
                if (values[k - 1].first < values[k].first) boundaries.push_back(k);
            if (boundaries.size() > params_.max_thresholds) {
                // Quantile-spaced subset of the distinct-value boundaries.
                std::vector<std::size_t> picked;
                const std::size_t m = boundaries.size();
                const std::size_t q = std::max<std::size_t>(params_.max_thresholds, 2);
                for (std::size_t j = 0; j < q; ++j) {
                    const std::size_t pos = boundaries[j * (m - 1) / (q - 1)];
                    if (picked.empty() || picked.back() != pos) picked.push_back(pos);
                }
                boundaries = std::move(picked);
            }

            std::fill(left.begin(), left.end(), 0);
            right = parent_counts;
            std::size_t k = 0;
            for (std::size_t pos : boundaries) {
                for (; k < pos; ++k) {
                    ++left[values[k].second];
                    --right[values[k].second];
                }
                const double nl = static_cast<double>(pos);
                const double gain = parent_h - (nl / n) * entropy_bits(left) - ((n - nl) / n) * entropy_bits(right);
                if (gain > best.gain) {
                    const double a = values[pos - 1].first;
                    const double b = values[pos].first;
                    double thr = a + (b - a) / 2.0;
                    if (!(thr < b)) thr = a;
                    best = {gain, col, thr};
                }
            }
        }
        return best;
    }

    const EncodedDataset& data_;
    const ForestParams& params_;
    Rng rng_;
    std::vector<int> classes_;
    std::vector<std::size_t> class_of_;
    std::vector<std::size_t> columns_;
    std::size_t mtry_ = 1;
    DecisionTree tree_;
};

}  // namespace

DecisionTree grow_tree(const EncodedDataset& data, std::span<const std::size_t> sample,
                       const ForestParams& params, std::uint64_t seed) {
    if (sample.empty()) throw EmptyTrainingSet();
    TreeBuilder builder(data, params, seed);
    return builder.build(std::vector<std::size_t>(sample.begin(), sample.end()));
}

std::uint64_t tree_seed(std::uint64_t forest_seed, std::size_t tree_index) {
    return derive_seed(forest_seed, tree_index);
}

ForestModel train_forest(const EncodedDataset& data, const ForestParams& params, std::uint64_t seed) {
    if (data.size() == 0) throw EmptyTrainingSet();
    ForestModel model;
    model.width = data.width();
    const std::size_t n = data.size();
    for (int t = 0; t < params.n_trees; ++t) {
        const std::uint64_t ts = tree_seed(seed, static_cast<std::size_t>(t));
        std::vector<std::size_t> sample(n);
        if (params.bootstrap) {
            Rng rng(derive_seed(ts, 0xb007));
            for (auto& s : sample) s = rng.below(n);
        } else {
            std::iota(sample.begin(), sample.end(), std::size_t{0});
        }
        model.trees.push_back(grow_tree(data, sample, params, ts));
    }
    return model;
}

int predict_forest(const ForestModel& model, std::span<const double> row) {
    if (row.size() != model.width) throw WidthMismatch(model.width, row.size());
    std::map<int, int> votes;
    for (const auto& tree : model.trees) ++votes[tree.predict(row)];
    int best = votes.begin()->first;
    int best_votes = votes.begin()->second;
    for (const auto& [label, v] : votes)
        if (v > best_votes) {
            best = label;
            best_votes = v;
        }
    return best;
}

}  // namespace mempredict
