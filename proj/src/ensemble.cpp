#include "mempredict/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "mempredict/errors.hpp"

namespace mempredict {

double accuracy(std::span<const int> predicted, std::span<const int> actual) {
    if (predicted.size() != actual.size()) throw LengthMismatch(predicted.size(), actual.size());
    if (predicted.empty()) throw EmptyInput();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == actual[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<std::size_t> ranking_order(std::span<const Method> methods, std::span<const double> scores) {
    if (methods.size() != scores.size()) throw LengthMismatch(methods.size(), scores.size());
    std::vector<std::size_t> order(methods.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return static_cast<int>(methods[a]) < static_cast<int>(methods[b]);
    });
    return order;
}

RankedModels rank_models(std::vector<ScoredModel> models, std::span<const int> validation_labels) {
    if (models.empty()) throw EmptyInput();
    std::vector<Method> methods;
    std::vector<double> scores;
    for (const auto& m : models) {
        methods.push_back(m.method);
        scores.push_back(accuracy(m.validation_predictions, validation_labels));
    }
    RankedModels ranked;
    for (std::size_t i : ranking_order(methods, scores))
        ranked.entries.push_back({models[i].method, std::move(models[i].model), scores[i]});
    return ranked;
}

int poll_votes(std::span<const Vote> votes) {
    if (votes.empty()) throw EmptyInput();
    std::map<int, double> totals;
    for (const auto& v : votes) totals[v.bin] += v.weight;
    double best = totals.begin()->second;
    for (const auto& [bin, w] : totals) best = std::max(best, w);
    // Accuracies are ratios, so sums such as 0.3 + 0.6 vs 0.9 are exact ties
    // that rounding would otherwise break arbitrarily.
    const double floor = best - kPollTieTolerance * std::abs(best);
    for (const auto& v : votes)
        if (totals[v.bin] >= floor) return v.bin;
    return votes.front().bin;
}

PollOutcome weighted_poll_explained(const RankedModels& ranked, const PollConfig& config, const QueryRows& row) {
    if (config.top_n < 1 || config.top_n > ranked.size())
        throw InvalidConfig("top_n must lie in [1, " + std::to_string(ranked.size()) + "]");
    PollOutcome out;
    std::vector<Vote> votes;
    for (std::size_t r = 0; r < config.top_n; ++r) {
        const RankedEntry& e = ranked.entries[r];
        const int bin = predict(*e.model, row.for_scaling(e.model->scaling));
        votes.push_back({bin, e.validation_accuracy});
        out.voters.push_back({r + 1, e.method, e.validation_accuracy, bin});
    }
    out.bin = poll_votes(votes);
    return out;
}

int weighted_poll(const RankedModels& ranked, const PollConfig& config, const QueryRows& row) {
    return weighted_poll_explained(ranked, config, row).bin;
}

int mode_baseline(std::span<const int> training_labels) {
    if (training_labels.empty()) throw EmptyInput();
    std::map<int, std::size_t> counts;
    for (int l : training_labels) ++counts[l];
    int best = counts.begin()->first;
    std::size_t best_count = counts.begin()->second;
    for (const auto& [bin, c] : counts)
        if (c > best_count) {
            best = bin;
            best_count = c;
        }
    return best;
}

}  // namespace mempredict
