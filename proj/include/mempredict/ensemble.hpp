#pragma once

#include <memory>
#include <span>
#include <vector>

#include "mempredict/learners.hpp"

namespace mempredict {

/// Fraction of positions where predicted == actual.
double accuracy(std::span<const int> predicted, std::span<const int> actual);

struct RankedEntry {
    Method method;
    std::shared_ptr<const TrainedModel> model;
    double validation_accuracy = 0.0;
};

/// Models ordered by validation accuracy, best first; ties by method order.
struct RankedModels {
    std::vector<RankedEntry> entries;

    std::size_t size() const { return entries.size(); }
};

/// One trained model with its predictions on the shared validation set.
struct ScoredModel {
    Method method;
    std::shared_ptr<const TrainedModel> model;
    std::vector<int> validation_predictions;
};

RankedModels rank_models(std::vector<ScoredModel> models, std::span<const int> validation_labels);

/// Stable order of (method, score) by score descending then method order.
std::vector<std::size_t> ranking_order(std::span<const Method> methods, std::span<const double> scores);

struct PollConfig {
    std::size_t top_n = 4;
};

struct Vote {
    int bin;
    double weight;
};

/// Relative gap under which two summed vote weights count as tied.
inline constexpr double kPollTieTolerance = 1e-9;

/// Weighted vote with voters given in rank order. The bin with the largest
/// summed weight wins; a tie goes to the tied bin of the highest-ranked voter.
int poll_votes(std::span<const Vote> votes_in_rank_order);

/// Encoded forms of one query; each model reads the scaling it was trained on.
struct QueryRows {
    std::vector<double> normalized;
    std::vector<double> raw;

    std::span<const double> for_scaling(Scaling s) const { return s == Scaling::Raw ? raw : normalized; }
};

struct VoterBreakdown {
    std::size_t rank;  ///< 1-based
    Method method;
    double weight;
    int bin;
};

struct PollOutcome {
    int bin;
    std::vector<VoterBreakdown> voters;
};

PollOutcome weighted_poll_explained(const RankedModels& ranked, const PollConfig& config, const QueryRows& row);
int weighted_poll(const RankedModels& ranked, const PollConfig& config, const QueryRows& row);

/// Most frequent bin, ties to the lowest.
int mode_baseline(std::span<const int> training_labels);

}  // namespace mempredict
