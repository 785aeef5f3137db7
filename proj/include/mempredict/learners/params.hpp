#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "mempredict/featurization.hpp"

namespace mempredict {

/// The seven prediction methods, in their fixed ranking tie-break order.
enum class Method { Svm1, Svm2, RForest, Mlp1, Mlp2, Knn1, Knn2 };

inline constexpr std::array<Method, 7> kAllMethods = {Method::Svm1,  Method::Svm2, Method::RForest,
                                                      Method::Mlp1,  Method::Mlp2, Method::Knn1,
                                                      Method::Knn2};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

/// Forest splits on raw values; every other method sees normalized rows.
Scaling preferred_scaling(Method m);

enum class Kernel { Linear, Rbf };

struct SvmParams {
    Kernel kernel = Kernel::Linear;
    double C = 0.01;
    double gamma = 0.0;
    int epochs = 20;
    std::size_t support_cap = 2000;

    friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

struct ForestParams {
    int n_trees = 20;
    int max_depth = 25;
    std::size_t min_samples_split = 2;
    std::size_t max_thresholds = 32;
    bool bootstrap = true;  // test hook: off reproduces a single tree on the full set

    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

enum class Optimizer { Sgd, SgdNesterov, Adam, Lbfgs };
enum class LrSchedule { Constant, InverseScaling };

std::string_view optimizer_name(Optimizer o);
std::string_view schedule_name(LrSchedule s);

struct MlpParams {
    std::vector<int> hidden_layers = {128, 64, 32};
    Optimizer optimizer = Optimizer::Sgd;
    LrSchedule schedule = LrSchedule::Constant;
    bool shuffle = true;
    double alpha = 1e-4;
    double learning_rate = 0.01;
    int epochs = 50;
    std::size_t batch_size = 32;
    double momentum = 0.9;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

enum class KnnMode { Vote, Regression };

struct KnnParams {
    std::size_t k = 5;
    KnnMode mode = KnnMode::Vote;

    friend bool operator==(const KnnParams&, const KnnParams&) = default;
};

using Hyperparameters = std::variant<SvmParams, ForestParams, MlpParams, KnnParams>;

struct LearnerSpec {
    Method method = Method::Svm1;
    Hyperparameters params;

    friend bool operator==(const LearnerSpec&, const LearnerSpec&) = default;
};

enum class GridProfile { Full, Fast };

std::string_view profile_name(GridProfile p);
std::optional<GridProfile> parse_profile(std::string_view name);

struct GridOptions {
    GridProfile profile = GridProfile::Full;
    bool enable_lbfgs = false;
    std::size_t folds = 3;
};

}  // namespace mempredict
