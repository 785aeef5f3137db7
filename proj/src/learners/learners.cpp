#include "mempredict/learners.hpp"

#include <algorithm>
#include <array>

#include "mempredict/errors.hpp"
#include "mempredict/parallel.hpp"
#include "mempredict/random.hpp"

namespace mempredict {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 7> kMethodNames = {{
    {Method::Svm1, "svm-1"},
    {Method::Svm2, "svm-2"},
    {Method::RForest, "rforest"},
    {Method::Mlp1, "mlp-1"},
    {Method::Mlp2, "mlp-2"},
    {Method::Knn1, "knn-1"},
    {Method::Knn2, "knn-2"},
}};

}  // namespace

std::string_view method_name(Method m) {
    for (const auto& [method, name] : kMethodNames)
        if (method == m) return name;
    return "?";
}

std::optional<Method> parse_method(std::string_view name) {
    for (const auto& [method, n] : kMethodNames)
        if (n == name) return method;
    return std::nullopt;
}

Scaling preferred_scaling(Method m) { return m == Method::RForest ? Scaling::Raw : Scaling::Normalized; }

std::string_view optimizer_name(Optimizer o) {
    switch (o) {
        case Optimizer::Sgd: return "sgd";
        case Optimizer::SgdNesterov: return "sgd-nesterov";
        case Optimizer::Adam: return "adam";
        case Optimizer::Lbfgs: return "lbfgs";
    }
    return "?";
}

std::string_view schedule_name(LrSchedule s) {
    return s == LrSchedule::Constant ? "constant" : "inverse-scaling";
}

std::string_view profile_name(GridProfile p) { return p == GridProfile::Full ? "full" : "fast"; }

std::optional<GridProfile> parse_profile(std::string_view name) {
    if (name == "full") return GridProfile::Full;
    if (name == "fast") return GridProfile::Fast;
    return std::nullopt;
}

LearnerSpec default_spec(Method method) {
    switch (method) {
        case Method::Svm1: return {method, SvmParams{Kernel::Linear, 0.01, 0.0}};
        case Method::RForest: return {method, ForestParams{}};
        case Method::Mlp1: return {method, MlpParams{}};
        case Method::Knn1: return {method, KnnParams{5, KnnMode::Vote}};
        case Method::Knn2: return {method, KnnParams{5, KnnMode::Regression}};
        case Method::Svm2:
        case Method::Mlp2: return grid_candidates(method, {}).front();
    }
    return {method, SvmParams{}};
}

std::vector<LearnerSpec> grid_candidates(Method method, const GridOptions& options) {
    std::vector<LearnerSpec> out;
    const bool fast = options.profile == GridProfile::Fast;
    if (method == Method::Svm2) {
        const std::vector<double> linear_c = fast ? std::vector<double>{1, 100} : std::vector<double>{0.1, 1, 10, 100};
        const std::vector<double> rbf_c = fast ? std::vector<double>{1} : std::vector<double>{0.1, 1, 10, 100};
        const std::vector<double> gammas = fast ? std::vector<double>{1e-3} : std::vector<double>{1e-3, 1e-4};
        for (double c : linear_c) out.push_back({method, SvmParams{Kernel::Linear, c, 0.0}});
        for (double c : rbf_c)
            for (double g : gammas) out.push_back({method, SvmParams{Kernel::Rbf, c, g}});
        return out;
    }
    if (method == Method::Mlp2) {
        using Layers = std::vector<int>;
        const std::vector<Layers> layers =
            fast ? std::vector<Layers>{{128, 64, 32}}
                 : std::vector<Layers>{{256, 128, 64, 32}, {128, 64, 32}, {256, 64, 32}};
        std::vector<Optimizer> optimizers =
            fast ? std::vector<Optimizer>{Optimizer::Adam} : std::vector<Optimizer>{Optimizer::SgdNesterov, Optimizer::Adam};
        if (!fast && options.enable_lbfgs) optimizers.push_back(Optimizer::Lbfgs);
        const std::vector<LrSchedule> schedules =
            fast ? std::vector<LrSchedule>{LrSchedule::Constant}
                 : std::vector<LrSchedule>{LrSchedule::Constant, LrSchedule::InverseScaling};
        const std::vector<bool> shuffles = fast ? std::vector<bool>{true} : std::vector<bool>{true, false};
        const std::vector<double> alphas = fast ? std::vector<double>{0.001} : std::vector<double>{0.01, 0.001, 0.0001};
        for (const auto& l : layers)
            for (Optimizer o : optimizers)
                for (LrSchedule s : schedules)
                    for (bool sh : shuffles)
                        for (double a : alphas) {
                            MlpParams p;
                            p.hidden_layers = l;
                            p.optimizer = o;
                            p.schedule = s;
                            p.shuffle = sh;
                            p.alpha = a;
                            p.learning_rate = 0.001;
                            out.push_back({method, p});
                        }
        return out;
    }
    out.push_back(default_spec(method));
    return out;
}

GridResult cross_validate(std::span<const LearnerSpec> candidates, const EncodedDataset& data, std::size_t folds,
                          std::uint64_t seed) {
    if (candidates.empty()) throw EmptyInput();
    if (data.size() == 0) throw EmptyTrainingSet();
    GridResult result;
    if (candidates.size() == 1) {
        result.best = candidates.front();
        return result;
    }
    if (folds < 2 || data.size() < folds) throw InvalidConfig("cross-validation needs at least `folds` rows and 2 folds");

    std::vector<std::vector<std::size_t>> train_idx(folds), test_idx(folds);
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t f = 0; f < folds; ++f) (i % folds == f ? test_idx[f] : train_idx[f]).push_back(i);
    std::vector<EncodedDataset> train_sets, test_sets;
    for (std::size_t f = 0; f < folds; ++f) {
        train_sets.push_back(data.subset(train_idx[f]));
        test_sets.push_back(data.subset(test_idx[f]));
    }

    std::vector<double> fold_acc(candidates.size() * folds, 0.0);
    parallel_for(candidates.size() * folds, [&](std::size_t task) {
        const std::size_t c = task / folds;
        const std::size_t f = task % folds;
        const TrainedModel model = train(candidates[c], train_sets[f], derive_seed(seed, f));
        const EncodedDataset& test = test_sets[f];
        std::size_t hits = 0;
        for (std::size_t i = 0; i < test.size(); ++i)
            if (predict(model, test.features.row(i)) == test.labels[i]) ++hits;
        fold_acc[task] = static_cast<double>(hits) / static_cast<double>(test.size());
    });

    result.mean_accuracy.resize(candidates.size(), 0.0);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        double s = 0.0;
        for (std::size_t f = 0; f < folds; ++f) s += fold_acc[c * folds + f];
        result.mean_accuracy[c] = s / static_cast<double>(folds);
    }
    for (std::size_t c = 1; c < candidates.size(); ++c)
        if (result.mean_accuracy[c] > result.mean_accuracy[result.best_index]) result.best_index = c;
    result.best = candidates[result.best_index];
    return result;
}

LearnerSpec grid_search(Method method, const EncodedDataset& data, const GridOptions& options, std::uint64_t seed) {
    if (data.size() == 0) throw EmptyTrainingSet();
    const auto candidates = grid_candidates(method, options);
    return cross_validate(candidates, data, options.folds, seed).best;
}

LearnerSpec resolve_spec(Method method, const EncodedDataset& data, const GridOptions& options, std::uint64_t seed) {
    if (method == Method::Svm2 || method == Method::Mlp2) return grid_search(method, data, options, seed);
    return default_spec(method);
}

TrainedModel train(const LearnerSpec& spec, const EncodedDataset& data, std::uint64_t seed) {
    if (data.size() == 0) throw EmptyTrainingSet();
    TrainedModel model;
    model.spec = spec;
    model.seed = seed;
    model.width = data.width();
    model.scaling = data.scaling;
    model.classes = data.labels;
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());

    if (model.classes.size() == 1) {
        model.fitted = ConstantModel{model.classes.front()};
        return model;
    }
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, SvmParams>) {
                if (p.kernel == Kernel::Linear)
                    model.fitted = train_linear_svm(data, model.classes, p, seed);
                else
                    model.fitted = train_kernel_svm(data, model.classes, p, seed);
            } else if constexpr (std::is_same_v<P, ForestParams>) {
                model.fitted = train_forest(data, p, seed);
            } else if constexpr (std::is_same_v<P, MlpParams>) {
                model.fitted = train_mlp(data, model.classes, p, seed);
            } else {
                model.fitted = train_knn(data);
            }
        },
        spec.params);
    return model;
}

namespace {

int argmax_class(const std::vector<double>& scores, const std::vector<int>& classes) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c)
        if (scores[c] > scores[best]) best = c;
    return classes[best];
}

}  // namespace

int predict(const TrainedModel& model, std::span<const double> row) {
    if (row.size() != model.width) throw WidthMismatch(model.width, row.size());
    return std::visit(
        [&](const auto& fitted) -> int {
            using F = std::decay_t<decltype(fitted)>;
            if constexpr (std::is_same_v<F, ConstantModel>) {
                return fitted.label;
            } else if constexpr (std::is_same_v<F, LinearSvmModel> || std::is_same_v<F, KernelSvmModel>) {
                return argmax_class(decision_values(fitted, model.classes.size(), row), model.classes);
            } else if constexpr (std::is_same_v<F, ForestModel>) {
                return predict_forest(fitted, row);
            } else if constexpr (std::is_same_v<F, MlpModel>) {
                return model.classes[predict_class(fitted, row)];
            } else {
                const auto& knn = std::get<KnnParams>(model.spec.params);
                const auto neighbors = nearest_neighbors(fitted, row, knn.k);
                if (knn.mode == KnnMode::Vote) return knn_vote(fitted, neighbors);
                return nearest_observed_bin(knn_regress(fitted, neighbors), model.classes, fitted.bin_size_mib,
                                            fitted.max_bin);
            }
        },
        model.fitted);
}

}  // namespace mempredict
