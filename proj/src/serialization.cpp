#include "mempredict/serialization.hpp"

#include <array>
#include <set>

#include "mempredict/errors.hpp"

namespace mempredict {

namespace {

template <typename Enum, std::size_t N, typename NameFn>
Enum enum_from_name(const std::string& name, const std::array<Enum, N>& values, NameFn name_of,
                    std::string_view what) {
    for (Enum v : values)
        if (name_of(v) == name) return v;
    throw std::invalid_argument("unknown " + std::string(what) + " '" + name + "'");
}

constexpr std::array<Optimizer, 4> kOptimizers = {Optimizer::Sgd, Optimizer::SgdNesterov, Optimizer::Adam,
                                                  Optimizer::Lbfgs};
constexpr std::array<LrSchedule, 2> kSchedules = {LrSchedule::Constant, LrSchedule::InverseScaling};

std::string_view kernel_name(Kernel k) { return k == Kernel::Linear ? "linear" : "rbf"; }
std::string_view knn_mode_name(KnnMode m) { return m == KnnMode::Vote ? "vote" : "regression"; }
std::string_view scaling_name(Scaling s) { return s == Scaling::Raw ? "raw" : "normalized"; }

Method method_from(const std::string& name) {
    if (auto m = parse_method(name)) return *m;
    throw std::invalid_argument("unknown method '" + name + "'");
}

Json selection_json(const FeatureSelection& s) {
    Json cat = Json::array();
    for (auto f : s.categorical) cat.push_back(std::string(feature_name(f)));
    Json num = Json::array();
    for (auto f : s.numeric) num.push_back(std::string(feature_name(f)));
    return {{"categorical", cat}, {"numeric", num}};
}

FeatureSelection selection_from(const Json& j) {
    FeatureSelection s;
    for (const auto& [key, value] : j.items()) {
        if (key == "label") {
            s.label_name = value.get<std::string>();
        } else if (key == "categorical") {
            for (const auto& v : value) {
                auto f = parse_categorical(v.get<std::string>());
                if (!f) throw InvalidConfig("unknown categorical feature '" + v.get<std::string>() + "'");
                s.categorical.push_back(*f);
            }
        } else if (key == "numeric") {
            for (const auto& v : value) {
                auto f = parse_numeric(v.get<std::string>());
                if (!f) throw InvalidConfig("unknown numeric feature '" + v.get<std::string>() + "'");
                s.numeric.push_back(*f);
            }
        } else {
            throw InvalidConfig("unknown features key '" + key + "'");
        }
    }
    return s;
}

Json sparse_json(const SparseRow& r) { return {{"i", r.index}, {"v", r.value}}; }

SparseRow sparse_from(const Json& j) {
    SparseRow r{j.at("i").get<std::vector<std::uint32_t>>(), j.at("v").get<std::vector<double>>()};
    if (r.index.size() != r.value.size()) throw std::invalid_argument("sparse row length mismatch");
    return r;
}

Json fitted_json(const FittedParameters& fitted) {
    return std::visit(
        [](const auto& f) -> Json {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ConstantModel>) {
                return {{"kind", "constant"}, {"label", f.label}};
            } else if constexpr (std::is_same_v<F, LinearSvmModel>) {
                return {{"kind", "linear-svm"}, {"width", f.width}, {"weights", f.weights}};
            } else if constexpr (std::is_same_v<F, KernelSvmModel>) {
                Json support = Json::array();
                for (const auto& r : f.support) support.push_back(sparse_json(r));
                return {{"kind", "kernel-svm"}, {"width", f.width},     {"gamma", f.gamma},
                        {"scale", f.scale},     {"support", support},   {"coefficients", f.coefficients}};
            } else if constexpr (std::is_same_v<F, ForestModel>) {
                Json trees = Json::array();
                for (const auto& t : f.trees) {
                    Json feature = Json::array(), threshold = Json::array(), left = Json::array(),
                         right = Json::array(), label = Json::array();
                    for (const auto& n : t.nodes) {
                        feature.push_back(n.feature);
                        threshold.push_back(n.threshold);
                        left.push_back(n.left);
                        right.push_back(n.right);
                        label.push_back(n.label);
                    }
                    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left},
                                     {"right", right}, {"label", label}});
                }
                return {{"kind", "forest"}, {"width", f.width}, {"trees", trees}};
            } else if constexpr (std::is_same_v<F, MlpModel>) {
                Json layers = Json::array();
                const auto& net = f.network;
                for (std::size_t l = 0; l < net.weights.size(); ++l) {
                    const RowMatrix& w = net.weights[l];
                    std::vector<double> flat(w.data(), w.data() + w.size());
                    std::vector<double> bias(net.biases[l].data(), net.biases[l].data() + net.biases[l].size());
                    layers.push_back({{"rows", w.rows()}, {"cols", w.cols()}, {"weights", flat}, {"bias", bias}});
                }
                return {{"kind", "mlp"}, {"layers", layers}};
            } else {
                Json rows = Json::array();
                for (const auto& r : f.rows) rows.push_back(sparse_json(r));
                return {{"kind", "knn"},          {"width", f.width},         {"bin_size_mib", f.bin_size_mib},
                        {"max_bin", f.max_bin},   {"labels", f.labels},       {"memory_mib", f.memory_mib},
                        {"rows", rows}};
            }
        },
        fitted);
}

FittedParameters fitted_from(const Json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return ConstantModel{j.at("label").get<int>()};
    if (kind == "linear-svm")
        return LinearSvmModel{j.at("width").get<std::size_t>(), j.at("weights").get<std::vector<double>>()};
    if (kind == "kernel-svm") {
        KernelSvmModel m;
        m.width = j.at("width").get<std::size_t>();
        m.gamma = j.at("gamma").get<double>();
        m.scale = j.at("scale").get<double>();
        for (const auto& r : j.at("support")) m.support.push_back(sparse_from(r));
        m.coefficients = j.at("coefficients").get<std::vector<double>>();
        return m;
    }
    if (kind == "forest") {
        ForestModel m;
        m.width = j.at("width").get<std::size_t>();
        for (const auto& t : j.at("trees")) {
            const auto feature = t.at("feature").get<std::vector<int>>();
            const auto threshold = t.at("threshold").get<std::vector<double>>();
            const auto left = t.at("left").get<std::vector<int>>();
            const auto right = t.at("right").get<std::vector<int>>();
            const auto label = t.at("label").get<std::vector<int>>();
            const std::size_t n = feature.size();
            if (threshold.size() != n || left.size() != n || right.size() != n || label.size() != n)
                throw std::invalid_argument("tree column length mismatch");
            DecisionTree tree;
            for (std::size_t i = 0; i < n; ++i)
                tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], label[i]});
            m.trees.push_back(std::move(tree));
        }
        return m;
    }
    if (kind == "mlp") {
        MlpModel m;
        for (const auto& layer : j.at("layers")) {
            const auto rows = layer.at("rows").get<Eigen::Index>();
            const auto cols = layer.at("cols").get<Eigen::Index>();
            const auto flat = layer.at("weights").get<std::vector<double>>();
            const auto bias = layer.at("bias").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(flat.size()) != rows * cols || static_cast<Eigen::Index>(bias.size()) != cols)
                throw std::invalid_argument("layer shape mismatch");
            m.network.weights.push_back(Eigen::Map<const RowMatrix>(flat.data(), rows, cols));
            m.network.biases.push_back(Eigen::Map<const Eigen::RowVectorXd>(bias.data(), cols));
        }
        return m;
    }
    if (kind == "knn") {
        KnnModel m;
        m.width = j.at("width").get<std::size_t>();
        m.bin_size_mib = j.at("bin_size_mib").get<int>();
        m.max_bin = j.at("max_bin").get<int>();
        m.labels = j.at("labels").get<std::vector<int>>();
        m.memory_mib = j.at("memory_mib").get<std::vector<double>>();
        for (const auto& r : j.at("rows")) m.rows.push_back(sparse_from(r));
        if (m.rows.size() != m.labels.size() || m.rows.size() != m.memory_mib.size())
            throw std::invalid_argument("knn column length mismatch");
        return m;
    }
    throw std::invalid_argument("unknown model kind '" + kind + "'");
}

bool sparse_in_range(const SparseRow& r, std::size_t width) {
    for (auto i : r.index)
        if (i >= width) return false;
    return true;
}

// A well-formed file can still disagree with itself; predict() trusts these shapes.
void check_shapes(const TrainedModel& m) {
    const std::size_t k = m.classes.size();
    if (k == 0) throw std::invalid_argument("empty class list");
    const bool ok = std::visit(
        [&](const auto& f) -> bool {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ConstantModel>) {
                return k == 1 && f.label == m.classes.front();
            } else if constexpr (std::is_same_v<F, LinearSvmModel>) {
                return f.width == m.width && f.weights.size() == k * (m.width + 1);
            } else if constexpr (std::is_same_v<F, KernelSvmModel>) {
                for (const auto& r : f.support)
                    if (!sparse_in_range(r, m.width)) return false;
                return f.width == m.width && f.coefficients.size() == f.support.size() * k;
            } else if constexpr (std::is_same_v<F, ForestModel>) {
                if (f.width != m.width || f.trees.empty()) return false;
                for (const auto& t : f.trees) {
                    if (t.nodes.empty()) return false;
                    // Children always follow their parent, which also rules out cycles.
                    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
                        const auto& n = t.nodes[i];
                        if (n.feature < 0) continue;
                        const auto limit = static_cast<int>(t.nodes.size());
                        if (static_cast<std::size_t>(n.feature) >= m.width || n.left <= static_cast<int>(i) ||
                            n.right <= static_cast<int>(i) || n.left >= limit || n.right >= limit)
                            return false;
                    }
                }
                return true;
            } else if constexpr (std::is_same_v<F, MlpModel>) {
                const auto& w = f.network.weights;
                if (w.empty() || f.network.input_width() != m.width || f.network.output_width() != k) return false;
                for (std::size_t l = 1; l < w.size(); ++l)
                    if (w[l].rows() != w[l - 1].cols()) return false;
                return true;
            } else {
                for (const auto& r : f.rows)
                    if (!sparse_in_range(r, m.width)) return false;
                return f.width == m.width && !f.rows.empty();
            }
        },
        m.fitted);
    if (!ok) throw std::invalid_argument("fitted parameters disagree with model shape");
}

}  // namespace

PipelineConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidConfig("config must be an object");
    PipelineConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "window_size") c.window_size = value.get<std::size_t>();
            else if (key == "train_size") c.train_size = value.get<std::size_t>();
            else if (key == "valid_size") c.valid_size = value.get<std::size_t>();
            else if (key == "retrain_every") c.retrain_every = value.get<std::size_t>();
            else if (key == "bin_size_mib") c.bin_size_mib = value.get<int>();
            else if (key == "max_bin") c.max_bin = value.get<int>();
            else if (key == "top_n") c.top_n = value.get<std::size_t>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "grid_profile") {
                auto p = parse_profile(value.get<std::string>());
                if (!p) throw InvalidConfig("grid_profile must be 'full' or 'fast'");
                c.grid_profile = *p;
            } else if (key == "enable_lbfgs") c.enable_lbfgs = value.get<bool>();
            else if (key == "features") c.features = selection_from(value);
            else if (key == "default_bin") c.default_bin = value.get<int>();
            else throw InvalidConfig("unknown config key '" + key + "'");
        }
    } catch (const Json::exception& e) {
        throw InvalidConfig(std::string("config type error: ") + e.what());
    }
    c.validate();
    return c;
}

Json to_json(const PipelineConfig& c) {
    return {{"window_size", c.window_size},
            {"train_size", c.train_size},
            {"valid_size", c.valid_size},
            {"retrain_every", c.retrain_every},
            {"bin_size_mib", c.bin_size_mib},
            {"max_bin", c.max_bin},
            {"top_n", c.top_n},
            {"seed", c.seed},
            {"grid_profile", std::string(profile_name(c.grid_profile))},
            {"enable_lbfgs", c.enable_lbfgs},
            {"features", selection_json(c.features)},
            {"default_bin", c.default_bin}};
}

Json to_json(const EncoderSnapshot& e) {
    Json selection = selection_json(e.selection);
    selection["label"] = e.selection.label_name;
    Json dictionary = Json::array();
    for (const auto& m : e.dictionary.maps) {
        Json freq = Json::array();
        for (const auto& [cat, count] : m.frequencies()) freq.push_back({cat, count});
        dictionary.push_back({{"feature", std::string(feature_name(m.feature()))},
                              {"categories", m.categories()},
                              {"frequencies", freq}});
    }
    Json numeric = Json::array();
    for (const auto& s : e.numeric)
        numeric.push_back({{"feature", std::string(feature_name(s.feature))}, {"mean", s.mean}, {"stddev", s.stddev}});
    return {{"selection", selection},   {"dictionary", dictionary},     {"numeric", numeric},
            {"column_layout", e.column_layout}, {"bin_size_mib", e.bin_size_mib}, {"max_bin", e.max_bin}};
}

EncoderSnapshot encoder_from_json(const Json& j) {
    EncoderSnapshot e;
    e.selection = selection_from(j.at("selection"));
    for (const auto& m : j.at("dictionary")) {
        auto f = parse_categorical(m.at("feature").get<std::string>());
        if (!f) throw std::invalid_argument("unknown categorical feature");
        std::vector<std::pair<std::string, std::size_t>> freq;
        for (const auto& p : m.at("frequencies")) freq.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::size_t>());
        e.dictionary.maps.emplace_back(*f, m.at("categories").get<std::vector<std::string>>(), std::move(freq));
    }
    for (const auto& s : j.at("numeric")) {
        auto f = parse_numeric(s.at("feature").get<std::string>());
        if (!f) throw std::invalid_argument("unknown numeric feature");
        e.numeric.push_back({*f, s.at("mean").get<double>(), s.at("stddev").get<double>()});
    }
    e.column_layout = j.at("column_layout").get<std::vector<std::string>>();
    e.bin_size_mib = j.at("bin_size_mib").get<int>();
    e.max_bin = j.at("max_bin").get<int>();
    if (e.column_layout != column_layout(e.selection, e.dictionary))
        throw std::invalid_argument("column layout disagrees with dictionary");
    return e;
}

Json to_json(const LearnerSpec& spec) {
    Json params = std::visit(
        [](const auto& p) -> Json {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, SvmParams>) {
                return {{"kernel", std::string(kernel_name(p.kernel))}, {"C", p.C}, {"gamma", p.gamma},
                        {"epochs", p.epochs}, {"support_cap", p.support_cap}};
            } else if constexpr (std::is_same_v<P, ForestParams>) {
                return {{"n_trees", p.n_trees}, {"max_depth", p.max_depth}, {"min_samples_split", p.min_samples_split},
                        {"max_thresholds", p.max_thresholds}, {"bootstrap", p.bootstrap}};
            } else if constexpr (std::is_same_v<P, MlpParams>) {
                return {{"hidden_layers", p.hidden_layers},
                        {"optimizer", std::string(optimizer_name(p.optimizer))},
                        {"schedule", std::string(schedule_name(p.schedule))},
                        {"shuffle", p.shuffle},
                        {"alpha", p.alpha},
                        {"learning_rate", p.learning_rate},
                        {"epochs", p.epochs},
                        {"batch_size", p.batch_size},
                        {"momentum", p.momentum},
                        {"beta1", p.beta1},
                        {"beta2", p.beta2},
                        {"epsilon", p.epsilon}};
            } else {
                return {{"k", p.k}, {"mode", std::string(knn_mode_name(p.mode))}};
            }
        },
        spec.params);
    return {{"method", std::string(method_name(spec.method))}, {"params", params}};
}

LearnerSpec spec_from_json(const Json& j) {
    LearnerSpec spec;
    spec.method = method_from(j.at("method").get<std::string>());
    const Json& p = j.at("params");
    switch (spec.method) {
        case Method::Svm1:
        case Method::Svm2: {
            SvmParams s;
            const auto kernel = p.at("kernel").get<std::string>();
            if (kernel != "linear" && kernel != "rbf") throw std::invalid_argument("unknown kernel");
            s.kernel = kernel == "linear" ? Kernel::Linear : Kernel::Rbf;
            s.C = p.at("C").get<double>();
            s.gamma = p.at("gamma").get<double>();
            s.epochs = p.at("epochs").get<int>();
            s.support_cap = p.at("support_cap").get<std::size_t>();
            spec.params = s;
            break;
        }
        case Method::RForest: {
            ForestParams f;
            f.n_trees = p.at("n_trees").get<int>();
            f.max_depth = p.at("max_depth").get<int>();
            f.min_samples_split = p.at("min_samples_split").get<std::size_t>();
            f.max_thresholds = p.at("max_thresholds").get<std::size_t>();
            f.bootstrap = p.at("bootstrap").get<bool>();
            spec.params = f;
            break;
        }
        case Method::Mlp1:
        case Method::Mlp2: {
            MlpParams m;
            m.hidden_layers = p.at("hidden_layers").get<std::vector<int>>();
            m.optimizer = enum_from_name(p.at("optimizer").get<std::string>(), kOptimizers, optimizer_name, "optimizer");
            m.schedule = enum_from_name(p.at("schedule").get<std::string>(), kSchedules, schedule_name, "schedule");
            m.shuffle = p.at("shuffle").get<bool>();
            m.alpha = p.at("alpha").get<double>();
            m.learning_rate = p.at("learning_rate").get<double>();
            m.epochs = p.at("epochs").get<int>();
            m.batch_size = p.at("batch_size").get<std::size_t>();
            m.momentum = p.at("momentum").get<double>();
            m.beta1 = p.at("beta1").get<double>();
            m.beta2 = p.at("beta2").get<double>();
            m.epsilon = p.at("epsilon").get<double>();
            spec.params = m;
            break;
        }
        case Method::Knn1:
        case Method::Knn2: {
            KnnParams k;
            k.k = p.at("k").get<std::size_t>();
            const auto mode = p.at("mode").get<std::string>();
            if (mode != "vote" && mode != "regression") throw std::invalid_argument("unknown knn mode");
            k.mode = mode == "vote" ? KnnMode::Vote : KnnMode::Regression;
            spec.params = k;
            break;
        }
    }
    return spec;
}

Json to_json(const TrainedModel& m) {
    return {{"spec", to_json(m.spec)},
            {"seed", m.seed},
            {"classes", m.classes},
            {"width", m.width},
            {"scaling", std::string(scaling_name(m.scaling))},
            {"fitted", fitted_json(m.fitted)}};
}

TrainedModel model_from_json(const Json& j) {
    TrainedModel m;
    m.spec = spec_from_json(j.at("spec"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.classes = j.at("classes").get<std::vector<int>>();
    m.width = j.at("width").get<std::size_t>();
    const auto scaling = j.at("scaling").get<std::string>();
    if (scaling != "raw" && scaling != "normalized") throw std::invalid_argument("unknown scaling");
    m.scaling = scaling == "raw" ? Scaling::Raw : Scaling::Normalized;
    m.fitted = fitted_from(j.at("fitted"));
    check_shapes(m);
    return m;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace mempredict
