#include "mempredict/learners/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "mempredict/errors.hpp"
#include "mempredict/random.hpp"

namespace mempredict {

std::size_t MlpNetwork::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

std::vector<std::pair<std::size_t, std::size_t>> MlpNetwork::shapes() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& w : weights) out.emplace_back(w.rows(), w.cols());
    return out;
}

std::vector<double> MlpNetwork::flatten() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (std::size_t l = 0; l < weights.size(); ++l) {
        flat.insert(flat.end(), weights[l].data(), weights[l].data() + weights[l].size());
        flat.insert(flat.end(), biases[l].data(), biases[l].data() + biases[l].size());
    }
    return flat;
}

void MlpNetwork::assign(std::span<const double> flat) {
    if (flat.size() != parameter_count()) throw WidthMismatch(parameter_count(), flat.size());
    std::size_t at = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        std::copy_n(flat.begin() + at, weights[l].size(), weights[l].data());
        at += weights[l].size();
        std::copy_n(flat.begin() + at, biases[l].size(), biases[l].data());
        at += biases[l].size();
    }
}

std::vector<double> MlpGradient::flatten() const {
    std::vector<double> flat;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        flat.insert(flat.end(), weights[l].data(), weights[l].data() + weights[l].size());
        flat.insert(flat.end(), biases[l].data(), biases[l].data() + biases[l].size());
    }
    return flat;
}

MlpNetwork init_network(std::size_t inputs, std::span<const int> hidden, std::size_t outputs, std::uint64_t seed) {
    std::vector<std::size_t> sizes = {inputs};
    for (int h : hidden) sizes.push_back(static_cast<std::size_t>(h));
    sizes.push_back(outputs);

    Rng rng(seed);
    MlpNetwork net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const double limit = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
        RowMatrix w(sizes[l], sizes[l + 1]);
        for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = rng.uniform(-limit, limit);
        Eigen::RowVectorXd b(sizes[l + 1]);
        for (Eigen::Index k = 0; k < b.size(); ++k) b[k] = rng.uniform(-limit, limit);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

namespace {

// X * W + b, skipping zero inputs (encoded rows are mostly one-hot zeros).
RowMatrix input_affine(const RowMatrix& x, const RowMatrix& w, const Eigen::RowVectorXd& b) {
    RowMatrix z(x.rows(), w.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        z.row(r) = b;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double v = x(r, j);
            if (v != 0.0) z.row(r) += v * w.row(j);
        }
    }
    return z;
}

struct ForwardPass {
    std::vector<RowMatrix> activations;  // [0] = input, then each hidden layer
    RowMatrix logits;
};

ForwardPass forward(const MlpNetwork& net, const RowMatrix& batch) {
    if (static_cast<std::size_t>(batch.cols()) != net.input_width())
        throw WidthMismatch(net.input_width(), static_cast<std::size_t>(batch.cols()));
    ForwardPass fp;
    fp.activations.push_back(batch);
    const std::size_t layers = net.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        RowMatrix z;
        if (l == 0) {
            z = input_affine(batch, net.weights[0], net.biases[0]);
        } else {
            z = fp.activations.back() * net.weights[l];
            z.rowwise() += net.biases[l];
        }
        if (l + 1 == layers)
            fp.logits = std::move(z);
        else
            fp.activations.push_back(z.array().tanh().matrix());
    }
    return fp;
}

double weight_penalty(const MlpNetwork& net, double alpha) {
    double s = 0.0;
    for (const auto& w : net.weights) s += w.squaredNorm();
    return alpha * s;
}

void softmax_rows(RowMatrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double mx = m.row(r).maxCoeff();
        m.row(r) = (m.row(r).array() - mx).exp().matrix();
        m.row(r) /= m.row(r).sum();
    }
}

double cross_entropy(const RowMatrix& logits, std::span<const std::size_t> targets) {
    double total = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const double mx = logits.row(r).maxCoeff();
        const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
        total += lse - logits(r, static_cast<Eigen::Index>(targets[static_cast<std::size_t>(r)]));
    }
    return total / static_cast<double>(logits.rows());
}

}  // namespace

double mlp_loss(const MlpNetwork& net, const RowMatrix& batch, std::span<const std::size_t> targets, double alpha) {
    const ForwardPass fp = forward(net, batch);
    return cross_entropy(fp.logits, targets) + weight_penalty(net, alpha);
}

RowMatrix mlp_probabilities(const MlpNetwork& net, const RowMatrix& batch) {
    ForwardPass fp = forward(net, batch);
    softmax_rows(fp.logits);
    return fp.logits;
}

MlpGradient mlp_gradient(const MlpNetwork& net, const RowMatrix& batch, std::span<const std::size_t> targets,
                         double alpha) {
    if (batch.rows() == 0) throw EmptyInput();
    if (static_cast<std::size_t>(batch.rows()) != targets.size())
        throw LengthMismatch(static_cast<std::size_t>(batch.rows()), targets.size());
    ForwardPass fp = forward(net, batch);
    MlpGradient grad;
    grad.loss = cross_entropy(fp.logits, targets) + weight_penalty(net, alpha);

    const std::size_t layers = net.weights.size();
    grad.weights.resize(layers);
    grad.biases.resize(layers);
    const double inv_b = 1.0 / static_cast<double>(batch.rows());

    RowMatrix delta = std::move(fp.logits);
    softmax_rows(delta);
    for (Eigen::Index r = 0; r < delta.rows(); ++r)
        delta(r, static_cast<Eigen::Index>(targets[static_cast<std::size_t>(r)])) -= 1.0;
    delta *= inv_b;

    for (std::size_t l = layers; l-- > 0;) {
        const RowMatrix& input = fp.activations[l];
        if (l == 0) {
            RowMatrix gw = RowMatrix::Zero(net.weights[0].rows(), net.weights[0].cols());
            for (Eigen::Index r = 0; r < input.rows(); ++r)
                for (Eigen::Index j = 0; j < input.cols(); ++j) {
                    const double v = input(r, j);
                    if (v != 0.0) gw.row(j) += v * delta.row(r);
                }
            grad.weights[0] = std::move(gw);
        } else {
            grad.weights[l] = input.transpose() * delta;
        }
        grad.weights[l] += 2.0 * alpha * net.weights[l];
        grad.biases[l] = delta.colwise().sum();
        if (l > 0) {
            RowMatrix back = delta * net.weights[l].transpose();
            delta = (back.array() * (1.0 - input.array().square())).matrix();
        }
    }
    return grad;
}

namespace {

RowMatrix gather_rows(const FeatureMatrix& features, std::span<const std::size_t> rows) {
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features.cols()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        auto src = features.row(rows[k]);
        std::copy(src.begin(), src.end(), out.row(static_cast<Eigen::Index>(k)).data());
    }
    return out;
}

// Parameter blocks as raw (pointer, size) pairs in flatten() order.
std::vector<std::pair<double*, std::size_t>> blocks(MlpNetwork& net) {
    std::vector<std::pair<double*, std::size_t>> out;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        out.emplace_back(net.weights[l].data(), static_cast<std::size_t>(net.weights[l].size()));
        out.emplace_back(net.biases[l].data(), static_cast<std::size_t>(net.biases[l].size()));
    }
    return out;
}

std::vector<std::pair<const double*, std::size_t>> blocks(const MlpGradient& g) {
    std::vector<std::pair<const double*, std::size_t>> out;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
        out.emplace_back(g.weights[l].data(), static_cast<std::size_t>(g.weights[l].size()));
        out.emplace_back(g.biases[l].data(), static_cast<std::size_t>(g.biases[l].size()));
    }
    return out;
}

class StepOptimizer {
public:
    StepOptimizer(const MlpParams& params, const MlpNetwork& net) : params_(params) {
        for (std::size_t l = 0; l < net.weights.size(); ++l) {
            first_.emplace_back(static_cast<std::size_t>(net.weights[l].size()), 0.0);
            first_.emplace_back(static_cast<std::size_t>(net.biases[l].size()), 0.0);
        }
        if (params.optimizer == Optimizer::Adam) second_ = first_;
    }

    void step(MlpNetwork& net, const MlpGradient& grad, double lr) {
        auto p = blocks(net);
        auto g = blocks(grad);
        ++t_;
        double adam_lr = lr;
        if (params_.optimizer == Optimizer::Adam) {
            const double td = static_cast<double>(t_);
            adam_lr = lr * std::sqrt(1.0 - std::pow(params_.beta2, td)) / (1.0 - std::pow(params_.beta1, td));
        }
        for (std::size_t b = 0; b < p.size(); ++b) {
            double* w = p[b].first;
            const double* d = g[b].first;
            const std::size_t n = p[b].second;
            switch (params_.optimizer) {
                case Optimizer::Sgd:
                case Optimizer::Lbfgs:
                    for (std::size_t k = 0; k < n; ++k) w[k] -= lr * d[k];
                    break;
                case Optimizer::SgdNesterov: {
                    double* v = first_[b].data();
                    const double mu = params_.momentum;
                    for (std::size_t k = 0; k < n; ++k) {
                        v[k] = mu * v[k] - lr * d[k];
                        w[k] += mu * v[k] - lr * d[k];
                    }
                    break;
                }
                case Optimizer::Adam: {
                    double* m = first_[b].data();
                    double* s = second_[b].data();
                    for (std::size_t k = 0; k < n; ++k) {
                        m[k] = params_.beta1 * m[k] + (1.0 - params_.beta1) * d[k];
                        s[k] = params_.beta2 * s[k] + (1.0 - params_.beta2) * d[k] * d[k];
                        w[k] -= adam_lr * m[k] / (std::sqrt(s[k]) + params_.epsilon);
                    }
                    break;
                }
            }
        }
    }

private:
    const MlpParams& params_;
    std::vector<std::vector<double>> first_;
    std::vector<std::vector<double>> second_;
    std::size_t t_ = 0;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void train_lbfgs(MlpNetwork& net, const RowMatrix& x, std::span<const std::size_t> targets, const MlpParams& params) {
    constexpr std::size_t kHistory = 10;
    std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;  // (s, y)
    std::vector<double> w = net.flatten();
    MlpGradient g0 = mlp_gradient(net, x, targets, params.alpha);
    double f = g0.loss;
    std::vector<double> g = g0.flatten();
    const std::size_t n = w.size();

    for (int it = 0; it < params.epochs; ++it) {
        // Two-loop recursion for d = -H g.
        std::vector<double> q = g;
        std::vector<double> alphas(memory.size());
        for (std::size_t k = memory.size(); k-- > 0;) {
            const auto& [s, y] = memory[k];
            alphas[k] = dot(s, q) / dot(y, s);
            for (std::size_t i = 0; i < n; ++i) q[i] -= alphas[k] * y[i];
        }
        double h0 = 1.0;
        if (!memory.empty()) h0 = dot(memory.back().first, memory.back().second) / dot(memory.back().second, memory.back().second);
        for (double& v : q) v *= h0;
        for (std::size_t k = 0; k < memory.size(); ++k) {
            const auto& [s, y] = memory[k];
            const double beta = dot(y, q) / dot(y, s);
            for (std::size_t i = 0; i < n; ++i) q[i] += s[i] * (alphas[k] - beta);
        }
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];
        double slope = dot(g, d);
        if (!(slope < 0.0)) {
            memory.clear();
            for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
            slope = dot(g, d);
        }
        if (slope == 0.0) break;

        double step = memory.empty() ? std::min(1.0, 1.0 / std::sqrt(-slope)) : 1.0;
        std::vector<double> trial(n);
        MlpGradient gt;
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + step * d[i];
            net.assign(trial);
            gt = mlp_gradient(net, x, targets, params.alpha);
            if (gt.loss <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            net.assign(w);
            break;
        }
        std::vector<double> g_new = gt.flatten();
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = trial[i] - w[i];
            y[i] = g_new[i] - g[i];
        }
        if (dot(s, y) > 1e-12) {
            memory.emplace_back(std::move(s), std::move(y));
            if (memory.size() > kHistory) memory.pop_front();
        }
        w = trial;
        g = std::move(g_new);
        f = gt.loss;
    }
    net.assign(w);
}

}  // namespace

MlpModel train_mlp(const EncodedDataset& data, std::span<const int> classes, const MlpParams& params,
                   std::uint64_t seed) {
    const std::size_t n = data.size();
    if (n == 0) throw EmptyTrainingSet();
    std::vector<std::size_t> targets(n);
    for (std::size_t i = 0; i < n; ++i)
        targets[i] = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), data.labels[i]) -
                                              classes.begin());

    MlpModel model{init_network(data.width(), params.hidden_layers, classes.size(), derive_seed(seed, 0))};
    MlpNetwork& net = model.network;

    if (params.optimizer == Optimizer::Lbfgs) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        train_lbfgs(net, gather_rows(data.features, all), targets, params);
        return model;
    }

    Rng rng(derive_seed(seed, 1));
    StepOptimizer optimizer(params, net);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t batch = std::max<std::size_t>(1, params.batch_size);
    std::vector<std::size_t> batch_targets;
    for (int epoch = 1; epoch <= params.epochs; ++epoch) {
        if (params.shuffle) rng.shuffle(std::span<std::size_t>(order));
        const double lr = params.schedule == LrSchedule::Constant
                              ? params.learning_rate
                              : params.learning_rate / std::sqrt(static_cast<double>(epoch));
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            std::span<const std::size_t> rows(order.data() + start, end - start);
            batch_targets.clear();
            for (std::size_t r : rows) batch_targets.push_back(targets[r]);
            const MlpGradient grad = mlp_gradient(net, gather_rows(data.features, rows), batch_targets, params.alpha);
            optimizer.step(net, grad, lr);
        }
    }
    return model;
}

std::size_t predict_class(const MlpModel& model, std::span<const double> row) {
    RowMatrix x(1, static_cast<Eigen::Index>(row.size()));
    std::copy(row.begin(), row.end(), x.data());
    const ForwardPass fp = forward(model.network, x);
    std::size_t best = 0;
    for (Eigen::Index c = 1; c < fp.logits.cols(); ++c)
        if (fp.logits(0, c) > fp.logits(0, static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(c);
    return best;
}

}  // namespace mempredict
