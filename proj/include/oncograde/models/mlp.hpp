#ifndef ONCOGRADE_MODELS_MLP_HPP
#define ONCOGRADE_MODELS_MLP_HPP

// Fully connected ReLU network with a softmax head, trained on mean
// cross-entropy by mini-batch momentum SGD with early stopping.

#include "oncograde/core.hpp"
#include "oncograde/dataset.hpp"

#include <array>
#include <cstdio>
#include <limits>
#include <vector>

namespace oncograde {

struct MlpLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;  // out x in, row-major
    std::vector<double> biases;   // out
};

struct MlpNetwork {
    std::vector<MlpLayer> layers;

    [[nodiscard]] std::size_t input_size() const { return layers.empty() ? 0 : layers.front().in; }
    [[nodiscard]] std::size_t output_size() const { return layers.empty() ? 0 : layers.back().out; }

    [[nodiscard]] std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weights.size() + l.biases.size();
        return n;
    }

    /// Weights then biases, layer by layer.
    [[nodiscard]] std::vector<double> flatten() const {
        std::vector<double> out;
        out.reserve(parameter_count());
        for (const auto& l : layers) {
            out.insert(out.end(), l.weights.begin(), l.weights.end());
            out.insert(out.end(), l.biases.begin(), l.biases.end());
        }
        return out;
    }

    void unflatten(std::span<const double> params) {
        if (params.size() != parameter_count()) throw Error("mlp: parameter vector length mismatch");
        std::size_t k = 0;
        for (auto& l : layers) {
            for (double& w : l.weights) w = params[k++];
            for (double& b : l.biases) b = params[k++];
        }
    }
};

/// Layer sizes [inputs, hidden..., outputs] with He-scaled normal weights
/// and zero biases.
inline MlpNetwork init_mlp(const std::vector<std::size_t>& sizes, RngStream& stream) {
    if (sizes.size() < 2) throw Error("mlp: need at least input and output sizes");
    MlpNetwork net;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        if (sizes[l] == 0 || sizes[l + 1] == 0) throw Error("mlp: layer sizes must be positive");
        MlpLayer layer{sizes[l], sizes[l + 1], std::vector<double>(sizes[l] * sizes[l + 1]),
                       std::vector<double>(sizes[l + 1], 0.0)};
        const double scale = std::sqrt(2.0 / static_cast<double>(sizes[l]));
        for (double& w : layer.weights) w = scale * stream.normal();
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace detail {

/// Activations per layer for one sample; the last entry holds softmax output.
inline std::vector<std::vector<double>> mlp_forward(const MlpNetwork& net, std::span<const double> x) {
    std::vector<std::vector<double>> acts;
    acts.reserve(net.layers.size() + 1);
    acts.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        const auto& prev = acts.back();
        std::vector<double> z(layer.out);
        for (std::size_t o = 0; o < layer.out; ++o) {
            double s = layer.biases[o];
            const double* w = layer.weights.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * prev[i];
            z[o] = s;
        }
        if (l + 1 < net.layers.size()) {
            for (double& v : z) v = v > 0.0 ? v : 0.0;
        } else {
            double zmax = z[0];
            for (double v : z) zmax = std::max(zmax, v);
            double sum = 0.0;
            for (double& v : z) {
                v = std::exp(v - zmax);
                sum += v;
            }
            for (double& v : z) v /= sum;
        }
        acts.push_back(std::move(z));
    }
    return acts;
}

}  // namespace detail

inline std::vector<double> mlp_predict_proba_row(const MlpNetwork& net, std::span<const double> x) {
    if (x.size() != net.input_size()) throw Error("mlp: input dimension mismatch");
    return detail::mlp_forward(net, x).back();
}

struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;  // flattened like MlpNetwork::flatten
};

/// Mean cross-entropy over the listed rows and its exact gradient.
inline LossGradient mlp_loss_gradient(const MlpNetwork& net, const NumMatrix& X, const Labels& y,
                                      std::span<const Index> rows) {
    LossGradient out;
    out.gradient.assign(net.parameter_count(), 0.0);
    if (rows.empty()) return out;
    std::vector<std::size_t> offset(net.layers.size());
    {
        std::size_t k = 0;
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            offset[l] = k;
            k += net.layers[l].weights.size() + net.layers[l].biases.size();
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (Index r : rows) {
        const auto acts = detail::mlp_forward(net, X.row(r));
        const auto& probs = acts.back();
        const auto label = static_cast<std::size_t>(y[r]);
        out.loss -= std::log(std::max(probs[label], std::numeric_limits<double>::min())) * inv;

        std::vector<double> delta = probs;
        delta[label] -= 1.0;
        for (std::size_t l = net.layers.size(); l-- > 0;) {
            const auto& layer = net.layers[l];
            const auto& input = acts[l];
            double* gw = out.gradient.data() + offset[l];
            double* gb = gw + layer.weights.size();
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = delta[o] * inv;
                if (d == 0.0) continue;
                for (std::size_t i = 0; i < layer.in; ++i) gw[o * layer.in + i] += d * input[i];
                gb[o] += d;
            }
            if (l == 0) break;
            std::vector<double> prev(layer.in, 0.0);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double* w = layer.weights.data() + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) prev[i] += w[i] * delta[o];
            }
            for (std::size_t i = 0; i < layer.in; ++i) {
                if (input[i] <= 0.0) prev[i] = 0.0;
            }
            delta = std::move(prev);
        }
    }
    return out;
}

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<double> train_accuracy;
    std::vector<double> val_accuracy;

    [[nodiscard]] std::size_t epochs() const { return train_loss.size(); }
};

struct MlpOptions {
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    std::vector<std::size_t> hidden_layers{32, 16};
    std::size_t patience = 20;
};

struct MlpModel {
    MlpNetwork network;
    TrainHistory history;
    std::size_t best_epoch = 0;
};

namespace detail {

struct LossAccuracy {
    double loss = 0.0;
    double accuracy = 0.0;
};

inline LossAccuracy mlp_score(const MlpNetwork& net, const NumMatrix& X, const Labels& y) {
    LossAccuracy s;
    if (X.rows() == 0) return s;
    std::size_t correct = 0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
        const auto p = detail::mlp_forward(net, X.row(r)).back();
        s.loss -= std::log(std::max(p[static_cast<std::size_t>(y[r])], std::numeric_limits<double>::min()));
        if (static_cast<Label>(argmax_tiebreak_low(p)) == y[r]) ++correct;
    }
    s.loss /= static_cast<double>(X.rows());
    s.accuracy = static_cast<double>(correct) / static_cast<double>(X.rows());
    return s;
}

inline bool all_finite(const MlpNetwork& net) {
    for (const auto& l : net.layers) {
        for (double w : l.weights) if (!std::isfinite(w)) return false;
        for (double b : l.biases) if (!std::isfinite(b)) return false;
    }
    return true;
}

inline constexpr double kDivergenceFactor = 100.0;

}  // namespace detail

/// Trains on (Xtr, ytr), early-stopping on validation loss. The weights of
/// the best validation epoch are restored; history keeps every epoch run.
/// Throws when the loss stops being finite or blows past 100x its starting
/// value.
inline MlpModel train_mlp(const NumMatrix& Xtr, const Labels& ytr, const NumMatrix& Xval, const Labels& yval,
                          const MlpOptions& opt, RngStream stream) {
    if (Xtr.rows() != ytr.size() || Xval.rows() != yval.size())
        throw Error("train_mlp: row count does not match label count");
    if (Xval.rows() > 0 && Xval.cols() != Xtr.cols()) throw Error("train_mlp: validation width mismatch");
    int present = 0;
    for (auto c : class_counts(ytr)) present += c > 0 ? 1 : 0;
    if (present < 2) throw Error("MLP training needs at least 2 classes");
    if (!(opt.learning_rate > 0.0)) throw Error("learning rate must be positive");
    if (opt.batch_size == 0) throw Error("batch size must be positive");
    require_labels(yval);

    std::vector<std::size_t> sizes{Xtr.cols()};
    sizes.insert(sizes.end(), opt.hidden_layers.begin(), opt.hidden_layers.end());
    sizes.push_back(kNumClasses);
    RngStream init_stream = stream.derive(0);
    RngStream order_stream = stream.derive(1);

    MlpModel model;
    model.network = init_mlp(sizes, init_stream);
    const double start_loss = detail::mlp_score(model.network, Xtr, ytr).loss;
    const double blowup = detail::kDivergenceFactor * std::max(start_loss, 1.0);
    auto diverged = [&] {
        char buf[96];
        std::snprintf(buf, sizeof buf, "MLP training diverged (learning_rate=%g)", opt.learning_rate);
        return Error(buf);
    };

    std::vector<double> params = model.network.flatten();
    std::vector<double> velocity(params.size(), 0.0);
    std::vector<double> best_params = params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    const IndexList all_rows = iota_indices(Xtr.rows());

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        const IndexList order = shuffle(all_rows, order_stream);
        for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
            const std::size_t end = std::min(order.size(), start + opt.batch_size);
            const std::span<const Index> batch(order.data() + start, end - start);
            const auto lg = mlp_loss_gradient(model.network, Xtr, ytr, batch);
            for (std::size_t k = 0; k < params.size(); ++k) {
                velocity[k] = opt.momentum * velocity[k] - opt.learning_rate * lg.gradient[k];
                params[k] += velocity[k];
            }
            model.network.unflatten(params);
        }
        if (!detail::all_finite(model.network)) throw diverged();
        const auto tr = detail::mlp_score(model.network, Xtr, ytr);
        const auto va = Xval.rows() > 0 ? detail::mlp_score(model.network, Xval, yval) : tr;
        if (!std::isfinite(tr.loss) || !std::isfinite(va.loss) || tr.loss > blowup) throw diverged();
        model.history.train_loss.push_back(tr.loss);
        model.history.val_loss.push_back(va.loss);
        model.history.train_accuracy.push_back(tr.accuracy);
        model.history.val_accuracy.push_back(va.accuracy);
        if (va.loss < best_val) {
            best_val = va.loss;
            best_params = params;
            model.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= opt.patience) {
            break;
        }
    }
    model.network.unflatten(best_params);
    return model;
}

}  // namespace oncograde

#endif  // ONCOGRADE_MODELS_MLP_HPP
