#ifndef ONCOGRADE_MODELS_MODEL_HPP
#define ONCOGRADE_MODELS_MODEL_HPP

// The common model contract: a recursive ModelSpec describes what to train,
// a TrainedModel is the immutable result. Every family answers
// predict_proba with length-3 rows summing to 1, and predict is always the
// low-index argmax of those rows.

#include "oncograde/core.hpp"
#include "oncograde/models/kernel.hpp"
#include "oncograde/models/mlp.hpp"
#include "oncograde/models/svm.hpp"
#include "oncograde/models/tree.hpp"
#include "oncograde/preprocess.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace oncograde {

enum class VotingMode { hard, soft };

inline std::string to_string(VotingMode m) { return m == VotingMode::hard ? "hard" : "soft"; }

inline VotingMode parse_voting_mode(const std::string& s) {
    if (s == "hard") return VotingMode::hard;
    if (s == "soft") return VotingMode::soft;
    throw Error("unknown voting mode '" + s + "' (expected hard or soft)");
}

struct Hyperparams {
    double learning_rate = 0.01;
    double min_child_weight = 1.0;
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    std::vector<std::size_t> hidden_layers{32, 16};
    double C = 1.0;
    std::optional<double> gamma;  // nullopt = "scale"
    int degree = 3;
    double coef0 = 0.0;
    std::size_t max_depth = 8;
    std::size_t n_estimators = 25;
    VotingMode voting_mode = VotingMode::hard;
    std::uint64_t seed = 0;

    void validate() const {
        auto positive = [](double v, const char* name) {
            if (!(v > 0.0) || !std::isfinite(v)) throw Error(std::string(name) + " must be positive");
        };
        positive(learning_rate, "learning_rate");
        positive(min_child_weight, "min_child_weight");
        positive(C, "C");
        if (gamma) positive(*gamma, "gamma");
        if (!std::isfinite(coef0)) throw Error("coef0 must be finite");
        if (epochs == 0) throw Error("epochs must be at least 1");
        if (batch_size == 0) throw Error("batch_size must be at least 1");
        if (degree < 1) throw Error("degree must be at least 1");
        if (n_estimators == 0) throw Error("n_estimators must be at least 1");
        for (auto h : hidden_layers) {
            if (h == 0) throw Error("hidden layer sizes must be positive");
        }
    }
};

enum class Family { mlp, svm_ovr, tree, bagging, voting };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::mlp: return "mlp";
        case Family::svm_ovr: return "svm_ovr";
        case Family::tree: return "tree";
        case Family::bagging: return "bagging";
        case Family::voting: return "voting";
    }
    return "?";
}

inline Family parse_family(const std::string& s) {
    for (Family f : {Family::mlp, Family::svm_ovr, Family::tree, Family::bagging, Family::voting}) {
        if (to_string(f) == s) return f;
    }
    throw Error("unknown model family '" + s + "'");
}

/// What to train. Bagging holds its base learner as the single child;
/// voting holds one child per member.
struct ModelSpec {
    Family family = Family::tree;
    Hyperparams hp;
    KernelKind kernel = KernelKind::rbf;
    std::vector<ModelSpec> children;

    /// Same spec with learning rate and min child weight replaced everywhere.
    [[nodiscard]] ModelSpec with_rates(double learning_rate, double min_child_weight) const {
        ModelSpec out = *this;
        out.hp.learning_rate = learning_rate;
        out.hp.min_child_weight = min_child_weight;
        for (auto& c : out.children) c = c.with_rates(learning_rate, min_child_weight);
        return out;
    }
};

/// The seven paper configurations by CLI name.
inline const std::vector<std::string>& model_names() {
    static const std::vector<std::string> names{"dnn",        "voting",     "bagging",    "svm_rbf",
                                                "svm_linear", "svm_poly",   "svm_sigmoid"};
    return names;
}

inline ModelSpec mlp_spec(const Hyperparams& hp) { return {Family::mlp, hp, KernelKind::rbf, {}}; }
inline ModelSpec svm_spec(const Hyperparams& hp, KernelKind k) { return {Family::svm_ovr, hp, k, {}}; }
inline ModelSpec tree_spec(const Hyperparams& hp) { return {Family::tree, hp, KernelKind::rbf, {}}; }
inline ModelSpec bagging_spec(const Hyperparams& hp, ModelSpec base) {
    return {Family::bagging, hp, KernelKind::rbf, {std::move(base)}};
}
inline ModelSpec voting_spec(const Hyperparams& hp, std::vector<ModelSpec> members) {
    return {Family::voting, hp, KernelKind::rbf, std::move(members)};
}

inline ModelSpec spec_from_name(const std::string& name, const Hyperparams& hp) {
    hp.validate();
    if (name == "dnn") return mlp_spec(hp);
    if (name == "svm_rbf") return svm_spec(hp, KernelKind::rbf);
    if (name == "svm_linear") return svm_spec(hp, KernelKind::linear);
    if (name == "svm_poly") return svm_spec(hp, KernelKind::polynomial);
    if (name == "svm_sigmoid") return svm_spec(hp, KernelKind::sigmoid);
    if (name == "bagging") return bagging_spec(hp, tree_spec(hp));
    if (name == "voting")
        return voting_spec(hp, {mlp_spec(hp), svm_spec(hp, KernelKind::rbf), bagging_spec(hp, tree_spec(hp))});
    std::string valid;
    for (const auto& n : model_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw Error("unknown model '" + name + "' (valid: " + valid + ")");
}

// ---------------------------------------------------------------------------
// Trained models
// ---------------------------------------------------------------------------

struct TrainedModel;

struct BaggingModel {
    std::vector<TrainedModel> members;
};

struct VotingModel {
    std::vector<TrainedModel> members;
    VotingMode mode = VotingMode::hard;
};

struct TrainedModel {
    std::size_t n_features = 0;
    std::variant<MlpModel, SvmOvr, TreeModel, BaggingModel, VotingModel> body;

    [[nodiscard]] Family family() const {
        switch (body.index()) {
            case 0: return Family::mlp;
            case 1: return Family::svm_ovr;
            case 2: return Family::tree;
            case 3: return Family::bagging;
            default: return Family::voting;
        }
    }
};

using ProbaRow = std::array<double, kNumClasses>;

inline Label predict_row(const TrainedModel& m, std::span<const double> x);

inline ProbaRow predict_proba_row(const TrainedModel& m, std::span<const double> x) {
    if (x.size() != m.n_features)
        throw Error("predict: expected " + std::to_string(m.n_features) + " features, got " +
                    std::to_string(x.size()));
    return std::visit(
        [&](const auto& body) -> ProbaRow {
            using T = std::decay_t<decltype(body)>;
            ProbaRow p{};
            if constexpr (std::is_same_v<T, MlpModel>) {
                const auto out = mlp_predict_proba_row(body.network, x);
                std::copy(out.begin(), out.end(), p.begin());
            } else if constexpr (std::is_same_v<T, SvmOvr>) {
                const auto d = body.decisions(x);
                const double dmax = std::max({d[0], d[1], d[2]});
                double sum = 0.0;
                for (std::size_t c = 0; c < kNumClasses; ++c) sum += p[c] = std::exp(d[c] - dmax);
                for (double& v : p) v /= sum;
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                p = body.proba(x);
            } else if constexpr (std::is_same_v<T, BaggingModel>) {
                for (const auto& member : body.members) {
                    const auto q = predict_proba_row(member, x);
                    for (std::size_t c = 0; c < kNumClasses; ++c) p[c] += q[c];
                }
                for (double& v : p) v /= static_cast<double>(body.members.size());
            } else {
                if (body.mode == VotingMode::soft) {
                    for (const auto& member : body.members) {
                        const auto q = predict_proba_row(member, x);
                        for (std::size_t c = 0; c < kNumClasses; ++c) p[c] += q[c];
                    }
                } else {
                    for (const auto& member : body.members) p[static_cast<std::size_t>(predict_row(member, x))] += 1.0;
                }
                for (double& v : p) v /= static_cast<double>(body.members.size());
            }
            return p;
        },
        m.body);
}

inline Label predict_row(const TrainedModel& m, std::span<const double> x) {
    const auto p = predict_proba_row(m, x);
    return static_cast<Label>(argmax_tiebreak_low(p));
}

inline NumMatrix predict_proba(const TrainedModel& m, const NumMatrix& X) {
    if (X.rows() > 0 && X.cols() != m.n_features)
        throw Error("predict: expected " + std::to_string(m.n_features) + " features, got " +
                    std::to_string(X.cols()));
    std::vector<double> out;
    out.reserve(X.rows() * kNumClasses);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        const auto p = predict_proba_row(m, X.row(r));
        out.insert(out.end(), p.begin(), p.end());
    }
    return NumMatrix(X.rows(), kNumClasses, std::move(out));
}

inline Labels predict(const TrainedModel& m, const NumMatrix& X) {
    const NumMatrix P = predict_proba(m, X);
    Labels out(P.rows());
    for (std::size_t r = 0; r < P.rows(); ++r) out[r] = static_cast<Label>(argmax_tiebreak_low(P.row(r)));
    return out;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

inline KernelSpec resolve_kernel(const ModelSpec& spec, const NumMatrix& X) {
    KernelSpec k;
    k.kind = spec.kernel;
    k.gamma = spec.hp.gamma ? *spec.hp.gamma : gamma_scale(X);
    k.degree = spec.hp.degree;
    k.coef0 = spec.hp.coef0;
    return k;
}

inline MlpOptions mlp_options(const Hyperparams& hp) {
    MlpOptions o;
    o.learning_rate = hp.learning_rate;
    o.epochs = hp.epochs;
    o.batch_size = hp.batch_size;
    o.hidden_layers = hp.hidden_layers;
    return o;
}

inline TrainedModel train_model(const ModelSpec& spec, const NumMatrix& X, const Labels& y, RngStream stream);

namespace detail {
// Below this many rows the MLP validates on its own training set.
inline constexpr std::size_t kMlpHoldoutMinRows = 20;
inline constexpr double kMlpHoldoutFraction = 0.1;
}  // namespace detail

/// MLP with an internal stratified 10% hold-out for early stopping.
inline TrainedModel train_mlp_model(const Hyperparams& hp, const NumMatrix& X, const Labels& y, RngStream stream) {
    TrainedModel m;
    m.n_features = X.cols();
    if (X.rows() < detail::kMlpHoldoutMinRows) {
        m.body = train_mlp(X, y, X, y, mlp_options(hp), stream.derive(1));
        return m;
    }
    RngStream split_stream = stream.derive(0);
    const auto split = stratified_split(y, detail::kMlpHoldoutFraction, split_stream);
    m.body = train_mlp(X.select_rows(split.train), select_labels(y, split.train), X.select_rows(split.test),
                       select_labels(y, split.test), mlp_options(hp), stream.derive(1));
    return m;
}

/// Trains one member per precomputed bootstrap sample.
inline TrainedModel train_bagging_on_samples(const ModelSpec& base, const NumMatrix& X, const Labels& y,
                                             const std::vector<IndexList>& samples, RngStream stream) {
    if (samples.empty()) throw Error("bagging needs at least one estimator");
    BaggingModel bag;
    bag.members.resize(samples.size());
    parallel_for(samples.size(), [&](std::size_t m) {
        const NumMatrix Xb = X.select_rows(samples[m]);
        const Labels yb = select_labels(y, samples[m]);
        const auto counts = class_counts(yb);
        int present = 0;
        Label only = 0;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            if (counts[c] > 0) {
                ++present;
                only = static_cast<Label>(c);
            }
        }
        if (present <= 1) {
            bag.members[m] = TrainedModel{X.cols(), TreeModel::constant(only, X.cols())};
        } else {
            bag.members[m] = train_model(base, Xb, yb, stream.derive(m).derive(1));
        }
    });
    TrainedModel out;
    out.n_features = X.cols();
    out.body = std::move(bag);
    return out;
}

inline TrainedModel train_bagging(const ModelSpec& base, const NumMatrix& X, const Labels& y,
                                  std::size_t n_estimators, RngStream stream) {
    if (n_estimators == 0) throw Error("bagging needs at least one estimator");
    if (X.rows() == 0) throw Error("bagging: empty training set");
    std::vector<IndexList> samples(n_estimators);
    for (std::size_t m = 0; m < n_estimators; ++m) {
        RngStream draw = stream.derive(m);
        samples[m].resize(X.rows());
        for (auto& idx : samples[m]) idx = static_cast<Index>(draw.uniform_index(X.rows()));
    }
    return train_bagging_on_samples(base, X, y, samples, stream);
}

inline TrainedModel train_voting(const std::vector<ModelSpec>& members, VotingMode mode, const NumMatrix& X,
                                 const Labels& y, RngStream stream) {
    if (members.empty()) throw Error("voting needs at least one member");
    VotingModel vote;
    vote.mode = mode;
    vote.members.resize(members.size());
    parallel_for(members.size(), [&](std::size_t m) { vote.members[m] = train_model(members[m], X, y, stream.derive(m)); });
    TrainedModel out;
    out.n_features = X.cols();
    out.body = std::move(vote);
    return out;
}

inline TrainedModel train_model(const ModelSpec& spec, const NumMatrix& X, const Labels& y, RngStream stream) {
    spec.hp.validate();
    if (X.rows() != y.size()) throw Error("train: row count does not match label count");
    if (X.rows() == 0) throw Error("train: empty training set");
    require_labels(y);
    switch (spec.family) {
        case Family::mlp: return train_mlp_model(spec.hp, X, y, stream);
        case Family::svm_ovr: return TrainedModel{X.cols(), train_svm_ovr(X, y, resolve_kernel(spec, X), spec.hp.C)};
        case Family::tree:
            return TrainedModel{X.cols(), train_tree(X, y, {}, {spec.hp.max_depth, spec.hp.min_child_weight})};
        case Family::bagging: {
            if (spec.children.size() != 1) throw Error("bagging spec needs exactly one base learner");
            return train_bagging(spec.children.front(), X, y, spec.hp.n_estimators, stream);
        }
        case Family::voting: return train_voting(spec.children, spec.hp.voting_mode, X, y, stream);
    }
    throw Error("unknown model family");
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline constexpr const char* kModelFormat = "oncograde-model";
inline constexpr int kModelFormatVersion = 1;

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson matrix_to_json(const NumMatrix& m) {
    return ojson{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline NumMatrix matrix_from_json(const ojson& j) {
    return NumMatrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                     j.at("data").get<std::vector<double>>());
}

inline ojson model_body_to_json(const TrainedModel& m);

inline ojson model_body_to_json(const TrainedModel& m) {
    ojson j;
    j["family"] = to_string(m.family());
    j["n_features"] = m.n_features;
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, MlpModel>) {
                auto layers = ojson::array();
                for (const auto& l : body.network.layers)
                    layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"biases", l.biases}});
                j["layers"] = std::move(layers);
                j["best_epoch"] = body.best_epoch;
                j["history"] = {{"train_loss", body.history.train_loss},
                                {"val_loss", body.history.val_loss},
                                {"train_accuracy", body.history.train_accuracy},
                                {"val_accuracy", body.history.val_accuracy}};
            } else if constexpr (std::is_same_v<T, SvmOvr>) {
                auto machines = ojson::array();
                for (const auto& mach : body.machines) {
                    machines.push_back({{"kernel",
                                         {{"kind", to_string(mach.kernel.kind)},
                                          {"gamma", mach.kernel.gamma},
                                          {"degree", mach.kernel.degree},
                                          {"coef0", mach.kernel.coef0}}},
                                        {"bias", mach.bias},
                                        {"support_indices", mach.support_indices},
                                        {"coefficients", mach.coefficients},
                                        {"support_vectors", matrix_to_json(mach.support_vectors)},
                                        {"converged", mach.converged},
                                        {"iterations", mach.iterations}});
                }
                j["machines"] = std::move(machines);
            } else if constexpr (std::is_same_v<T, TreeModel>) {
                auto nodes = ojson::array();
                for (const auto& n : body.nodes) {
                    nodes.push_back({{"feature", n.feature},
                                     {"threshold", n.threshold},
                                     {"left", n.left},
                                     {"right", n.right},
                                     {"histogram", n.histogram}});
                }
                j["nodes"] = std::move(nodes);
            } else {
                if constexpr (std::is_same_v<T, VotingModel>) j["mode"] = to_string(body.mode);
                auto members = ojson::array();
                for (const auto& member : body.members) members.push_back(model_body_to_json(member));
                j["members"] = std::move(members);
            }
        },
        m.body);
    return j;
}

inline TrainedModel model_body_from_json(const ojson& j) {
    TrainedModel m;
    m.n_features = j.at("n_features").get<std::size_t>();
    const Family family = parse_family(j.at("family").get<std::string>());
    switch (family) {
        case Family::mlp: {
            MlpModel body;
            for (const auto& l : j.at("layers")) {
                MlpLayer layer{l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                               l.at("weights").get<std::vector<double>>(), l.at("biases").get<std::vector<double>>()};
                if (layer.weights.size() != layer.in * layer.out || layer.biases.size() != layer.out)
                    throw Error("model json: malformed MLP layer");
                body.network.layers.push_back(std::move(layer));
            }
            body.best_epoch = j.at("best_epoch").get<std::size_t>();
            const auto& h = j.at("history");
            body.history.train_loss = h.at("train_loss").get<std::vector<double>>();
            body.history.val_loss = h.at("val_loss").get<std::vector<double>>();
            body.history.train_accuracy = h.at("train_accuracy").get<std::vector<double>>();
            body.history.val_accuracy = h.at("val_accuracy").get<std::vector<double>>();
            m.body = std::move(body);
            break;
        }
        case Family::svm_ovr: {
            SvmOvr body;
            body.n_features = m.n_features;
            const auto& machines = j.at("machines");
            if (machines.size() != kNumClasses) throw Error("model json: SVM needs 3 machines");
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                const auto& mj = machines[c];
                auto& mach = body.machines[c];
                const auto& kj = mj.at("kernel");
                mach.kernel.kind = parse_kernel_kind(kj.at("kind").get<std::string>());
                mach.kernel.gamma = kj.at("gamma").get<double>();
                mach.kernel.degree = kj.at("degree").get<int>();
                mach.kernel.coef0 = kj.at("coef0").get<double>();
                mach.bias = mj.at("bias").get<double>();
                mach.support_indices = mj.at("support_indices").get<std::vector<std::size_t>>();
                mach.coefficients = mj.at("coefficients").get<std::vector<double>>();
                mach.support_vectors = matrix_from_json(mj.at("support_vectors"));
                mach.converged = mj.at("converged").get<bool>();
                mach.iterations = mj.at("iterations").get<std::size_t>();
                if (mach.support_vectors.rows() != mach.coefficients.size())
                    throw Error("model json: SVM coefficient count mismatch");
            }
            m.body = std::move(body);
            break;
        }
        case Family::tree: {
            TreeModel body;
            body.n_features = m.n_features;
            for (const auto& nj : j.at("nodes")) {
                TreeNode n;
                n.feature = nj.at("feature").get<int>();
                n.threshold = nj.at("threshold").get<double>();
                n.left = nj.at("left").get<int>();
                n.right = nj.at("right").get<int>();
                n.histogram = nj.at("histogram").get<ClassHistogram>();
                body.nodes.push_back(n);
            }
            if (body.nodes.empty()) throw Error("model json: tree has no nodes");
            m.body = std::move(body);
            break;
        }
        case Family::bagging:
        case Family::voting: {
            std::vector<TrainedModel> members;
            for (const auto& mj : j.at("members")) members.push_back(model_body_from_json(mj));
            if (members.empty()) throw Error("model json: ensemble has no members");
            if (family == Family::bagging) {
                m.body = BaggingModel{std::move(members)};
            } else {
                m.body = VotingModel{std::move(members), parse_voting_mode(j.at("mode").get<std::string>())};
            }
            break;
        }
    }
    return m;
}

}  // namespace detail

/// Versioned model document. The optional preprocessor lets `evaluate`
/// replay scaling and engineered columns on raw rows.
inline nlohmann::ordered_json model_to_json(const TrainedModel& m, const FittedPreprocessor* pre = nullptr) {
    nlohmann::ordered_json j;
    j["format"] = kModelFormat;
    j["version"] = kModelFormatVersion;
    if (pre) {
        auto pairs = nlohmann::ordered_json::array();
        for (const auto& p : pre->engineered) pairs.push_back({{"i", p.i}, {"j", p.j}, {"r", p.r}});
        j["preprocess"] = {{"input_names", pre->input_names},
                           {"output_names", pre->output_names},
                           {"min", pre->scaling.min},
                           {"max", pre->scaling.max},
                           {"engineered_pairs", std::move(pairs)}};
    }
    j["model"] = detail::model_body_to_json(m);
    return j;
}

struct LoadedModel {
    TrainedModel model;
    std::optional<FittedPreprocessor> preprocessor;
};

inline LoadedModel model_from_json(const nlohmann::ordered_json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat) throw Error("not an oncograde model document");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw Error("unsupported model format version " + std::to_string(j.at("version").get<int>()));
        LoadedModel out{detail::model_body_from_json(j.at("model")), std::nullopt};
        if (j.contains("preprocess")) {
            const auto& pj = j.at("preprocess");
            FittedPreprocessor pre;
            pre.input_names = pj.at("input_names").get<std::vector<std::string>>();
            pre.output_names = pj.at("output_names").get<std::vector<std::string>>();
            pre.scaling.min = pj.at("min").get<std::vector<double>>();
            pre.scaling.max = pj.at("max").get<std::vector<double>>();
            for (const auto& p : pj.at("engineered_pairs"))
                pre.engineered.push_back({p.at("i").get<std::size_t>(), p.at("j").get<std::size_t>(), p.at("r").get<double>()});
            out.preprocessor = std::move(pre);
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("model json: ") + e.what());
    }
}

}  // namespace oncograde

#endif  // ONCOGRADE_MODELS_MODEL_HPP
