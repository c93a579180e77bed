#ifndef ONCOGRADE_CLI_HPP
#define ONCOGRADE_CLI_HPP

// Batch front door. Each subcommand reads a JSON run config, resolves every
// default, runs one experiment and writes CSV/JSON/SVG artifacts plus a
// manifest with SHA-256 digests. Exit codes: 0 ok, 1 runtime failure,
// 2 usage or config error.

#include "oncograde/core.hpp"
#include "oncograde/dataset.hpp"
#include "oncograde/eval.hpp"
#include "oncograde/models/model.hpp"
#include "oncograde/preprocess.hpp"
#include "oncograde/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace oncograde::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

class ConfigError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    std::uint64_t seed = 42;
    std::optional<std::string> csv_path;
    std::size_t synthetic_n = 1000;
    std::array<double, kNumClasses> class_proportions = kDefaultProportions;
    PipelineOptions preprocess;
    std::string model_name = "dnn";
    Hyperparams hp;
    bool hp_seed_explicit = false;
    std::size_t k = 5;
    std::vector<double> curve_fractions = default_curve_fractions();
    std::size_t curve_repeats = 3;
    std::vector<double> sweep_learning_rates{0.001, 0.01, 0.1};
    std::vector<double> sweep_min_child_weights{1.0, 5.0, 10.0};
    std::string output_dir = "out";
    std::optional<std::string> model_path;
};

namespace detail {

inline void reject_unknown_keys(const ojson& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || item.key() == k;
        if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
}

template <class T>
T get_or(const ojson& j, const char* key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("invalid value for '" + std::string(key) + "' in " + where);
    }
}

inline std::size_t get_count(const ojson& j, const char* key, std::size_t fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("'" + std::string(key) + "' in " + where + " must be a non-negative integer");
    return v.get<std::size_t>();
}

inline std::string model_list() {
    std::string out;
    for (const auto& n : model_names()) out += (out.empty() ? "" : ", ") + n;
    return out;
}

}  // namespace detail

inline Hyperparams parse_hyperparams(const ojson& j, Hyperparams hp, bool& seed_explicit) {
    const std::string where = "model.hyperparams";
    detail::reject_unknown_keys(j,
                                {"learning_rate", "min_child_weight", "epochs", "batch_size", "hidden_layers", "C",
                                 "gamma", "degree", "coef0", "max_depth", "n_estimators", "voting_mode", "seed"},
                                where);
    hp.learning_rate = detail::get_or(j, "learning_rate", hp.learning_rate, where);
    hp.min_child_weight = detail::get_or(j, "min_child_weight", hp.min_child_weight, where);
    hp.epochs = detail::get_count(j, "epochs", hp.epochs, where);
    hp.batch_size = detail::get_count(j, "batch_size", hp.batch_size, where);
    hp.hidden_layers = detail::get_or(j, "hidden_layers", hp.hidden_layers, where);
    hp.C = detail::get_or(j, "C", hp.C, where);
    if (j.contains("gamma")) {
        const auto& g = j.at("gamma");
        if (g.is_string() && g.get<std::string>() == "scale") hp.gamma.reset();
        else if (g.is_number()) hp.gamma = g.get<double>();
        else throw ConfigError("gamma must be a positive number or \"scale\"");
    }
    hp.degree = detail::get_or(j, "degree", hp.degree, where);
    hp.coef0 = detail::get_or(j, "coef0", hp.coef0, where);
    hp.max_depth = detail::get_count(j, "max_depth", hp.max_depth, where);
    hp.n_estimators = detail::get_count(j, "n_estimators", hp.n_estimators, where);
    if (j.contains("voting_mode")) {
        try {
            hp.voting_mode = parse_voting_mode(detail::get_or<std::string>(j, "voting_mode", "hard", where));
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
    }
    if (j.contains("seed")) {
        hp.seed = detail::get_or<std::uint64_t>(j, "seed", 0, where);
        seed_explicit = true;
    }
    try {
        hp.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("model.hyperparams: ") + e.what());
    }
    return hp;
}

/// Accepts a run config or a manifest (whose resolved_config is used).
inline RunConfig parse_config(const ojson& root) {
    const ojson& j = root.contains("resolved_config") ? root.at("resolved_config") : root;
    detail::reject_unknown_keys(j, {"seed", "data", "preprocess", "model", "eval", "output_dir", "model_path"}, "config");
    RunConfig cfg;
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", cfg.seed, "config");
    cfg.output_dir = detail::get_or(j, "output_dir", cfg.output_dir, "config");
    if (j.contains("model_path")) cfg.model_path = detail::get_or<std::string>(j, "model_path", "", "config");

    if (j.contains("data")) {
        const auto& d = j.at("data");
        detail::reject_unknown_keys(d, {"csv_path", "synthetic"}, "data");
        const bool has_csv = d.contains("csv_path"), has_synth = d.contains("synthetic");
        if (has_csv == has_synth) throw ConfigError("data must name exactly one source: csv_path or synthetic");
        if (has_csv) {
            cfg.csv_path = detail::get_or<std::string>(d, "csv_path", "", "data");
        } else {
            const auto& s = d.at("synthetic");
            detail::reject_unknown_keys(s, {"n", "class_proportions"}, "data.synthetic");
            cfg.synthetic_n = detail::get_count(s, "n", cfg.synthetic_n, "data.synthetic");
            cfg.class_proportions = detail::get_or(s, "class_proportions", cfg.class_proportions, "data.synthetic");
        }
    }

    if (j.contains("preprocess")) {
        const auto& p = j.at("preprocess");
        detail::reject_unknown_keys(p, {"order", "smote_k", "corr_hi", "corr_lo", "test_fraction"}, "preprocess");
        try {
            cfg.preprocess.order = parse_pipeline_order(detail::get_or<std::string>(p, "order", "paper_order", "preprocess"));
        } catch (const ConfigError&) {
            throw;
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        cfg.preprocess.smote_k = detail::get_count(p, "smote_k", cfg.preprocess.smote_k, "preprocess");
        cfg.preprocess.corr_hi = detail::get_or(p, "corr_hi", cfg.preprocess.corr_hi, "preprocess");
        cfg.preprocess.corr_lo = detail::get_or(p, "corr_lo", cfg.preprocess.corr_lo, "preprocess");
        cfg.preprocess.test_fraction = detail::get_or(p, "test_fraction", cfg.preprocess.test_fraction, "preprocess");
        if (cfg.preprocess.smote_k < 1) throw ConfigError("preprocess.smote_k must be at least 1");
        if (!(cfg.preprocess.test_fraction > 0.0 && cfg.preprocess.test_fraction < 1.0))
            throw ConfigError("preprocess.test_fraction must lie in (0, 1)");
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::reject_unknown_keys(m, {"name", "hyperparams"}, "model");
        cfg.model_name = detail::get_or(m, "name", cfg.model_name, "model");
        if (m.contains("hyperparams")) cfg.hp = parse_hyperparams(m.at("hyperparams"), cfg.hp, cfg.hp_seed_explicit);
    }
    bool known = false;
    for (const auto& n : model_names()) known = known || n == cfg.model_name;
    if (!known) throw ConfigError("unknown model '" + cfg.model_name + "'; valid models: " + detail::model_list());

    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        detail::reject_unknown_keys(e, {"k", "curve_fractions", "curve_repeats", "sweep"}, "eval");
        cfg.k = detail::get_count(e, "k", cfg.k, "eval");
        cfg.curve_fractions = detail::get_or(e, "curve_fractions", cfg.curve_fractions, "eval");
        cfg.curve_repeats = detail::get_count(e, "curve_repeats", cfg.curve_repeats, "eval");
        if (e.contains("sweep")) {
            const auto& s = e.at("sweep");
            detail::reject_unknown_keys(s, {"learning_rate", "min_child_weight"}, "eval.sweep");
            cfg.sweep_learning_rates = detail::get_or(s, "learning_rate", cfg.sweep_learning_rates, "eval.sweep");
            cfg.sweep_min_child_weights = detail::get_or(s, "min_child_weight", cfg.sweep_min_child_weights, "eval.sweep");
        }
        if (cfg.k < 2) throw ConfigError("eval.k must be at least 2");
        if (cfg.curve_repeats < 1) throw ConfigError("eval.curve_repeats must be at least 1");
    }
    if (!cfg.hp_seed_explicit) cfg.hp.seed = cfg.seed;
    return cfg;
}

inline ojson config_to_json(const RunConfig& cfg) {
    ojson j;
    j["seed"] = cfg.seed;
    if (cfg.csv_path) {
        j["data"] = {{"csv_path", *cfg.csv_path}};
    } else {
        j["data"] = {{"synthetic", {{"n", cfg.synthetic_n}, {"class_proportions", cfg.class_proportions}}}};
    }
    j["preprocess"] = {{"order", to_string(cfg.preprocess.order)},
                       {"smote_k", cfg.preprocess.smote_k},
                       {"corr_hi", cfg.preprocess.corr_hi},
                       {"corr_lo", cfg.preprocess.corr_lo},
                       {"test_fraction", cfg.preprocess.test_fraction}};
    ojson hp;
    hp["learning_rate"] = cfg.hp.learning_rate;
    hp["min_child_weight"] = cfg.hp.min_child_weight;
    hp["epochs"] = cfg.hp.epochs;
    hp["batch_size"] = cfg.hp.batch_size;
    hp["hidden_layers"] = cfg.hp.hidden_layers;
    hp["C"] = cfg.hp.C;
    if (cfg.hp.gamma) hp["gamma"] = *cfg.hp.gamma;
    else hp["gamma"] = "scale";
    hp["degree"] = cfg.hp.degree;
    hp["coef0"] = cfg.hp.coef0;
    hp["max_depth"] = cfg.hp.max_depth;
    hp["n_estimators"] = cfg.hp.n_estimators;
    hp["voting_mode"] = to_string(cfg.hp.voting_mode);
    hp["seed"] = cfg.hp.seed;
    j["model"] = {{"name", cfg.model_name}, {"hyperparams", std::move(hp)}};
    j["eval"] = {{"k", cfg.k},
                 {"curve_fractions", cfg.curve_fractions},
                 {"curve_repeats", cfg.curve_repeats},
                 {"sweep", {{"learning_rate", cfg.sweep_learning_rates}, {"min_child_weight", cfg.sweep_min_child_weights}}}};
    j["output_dir"] = cfg.output_dir;
    if (cfg.model_path) j["model_path"] = *cfg.model_path;
    return j;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    try {
        return parse_config(ojson::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Artifacts
// ---------------------------------------------------------------------------

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes files atomically (temp file, then rename) and remembers them so a
/// failed run can remove everything it produced.
class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    ArtifactWriter(const ArtifactWriter&) = delete;
    ArtifactWriter& operator=(const ArtifactWriter&) = delete;

    ~ArtifactWriter() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& a : written_) fs::remove(dir_ / a.name, ec);
        if (manifest_written_) fs::remove(dir_ / "manifest.json", ec);
    }

    void write(const std::string& name, const std::string& bytes) {
        const fs::path target = dir_ / name;
        const fs::path tmp = dir_ / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write " + tmp.string());
            out << bytes;
            if (!out.flush()) throw Error("write failed for " + tmp.string());
        }
        fs::rename(tmp, target);
        for (auto& a : written_) {
            if (a.name == name) {
                a.sha256 = sha256_hex(bytes);
                a.bytes = bytes.size();
                return;
            }
        }
        written_.push_back({name, sha256_hex(bytes), bytes.size()});
    }

    void write_json(const std::string& name, const ojson& j) { write(name, j.dump(2) + "\n"); }

    void write_manifest(const std::string& command, const ojson& resolved, double seconds) {
        ojson m;
        m["tool"] = "oncograde";
        m["version"] = kVersion;
        m["command"] = command;
        m["resolved_config"] = resolved;
        auto arts = ojson::array();
        for (const auto& a : written_) arts.push_back({{"path", a.name}, {"sha256", a.sha256}, {"bytes", a.bytes}});
        m["artifacts"] = std::move(arts);
        m["duration_seconds"] = seconds;
        const std::string bytes = m.dump(2) + "\n";
        const fs::path tmp = dir_ / "manifest.json.tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write manifest");
            out << bytes;
        }
        fs::rename(tmp, dir_ / "manifest.json");
        manifest_written_ = true;
    }

    void commit() { committed_ = true; }

    [[nodiscard]] const fs::path& dir() const { return dir_; }

private:
    struct Artifact {
        std::string name;
        std::string sha256;
        std::size_t bytes = 0;
    };
    fs::path dir_;
    std::vector<Artifact> written_;
    bool committed_ = false;
    bool manifest_written_ = false;
};

// ---------------------------------------------------------------------------
// Charts for artifacts
// ---------------------------------------------------------------------------

inline std::string confusion_svg(const ConfusionMatrix& cm, const std::string& title) {
    svg::Heatmap h;
    h.title = title;
    h.labels = Schema::lung_cancer().label_values;
    for (std::size_t r = 0; r < kNumClasses; ++r)
        for (std::size_t c = 0; c < kNumClasses; ++c) h.cells[r][c] = static_cast<double>(cm.counts[r][c]);
    return svg::render(svg::ChartKind::heatmap3x3, h);
}

inline std::string slug(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else if (!out.empty() && out.back() != '_') out.push_back('_');
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

namespace detail {
inline constexpr std::uint64_t kModelTask = 200;
inline constexpr std::uint64_t kCvTask = 300;
inline constexpr std::uint64_t kCurveTask = 400;
inline constexpr std::uint64_t kSweepTask = 500;
}  // namespace detail

inline Dataset load_data(const RunConfig& cfg) {
    if (cfg.csv_path) return load_csv(*cfg.csv_path);
    return synth_generate(cfg.synthetic_n, cfg.seed, cfg.class_proportions);
}

/// Rows used by cv/curve/sweep: every prepared row under paper_order (the
/// whole set was scaled and balanced together), the training rows under
/// leak_safe.
inline LabeledMatrix analysis_rows(const PreparedData& p) {
    if (p.order == PipelineOrder::leak_safe) return {p.X_train, p.y_train};
    LabeledMatrix out{NumMatrix::vstack(p.X_train, p.X_test), p.y_train};
    out.y.insert(out.y.end(), p.y_test.begin(), p.y_test.end());
    return out;
}

inline ModelSpec model_spec(const RunConfig& cfg) { return spec_from_name(cfg.model_name, cfg.hp); }

inline RngStream model_stream(const RunConfig& cfg) { return RngStream::derive(cfg.hp.seed, detail::kModelTask); }

inline void cmd_profile(const RunConfig& cfg, ArtifactWriter& w) {
    const Dataset d = load_data(cfg);
    const NumMatrix scaled = apply_minmax(d.X, fit_minmax(d.X));
    const auto eng = engineer_features(scaled, pearson_matrix(scaled), cfg.preprocess.corr_hi, cfg.preprocess.corr_lo);
    {
        std::ostringstream csv;
        write_correlation_csv(csv, eng.report, d.feature_names);
        w.write("correlation.csv", csv.str());
    }
    w.write_json("correlation.json", correlation_to_json(eng.report, d.feature_names));

    const auto& labels = Schema::lung_cancer().label_values;
    std::ostringstream hist;
    hist << "feature,class,bin,lower,upper,count\n";
    for (std::size_t f = 0; f < d.feature_names.size(); ++f) {
        const auto col = d.X.column(f);
        const bool is_age = d.feature_names[f] == "Age";
        std::vector<std::string> bins;
        std::vector<double> lower, upper;
        std::vector<std::array<double, kNumClasses>> counts;
        if (is_age) {
            const double lo = *std::min_element(col.begin(), col.end());
            const double hi = *std::max_element(col.begin(), col.end());
            const double width = hi > lo ? (hi - lo) / 10.0 : 1.0;
            counts.assign(10, {});
            for (int b = 0; b < 10; ++b) {
                lower.push_back(lo + width * b);
                upper.push_back(b == 9 ? (hi > lo ? hi : lo + 10.0) : lo + width * (b + 1));
                bins.push_back(svg::tick(lower.back()) + "-" + svg::tick(upper.back()));
            }
            for (std::size_t r = 0; r < col.size(); ++r) {
                const auto b = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor((col[r] - lo) / width)));
                counts[b][static_cast<std::size_t>(d.y[r])] += 1.0;
            }
        } else {
            counts.assign(9, {});
            for (int b = 1; b <= 9; ++b) {
                bins.push_back(std::to_string(b));
                lower.push_back(b - 0.5);
                upper.push_back(b + 0.5);
            }
            for (std::size_t r = 0; r < col.size(); ++r) {
                const auto level = static_cast<std::size_t>(std::clamp(std::lround(col[r]), 1L, 9L));
                counts[level - 1][static_cast<std::size_t>(d.y[r])] += 1.0;
            }
        }
        for (std::size_t b = 0; b < bins.size(); ++b) {
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                hist << oncograde::detail::csv_escape(d.feature_names[f]) << ',' << labels[c] << ',' << bins[b] << ','
                     << oncograde::detail::format_real(lower[b]) << ',' << oncograde::detail::format_real(upper[b])
                     << ',' << static_cast<long long>(counts[b][c]) << '\n';
            }
        }
        svg::BarChart chart;
        chart.title = d.feature_names[f] + " distribution by Level";
        chart.x_label = d.feature_names[f];
        chart.y_label = "count";
        chart.categories = bins;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            svg::Series s{labels[c], {}};
            for (const auto& row : counts) s.values.push_back(row[c]);
            chart.series.push_back(std::move(s));
        }
        w.write("hist_" + slug(d.feature_names[f]) + ".svg", svg::render(svg::ChartKind::grouped_bars, chart));
    }
    w.write("histograms.csv", hist.str());
}

inline void write_evaluation(ArtifactWriter& w, const MetricsReport& m, const std::string& title) {
    w.write_json("metrics.json", metrics_to_json(m));
    std::ostringstream csv;
    write_confusion_csv(csv, m.confusion);
    w.write("confusion.csv", csv.str());
    w.write("confusion.svg", confusion_svg(m.confusion, title));
}

inline void cmd_train(const RunConfig& cfg, ArtifactWriter& w) {
    const Dataset d = load_data(cfg);
    const PreparedData prep = run_pipeline(d, cfg.preprocess, cfg.seed);
    const TrainedModel model = train_model(model_spec(cfg), prep.X_train, prep.y_train, model_stream(cfg));
    w.write_json("model.json", model_to_json(model, &prep.preprocessor));
    const MetricsReport m = evaluate_model(model, prep.X_test, prep.y_test);
    write_evaluation(w, m, "Confusion matrix: " + cfg.model_name);

    if (const auto* mlp = std::get_if<MlpModel>(&model.body)) {
        const auto& h = mlp->history;
        std::ostringstream csv;
        csv << "epoch,train_loss,val_loss,train_accuracy,val_accuracy\n";
        std::vector<double> epochs;
        for (std::size_t e = 0; e < h.epochs(); ++e) {
            csv << e + 1 << ',' << oncograde::detail::format_real(h.train_loss[e]) << ','
                << oncograde::detail::format_real(h.val_loss[e]) << ','
                << oncograde::detail::format_real(h.train_accuracy[e]) << ','
                << oncograde::detail::format_real(h.val_accuracy[e]) << '\n';
            epochs.push_back(static_cast<double>(e + 1));
        }
        w.write("history.csv", csv.str());
        svg::LineChart chart{"Training vs. validation: " + cfg.model_name,
                             "epoch",
                             "loss / accuracy",
                             epochs,
                             {{"train_loss", h.train_loss},
                              {"val_loss", h.val_loss},
                              {"train_accuracy", h.train_accuracy},
                              {"val_accuracy", h.val_accuracy}}};
        w.write("history.svg", svg::render(svg::ChartKind::lines, chart));
    }
}

inline void cmd_evaluate(const RunConfig& cfg, ArtifactWriter& w) {
    const std::string path = cfg.model_path ? *cfg.model_path : (fs::path(cfg.output_dir) / "model.json").string();
    std::ifstream in(path);
    if (!in) throw Error("cannot open model " + path);
    LoadedModel loaded;
    try {
        loaded = model_from_json(ojson::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error("model " + path + ": " + e.what());
    }
    if (!loaded.preprocessor) throw Error("model " + path + " carries no preprocessing state");
    const Dataset d = load_data(cfg);
    if (d.feature_names != loaded.preprocessor->input_names) throw Error("dataset columns do not match the model");
    const NumMatrix X = loaded.preprocessor->transform(d.X);
    write_evaluation(w, evaluate_model(loaded.model, X, d.y), "Confusion matrix: " + cfg.model_name);
}

inline void cmd_cv(const RunConfig& cfg, ArtifactWriter& w) {
    const PreparedData prep = run_pipeline(load_data(cfg), cfg.preprocess, cfg.seed);
    const LabeledMatrix rows = analysis_rows(prep);
    const CvResult cv = kfold_cv(rows.X, rows.y, model_spec(cfg), cfg.k, RngStream::derive(cfg.seed, detail::kCvTask));
    std::ostringstream csv;
    write_cv_csv(csv, cv);
    w.write("cv.csv", csv.str());
    w.write_json("cv.json", cv_to_json(cv));
}

inline void cmd_curve(const RunConfig& cfg, ArtifactWriter& w) {
    const PreparedData prep = run_pipeline(load_data(cfg), cfg.preprocess, cfg.seed);
    const LabeledMatrix rows = analysis_rows(prep);
    const LearningCurve c = learning_curve(rows.X, rows.y, model_spec(cfg), cfg.curve_fractions, cfg.curve_repeats,
                                           RngStream::derive(cfg.seed, detail::kCurveTask));
    std::ostringstream csv;
    write_curve_csv(csv, c);
    w.write("curve.csv", csv.str());
    svg::LineChart chart{"Learning curve: " + cfg.model_name, "training fraction", "accuracy", c.fractions,
                         {{"train", c.train_score}, {"validation", c.val_score}}};
    w.write("curve.svg", svg::render(svg::ChartKind::lines, chart));
}

inline void cmd_sweep(const RunConfig& cfg, ArtifactWriter& w) {
    const PreparedData prep = run_pipeline(load_data(cfg), cfg.preprocess, cfg.seed);
    const LabeledMatrix rows = analysis_rows(prep);
    const SweepResult s = sweep(rows.X, rows.y, model_spec(cfg), cfg.sweep_learning_rates, cfg.sweep_min_child_weights,
                                RngStream::derive(cfg.seed, detail::kSweepTask));
    std::ostringstream csv;
    write_sweep_csv(csv, s);
    w.write("sweep.csv", csv.str());
    ojson j;
    j["learning_rate"] = s.learning_rates;
    j["min_child_weight"] = s.min_child_weights;
    auto grid = ojson::array();
    for (const auto& cell : s.grid) grid.push_back({{"train_accuracy", cell.train_accuracy}, {"val_accuracy", cell.val_accuracy}});
    j["grid"] = std::move(grid);
    j["inactive_axes"] = s.inactive_axes;
    w.write_json("sweep.json", j);

    svg::LineChart chart;
    chart.title = "Min child weight x learning rate: " + cfg.model_name;
    chart.x_label = "learning rate";
    chart.y_label = "accuracy";
    chart.x = s.learning_rates;
    for (std::size_t mi = 0; mi < s.min_child_weights.size(); ++mi) {
        svg::Series train{"train mcw=" + svg::tick(s.min_child_weights[mi]), {}};
        svg::Series val{"val mcw=" + svg::tick(s.min_child_weights[mi]), {}};
        for (std::size_t li = 0; li < s.learning_rates.size(); ++li) {
            train.values.push_back(s.at(li, mi).train_accuracy);
            val.values.push_back(s.at(li, mi).val_accuracy);
        }
        chart.series.push_back(std::move(train));
        chart.series.push_back(std::move(val));
    }
    w.write("sweep.svg", svg::render(svg::ChartKind::lines, chart));
}

inline void cmd_report(const std::vector<std::string>& runs, ArtifactWriter& w) {
    std::ostringstream csv;
    csv << "model,run_dir,accuracy,macro_precision,macro_recall,macro_f1\n";
    svg::BarChart chart;
    chart.title = "Comparison of models";
    chart.x_label = "model";
    chart.y_label = "score";
    chart.series = {{"accuracy", {}}, {"macro precision", {}}, {"macro recall", {}}, {"macro F1", {}}};
    for (const auto& dir : runs) {
        ojson manifest, metrics;
        try {
            manifest = ojson::parse(read_file(fs::path(dir) / "manifest.json"));
            metrics = ojson::parse(read_file(fs::path(dir) / "metrics.json"));
        } catch (const nlohmann::json::exception& e) {
            throw Error("run " + dir + ": " + e.what());
        }
        std::string name;
        try {
            name = manifest.at("resolved_config").at("model").at("name").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw Error("run " + dir + ": manifest has no model name");
        }
        const double vals[4] = {metrics.at("accuracy").get<double>(), metrics.at("macro_precision").get<double>(),
                                metrics.at("macro_recall").get<double>(), metrics.at("macro_f1").get<double>()};
        csv << name << ',' << oncograde::detail::csv_escape(dir);
        for (double v : vals) csv << ',' << oncograde::detail::format_real(v);
        csv << '\n';
        chart.categories.push_back(name);
        for (std::size_t s = 0; s < 4; ++s) chart.series[s].values.push_back(vals[s]);
    }
    w.write("comparison.csv", csv.str());
    w.write("comparison.svg", svg::render(svg::ChartKind::grouped_bars, chart));
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    {
        const char* env = std::getenv("ONCOGRADE_THREADS");
        long threads = 0;
        if (env) {
            char* end = nullptr;
            threads = std::strtol(env, &end, 10);
            if (end == env || threads < 0) threads = 0;
        }
        set_worker_limit(static_cast<int>(std::min(threads, 256L)));
    }

    CLI::App app{"oncograde: tabular lung-cancer-level classification benchmark"};
    app.require_subcommand(1);
    std::string config_path, output_dir, model_path;
    std::uint64_t seed = 0;
    std::vector<std::string> runs;
    const std::vector<std::string> config_commands{"profile", "train", "evaluate", "cv", "curve", "sweep"};
    for (const auto& name : config_commands) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON run config (or a manifest.json)")->required();
        sub->add_option("--output-dir", output_dir, "override output_dir");
        sub->add_option("--seed", seed, "override seed");
        if (name == "evaluate") sub->add_option("--model", model_path, "saved model.json");
    }
    auto* report = app.add_subcommand("report", "compare finished runs");
    report->add_option("--runs", runs, "run directories")->required()->expected(1, -1);
    report->add_option("--output-dir", output_dir, "where to write comparison artifacts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    const auto started = std::chrono::steady_clock::now();
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "report") {
            ArtifactWriter w(output_dir.empty() ? fs::path(".") : fs::path(output_dir));
            cmd_report(runs, w);
            w.commit();
            return 0;
        }
        RunConfig cfg = load_config(config_path);
        auto* sub = app.get_subcommand(command);
        if (sub->count("--output-dir")) cfg.output_dir = output_dir;
        if (sub->count("--seed")) {
            cfg.seed = seed;
            if (!cfg.hp_seed_explicit) cfg.hp.seed = seed;
        }
        if (command == "evaluate" && sub->count("--model")) cfg.model_path = model_path;

        ArtifactWriter w(cfg.output_dir);
        if (command == "profile") cmd_profile(cfg, w);
        else if (command == "train") cmd_train(cfg, w);
        else if (command == "evaluate") cmd_evaluate(cfg, w);
        else if (command == "cv") cmd_cv(cfg, w);
        else if (command == "curve") cmd_curve(cfg, w);
        else if (command == "sweep") cmd_sweep(cfg, w);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        w.write_manifest(command, config_to_json(cfg), seconds);
        w.commit();
        out << command << ": wrote " << cfg.output_dir << "\n";
        return 0;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n\n" << app.help();
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace oncograde::cli

#endif  // ONCOGRADE_CLI_HPP
