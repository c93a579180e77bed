#ifndef ONCOGRADE_PREPROCESS_HPP
#define ONCOGRADE_PREPROCESS_HPP

// MinMax scaling, Pearson correlation with threshold-driven feature
// engineering, SMOTE oversampling and stratified splitting, plus the two
// orderings in which the chain can run.

#include "oncograde/core.hpp"
#include "oncograde/dataset.hpp"

#include <json.hpp>

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace oncograde {

// ---------------------------------------------------------------------------
// MinMax scaling
// ---------------------------------------------------------------------------

struct MinMaxParams {
    std::vector<double> min;
    std::vector<double> max;
};

inline MinMaxParams fit_minmax(const NumMatrix& X) {
    if (X.empty()) throw Error("fit_minmax: empty matrix");
    MinMaxParams p{std::vector<double>(X.row(0).begin(), X.row(0).end()),
                   std::vector<double>(X.row(0).begin(), X.row(0).end())};
    for (std::size_t r = 1; r < X.rows(); ++r) {
        for (std::size_t c = 0; c < X.cols(); ++c) {
            p.min[c] = std::min(p.min[c], X(r, c));
            p.max[c] = std::max(p.max[c], X(r, c));
        }
    }
    return p;
}

/// (x - min) / (max - min) per column. Constant columns map to 0; values
/// outside the fitted range are not clamped.
inline NumMatrix apply_minmax(const NumMatrix& X, const MinMaxParams& p) {
    if (p.min.size() != p.max.size()) throw Error("apply_minmax: malformed parameters");
    if (X.cols() != p.min.size() && X.rows() > 0)
        throw Error("apply_minmax: column count mismatch (" + std::to_string(X.cols()) + " vs " +
                    std::to_string(p.min.size()) + ")");
    std::vector<double> out(X.rows() * p.min.size());
    for (std::size_t r = 0; r < X.rows(); ++r) {
        for (std::size_t c = 0; c < p.min.size(); ++c) {
            const double span = p.max[c] - p.min[c];
            out[r * p.min.size() + c] = span > 0.0 ? (X(r, c) - p.min[c]) / span : 0.0;
        }
    }
    return NumMatrix(X.rows(), p.min.size(), std::move(out));
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

inline constexpr double kCorrelationHi = 0.5;
inline constexpr double kCorrelationLo = -0.4;

struct CorrelatedPair {
    std::size_t i = 0;
    std::size_t j = 0;
    double r = 0.0;
    friend bool operator==(const CorrelatedPair&, const CorrelatedPair&) = default;
};

struct CorrelationReport {
    std::size_t n = 0;
    std::vector<double> matrix;  // n x n, row-major
    std::vector<CorrelatedPair> engineered_pairs;
    std::vector<CorrelatedPair> flagged_pairs;
    std::vector<std::size_t> zero_variance_columns;
    double hi = kCorrelationHi;
    double lo = kCorrelationLo;

    [[nodiscard]] double at(std::size_t i, std::size_t j) const { return matrix[i * n + j]; }
};

/// Pearson r for every column pair. A zero-variance column correlates 0 with
/// every other column and 1 with itself.
inline CorrelationReport pearson_matrix(const NumMatrix& X) {
    if (X.rows() < 2) throw Error("pearson_matrix: need at least 2 rows");
    const std::size_t n = X.cols();
    const double rows = static_cast<double>(X.rows());
    CorrelationReport report;
    report.n = n;
    report.matrix.assign(n * n, 0.0);

    std::vector<std::vector<double>> centered(n);
    std::vector<double> norm(n, 0.0);
    std::vector<bool> constant(n, true);
    for (std::size_t c = 0; c < n; ++c) {
        auto col = X.column(c);
        for (double v : col) constant[c] = constant[c] && v == col.front();
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= rows;
        for (double& v : col) {
            v -= mean;
            norm[c] += v * v;
        }
        norm[c] = std::sqrt(norm[c]);
        centered[c] = std::move(col);
        if (constant[c]) report.zero_variance_columns.push_back(c);
    }
    for (std::size_t i = 0; i < n; ++i) {
        report.matrix[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            double r = 0.0;
            if (!constant[i] && !constant[j]) {
                double dot = 0.0;
                for (std::size_t k = 0; k < X.rows(); ++k) dot += centered[i][k] * centered[j][k];
                r = std::clamp(dot / (norm[i] * norm[j]), -1.0, 1.0);
            }
            report.matrix[i * n + j] = r;
            report.matrix[j * n + i] = r;
        }
    }
    return report;
}

/// Appends the elementwise mean of each listed column pair.
inline NumMatrix apply_engineering(const NumMatrix& X, const std::vector<CorrelatedPair>& pairs) {
    std::vector<std::vector<double>> extra;
    extra.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (p.i >= X.cols() || p.j >= X.cols()) throw Error("engineered pair refers to a missing column");
        std::vector<double> col(X.rows());
        for (std::size_t r = 0; r < X.rows(); ++r) col[r] = 0.5 * (X(r, p.i) + X(r, p.j));
        extra.push_back(std::move(col));
    }
    return X.with_columns(extra);
}

struct EngineeredFeatures {
    NumMatrix X;
    CorrelationReport report;
};

/// Adds one mean column per original pair with r > hi, in (i, j) order;
/// pairs with r < lo are only recorded. Engineered columns are never fed
/// back into the correlation scan.
inline EngineeredFeatures engineer_features(const NumMatrix& X, CorrelationReport report,
                                            double hi = kCorrelationHi, double lo = kCorrelationLo) {
    if (report.n != X.cols() || report.matrix.size() != report.n * report.n)
        throw Error("engineer_features: correlation report does not match matrix shape");
    report.hi = hi;
    report.lo = lo;
    report.engineered_pairs.clear();
    report.flagged_pairs.clear();
    for (std::size_t i = 0; i < report.n; ++i) {
        for (std::size_t j = i + 1; j < report.n; ++j) {
            const double r = report.at(i, j);
            if (r > hi) report.engineered_pairs.push_back({i, j, r});
            if (r < lo) report.flagged_pairs.push_back({i, j, r});
        }
    }
    NumMatrix out = apply_engineering(X, report.engineered_pairs);
    return {std::move(out), std::move(report)};
}

inline std::vector<std::string> engineered_names(const std::vector<std::string>& names,
                                                 const std::vector<CorrelatedPair>& pairs) {
    std::vector<std::string> out = names;
    for (const auto& p : pairs) out.push_back(names.at(p.i) + "+" + names.at(p.j));
    return out;
}

inline void write_correlation_csv(std::ostream& out, const CorrelationReport& report,
                                  const std::vector<std::string>& names) {
    if (names.size() != report.n) throw Error("correlation csv: name count mismatch");
    out << "feature";
    for (const auto& name : names) out << ',' << detail::csv_escape(name);
    out << '\n';
    for (std::size_t i = 0; i < report.n; ++i) {
        out << detail::csv_escape(names[i]);
        for (std::size_t j = 0; j < report.n; ++j) out << ',' << detail::format_real(report.at(i, j));
        out << '\n';
    }
}

inline nlohmann::ordered_json correlation_to_json(const CorrelationReport& report,
                                                  const std::vector<std::string>& names) {
    auto pairs = [&](const std::vector<CorrelatedPair>& list) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& p : list) {
            arr.push_back({{"i", p.i}, {"j", p.j}, {"a", names.at(p.i)}, {"b", names.at(p.j)}, {"r", p.r}});
        }
        return arr;
    };
    nlohmann::ordered_json j;
    j["hi_threshold"] = report.hi;
    j["lo_threshold"] = report.lo;
    j["engineered_pairs"] = pairs(report.engineered_pairs);
    j["flagged_pairs"] = pairs(report.flagged_pairs);
    j["zero_variance_columns"] = report.zero_variance_columns;
    return j;
}

// ---------------------------------------------------------------------------
// SMOTE
// ---------------------------------------------------------------------------

struct LabeledMatrix {
    NumMatrix X;
    Labels y;
};

/// Oversamples every class up to the majority count. Synthetic rows follow
/// the originals and lie on the segment between a random class member and
/// one of its k nearest same-class neighbours.
inline LabeledMatrix smote(const NumMatrix& X, const Labels& y, std::size_t k, RngStream& stream) {
    if (k < 1) throw Error("smote: k must be at least 1");
    if (X.rows() != y.size()) throw Error("smote: row count does not match label count");
    const ClassCounts counts = class_counts(y);
    std::size_t majority = 0;
    for (std::size_t c : counts) majority = std::max(majority, c);

    LabeledMatrix out{X, y};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (counts[c] == majority || counts[c] == 0) continue;  // nothing to interpolate from an absent class
        if (counts[c] < 2) throw Error("class too small for SMOTE (class " + std::to_string(c) + ")");

        IndexList members;
        for (std::size_t r = 0; r < y.size(); ++r) {
            if (static_cast<std::size_t>(y[r]) == c) members.push_back(r);
        }
        const std::size_t k_eff = std::min(k, members.size() - 1);
        std::map<std::size_t, IndexList> neighbour_cache;
        auto neighbours_of = [&](std::size_t m) -> const IndexList& {
            auto it = neighbour_cache.find(m);
            if (it != neighbour_cache.end()) return it->second;
            std::vector<std::pair<double, Index>> dist;
            dist.reserve(members.size() - 1);
            const auto a = X.row(members[m]);
            for (std::size_t o = 0; o < members.size(); ++o) {
                if (o == m) continue;
                const auto b = X.row(members[o]);
                double d2 = 0.0;
                for (std::size_t f = 0; f < a.size(); ++f) d2 += (a[f] - b[f]) * (a[f] - b[f]);
                dist.emplace_back(d2, members[o]);
            }
            std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k_eff), dist.end());
            IndexList nn;
            for (std::size_t q = 0; q < k_eff; ++q) nn.push_back(dist[q].second);
            return neighbour_cache.emplace(m, std::move(nn)).first->second;
        };

        std::vector<double> synthetic(X.cols());
        for (std::size_t s = counts[c]; s < majority; ++s) {
            const auto m = static_cast<std::size_t>(stream.uniform_index(members.size()));
            const IndexList& nn = neighbours_of(m);
            const Index partner = nn[static_cast<std::size_t>(stream.uniform_index(nn.size()))];
            const double gap = stream.uniform();
            const auto base = X.row(members[m]);
            const auto other = X.row(partner);
            for (std::size_t f = 0; f < synthetic.size(); ++f) synthetic[f] = base[f] + gap * (other[f] - base[f]);
            out.X.append_row(synthetic);
            out.y.push_back(static_cast<Label>(c));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct SplitIndices {
    IndexList train;
    IndexList test;
};

/// Per class: shuffle, send round(n_c * fraction) rows to test (at least one
/// and at most n_c - 1 when n_c >= 2), the rest to train. Classes are
/// concatenated in label order.
inline SplitIndices stratified_split(const Labels& y, double test_fraction, RngStream& stream) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error("test fraction must lie in (0, 1)");
    std::array<IndexList, kNumClasses> by_class;
    for (std::size_t r = 0; r < y.size(); ++r) {
        if (y[r] < 0 || y[r] >= kNumClasses) throw Error("label out of range: " + std::to_string(y[r]));
        by_class[static_cast<std::size_t>(y[r])].push_back(r);
    }
    SplitIndices split;
    for (auto& members : by_class) {
        if (members.empty()) continue;
        const IndexList shuffled = shuffle(members, stream);
        const std::size_t n_c = shuffled.size();
        auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n_c) * test_fraction));
        if (n_c >= 2) n_test = std::clamp<std::size_t>(n_test, 1, n_c - 1);
        split.test.insert(split.test.end(), shuffled.begin(), shuffled.begin() + static_cast<long>(n_test));
        split.train.insert(split.train.end(), shuffled.begin() + static_cast<long>(n_test), shuffled.end());
    }
    return split;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

enum class PipelineOrder { paper_order, leak_safe };

inline std::string to_string(PipelineOrder o) { return o == PipelineOrder::paper_order ? "paper_order" : "leak_safe"; }

inline PipelineOrder parse_pipeline_order(const std::string& s) {
    if (s == "paper_order") return PipelineOrder::paper_order;
    if (s == "leak_safe") return PipelineOrder::leak_safe;
    throw Error("unknown preprocessing order '" + s + "' (expected paper_order or leak_safe)");
}

struct PipelineOptions {
    PipelineOrder order = PipelineOrder::paper_order;
    std::size_t smote_k = 5;
    double corr_hi = kCorrelationHi;
    double corr_lo = kCorrelationLo;
    double test_fraction = 0.2;
};

/// Fitted state needed to push new raw rows through the same transform.
struct FittedPreprocessor {
    MinMaxParams scaling;
    std::vector<CorrelatedPair> engineered;
    std::vector<std::string> input_names;
    std::vector<std::string> output_names;

    [[nodiscard]] NumMatrix transform(const NumMatrix& raw) const {
        return apply_engineering(apply_minmax(raw, scaling), engineered);
    }
};

struct PreparedData {
    NumMatrix X_train;
    Labels y_train;
    NumMatrix X_test;
    Labels y_test;
    FittedPreprocessor preprocessor;
    CorrelationReport correlation;
    PipelineOrder order = PipelineOrder::paper_order;
    /// Source row in the input dataset for each test row; -1 marks a SMOTE row.
    std::vector<long> test_origin;
    std::size_t synthetic_rows = 0;

    [[nodiscard]] std::size_t feature_count() const { return preprocessor.output_names.size(); }
};

namespace detail {
inline constexpr std::uint64_t kSmoteTask = 101;
inline constexpr std::uint64_t kSplitTask = 102;
}  // namespace detail

/// paper_order: scale all rows, engineer, SMOTE all rows, then split.
/// leak_safe: split first; scaling, correlation and SMOTE see train only.
inline PreparedData run_pipeline(const Dataset& d, const PipelineOptions& opt, std::uint64_t seed) {
    d.validate();
    RngStream smote_stream = RngStream::derive(seed, detail::kSmoteTask);
    RngStream split_stream = RngStream::derive(seed, detail::kSplitTask);

    PreparedData out;
    out.order = opt.order;
    out.preprocessor.input_names = d.feature_names;

    if (opt.order == PipelineOrder::paper_order) {
        out.preprocessor.scaling = fit_minmax(d.X);
        const NumMatrix scaled = apply_minmax(d.X, out.preprocessor.scaling);
        auto eng = engineer_features(scaled, pearson_matrix(scaled), opt.corr_hi, opt.corr_lo);
        out.correlation = std::move(eng.report);
        auto balanced = smote(eng.X, d.y, opt.smote_k, smote_stream);
        out.synthetic_rows = balanced.y.size() - d.y.size();
        const SplitIndices split = stratified_split(balanced.y, opt.test_fraction, split_stream);
        out.X_train = balanced.X.select_rows(split.train);
        out.y_train = select_labels(balanced.y, split.train);
        out.X_test = balanced.X.select_rows(split.test);
        out.y_test = select_labels(balanced.y, split.test);
        for (Index i : split.test) out.test_origin.push_back(i < d.y.size() ? static_cast<long>(i) : -1L);
    } else {
        const SplitIndices split = stratified_split(d.y, opt.test_fraction, split_stream);
        const NumMatrix raw_train = d.X.select_rows(split.train);
        const Labels y_train = select_labels(d.y, split.train);
        out.preprocessor.scaling = fit_minmax(raw_train);
        const NumMatrix scaled_train = apply_minmax(raw_train, out.preprocessor.scaling);
        auto eng = engineer_features(scaled_train, pearson_matrix(scaled_train), opt.corr_hi, opt.corr_lo);
        out.correlation = std::move(eng.report);
        auto balanced = smote(eng.X, y_train, opt.smote_k, smote_stream);
        out.synthetic_rows = balanced.y.size() - y_train.size();
        out.X_train = std::move(balanced.X);
        out.y_train = std::move(balanced.y);
        out.X_test = apply_engineering(apply_minmax(d.X.select_rows(split.test), out.preprocessor.scaling),
                                       out.correlation.engineered_pairs);
        out.y_test = select_labels(d.y, split.test);
        for (Index i : split.test) out.test_origin.push_back(static_cast<long>(i));
    }
    out.preprocessor.engineered = out.correlation.engineered_pairs;
    out.preprocessor.output_names = engineered_names(d.feature_names, out.preprocessor.engineered);
    return out;
}

}  // namespace oncograde

#endif  // ONCOGRADE_PREPROCESS_HPP
