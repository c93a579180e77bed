#ifndef ONCOGRADE_EVAL_HPP
#define ONCOGRADE_EVAL_HPP

// Confusion matrices and their metrics, stratified k-fold CV, learning
// curves and learning-rate x min-child-weight sweeps.

#include "oncograde/core.hpp"
#include "oncograde/dataset.hpp"
#include "oncograde/models/model.hpp"
#include "oncograde/preprocess.hpp"

#include <json.hpp>

#include <array>
#include <ostream>
#include <string>
#include <vector>

namespace oncograde {

struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};  // [true][predicted]

    [[nodiscard]] std::size_t total() const {
        std::size_t t = 0;
        for (const auto& row : counts)
            for (auto v : row) t += v;
        return t;
    }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(const Labels& y_true, const Labels& y_pred) {
    if (y_true.size() != y_pred.size())
        throw Error("confusion: length mismatch (" + std::to_string(y_true.size()) + " vs " +
                    std::to_string(y_pred.size()) + ")");
    require_labels(y_true);
    require_labels(y_pred);
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i)
        ++cm.counts[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
    return cm;
}

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    double accuracy = 0.0;
    std::array<ClassScores, kNumClasses> per_class{};
    ClassScores macro;
    std::array<std::size_t, kNumClasses> support{};
    ConfusionMatrix confusion;
};

inline double f1_score(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

/// Zero denominators give 0; macro values are unweighted class means.
inline MetricsReport metrics(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) throw Error("empty evaluation");
    MetricsReport m;
    m.confusion = cm;
    std::size_t trace = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        trace += cm.counts[c][c];
        std::size_t row = 0, col = 0;
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            row += cm.counts[c][k];
            col += cm.counts[k][c];
        }
        m.support[c] = row;
        auto& s = m.per_class[c];
        s.precision = col > 0 ? static_cast<double>(cm.counts[c][c]) / static_cast<double>(col) : 0.0;
        s.recall = row > 0 ? static_cast<double>(cm.counts[c][c]) / static_cast<double>(row) : 0.0;
        s.f1 = f1_score(s.precision, s.recall);
        m.macro.precision += s.precision / kNumClasses;
        m.macro.recall += s.recall / kNumClasses;
        m.macro.f1 += s.f1 / kNumClasses;
    }
    m.accuracy = static_cast<double>(trace) / static_cast<double>(total);
    return m;
}

inline MetricsReport evaluate_model(const TrainedModel& model, const NumMatrix& X, const Labels& y) {
    return metrics(confusion(y, predict(model, X)));
}

inline double accuracy_of(const TrainedModel& model, const NumMatrix& X, const Labels& y) {
    if (y.empty()) throw Error("empty evaluation");
    const Labels pred = predict(model, X);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i] ? 1 : 0;
    return static_cast<double>(hit) / static_cast<double>(y.size());
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

/// Fold id per row: each class is shuffled and dealt round-robin, the dealer
/// position carrying over between classes so fold sizes differ by at most 1.
inline std::vector<std::size_t> stratified_folds(const Labels& y, std::size_t k, RngStream& stream) {
    if (k < 2) throw Error("k-fold needs k >= 2");
    const ClassCounts counts = class_counts(y);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (counts[c] > 0 && counts[c] < k)
            throw Error("class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                        " samples, fewer than k=" + std::to_string(k));
    }
    std::vector<std::size_t> fold(y.size());
    std::size_t dealer = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        IndexList members;
        for (std::size_t r = 0; r < y.size(); ++r) {
            if (static_cast<std::size_t>(y[r]) == c) members.push_back(r);
        }
        for (Index r : shuffle(members, stream)) {
            fold[r] = dealer;
            dealer = (dealer + 1) % k;
        }
    }
    return fold;
}

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;  // population
};

struct CvResult {
    std::vector<MetricsReport> per_fold;
    std::vector<std::size_t> fold_sizes;
    std::vector<std::array<std::size_t, kNumClasses>> fold_class_counts;
    MetricSummary accuracy, macro_precision, macro_recall, macro_f1;
};

inline MetricSummary summarize(const std::vector<double>& v) {
    const auto s = column_stats(v);
    return {s.mean, std::sqrt(s.variance)};
}

namespace detail {
inline constexpr std::uint64_t kFoldAssignTask = 0;
inline constexpr std::uint64_t kFoldTrainBase = 1;
}  // namespace detail

inline CvResult kfold_cv(const NumMatrix& X, const Labels& y, const ModelSpec& spec, std::size_t k,
                         RngStream stream) {
    if (X.rows() != y.size()) throw Error("kfold_cv: row count does not match label count");
    RngStream assign = stream.derive(detail::kFoldAssignTask);
    const auto fold = stratified_folds(y, k, assign);

    CvResult res;
    res.per_fold.resize(k);
    res.fold_sizes.assign(k, 0);
    res.fold_class_counts.assign(k, {});
    for (std::size_t r = 0; r < y.size(); ++r) {
        ++res.fold_sizes[fold[r]];
        ++res.fold_class_counts[fold[r]][static_cast<std::size_t>(y[r])];
    }
    parallel_for(k, [&](std::size_t f) {
        IndexList train, val;
        for (std::size_t r = 0; r < y.size(); ++r) (fold[r] == f ? val : train).push_back(r);
        const auto model = train_model(spec, X.select_rows(train), select_labels(y, train),
                                       stream.derive(detail::kFoldTrainBase + f));
        res.per_fold[f] = evaluate_model(model, X.select_rows(val), select_labels(y, val));
    });
    std::vector<double> acc, p, r, f1;
    for (const auto& m : res.per_fold) {
        acc.push_back(m.accuracy);
        p.push_back(m.macro.precision);
        r.push_back(m.macro.recall);
        f1.push_back(m.macro.f1);
    }
    res.accuracy = summarize(acc);
    res.macro_precision = summarize(p);
    res.macro_recall = summarize(r);
    res.macro_f1 = summarize(f1);
    return res;
}

// ---------------------------------------------------------------------------
// Learning curve
// ---------------------------------------------------------------------------

struct LearningCurve {
    std::vector<double> fractions;
    std::vector<double> train_score;
    std::vector<double> val_score;
    std::size_t repeats = 0;
    std::size_t validation_rows = 0;
    std::vector<std::size_t> train_rows;  // subset size per fraction
};

inline std::vector<double> default_curve_fractions() {
    return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
}

/// Stratified subset: round(n_c * fraction) shuffled members of each class,
/// returned in ascending row order. Errors when a class would get none.
inline IndexList stratified_subset(const Labels& y, const IndexList& pool, double fraction, RngStream& stream) {
    std::array<IndexList, kNumClasses> by_class;
    for (Index r : pool) by_class[static_cast<std::size_t>(y[r])].push_back(r);
    IndexList out;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (by_class[c].empty()) continue;
        const auto take = static_cast<std::size_t>(std::llround(static_cast<double>(by_class[c].size()) * fraction));
        if (take == 0)
            throw Error("fraction " + detail::format_real(fraction) + " is too small for stratification (class " +
                        std::to_string(c) + ")");
        const IndexList shuffled = shuffle(by_class[c], stream);
        out.insert(out.end(), shuffled.begin(), shuffled.begin() + static_cast<long>(std::min(take, shuffled.size())));
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {
inline constexpr std::uint64_t kCurveHoldoutTask = 0;
inline constexpr double kCurveHoldoutFraction = 0.2;

/// Stream for (fraction index, repeat); the 1.0 entry of repeat 0 reuses
/// the same derivation as a plain run so the two can be compared.
inline std::uint64_t curve_task(std::size_t fraction_index, std::size_t repeat, std::size_t repeats) {
    return 1 + fraction_index * repeats + repeat;
}
}  // namespace detail

inline LearningCurve learning_curve(const NumMatrix& X, const Labels& y, const ModelSpec& spec,
                                    const std::vector<double>& fractions, std::size_t repeats, RngStream stream) {
    if (X.rows() != y.size()) throw Error("learning_curve: row count does not match label count");
    if (fractions.empty()) throw Error("learning_curve: no fractions");
    if (repeats == 0) throw Error("learning_curve: repeats must be at least 1");
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) throw Error("learning_curve: fractions must lie in (0, 1]");
        if (i > 0 && !(fractions[i] > fractions[i - 1]))
            throw Error("learning_curve: fractions must be strictly increasing");
    }

    RngStream holdout_stream = stream.derive(detail::kCurveHoldoutTask);
    const SplitIndices split = stratified_split(y, detail::kCurveHoldoutFraction, holdout_stream);
    IndexList pool = split.train;
    std::sort(pool.begin(), pool.end());
    const NumMatrix X_val = X.select_rows(split.test);
    const Labels y_val = select_labels(y, split.test);

    // Validate every subset up front so errors surface before any training.
    const std::size_t cells = fractions.size() * repeats;
    std::vector<IndexList> subsets(cells);
    for (std::size_t f = 0; f < fractions.size(); ++f) {
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            RngStream sub = stream.derive(detail::curve_task(f, rep, repeats)).derive(0);
            subsets[f * repeats + rep] = stratified_subset(y, pool, fractions[f], sub);
        }
    }
    std::vector<double> train_acc(cells), val_acc(cells);
    parallel_for(cells, [&](std::size_t cell) {
        const std::size_t f = cell / repeats, rep = cell % repeats;
        const auto& rows = subsets[cell];
        const NumMatrix Xs = X.select_rows(rows);
        const Labels ys = select_labels(y, rows);
        const auto model = train_model(spec, Xs, ys, stream.derive(detail::curve_task(f, rep, repeats)).derive(1));
        train_acc[cell] = accuracy_of(model, Xs, ys);
        val_acc[cell] = accuracy_of(model, X_val, y_val);
    });

    LearningCurve curve;
    curve.fractions = fractions;
    curve.repeats = repeats;
    curve.validation_rows = y_val.size();
    for (std::size_t f = 0; f < fractions.size(); ++f) {
        double tr = 0.0, va = 0.0;
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            tr += train_acc[f * repeats + rep];
            va += val_acc[f * repeats + rep];
        }
        curve.train_score.push_back(tr / static_cast<double>(repeats));
        curve.val_score.push_back(va / static_cast<double>(repeats));
        curve.train_rows.push_back(subsets[f * repeats].size());
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepCell {
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

struct SweepResult {
    std::vector<double> learning_rates;
    std::vector<double> min_child_weights;
    std::vector<SweepCell> grid;  // [lr index][mcw index], row-major
    std::vector<std::string> inactive_axes;

    [[nodiscard]] const SweepCell& at(std::size_t lr, std::size_t mcw) const {
        return grid[lr * min_child_weights.size() + mcw];
    }
};

namespace detail {
inline constexpr std::uint64_t kSweepSplitTask = 0;
inline constexpr std::uint64_t kSweepTrainTask = 1;
inline constexpr double kSweepHoldoutFraction = 0.2;
}  // namespace detail

/// Every cell shares one 80/20 split and one training stream, so a knob the
/// model ignores leaves its cells bit-identical. An axis with at least two
/// values whose cells never differ along it is reported inactive.
inline SweepResult sweep(const NumMatrix& X, const Labels& y, const ModelSpec& spec,
                         const std::vector<double>& lr_values, const std::vector<double>& mcw_values,
                         RngStream stream) {
    if (lr_values.empty()) throw Error("sweep: learning_rate axis is empty");
    if (mcw_values.empty()) throw Error("sweep: min_child_weight axis is empty");
    if (X.rows() != y.size()) throw Error("sweep: row count does not match label count");

    RngStream split_stream = stream.derive(detail::kSweepSplitTask);
    const SplitIndices split = stratified_split(y, detail::kSweepHoldoutFraction, split_stream);
    const NumMatrix X_tr = X.select_rows(split.train), X_va = X.select_rows(split.test);
    const Labels y_tr = select_labels(y, split.train), y_va = select_labels(y, split.test);

    SweepResult res;
    res.learning_rates = lr_values;
    res.min_child_weights = mcw_values;
    res.grid.resize(lr_values.size() * mcw_values.size());
    // validate hyperparameters before spending time on training
    for (double lr : lr_values)
        for (double mcw : mcw_values) spec.with_rates(lr, mcw).hp.validate();
    parallel_for(res.grid.size(), [&](std::size_t cell) {
        const std::size_t li = cell / mcw_values.size(), mi = cell % mcw_values.size();
        const auto model = train_model(spec.with_rates(lr_values[li], mcw_values[mi]), X_tr, y_tr,
                                       stream.derive(detail::kSweepTrainTask));
        res.grid[cell] = {accuracy_of(model, X_tr, y_tr), accuracy_of(model, X_va, y_va)};
    });

    auto axis_inactive = [&](bool lr_axis) {
        const std::size_t len = lr_axis ? lr_values.size() : mcw_values.size();
        const std::size_t other = lr_axis ? mcw_values.size() : lr_values.size();
        if (len < 2) return false;
        for (std::size_t o = 0; o < other; ++o) {
            const SweepCell& first = lr_axis ? res.at(0, o) : res.at(o, 0);
            for (std::size_t a = 1; a < len; ++a) {
                if (!((lr_axis ? res.at(a, o) : res.at(o, a)) == first)) return false;
            }
        }
        return true;
    };
    if (axis_inactive(true)) res.inactive_axes.push_back("learning_rate");
    if (axis_inactive(false)) res.inactive_axes.push_back("min_child_weight");
    return res;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
    std::vector<double> p, r, f;
    for (const auto& s : m.per_class) {
        p.push_back(s.precision);
        r.push_back(s.recall);
        f.push_back(s.f1);
    }
    nlohmann::ordered_json j;
    j["accuracy"] = m.accuracy;
    j["precision_per_class"] = p;
    j["recall_per_class"] = r;
    j["f1_per_class"] = f;
    j["macro_precision"] = m.macro.precision;
    j["macro_recall"] = m.macro.recall;
    j["macro_f1"] = m.macro.f1;
    j["support"] = m.support;
    j["confusion"] = m.confusion.counts;
    return j;
}

inline void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm,
                                const Schema& schema = Schema::lung_cancer()) {
    out << "true\\pred";
    for (const auto& name : schema.label_values) out << ',' << name;
    out << '\n';
    for (std::size_t t = 0; t < kNumClasses; ++t) {
        out << schema.label_values[t];
        for (std::size_t p = 0; p < kNumClasses; ++p) out << ',' << cm.counts[t][p];
        out << '\n';
    }
}

inline void write_cv_csv(std::ostream& out, const CvResult& cv) {
    out << "fold,size,support_low,support_medium,support_high,accuracy,macro_precision,macro_recall,macro_f1\n";
    for (std::size_t f = 0; f < cv.per_fold.size(); ++f) {
        const auto& m = cv.per_fold[f];
        out << f << ',' << cv.fold_sizes[f];
        for (auto c : cv.fold_class_counts[f]) out << ',' << c;
        out << ',' << detail::format_real(m.accuracy) << ',' << detail::format_real(m.macro.precision) << ','
            << detail::format_real(m.macro.recall) << ',' << detail::format_real(m.macro.f1) << '\n';
    }
}

inline nlohmann::ordered_json cv_to_json(const CvResult& cv) {
    auto summary = [](const MetricSummary& s) { return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.std}}; };
    nlohmann::ordered_json j;
    j["k"] = cv.per_fold.size();
    j["fold_sizes"] = cv.fold_sizes;
    j["accuracy"] = summary(cv.accuracy);
    j["macro_precision"] = summary(cv.macro_precision);
    j["macro_recall"] = summary(cv.macro_recall);
    j["macro_f1"] = summary(cv.macro_f1);
    auto folds = nlohmann::ordered_json::array();
    for (const auto& m : cv.per_fold) folds.push_back(metrics_to_json(m));
    j["per_fold"] = std::move(folds);
    return j;
}

inline void write_curve_csv(std::ostream& out, const LearningCurve& c) {
    out << "fraction,train_rows,train_score,val_score,repeats\n";
    for (std::size_t i = 0; i < c.fractions.size(); ++i) {
        out << detail::format_real(c.fractions[i]) << ',' << c.train_rows[i] << ','
            << detail::format_real(c.train_score[i]) << ',' << detail::format_real(c.val_score[i]) << ','
            << c.repeats << '\n';
    }
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& s) {
    out << "learning_rate,min_child_weight,train_accuracy,val_accuracy\n";
    for (std::size_t li = 0; li < s.learning_rates.size(); ++li) {
        for (std::size_t mi = 0; mi < s.min_child_weights.size(); ++mi) {
            const auto& cell = s.at(li, mi);
            out << detail::format_real(s.learning_rates[li]) << ',' << detail::format_real(s.min_child_weights[mi])
                << ',' << detail::format_real(cell.train_accuracy) << ',' << detail::format_real(cell.val_accuracy)
                << '\n';
        }
    }
}

}  // namespace oncograde

#endif  // ONCOGRADE_EVAL_HPP
