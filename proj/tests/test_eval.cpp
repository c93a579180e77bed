#include "oncograde/eval.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

using namespace oncograde;

namespace {

const Labels kTrue{0, 0, 1, 1, 2, 2};
const Labels kPred{0, 1, 1, 1, 2, 0};

LabeledMatrix noisy_blobs(std::size_t per_class, std::uint64_t seed) {
    RngStream s(seed);
    LabeledMatrix out{NumMatrix(0, 2), {}};
    for (std::size_t k = 0; k < per_class; ++k) {
        for (int c = 0; c < 3; ++c) {
            const std::vector<double> row{c * 1.5 + s.normal(), (c % 2) * 1.5 + s.normal()};
            out.X.append_row(row);
            out.y.push_back(c);
        }
    }
    return out;
}

Hyperparams quick() {
    Hyperparams hp;
    hp.epochs = 15;
    hp.hidden_layers = {6};
    hp.n_estimators = 4;
    hp.max_depth = 4;
    return hp;
}

}  // namespace

TEST(Confusion, Examples) {
    const auto id = confusion({0, 1, 2}, {0, 1, 2});
    for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t p = 0; p < 3; ++p) EXPECT_EQ(id.counts[t][p], t == p ? 1u : 0u);

    const auto cm = confusion(kTrue, kPred);
    const std::array<std::array<std::size_t, 3>, 3> expect{{{1, 1, 0}, {0, 2, 0}, {1, 0, 1}}};
    EXPECT_EQ(cm.counts, expect);
    EXPECT_EQ(confusion({}, {}).total(), 0u);
    EXPECT_THROW(confusion({0, 1}, {0}), Error);
    EXPECT_THROW(confusion({0, 3}, {0, 1}), Error);
}

TEST(Metrics, HandTalliedExample) {
    const auto m = metrics(confusion(kTrue, kPred));
    EXPECT_NEAR(m.accuracy, 4.0 / 6.0, 1e-15);
    EXPECT_NEAR(m.accuracy, 0.6667, 1e-4);
    EXPECT_DOUBLE_EQ(m.per_class[0].precision, 0.5);
    EXPECT_DOUBLE_EQ(m.per_class[1].precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.per_class[2].precision, 1.0);
    EXPECT_DOUBLE_EQ(m.per_class[0].recall, 0.5);
    EXPECT_DOUBLE_EQ(m.per_class[1].recall, 1.0);
    EXPECT_DOUBLE_EQ(m.per_class[2].recall, 0.5);
    EXPECT_NEAR(m.macro.f1, (0.5 + 0.8 + 2.0 / 3.0) / 3.0, 1e-15);
    EXPECT_NEAR(m.macro.f1, 0.6556, 1e-4);
    EXPECT_EQ(m.support, (std::array<std::size_t, 3>{2, 2, 2}));
}

TEST(Metrics, PerfectAndAbsentClass) {
    const auto perfect = metrics(confusion({0, 1, 2, 2}, {0, 1, 2, 2}));
    EXPECT_EQ(perfect.accuracy, 1.0);
    EXPECT_EQ(perfect.macro.f1, 1.0);
    const auto absent = metrics(confusion({0, 1, 1}, {0, 1, 1}));
    EXPECT_EQ(absent.per_class[2].precision, 0.0);
    EXPECT_EQ(absent.per_class[2].recall, 0.0);
    EXPECT_EQ(absent.per_class[2].f1, 0.0);
    try {
        metrics(ConfusionMatrix{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "empty evaluation");
    }
}

TEST(Metrics, MatchesDirectOracle) {
    RngStream s(101);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + s.uniform_index(50);
        Labels t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<Label>(s.uniform_index(3));
            p[i] = s.uniform() < 0.6 ? t[i] : static_cast<Label>(s.uniform_index(3));
        }
        const auto m = metrics(confusion(t, p));
        const auto o = oracle::direct_scores(t, p);
        ASSERT_NEAR(m.accuracy, o.accuracy, 1e-12);
        for (std::size_t c = 0; c < 3; ++c) {
            ASSERT_NEAR(m.per_class[c].precision, o.precision[c], 1e-12);
            ASSERT_NEAR(m.per_class[c].recall, o.recall[c], 1e-12);
            ASSERT_NEAR(m.per_class[c].f1, o.f1[c], 1e-12);
        }
        ASSERT_NEAR(m.macro.f1, o.macro_f1, 1e-12);
        ASSERT_EQ(metrics(confusion(t, t)).accuracy, 1.0);
    }
}

TEST(Metrics, MacroInvariantUnderRelabeling) {
    RngStream s(5);
    const std::array<Label, 3> perm{2, 0, 1};
    for (int trial = 0; trial < 100; ++trial) {
        Labels t(30), p(30), tp(30), pp(30);
        for (std::size_t i = 0; i < 30; ++i) {
            t[i] = static_cast<Label>(s.uniform_index(3));
            p[i] = static_cast<Label>(s.uniform_index(3));
            tp[i] = perm[static_cast<std::size_t>(t[i])];
            pp[i] = perm[static_cast<std::size_t>(p[i])];
        }
        const auto a = metrics(confusion(t, p)), b = metrics(confusion(tp, pp));
        ASSERT_NEAR(a.macro.precision, b.macro.precision, 1e-12);
        ASSERT_NEAR(a.macro.recall, b.macro.recall, 1e-12);
        ASSERT_NEAR(a.macro.f1, b.macro.f1, 1e-12);
    }
}

TEST(Metrics, JsonKeysAndConfusionCsv) {
    const auto m = metrics(confusion(kTrue, kPred));
    const auto j = metrics_to_json(m);
    std::vector<std::string> keys;
    for (const auto& item : j.items()) keys.push_back(item.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"accuracy", "precision_per_class", "recall_per_class", "f1_per_class",
                                              "macro_precision", "macro_recall", "macro_f1", "support", "confusion"}));
    EXPECT_EQ(j["macro_f1"].get<double>(), m.macro.f1);
    std::ostringstream csv;
    write_confusion_csv(csv, m.confusion);
    EXPECT_EQ(csv.str(), "true\\pred,Low,Medium,High\nLow,1,1,0\nMedium,0,2,0\nHigh,1,0,1\n");
}

TEST(Folds, EqualFoldsOn1095BalancedRows) {
    Labels y;
    for (int c = 0; c < 3; ++c) y.insert(y.end(), 365, c);
    RngStream s(1);
    const auto fold = stratified_folds(y, 5, s);
    std::array<std::array<int, 3>, 5> counts{};
    for (std::size_t r = 0; r < y.size(); ++r) ++counts[fold[r]][static_cast<std::size_t>(y[r])];
    for (const auto& f : counts) EXPECT_EQ(f, (std::array<int, 3>{73, 73, 73}));
}

TEST(Folds, TwoFoldsOnFourSamples) {
    RngStream s(2);
    const Labels y{0, 0, 1, 1};
    const auto fold = stratified_folds(y, 2, s);
    EXPECT_NE(fold[0], fold[1]);
    EXPECT_NE(fold[2], fold[3]);
}

TEST(Folds, PartitionWithBalancedSizes) {
    RngStream g(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t k = 2 + g.uniform_index(6);
        Labels y;
        for (int c = 0; c < 3; ++c) y.insert(y.end(), k + g.uniform_index(30), c);
        const auto fold = stratified_folds(y, k, g);
        std::vector<std::size_t> sizes(k, 0);
        for (auto f : fold) {
            ASSERT_LT(f, k);
            ++sizes[f];
        }
        const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
        ASSERT_LE(*hi - *lo, 1u);
    }
}

TEST(Folds, ClassSmallerThanKNamed) {
    RngStream s(1);
    try {
        stratified_folds({0, 0, 0, 1, 1, 2, 2, 2}, 3, s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("class 1"), std::string::npos) << e.what();
    }
    EXPECT_THROW(stratified_folds({0, 1}, 1, s), Error);
}

TEST(Cv, DeterministicWithSummaries) {
    const auto d = noisy_blobs(20, 3);
    const auto spec = tree_spec(quick());
    const auto a = kfold_cv(d.X, d.y, spec, 5, RngStream(9));
    const auto b = kfold_cv(d.X, d.y, spec, 5, RngStream(9));
    EXPECT_EQ(cv_to_json(a).dump(), cv_to_json(b).dump());
    EXPECT_EQ(a.per_fold.size(), 5u);
    EXPECT_EQ(a.fold_sizes, (std::vector<std::size_t>(5, 12)));
    std::vector<double> acc;
    for (const auto& m : a.per_fold) acc.push_back(m.accuracy);
    const auto st = column_stats(acc);
    EXPECT_DOUBLE_EQ(a.accuracy.mean, st.mean);
    EXPECT_DOUBLE_EQ(a.accuracy.std, std::sqrt(st.variance));
    std::ostringstream csv;
    write_cv_csv(csv, a);
    EXPECT_EQ(std::ranges::count(csv.str(), '\n'), 6);
}

TEST(Cv, ThreadCountDoesNotChangeResult) {
    const auto d = noisy_blobs(15, 4);
    for (const auto& name : {"bagging", "dnn"}) {
        const auto spec = spec_from_name(name, quick());
        set_worker_limit(0);
        const auto a = cv_to_json(kfold_cv(d.X, d.y, spec, 3, RngStream(2))).dump();
        set_worker_limit(8);
        const auto b = cv_to_json(kfold_cv(d.X, d.y, spec, 3, RngStream(2))).dump();
        set_worker_limit(0);
        EXPECT_EQ(a, b) << name;
    }
}

TEST(Curve, ShapeAndBounds) {
    const auto d = noisy_blobs(40, 6);
    const auto c = learning_curve(d.X, d.y, tree_spec(quick()), default_curve_fractions(), 3, RngStream(3));
    ASSERT_EQ(c.fractions.size(), 10u);
    EXPECT_EQ(c.train_score.size(), 10u);
    EXPECT_EQ(c.val_score.size(), 10u);
    EXPECT_EQ(c.validation_rows, 24u);
    EXPECT_EQ(c.train_rows.back(), 96u);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_GE(c.train_score[i], 0.0);
        EXPECT_LE(c.train_score[i], 1.0);
        EXPECT_GE(c.val_score[i], 0.0);
        EXPECT_LE(c.val_score[i], 1.0);
        if (i > 0) {
            EXPECT_GE(c.train_rows[i], c.train_rows[i - 1]);
        }
    }
}

TEST(Curve, FullFractionMatchesPlainRun) {
    const auto d = noisy_blobs(30, 7);
    const auto spec = mlp_spec(quick());
    const RngStream stream(11);
    const auto c = learning_curve(d.X, d.y, spec, {0.5, 1.0}, 1, stream);

    RngStream hold = stream.derive(0);
    const auto split = stratified_split(d.y, 0.2, hold);
    IndexList pool = split.train;
    std::sort(pool.begin(), pool.end());
    const auto model = train_model(spec, d.X.select_rows(pool), select_labels(d.y, pool), stream.derive(2).derive(1));
    EXPECT_EQ(c.val_score[1], accuracy_of(model, d.X.select_rows(split.test), select_labels(d.y, split.test)));
    EXPECT_EQ(c.train_score[1], accuracy_of(model, d.X.select_rows(pool), select_labels(d.y, pool)));
}

TEST(Curve, BadFractionsRejected) {
    const auto d = noisy_blobs(10, 8);
    const auto spec = tree_spec(quick());
    EXPECT_THROW(learning_curve(d.X, d.y, spec, {0.5, 0.3}, 1, RngStream(1)), Error);
    EXPECT_THROW(learning_curve(d.X, d.y, spec, {0.5, 0.5}, 1, RngStream(1)), Error);
    EXPECT_THROW(learning_curve(d.X, d.y, spec, {0.0, 0.5}, 1, RngStream(1)), Error);
    try {
        learning_curve(d.X, d.y, spec, {0.01, 1.0}, 1, RngStream(1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("too small for stratification"), std::string::npos);
    }
}

TEST(Sweep, SvmIgnoresMinChildWeight) {
    const auto d = noisy_blobs(20, 9);
    const auto s = sweep(d.X, d.y, svm_spec(quick(), KernelKind::rbf), {0.01, 0.1}, {1, 5, 10}, RngStream(4));
    ASSERT_EQ(s.grid.size(), 6u);
    EXPECT_EQ(s.inactive_axes, (std::vector<std::string>{"learning_rate", "min_child_weight"}));
    for (std::size_t li = 0; li < 2; ++li)
        for (std::size_t mi = 1; mi < 3; ++mi) EXPECT_EQ(s.at(li, mi), s.at(li, 0));
}

TEST(Sweep, TreeUsesMinChildWeightOnly) {
    const auto d = noisy_blobs(40, 10);
    const auto s = sweep(d.X, d.y, tree_spec(quick()), {0.01, 0.1}, {1, 30}, RngStream(4));
    EXPECT_EQ(s.inactive_axes, (std::vector<std::string>{"learning_rate"}));
}

TEST(Sweep, SingleCellEqualsPlainRun) {
    const auto d = noisy_blobs(20, 12);
    const auto spec = mlp_spec(quick());
    const RngStream stream(6);
    const auto s = sweep(d.X, d.y, spec, {0.05}, {2}, stream);
    EXPECT_TRUE(s.inactive_axes.empty());
    RngStream sp = stream.derive(0);
    const auto split = stratified_split(d.y, 0.2, sp);
    const auto model = train_model(spec.with_rates(0.05, 2), d.X.select_rows(split.train),
                                   select_labels(d.y, split.train), stream.derive(1));
    EXPECT_EQ(s.grid[0].val_accuracy, accuracy_of(model, d.X.select_rows(split.test), select_labels(d.y, split.test)));
}

TEST(Sweep, DeterministicAndParallelSafe) {
    const auto d = noisy_blobs(15, 13);
    const auto spec = spec_from_name("voting", quick());
    set_worker_limit(0);
    const auto a = sweep(d.X, d.y, spec, {0.01, 0.05, 0.1}, {1, 3, 6}, RngStream(8));
    set_worker_limit(8);
    const auto b = sweep(d.X, d.y, spec, {0.01, 0.05, 0.1}, {1, 3, 6}, RngStream(8));
    set_worker_limit(0);
    EXPECT_EQ(a.grid, b.grid);
    std::ostringstream csv;
    write_sweep_csv(csv, a);
    EXPECT_EQ(std::ranges::count(csv.str(), '\n'), 10);
    EXPECT_THROW(sweep(d.X, d.y, spec, {}, {1}, RngStream(1)), Error);
}
