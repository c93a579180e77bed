#include "oncograde/dataset.hpp"
#include "oncograde/models/tree.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace oncograde;

#ifndef ONCOGRADE_TEST_DATA
#define ONCOGRADE_TEST_DATA "tests/data"
#endif

namespace {

std::string header_line(const std::vector<std::string>& skip = {}) {
    std::string h = "Patient Id";
    for (const auto& n : Schema::lung_cancer().feature_names) {
        if (std::find(skip.begin(), skip.end(), n) != skip.end()) continue;
        h += "," + n;
    }
    return h + ",Level\n";
}

std::string data_line(const std::string& id, const std::string& label, std::size_t n_features = 23,
                      const std::string& bad_cell = "") {
    std::string s = id;
    for (std::size_t j = 0; j < n_features; ++j) s += "," + (j == 4 && !bad_cell.empty() ? bad_cell : std::to_string(j % 9 + 1));
    return s + "," + label + "\n";
}

std::string error_of(const std::string& csv) {
    std::istringstream in(csv);
    try {
        parse_csv(in, "mem");
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Schema, TwentyThreeModelFeaturesPlusId) {
    const auto& s = Schema::lung_cancer();
    EXPECT_EQ(s.feature_names.size(), 23u);
    EXPECT_EQ(s.feature_names.front(), "Age");
    EXPECT_EQ(s.feature_names.back(), "Snoring");
    EXPECT_EQ(std::count(s.feature_names.begin(), s.feature_names.end(), s.id_name), 0);
    EXPECT_EQ(s.label_values[0], "Low");
    EXPECT_EQ(s.label_values[2], "High");
}

TEST(LoadCsv, TextLabels) {
    std::istringstream in(header_line() + data_line("a", "Low") + data_line("b", "Medium") + data_line("c", "High"));
    const auto d = parse_csv(in, "mem");
    EXPECT_EQ(d.y, (Labels{0, 1, 2}));
    EXPECT_EQ(d.X.rows(), 3u);
    EXPECT_EQ(d.X.cols(), 23u);
    EXPECT_EQ(d.patient_ids, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(LoadCsv, NumericLabels) {
    std::istringstream in(header_line() + data_line("a", "1") + data_line("b", "2") + data_line("c", "3"));
    EXPECT_EQ(parse_csv(in, "mem").y, (Labels{0, 1, 2}));
}

TEST(LoadCsv, MissingColumnNamed) {
    EXPECT_EQ(error_of(header_line({"Smoking"}) + data_line("a", "Low", 22)), "missing column: Smoking");
}

TEST(LoadCsv, NonNumericCellNamesRowAndColumn) {
    const auto msg = error_of(header_line() + data_line("a", "Low") + data_line("b", "Low", 23, "lots"));
    EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("Dust Allergy"), std::string::npos) << msg;
}

TEST(LoadCsv, UnknownLabelNamesToken) {
    EXPECT_EQ(error_of(header_line() + data_line("a", "Severe")), "unknown label value: Severe");
}

TEST(LoadCsv, EmptyFile) {
    EXPECT_NE(error_of("").find("empty file"), std::string::npos);
    EXPECT_NE(error_of("\n\n").find("empty file"), std::string::npos);
}

TEST(LoadCsv, RejectsEmptyCell) {
    EXPECT_NE(error_of(header_line() + data_line("a", "Low", 23, " ")).find("empty cell"), std::string::npos);
}

TEST(LoadCsv, ShippedSampleMatchesHeadersLoosely) {
    // the sample uses the public file's odd header casing and an extra index column
    const auto d = load_csv(std::string(ONCOGRADE_TEST_DATA) + "/sample.csv");
    EXPECT_EQ(d.X.rows(), 12u);
    EXPECT_EQ(class_counts(d), (ClassCounts{4, 4, 4}));
    EXPECT_EQ(d.patient_ids.front(), "P1");
    EXPECT_EQ(d.X(0, 0), 32.0);
    EXPECT_TRUE(std::holds_alternative<LoadedCsv>(d.provenance));
}

TEST(LoadCsv, WriteThenReadIsIdempotent) {
    const auto d = load_csv(std::string(ONCOGRADE_TEST_DATA) + "/sample.csv");
    std::stringstream once;
    write_csv(once, d);
    const auto d2 = parse_csv(once, "mem");
    EXPECT_EQ(d2.X, d.X);
    EXPECT_EQ(d2.y, d.y);

    const auto s = synth_generate(60, 3);
    std::stringstream buf;
    write_csv(buf, s);
    const auto s2 = parse_csv(buf, "mem");
    EXPECT_EQ(s2.X, s.X);
    EXPECT_EQ(s2.y, s.y);
}

TEST(ClassCounts, Examples) {
    EXPECT_EQ(class_counts(Labels{0, 0, 1, 2}), (ClassCounts{2, 1, 1}));
    EXPECT_EQ(class_counts(Labels{}), (ClassCounts{0, 0, 0}));
    EXPECT_EQ(class_counts(synth_generate(300, 1, {1.0 / 3, 1.0 / 3, 1.0 / 3})), (ClassCounts{100, 100, 100}));
}

TEST(Synth, LargestRemainderCounts) {
    EXPECT_EQ(class_counts(synth_generate(1000, 9, {0.303, 0.332, 0.365})), (ClassCounts{303, 332, 365}));
    // 31 * (0.2, 0.3, 0.5) = 6.2, 9.3, 15.5 -> floors 6, 9, 15; the spare goes to the .5
    EXPECT_EQ(allocate_counts(31, {0.2, 0.3, 0.5}), (ClassCounts{6, 9, 16}));
    // 100 / 3 each: remainders tie, lower class wins
    EXPECT_EQ(allocate_counts(100, {1.0 / 3, 1.0 / 3, 1.0 / 3}), (ClassCounts{34, 33, 33}));
}

TEST(Synth, Deterministic) {
    const auto a = synth_generate(200, 17), b = synth_generate(200, 17);
    EXPECT_EQ(a.X, b.X);
    EXPECT_EQ(a.y, b.y);
    std::stringstream sa, sb;
    write_csv(sa, a);
    write_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_NE(synth_generate(200, 18).X, a.X);
}

TEST(Synth, RangesHold) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto d = synth_generate(500, seed);
        d.validate();
        for (std::size_t r = 0; r < d.X.rows(); ++r) {
            ASSERT_GE(d.X(r, 0), 25.0);
            ASSERT_LE(d.X(r, 0), 75.0);
            ASSERT_TRUE(d.X(r, 1) == 1.0 || d.X(r, 1) == 2.0);
            for (std::size_t c = 2; c < d.X.cols(); ++c) {
                ASSERT_GE(d.X(r, c), 1.0);
                ASSERT_LE(d.X(r, c), 9.0);
                ASSERT_EQ(d.X(r, c), std::round(d.X(r, c)));
            }
        }
    }
}

TEST(Synth, RiskFeaturesMoveWithClass) {
    const auto d = synth_generate(3000, 5);
    const auto& names = d.feature_names;
    auto class_mean = [&](const std::string& feature, int c) {
        const auto j = static_cast<std::size_t>(std::find(names.begin(), names.end(), feature) - names.begin());
        double s = 0, n = 0;
        for (std::size_t r = 0; r < d.X.rows(); ++r) {
            if (d.y[r] == c) {
                s += d.X(r, j);
                ++n;
            }
        }
        return s / n;
    };
    for (const char* f : {"Smoking", "Air Pollution", "Genetic Risk"}) {
        EXPECT_LT(class_mean(f, 0), class_mean(f, 1)) << f;
        EXPECT_LT(class_mean(f, 1), class_mean(f, 2)) << f;
    }
    EXPECT_GT(class_mean("Balanced Diet", 0), class_mean("Balanced Diet", 2));
}

TEST(Synth, ClassesOverlapForShallowTree) {
    // a depth-2 tree should neither fail nor separate the classes perfectly
    const auto d = synth_generate(1000, 42);
    const auto tree = train_tree(d.X, d.y, {}, {2, 1.0});
    std::size_t hit = 0;
    for (std::size_t r = 0; r < d.X.rows(); ++r) {
        const auto p = tree.proba(d.X.row(r));
        hit += static_cast<Label>(argmax_tiebreak_low(p)) == d.y[r];
    }
    const double acc = static_cast<double>(hit) / static_cast<double>(d.X.rows());
    EXPECT_GE(acc, 0.70);
    EXPECT_LE(acc, 0.95);
}

TEST(Synth, RejectsBadArguments) {
    EXPECT_THROW(synth_generate(29, 1), Error);
    EXPECT_THROW(synth_generate(100, 1, {0.5, 0.5, 0.0}), Error);
    EXPECT_THROW(synth_generate(100, 1, {0.5, 0.5, 0.5}), Error);
}
