#ifndef ONCOGRADE_DATASET_HPP
#define ONCOGRADE_DATASET_HPP

#include "oncograde/core.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace oncograde {

/// Column layout of the lung-cancer risk table. Patient Id is an identifier
/// only and never becomes a model input.
struct Schema {
    std::vector<std::string> feature_names;
    std::string label_name = "Level";
    std::array<std::string, kNumClasses> label_values{"Low", "Medium", "High"};
    std::string id_name = "Patient Id";

    static const Schema& lung_cancer() {
        static const Schema schema{
            {"Age", "Gender", "Air Pollution", "Alcohol use", "Dust Allergy", "Occupational Hazards",
             "Genetic Risk", "Chronic Lung Disease", "Balanced Diet", "Obesity", "Smoking",
             "Passive Smoker", "Chest Pain", "Coughing of Blood", "Fatigue", "Weight Loss",
             "Shortness of Breath", "Wheezing", "Swallowing Difficulty", "Clubbing of Finger Nails",
             "Frequent Cold", "Dry Cough", "Snoring"}};
        return schema;
    }
};

struct LoadedCsv {
    std::string path;
    friend bool operator==(const LoadedCsv&, const LoadedCsv&) = default;
};

struct SyntheticOrigin {
    std::uint64_t seed = 0;
    std::size_t n = 0;
    friend bool operator==(const SyntheticOrigin&, const SyntheticOrigin&) = default;
};

using Provenance = std::variant<LoadedCsv, SyntheticOrigin>;

struct Dataset {
    NumMatrix X;
    Labels y;
    std::vector<std::string> feature_names;
    std::vector<std::string> patient_ids;  // metadata; may be empty
    Provenance provenance;

    void validate() const {
        if (X.rows() != y.size()) throw Error("dataset: row count does not match label count");
        if (X.rows() > 0 && X.cols() != feature_names.size())
            throw Error("dataset: column count does not match feature names");
        if (!patient_ids.empty() && patient_ids.size() != y.size())
            throw Error("dataset: patient id count does not match label count");
        require_labels(y);
    }
};

using ClassCounts = std::array<std::size_t, kNumClasses>;

inline ClassCounts class_counts(const Labels& y) {
    ClassCounts counts{};
    for (Label v : y) {
        if (v < 0 || v >= kNumClasses) throw Error("label out of range: " + std::to_string(v));
        ++counts[static_cast<std::size_t>(v)];
    }
    return counts;
}

inline ClassCounts class_counts(const Dataset& d) { return class_counts(d.y); }

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(std::move(field));
    return out;
}

inline bool parse_real(const std::string& token, double& out) {
    if (token.empty()) return false;
    std::istringstream in(token);
    in.imbue(std::locale::classic());
    in >> out;
    return !in.fail() && in.eof() && std::isfinite(out);
}

/// Shortest text that parses back to the identical double.
inline std::string format_real(double v) {
    char buf[32];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace detail

/// Parses a label token: Low/Medium/High (case-insensitive) or 1/2/3.
inline Label parse_label(const std::string& raw, const Schema& schema = Schema::lung_cancer()) {
    const std::string token = detail::lower(detail::trim(raw));
    for (int c = 0; c < kNumClasses; ++c) {
        if (token == detail::lower(schema.label_values[static_cast<std::size_t>(c)])) return c;
    }
    if (token == "1") return 0;
    if (token == "2") return 1;
    if (token == "3") return 2;
    throw Error("unknown label value: " + detail::trim(raw));
}

inline Dataset parse_csv(std::istream& in, const std::string& origin, const Schema& schema = Schema::lung_cancer()) {
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
            static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
            line.erase(0, 3);
        if (!detail::trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (!have_header) throw Error("empty file: " + origin);

    const auto header = detail::split_csv_line(line);
    auto find_column = [&](const std::string& name) -> long {
        const std::string key = detail::lower(detail::trim(name));
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (detail::lower(detail::trim(header[i])) == key) return static_cast<long>(i);
        }
        return -1;
    };

    std::vector<std::size_t> feature_cols;
    for (const auto& name : schema.feature_names) {
        const long c = find_column(name);
        if (c < 0) throw Error("missing column: " + name);
        feature_cols.push_back(static_cast<std::size_t>(c));
    }
    const long label_col = find_column(schema.label_name);
    if (label_col < 0) throw Error("missing column: " + schema.label_name);
    const long id_col = find_column(schema.id_name);

    Dataset d;
    d.feature_names = schema.feature_names;
    d.provenance = LoadedCsv{origin};
    std::vector<double> data;
    std::size_t line_no = 1;
    std::vector<double> row(feature_cols.size());
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw Error("row " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " fields, found " + std::to_string(fields.size()));
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            const std::string cell = detail::trim(fields[feature_cols[j]]);
            if (cell.empty())
                throw Error("row " + std::to_string(line_no) + ", column " + schema.feature_names[j] + ": empty cell");
            if (!detail::parse_real(cell, row[j]))
                throw Error("row " + std::to_string(line_no) + ", column " + schema.feature_names[j] +
                            ": non-numeric value '" + cell + "'");
        }
        data.insert(data.end(), row.begin(), row.end());
        d.y.push_back(parse_label(fields[static_cast<std::size_t>(label_col)], schema));
        if (id_col >= 0) d.patient_ids.push_back(detail::trim(fields[static_cast<std::size_t>(id_col)]));
    }
    if (d.y.empty()) throw Error("empty file: " + origin + " has a header but no rows");
    d.X = NumMatrix(d.y.size(), feature_cols.size(), std::move(data));
    d.validate();
    return d;
}

inline Dataset load_csv(const std::string& path, const Schema& schema = Schema::lung_cancer()) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return parse_csv(in, path, schema);
}

/// Header: Patient Id (when present), the feature columns, Level.
inline void write_csv(std::ostream& out, const Dataset& d, const Schema& schema = Schema::lung_cancer()) {
    d.validate();
    const bool with_ids = !d.patient_ids.empty();
    if (with_ids) out << detail::csv_escape(schema.id_name) << ',';
    for (const auto& name : d.feature_names) out << detail::csv_escape(name) << ',';
    out << schema.label_name << '\n';
    for (std::size_t r = 0; r < d.X.rows(); ++r) {
        if (with_ids) out << detail::csv_escape(d.patient_ids[r]) << ',';
        for (std::size_t c = 0; c < d.X.cols(); ++c) out << detail::format_real(d.X(r, c)) << ',';
        out << schema.label_values[static_cast<std::size_t>(d.y[r])] << '\n';
    }
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

/// Largest-remainder allocation of n items over the given proportions; equal
/// remainders favour the lower class index.
inline ClassCounts allocate_counts(std::size_t n, const std::array<double, kNumClasses>& proportions) {
    ClassCounts counts{};
    std::array<double, kNumClasses> remainder{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const double quota = static_cast<double>(n) * proportions[c];
        counts[c] = static_cast<std::size_t>(std::floor(quota));
        remainder[c] = quota - static_cast<double>(counts[c]);
        assigned += counts[c];
    }
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < kNumClasses; ++c) {
            if (remainder[c] > remainder[best]) best = c;
        }
        ++counts[best];
        remainder[best] = -1.0;
        ++assigned;
    }
    return counts;
}

namespace detail {

// Class locations (Low, Medium, High) for the 21 ordinal features, in schema
// order after Age and Gender. Balanced Diet decreases with risk level.
inline constexpr double kOrdinalLocations[21][kNumClasses] = {
    {2.0, 4.5, 7.0},  // Air Pollution
    {2.5, 4.5, 6.5},  // Alcohol use
    {3.5, 4.5, 5.5},  // Dust Allergy
    {2.5, 4.5, 6.5},  // Occupational Hazards
    {2.0, 4.5, 7.0},  // Genetic Risk
    {2.5, 4.5, 6.0},  // Chronic Lung Disease
    {6.5, 4.5, 2.5},  // Balanced Diet
    {3.0, 4.5, 6.0},  // Obesity
    {2.0, 4.5, 7.0},  // Smoking
    {2.5, 4.5, 6.5},  // Passive Smoker
    {2.5, 4.5, 6.5},  // Chest Pain
    {2.0, 4.5, 7.0},  // Coughing of Blood
    {3.0, 4.5, 6.0},  // Fatigue
    {3.0, 4.0, 5.5},  // Weight Loss
    {3.0, 4.5, 6.0},  // Shortness of Breath
    {3.0, 4.0, 5.0},  // Wheezing
    {3.0, 4.0, 5.0},  // Swallowing Difficulty
    {3.0, 4.0, 5.0},  // Clubbing of Finger Nails
    {3.0, 3.5, 4.0},  // Frequent Cold
    {3.0, 4.0, 5.0},  // Dry Cough
    {3.0, 3.0, 3.5},  // Snoring
};

inline constexpr double kOrdinalNoiseSd = 1.7;
inline constexpr double kAgeRanges[kNumClasses][2] = {{25.0, 55.0}, {35.0, 65.0}, {45.0, 75.0}};

}  // namespace detail

/// Default class mix of the synthetic stand-in dataset.
inline constexpr std::array<double, kNumClasses> kDefaultProportions{0.303, 0.332, 0.365};

/// Deterministic synthetic dataset with the full schema. Ordinal risk
/// features are clamp(round(location + noise), 1, 9) with class-monotone
/// locations; noise is wide enough that no single feature separates classes.
inline Dataset synth_generate(std::size_t n, std::uint64_t seed,
                              const std::array<double, kNumClasses>& proportions = kDefaultProportions) {
    if (n < 30) throw Error("synthetic dataset needs n >= 30");
    double total = 0.0;
    for (double p : proportions) {
        if (!(p > 0.0) || !std::isfinite(p)) throw Error("class proportions must be positive");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) throw Error("class proportions must sum to 1");

    const ClassCounts counts = allocate_counts(n, proportions);
    RngStream label_stream = RngStream::derive(seed, 0);
    RngStream feature_stream = RngStream::derive(seed, 1);

    IndexList order = shuffle(iota_indices(n), label_stream);
    Labels y(n);
    {
        std::size_t pos = 0;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            for (std::size_t k = 0; k < counts[c]; ++k) y[order[pos++]] = static_cast<Label>(c);
        }
    }

    const Schema& schema = Schema::lung_cancer();
    const std::size_t n_features = schema.feature_names.size();
    std::vector<double> data;
    data.reserve(n * n_features);
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        const auto c = static_cast<std::size_t>(y[r]);
        const double lo = detail::kAgeRanges[c][0], hi = detail::kAgeRanges[c][1];
        data.push_back(std::floor(lo + feature_stream.uniform() * (hi - lo + 1.0)));
        data.push_back(feature_stream.uniform() < 0.6 ? 1.0 : 2.0);
        for (const auto& loc : detail::kOrdinalLocations) {
            const double v = std::round(loc[c] + detail::kOrdinalNoiseSd * feature_stream.normal());
            data.push_back(std::clamp(v, 1.0, 9.0));
        }
        ids.push_back("P" + std::to_string(r + 1));
    }

    Dataset d;
    d.X = NumMatrix(n, n_features, std::move(data));
    d.y = std::move(y);
    d.feature_names = schema.feature_names;
    d.patient_ids = std::move(ids);
    d.provenance = SyntheticOrigin{seed, n};
    d.validate();
    return d;
}

}  // namespace oncograde

#endif  // ONCOGRADE_DATASET_HPP
