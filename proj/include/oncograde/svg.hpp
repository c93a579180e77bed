#ifndef ONCOGRADE_SVG_HPP
#define ONCOGRADE_SVG_HPP

// Dependency-free SVG charts on a fixed 800x600 canvas. Output bytes depend
// only on the input data; all numbers go through one printf format.

#include "oncograde/core.hpp"

#include <array>
#include <cstdio>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace oncograde::svg {

inline constexpr int kWidth = 800;
inline constexpr int kHeight = 600;
inline constexpr double kLeft = 80.0, kRight = 160.0, kTop = 60.0, kBottom = 80.0;

inline constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                     "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Series {
    std::string name;
    std::vector<double> values;
};

/// Bars per category, one colour per series (histograms and grouped bars).
struct BarChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> categories;
    std::vector<Series> series;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> x;
    std::vector<Series> series;
};

struct Heatmap {
    std::string title;
    std::array<std::string, 3> labels;
    std::array<std::array<double, 3>, 3> cells{};  // [row][col]
    std::string row_label = "True";
    std::string col_label = "Predicted";
};

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

namespace detail {

inline void open(std::ostringstream& out, const std::string& title) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"#ffffff\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"32\" text-anchor=\"middle\" font-size=\"20\">" << escape(title)
        << "</text>\n";
}

inline void close(std::ostringstream& out) { out << "</svg>\n"; }

inline void text(std::ostringstream& out, double x, double y, const std::string& s, const char* anchor = "middle",
                 int size = 12, const char* extra = "") {
    out << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor << "\" font-size=\"" << size
        << "\"" << extra << ">" << escape(s) << "</text>\n";
}

/// Rounds the data maximum up to a 1/2/5 x 10^k step multiple.
inline double nice_max(double v) {
    if (!(v > 0.0)) return 1.0;
    const double mag = std::pow(10.0, std::floor(std::log10(v)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (v <= m * mag + 1e-12 * mag) return m * mag;
    }
    return 10.0 * mag;
}

struct Plot {
    double x0 = kLeft, y0 = kTop, w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
    double ymin = 0.0, ymax = 1.0;

    [[nodiscard]] double y(double v) const { return y0 + h - (v - ymin) / (ymax - ymin) * h; }
};

inline void axes(std::ostringstream& out, const Plot& p, const std::string& x_label, const std::string& y_label) {
    out << "<line x1=\"" << num(p.x0) << "\" y1=\"" << num(p.y0 + p.h) << "\" x2=\"" << num(p.x0 + p.w) << "\" y2=\""
        << num(p.y0 + p.h) << "\" stroke=\"#000000\"/>\n";
    out << "<line x1=\"" << num(p.x0) << "\" y1=\"" << num(p.y0) << "\" x2=\"" << num(p.x0) << "\" y2=\""
        << num(p.y0 + p.h) << "\" stroke=\"#000000\"/>\n";
    constexpr int kTicks = 5;
    for (int t = 0; t <= kTicks; ++t) {
        const double v = p.ymin + (p.ymax - p.ymin) * t / kTicks;
        const double yy = p.y(v);
        out << "<line x1=\"" << num(p.x0 - 5) << "\" y1=\"" << num(yy) << "\" x2=\"" << num(p.x0) << "\" y2=\""
            << num(yy) << "\" stroke=\"#000000\"/>\n";
        text(out, p.x0 - 8, yy + 4, tick(v), "end", 11);
    }
    text(out, p.x0 + p.w / 2, kHeight - 20, x_label, "middle", 14);
    const std::string rot = " transform=\"rotate(-90 20 " + num(p.y0 + p.h / 2) + ")\"";
    text(out, 20, p.y0 + p.h / 2, y_label, "middle", 14, rot.c_str());
}

inline void legend(std::ostringstream& out, const std::vector<Series>& series) {
    const double x = kWidth - kRight + 20;
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = kTop + 10 + 22.0 * static_cast<double>(s);
        out << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"14\" height=\"14\" fill=\""
            << kPalette[s % kPalette.size()] << "\"/>\n";
        text(out, x + 20, y + 12, series[s].name, "start", 12);
    }
}

}  // namespace detail

inline std::string render_bars(const BarChart& c) {
    if (c.categories.empty() || c.series.empty()) throw Error("bar chart: no data");
    double vmax = 0.0;
    for (const auto& s : c.series) {
        if (s.values.size() != c.categories.size()) throw Error("bar chart: series length does not match categories");
        for (double v : s.values) {
            if (!std::isfinite(v) || v < 0.0) throw Error("bar chart: values must be finite and non-negative");
            vmax = std::max(vmax, v);
        }
    }
    std::ostringstream out;
    detail::open(out, c.title);
    detail::Plot p;
    p.ymax = detail::nice_max(vmax);
    detail::axes(out, p, c.x_label, c.y_label);
    const double group_w = p.w / static_cast<double>(c.categories.size());
    const double bar_w = group_w * 0.8 / static_cast<double>(c.series.size());
    for (std::size_t k = 0; k < c.categories.size(); ++k) {
        const double gx = p.x0 + group_w * static_cast<double>(k) + group_w * 0.1;
        for (std::size_t s = 0; s < c.series.size(); ++s) {
            const double v = c.series[s].values[k];
            const double top = p.y(v);
            out << "<rect x=\"" << svg::num(gx + bar_w * static_cast<double>(s)) << "\" y=\"" << svg::num(top)
                << "\" width=\"" << svg::num(bar_w) << "\" height=\"" << svg::num(p.y0 + p.h - top) << "\" fill=\""
                << kPalette[s % kPalette.size()] << "\"/>\n";
        }
        detail::text(out, gx + group_w * 0.4, p.y0 + p.h + 18, c.categories[k], "middle", 11);
    }
    if (c.series.size() > 1) detail::legend(out, c.series);
    detail::close(out);
    return out.str();
}

inline std::string render_lines(const LineChart& c) {
    if (c.x.empty() || c.series.empty()) throw Error("line chart: no data");
    double ymin = 0.0, ymax = 0.0;
    bool first = true;
    for (const auto& s : c.series) {
        if (s.values.size() != c.x.size()) throw Error("line chart: series length does not match x");
        for (double v : s.values) {
            if (!std::isfinite(v)) throw Error("line chart: non-finite value");
            ymin = first ? v : std::min(ymin, v);
            ymax = first ? v : std::max(ymax, v);
            first = false;
        }
    }
    for (double v : c.x) {
        if (!std::isfinite(v)) throw Error("line chart: non-finite x");
    }
    std::ostringstream out;
    detail::open(out, c.title);
    detail::Plot p;
    p.ymin = std::min(0.0, ymin);
    p.ymax = detail::nice_max(ymax);
    if (p.ymax <= p.ymin) p.ymax = p.ymin + 1.0;
    detail::axes(out, p, c.x_label, c.y_label);

    const double xmin = *std::min_element(c.x.begin(), c.x.end());
    const double xmax = *std::max_element(c.x.begin(), c.x.end());
    const double xspan = xmax > xmin ? xmax - xmin : 1.0;
    auto px = [&](double v) { return c.x.size() == 1 ? p.x0 + p.w / 2 : p.x0 + (v - xmin) / xspan * p.w; };
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        const double xx = px(c.x[i]);
        out << "<line x1=\"" << num(xx) << "\" y1=\"" << num(p.y0 + p.h) << "\" x2=\"" << num(xx) << "\" y2=\""
            << num(p.y0 + p.h + 5) << "\" stroke=\"#000000\"/>\n";
        detail::text(out, xx, p.y0 + p.h + 18, tick(c.x[i]), "middle", 11);
    }
    for (std::size_t s = 0; s < c.series.size(); ++s) {
        const char* colour = kPalette[s % kPalette.size()];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            out << (i ? " " : "") << num(px(c.x[i])) << ',' << num(p.y(c.series[s].values[i]));
        }
        out << "\"/>\n";
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            out << "<circle cx=\"" << num(px(c.x[i])) << "\" cy=\"" << num(p.y(c.series[s].values[i]))
                << "\" r=\"3\" fill=\"" << colour << "\"/>\n";
        }
    }
    detail::legend(out, c.series);
    detail::close(out);
    return out.str();
}

/// 3x3 grid, each cell shaded by its share of the largest cell and
/// annotated with its value. Cell shapes and labels carry class="cell".
inline std::string render_heatmap(const Heatmap& h) {
    double vmax = 0.0;
    for (const auto& row : h.cells) {
        for (double v : row) {
            if (!std::isfinite(v) || v < 0.0) throw Error("heatmap: values must be finite and non-negative");
            vmax = std::max(vmax, v);
        }
    }
    std::ostringstream out;
    detail::open(out, h.title);
    constexpr double cell = 140.0;
    const double x0 = (kWidth - 3 * cell) / 2 + 30, y0 = 90.0;
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            const double share = vmax > 0.0 ? h.cells[r][c] / vmax : 0.0;
            const int shade = 255 - static_cast<int>(std::lround(share * 200.0));
            char fill[8];
            std::snprintf(fill, sizeof fill, "#%02x%02xff", shade, shade);
            out << "<rect class=\"cell\" x=\"" << num(x0 + cell * static_cast<double>(c)) << "\" y=\""
                << num(y0 + cell * static_cast<double>(r)) << "\" width=\"" << num(cell) << "\" height=\"" << num(cell)
                << "\" fill=\"" << fill << "\" stroke=\"#000000\"/>\n";
        }
    }
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            const double v = h.cells[r][c];
            const std::string label = v == std::floor(v) ? std::to_string(static_cast<long long>(v)) : tick(v);
            detail::text(out, x0 + cell * (static_cast<double>(c) + 0.5), y0 + cell * (static_cast<double>(r) + 0.5) + 8,
                         label, "middle", 24, " class=\"cell\"");
        }
    }
    for (std::size_t k = 0; k < 3; ++k) {
        detail::text(out, x0 + cell * (static_cast<double>(k) + 0.5), y0 - 10, h.labels[k], "middle", 14);
        detail::text(out, x0 - 10, y0 + cell * (static_cast<double>(k) + 0.5) + 5, h.labels[k], "end", 14);
    }
    detail::text(out, x0 + 1.5 * cell, y0 + 3 * cell + 35, h.col_label, "middle", 16);
    const std::string rot = " transform=\"rotate(-90 " + num(x0 - 90) + " " + num(y0 + 1.5 * cell) + ")\"";
    detail::text(out, x0 - 90, y0 + 1.5 * cell, h.row_label, "middle", 16, rot.c_str());
    detail::close(out);
    return out.str();
}

enum class ChartKind { histogram, heatmap3x3, lines, grouped_bars };

using ChartData = std::variant<BarChart, LineChart, Heatmap>;

/// Renders `data` as `kind`; the data alternative must match the kind and a
/// histogram takes exactly one series.
inline std::string render(ChartKind kind, const ChartData& data) {
    switch (kind) {
        case ChartKind::histogram: {
            const auto* bars = std::get_if<BarChart>(&data);
            if (!bars || bars->series.size() != 1) throw Error("histogram needs a single-series bar chart");
            return render_bars(*bars);
        }
        case ChartKind::grouped_bars: {
            const auto* bars = std::get_if<BarChart>(&data);
            if (!bars) throw Error("grouped bars need bar chart data");
            return render_bars(*bars);
        }
        case ChartKind::lines: {
            const auto* lines = std::get_if<LineChart>(&data);
            if (!lines) throw Error("line chart needs line data");
            return render_lines(*lines);
        }
        case ChartKind::heatmap3x3: {
            const auto* heat = std::get_if<Heatmap>(&data);
            if (!heat) throw Error("heatmap needs 3x3 data");
            return render_heatmap(*heat);
        }
    }
    throw Error("unknown chart kind");
}

}  // namespace oncograde::svg

#endif  // ONCOGRADE_SVG_HPP
