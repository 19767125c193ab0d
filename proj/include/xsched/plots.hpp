#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "xsched/attrib.hpp"
#include "xsched/common.hpp"
#include "xsched/eda.hpp"

namespace xsched::plots {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Minimal SVG canvas with a fixed margin and linear data-to-pixel mapping.
class Svg {
 public:
  Svg(double width, double height) : width_(width), height_(height) {
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
          << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
          << height << "\">\n";
    body_ << "<rect width=\"" << width << "\" height=\"" << height
          << "\" fill=\"white\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2,
            const std::string& color = "#444", double stroke = 1.0) {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\""
          << fmt(x2) << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << color
          << "\" stroke-width=\"" << stroke << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill) {
    body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\""
          << fmt(w) << "\" height=\"" << fmt(h) << "\" fill=\"" << fill
          << "\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& fill,
              double opacity = 1.0) {
    body_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\""
          << r << "\" fill=\"" << fill << "\" fill-opacity=\"" << opacity
          << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 12,
            const std::string& anchor = "start",
            const std::string& color = "#222") {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y)
          << "\" font-family=\"sans-serif\" font-size=\"" << size
          << "\" text-anchor=\"" << anchor << "\" fill=\"" << color << "\">"
          << escape(s) << "</text>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& color, double stroke = 1.5) {
    body_ << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"" << stroke << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << fmt(x) << ',' << fmt(y) << ' ';
    body_ << "\"/>\n";
  }

  void save(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body_.str() << "</svg>\n";
  }

  double width() const { return width_; }
  double height() const { return height_; }

 private:
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out += c;
      }
    }
    return out;
  }

  double width_, height_;
  std::ostringstream body_;
};

inline const char* product_color(int product /*1..8*/) {
  static const char* colors[kNumProducts] = {"#4c72b0", "#dd8452", "#55a868",
                                             "#c44e52", "#8172b3", "#937860",
                                             "#da8bc3", "#8c8c8c"};
  return colors[(product - 1) % kNumProducts];
}

// Bar chart of lots produced per product.
inline void plot_production_counts(const EdaSummary& s,
                                   const std::string& path) {
  Svg svg(520, 320);
  const double left = 50, bottom = 280, top = 40, w = 440;
  int max_count = 1;
  for (int c : s.production_counts) max_count = std::max(max_count, c);
  const double bar_w = w / kNumProducts * 0.7;
  for (int p = 0; p < kNumProducts; ++p) {
    const double x = left + w / kNumProducts * (p + 0.15);
    const double h =
        (bottom - top) * static_cast<double>(s.production_counts[p]) /
        static_cast<double>(max_count);
    svg.rect(x, bottom - h, bar_w, h, product_color(p + 1));
    svg.text(x + bar_w / 2, bottom + 16, std::to_string(p + 1), 12, "middle");
    if (s.production_counts[p] > 0) {
      svg.text(x + bar_w / 2, bottom - h - 4,
               std::to_string(s.production_counts[p]), 11, "middle");
    }
  }
  svg.line(left, bottom, left + w, bottom);
  svg.text(left + w / 2, 305, "product", 12, "middle");
  svg.text(left + w / 2, 22, "lots produced per product", 14, "middle");
  svg.save(path);
}

// Colored strip showing the order of produced lots.
inline void plot_production_order(const TraceDataset& trace,
                                  const std::string& path) {
  const int n = static_cast<int>(trace.rows.size());
  Svg svg(std::max(520.0, n * 6.0 + 80.0), 180);
  const double left = 40, top = 60, h = 60;
  const double cell = (svg.width() - 80.0) / std::max(1, n);
  for (int i = 0; i < n; ++i) {
    svg.rect(left + i * cell, top, cell, h,
             product_color(trace.rows[i].action + 1));
  }
  for (int p = 0; p < kNumProducts; ++p) {
    const double x = left + p * 58.0;
    svg.rect(x, 140, 10, 10, product_color(p + 1));
    svg.text(x + 14, 149, "prod" + std::to_string(p + 1), 10);
  }
  svg.text(left, 40, "order of produced lots (left to right)", 14);
  svg.save(path);
}

// Buffer fill level per decision with its smoothed trend.
inline void plot_buffer_trend(const EdaSummary& s, const std::string& path) {
  const auto& raw = s.buffer_trend_raw;
  const int n = static_cast<int>(raw.size());
  Svg svg(560, 340);
  const double left = 60, right = 530, top = 50, bottom = 290;
  double lo = 1.0, hi = 0.0;
  for (double v : raw) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;
  const auto xs = [&](int i) {
    return left + (right - left) * i / std::max(1, n - 1);
  };
  const auto ys = [&](double v) {
    return bottom - (bottom - top) * (v - lo) / (hi - lo);
  };
  std::vector<std::pair<double, double>> pts, smooth;
  for (int i = 0; i < n; ++i) {
    pts.emplace_back(xs(i), ys(raw[i]));
    smooth.emplace_back(xs(i), ys(s.buffer_trend_smoothed[i]));
  }
  svg.line(left, bottom, right, bottom);
  svg.line(left, top, left, bottom);
  svg.polyline(pts, "#9ecae1", 1.0);
  svg.polyline(smooth, "#d62728", 2.0);
  svg.text(left, 30, "buffer fill level over decisions (red: lowess trend)",
           14);
  svg.text(left - 6, bottom + 4, fmt(lo), 10, "end");
  svg.text(left - 6, top + 4, fmt(hi), 10, "end");
  svg.save(path);
}

// Mean buffer content duration per product with +-1 std error bars.
inline void plot_mean_buffer_duration(const EdaSummary& s,
                                      const std::string& path) {
  Svg svg(520, 320);
  const double left = 60, bottom = 280, top = 40, w = 420;
  double hi = 0.0;
  for (const auto& st : s.mean_buffer_duration) {
    hi = std::max(hi, st.mean + st.stddev);
  }
  if (hi <= 0.0) hi = 1.0;
  const auto ys = [&](double v) {
    return bottom - (bottom - top) * v / hi;
  };
  for (int p = 0; p < kNumProducts; ++p) {
    const double x = left + w / kNumProducts * (p + 0.5);
    const auto& st = s.mean_buffer_duration[p];
    svg.circle(x, ys(st.mean), 4, product_color(p + 1));
    svg.line(x, ys(std::max(0.0, st.mean - st.stddev)),
             x, ys(st.mean + st.stddev), "#555", 1.5);
    svg.text(x, bottom + 16, std::to_string(p + 1), 12, "middle");
  }
  svg.line(left, bottom, left + w, bottom);
  svg.text(left + w / 2, 22, "mean buffer content duration (normalized, +-1 sd)",
           13, "middle");
  svg.save(path);
}

// SHAP-style beeswarm for one action: top features by mean |phi|, one point
// per instance, color encodes the raw feature value (blue low, red high).
inline void plot_beeswarm(const std::vector<AttributionRecord>& records,
                          int action, const std::vector<std::string>& names,
                          const std::string& path, int top_k = 10) {
  std::vector<const AttributionRecord*> recs;
  for (const auto& r : records) {
    if (r.action_index == action) recs.push_back(&r);
  }
  const auto aggregates = aggregate_by_action(records, names);
  const auto& agg = aggregates[action];

  const int k = std::min<int>(top_k, static_cast<int>(agg.ranked.size()));
  Svg svg(720, 80.0 + 34.0 * k);
  svg.text(20, 26, "attribution beeswarm, action " + std::to_string(action) +
                       " (product " + std::to_string(action + 1) + ")",
           14);
  if (recs.empty()) {
    svg.text(20, 60, "action never taken: no records", 12);
    svg.save(path);
    return;
  }

  double max_abs = 1e-12;
  for (const auto* r : recs) {
    for (double v : r->phi) max_abs = std::max(max_abs, std::abs(v));
  }
  const double left = 240, right = 690;
  const double mid = (left + right) / 2.0;
  const auto xs = [&](double phi) {
    return mid + (right - left) / 2.0 * phi / max_abs;
  };
  svg.line(mid, 50, mid, 70.0 + 34.0 * k, "#bbb");

  for (int row = 0; row < k; ++row) {
    const auto& fa = agg.ranked[row];
    const double y = 70.0 + 34.0 * row;
    svg.text(230, y + 4, fa.feature_name, 11, "end");
    // per-feature min/max for the color scale
    double fmin = recs.front()->feature_values[fa.feature];
    double fmax = fmin;
    for (const auto* r : recs) {
      fmin = std::min(fmin, r->feature_values[fa.feature]);
      fmax = std::max(fmax, r->feature_values[fa.feature]);
    }
    int i = 0;
    for (const auto* r : recs) {
      const double v = r->feature_values[fa.feature];
      const double t =
          std::clamp(fmax > fmin ? (v - fmin) / (fmax - fmin) : 0.5, 0.0, 1.0);
      const int red = static_cast<int>(30 + t * 210);
      const int blue = static_cast<int>(240 - t * 210);
      char color[16];
      std::snprintf(color, sizeof(color), "#%02x30%02x", red, blue);
      // deterministic vertical jitter so coincident points stay visible
      const double jitter = ((i * 2654435761u) % 17) - 8.0;
      svg.circle(xs(r->phi[fa.feature]), y + jitter * 1.1, 2.4, color, 0.8);
      ++i;
    }
  }
  svg.text(left, 60.0 + 34.0 * k + 6, "-" + fmt(max_abs), 10, "middle");
  svg.text(right, 60.0 + 34.0 * k + 6, fmt(max_abs), 10, "middle");
  svg.save(path);
}

}  // namespace xsched::plots
