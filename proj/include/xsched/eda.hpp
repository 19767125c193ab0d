#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "xsched/common.hpp"
#include "xsched/csv.hpp"
#include "xsched/env.hpp"

namespace xsched {

// LOWESS: tricube-weighted local linear regression over the
// ceil(frac * n) nearest points, with one bisquare robustness iteration.
// Equally spaced abscissae (series index).
inline std::vector<double> smooth_trend(const std::vector<double>& series,
                                        double frac = 0.66) {
  const int n = static_cast<int>(series.size());
  if (n < 3) {
    throw std::invalid_argument("smooth_trend: need at least 3 points");
  }
  if (frac <= 0.0 || frac > 1.0) {
    throw std::invalid_argument("smooth_trend: frac must be in (0,1]");
  }
  const int window = std::clamp(
      static_cast<int>(std::ceil(frac * static_cast<double>(n))), 2, n);

  std::vector<double> fitted(n, 0.0);
  std::vector<double> robustness(n, 1.0);

  const auto fit_pass = [&]() {
    for (int i = 0; i < n; ++i) {
      // window of the `window` nearest indices around i
      int lo = i - (window - 1) / 2;
      lo = std::clamp(lo, 0, n - window);
      const int hi = lo + window - 1;
      double h = std::max(static_cast<double>(i - lo),
                          static_cast<double>(hi - i));
      if (h <= 0.0) h = 1.0;

      double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
      for (int j = lo; j <= hi; ++j) {
        const double d = std::abs(static_cast<double>(j - i)) / h;
        double w = 0.0;
        if (d < 1.0) {
          const double u = 1.0 - d * d * d;
          w = u * u * u;
        }
        w *= robustness[j];
        if (w <= 0.0) continue;
        const double x = static_cast<double>(j);
        sw += w;
        swx += w * x;
        swy += w * series[j];
        swxx += w * x * x;
        swxy += w * x * series[j];
      }
      if (sw <= 0.0) {
        fitted[i] = series[i];
        continue;
      }
      const double denom = sw * swxx - swx * swx;
      if (std::abs(denom) < 1e-12 * sw * sw) {
        fitted[i] = swy / sw;  // degenerate window: weighted mean
      } else {
        const double slope = (sw * swxy - swx * swy) / denom;
        const double intercept = (swy - slope * swx) / sw;
        fitted[i] = intercept + slope * static_cast<double>(i);
      }
    }
  };

  fit_pass();
  // one robustness iteration: bisquare weights on the residuals
  std::vector<double> abs_res(n);
  for (int i = 0; i < n; ++i) abs_res[i] = std::abs(series[i] - fitted[i]);
  std::vector<double> sorted = abs_res;
  std::sort(sorted.begin(), sorted.end());
  const double median = n % 2 == 1
                            ? sorted[n / 2]
                            : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  if (median > 0.0) {
    const double cutoff = 6.0 * median;
    for (int i = 0; i < n; ++i) {
      const double u = abs_res[i] / cutoff;
      robustness[i] = u >= 1.0 ? 0.0 : (1.0 - u * u) * (1.0 - u * u);
    }
    fit_pass();
  }
  return fitted;
}

struct ProductionRun {
  int action = 0;  // 0..7
  int length = 0;
};

struct ProductStat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

struct EdaSummary {
  std::array<int, kNumProducts> production_counts{};
  std::vector<ProductionRun> production_order;
  std::vector<double> buffer_trend_raw;
  std::vector<double> buffer_trend_smoothed;
  std::array<ProductStat, kNumProducts> mean_buffer_duration{};
  std::array<double, kNumProducts> mean_demand_24h{};
  std::array<double, kNumProducts> mean_demand_eop{};
};

inline EdaSummary summarize(const TraceDataset& trace, double lowess_frac = 0.66) {
  if (trace.empty()) throw std::invalid_argument("summarize: empty trace");
  EdaSummary s;

  for (const auto& row : trace.rows) {
    s.production_counts[row.action] += 1;
    if (!s.production_order.empty() &&
        s.production_order.back().action == row.action) {
      s.production_order.back().length += 1;
    } else {
      s.production_order.push_back(ProductionRun{row.action, 1});
    }
    s.buffer_trend_raw.push_back(row.features[kIdxFillLevel]);
  }
  s.buffer_trend_smoothed = trace.rows.size() >= 3
                                ? smooth_trend(s.buffer_trend_raw, lowess_frac)
                                : s.buffer_trend_raw;

  const double n = static_cast<double>(trace.rows.size());
  for (int p = 0; p < kNumProducts; ++p) {
    double mean = 0.0;
    for (const auto& row : trace.rows) {
      mean += row.features[kIdxBufferDuration + p];
      s.mean_demand_24h[p] += row.features[kIdxDemand24 + p];
      s.mean_demand_eop[p] += row.features[kIdxDemandEop + p];
    }
    mean /= n;
    s.mean_demand_24h[p] /= n;
    s.mean_demand_eop[p] /= n;
    double ss = 0.0;
    for (const auto& row : trace.rows) {
      const double d = row.features[kIdxBufferDuration + p] - mean;
      ss += d * d;
    }
    s.mean_buffer_duration[p] =
        ProductStat{mean, n > 1.0 ? std::sqrt(ss / (n - 1.0)) : 0.0};
  }
  return s;
}

struct CriticalityRow {
  long long instance_index = 0;
  int product = 0;  // 1..8, the acted-on product
  double criticality = 0.0;
  double demand_24h = 0.0;
  double buffer_duration = 0.0;
  double last_prod_flag = 0.0;
};

// Criticality recomputed from the stored features of the selected rows,
// for the product the agent acted on.
inline std::vector<CriticalityRow> criticality_rows(
    const TraceDataset& trace, const std::vector<long long>& indices) {
  std::vector<CriticalityRow> rows;
  for (long long idx : indices) {
    if (idx < 0 || idx >= static_cast<long long>(trace.rows.size())) {
      throw std::out_of_range("criticality_rows: index " +
                              std::to_string(idx) + " out of range");
    }
    const TraceRow& tr = trace.rows[idx];
    CriticalityRow row;
    row.instance_index = idx;
    row.product = tr.action + 1;
    row.demand_24h = tr.features[kIdxDemand24 + tr.action];
    row.buffer_duration = tr.features[kIdxBufferDuration + tr.action];
    row.criticality = criticality(row.demand_24h, row.buffer_duration);
    row.last_prod_flag = tr.features[kIdxLastType + tr.action];
    rows.push_back(row);
  }
  return rows;
}

// Demand table in the layout: product, next_24h_demand,
// end_of_planning_period_demand (means over the trace), * marks produced.
inline void write_demand_table_csv(const EdaSummary& s,
                                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "product,next_24h_demand,end_of_planning_period_demand,produced\n";
  for (int p = 0; p < kNumProducts; ++p) {
    out << (p + 1) << ',' << csv::format_double(s.mean_demand_24h[p]) << ','
        << csv::format_double(s.mean_demand_eop[p]) << ','
        << (s.production_counts[p] > 0 ? 1 : 0) << '\n';
  }
}

}  // namespace xsched
