#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "xsched/common.hpp"
#include "xsched/csv.hpp"
#include "xsched/env.hpp"
#include "xsched/net.hpp"

namespace xsched {

enum class AttributionMethod { kInputXGradient, kDeepShap, kExactShapley };

inline std::string method_name(AttributionMethod m) {
  switch (m) {
    case AttributionMethod::kInputXGradient: return "input_x_gradient";
    case AttributionMethod::kDeepShap: return "deep_shap";
    case AttributionMethod::kExactShapley: return "exact_shapley";
  }
  throw std::invalid_argument("unknown attribution method");
}

inline AttributionMethod method_from_name(const std::string& name) {
  if (name == "input_x_gradient" || name == "ixg") {
    return AttributionMethod::kInputXGradient;
  }
  if (name == "deep_shap" || name == "deepshap") {
    return AttributionMethod::kDeepShap;
  }
  if (name == "exact_shapley" || name == "exact") {
    return AttributionMethod::kExactShapley;
  }
  throw std::invalid_argument("unknown attribution method '" + name + "'");
}

struct AttributionRecord {
  AttributionMethod method = AttributionMethod::kInputXGradient;
  long long instance_index = 0;
  int action_index = 0;
  std::vector<double> phi;
  double base_value = 0.0;  // phi0; 0 for input_x_gradient
  std::vector<double> feature_values;
};

struct BackgroundSet {
  std::vector<std::vector<double>> rows;

  explicit BackgroundSet(std::vector<std::vector<double>> r = {})
      : rows(std::move(r)) {
    for (const auto& row : rows) {
      if (row.size() != rows.front().size()) {
        throw std::invalid_argument("background rows differ in width");
      }
    }
  }

  static BackgroundSet from_trace(const TraceDataset& trace) {
    std::vector<std::vector<double>> rows;
    rows.reserve(trace.rows.size());
    for (const auto& r : trace.rows) {
      rows.emplace_back(r.features.begin(), r.features.end());
    }
    return BackgroundSet(std::move(rows));
  }

  bool empty() const { return rows.empty(); }
  std::size_t width() const { return rows.empty() ? 0 : rows.front().size(); }

  std::vector<double> mean() const {
    if (rows.empty()) {
      throw std::invalid_argument("background set is empty");
    }
    std::vector<double> mu(rows.front().size(), 0.0);
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < mu.size(); ++i) mu[i] += row[i];
    }
    for (double& v : mu) v /= static_cast<double>(rows.size());
    return mu;
  }
};

// phi_i = x_i * d logit_a / d x_i ; base value 0.
inline AttributionRecord input_x_gradient(const PolicyNetwork& net,
                                          std::span<const double> obs,
                                          int action_index,
                                          long long instance_index = 0) {
  const std::vector<double> grad = grad_input(net, obs, action_index);
  AttributionRecord rec;
  rec.method = AttributionMethod::kInputXGradient;
  rec.instance_index = instance_index;
  rec.action_index = action_index;
  rec.feature_values.assign(obs.begin(), obs.end());
  rec.phi.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) rec.phi[i] = obs[i] * grad[i];
  rec.base_value = 0.0;
  return rec;
}

inline constexpr int kExactShapleyMaxFeatures = 20;

using ScalarModel = std::function<double(std::span<const double>)>;

// Brute-force Shapley values over all feature subsets. Absent features are
// imputed independently from the background rows (interventional
// expectation): v(S) = mean_r f(x_S, r_rest). Exact efficiency holds:
// phi0 + sum phi = f(x).
inline AttributionRecord exact_shapley(const ScalarModel& model,
                                       std::span<const double> obs,
                                       const BackgroundSet& background,
                                       int action_index = 0,
                                       long long instance_index = 0) {
  const int m = static_cast<int>(obs.size());
  if (m > kExactShapleyMaxFeatures) {
    throw std::invalid_argument(
        "exact_shapley: " + std::to_string(m) + " features exceeds the " +
        std::to_string(kExactShapleyMaxFeatures) +
        "-feature enumeration guard; group features or use deep_shap");
  }
  if (background.empty()) {
    throw std::invalid_argument("exact_shapley: background set is empty");
  }
  if (background.width() != obs.size()) {
    throw std::invalid_argument("exact_shapley: background width mismatch");
  }

  const std::uint32_t num_subsets = 1u << m;
  std::vector<double> value(num_subsets, 0.0);
  std::vector<double> composite(obs.size());
  for (std::uint32_t mask = 0; mask < num_subsets; ++mask) {
    double acc = 0.0;
    for (const auto& row : background.rows) {
      for (int i = 0; i < m; ++i) {
        composite[i] = (mask >> i) & 1u ? obs[i] : row[i];
      }
      acc += model(composite);
    }
    value[mask] = acc / static_cast<double>(background.rows.size());
  }

  // weight(s) = s! (m-s-1)! / m! = 1 / (m * C(m-1, s))
  std::vector<double> weight(m, 0.0);
  for (int s = 0; s < m; ++s) {
    double binom = 1.0;
    for (int k = 1; k <= s; ++k) {
      binom = binom * static_cast<double>(m - k) / static_cast<double>(k);
    }
    weight[s] = 1.0 / (static_cast<double>(m) * binom);
  }

  AttributionRecord rec;
  rec.method = AttributionMethod::kExactShapley;
  rec.instance_index = instance_index;
  rec.action_index = action_index;
  rec.feature_values.assign(obs.begin(), obs.end());
  rec.phi.assign(obs.size(), 0.0);
  rec.base_value = value[0];
  for (int i = 0; i < m; ++i) {
    const std::uint32_t bit = 1u << i;
    double phi = 0.0;
    for (std::uint32_t mask = 0; mask < num_subsets; ++mask) {
      if (mask & bit) continue;
      const int s = std::popcount(mask);
      phi += weight[s] * (value[mask | bit] - value[mask]);
    }
    rec.phi[i] = phi;
  }
  return rec;
}

inline AttributionRecord exact_shapley(const PolicyNetwork& net,
                                       std::span<const double> obs,
                                       const BackgroundSet& background,
                                       int action_index,
                                       long long instance_index = 0) {
  if (action_index < 0 || action_index >= net.output_dim()) {
    throw std::domain_error("exact_shapley: action index out of range");
  }
  ScalarModel model = [&net, action_index](std::span<const double> x) {
    return forward(net, x)[action_index];
  };
  return exact_shapley(model, obs, background, action_index, instance_index);
}

namespace detail {

// DeepLIFT rescale multiplier against one reference row: multipliers pass
// through linear layers via the weights; nonlinear units use the chord slope
// (act(x) - act(r)) / (x - r), falling back to the exact derivative when the
// gap is below 1e-9.
inline std::vector<double> deeplift_multipliers(const PolicyNetwork& net,
                                                const ForwardCache& cache_x,
                                                const ForwardCache& cache_r,
                                                int action_index) {
  std::vector<double> m(net.output_dim(), 0.0);
  m[action_index] = 1.0;
  for (int i = static_cast<int>(net.layers.size()) - 1; i >= 0; --i) {
    const Layer& layer = net.layers[i];
    for (int r = 0; r < layer.rows; ++r) {
      const double zx = cache_x.pre[i][r];
      const double zr = cache_r.pre[i][r];
      double slope;
      if (std::abs(zx - zr) < 1e-9) {
        slope = activation_derivative(layer.activation, zx);
      } else {
        slope = (cache_x.post[i][r] - cache_r.post[i][r]) / (zx - zr);
      }
      m[r] *= slope;
    }
    std::vector<double> prev(layer.cols, 0.0);
    for (int r = 0; r < layer.rows; ++r) {
      const double g = m[r];
      if (g == 0.0) continue;
      const double* wrow =
          layer.w.data() + static_cast<std::size_t>(r) * layer.cols;
      for (int c = 0; c < layer.cols; ++c) prev[c] += g * wrow[c];
    }
    m = std::move(prev);
  }
  return m;
}

}  // namespace detail

// DeepSHAP: DeepLIFT rescale attributions averaged over the background rows;
// phi0 is the mean logit over the background. Satisfies summation to delta
// against every single reference, hence phi0 + sum phi = f(x) after
// averaging.
inline AttributionRecord deep_shap(const PolicyNetwork& net,
                                   std::span<const double> obs,
                                   const BackgroundSet& background,
                                   int action_index,
                                   long long instance_index = 0) {
  if (background.empty()) {
    throw std::invalid_argument("deep_shap: background set is empty");
  }
  if (background.width() != obs.size()) {
    throw std::invalid_argument("deep_shap: background width mismatch");
  }
  if (action_index < 0 || action_index >= net.output_dim()) {
    throw std::domain_error("deep_shap: action index out of range");
  }

  ForwardCache cache_x;
  forward_cached(net, obs, &cache_x);

  AttributionRecord rec;
  rec.method = AttributionMethod::kDeepShap;
  rec.instance_index = instance_index;
  rec.action_index = action_index;
  rec.feature_values.assign(obs.begin(), obs.end());
  rec.phi.assign(obs.size(), 0.0);
  rec.base_value = 0.0;

  ForwardCache cache_r;
  for (const auto& row : background.rows) {
    const std::vector<double> out_r = forward_cached(net, row, &cache_r);
    rec.base_value += out_r[action_index];
    const std::vector<double> mult =
        detail::deeplift_multipliers(net, cache_x, cache_r, action_index);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      rec.phi[i] += mult[i] * (obs[i] - row[i]);
    }
  }
  const double n = static_cast<double>(background.rows.size());
  rec.base_value /= n;
  for (double& v : rec.phi) v /= n;
  return rec;
}

// Precomputed caches for explaining many instances against one background.
class DeepShapExplainer {
 public:
  DeepShapExplainer(const PolicyNetwork& net, BackgroundSet background)
      : net_(net), background_(std::move(background)) {
    if (background_.empty()) {
      throw std::invalid_argument("deep_shap: background set is empty");
    }
    caches_.resize(background_.rows.size());
    base_.assign(net_.output_dim(), 0.0);
    for (std::size_t r = 0; r < background_.rows.size(); ++r) {
      const auto out = forward_cached(net_, background_.rows[r], &caches_[r]);
      for (int a = 0; a < net_.output_dim(); ++a) base_[a] += out[a];
    }
    for (double& v : base_) v /= static_cast<double>(background_.rows.size());
  }

  AttributionRecord explain(std::span<const double> obs, int action_index,
                            long long instance_index) const {
    if (action_index < 0 || action_index >= net_.output_dim()) {
      throw std::domain_error("deep_shap: action index out of range");
    }
    ForwardCache cache_x;
    forward_cached(net_, obs, &cache_x);
    AttributionRecord rec;
    rec.method = AttributionMethod::kDeepShap;
    rec.instance_index = instance_index;
    rec.action_index = action_index;
    rec.feature_values.assign(obs.begin(), obs.end());
    rec.phi.assign(obs.size(), 0.0);
    rec.base_value = base_[action_index];
    for (std::size_t r = 0; r < background_.rows.size(); ++r) {
      const std::vector<double> mult = detail::deeplift_multipliers(
          net_, cache_x, caches_[r], action_index);
      for (std::size_t i = 0; i < obs.size(); ++i) {
        rec.phi[i] += mult[i] * (obs[i] - background_.rows[r][i]);
      }
    }
    for (double& v : rec.phi) {
      v /= static_cast<double>(background_.rows.size());
    }
    return rec;
  }

 private:
  PolicyNetwork net_;
  BackgroundSet background_;
  std::vector<ForwardCache> caches_;
  std::vector<double> base_;
};

// Residual of the additivity property phi0 + sum phi = f(x). Not defined for
// input_x_gradient records.
inline double completeness_check(const AttributionRecord& rec,
                                 const PolicyNetwork& net) {
  if (rec.method == AttributionMethod::kInputXGradient) {
    throw std::logic_error(
        "completeness_check does not apply to input_x_gradient records");
  }
  const std::vector<double> out = forward(net, rec.feature_values);
  const double total =
      rec.base_value + std::accumulate(rec.phi.begin(), rec.phi.end(), 0.0);
  return total - out[rec.action_index];
}

// ---- aggregation ----

struct FeatureAggregate {
  int feature = 0;
  std::string feature_name;
  double mean_abs_phi = 0.0;
  double mean_phi = 0.0;
  int n_positive = 0;
  int n_negative = 0;
  int n_zero = 0;
};

struct ActionAggregate {
  int action = 0;
  bool never_taken = false;  // no records for this action
  int n_records = 0;
  std::vector<FeatureAggregate> ranked;  // by mean |phi| desc, index tie-break
};

// Per-action feature ranking by mean |phi| over the given records, with
// signed means and per-instance sign counts.
inline std::vector<ActionAggregate> aggregate_by_action(
    const std::vector<AttributionRecord>& records,
    const std::vector<std::string>& names) {
  std::vector<ActionAggregate> result;
  for (int action = 0; action < kNumActions; ++action) {
    ActionAggregate agg;
    agg.action = action;
    std::vector<const AttributionRecord*> recs;
    for (const auto& r : records) {
      if (r.action_index == action) recs.push_back(&r);
    }
    agg.n_records = static_cast<int>(recs.size());
    if (recs.empty()) {
      agg.never_taken = true;
      result.push_back(std::move(agg));
      continue;
    }
    const std::size_t width = recs.front()->phi.size();
    for (std::size_t f = 0; f < width; ++f) {
      FeatureAggregate fa;
      fa.feature = static_cast<int>(f);
      fa.feature_name = f < names.size() ? names[f] : "f" + std::to_string(f);
      for (const auto* r : recs) {
        const double v = r->phi[f];
        fa.mean_abs_phi += std::abs(v);
        fa.mean_phi += v;
        if (v > 0.0) {
          ++fa.n_positive;
        } else if (v < 0.0) {
          ++fa.n_negative;
        } else {
          ++fa.n_zero;
        }
      }
      fa.mean_abs_phi /= static_cast<double>(recs.size());
      fa.mean_phi /= static_cast<double>(recs.size());
      agg.ranked.push_back(std::move(fa));
    }
    std::stable_sort(agg.ranked.begin(), agg.ranked.end(),
                     [](const FeatureAggregate& a, const FeatureAggregate& b) {
                       if (a.mean_abs_phi != b.mean_abs_phi) {
                         return a.mean_abs_phi > b.mean_abs_phi;
                       }
                       return a.feature < b.feature;
                     });
    result.push_back(std::move(agg));
  }
  return result;
}

// ---- 3-sigma outlier alerting ----

inline constexpr int kOutlierMinRecords = 30;

struct OutlierFlag {
  int action = 0;
  int feature = 0;
  long long instance_index = 0;
  double value = 0.0;
  double zscore = 0.0;
};

struct OutlierReport {
  std::vector<OutlierFlag> flags;
  std::vector<int> insufficient_actions;  // fewer than kOutlierMinRecords
};

// Flags attributions further than 3 sample standard deviations from their
// (feature, action) mean. Zero-variance columns produce no flags.
inline OutlierReport outlier_flags(
    const std::vector<AttributionRecord>& records,
    int min_records = kOutlierMinRecords) {
  OutlierReport report;
  for (int action = 0; action < kNumActions; ++action) {
    std::vector<const AttributionRecord*> recs;
    for (const auto& r : records) {
      if (r.action_index == action) recs.push_back(&r);
    }
    if (recs.empty()) continue;
    const int n = static_cast<int>(recs.size());
    if (n < min_records) {
      report.insufficient_actions.push_back(action);
      continue;
    }
    const std::size_t width = recs.front()->phi.size();
    for (std::size_t f = 0; f < width; ++f) {
      double mean = 0.0;
      for (const auto* r : recs) mean += r->phi[f];
      mean /= n;
      double ss = 0.0;
      for (const auto* r : recs) {
        const double d = r->phi[f] - mean;
        ss += d * d;
      }
      const double stddev = std::sqrt(ss / (n - 1));
      if (stddev == 0.0) continue;
      for (const auto* r : recs) {
        const double z = (r->phi[f] - mean) / stddev;
        if (std::abs(z) > 3.0) {
          report.flags.push_back(OutlierFlag{action, static_cast<int>(f),
                                             r->instance_index, r->phi[f], z});
        }
      }
    }
  }
  return report;
}

// ---- csv io ----

inline void write_attribution_csv(const std::vector<AttributionRecord>& records,
                                  const std::vector<std::string>& names,
                                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "method,instance_index,action";
  for (const auto& n : names) out << ",phi_" << n;
  out << ",base_value\n";
  for (const auto& rec : records) {
    if (rec.phi.size() != names.size()) {
      throw std::runtime_error("attribution record width mismatch");
    }
    out << method_name(rec.method) << ',' << rec.instance_index << ','
        << rec.action_index;
    for (double v : rec.phi) out << ',' << csv::format_double(v);
    out << ',' << csv::format_double(rec.base_value) << '\n';
  }
}

// Reads records back; feature_values are filled from the trace when given
// (records reference trace rows by instance_index).
inline std::vector<AttributionRecord> read_attribution_csv(
    const std::string& path, const TraceDataset* trace = nullptr) {
  const csv::Table t = csv::read_file(path);
  if (t.header.size() < 4 || t.header[0] != "method" ||
      t.header[1] != "instance_index" || t.header[2] != "action" ||
      t.header.back() != "base_value") {
    throw std::runtime_error("attribution file " + path +
                             ": unexpected header layout");
  }
  const std::size_t width = t.header.size() - 4;
  std::vector<AttributionRecord> records;
  for (const auto& raw : t.rows) {
    AttributionRecord rec;
    rec.method = method_from_name(raw[0]);
    rec.instance_index = csv::parse_int(raw[1]);
    rec.action_index = static_cast<int>(csv::parse_int(raw[2]));
    rec.phi.resize(width);
    for (std::size_t i = 0; i < width; ++i) {
      rec.phi[i] = csv::parse_double(raw[3 + i]);
    }
    rec.base_value = csv::parse_double(raw.back());
    if (trace) {
      if (rec.instance_index < 0 ||
          rec.instance_index >= static_cast<long long>(trace->rows.size())) {
        throw std::runtime_error("attribution file " + path +
                                 ": instance_index out of trace range");
      }
      const auto& f = trace->rows[rec.instance_index].features;
      rec.feature_values.assign(f.begin(), f.end());
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace xsched
