#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "xsched/common.hpp"
#include "xsched/csv.hpp"
#include "xsched/sim.hpp"

namespace xsched {

inline constexpr double kDemandWindowMinutes = 1440.0;  // next 24 hours

// Observation layout (33 features, all in [0,1]):
//   [0..7]   next_24h_demand_prod1..8
//   [8..15]  end_of_planning_period_demand_prod1..8
//   [16..23] buffer_content_duration_prod1..8
//   [24]     buffer_fill_level
//   [25..32] last_prod_type_is_prod1..8 (one-hot, all zero before the
//            first lot)
using Observation = std::array<double, kObservationDim>;

inline constexpr int kIdxDemand24 = 0;
inline constexpr int kIdxDemandEop = 8;
inline constexpr int kIdxBufferDuration = 16;
inline constexpr int kIdxFillLevel = 24;
inline constexpr int kIdxLastType = 25;

inline const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (int p = 1; p <= kNumProducts; ++p) {
      v.push_back("next_24h_demand_prod" + std::to_string(p));
    }
    for (int p = 1; p <= kNumProducts; ++p) {
      v.push_back("end_of_planning_period_demand_prod" + std::to_string(p));
    }
    for (int p = 1; p <= kNumProducts; ++p) {
      v.push_back("buffer_content_duration_prod" + std::to_string(p));
    }
    v.push_back("buffer_fill_level");
    for (int p = 1; p <= kNumProducts; ++p) {
      v.push_back("last_prod_type_is_prod" + std::to_string(p));
    }
    return v;
  }();
  return names;
}

inline int feature_index(const std::string& name) {
  const auto& names = feature_names();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

// Normalization denominators, fixed at week start: the largest per-product
// raw demand of each kind over the pristine schedules.
struct DemandScale {
  double max_window_units = 1.0;
  double max_total_units = 1.0;
};

inline DemandScale demand_scale(const ScenarioWeek& week) {
  const SimState fresh = initial_state(week);
  const auto window = units_required_in_window(fresh, week, kDemandWindowMinutes);
  const auto total = units_required_remaining(fresh, week);
  DemandScale scale;
  for (int p = 0; p < kNumProducts; ++p) {
    scale.max_window_units = std::max(scale.max_window_units,
                                      static_cast<double>(window[p]));
    scale.max_total_units = std::max(scale.max_total_units,
                                     static_cast<double>(total[p]));
  }
  return scale;
}

// Everything the observation and the reward need from one state; computed in
// one pass so the exhaustion lookahead runs once per step.
struct StateFeatures {
  Observation observation{};
  std::array<double, kNumProducts> exhaustion_minutes{};
  std::array<long long, kNumProducts> remaining_units{};
};

inline StateFeatures compute_state_features(const SimState& state,
                                            const ScenarioWeek& week) {
  const DemandScale scale = demand_scale(week);
  const auto window = units_required_in_window(state, week, kDemandWindowMinutes);
  const auto total = units_required_remaining(state, week);
  const auto exhaustion = buffer_exhaustion_times(state, week);

  StateFeatures f;
  f.exhaustion_minutes = exhaustion;
  f.remaining_units = total;
  Observation& obs = f.observation;
  for (int p = 0; p < kNumProducts; ++p) {
    const double net24 =
        std::max(0.0, static_cast<double>(window[p] - state.buffer[p]));
    const double net_eop =
        std::max(0.0, static_cast<double>(total[p] - state.buffer[p]));
    obs[kIdxDemand24 + p] = std::min(1.0, net24 / scale.max_window_units);
    obs[kIdxDemandEop + p] = std::min(1.0, net_eop / scale.max_total_units);
    obs[kIdxBufferDuration + p] =
        std::clamp(exhaustion[p] / week.planning_horizon_minutes, 0.0, 1.0);
  }
  obs[kIdxFillLevel] =
      week.buffer_capacity > 0
          ? std::clamp(static_cast<double>(state.buffer_total()) /
                           static_cast<double>(week.buffer_capacity),
                       0.0, 1.0)
          : 0.0;
  if (state.last_pas_type != 0) {
    obs[kIdxLastType + state.last_pas_type - 1] = 1.0;
  }
  return f;
}

// Demands are net of current stock (unmet demand only) and min-max
// normalized against the week-start maxima; buffer content durations are
// normalized by the planning horizon.
inline Observation encode_observation(const SimState& state,
                                      const ScenarioWeek& week) {
  return compute_state_features(state, week).observation;
}

// Ratio of 24h net demand to buffer content duration; zero demand means zero
// criticality regardless of the buffer.
inline double criticality(double demand_24h, double buffer_duration) {
  if (demand_24h < 0.0 || buffer_duration < 0.0) {
    throw std::domain_error("criticality: negative input");
  }
  if (demand_24h == 0.0) return 0.0;
  return demand_24h / std::max(buffer_duration, 1e-6);
}

struct RewardConfig {
  double setup_weight = 0.01;            // lambda
  double margin_threshold_minutes = 30;  // safety margin per product
  double margin_penalty = 1.0;
  double discount = 0.99;  // gamma

  void validate() const {
    if (setup_weight < 0.0 || margin_penalty < 0.0) {
      throw std::invalid_argument("reward config: weights must be >= 0");
    }
    if (discount < 0.0 || discount > 1.0) {
      throw std::invalid_argument("reward config: discount must be in [0,1]");
    }
  }
};

inline double reward_from_features(const StateFeatures& next_features,
                                   const SimState& next, double setup_minutes,
                                   const RewardConfig& cfg) {
  const Observation& obs = next_features.observation;
  double criticality_sum = 0.0;
  for (int p = 0; p < kNumProducts; ++p) {
    criticality_sum +=
        criticality(obs[kIdxDemand24 + p], obs[kIdxBufferDuration + p]);
  }
  int below_margin = 0;
  for (int p = 0; p < kNumProducts; ++p) {
    const bool has_demand = next_features.remaining_units[p] > next.buffer[p];
    if (has_demand &&
        next_features.exhaustion_minutes[p] < cfg.margin_threshold_minutes) {
      ++below_margin;
    }
  }
  return -criticality_sum - cfg.margin_penalty * below_margin -
         cfg.setup_weight * setup_minutes;
}

// r = -sum_p criticality_p(next)
//     - margin_penalty * |{p : net demand > 0 and buffer duration < threshold}|
//     - lambda * setup minutes incurred by the transition.
// Strictly nonpositive.
inline double reward(const SimState& prev, int action, const SimState& next,
                     const RewardConfig& cfg, const ScenarioWeek& week) {
  require_product(action + 1);
  cfg.validate();
  const double setup_minutes =
      next.cumulative_setup_minutes - prev.cumulative_setup_minutes;
  return reward_from_features(compute_state_features(next, week), next,
                              setup_minutes, cfg);
}

// ---- trace dataset ----

struct TraceRow {
  long long step_index = 0;
  Observation features{};
  int action = 0;  // 0..7
};

struct TraceDataset {
  std::vector<TraceRow> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

inline void write_trace_csv(const TraceDataset& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "step_index";
  for (const auto& name : feature_names()) out << ',' << name;
  out << ",action\n";
  for (const auto& row : trace.rows) {
    out << row.step_index;
    for (double v : row.features) out << ',' << csv::format_double(v);
    out << ',' << row.action << '\n';
  }
}

inline TraceDataset read_trace_csv(const std::string& path) {
  const csv::Table t = csv::read_file(path);
  if (t.header.size() != kObservationDim + 2) {
    throw std::runtime_error("trace file " + path + ": expected " +
                             std::to_string(kObservationDim + 2) +
                             " columns, found " +
                             std::to_string(t.header.size()));
  }
  if (t.header.front() != "step_index" || t.header.back() != "action") {
    throw std::runtime_error("trace file " + path +
                             ": expected step_index ... action layout");
  }
  const auto& names = feature_names();
  for (int i = 0; i < kObservationDim; ++i) {
    if (t.header[i + 1] != names[i]) {
      throw std::runtime_error("trace file " + path + ": column " +
                               std::to_string(i + 1) + " is '" +
                               t.header[i + 1] + "', expected '" + names[i] +
                               "'");
    }
  }
  TraceDataset trace;
  for (const auto& raw : t.rows) {
    TraceRow row;
    row.step_index = csv::parse_int(raw[0]);
    for (int i = 0; i < kObservationDim; ++i) {
      row.features[i] = csv::parse_double(raw[i + 1]);
    }
    row.action = static_cast<int>(csv::parse_int(raw[kObservationDim + 1]));
    if (row.action < 0 || row.action >= kNumActions) {
      throw std::runtime_error("trace file " + path + ": action out of range");
    }
    trace.rows.push_back(row);
  }
  return trace;
}

// ---- episodic environment ----

class Env {
 public:
  Env(ScenarioWeek week, RewardConfig reward_cfg = {})
      : week_(std::move(week)), reward_cfg_(reward_cfg) {
    week_.validate();
    reward_cfg_.validate();
    reset();
  }

  const ScenarioWeek& week() const { return week_; }
  const RewardConfig& reward_config() const { return reward_cfg_; }
  const SimState& state() const { return state_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }

  Observation reset() {
    state_ = initial_state(week_);
    steps_ = 0;
    done_ = is_terminal();
    return encode_observation(state_, week_);
  }

  struct StepResult {
    Observation observation{};
    double reward = 0.0;
    bool done = false;
  };

  // `action` in 0..7 selects the product (action + 1) for the next lot.
  StepResult step(int action) {
    if (done_) throw std::logic_error("Env::step called after episode end");
    if (action < 0 || action >= kNumActions) {
      throw std::domain_error("Env::step: action out of range");
    }
    const LotResult lot = produce_lot(state_, week_, action + 1);
    steps_ += 1;
    done_ = is_terminal();
    StepResult result;
    const StateFeatures features = compute_state_features(state_, week_);
    result.observation = features.observation;
    result.reward =
        reward_from_features(features, state_, lot.setup_minutes, reward_cfg_);
    result.done = done_;
    return result;
  }

 private:
  bool is_terminal() const {
    return state_.clock_minutes >= week_.planning_horizon_minutes ||
           schedules_complete(week_, state_);
  }

  ScenarioWeek week_;
  RewardConfig reward_cfg_;
  SimState state_{};
  int steps_ = 0;
  bool done_ = false;
};

// Uniform reproducible draw over the configured weeks.
inline const ScenarioWeek& sample_scenario(
    const std::vector<ScenarioWeek>& weeks, std::uint64_t seed) {
  if (weeks.empty()) {
    throw std::invalid_argument("sample_scenario: no weeks configured");
  }
  return weeks[mix64(seed) % weeks.size()];
}

}  // namespace xsched
