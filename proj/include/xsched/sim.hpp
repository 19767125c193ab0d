#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xsched/common.hpp"

namespace xsched {

// One batch in a FAS station schedule: `quantity` units of `product`, each
// unit pulled from the buffer at processing start and finished after
// minutes_per_unit.
struct FasItem {
  int product = 0;
  int quantity = 0;
  double minutes_per_unit = 0.0;
};

struct ScenarioWeek {
  std::string id;
  std::vector<std::vector<FasItem>> fas_schedules;
  std::array<int, kNumProducts> initial_buffer{};
  int buffer_capacity = 0;
  std::array<std::array<double, kNumProducts>, kNumProducts> setup_matrix{};
  std::array<double, kNumProducts> pas_minutes_per_unit{};
  double planning_horizon_minutes = 0.0;

  void validate() const {
    if (planning_horizon_minutes <= 0.0) {
      throw std::invalid_argument("scenario " + id +
                                  ": planning horizon must be positive");
    }
    if (buffer_capacity < 0) {
      throw std::invalid_argument("scenario " + id +
                                  ": buffer capacity must be nonnegative");
    }
    long long total_initial = 0;
    for (int p = 0; p < kNumProducts; ++p) {
      if (initial_buffer[p] < 0) {
        throw std::invalid_argument("scenario " + id +
                                    ": negative initial buffer");
      }
      total_initial += initial_buffer[p];
      if (pas_minutes_per_unit[p] < 0.0) {
        throw std::invalid_argument("scenario " + id +
                                    ": negative PAS processing time");
      }
      for (int q = 0; q < kNumProducts; ++q) {
        if (setup_matrix[p][q] < 0.0) {
          throw std::invalid_argument("scenario " + id +
                                      ": negative setup time");
        }
      }
      if (setup_matrix[p][p] != 0.0) {
        throw std::invalid_argument(
            "scenario " + id + ": setup matrix diagonal must be zero");
      }
    }
    if (total_initial > buffer_capacity) {
      throw std::invalid_argument(
          "scenario " + id + ": initial buffer exceeds buffer capacity");
    }
    for (const auto& schedule : fas_schedules) {
      for (const auto& item : schedule) {
        require_product(item.product);
        if (item.quantity < 0 || item.minutes_per_unit < 0.0) {
          throw std::invalid_argument("scenario " + id +
                                      ": negative schedule entry");
        }
      }
    }
  }

  int num_stations() const { return static_cast<int>(fas_schedules.size()); }
};

// Progress of one FAS station through its schedule. `units_done` counts
// completed units of the current item; a unit with remaining_minutes > 0 is
// in flight (already withdrawn from the buffer, not yet counted done).
struct StationPos {
  std::size_t item_index = 0;
  int units_done = 0;
  double remaining_minutes = 0.0;

  bool operator==(const StationPos&) const = default;
};

struct SimState {
  double clock_minutes = 0.0;
  std::array<int, kNumProducts> buffer{};
  int last_pas_type = 0;  // 1..8, 0 = no lot produced yet
  std::vector<StationPos> fas_positions;
  std::vector<double> cumulative_idle_minutes;
  double cumulative_setup_minutes = 0.0;

  // diagnostics
  std::array<long long, kNumProducts> units_stored{};    // entered the buffer
  std::array<long long, kNumProducts> units_consumed{};  // pulled by FAS
  long long lot_units_dropped = 0;  // produced but dropped at full buffer

  bool operator==(const SimState&) const = default;

  int buffer_total() const {
    int total = 0;
    for (int v : buffer) total += v;
    return total;
  }

  double total_idle_minutes() const {
    double total = 0.0;
    for (double v : cumulative_idle_minutes) total += v;
    return total;
  }
};

inline SimState initial_state(const ScenarioWeek& week) {
  SimState s;
  s.buffer = week.initial_buffer;
  s.fas_positions.assign(week.fas_schedules.size(), StationPos{});
  s.cumulative_idle_minutes.assign(week.fas_schedules.size(), 0.0);
  return s;
}

inline bool station_done(const ScenarioWeek& week, const StationPos& pos,
                         int station) {
  return pos.item_index >= week.fas_schedules[station].size() &&
         pos.remaining_minutes == 0.0;
}

inline bool schedules_complete(const ScenarioWeek& week, const SimState& s) {
  for (int st = 0; st < week.num_stations(); ++st) {
    if (!station_done(week, s.fas_positions[st], st)) return false;
  }
  return true;
}

namespace detail {

// Mark the in-flight unit finished and move to the next schedule item when
// the current one is exhausted.
inline void complete_unit(const ScenarioWeek& week, StationPos& pos,
                          int station) {
  const auto& schedule = week.fas_schedules[station];
  pos.remaining_minutes = 0.0;
  pos.units_done += 1;
  while (pos.item_index < schedule.size() &&
         pos.units_done >= schedule[pos.item_index].quantity) {
    pos.item_index += 1;
    pos.units_done = 0;
  }
}

// Start as many units as possible at the current instant (handles
// zero-duration units). Stations are served in index order; pulls at the
// same instant are serialized that way.
inline void start_ready_units(const ScenarioWeek& week, SimState& s) {
  for (int st = 0; st < week.num_stations(); ++st) {
    auto& pos = s.fas_positions[st];
    const auto& schedule = week.fas_schedules[st];
    while (pos.remaining_minutes == 0.0 && pos.item_index < schedule.size()) {
      const FasItem& item = schedule[pos.item_index];
      if (item.quantity == 0) {  // empty entry, skip
        pos.item_index += 1;
        pos.units_done = 0;
        continue;
      }
      if (s.buffer[item.product - 1] <= 0) break;  // starved
      s.buffer[item.product - 1] -= 1;
      s.units_consumed[item.product - 1] += 1;
      if (item.minutes_per_unit == 0.0) {
        complete_unit(week, pos, st);
      } else {
        pos.remaining_minutes = item.minutes_per_unit;
      }
    }
  }
}

}  // namespace detail

// Advance the FAS stations by dt minutes of simulated time. Stations consume
// units from their schedules in order, one at a time, pulling from the shared
// buffer at unit start; a station whose next product is out of stock accrues
// idle time (stock can only grow through produce_lot, so starvation persists
// for the rest of the interval). Returns idle minutes accrued per station.
inline std::vector<double> advance_fas(SimState& s, const ScenarioWeek& week,
                                       double dt) {
  if (dt < 0.0) throw std::domain_error("advance_fas: negative dt");
  const int n = week.num_stations();
  std::vector<double> idle(n, 0.0);
  if (dt == 0.0) return idle;

  double t = 0.0;
  while (true) {
    detail::start_ready_units(week, s);
    if (t >= dt) break;

    double step = dt - t;
    bool any_in_flight = false;
    for (int st = 0; st < n; ++st) {
      const double rem = s.fas_positions[st].remaining_minutes;
      if (rem > 0.0) {
        any_in_flight = true;
        step = std::min(step, rem);
      }
    }
    for (int st = 0; st < n; ++st) {
      const auto& pos = s.fas_positions[st];
      if (pos.remaining_minutes == 0.0 && !station_done(week, pos, st)) {
        idle[st] += step;
      }
    }
    if (any_in_flight) {
      for (int st = 0; st < n; ++st) {
        auto& pos = s.fas_positions[st];
        if (pos.remaining_minutes > 0.0) {
          pos.remaining_minutes -= step;
          if (pos.remaining_minutes <= 0.0) {
            detail::complete_unit(week, pos, st);
          }
        }
      }
    }
    const double next_t = t + step;
    if (next_t <= t) break;  // step below time resolution
    t = next_t;
    if (!any_in_flight) break;  // everyone starved or done, nothing changes
  }

  s.clock_minutes += dt;
  for (int st = 0; st < n; ++st) s.cumulative_idle_minutes[st] += idle[st];
  return idle;
}

struct LotResult {
  double setup_minutes = 0.0;
  double elapsed_minutes = 0.0;
  int units_stored = 0;
  int units_dropped = 0;
  std::vector<double> idle_by_station;
};

// Produce one 50-unit lot of `product` in the PAS. The decision is atomic but
// the elapsed interval (sequence-dependent setup + lot processing) is
// interleaved with FAS consumption; the finished units enter the buffer at
// the end of the interval, capped by remaining capacity.
inline LotResult produce_lot(SimState& s, const ScenarioWeek& week,
                             int product) {
  require_product(product);
  const double setup =
      (s.last_pas_type != 0 && s.last_pas_type != product)
          ? week.setup_matrix[s.last_pas_type - 1][product - 1]
          : 0.0;
  const double lot_minutes =
      static_cast<double>(kLotUnits) * week.pas_minutes_per_unit[product - 1];

  LotResult result;
  result.setup_minutes = setup;
  result.elapsed_minutes = setup + lot_minutes;
  result.idle_by_station = advance_fas(s, week, result.elapsed_minutes);

  const int room = week.buffer_capacity - s.buffer_total();
  result.units_stored = std::min(kLotUnits, std::max(0, room));
  result.units_dropped = kLotUnits - result.units_stored;
  s.buffer[product - 1] += result.units_stored;
  s.units_stored[product - 1] += result.units_stored;
  s.lot_units_dropped += result.units_dropped;
  s.cumulative_setup_minutes += setup;
  s.last_pas_type = product;
  return result;
}

// Time until each product's stock stops sufficing, assuming the PAS produces
// nothing further: the instant of the first buffer pull that finds the
// product out of stock. Products already at zero stock report 0; products
// whose stock never fails within the remaining horizon report the horizon
// remainder. A station starved during the lookahead stays blocked (nothing
// replenishes the buffer), deferring its later demand.
inline std::array<double, kNumProducts> buffer_exhaustion_times(
    const SimState& s, const ScenarioWeek& week) {
  const double cap =
      std::max(0.0, week.planning_horizon_minutes - s.clock_minutes);
  std::array<double, kNumProducts> result{};
  result.fill(cap);

  std::array<int, kNumProducts> stock = s.buffer;
  std::array<bool, kNumProducts> resolved{};
  int unresolved = 0;
  for (int p = 0; p < kNumProducts; ++p) {
    if (stock[p] == 0) {
      result[p] = 0.0;
      resolved[p] = true;
    } else {
      ++unresolved;
    }
  }
  if (unresolved == 0 || cap == 0.0) {
    for (int p = 0; p < kNumProducts; ++p) {
      if (!resolved[p]) result[p] = cap;
    }
    return result;
  }

  const int n = week.num_stations();
  // Per-station cursor over remaining pulls; next_pull is the absolute time
  // of the next buffer withdrawal, infinity once done or frozen.
  struct Cursor {
    std::size_t item = 0;
    int done = 0;
    double next_pull = 0.0;
    bool blocked = false;
  };
  std::vector<Cursor> cur(n);
  const double inf = std::numeric_limits<double>::infinity();
  for (int st = 0; st < n; ++st) {
    cur[st].item = s.fas_positions[st].item_index;
    cur[st].done = s.fas_positions[st].units_done;
    // In-flight unit occupies the station until it completes.
    cur[st].next_pull = s.fas_positions[st].remaining_minutes;
    if (s.fas_positions[st].remaining_minutes > 0.0) {
      // The in-flight unit was already pulled; account for its completion.
      cur[st].done += 1;  // complete_unit semantics applied at next_pull
    }
    const auto& schedule = week.fas_schedules[st];
    while (cur[st].item < schedule.size() &&
           cur[st].done >= schedule[cur[st].item].quantity) {
      cur[st].item += 1;
      cur[st].done = 0;
    }
    if (cur[st].item >= schedule.size()) cur[st].next_pull = inf;
  }

  while (unresolved > 0) {
    int best = -1;
    double best_t = inf;
    for (int st = 0; st < n; ++st) {
      if (!cur[st].blocked && cur[st].next_pull < best_t) {
        best_t = cur[st].next_pull;
        best = st;
      }
    }
    if (best < 0 || best_t >= cap) break;

    auto& c = cur[best];
    const auto& schedule = week.fas_schedules[best];
    const FasItem& item = schedule[c.item];
    const int p = item.product - 1;
    if (resolved[p] && stock[p] == 0) {
      // Product already failed earlier; this station now starves too.
      c.blocked = true;
      continue;
    }
    if (stock[p] == 0) {
      result[p] = best_t;
      resolved[p] = true;
      --unresolved;
      c.blocked = true;
      continue;
    }
    stock[p] -= 1;
    c.done += 1;
    c.next_pull = best_t + item.minutes_per_unit;
    while (c.item < schedule.size() &&
           c.done >= schedule[c.item].quantity) {
      c.item += 1;
      c.done = 0;
    }
    if (c.item >= schedule.size()) c.next_pull = inf;
  }
  return result;
}

// Minutes until buffer stock of `product` stops covering FAS demand with no
// further PAS production; horizon remainder if it always suffices.
inline double buffer_content_duration(const SimState& s,
                                      const ScenarioWeek& week, int product) {
  require_product(product);
  if (s.buffer[product - 1] == 0) return 0.0;
  return buffer_exhaustion_times(s, week)[product - 1];
}

// Units of each product whose processing would start within the next
// `window_minutes`, assuming stations never starve. In-flight units are
// excluded (already withdrawn).
inline std::array<long long, kNumProducts> units_required_in_window(
    const SimState& s, const ScenarioWeek& week, double window_minutes) {
  std::array<long long, kNumProducts> demand{};
  if (window_minutes <= 0.0) return demand;
  for (int st = 0; st < week.num_stations(); ++st) {
    const auto& schedule = week.fas_schedules[st];
    const auto& pos = s.fas_positions[st];
    double t = pos.remaining_minutes;
    std::size_t idx = pos.item_index;
    int done = pos.units_done + (pos.remaining_minutes > 0.0 ? 1 : 0);
    while (idx < schedule.size() && t < window_minutes) {
      const FasItem& item = schedule[idx];
      const long long left = item.quantity - done;
      if (left > 0) {
        long long count;
        if (item.minutes_per_unit == 0.0) {
          count = left;
        } else {
          count = static_cast<long long>(
              std::ceil((window_minutes - t) / item.minutes_per_unit));
          count = std::clamp(count, 0LL, left);
        }
        demand[item.product - 1] += count;
        t += static_cast<double>(left) * item.minutes_per_unit;
      }
      idx += 1;
      done = 0;
    }
  }
  return demand;
}

// All not-yet-started units per product for the rest of the planning period.
inline std::array<long long, kNumProducts> units_required_remaining(
    const SimState& s, const ScenarioWeek& week) {
  std::array<long long, kNumProducts> demand{};
  for (int st = 0; st < week.num_stations(); ++st) {
    const auto& schedule = week.fas_schedules[st];
    const auto& pos = s.fas_positions[st];
    std::size_t idx = pos.item_index;
    int done = pos.units_done + (pos.remaining_minutes > 0.0 ? 1 : 0);
    while (idx < schedule.size()) {
      const FasItem& item = schedule[idx];
      if (item.quantity > done) demand[item.product - 1] += item.quantity - done;
      idx += 1;
      done = 0;
    }
  }
  return demand;
}

// ---- scenario file io ----

inline ScenarioWeek scenario_from_json(const nlohmann::json& j) {
  ScenarioWeek w;
  try {
    w.id = j.at("id").get<std::string>();
    w.planning_horizon_minutes = j.at("planning_horizon_minutes").get<double>();
    w.buffer_capacity = j.at("buffer_capacity").get<int>();
    const auto& ib = j.at("initial_buffer");
    const auto& pas = j.at("pas_minutes_per_unit");
    if (ib.size() != kNumProducts || pas.size() != kNumProducts) {
      throw std::invalid_argument("initial_buffer and pas_minutes_per_unit must have 8 entries");
    }
    for (int p = 0; p < kNumProducts; ++p) {
      w.initial_buffer[p] = ib[p].get<int>();
      w.pas_minutes_per_unit[p] = pas[p].get<double>();
    }
    const auto& sm = j.at("setup_matrix");
    if (sm.size() != kNumProducts) {
      throw std::invalid_argument("setup_matrix must be 8x8");
    }
    for (int p = 0; p < kNumProducts; ++p) {
      if (sm[p].size() != kNumProducts) {
        throw std::invalid_argument("setup_matrix must be 8x8");
      }
      for (int q = 0; q < kNumProducts; ++q) {
        w.setup_matrix[p][q] = sm[p][q].get<double>();
      }
    }
    for (const auto& station : j.at("fas_schedules")) {
      std::vector<FasItem> schedule;
      for (const auto& entry : station) {
        FasItem item;
        item.product = entry.at("product").get<int>();
        item.quantity = entry.at("quantity").get<int>();
        item.minutes_per_unit = entry.at("minutes_per_unit").get<double>();
        schedule.push_back(item);
      }
      w.fas_schedules.push_back(std::move(schedule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scenario file: ") + e.what());
  }
  w.validate();
  return w;
}

inline ScenarioWeek load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("scenario file " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace xsched
