#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xsched/attrib.hpp"
#include "xsched/common.hpp"
#include "xsched/env.hpp"

namespace xsched {

enum class ExpectedSign { kPositive, kNegative };
enum class HypothesisKind { kCriticality, kSetupEfforts, kCustom };

inline std::string sign_name(ExpectedSign s) {
  return s == ExpectedSign::kPositive ? "positive" : "negative";
}

inline std::string kind_name(HypothesisKind k) {
  switch (k) {
    case HypothesisKind::kCriticality: return "criticality";
    case HypothesisKind::kSetupEfforts: return "setup_efforts";
    case HypothesisKind::kCustom: return "custom";
  }
  return "custom";
}

// Optional predicate on the selected feature's raw value. Terciles are taken
// from the observed trace distribution of that feature.
struct HypothesisCondition {
  enum class Type { kNone, kEquals, kTercileLow, kTercileHigh };
  Type type = Type::kNone;
  double value = 0.0;  // for kEquals
};

// Declarative expectation: for actions in scope, the selected feature's
// attribution (restricted to instances passing the condition) carries the
// expected sign. "{self}" in the selector binds to the acted-on product.
struct Hypothesis {
  std::string id;
  std::string description;
  bool scope_all_produced = true;
  std::vector<int> scope_products;  // 1..8, used when !scope_all_produced
  std::string feature_selector;
  HypothesisCondition condition;
  ExpectedSign expected_sign = ExpectedSign::kPositive;
  HypothesisKind kind = HypothesisKind::kCustom;

  bool is_template() const {
    return feature_selector.find("{self}") != std::string::npos;
  }
};

inline std::string resolve_selector(const std::string& selector, int product) {
  std::string out = selector;
  const std::string token = "{self}";
  const auto pos = out.find(token);
  if (pos != std::string::npos) {
    out.replace(pos, token.size(), std::to_string(product));
  }
  return out;
}

// The two built-in templates over all produced products.
inline std::vector<Hypothesis> builtin_hypotheses() {
  Hypothesis setup;
  setup.id = "setup_efforts";
  setup.description =
      "If a product was produced last, producing it again avoids setup "
      "effort, so the one-hot last-type feature should push toward the same "
      "action.";
  setup.feature_selector = "last_prod_type_is_prod{self}";
  setup.condition = {HypothesisCondition::Type::kEquals, 1.0};
  setup.expected_sign = ExpectedSign::kPositive;
  setup.kind = HypothesisKind::kSetupEfforts;

  Hypothesis criticality;
  criticality.id = "criticality";
  criticality.description =
      "Low buffer content duration means the product is close to starving "
      "its stations, so on low-buffer instances the buffer-duration feature "
      "should push toward producing that product.";
  criticality.feature_selector = "buffer_content_duration_prod{self}";
  criticality.condition = {HypothesisCondition::Type::kTercileLow, 0.0};
  criticality.expected_sign = ExpectedSign::kPositive;
  criticality.kind = HypothesisKind::kCriticality;

  return {setup, criticality};
}

// ---- parsing ----

inline Hypothesis hypothesis_from_json(const nlohmann::json& j,
                                       const std::string& where) {
  Hypothesis h;
  try {
    h.id = j.at("id").get<std::string>();
    h.description = j.value("description", "");
    h.feature_selector = j.at("feature_selector").get<std::string>();
    const std::string sign = j.at("expected_sign").get<std::string>();
    if (sign == "positive") {
      h.expected_sign = ExpectedSign::kPositive;
    } else if (sign == "negative") {
      h.expected_sign = ExpectedSign::kNegative;
    } else {
      throw std::invalid_argument(where + ": expected_sign must be "
                                  "'positive' or 'negative', found '" +
                                  sign + "'");
    }
    const std::string kind = j.value("kind", "custom");
    if (kind == "criticality") {
      h.kind = HypothesisKind::kCriticality;
    } else if (kind == "setup_efforts") {
      h.kind = HypothesisKind::kSetupEfforts;
    } else if (kind == "custom") {
      h.kind = HypothesisKind::kCustom;
    } else {
      throw std::invalid_argument(where + ": unknown kind '" + kind + "'");
    }
    if (j.contains("action_scope")) {
      const auto& scope = j.at("action_scope");
      if (scope.is_string()) {
        if (scope.get<std::string>() != "all_produced") {
          throw std::invalid_argument(where +
                                      ": action_scope must be 'all_produced' "
                                      "or a product list");
        }
        h.scope_all_produced = true;
      } else {
        h.scope_all_produced = false;
        for (const auto& p : scope) {
          const int product = p.get<int>();
          require_product(product);
          h.scope_products.push_back(product);
        }
        if (h.scope_products.empty()) {
          throw std::invalid_argument(where + ": empty action_scope list");
        }
      }
    }
    if (j.contains("condition")) {
      const auto& c = j.at("condition");
      if (c.contains("equals")) {
        h.condition = {HypothesisCondition::Type::kEquals,
                       c.at("equals").get<double>()};
      } else if (c.contains("tercile")) {
        const std::string t = c.at("tercile").get<std::string>();
        if (t == "low") {
          h.condition = {HypothesisCondition::Type::kTercileLow, 0.0};
        } else if (t == "high") {
          h.condition = {HypothesisCondition::Type::kTercileHigh, 0.0};
        } else {
          throw std::invalid_argument(where + ": tercile must be 'low' or "
                                      "'high'");
        }
      } else {
        throw std::invalid_argument(where +
                                    ": condition must carry 'equals' or "
                                    "'tercile'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }

  // the selector must resolve to a known feature for at least one product
  bool resolvable = false;
  for (int p = 1; p <= kNumProducts && !resolvable; ++p) {
    resolvable = feature_index(resolve_selector(h.feature_selector, p)) >= 0;
  }
  if (!resolvable) {
    throw std::invalid_argument(where + ": feature_selector '" +
                                h.feature_selector +
                                "' does not resolve to any known feature");
  }
  return h;
}

inline std::vector<Hypothesis> parse_hypotheses_json(const nlohmann::json& j) {
  std::vector<Hypothesis> list;
  std::set<std::string> ids;
  if (!j.contains("hypotheses") || !j.at("hypotheses").is_array()) {
    throw std::invalid_argument("hypotheses file: missing 'hypotheses' array");
  }
  int index = 0;
  for (const auto& entry : j.at("hypotheses")) {
    const std::string where = "hypotheses[" + std::to_string(index) + "]";
    Hypothesis h = hypothesis_from_json(entry, where);
    if (!ids.insert(h.id).second) {
      throw std::invalid_argument(where + ": duplicate id '" + h.id + "'");
    }
    list.push_back(std::move(h));
    ++index;
  }
  return list;
}

inline std::vector<Hypothesis> parse_hypotheses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open hypotheses file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("hypotheses file " + path + ": " + e.what());
  }
  return parse_hypotheses_json(j);
}

// ---- evaluation ----

struct EvalConfig {
  double epsilon = 1e-3;          // attribution magnitude floor
  double agree_threshold = 0.7;   // supported at or above
  double contradict_threshold = 0.3;  // contradicted at or below
  int n_min = 3;                  // minimum eligible instances

  void validate() const {
    if (epsilon <= 0.0) {
      throw std::invalid_argument("eval config: epsilon must be > 0");
    }
    if (agree_threshold < contradict_threshold) {
      throw std::invalid_argument("eval config: thresholds out of order");
    }
    if (n_min < 1) {
      throw std::invalid_argument("eval config: n_min must be >= 1");
    }
  }
};

enum class FindingStatus { kSupported, kContradicted, kInconclusive };

inline std::string status_name(FindingStatus s) {
  switch (s) {
    case FindingStatus::kSupported: return "supported";
    case FindingStatus::kContradicted: return "contradicted";
    case FindingStatus::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

struct HypothesisFinding {
  std::string hypothesis_id;
  std::string method;   // attribution method the records came from
  int product = 0;      // 1..8 for expanded templates, 0 for pooled scopes
  std::string feature;  // resolved feature name
  int n_instances = 0;  // records in scope passing the condition
  int n_effective = 0;  // of those, |phi| >= epsilon
  double agree_fraction = 0.0;
  double mean_phi = 0.0;
  bool too_small = false;
  FindingStatus status = FindingStatus::kInconclusive;
};

// A concrete unit of evaluation: one resolved feature against one or more
// actions.
struct ConcreteHypothesis {
  std::string id;          // e.g. "setup_efforts_prod5"
  std::string base_id;     // template id
  int product = 0;         // 1..8 when expanded from a {self} template
  std::vector<int> actions;  // 0-based action indices in scope
  int feature = -1;
  HypothesisCondition condition;
  ExpectedSign expected_sign = ExpectedSign::kPositive;
};

inline std::vector<int> produced_products(const TraceDataset& trace) {
  std::array<int, kNumProducts> counts{};
  for (const auto& row : trace.rows) counts[row.action] += 1;
  std::vector<int> products;
  for (int p = 0; p < kNumProducts; ++p) {
    if (counts[p] > 0) products.push_back(p + 1);
  }
  return products;
}

// Expand templates: a {self} selector yields one concrete hypothesis per
// product in scope; a plain selector keeps its scope pooled.
inline std::vector<ConcreteHypothesis> expand_hypotheses(
    const std::vector<Hypothesis>& hypotheses, const TraceDataset& trace) {
  std::vector<ConcreteHypothesis> concrete;
  for (const auto& h : hypotheses) {
    std::vector<int> scope = h.scope_all_produced ? produced_products(trace)
                                                  : h.scope_products;
    if (h.is_template()) {
      for (int product : scope) {
        ConcreteHypothesis c;
        c.id = h.id + "_prod" + std::to_string(product);
        c.base_id = h.id;
        c.product = product;
        c.actions = {product - 1};
        const std::string name = resolve_selector(h.feature_selector, product);
        c.feature = feature_index(name);
        if (c.feature < 0) {
          throw std::invalid_argument("hypothesis " + h.id + ": selector '" +
                                      name + "' is not a feature");
        }
        c.condition = h.condition;
        c.expected_sign = h.expected_sign;
        concrete.push_back(std::move(c));
      }
    } else {
      ConcreteHypothesis c;
      c.id = h.id;
      c.base_id = h.id;
      c.product = scope.size() == 1 ? scope.front() : 0;
      for (int product : scope) c.actions.push_back(product - 1);
      c.feature = feature_index(h.feature_selector);
      if (c.feature < 0) {
        throw std::invalid_argument("hypothesis " + h.id + ": selector '" +
                                    h.feature_selector +
                                    "' is not a feature");
      }
      c.condition = h.condition;
      c.expected_sign = h.expected_sign;
      concrete.push_back(std::move(c));
    }
  }
  return concrete;
}

inline std::pair<double, double> feature_terciles(const TraceDataset& trace,
                                                  int feature) {
  std::vector<double> values;
  values.reserve(trace.rows.size());
  for (const auto& row : trace.rows) values.push_back(row.features[feature]);
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  const double low = values[(n - 1) / 3];
  const double high = values[(2 * (n - 1)) / 3];
  return {low, high};
}

// Share of in-scope instances whose attribution sign matches the expected
// sign, among instances with |phi| >= epsilon.
inline HypothesisFinding evaluate_hypothesis(
    const ConcreteHypothesis& h, const std::vector<AttributionRecord>& records,
    const TraceDataset& trace, const EvalConfig& cfg = {}) {
  cfg.validate();
  if (h.feature < 0 ||
      h.feature >= static_cast<int>(feature_names().size())) {
    throw std::invalid_argument("evaluate_hypothesis: bad feature index");
  }

  double tercile_low = 0.0, tercile_high = 0.0;
  if (h.condition.type == HypothesisCondition::Type::kTercileLow ||
      h.condition.type == HypothesisCondition::Type::kTercileHigh) {
    if (trace.empty()) {
      throw std::invalid_argument(
          "evaluate_hypothesis: tercile condition needs a trace");
    }
    std::tie(tercile_low, tercile_high) = feature_terciles(trace, h.feature);
  }

  HypothesisFinding finding;
  finding.hypothesis_id = h.id;
  finding.product = h.product;
  finding.feature = feature_names()[h.feature];
  if (!records.empty()) {
    finding.method = method_name(records.front().method);
  }

  int agree = 0;
  for (const auto& rec : records) {
    if (std::find(h.actions.begin(), h.actions.end(), rec.action_index) ==
        h.actions.end()) {
      continue;
    }
    if (rec.feature_values.size() <= static_cast<std::size_t>(h.feature)) {
      throw std::invalid_argument(
          "evaluate_hypothesis: record lacks feature values");
    }
    const double raw = rec.feature_values[h.feature];
    bool passes = true;
    switch (h.condition.type) {
      case HypothesisCondition::Type::kNone: break;
      case HypothesisCondition::Type::kEquals:
        passes = std::abs(raw - h.condition.value) < 1e-12;
        break;
      case HypothesisCondition::Type::kTercileLow:
        passes = raw <= tercile_low;
        break;
      case HypothesisCondition::Type::kTercileHigh:
        passes = raw >= tercile_high;
        break;
    }
    if (!passes) continue;

    const double phi = rec.phi[h.feature];
    finding.n_instances += 1;
    finding.mean_phi += phi;
    if (std::abs(phi) >= cfg.epsilon) {
      finding.n_effective += 1;
      const bool positive = phi > 0.0;
      if ((h.expected_sign == ExpectedSign::kPositive) == positive) ++agree;
    }
  }
  if (finding.n_instances > 0) {
    finding.mean_phi /= static_cast<double>(finding.n_instances);
  }
  finding.too_small = finding.n_instances > 0 && finding.n_effective == 0;
  if (finding.n_effective > 0) {
    finding.agree_fraction =
        static_cast<double>(agree) / static_cast<double>(finding.n_effective);
  }
  if (finding.n_effective >= cfg.n_min && !finding.too_small) {
    if (finding.agree_fraction >= cfg.agree_threshold) {
      finding.status = FindingStatus::kSupported;
    } else if (finding.agree_fraction <= cfg.contradict_threshold) {
      finding.status = FindingStatus::kContradicted;
    } else {
      finding.status = FindingStatus::kInconclusive;
    }
  } else {
    finding.status = FindingStatus::kInconclusive;
  }
  return finding;
}

// ---- validity check ----

enum class VerdictLevel { kValid, kPartlyValid, kNotValid };

inline std::string verdict_name(VerdictLevel v) {
  switch (v) {
    case VerdictLevel::kValid: return "valid";
    case VerdictLevel::kPartlyValid: return "partly_valid";
    case VerdictLevel::kNotValid: return "not_valid";
  }
  return "not_valid";
}

inline int verdict_exit_code(VerdictLevel v) {
  switch (v) {
    case VerdictLevel::kValid: return 0;
    case VerdictLevel::kPartlyValid: return 10;
    case VerdictLevel::kNotValid: return 20;
  }
  return 20;
}

struct Verdict {
  VerdictLevel level = VerdictLevel::kPartlyValid;
  int supported = 0;
  int contradicted = 0;
  int inconclusive = 0;
  std::string narrative;
};

// valid:      every non-inconclusive finding is supported and at least one is
// not_valid:  nothing supported and at least one contradicted
// partly:     everything else
inline Verdict validity_check(const std::vector<HypothesisFinding>& findings) {
  if (findings.empty()) {
    throw std::invalid_argument("validity_check: no findings");
  }
  Verdict v;
  for (const auto& f : findings) {
    switch (f.status) {
      case FindingStatus::kSupported: ++v.supported; break;
      case FindingStatus::kContradicted: ++v.contradicted; break;
      case FindingStatus::kInconclusive: ++v.inconclusive; break;
    }
  }
  if (v.supported > 0 && v.contradicted == 0) {
    v.level = VerdictLevel::kValid;
  } else if (v.supported == 0 && v.contradicted > 0) {
    v.level = VerdictLevel::kNotValid;
  } else {
    v.level = VerdictLevel::kPartlyValid;
  }

  std::ostringstream out;
  out << "# Validity check\n\n";
  out << "Verdict: **" << verdict_name(v.level) << "** (" << v.supported
      << " supported, " << v.contradicted << " contradicted, "
      << v.inconclusive << " inconclusive)\n\n";
  out << "| hypothesis | method | feature | n | n_eff | agree | mean phi | status |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& f : findings) {
    out << "| " << f.hypothesis_id << " | " << f.method << " | " << f.feature
        << " | " << f.n_instances << " | " << f.n_effective << " | ";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", f.agree_fraction);
    out << buf << " | ";
    std::snprintf(buf, sizeof(buf), "%.5f", f.mean_phi);
    out << buf << " | " << status_name(f.status)
        << (f.too_small ? " (attributions too small)" : "") << " |\n";
  }
  out << '\n';
  switch (v.level) {
    case VerdictLevel::kValid:
      out << "All conclusive findings support the hypotheses; the "
             "explanations can be communicated. Keep observing: rerun this "
             "check whenever the agent or the data changes.\n";
      break;
    case VerdictLevel::kPartlyValid:
      out << "The findings are mixed. Compare them against the descriptive "
             "statistics and the domain context: improve your hypotheses and "
             "retest them, preferably on a new data set.\n";
      break;
    case VerdictLevel::kNotValid:
      out << "No hypothesis is supported. Double-check the validity of the "
             "chosen xAI methods (assumptions, prerequisites, plausibility "
             "for the use case) and, if the mismatch persists, revisit the "
             "underlying model with its developers.\n";
      break;
  }
  v.narrative = out.str();
  return v;
}

// Side-by-side comparison across methods for the same hypothesis; a
// disagreement is surfaced, never merged.
struct CrossMethodRow {
  std::string hypothesis_id;
  std::map<std::string, FindingStatus> status_by_method;
  bool disagreement = false;
};

inline std::vector<CrossMethodRow> cross_method_consistency(
    const std::vector<HypothesisFinding>& findings) {
  std::map<std::string, CrossMethodRow> by_id;
  for (const auto& f : findings) {
    auto& row = by_id[f.hypothesis_id];
    row.hypothesis_id = f.hypothesis_id;
    row.status_by_method[f.method] = f.status;
  }
  std::vector<CrossMethodRow> rows;
  for (auto& [id, row] : by_id) {
    std::set<FindingStatus> statuses;
    for (const auto& [m, s] : row.status_by_method) statuses.insert(s);
    row.disagreement = statuses.size() > 1;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- serialization ----

inline nlohmann::json finding_to_json(const HypothesisFinding& f) {
  nlohmann::json j;
  j["hypothesis_id"] = f.hypothesis_id;
  j["method"] = f.method;
  j["product"] = f.product;
  j["feature"] = f.feature;
  j["n_instances"] = f.n_instances;
  j["n_effective"] = f.n_effective;
  j["agree_fraction"] = f.agree_fraction;
  j["mean_phi"] = f.mean_phi;
  j["too_small"] = f.too_small;
  j["status"] = status_name(f.status);
  return j;
}

inline nlohmann::json findings_report_json(
    const std::vector<HypothesisFinding>& findings, const Verdict& verdict,
    const EvalConfig& cfg) {
  nlohmann::json j;
  j["config"] = {{"epsilon", cfg.epsilon},
                 {"agree_threshold", cfg.agree_threshold},
                 {"contradict_threshold", cfg.contradict_threshold},
                 {"n_min", cfg.n_min}};
  j["findings"] = nlohmann::json::array();
  for (const auto& f : findings) j["findings"].push_back(finding_to_json(f));
  j["verdict"] = {{"level", verdict_name(verdict.level)},
                  {"supported", verdict.supported},
                  {"contradicted", verdict.contradicted},
                  {"inconclusive", verdict.inconclusive},
                  {"exit_code", verdict_exit_code(verdict.level)}};
  return j;
}

}  // namespace xsched
