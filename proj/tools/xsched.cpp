// xsched: workbench for training a small scheduling policy on a two-stage
// flow production simulator, explaining its actions with attribution
// methods, and falsifying domain hypotheses against the attributions.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xsched/attrib.hpp"
#include "xsched/common.hpp"
#include "xsched/eda.hpp"
#include "xsched/env.hpp"
#include "xsched/hypotheses.hpp"
#include "xsched/manifest.hpp"
#include "xsched/net.hpp"
#include "xsched/plots.hpp"
#include "xsched/sim.hpp"
#include "xsched/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path ensure_dir(const std::string& out) {
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

xsched::RewardConfig reward_from_json(const json& j) {
  xsched::RewardConfig cfg;
  cfg.setup_weight = j.value("setup_weight", cfg.setup_weight);
  cfg.margin_threshold_minutes =
      j.value("margin_threshold_minutes", cfg.margin_threshold_minutes);
  cfg.margin_penalty = j.value("margin_penalty", cfg.margin_penalty);
  cfg.discount = j.value("discount", cfg.discount);
  cfg.validate();
  return cfg;
}

std::vector<xsched::ScenarioWeek> load_weeks(
    const std::vector<std::string>& paths) {
  std::vector<xsched::ScenarioWeek> weeks;
  for (const auto& p : paths) weeks.push_back(xsched::load_scenario(p));
  return weeks;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

struct ExplainArgs {
  std::string weights;
  std::string trace;
  std::string method = "deepshap";
  std::string background;  // trace CSV; defaults to the explained trace
  std::string out;
};

// Explains every trace row for every action with the chosen method and
// writes one attribution CSV plus the outlier report.
std::vector<std::string> run_explain(const ExplainArgs& args,
                                     const fs::path& dir) {
  using namespace xsched;
  const PolicyNetwork net =
      load_weights(args.weights, kObservationDim, kNumActions);
  const TraceDataset trace = read_trace_csv(args.trace);
  if (trace.empty()) throw std::runtime_error("trace is empty");
  const AttributionMethod method = method_from_name(args.method);

  const TraceDataset background_trace =
      args.background.empty() ? trace : read_trace_csv(args.background);
  const BackgroundSet background = BackgroundSet::from_trace(background_trace);

  std::vector<AttributionRecord> records;
  records.reserve(trace.rows.size() * kNumActions);
  switch (method) {
    case AttributionMethod::kInputXGradient: {
      for (const auto& row : trace.rows) {
        for (int a = 0; a < kNumActions; ++a) {
          records.push_back(
              input_x_gradient(net, row.features, a, row.step_index));
        }
      }
      break;
    }
    case AttributionMethod::kDeepShap: {
      DeepShapExplainer explainer(net, background);
      for (const auto& row : trace.rows) {
        for (int a = 0; a < kNumActions; ++a) {
          records.push_back(explainer.explain(row.features, a, row.step_index));
        }
      }
      break;
    }
    case AttributionMethod::kExactShapley: {
      for (const auto& row : trace.rows) {
        for (int a = 0; a < kNumActions; ++a) {
          records.push_back(
              exact_shapley(net, row.features, background, a, row.step_index));
        }
      }
      break;
    }
  }

  const std::string csv_name = "attributions_" + method_name(method) + ".csv";
  write_attribution_csv(records, feature_names(), (dir / csv_name).string());

  const OutlierReport outliers = outlier_flags(records);
  json jo;
  jo["min_records"] = kOutlierMinRecords;
  jo["insufficient_actions"] = outliers.insufficient_actions;
  jo["flags"] = json::array();
  for (const auto& f : outliers.flags) {
    jo["flags"].push_back({{"action", f.action},
                           {"feature", feature_names()[f.feature]},
                           {"instance_index", f.instance_index},
                           {"value", f.value},
                           {"zscore", f.zscore}});
  }
  const std::string outlier_name = "outliers_" + method_name(method) + ".json";
  std::ofstream(dir / outlier_name) << jo.dump(2) << '\n';

  // per-action top-10 table, paper-style
  const auto aggregates = aggregate_by_action(records, feature_names());
  std::ofstream top((dir / ("top_features_" + method_name(method) + ".md")));
  for (const auto& agg : aggregates) {
    top << "## action " << agg.action << " (product " << agg.action + 1
        << ")\n\n";
    if (agg.never_taken) {
      top << "action never taken: no records\n\n";
      continue;
    }
    top << "| rank | variable | mean attribution |\n|---|---|---|\n";
    for (int i = 0; i < std::min<std::size_t>(10, agg.ranked.size()); ++i) {
      const auto& fa = agg.ranked[i];
      top << "| " << (i + 1) << " | " << fa.feature_name << " | "
          << xsched::csv::format_double(fa.mean_phi) << " |\n";
    }
    top << '\n';
  }
  return {csv_name, outlier_name,
          "top_features_" + method_name(method) + ".md"};
}

struct CheckArgs {
  std::string hypotheses;  // empty = built-in templates
  std::vector<std::string> attributions;
  std::string trace;
  std::string out;
  double epsilon = 1e-3;
  double agree_threshold = 0.7;
  int n_min = 3;
};

xsched::Verdict run_check(const CheckArgs& args, const fs::path& dir,
                          std::vector<std::string>* outputs) {
  using namespace xsched;
  const TraceDataset trace = read_trace_csv(args.trace);
  const std::vector<Hypothesis> hypotheses =
      args.hypotheses.empty() ? builtin_hypotheses()
                              : parse_hypotheses(args.hypotheses);
  EvalConfig cfg;
  cfg.epsilon = args.epsilon;
  cfg.agree_threshold = args.agree_threshold;
  cfg.contradict_threshold = 1.0 - args.agree_threshold;
  cfg.n_min = args.n_min;
  cfg.validate();

  const auto concrete = expand_hypotheses(hypotheses, trace);
  std::vector<HypothesisFinding> findings;
  for (const auto& path : args.attributions) {
    const auto records = read_attribution_csv(path, &trace);
    for (const auto& c : concrete) {
      findings.push_back(evaluate_hypothesis(c, records, trace, cfg));
    }
  }
  if (findings.empty()) throw std::runtime_error("no findings produced");

  const Verdict verdict = validity_check(findings);
  std::ofstream(dir / "findings.json")
      << findings_report_json(findings, verdict, cfg).dump(2) << '\n';

  std::ofstream report(dir / "verdict.md");
  report << verdict.narrative;
  const auto rows = cross_method_consistency(findings);
  bool any_multi = false;
  for (const auto& r : rows) any_multi |= r.status_by_method.size() > 1;
  if (any_multi) {
    report << "\n## Cross-method consistency\n\n";
    report << "| hypothesis | per-method status | agreement |\n|---|---|---|\n";
    for (const auto& r : rows) {
      report << "| " << r.hypothesis_id << " | ";
      bool first = true;
      for (const auto& [m, s] : r.status_by_method) {
        if (!first) report << ", ";
        report << m << ": " << status_name(s);
        first = false;
      }
      report << " | " << (r.disagreement ? "DISAGREE" : "agree") << " |\n";
    }
  }
  outputs->push_back("findings.json");
  outputs->push_back("verdict.md");
  return verdict;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage flow production scheduling, explained"};
  app.require_subcommand(1);

  // ---- simulate ----
  auto* sim = app.add_subcommand(
      "simulate", "roll out a policy (or a fixed heuristic) on one week");
  std::string sim_scenario, sim_weights, sim_heuristic, sim_out = "out/simulate";
  std::uint64_t sim_seed = 0;
  sim->add_option("--scenario", sim_scenario, "week config file")->required();
  sim->add_option("--weights", sim_weights, "policy weight file");
  sim->add_option("--heuristic", sim_heuristic,
                  "random | always<P> (e.g. always5), used when no weights");
  sim->add_option("--seed", sim_seed, "seed for the random heuristic");
  sim->add_option("--out", sim_out, "output directory");

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train a policy on the configured weeks");
  std::string train_config, train_out = "out/train";
  train_cmd->add_option("--config", train_config, "training config JSON")->required();
  train_cmd->add_option("--out", train_out, "output directory");

  // ---- explain ----
  auto* explain = app.add_subcommand("explain", "attribute policy logits on a trace");
  ExplainArgs eargs;
  explain->add_option("--weights", eargs.weights)->required();
  explain->add_option("--trace", eargs.trace)->required();
  explain->add_option("--method", eargs.method, "ixg | deepshap | exact");
  explain->add_option("--background", eargs.background,
                      "background trace CSV (default: the explained trace)");
  explain->add_option("--out", eargs.out, "output directory")->required();

  // ---- eda ----
  auto* eda_cmd = app.add_subcommand("eda", "exploratory statistics and plots for a trace");
  std::string eda_trace, eda_out = "out/eda";
  eda_cmd->add_option("--trace", eda_trace)->required();
  eda_cmd->add_option("--out", eda_out, "output directory");

  // ---- check ----
  auto* check = app.add_subcommand(
      "check", "falsify hypotheses against attribution records");
  CheckArgs cargs;
  check->add_option("--hypotheses", cargs.hypotheses,
                    "hypotheses JSON (default: built-in templates)");
  check->add_option("--attributions", cargs.attributions,
                    "attribution CSV(s), one per method")
      ->required();
  check->add_option("--trace", cargs.trace)->required();
  check->add_option("--out", cargs.out, "output directory")->required();
  check->add_option("--epsilon", cargs.epsilon, "attribution magnitude floor");
  check->add_option("--agree-threshold", cargs.agree_threshold,
                    "supported at/above; contradicted at/below 1-threshold");
  check->add_option("--n-min", cargs.n_min, "minimum eligible instances");

  // ---- pipeline ----
  auto* pipeline = app.add_subcommand(
      "pipeline", "train, roll out, analyze, explain and check in one run");
  std::string pipe_config, pipe_out = "out/pipeline";
  pipeline->add_option("--config", pipe_config, "pipeline config JSON")->required();
  pipeline->add_option("--out", pipe_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const fs::path dir = ensure_dir(sim_out);
      const xsched::ScenarioWeek week = xsched::load_scenario(sim_scenario);
      xsched::TraceDataset trace;
      xsched::EpisodeStats stats;
      if (!sim_weights.empty()) {
        const auto net = xsched::load_weights(sim_weights,
                                              xsched::kObservationDim,
                                              xsched::kNumActions);
        trace = xsched::rollout(net, week, {}, &stats);
      } else if (sim_heuristic == "random" || sim_heuristic.empty()) {
        trace = xsched::rollout_random(week, sim_seed, {}, &stats);
      } else if (sim_heuristic.rfind("always", 0) == 0) {
        const int product = std::stoi(sim_heuristic.substr(6));
        xsched::require_product(product);
        xsched::Env env(week);
        xsched::Observation obs = env.reset();
        while (!env.done()) {
          trace.rows.push_back(xsched::TraceRow{
              static_cast<long long>(trace.rows.size()), obs, product - 1});
          const auto res = env.step(product - 1);
          stats.total_reward += res.reward;
          obs = res.observation;
        }
        stats.total_idle_minutes = env.state().total_idle_minutes();
        stats.total_setup_minutes = env.state().cumulative_setup_minutes;
        stats.steps = env.steps_taken();
      } else {
        throw std::runtime_error("unknown heuristic '" + sim_heuristic + "'");
      }
      xsched::write_trace_csv(trace, (dir / "trace.csv").string());
      json js{{"steps", stats.steps},
              {"total_idle_minutes", stats.total_idle_minutes},
              {"total_setup_minutes", stats.total_setup_minutes},
              {"total_reward", stats.total_reward}};
      std::ofstream(dir / "episode_stats.json") << js.dump(2) << '\n';
      xsched::RunManifest manifest;
      manifest.command = "simulate";
      manifest.seed = sim_seed;
      manifest.inputs = {{"scenario", sim_scenario},
                         {"weights", sim_weights},
                         {"heuristic", sim_heuristic}};
      manifest.outputs = {"trace.csv", "episode_stats.json"};
      manifest.write(dir);
      std::cout << "trace rows: " << trace.rows.size() << '\n';
      return 0;
    }

    if (train_cmd->parsed()) {
      const fs::path dir = ensure_dir(train_out);
      const json cfg_json = read_json_file(train_config);
      const xsched::TrainConfig cfg = xsched::train_config_from_json(cfg_json);
      const xsched::RewardConfig reward_cfg =
          cfg_json.contains("reward") ? reward_from_json(cfg_json.at("reward"))
                                      : xsched::RewardConfig{};
      if (!cfg_json.contains("weeks") || cfg_json.at("weeks").empty()) {
        throw std::runtime_error("training config needs a 'weeks' file list");
      }
      const auto weeks =
          load_weeks(cfg_json.at("weeks").get<std::vector<std::string>>());
      const xsched::TrainResult result = xsched::train(weeks, reward_cfg, cfg);
      xsched::save_weights(result.net, (dir / "weights.json").string());
      xsched::write_learning_curve_csv(result.learning_curve,
                                       (dir / "learning_curve.csv").string());
      xsched::RunManifest manifest;
      manifest.command = "train";
      manifest.seed = cfg.rng_seed;
      manifest.inputs = {{"config", train_config}};
      manifest.outputs = {"weights.json", "learning_curve.csv"};
      manifest.write(dir);
      std::cout << "trained " << cfg.episodes << " episodes; final return "
                << (result.learning_curve.empty()
                        ? 0.0
                        : result.learning_curve.back())
                << '\n';
      return 0;
    }

    if (explain->parsed()) {
      const fs::path dir = ensure_dir(eargs.out);
      const auto outputs = run_explain(eargs, dir);
      xsched::RunManifest manifest;
      manifest.command = "explain";
      manifest.inputs = {{"weights", eargs.weights},
                         {"trace", eargs.trace},
                         {"method", eargs.method},
                         {"background", eargs.background}};
      manifest.outputs = outputs;
      manifest.write(dir);
      std::cout << "wrote " << outputs.front() << '\n';
      return 0;
    }

    if (eda_cmd->parsed()) {
      const fs::path dir = ensure_dir(eda_out);
      const xsched::TraceDataset trace = xsched::read_trace_csv(eda_trace);
      const xsched::EdaSummary summary = xsched::summarize(trace);
      xsched::write_demand_table_csv(summary,
                                     (dir / "demand_table.csv").string());
      xsched::plots::plot_production_counts(
          summary, (dir / "production_counts.svg").string());
      xsched::plots::plot_production_order(
          trace, (dir / "production_order.svg").string());
      xsched::plots::plot_buffer_trend(summary,
                                       (dir / "buffer_trend.svg").string());
      xsched::plots::plot_mean_buffer_duration(
          summary, (dir / "mean_buffer_duration.svg").string());

      std::ofstream report(dir / "eda_report.md");
      report << "# Exploratory analysis\n\n";
      report << "Trace rows: " << trace.rows.size() << "\n\n";
      report << "## Production counts\n\n![counts](production_counts.svg)\n\n";
      report << "## Production order\n\n![order](production_order.svg)\n\n";
      int longest = 0;
      for (const auto& run : summary.production_order) {
        longest = std::max(longest, run.length);
      }
      report << "Longest unbroken run: " << longest << " lots\n\n";
      report << "## Buffer fill level\n\n![trend](buffer_trend.svg)\n\n";
      report << "## Buffer content duration\n\n"
                "![duration](mean_buffer_duration.svg)\n\n";
      report << "## Mean demand (normalized)\n\n";
      report << "| product | next_24h_demand | end_of_planning_period_demand "
                "| produced |\n|---|---|---|---|\n";
      for (int p = 0; p < xsched::kNumProducts; ++p) {
        report << "| " << (p + 1) << " | "
               << xsched::csv::format_double(summary.mean_demand_24h[p])
               << " | "
               << xsched::csv::format_double(summary.mean_demand_eop[p])
               << " | " << (summary.production_counts[p] > 0 ? "yes" : "no")
               << " |\n";
      }
      xsched::RunManifest manifest;
      manifest.command = "eda";
      manifest.inputs = {{"trace", eda_trace}};
      manifest.outputs = {"demand_table.csv", "production_counts.svg",
                          "production_order.svg", "buffer_trend.svg",
                          "mean_buffer_duration.svg", "eda_report.md"};
      manifest.write(dir);
      std::cout << "eda report written\n";
      return 0;
    }

    if (check->parsed()) {
      const fs::path dir = ensure_dir(cargs.out);
      std::vector<std::string> outputs;
      const xsched::Verdict verdict = run_check(cargs, dir, &outputs);
      xsched::RunManifest manifest;
      manifest.command = "check";
      manifest.inputs = {{"hypotheses", cargs.hypotheses},
                         {"attributions", cargs.attributions},
                         {"trace", cargs.trace},
                         {"epsilon", cargs.epsilon},
                         {"agree_threshold", cargs.agree_threshold},
                         {"n_min", cargs.n_min}};
      manifest.outputs = outputs;
      manifest.write(dir);
      std::cout << "verdict: " << xsched::verdict_name(verdict.level) << '\n';
      return xsched::verdict_exit_code(verdict.level);
    }

    if (pipeline->parsed()) {
      const fs::path dir = ensure_dir(pipe_out);
      const json cfg_json = read_json_file(pipe_config);
      const xsched::TrainConfig train_cfg =
          xsched::train_config_from_json(cfg_json.value("train", json::object()));
      const xsched::RewardConfig reward_cfg =
          cfg_json.contains("reward") ? reward_from_json(cfg_json.at("reward"))
                                      : xsched::RewardConfig{};
      if (!cfg_json.contains("weeks") || cfg_json.at("weeks").empty()) {
        throw std::runtime_error("pipeline config needs a 'weeks' file list");
      }
      const auto week_paths = cfg_json.at("weeks").get<std::vector<std::string>>();
      const auto weeks = load_weeks(week_paths);
      const std::string primary_id =
          cfg_json.value("primary_week", weeks.front().id);
      const xsched::ScenarioWeek* primary = nullptr;
      for (const auto& w : weeks) {
        if (w.id == primary_id) primary = &w;
      }
      if (!primary) {
        throw std::runtime_error("primary week '" + primary_id +
                                 "' is not in the week list");
      }

      // phase 1: weight extraction stand-in — train and persist the policy
      const fs::path train_dir = ensure_dir((dir / "01_train").string());
      const xsched::TrainResult trained =
          xsched::train(weeks, reward_cfg, train_cfg);
      xsched::save_weights(trained.net, (train_dir / "weights.json").string());
      xsched::write_learning_curve_csv(
          trained.learning_curve, (train_dir / "learning_curve.csv").string());
      xsched::RunManifest train_manifest;
      train_manifest.command = "pipeline/train";
      train_manifest.seed = train_cfg.rng_seed;
      train_manifest.inputs = {{"config", pipe_config}};
      train_manifest.outputs = {"weights.json", "learning_curve.csv"};
      train_manifest.write(train_dir);

      // phase 2: greedy rollout on the primary week
      const fs::path roll_dir = ensure_dir((dir / "02_rollout").string());
      xsched::EpisodeStats stats;
      const xsched::TraceDataset trace =
          xsched::rollout(trained.net, *primary, reward_cfg, &stats);
      xsched::write_trace_csv(trace, (roll_dir / "trace.csv").string());
      json js{{"steps", stats.steps},
              {"total_idle_minutes", stats.total_idle_minutes},
              {"total_setup_minutes", stats.total_setup_minutes},
              {"total_reward", stats.total_reward}};
      std::ofstream(roll_dir / "episode_stats.json") << js.dump(2) << '\n';
      xsched::RunManifest roll_manifest;
      roll_manifest.command = "pipeline/rollout";
      roll_manifest.inputs = {{"week", primary_id}};
      roll_manifest.outputs = {"trace.csv", "episode_stats.json"};
      roll_manifest.write(roll_dir);

      // phase 3: exploratory statistics
      const fs::path eda_dir = ensure_dir((dir / "03_eda").string());
      const xsched::EdaSummary summary = xsched::summarize(trace);
      xsched::write_demand_table_csv(summary,
                                     (eda_dir / "demand_table.csv").string());
      xsched::plots::plot_production_counts(
          summary, (eda_dir / "production_counts.svg").string());
      xsched::plots::plot_production_order(
          trace, (eda_dir / "production_order.svg").string());
      xsched::plots::plot_buffer_trend(summary,
                                       (eda_dir / "buffer_trend.svg").string());
      xsched::plots::plot_mean_buffer_duration(
          summary, (eda_dir / "mean_buffer_duration.svg").string());
      xsched::RunManifest eda_manifest;
      eda_manifest.command = "pipeline/eda";
      eda_manifest.inputs = {{"trace", "02_rollout/trace.csv"}};
      eda_manifest.outputs = {"demand_table.csv", "production_counts.svg",
                              "production_order.svg", "buffer_trend.svg",
                              "mean_buffer_duration.svg"};
      eda_manifest.write(eda_dir);

      // phase 4: both attribution methods over the trace
      const fs::path explain_dir = ensure_dir((dir / "04_explain").string());
      ExplainArgs ixg_args;
      ixg_args.weights = (train_dir / "weights.json").string();
      ixg_args.trace = (roll_dir / "trace.csv").string();
      ixg_args.method = "ixg";
      auto outputs_ixg = run_explain(ixg_args, explain_dir);
      ExplainArgs ds_args = ixg_args;
      ds_args.method = "deepshap";
      auto outputs_ds = run_explain(ds_args, explain_dir);
      const xsched::TraceDataset bg_trace = trace;
      // beeswarm plots from the deep_shap records
      {
        const auto records = xsched::read_attribution_csv(
            (explain_dir / "attributions_deep_shap.csv").string(), &trace);
        for (int a = 0; a < xsched::kNumActions; ++a) {
          xsched::plots::plot_beeswarm(
              records, a, xsched::feature_names(),
              (explain_dir / ("beeswarm_action" + std::to_string(a) + ".svg"))
                  .string());
        }
      }
      xsched::RunManifest explain_manifest;
      explain_manifest.command = "pipeline/explain";
      explain_manifest.inputs = {{"trace", "02_rollout/trace.csv"},
                                 {"methods", {"ixg", "deepshap"}}};
      explain_manifest.outputs = outputs_ixg;
      for (const auto& o : outputs_ds) explain_manifest.outputs.push_back(o);
      for (int a = 0; a < xsched::kNumActions; ++a) {
        explain_manifest.outputs.push_back("beeswarm_action" +
                                           std::to_string(a) + ".svg");
      }
      explain_manifest.write(explain_dir);

      // phase 5: falsification + validity check
      const fs::path check_dir = ensure_dir((dir / "05_check").string());
      CheckArgs pipe_check;
      pipe_check.hypotheses = cfg_json.value("hypotheses", std::string{});
      pipe_check.attributions = {
          (explain_dir / "attributions_input_x_gradient.csv").string(),
          (explain_dir / "attributions_deep_shap.csv").string()};
      pipe_check.trace = (roll_dir / "trace.csv").string();
      pipe_check.epsilon = cfg_json.value("epsilon", 1e-3);
      pipe_check.agree_threshold = cfg_json.value("agree_threshold", 0.7);
      pipe_check.n_min = cfg_json.value("n_min", 3);
      std::vector<std::string> check_outputs;
      const xsched::Verdict verdict =
          run_check(pipe_check, check_dir, &check_outputs);
      xsched::RunManifest check_manifest;
      check_manifest.command = "pipeline/check";
      check_manifest.inputs = {{"hypotheses", pipe_check.hypotheses},
                               {"epsilon", pipe_check.epsilon},
                               {"agree_threshold", pipe_check.agree_threshold},
                               {"n_min", pipe_check.n_min}};
      check_manifest.outputs = check_outputs;
      check_manifest.write(check_dir);

      xsched::RunManifest manifest;
      manifest.command = "pipeline";
      manifest.seed = train_cfg.rng_seed;
      manifest.inputs = {{"config", pipe_config}};
      manifest.outputs = {"01_train", "02_rollout", "03_eda", "04_explain",
                          "05_check"};
      manifest.write(dir);
      std::cout << "pipeline verdict: " << xsched::verdict_name(verdict.level)
                << '\n';
      return xsched::verdict_exit_code(verdict.level);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
