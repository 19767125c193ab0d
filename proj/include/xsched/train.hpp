#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xsched/common.hpp"
#include "xsched/csv.hpp"
#include "xsched/env.hpp"
#include "xsched/net.hpp"

namespace xsched {

enum class TrainAlgorithm { kReinforceBaseline, kDqn };

inline std::string algorithm_name(TrainAlgorithm a) {
  return a == TrainAlgorithm::kReinforceBaseline ? "reinforce_baseline"
                                                 : "dqn";
}

inline TrainAlgorithm algorithm_from_name(const std::string& name) {
  if (name == "reinforce_baseline") return TrainAlgorithm::kReinforceBaseline;
  if (name == "dqn") return TrainAlgorithm::kDqn;
  throw std::invalid_argument("unknown training algorithm '" + name + "'");
}

struct ExplorationSchedule {
  // REINFORCE: softmax temperature; DQN: epsilon. Linear decay over episodes.
  double start = 1.0;
  double end = 0.25;

  double at(int episode, int total_episodes) const {
    if (total_episodes <= 1) return end;
    const double f = static_cast<double>(episode) /
                     static_cast<double>(total_episodes - 1);
    return start + (end - start) * std::min(1.0, f);
  }
};

struct TrainConfig {
  TrainAlgorithm algorithm = TrainAlgorithm::kReinforceBaseline;
  int episodes = 1500;
  double learning_rate = 0.02;
  double discount = 0.99;
  ExplorationSchedule exploration;
  std::uint64_t rng_seed = 0;
  std::vector<int> hidden_layers = {64, 64};
  double baseline_momentum = 0.9;  // moving-average baseline (REINFORCE)
  // Empty-buffer criticality spikes reach ~1e6; gradients train on rewards
  // clamped to [-reward_clip, 0] (0 disables). Learning curves and the
  // divergence check always use the raw env reward.
  double reward_clip = 100.0;
  // DQN specifics
  int replay_capacity = 20000;
  int batch_size = 32;
  int target_sync_interval = 250;

  void validate() const {
    if (episodes <= 0) {
      throw std::invalid_argument("train config: episodes must be > 0");
    }
    if (learning_rate < 0.0) {
      throw std::invalid_argument("train config: learning rate must be >= 0");
    }
    if (discount < 0.0 || discount > 1.0) {
      throw std::invalid_argument("train config: discount must be in [0,1]");
    }
    if (reward_clip < 0.0) {
      throw std::invalid_argument("train config: reward clip must be >= 0");
    }
  }
};

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  if (j.contains("algorithm")) {
    cfg.algorithm = algorithm_from_name(j.at("algorithm").get<std::string>());
  }
  if (j.contains("episodes")) cfg.episodes = j.at("episodes").get<int>();
  if (j.contains("learning_rate")) {
    cfg.learning_rate = j.at("learning_rate").get<double>();
  }
  if (j.contains("discount")) cfg.discount = j.at("discount").get<double>();
  if (j.contains("exploration")) {
    cfg.exploration.start = j.at("exploration").value("start", 1.0);
    cfg.exploration.end = j.at("exploration").value("end", 0.25);
  }
  if (j.contains("rng_seed")) {
    cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  }
  if (j.contains("hidden_layers")) {
    cfg.hidden_layers = j.at("hidden_layers").get<std::vector<int>>();
  }
  if (j.contains("baseline_momentum")) {
    cfg.baseline_momentum = j.at("baseline_momentum").get<double>();
  }
  if (j.contains("reward_clip")) {
    cfg.reward_clip = j.at("reward_clip").get<double>();
  }
  if (j.contains("replay_capacity")) {
    cfg.replay_capacity = j.at("replay_capacity").get<int>();
  }
  if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<int>();
  if (j.contains("target_sync_interval")) {
    cfg.target_sync_interval = j.at("target_sync_interval").get<int>();
  }
  cfg.validate();
  return cfg;
}

struct TrainResult {
  PolicyNetwork net;
  std::vector<double> learning_curve;  // total (undiscounted) episode reward
};

namespace detail {

struct EpisodeStep {
  Observation observation{};
  int action = 0;
  double reward = 0.0;
};

inline std::vector<EpisodeStep> run_episode_softmax(Env& env,
                                                    const PolicyNetwork& net,
                                                    Rng& rng,
                                                    double temperature) {
  std::vector<EpisodeStep> steps;
  Observation obs = env.reset();
  while (!env.done()) {
    const std::vector<double> logits = forward(net, obs);
    const int action = select_action_softmax(logits, rng, temperature);
    const Env::StepResult res = env.step(action);
    steps.push_back(EpisodeStep{obs, action, res.reward});
    obs = res.observation;
  }
  return steps;
}

inline void apply_gradient(PolicyNetwork& net, const ParamGrad& grad,
                           double scale) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Layer& layer = net.layers[i];
    for (std::size_t k = 0; k < layer.w.size(); ++k) {
      layer.w[k] += scale * grad.w[i][k];
    }
    for (std::size_t k = 0; k < layer.b.size(); ++k) {
      layer.b[k] += scale * grad.b[i][k];
    }
  }
}

inline void check_finite(const PolicyNetwork& net, int episode) {
  for (const Layer& layer : net.layers) {
    for (double v : layer.w) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("training diverged at episode " +
                                 std::to_string(episode));
      }
    }
    for (double v : layer.b) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("training diverged at episode " +
                                 std::to_string(episode));
      }
    }
  }
}

inline TrainResult train_reinforce(const std::vector<ScenarioWeek>& weeks,
                                   const RewardConfig& reward_cfg,
                                   const TrainConfig& cfg) {
  PolicyNetwork net = make_policy_network(cfg.rng_seed, kObservationDim,
                                          cfg.hidden_layers, kNumActions);
  Rng rng(mix64(cfg.rng_seed ^ 0x7261696eULL));
  std::vector<double> curve;
  curve.reserve(cfg.episodes);
  double baseline = 0.0;
  bool baseline_ready = false;

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const ScenarioWeek& week =
        sample_scenario(weeks, mix64(cfg.rng_seed) + episode);
    Env env(week, reward_cfg);
    const double temperature = cfg.exploration.at(episode, cfg.episodes);
    const std::vector<EpisodeStep> steps =
        run_episode_softmax(env, net, rng, temperature);
    if (steps.empty()) {
      curve.push_back(0.0);
      continue;
    }

    // discounted return-to-go per step, on clipped rewards
    std::vector<double> returns(steps.size(), 0.0);
    double g = 0.0;
    double total_reward = 0.0;
    for (int t = static_cast<int>(steps.size()) - 1; t >= 0; --t) {
      double r = steps[t].reward;
      total_reward += r;
      if (cfg.reward_clip > 0.0) r = std::max(r, -cfg.reward_clip);
      g = r + cfg.discount * g;
      returns[t] = g;
    }
    if (!std::isfinite(total_reward)) {
      throw std::runtime_error("training diverged at episode " +
                               std::to_string(episode));
    }

    double mean_return = 0.0;
    for (double r : returns) mean_return += r;
    mean_return /= static_cast<double>(returns.size());
    if (!baseline_ready) {
      baseline = mean_return;
      baseline_ready = true;
    } else {
      baseline = cfg.baseline_momentum * baseline +
                 (1.0 - cfg.baseline_momentum) * mean_return;
    }
    double adv_scale = 0.0;
    for (double r : returns) {
      adv_scale += (r - mean_return) * (r - mean_return);
    }
    adv_scale = std::sqrt(adv_scale / static_cast<double>(returns.size()));
    if (adv_scale < 1e-8) adv_scale = 1.0;

    ParamGrad grad = ParamGrad::zeros_like(net);
    ForwardCache cache;
    for (std::size_t t = 0; t < steps.size(); ++t) {
      const EpisodeStep& step = steps[t];
      const std::vector<double> logits =
          forward_cached(net, step.observation, &cache);
      const std::vector<double> probs = softmax(logits, temperature);
      std::vector<double> dlogits(logits.size());
      for (std::size_t a = 0; a < logits.size(); ++a) {
        const double indicator = static_cast<int>(a) == step.action ? 1.0 : 0.0;
        dlogits[a] = (indicator - probs[a]) / temperature;
      }
      const double advantage = returns[t] - baseline;
      accumulate_param_grad(net, step.observation, cache, std::move(dlogits),
                            advantage, grad);
    }
    apply_gradient(net, grad,
                   cfg.learning_rate / static_cast<double>(steps.size()));
    check_finite(net, episode);
    curve.push_back(total_reward);
  }
  return TrainResult{std::move(net), std::move(curve)};
}

inline TrainResult train_dqn(const std::vector<ScenarioWeek>& weeks,
                             const RewardConfig& reward_cfg,
                             const TrainConfig& cfg) {
  PolicyNetwork net = make_policy_network(cfg.rng_seed, kObservationDim,
                                          cfg.hidden_layers, kNumActions);
  PolicyNetwork target = net;
  Rng rng(mix64(cfg.rng_seed ^ 0x64716eULL));

  struct Transition {
    Observation obs{};
    int action = 0;
    double reward = 0.0;
    Observation next{};
    bool done = false;
  };
  std::deque<Transition> replay;
  std::vector<double> curve;
  curve.reserve(cfg.episodes);
  int updates = 0;

  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const ScenarioWeek& week =
        sample_scenario(weeks, mix64(cfg.rng_seed) + episode);
    Env env(week, reward_cfg);
    const double epsilon =
        std::clamp(cfg.exploration.at(episode, cfg.episodes), 0.0, 1.0);
    Observation obs = env.reset();
    double total_reward = 0.0;

    while (!env.done()) {
      int action;
      if (rng.next_double() < epsilon) {
        action = static_cast<int>(rng.next_index(kNumActions));
      } else {
        action = select_action_greedy(forward(net, obs));
      }
      const Env::StepResult res = env.step(action);
      total_reward += res.reward;
      replay.push_back(Transition{obs, action, res.reward, res.observation,
                                  res.done});
      if (static_cast<int>(replay.size()) > cfg.replay_capacity) {
        replay.pop_front();
      }
      obs = res.observation;

      if (static_cast<int>(replay.size()) >= cfg.batch_size) {
        ParamGrad grad = ParamGrad::zeros_like(net);
        ForwardCache cache;
        for (int k = 0; k < cfg.batch_size; ++k) {
          const Transition& tr = replay[rng.next_index(replay.size())];
          const std::vector<double> q = forward_cached(net, tr.obs, &cache);
          double target_q = tr.reward;
          if (!tr.done) {
            const std::vector<double> qn = forward(target, tr.next);
            target_q += cfg.discount * *std::max_element(qn.begin(), qn.end());
          }
          // squared TD error; adjoint is on the taken action only
          std::vector<double> dlogits(q.size(), 0.0);
          dlogits[tr.action] = target_q - q[tr.action];
          accumulate_param_grad(net, tr.obs, cache, std::move(dlogits),
                                1.0 / cfg.batch_size, grad);
        }
        apply_gradient(net, grad, cfg.learning_rate);
        ++updates;
        if (updates % cfg.target_sync_interval == 0) target = net;
      }
    }
    if (!std::isfinite(total_reward)) {
      throw std::runtime_error("training diverged at episode " +
                               std::to_string(episode));
    }
    check_finite(net, episode);
    curve.push_back(total_reward);
  }
  return TrainResult{std::move(net), std::move(curve)};
}

}  // namespace detail

// Train a policy on the configured weeks with domain randomization (each
// episode draws one week). Deterministic for a fixed (config, weeks) pair.
inline TrainResult train(const std::vector<ScenarioWeek>& weeks,
                         const RewardConfig& reward_cfg,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (weeks.empty()) {
    throw std::invalid_argument("train: no weeks configured");
  }
  if (cfg.algorithm == TrainAlgorithm::kReinforceBaseline) {
    return detail::train_reinforce(weeks, reward_cfg, cfg);
  }
  return detail::train_dqn(weeks, reward_cfg, cfg);
}

struct EpisodeStats {
  double total_reward = 0.0;
  double total_idle_minutes = 0.0;
  double total_setup_minutes = 0.0;
  int steps = 0;

  double combined_cost(double setup_weight) const {
    return total_idle_minutes + setup_weight * total_setup_minutes;
  }
};

// One full greedy episode; rows hold the observation seen before each action.
inline TraceDataset rollout(const PolicyNetwork& net, const ScenarioWeek& week,
                            const RewardConfig& reward_cfg = {},
                            EpisodeStats* stats = nullptr) {
  Env env(week, reward_cfg);
  TraceDataset trace;
  Observation obs = env.reset();
  double total_reward = 0.0;
  while (!env.done()) {
    const int action = select_action_greedy(forward(net, obs));
    trace.rows.push_back(
        TraceRow{static_cast<long long>(trace.rows.size()), obs, action});
    const Env::StepResult res = env.step(action);
    total_reward += res.reward;
    obs = res.observation;
  }
  if (stats) {
    stats->total_reward = total_reward;
    stats->total_idle_minutes = env.state().total_idle_minutes();
    stats->total_setup_minutes = env.state().cumulative_setup_minutes;
    stats->steps = env.steps_taken();
  }
  return trace;
}

// Uniform-random policy baseline on one week.
inline TraceDataset rollout_random(const ScenarioWeek& week,
                                   std::uint64_t seed,
                                   const RewardConfig& reward_cfg = {},
                                   EpisodeStats* stats = nullptr) {
  Env env(week, reward_cfg);
  Rng rng(mix64(seed ^ 0x72616e64ULL));
  TraceDataset trace;
  Observation obs = env.reset();
  double total_reward = 0.0;
  while (!env.done()) {
    const int action = static_cast<int>(rng.next_index(kNumActions));
    trace.rows.push_back(
        TraceRow{static_cast<long long>(trace.rows.size()), obs, action});
    const Env::StepResult res = env.step(action);
    total_reward += res.reward;
    obs = res.observation;
  }
  if (stats) {
    stats->total_reward = total_reward;
    stats->total_idle_minutes = env.state().total_idle_minutes();
    stats->total_setup_minutes = env.state().cumulative_setup_minutes;
    stats->steps = env.steps_taken();
  }
  return trace;
}

inline void write_learning_curve_csv(const std::vector<double>& curve,
                                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "episode,return\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << i << ',' << csv::format_double(curve[i]) << '\n';
  }
}

}  // namespace xsched
