#include "sitp/learners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sitp/errors.hpp"

namespace sitp {

void SyntheticLearnerModel::validate() const {
  const std::size_t n = proficiency.size();
  if (n == 0) throw ConfigError("proficiency", "needs at least one task");
  for (double x : proficiency) {
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("proficiency", "entries must lie in [0, 1]");
  }
  if (transfer.size() != n) throw ConfigError("transfer", "must be an N x N matrix");
  for (std::size_t i = 0; i < n; ++i) {
    if (transfer[i].size() != n) throw ConfigError("transfer", "must be an N x N matrix");
    for (double w : transfer[i]) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("transfer", "entries must be finite and nonnegative");
    }
    if (!(transfer[i][i] > 0.0)) throw ConfigError("transfer", "diagonal entries must be positive");
  }
  if (!(learn_rate > 0.0) || !std::isfinite(learn_rate)) throw ConfigError("learn_rate", "must be positive");
  if (!(forget_rate >= 0.0 && forget_rate < 1.0)) throw ConfigError("forget_rate", "must lie in [0, 1)");
  if (!std::isfinite(reward_scale) || !(reward_scale > 0.0)) throw ConfigError("reward_scale", "must be positive");
}

SyntheticLearnerModel SyntheticLearnerModel::easy_hard() {
  SyntheticLearnerModel m;
  m.proficiency = {0.0, 0.0};
  m.transfer = {{0.6, 0.05}, {0.0, 0.15}};
  m.learn_rate = 0.1;
  m.forget_rate = 0.0;
  return m;
}

SyntheticLearnerModel SyntheticLearnerModel::ten_task() {
  SyntheticLearnerModel m;
  const std::vector<double> rates = {1.0, 0.9, 0.75, 0.6, 0.5, 0.4, 0.3, 0.25, 0.2, 0.12};
  const std::size_t n = rates.size();
  m.proficiency.assign(n, 0.0);
  m.transfer.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    m.transfer[i][i] = rates[i];
    // Each task helps its harder neighbour a little.
    if (i + 1 < n) m.transfer[i][i + 1] = 0.05;
  }
  m.learn_rate = 0.3;
  m.forget_rate = 0.001;
  return m;
}

void apply_synthetic_learning(SyntheticLearnerModel& model, std::size_t task) {
  auto& x = model.proficiency;
  for (std::size_t j = 0; j < x.size(); ++j) {
    x[j] += model.learn_rate * model.transfer[task][j] * (1.0 - x[j]);
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j != task) x[j] *= 1.0 - model.forget_rate;
    x[j] = std::clamp(x[j], 0.0, 1.0);
  }
}

std::vector<EpisodeOutcome> synthetic_episodes(SyntheticLearnerModel& model, std::size_t task, std::size_t k,
                                               Rng& rng) {
  if (task >= model.n_tasks()) throw std::out_of_range("synthetic_episodes: task index out of range");
  const double x = model.proficiency[task];
  std::vector<EpisodeOutcome> out(k);
  for (auto& episode : out) {
    const double u = rng.uniform();
    episode.per_agent_reached = {u < x};
    episode.total_reward = model.reward_scale * (0.5 + x - u);
    episode.steps_used = 1;
  }
  apply_synthetic_learning(model, task);
  return out;
}

std::vector<int> synthetic_train_stage(SyntheticLearnerModel& model, std::size_t task, std::size_t k, Rng& rng) {
  const auto episodes = synthetic_episodes(model, task, k, rng);
  return episode_srs(episodes, SrRule::goal_all_agents());
}

SyntheticLearner::SyntheticLearner(SyntheticLearnerModel model) : model_(std::move(model)) { model_.validate(); }

std::vector<EpisodeOutcome> SyntheticLearner::train_stage(std::size_t task, std::size_t k, Rng& rng) {
  return synthetic_episodes(model_, task, k, rng);
}

double SyntheticLearner::evaluate(std::size_t task, const SrRule& /*rule*/, Rng& /*rng*/) {
  if (task >= model_.n_tasks()) throw std::out_of_range("SyntheticLearner::evaluate: task index out of range");
  return model_.proficiency[task];
}

void TabularPolicyConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon", "must lie in [0, 1]");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ConfigError("epsilon_decay", "must lie in (0, 1]");
  if (!(epsilon_min >= 0.0 && epsilon_min <= epsilon)) throw ConfigError("epsilon_min", "must lie in [0, epsilon]");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate", "must lie in (0, 1]");
  if (!(discount >= 0.0 && discount < 1.0)) throw ConfigError("discount", "must lie in [0, 1)");
}

TabularPolicy::TabularPolicy(TabularPolicyConfig config) : config_(config), epsilon_(config.epsilon) {
  config_.validate();
}

double TabularPolicy::max_value(std::uint64_t state) const {
  const auto it = table_.find(state);
  if (it == table_.end()) return 0.0;
  return *std::max_element(it->second.begin(), it->second.end());
}

Action TabularPolicy::greedy(std::uint64_t state, Rng& rng) const {
  const auto it = table_.find(state);
  if (it == table_.end()) return static_cast<Action>(rng.uniform_index(kNumActions));
  const Row& q = it->second;
  const double best = *std::max_element(q.begin(), q.end());
  std::array<std::size_t, kNumActions> ties{};
  std::size_t n_ties = 0;
  for (std::size_t a = 0; a < kNumActions; ++a) {
    if (q[a] == best) ties[n_ties++] = a;
  }
  return static_cast<Action>(ties[n_ties == 1 ? 0 : rng.uniform_index(n_ties)]);
}

Action TabularPolicy::act(std::uint64_t state, Rng& rng) const {
  if (rng.uniform() < epsilon_) return static_cast<Action>(rng.uniform_index(kNumActions));
  return greedy(state, rng);
}

void TabularPolicy::update(std::uint64_t state, Action action, double reward, std::uint64_t next_state,
                           bool terminal) {
  const double target = reward + (terminal ? 0.0 : config_.discount * max_value(next_state));
  Row& q = table_.try_emplace(state, Row{}).first->second;
  double& value = q[static_cast<std::size_t>(action)];
  value += config_.learning_rate * (target - value);
}

void TabularPolicy::end_episode() {
  epsilon_ = std::max(config_.epsilon_min, epsilon_ * config_.epsilon_decay);
}

EpisodeOutcome run_tabular_episode(TabularPolicy& policy, const EnvConfig& env_config, Rng& rng, bool learn,
                                   const GridMap* file_map) {
  MapfEnv env(env_config, generate_map(env_config, rng, file_map));
  const std::size_t n = env.n_agents();
  std::vector<Action> actions(n, Action::kStay);
  std::vector<std::uint64_t> states(n, 0);
  std::vector<bool> was_active(n, false);

  while (!env.done()) {
    for (std::size_t i = 0; i < n; ++i) {
      was_active[i] = env.agents()[i].active;
      if (!was_active[i]) {
        actions[i] = Action::kStay;
        continue;
      }
      states[i] = env.observe(i).hash();
      actions[i] = learn ? policy.act(states[i], rng) : policy.greedy(states[i], rng);
    }
    const StepResult step = env.step(actions);
    if (!learn) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (!was_active[i]) continue;
      const bool reached = !env.agents()[i].active;
      const std::uint64_t next = reached ? 0 : env.observe(i).hash();
      policy.update(states[i], actions[i], step.rewards[i], next, reached);
    }
  }
  if (learn) policy.end_episode();
  return env.outcome();
}

std::vector<int> tabular_train_stage(TabularPolicy& policy, const EnvConfig& env_config, std::size_t k,
                                     const SrRule& rule, Rng& rng) {
  if (k < 1) throw std::invalid_argument("tabular_train_stage: k must be at least 1");
  std::vector<int> srs;
  srs.reserve(k);
  for (std::size_t e = 0; e < k; ++e) srs.push_back(episode_sr(run_tabular_episode(policy, env_config, rng, true), rule));
  return srs;
}

TabularLearner::TabularLearner(TabularPolicyConfig config, std::vector<EnvConfig> tasks, std::size_t eval_episodes)
    : policy_(config), tasks_(std::move(tasks)), eval_episodes_(eval_episodes) {
  if (tasks_.empty()) throw ConfigError("tasks", "needs at least one task");
  for (const auto& t : tasks_) {
    t.validate();
    const auto* file = std::get_if<MapFile>(&t.map_source);
    file_maps_.push_back(file ? std::optional<GridMap>(load_movingai_map(file->path)) : std::nullopt);
  }
  if (eval_episodes_ < 1) throw ConfigError("eval_episodes", "must be at least 1");
}

std::vector<EpisodeOutcome> TabularLearner::train_stage(std::size_t task, std::size_t k, Rng& rng) {
  if (task >= tasks_.size()) throw std::out_of_range("TabularLearner::train_stage: task index out of range");
  if (k < 1) throw std::invalid_argument("TabularLearner::train_stage: k must be at least 1");
  std::vector<EpisodeOutcome> out;
  out.reserve(k);
  for (std::size_t e = 0; e < k; ++e) out.push_back(run_tabular_episode(policy_, tasks_[task], rng, true, map_for(task)));
  return out;
}

double TabularLearner::evaluate(std::size_t task, const SrRule& rule, Rng& rng) {
  if (task >= tasks_.size()) throw std::out_of_range("TabularLearner::evaluate: task index out of range");
  int successes = 0;
  for (std::size_t e = 0; e < eval_episodes_; ++e) {
    successes += episode_sr(run_tabular_episode(policy_, tasks_[task], rng, false, map_for(task)), rule);
  }
  return static_cast<double>(successes) / static_cast<double>(eval_episodes_);
}

}  // namespace sitp
