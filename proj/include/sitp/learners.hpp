#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "sitp/gridworld.hpp"
#include "sitp/rng.hpp"
#include "sitp/sr_metrics.hpp"

namespace sitp {

// Anything that can be trained on one task for a stage of k episodes.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::size_t n_tasks() const = 0;
  // Runs k training episodes on `task` and reports each one.
  virtual std::vector<EpisodeOutcome> train_stage(std::size_t task, std::size_t k, Rng& rng) = 0;
  // Success probability on `task` under `rule` without updating the learner.
  virtual double evaluate(std::size_t task, const SrRule& rule, Rng& rng) = 0;
};

// ---------------------------------------------------------------------------
// Synthetic learner
// ---------------------------------------------------------------------------

// Per-task success probabilities x with saturating growth and forgetting:
//   x_j += learn_rate * transfer[t][j] * (1 - x_j)      for every j
//   x_j *= (1 - forget_rate)                             for every j != t
// after each stage trained on task t.
struct SyntheticLearnerModel {
  std::vector<double> proficiency;
  std::vector<std::vector<double>> transfer;
  double learn_rate = 0.1;
  double forget_rate = 0.0;
  // Episode reward is reward_scale * (0.5 + x - u) for the same uniform u that
  // decides success, so `reward > reward_scale / 2` iff the episode succeeded.
  double reward_scale = 20.0;

  void validate() const;
  std::size_t n_tasks() const { return proficiency.size(); }

  // Two tasks: the easy one learns 4x faster and transfers mildly to the
  // hard one.
  static SyntheticLearnerModel easy_hard();
  // Ten tasks with heterogeneous learn rates; task 9 is the hardest.
  static SyntheticLearnerModel ten_task();
};

// Index of the hardest task of `SyntheticLearnerModel::ten_task()`.
inline constexpr std::size_t kTenTaskHardest = 9;

// One stage of the synthetic learner: k Bernoulli(x_task) outcomes drawn
// before the proficiency update. One uniform draw per episode.
std::vector<EpisodeOutcome> synthetic_episodes(SyntheticLearnerModel& model, std::size_t task, std::size_t k,
                                               Rng& rng);
std::vector<int> synthetic_train_stage(SyntheticLearnerModel& model, std::size_t task, std::size_t k, Rng& rng);
void apply_synthetic_learning(SyntheticLearnerModel& model, std::size_t task);

class SyntheticLearner : public Learner {
 public:
  explicit SyntheticLearner(SyntheticLearnerModel model);
  std::size_t n_tasks() const override { return model_.n_tasks(); }
  std::vector<EpisodeOutcome> train_stage(std::size_t task, std::size_t k, Rng& rng) override;
  // Exact: the current proficiency (both SR rules agree with it in law).
  double evaluate(std::size_t task, const SrRule& rule, Rng& rng) override;
  const SyntheticLearnerModel& model() const { return model_; }

 private:
  SyntheticLearnerModel model_;
};

// ---------------------------------------------------------------------------
// Tabular Q-learning
// ---------------------------------------------------------------------------

struct TabularPolicyConfig {
  double epsilon = 1.0;
  double epsilon_decay = 0.999;  // multiplicative, once per episode
  double epsilon_min = 0.05;
  double learning_rate = 0.5;
  double discount = 0.95;

  void validate() const;
};

// Q-table shared by all agents, keyed by the observation hash.
class TabularPolicy {
 public:
  using Row = std::array<double, kNumActions>;

  explicit TabularPolicy(TabularPolicyConfig config = {});

  // One uniform draw for the exploration test, plus one index draw for a
  // random action or a tie among greedy actions.
  Action act(std::uint64_t state, Rng& rng) const;
  Action greedy(std::uint64_t state, Rng& rng) const;

  // One-step TD update. `next_state` is ignored when `terminal`.
  void update(std::uint64_t state, Action action, double reward, std::uint64_t next_state, bool terminal);
  void end_episode();

  double epsilon() const { return epsilon_; }
  const TabularPolicyConfig& config() const { return config_; }
  const std::unordered_map<std::uint64_t, Row>& table() const { return table_; }
  double max_value(std::uint64_t state) const;

 private:
  TabularPolicyConfig config_;
  double epsilon_;
  std::unordered_map<std::uint64_t, Row> table_;
};

// Runs one episode on a fresh layout drawn from `env_config`. Learns when
// `learn` is true; otherwise acts greedily and leaves the table untouched.
EpisodeOutcome run_tabular_episode(TabularPolicy& policy, const EnvConfig& env_config, Rng& rng, bool learn,
                                   const GridMap* file_map = nullptr);

// k learning episodes; returns their SRs under `rule`. Requires k >= 1.
std::vector<int> tabular_train_stage(TabularPolicy& policy, const EnvConfig& env_config, std::size_t k,
                                     const SrRule& rule, Rng& rng);

class TabularLearner : public Learner {
 public:
  TabularLearner(TabularPolicyConfig config, std::vector<EnvConfig> tasks, std::size_t eval_episodes = 50);
  std::size_t n_tasks() const override { return tasks_.size(); }
  std::vector<EpisodeOutcome> train_stage(std::size_t task, std::size_t k, Rng& rng) override;
  // Mean SR of `eval_episodes` greedy episodes.
  double evaluate(std::size_t task, const SrRule& rule, Rng& rng) override;
  const TabularPolicy& policy() const { return policy_; }

 private:
  const GridMap* map_for(std::size_t task) const { return file_maps_[task] ? &*file_maps_[task] : nullptr; }

  TabularPolicy policy_;
  std::vector<EnvConfig> tasks_;
  std::vector<std::optional<GridMap>> file_maps_;  // loaded once per file task
  std::size_t eval_episodes_;
};

}  // namespace sitp
