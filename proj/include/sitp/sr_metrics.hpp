#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sitp {

struct EpisodeOutcome {
  std::vector<bool> per_agent_reached;
  double total_reward = 0.0;
  std::size_t steps_used = 0;
  bool truncated = false;  // hit the step limit
};

struct SrRule {
  enum class Kind { kGoalAllAgents, kRewardThreshold };
  Kind kind = Kind::kGoalAllAgents;
  double sr_min = 0.0;

  static SrRule goal_all_agents() { return {Kind::kGoalAllAgents, 0.0}; }
  static SrRule reward_threshold(double sr_min) { return {Kind::kRewardThreshold, sr_min}; }
};

// Cooperative success: 1 iff every agent reached its goal. Reward threshold:
// 1 iff total_reward > sr_min (strict).
int episode_sr(const EpisodeOutcome& outcome, const SrRule& rule);

// Fraction of agents that reached their goal. Logged only; never drives a
// scheduler.
double individual_sr(const EpisodeOutcome& outcome);

// Throws std::invalid_argument on an empty list.
double mean_sr(std::span<const int> srs);

std::vector<int> episode_srs(std::span<const EpisodeOutcome> outcomes, const SrRule& rule);

}  // namespace sitp
