#include "sitp/sr_metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace sitp {

int episode_sr(const EpisodeOutcome& outcome, const SrRule& rule) {
  switch (rule.kind) {
    case SrRule::Kind::kGoalAllAgents:
      return std::all_of(outcome.per_agent_reached.begin(), outcome.per_agent_reached.end(),
                         [](bool reached) { return reached; })
                 ? 1
                 : 0;
    case SrRule::Kind::kRewardThreshold:
      return outcome.total_reward > rule.sr_min ? 1 : 0;
  }
  return 0;
}

double individual_sr(const EpisodeOutcome& outcome) {
  if (outcome.per_agent_reached.empty()) return 0.0;
  const auto reached = std::count(outcome.per_agent_reached.begin(),
                                  outcome.per_agent_reached.end(), true);
  return static_cast<double>(reached) / static_cast<double>(outcome.per_agent_reached.size());
}

double mean_sr(std::span<const int> srs) {
  if (srs.empty()) throw std::invalid_argument("mean_sr: empty list");
  double total = 0.0;
  for (int sr : srs) total += sr;
  return total / static_cast<double>(srs.size());
}

std::vector<int> episode_srs(std::span<const EpisodeOutcome> outcomes, const SrRule& rule) {
  std::vector<int> out;
  out.reserve(outcomes.size());
  for (const auto& o : outcomes) out.push_back(episode_sr(o, rule));
  return out;
}

}  // namespace sitp
