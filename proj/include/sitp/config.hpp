#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sitp/curriculum.hpp"
#include "sitp/gridworld.hpp"
#include "sitp/learners.hpp"
#include "sitp/sr_metrics.hpp"

namespace sitp {

// One entry of the task set. Synthetic tasks are just an index into the
// learner model; environment tasks carry the MAPF instance distribution.
struct TaskDescriptor {
  std::string name;
  std::optional<EnvConfig> env;
};

struct TabularLearnerSpec {
  TabularPolicyConfig policy;
  std::size_t eval_episodes = 50;
};

using LearnerSpec = std::variant<SyntheticLearnerModel, TabularLearnerSpec>;

struct ExperimentConfig {
  std::string name = "experiment";
  SchedulerConfig scheduler;
  SchedulerKind kind;
  LearnerSpec learner = SyntheticLearnerModel{};
  std::vector<TaskDescriptor> tasks;
  SrRule sr_rule;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
  double target_sr = 0.9;  // stages-to-threshold statistic in summaries

  // Cross-field checks on top of each component's own validation.
  void validate() const;
};

// JSON document -> config. Relative map paths resolve against `base_dir`.
// Unknown keys, wrong types and out-of-range values throw ConfigError whose
// field is the dotted JSON path (e.g. "scheduler.alpha").
ExperimentConfig parse_experiment_config(const nlohmann::json& doc, const std::string& base_dir = ".");

// Reads and parses a config file. A missing file throws ConfigError naming
// the path.
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical JSON form; parse_experiment_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& config);

// FNV-1a over the canonical dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

// Parses "1,2,3" into seeds; throws ConfigError("seeds", ...) on bad input.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace sitp
