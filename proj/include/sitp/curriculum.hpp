#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "sitp/errors.hpp"
#include "sitp/rng.hpp"

namespace sitp {

struct SchedulerConfig {
  std::size_t n_tasks = 1;
  double alpha = 0.5;                   // EMA smoothing coefficient
  std::size_t episodes_per_stage = 32;  // k
  double max_sr = 0.95;                 // a task is "solved" above this
  double min_score = -2.0;              // score assigned to solved tasks
  std::size_t iterations = 200;         // M

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

enum class SchedulerMethod { kSitp, kTscl, kUniform };

struct SchedulerKind {
  SchedulerMethod method = SchedulerMethod::kSitp;
  std::size_t window_length = 10;  // only read by TSCL

  static SchedulerKind sitp() { return {SchedulerMethod::kSitp, 10}; }
  static SchedulerKind tscl(std::size_t window) { return {SchedulerMethod::kTscl, window}; }
  static SchedulerKind uniform() { return {SchedulerMethod::kUniform, 10}; }

  void validate() const;
};

std::string to_string(SchedulerMethod method);
// Accepts "sitp", "tscl", "uniform" (case-insensitive).
SchedulerMethod parse_scheduler_method(const std::string& name);

struct TaskScoreState {
  double score = 0.0;
  double sr_old = 0.0;
  std::size_t stages_seen = 0;
  std::deque<double> sr_history;  // bounded; oldest entries dropped first
};

struct SamplingDistribution {
  std::vector<double> probs;
};

// p_i = exp(S_i) / sum_j exp(S_j), evaluated after subtracting max(S).
// Throws std::invalid_argument on an empty or non-finite input.
SamplingDistribution softmax_distribution(std::span<const double> scores);

// Cumulative-inversion draw: the first index whose running sum exceeds a
// single uniform draw. Consumes exactly one value from `rng`.
std::size_t sample_task(const SamplingDistribution& dist, Rng& rng);

// Absolute OLS slope of the last min(window, size) points against their
// stage index. Zero for fewer than two points.
double tscl_score(std::span<const double> sr_history, std::size_t window_length);
double tscl_score(const std::deque<double>& sr_history, std::size_t window_length);

// Arithmetic mean of `episode_srs`; throws on empty input or on
// any value other than 0 or 1.
double stage_mean_sr(std::span<const int> episode_srs);

// Task-sampling scheduler shared by SITP, TSCL and the uniform baseline.
//
// All three kinds keep the same per-task bookkeeping (sr_old, history) and
// sample through the same softmax; they differ only in how a finished stage
// turns into a score. Single-writer: one training loop mutates it at stage
// boundaries.
class Scheduler {
 public:
  Scheduler(SchedulerConfig config, SchedulerKind kind);

  const SchedulerConfig& config() const { return config_; }
  const SchedulerKind& kind() const { return kind_; }
  const SamplingDistribution& distribution() const { return dist_; }
  const std::vector<TaskScoreState>& tasks() const { return tasks_; }
  std::vector<double> scores() const;

  std::size_t sample_task(Rng& rng) const { return sitp::sample_task(dist_, rng); }

  // Folds one stage of k binary episode results for `task` into the state
  // and recomputes the distribution. Returns SR_new.
  double record_stage(std::size_t task, std::span<const int> episode_srs);

  // Mean over tasks of the latest SR_new (0 for tasks never trained).
  double general_mean_sr() const;

  // Entries of sr_history kept per task.
  std::size_t history_capacity() const { return history_capacity_; }

 private:
  void apply_stage(std::size_t task, double sr_new);

  SchedulerConfig config_;
  SchedulerKind kind_;
  std::vector<TaskScoreState> tasks_;
  SamplingDistribution dist_;
  std::size_t history_capacity_;
};

double general_mean_sr(const Scheduler& state);

}  // namespace sitp
