#include "sitp/curriculum.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace sitp {

void SchedulerConfig::validate() const {
  if (n_tasks < 1) throw ConfigError("n_tasks", "must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha", "must lie in [0, 1]");
  if (episodes_per_stage < 1) throw ConfigError("episodes_per_stage", "must be at least 1");
  if (!(max_sr > 0.0 && max_sr <= 1.0)) throw ConfigError("max_sr", "must lie in (0, 1]");
  if (!std::isfinite(min_score) || min_score > 1.0) {
    throw ConfigError("min_score", "must be finite and at most 1");
  }
  if (iterations < 1) throw ConfigError("iterations", "must be at least 1");
}

void SchedulerKind::validate() const {
  if (method == SchedulerMethod::kTscl && window_length < 2) {
    throw ConfigError("window_length", "must be at least 2 for TSCL");
  }
}

std::string to_string(SchedulerMethod method) {
  switch (method) {
    case SchedulerMethod::kSitp: return "sitp";
    case SchedulerMethod::kTscl: return "tscl";
    case SchedulerMethod::kUniform: return "uniform";
  }
  return "unknown";
}

SchedulerMethod parse_scheduler_method(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "sitp") return SchedulerMethod::kSitp;
  if (lower == "tscl") return SchedulerMethod::kTscl;
  if (lower == "uniform") return SchedulerMethod::kUniform;
  throw ConfigError("kind", "unknown scheduler kind '" + name + "'");
}

SamplingDistribution softmax_distribution(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("softmax_distribution: empty score list");
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("softmax_distribution: non-finite score");
  }
  const double max_score = *std::max_element(scores.begin(), scores.end());
  SamplingDistribution dist;
  dist.probs.resize(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    dist.probs[i] = std::exp(scores[i] - max_score);
    total += dist.probs[i];
  }
  for (double& p : dist.probs) p /= total;
  return dist;
}

std::size_t sample_task(const SamplingDistribution& dist, Rng& rng) {
  if (dist.probs.empty()) throw std::invalid_argument("sample_task: empty distribution");
  const double draw = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    cumulative += dist.probs[i];
    if (draw < cumulative) return i;
  }
  // Rounding left the total just below the draw.
  return dist.probs.size() - 1;
}

double tscl_score(std::span<const double> sr_history, std::size_t window_length) {
  const std::size_t n = std::min(window_length, sr_history.size());
  if (n < 2) return 0.0;
  const auto window = sr_history.last(n);
  const double x_mean = static_cast<double>(n - 1) / 2.0;
  const double y_mean = std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - x_mean;
    sxy += dx * (window[i] - y_mean);
    sxx += dx * dx;
  }
  return std::abs(sxy / sxx);
}

double tscl_score(const std::deque<double>& sr_history, std::size_t window_length) {
  const std::vector<double> flat(sr_history.begin(), sr_history.end());
  return tscl_score(std::span<const double>(flat), window_length);
}

double stage_mean_sr(std::span<const int> episode_srs) {
  if (episode_srs.empty()) throw std::invalid_argument("stage_mean_sr: no episodes");
  long successes = 0;
  for (int sr : episode_srs) {
    if (sr != 0 && sr != 1) throw std::invalid_argument("stage_mean_sr: SR values must be 0 or 1");
    successes += sr;
  }
  return static_cast<double>(successes) / static_cast<double>(episode_srs.size());
}

Scheduler::Scheduler(SchedulerConfig config, SchedulerKind kind)
    : config_(config), kind_(kind) {
  config_.validate();
  kind_.validate();
  tasks_.resize(config_.n_tasks);
  dist_.probs.assign(config_.n_tasks, 1.0 / static_cast<double>(config_.n_tasks));
  history_capacity_ = std::max<std::size_t>(kind_.window_length, 64);
}

std::vector<double> Scheduler::scores() const {
  std::vector<double> out;
  out.reserve(tasks_.size());
  for (const auto& t : tasks_) out.push_back(t.score);
  return out;
}

double Scheduler::record_stage(std::size_t task, std::span<const int> episode_srs) {
  if (task >= tasks_.size()) throw std::out_of_range("record_stage: task index out of range");
  if (episode_srs.size() != config_.episodes_per_stage) {
    throw std::invalid_argument("record_stage: expected " +
                                std::to_string(config_.episodes_per_stage) + " episode results, got " +
                                std::to_string(episode_srs.size()));
  }
  const double sr_new = stage_mean_sr(episode_srs);
  apply_stage(task, sr_new);
  return sr_new;
}

void Scheduler::apply_stage(std::size_t task, double sr_new) {
  TaskScoreState& state = tasks_[task];
  state.sr_history.push_back(sr_new);
  while (state.sr_history.size() > history_capacity_) state.sr_history.pop_front();

  switch (kind_.method) {
    case SchedulerMethod::kSitp: {
      // Order matters: EMA, then sr_old, then the solved-task override.
      state.score = config_.alpha * state.score +
                    (1.0 - config_.alpha) * std::abs(sr_new - state.sr_old);
      state.sr_old = sr_new;
      if (sr_new > config_.max_sr) state.score = config_.min_score;
      break;
    }
    case SchedulerMethod::kTscl:
      state.sr_old = sr_new;
      state.score = tscl_score(state.sr_history, kind_.window_length);
      break;
    case SchedulerMethod::kUniform:
      state.sr_old = sr_new;
      break;
  }
  ++state.stages_seen;

  if (kind_.method != SchedulerMethod::kUniform) {
    const std::vector<double> s = scores();
    dist_ = softmax_distribution(s);
  }
}

double Scheduler::general_mean_sr() const {
  double total = 0.0;
  for (const auto& t : tasks_) {
    if (t.stages_seen > 0) total += t.sr_history.back();
  }
  return total / static_cast<double>(tasks_.size());
}

double general_mean_sr(const Scheduler& state) { return state.general_mean_sr(); }

}  // namespace sitp
