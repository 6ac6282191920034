#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sitp/config.hpp"
#include "sitp/curriculum.hpp"
#include "sitp/learners.hpp"

namespace sitp {

// Observable trace of one scheduler iteration. Scores and probabilities are
// taken after the stage has been recorded.
struct StageRecord {
  std::uint64_t seed = 0;
  std::size_t iteration = 0;  // 1-based
  std::size_t task = 0;
  double sr_new = 0.0;
  std::vector<double> scores;
  std::vector<double> probs;
  double general_mean_sr = 0.0;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<StageRecord> records;
  // Learner success on every task after the last iteration.
  std::vector<double> final_task_sr;
};

struct RunOptions {
  std::size_t jobs = 1;
  int verbosity = 0;
  std::ostream* progress = nullptr;  // per-iteration lines at verbosity >= 1
};

std::unique_ptr<Learner> make_learner(const ExperimentConfig& config);

// The training loop for one seed: sample a task, train k episodes, fold the
// SRs into the scheduler, log a record. Each call writes the seed's CSV as it
// goes when `csv` is non-null.
SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* csv = nullptr,
                 const RunOptions& options = {});

// Runs every seed (up to options.jobs in parallel) and writes
// `<output_dir>/seed_<seed>.csv` plus `<output_dir>/manifest.json`. The output
// directory is checked for writability before any training starts.
std::vector<SeedRun> run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// CSV layout: seed,iteration,task,sr_new,s_0..s_{N-1},p_0..p_{N-1},general_mean_sr
std::string csv_header(std::size_t n_tasks);
std::string csv_row(const StageRecord& record);
std::vector<StageRecord> read_stage_csv(const std::string& path);
std::string seed_csv_name(std::uint64_t seed);

// Feeds `records` back through a fresh scheduler and returns the score vector
// after each one. Episode lists are rebuilt from SR_new and k.
std::vector<std::vector<double>> replay_scores(const ExperimentConfig& config, const std::vector<StageRecord>& records);

// First 1-based iteration whose general mean SR reaches `target`.
std::optional<std::size_t> stages_to_threshold(const std::vector<StageRecord>& records, double target);

// Fraction of iterations in [first, last] (1-based, inclusive) that chose `task`.
double selection_fraction(const std::vector<StageRecord>& records, std::size_t task, std::size_t first,
                          std::size_t last);

struct MethodSummary {
  std::string label;
  std::vector<double> mean_trajectory;  // general mean SR per iteration
  std::vector<double> std_trajectory;   // sample std across seeds (0 for one seed)
  std::vector<std::optional<std::size_t>> stages_to_target;  // per seed
  // Median with never-reached seeds counted as iterations + 1.
  double median_stages_to_target = 0.0;
  double final_mean = 0.0;
  double final_std = 0.0;
};

MethodSummary summarize(const std::string& label, const std::vector<std::vector<StageRecord>>& per_seed,
                        double target, std::size_t iterations);

struct Comparison {
  std::vector<MethodSummary> methods;
  std::vector<std::vector<SeedRun>> runs;  // parallel to `methods`
};

// Runs each config (they must agree on everything but the scheduler kind)
// into `<out_dir>/<label>/`, then writes summary.csv, trajectory.csv and
// comparison.svg to `out_dir`. Labels default to the scheduler kind.
Comparison compare(const std::vector<ExperimentConfig>& configs, const std::string& out_dir,
                   const RunOptions& options = {});

// Throws ConfigError unless `a` and `b` differ only in scheduler kind,
// window length, name and output_dir.
void require_comparable(const ExperimentConfig& a, const ExperimentConfig& b);

std::string summary_csv(const std::vector<MethodSummary>& methods);
std::string trajectory_csv(const std::vector<MethodSummary>& methods);

// Reads every seed CSV in `run_dir`, sorted by seed.
std::vector<std::vector<StageRecord>> load_run_dir(const std::string& run_dir);

std::string format_float(double value);  // %.9g

}  // namespace sitp
