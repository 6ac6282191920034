#include "sitp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sitp/plot.hpp"
#include "sitp/sr_metrics.hpp"

namespace sitp {

namespace fs = std::filesystem;

namespace {

std::mutex progress_mutex;

// Stream ids for Rng::derive; one independent stream per consumer.
constexpr std::uint64_t kSamplingStream = 1;
constexpr std::uint64_t kTrainingStream = 2;
constexpr std::uint64_t kEvaluationStream = 3;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream in(line);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

}  // namespace

std::string format_float(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

std::unique_ptr<Learner> make_learner(const ExperimentConfig& config) {
  if (const auto* model = std::get_if<SyntheticLearnerModel>(&config.learner)) {
    return std::make_unique<SyntheticLearner>(*model);
  }
  const auto& spec = std::get<TabularLearnerSpec>(config.learner);
  std::vector<EnvConfig> envs;
  for (const auto& task : config.tasks) envs.push_back(*task.env);
  return std::make_unique<TabularLearner>(spec.policy, std::move(envs), spec.eval_episodes);
}

std::string csv_header(std::size_t n_tasks) {
  std::string out = "seed,iteration,task,sr_new";
  for (std::size_t i = 0; i < n_tasks; ++i) out += ",s_" + std::to_string(i);
  for (std::size_t i = 0; i < n_tasks; ++i) out += ",p_" + std::to_string(i);
  out += ",general_mean_sr";
  return out;
}

std::string csv_row(const StageRecord& r) {
  std::string out = std::to_string(r.seed) + "," + std::to_string(r.iteration) + "," + std::to_string(r.task) + "," +
                    format_float(r.sr_new);
  for (double s : r.scores) out += "," + format_float(s);
  for (double p : r.probs) out += "," + format_float(p);
  out += "," + format_float(r.general_mean_sr);
  return out;
}

std::string seed_csv_name(std::uint64_t seed) { return "seed_" + std::to_string(seed) + ".csv"; }

std::vector<StageRecord> read_stage_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("'" + path + "' is empty");
  const auto header = split(line, ',');
  const std::size_t n = static_cast<std::size_t>(
      std::count_if(header.begin(), header.end(), [](const std::string& h) { return h.rfind("s_", 0) == 0; }));
  if (header != split(csv_header(n), ',')) throw std::runtime_error("'" + path + "' has an unexpected header");

  std::vector<StageRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 5 + 2 * n) {
      throw std::runtime_error("'" + path + "' line " + std::to_string(line_no) + ": wrong column count");
    }
    StageRecord r;
    r.seed = std::stoull(cells[0]);
    r.iteration = std::stoul(cells[1]);
    r.task = std::stoul(cells[2]);
    r.sr_new = std::stod(cells[3]);
    for (std::size_t i = 0; i < n; ++i) r.scores.push_back(std::stod(cells[4 + i]));
    for (std::size_t i = 0; i < n; ++i) r.probs.push_back(std::stod(cells[4 + n + i]));
    r.general_mean_sr = std::stod(cells[4 + 2 * n]);
    records.push_back(std::move(r));
  }
  return records;
}

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed, std::ostream* csv, const RunOptions& options) {
  Scheduler scheduler(config.scheduler, config.kind);
  const auto learner = make_learner(config);
  Rng sampling = Rng::derive(seed, kSamplingStream);
  Rng training = Rng::derive(seed, kTrainingStream);
  Rng evaluation = Rng::derive(seed, kEvaluationStream);

  SeedRun run;
  run.seed = seed;
  run.records.reserve(config.scheduler.iterations);
  if (csv) *csv << csv_header(config.tasks.size()) << '\n';

  for (std::size_t t = 1; t <= config.scheduler.iterations; ++t) {
    const std::size_t task = scheduler.sample_task(sampling);
    const auto outcomes = learner->train_stage(task, config.scheduler.episodes_per_stage, training);
    const auto srs = episode_srs(outcomes, config.sr_rule);
    StageRecord rec;
    rec.seed = seed;
    rec.iteration = t;
    rec.task = task;
    rec.sr_new = scheduler.record_stage(task, srs);
    rec.scores = scheduler.scores();
    rec.probs = scheduler.distribution().probs;
    rec.general_mean_sr = scheduler.general_mean_sr();
    if (csv) *csv << csv_row(rec) << '\n';
    if (options.verbosity >= 1 && options.progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      *options.progress << "seed " << seed << " iteration " << t << " task " << task << " (" << config.tasks[task].name
                        << ") sr_new " << format_float(rec.sr_new) << '\n';
    }
    run.records.push_back(std::move(rec));
  }
  for (std::size_t task = 0; task < config.tasks.size(); ++task) {
    run.final_task_sr.push_back(learner->evaluate(task, config.sr_rule, evaluation));
  }
  return run;
}

std::vector<SeedRun> run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  if (config.output_dir.empty()) throw ConfigError("output_dir", "no output directory given");
  const fs::path out_dir(config.output_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out_dir.string() + "': " + ec.message());

  nlohmann::json manifest;
  manifest["artifact"] = "sitp";
  manifest["version"] = SITP_VERSION;
  manifest["config_hash"] = config_hash(config);
  manifest["config"] = to_json(config);
  std::vector<std::string> files;
  for (auto seed : config.seeds) files.push_back(seed_csv_name(seed));
  manifest["files"] = files;
  // Writing the manifest first doubles as the writability check.
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  std::vector<SeedRun> runs(config.seeds.size());
  std::vector<std::exception_ptr> errors(config.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
      try {
        const fs::path path = out_dir / seed_csv_name(config.seeds[i]);
        std::ofstream csv(path, std::ios::binary);
        if (!csv) throw std::runtime_error("cannot write '" + path.string() + "'");
        runs[i] = run_seed(config, config.seeds[i], &csv, options);
        csv.flush();
        if (!csv) throw std::runtime_error("write failed for '" + path.string() + "'");
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, config.seeds.size());
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return runs;
}

std::vector<std::vector<double>> replay_scores(const ExperimentConfig& config,
                                               const std::vector<StageRecord>& records) {
  Scheduler scheduler(config.scheduler, config.kind);
  const std::size_t k = config.scheduler.episodes_per_stage;
  std::vector<std::vector<double>> out;
  for (const auto& rec : records) {
    const auto ones = static_cast<std::size_t>(std::lround(rec.sr_new * static_cast<double>(k)));
    std::vector<int> episodes(k, 0);
    std::fill(episodes.begin(), episodes.begin() + static_cast<std::ptrdiff_t>(std::min(ones, k)), 1);
    scheduler.record_stage(rec.task, episodes);
    out.push_back(scheduler.scores());
  }
  return out;
}

std::optional<std::size_t> stages_to_threshold(const std::vector<StageRecord>& records, double target) {
  for (const auto& rec : records) {
    if (rec.general_mean_sr >= target) return rec.iteration;
  }
  return std::nullopt;
}

double selection_fraction(const std::vector<StageRecord>& records, std::size_t task, std::size_t first,
                          std::size_t last) {
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const auto& rec : records) {
    if (rec.iteration < first || rec.iteration > last) continue;
    ++total;
    if (rec.task == task) ++hits;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

MethodSummary summarize(const std::string& label, const std::vector<std::vector<StageRecord>>& per_seed,
                        double target, std::size_t iterations) {
  MethodSummary s;
  s.label = label;
  std::size_t length = iterations;
  for (const auto& records : per_seed) length = std::min(length, records.size());
  for (std::size_t t = 0; t < length; ++t) {
    std::vector<double> column;
    for (const auto& records : per_seed) column.push_back(records[t].general_mean_sr);
    const auto [mean, sd] = mean_and_std(column);
    s.mean_trajectory.push_back(mean);
    s.std_trajectory.push_back(sd);
  }
  std::vector<double> stages;
  std::vector<double> finals;
  for (const auto& records : per_seed) {
    const auto reached = stages_to_threshold(records, target);
    s.stages_to_target.push_back(reached);
    stages.push_back(static_cast<double>(reached.value_or(iterations + 1)));
    if (!records.empty()) finals.push_back(records.back().general_mean_sr);
  }
  s.median_stages_to_target = median(stages);
  std::tie(s.final_mean, s.final_std) = mean_and_std(finals);
  return s;
}

void require_comparable(const ExperimentConfig& a, const ExperimentConfig& b) {
  auto strip = [](const ExperimentConfig& c) {
    auto doc = to_json(c);
    doc.erase("name");
    doc.erase("output_dir");
    doc["scheduler"].erase("kind");
    doc["scheduler"].erase("window_length");
    return doc;
  };
  const auto da = strip(a);
  const auto db = strip(b);
  for (const char* key : {"tasks", "learner", "sr_rule", "seeds", "scheduler", "target_sr"}) {
    if (da.at(key) != db.at(key)) throw ConfigError(key, "compared configs must agree on everything but the scheduler kind");
  }
}

std::string summary_csv(const std::vector<MethodSummary>& methods) {
  std::string out = "method,n_seeds,final_mean,final_std,median_stages_to_target,seeds_reaching_target\n";
  for (const auto& m : methods) {
    const auto reached = std::count_if(m.stages_to_target.begin(), m.stages_to_target.end(),
                                       [](const auto& s) { return s.has_value(); });
    out += m.label + "," + std::to_string(m.stages_to_target.size()) + "," + format_float(m.final_mean) + "," +
           format_float(m.final_std) + "," + format_float(m.median_stages_to_target) + "," + std::to_string(reached) +
           "\n";
  }
  return out;
}

std::string trajectory_csv(const std::vector<MethodSummary>& methods) {
  std::string out = "iteration";
  std::size_t length = 0;
  for (const auto& m : methods) {
    out += "," + m.label + "_mean," + m.label + "_std";
    length = std::max(length, m.mean_trajectory.size());
  }
  out += "\n";
  for (std::size_t t = 0; t < length; ++t) {
    out += std::to_string(t + 1);
    for (const auto& m : methods) {
      if (t < m.mean_trajectory.size()) {
        out += "," + format_float(m.mean_trajectory[t]) + "," + format_float(m.std_trajectory[t]);
      } else {
        out += ",,";
      }
    }
    out += "\n";
  }
  return out;
}

Comparison compare(const std::vector<ExperimentConfig>& configs, const std::string& out_dir,
                   const RunOptions& options) {
  if (configs.empty()) throw ConfigError("config", "nothing to compare");
  for (const auto& c : configs) {
    c.validate();
    require_comparable(configs.front(), c);
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "': " + ec.message());

  Comparison result;
  LineChart chart;
  chart.title = configs.front().name + ": general mean SR (mean +/- std over " +
                std::to_string(configs.front().seeds.size()) + " seeds)";
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::string label = to_string(configs[i].kind.method);
    for (std::size_t j = 0; j < i; ++j) {
      if (configs[j].kind.method == configs[i].kind.method) {
        label += "_" + std::to_string(i);
        break;
      }
    }
    ExperimentConfig run_config = configs[i];
    run_config.output_dir = (fs::path(out_dir) / label).string();
    auto runs = run_experiment(run_config, options);
    std::vector<std::vector<StageRecord>> per_seed;
    for (const auto& r : runs) per_seed.push_back(r.records);
    result.methods.push_back(summarize(label, per_seed, run_config.target_sr, run_config.scheduler.iterations));
    result.runs.push_back(std::move(runs));
    const auto& m = result.methods.back();
    chart.series.push_back({m.label, m.mean_trajectory, m.std_trajectory});
  }
  write_file(fs::path(out_dir) / "summary.csv", summary_csv(result.methods));
  write_file(fs::path(out_dir) / "trajectory.csv", trajectory_csv(result.methods));
  write_file(fs::path(out_dir) / "comparison.svg", render_svg(chart));
  return result;
}

std::vector<std::vector<StageRecord>> load_run_dir(const std::string& run_dir) {
  std::vector<std::pair<std::uint64_t, std::string>> files;
  if (!fs::is_directory(run_dir)) throw std::runtime_error("'" + run_dir + "' is not a directory");
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("seed_", 0) != 0 || entry.path().extension() != ".csv") continue;
    files.emplace_back(std::stoull(name.substr(5)), entry.path().string());
  }
  if (files.empty()) throw std::runtime_error("no seed CSVs in '" + run_dir + "'");
  std::sort(files.begin(), files.end());
  std::vector<std::vector<StageRecord>> out;
  for (const auto& [seed, path] : files) out.push_back(read_stage_csv(path));
  return out;
}

}  // namespace sitp
