#include "sitp/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "sitp/config.hpp"
#include "sitp/gridworld.hpp"
#include "sitp/harness.hpp"
#include "sitp/plot.hpp"

namespace sitp {

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutputDirEnv = "SITP_OUTPUT_DIR";

// Shared by `run`, `compare` and `validate-config`: parse, validate and make
// sure every referenced map file loads.
ExperimentConfig load_checked_config(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("config", "config file '" + path + "' does not exist");
  ExperimentConfig config = load_experiment_config(path);
  for (std::size_t i = 0; i < config.tasks.size(); ++i) {
    const auto& env = config.tasks[i].env;
    if (!env) continue;
    if (const auto* file = std::get_if<MapFile>(&env->map_source)) {
      const std::string field = "tasks[" + std::to_string(i) + "].map_file";
      GridMap map;
      try {
        map = load_movingai_map(file->path);
      } catch (const std::exception& e) {
        throw ConfigError(field, e.what());
      }
      if (map.free_count() < 2 * env->n_agents) throw ConfigError(field, "too few free cells for the agent count");
    }
  }
  return config;
}

std::string default_output_dir(const std::string& name) {
  const char* env = std::getenv(kOutputDirEnv);
  const fs::path base = (env && *env) ? fs::path(env) : fs::path("sitp-out");
  return (base / name).string();
}

void apply_seed_overrides(ExperimentConfig& config, const std::string& seeds, const std::optional<std::uint64_t>& one) {
  if (!seeds.empty()) config.seeds = parse_seed_list(seeds);
  if (one) config.seeds = {*one};
}

struct CommonOptions {
  std::string output_dir;
  std::string seeds;
  std::optional<std::uint64_t> seed_override;
  std::size_t jobs = 1;
  int verbosity = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--output-dir,-o", opts.output_dir, "Output directory (overrides the config and $SITP_OUTPUT_DIR)");
  cmd->add_option("--seeds", opts.seeds, "Comma-separated seed list replacing the config's seeds");
  cmd->add_option("--seed-override", opts.seed_override, "Run exactly this one seed");
  cmd->add_option("--jobs,-j", opts.jobs, "Seeds run in parallel")->check(CLI::PositiveNumber);
  cmd->add_flag("--verbose,-v", opts.verbosity, "Print per-iteration progress");
}

int cmd_run(const std::string& config_path, const CommonOptions& opts, std::ostream& out) {
  ExperimentConfig config = load_checked_config(config_path);
  apply_seed_overrides(config, opts.seeds, opts.seed_override);
  if (!opts.output_dir.empty()) {
    config.output_dir = opts.output_dir;
  } else if (config.output_dir.empty()) {
    config.output_dir = default_output_dir(config.name);
  }
  config.validate();
  RunOptions run_options{opts.jobs, opts.verbosity, &out};
  const auto runs = run_experiment(config, run_options);
  for (const auto& run : runs) {
    out << "seed " << run.seed << ": final general mean SR "
        << format_float(run.records.empty() ? 0.0 : run.records.back().general_mean_sr) << " -> "
        << (fs::path(config.output_dir) / seed_csv_name(run.seed)).string() << '\n';
  }
  out << "manifest: " << (fs::path(config.output_dir) / "manifest.json").string() << '\n';
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& config_paths, const std::string& kinds, std::size_t window,
                double target, const CommonOptions& opts, std::ostream& out) {
  std::vector<ExperimentConfig> configs;
  for (const auto& path : config_paths) configs.push_back(load_checked_config(path));
  if (!kinds.empty()) {
    if (configs.size() != 1) throw ConfigError("kinds", "--kinds expands exactly one --config");
    const ExperimentConfig base = configs.front();
    configs.clear();
    std::stringstream in(kinds);
    std::string item;
    while (std::getline(in, item, ',')) {
      ExperimentConfig c = base;
      c.kind.method = parse_scheduler_method(item);
      if (c.kind.method == SchedulerMethod::kTscl && window > 0) c.kind.window_length = window;
      configs.push_back(c);
    }
  }
  for (auto& c : configs) {
    apply_seed_overrides(c, opts.seeds, opts.seed_override);
    if (target > 0.0) c.target_sr = target;
    c.validate();
  }
  std::string out_dir = opts.output_dir;
  if (out_dir.empty()) {
    out_dir = configs.front().output_dir.empty() ? default_output_dir(configs.front().name + "-compare")
                                                 : configs.front().output_dir;
  }
  RunOptions run_options{opts.jobs, opts.verbosity, &out};
  const auto result = compare(configs, out_dir, run_options);
  out << summary_csv(result.methods);
  out << "wrote " << (fs::path(out_dir) / "summary.csv").string() << ", trajectory.csv, comparison.svg\n";
  return kExitOk;
}

int cmd_plot(const std::vector<std::string>& run_dirs, std::vector<std::string> labels, const std::string& out_path,
             const std::string& title, std::ostream& out) {
  if (!labels.empty() && labels.size() != run_dirs.size()) {
    throw ConfigError("label", "give one --label per --run-dir");
  }
  LineChart chart;
  chart.title = title;
  for (std::size_t i = 0; i < run_dirs.size(); ++i) {
    const auto per_seed = load_run_dir(run_dirs[i]);
    std::size_t iterations = 0;
    for (const auto& r : per_seed) iterations = std::max(iterations, r.size());
    const std::string label = labels.empty() ? fs::path(run_dirs[i]).lexically_normal().filename().string() : labels[i];
    const auto summary = summarize(label, per_seed, 1.0, iterations);
    chart.series.push_back({label, summary.mean_trajectory, summary.std_trajectory});
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + out_path + "'");
  file << render_svg(chart);
  if (!file) throw std::runtime_error("write failed for '" + out_path + "'");
  out << "wrote " << out_path << '\n';
  return kExitOk;
}

int cmd_gen_map(int size, double density, std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  if (size < 1) throw ConfigError("size", "must be at least 1");
  if (!(density >= 0.0 && density < 1.0)) throw ConfigError("density", "must lie in [0, 1)");
  Rng rng(seed);
  const GridMap map = random_grid(size, size, density, rng);
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + out_path + "'");
  file << serialize_movingai_map(map);
  if (!file) throw std::runtime_error("write failed for '" + out_path + "'");
  out << "wrote " << out_path << " (" << size << "x" << size << ", " << map.free_count() << " free cells)\n";
  return kExitOk;
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const ExperimentConfig config = load_checked_config(path);
  out << "ok: " << config.name << " (" << config.tasks.size() << " tasks, " << config.scheduler.iterations
      << " iterations, " << config.seeds.size() << " seeds, kind " << to_string(config.kind.method) << ", hash "
      << config_hash(config) << ")\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Curriculum scheduling experiments: success-rate task prioritization, TSCL and uniform baselines"};
  app.name("sitp");
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print the version and exit");

  std::string config_path;
  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "Run one experiment config over its seeds");
  run->add_option("--config,-c", config_path, "Experiment config (JSON)")->required();
  add_common(run, run_opts);

  std::vector<std::string> compare_configs;
  std::string kinds;
  std::size_t window = 0;
  double target = 0.0;
  CommonOptions compare_opts;
  auto* cmp = app.add_subcommand("compare", "Run configs that differ only in scheduler kind and summarize");
  cmp->add_option("--config,-c", compare_configs, "Experiment configs (repeatable)")->required();
  cmp->add_option("--kinds", kinds, "Clone a single config for these kinds, e.g. sitp,tscl,uniform");
  cmp->add_option("--window", window, "TSCL window length when cloning with --kinds");
  cmp->add_option("--target", target, "General mean SR target for the stages-to-target statistic");
  add_common(cmp, compare_opts);

  std::vector<std::string> run_dirs;
  std::vector<std::string> labels;
  std::string plot_out;
  std::string title = "general mean SR";
  auto* plot = app.add_subcommand("plot", "Plot mean +/- std general mean SR from run directories");
  plot->add_option("--run-dir", run_dirs, "Directory holding seed_*.csv (repeatable)")->required();
  plot->add_option("--label", labels, "Series label per run directory");
  plot->add_option("--out", plot_out, "SVG output path")->required();
  plot->add_option("--title", title, "Chart title");

  int size = 8;
  double density = 0.0;
  std::uint64_t map_seed = 0;
  std::string map_out;
  auto* gen = app.add_subcommand("gen-map", "Write a random obstacle map in MovingAI format");
  gen->add_option("--size", size, "Side length")->required();
  gen->add_option("--density", density, "Obstacle density in [0, 1)")->required();
  gen->add_option("--seed", map_seed, "Random seed");
  gen->add_option("--out", map_out, "Output .map path")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-config", "Check a config with the same rules as run");
  validate->add_option("--config,-c", validate_path, "Experiment config (JSON)")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (show_version) {
    out << "sitp " << SITP_VERSION << '\n';
    return kExitOk;
  }
  try {
    if (*run) return cmd_run(config_path, run_opts, out);
    if (*cmp) return cmd_compare(compare_configs, kinds, window, target, compare_opts, out);
    if (*plot) return cmd_plot(run_dirs, labels, plot_out, title, out);
    if (*gen) return cmd_gen_map(size, density, map_seed, map_out, out);
    if (*validate) return cmd_validate(validate_path, out);
    out << app.help();
    return kExitConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

}  // namespace sitp
