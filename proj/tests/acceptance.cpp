// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sitp/cli.hpp"
#include "sitp/config.hpp"
#include "sitp/curriculum.hpp"
#include "sitp/gridworld.hpp"
#include "sitp/harness.hpp"
#include "sitp/learners.hpp"
#include "sitp/rng.hpp"
#include "sitp/sr_metrics.hpp"

namespace fs = std::filesystem;
using namespace sitp;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Accumulates failures; the first few are kept for the report line.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Verdict verdict(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, summary + " | " + std::to_string(failures_) + " failed: " + notes_};
  }

 private:
  std::size_t failures_ = 0;
  std::string notes_;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

ExperimentConfig preset(const std::string& name) {
  return load_experiment_config(std::string(SITP_PRESET_DIR) + "/" + name + ".json");
}

std::vector<int> ones_then_zeros(std::size_t k, std::size_t ones) {
  std::vector<int> v(k, 0);
  std::fill(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(ones), 1);
  return v;
}

// Independent softmax oracle: direct exponentials in long double, no max shift.
std::vector<long double> softmax_oracle(const std::vector<double>& s) {
  std::vector<long double> e;
  long double total = 0.0L;
  for (double x : s) {
    e.push_back(std::exp(static_cast<long double>(x)));
    total += e.back();
  }
  for (auto& x : e) x /= total;
  return e;
}

// 1. Softmax, record_stage and TSCL examples; shift invariance.
Verdict exact_math() {
  Checker c;
  const std::vector<std::vector<double>> cases = {{0, 0, 0}, {1, 0}, {0.35, -2.0}, {0, 0}, {3.5, -1.25, 0.5, 0}};
  for (const auto& s : cases) {
    const auto p = softmax_distribution(s).probs;
    const auto q = softmax_oracle(s);
    for (std::size_t i = 0; i < s.size(); ++i) c.expect(close(p[i], static_cast<double>(q[i]), 1e-9), "softmax oracle");
  }
  const auto p10 = softmax_distribution(std::vector<double>{1, 0}).probs;
  c.expect(close(p10[0], 0.731059, 1e-6) && close(p10[1], 0.268941, 1e-6), "softmax [1,0] decimals");
  const auto p2 = softmax_distribution(std::vector<double>{0.35, -2.0}).probs;
  c.expect(close(p2[0], 0.912934, 1e-6) && close(p2[1], 0.087066, 1e-6), "softmax [0.35,-2] decimals");

  for (std::size_t n : {1, 2, 4}) {
    SchedulerConfig cfg;
    cfg.n_tasks = n;
    cfg.episodes_per_stage = 4;
    const Scheduler s(cfg, SchedulerKind::sitp());
    for (double p : s.distribution().probs) c.expect(p == 1.0 / static_cast<double>(n), "uniform init");
  }

  SchedulerConfig cfg;
  cfg.n_tasks = 2;
  cfg.episodes_per_stage = 4;
  Scheduler s(cfg, SchedulerKind::sitp());
  c.expect(s.general_mean_sr() == 0.0, "untrained general mean SR");
  c.expect(close(s.record_stage(0, std::vector<int>{1, 0, 1, 1}), 0.75, 1e-12), "SR_new 0.75");
  c.expect(close(s.tasks()[0].score, 0.375, 1e-9) && s.tasks()[0].sr_old == 0.75, "EMA step to 0.375");
  s.record_stage(0, std::vector<int>{1, 1, 1, 1});
  c.expect(s.tasks()[0].score == -2.0 && s.tasks()[0].sr_old == 1.0, "threshold to min_score");
  s.record_stage(1, std::vector<int>{1, 1, 0, 0});
  c.expect(close(s.general_mean_sr(), 0.75, 1e-12), "general mean SR 0.75");
  const auto q = softmax_oracle(s.scores());
  c.expect(close(s.distribution().probs[0], static_cast<double>(q[0]), 1e-9), "distribution after update");

  // Pure decay: reach S = 0.4 with sr_old = 0.8, then repeat SR 0.8.
  SchedulerConfig five = cfg;
  five.episodes_per_stage = 5;
  Scheduler d(five, SchedulerKind::sitp());
  d.record_stage(0, ones_then_zeros(5, 4));
  c.expect(close(d.tasks()[0].score, 0.4, 1e-9), "setup S = 0.4");
  d.record_stage(0, ones_then_zeros(5, 4));
  c.expect(close(d.tasks()[0].score, 0.2, 1e-9), "pure decay to 0.2");

  c.expect(close(tscl_score(std::vector<double>{0, 0.5, 1.0}, 3), 0.5, 1e-9), "tscl rising");
  c.expect(close(tscl_score(std::vector<double>{0.7, 0.7, 0.7}, 3), 0.0, 1e-9), "tscl flat");
  c.expect(close(tscl_score(std::vector<double>{1.0, 0.5, 0.0}, 3), 0.5, 1e-9), "tscl falling");

  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> scores(1 + rng.uniform_index(12));
    for (auto& x : scores) x = rng.uniform() * 6.0 - 4.0;
    const double shift = rng.uniform() * 20.0 - 10.0;
    std::vector<double> moved = scores;
    for (auto& x : moved) x += shift;
    const auto a = softmax_distribution(scores).probs;
    const auto b = softmax_distribution(moved).probs;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  c.expect(worst <= 1e-12, "shift invariance");
  return c.verdict(fmt("max shift deviation %.2e over 1000 vectors", worst));
}

// 2. A solved task drops below 1/N while every other probability rises.
Verdict threshold_rule() {
  Checker c;
  SchedulerConfig cfg;
  cfg.n_tasks = 3;
  cfg.episodes_per_stage = 32;
  Scheduler s(cfg, SchedulerKind::sitp());
  s.record_stage(0, ones_then_zeros(32, 16));
  s.record_stage(1, ones_then_zeros(32, 8));
  s.record_stage(2, ones_then_zeros(32, 16));
  const auto before = s.distribution().probs;
  s.record_stage(0, ones_then_zeros(32, 32));
  const auto after = s.distribution().probs;
  c.expect(after[0] < 1.0 / 3.0, "solved task below 1/N");
  c.expect(after[0] < before[0], "solved task fell");
  c.expect(after[1] > before[1] && after[2] > before[2], "others rose");
  return c.verdict(fmt("p_A %.4f -> %.4f, p_B %.4f -> %.4f", before[0], after[0], before[1], after[1]));
}

struct MethodRuns {
  std::vector<SeedRun> runs;
  MethodSummary summary;
};

MethodRuns run_kind(ExperimentConfig config, SchedulerKind kind) {
  config.kind = kind;
  MethodRuns m;
  std::vector<std::vector<StageRecord>> per_seed;
  for (auto seed : config.seeds) {
    m.runs.push_back(run_seed(config, seed));
    per_seed.push_back(m.runs.back().records);
  }
  m.summary = summarize(to_string(kind.method), per_seed, config.target_sr, config.scheduler.iterations);
  return m;
}

double stages_or_never(const SeedRun& run, double target, std::size_t iterations) {
  const auto s = stages_to_threshold(run.records, target);
  return s ? static_cast<double>(*s) : static_cast<double>(iterations + 1);
}

// 3. Two-task synthetic preset: hard-task share and median stages to 0.9.
Verdict two_task() {
  Checker c;
  const ExperimentConfig config = preset("two-task-synthetic");
  c.expect(config.seeds.size() == 20, "preset has 20 seeds");
  c.expect(config.scheduler.iterations == 200 && config.scheduler.episodes_per_stage == 32, "M = 200, k = 32");
  const MethodRuns sitp = run_kind(config, SchedulerKind::sitp());
  const MethodRuns uniform = run_kind(config, SchedulerKind::uniform());
  const std::size_t m = config.scheduler.iterations;
  std::size_t hard_majority = 0;
  for (const auto& run : sitp.runs) {
    if (selection_fraction(run.records, 1, m - m / 4 + 1, m) > 0.5) ++hard_majority;
  }
  c.expect(hard_majority >= 18, "hard-task share > 0.5 in >= 18 seeds");
  c.expect(sitp.summary.median_stages_to_target < uniform.summary.median_stages_to_target, "SITP median < UNIFORM");
  return c.verdict(fmt("hard share > 0.5 in %.0f/20 seeds; median stages to 0.9: SITP %.1f, UNIFORM %.1f",
                       static_cast<double>(hard_majority), sitp.summary.median_stages_to_target,
                       uniform.summary.median_stages_to_target));
}

// 4. Ten-task preset: final general SR and the hardest task.
Verdict ten_task() {
  Checker c;
  const ExperimentConfig config = preset("ten-task-synthetic");
  c.expect(config.seeds.size() == 10, "preset has 10 seeds");
  const MethodRuns sitp = run_kind(config, SchedulerKind::sitp());
  const MethodRuns uniform = run_kind(config, SchedulerKind::uniform());
  auto mean_final = [](const std::vector<SeedRun>& runs) {
    double total = 0.0;
    for (const auto& r : runs) {
      double sum = 0.0;
      for (double x : r.final_task_sr) sum += x;
      total += sum / static_cast<double>(r.final_task_sr.size());
    }
    return total / static_cast<double>(runs.size());
  };
  const double gs = mean_final(sitp.runs);
  const double gu = mean_final(uniform.runs);
  std::size_t wins = 0;
  for (std::size_t i = 0; i < sitp.runs.size(); ++i) {
    if (sitp.runs[i].final_task_sr[kTenTaskHardest] > uniform.runs[i].final_task_sr[kTenTaskHardest]) ++wins;
  }
  c.expect(gs >= gu, "SITP final general SR >= UNIFORM");
  c.expect(wins >= 8, "hardest task better in >= 8/10 seeds");
  return c.verdict(fmt("final general SR SITP %.4f vs UNIFORM %.4f; hardest task better in %.0f/10 seeds", gs, gu,
                       static_cast<double>(wins)));
}

// 5. TSCL beats UNIFORM on median stages; SITP is no worse than TSCL per seed.
Verdict tscl_comparator() {
  Checker c;
  const ExperimentConfig config = preset("two-task-synthetic");
  const MethodRuns sitp = run_kind(config, SchedulerKind::sitp());
  const MethodRuns tscl = run_kind(config, SchedulerKind::tscl(config.kind.window_length));
  const MethodRuns uniform = run_kind(config, SchedulerKind::uniform());
  std::size_t not_worse = 0;
  for (std::size_t i = 0; i < sitp.runs.size(); ++i) {
    const std::size_t m = config.scheduler.iterations;
    if (stages_or_never(sitp.runs[i], config.target_sr, m) <= stages_or_never(tscl.runs[i], config.target_sr, m)) {
      ++not_worse;
    }
  }
  c.expect(tscl.summary.median_stages_to_target < uniform.summary.median_stages_to_target, "TSCL median < UNIFORM");
  c.expect(not_worse >= 12, "SITP <= TSCL in >= 12/20 seeds");
  return c.verdict(fmt("median stages: TSCL %.1f, UNIFORM %.1f; SITP <= TSCL in %.0f/20 seeds",
                       tscl.summary.median_stages_to_target, uniform.summary.median_stages_to_target,
                       static_cast<double>(not_worse)));
}

// 6. Single-agent tabular Q-learning on the 8x8, 5% preset.
Verdict tabular_demo() {
  Checker c;
  const ExperimentConfig config = preset("single-agent-tabular-8x8");
  const auto& spec = std::get<TabularLearnerSpec>(config.learner);
  const EnvConfig& env = *config.tasks.at(0).env;
  c.expect(env.n_agents == 1, "single agent");
  c.expect(std::get<ProceduralMap>(env.map_source).size == 8, "8x8 map");
  c.expect(std::get<ProceduralMap>(env.map_source).obstacle_density == 0.05, "density 0.05");
  constexpr std::size_t kBudget = 5000;
  constexpr std::size_t kWindow = 100;
  std::size_t reached = 0;
  std::size_t latest = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TabularPolicy policy(spec.policy);
    Rng rng = Rng::derive(seed, 2);
    std::vector<int> srs;
    int window_sum = 0;
    std::size_t first = 0;
    for (std::size_t ep = 1; ep <= kBudget && first == 0; ++ep) {
      srs.push_back(episode_sr(run_tabular_episode(policy, env, rng, true), config.sr_rule));
      window_sum += srs.back();
      if (srs.size() > kWindow) window_sum -= srs[srs.size() - kWindow - 1];
      if (srs.size() >= kWindow && window_sum >= 80) first = ep;
    }
    if (first != 0) ++reached;
    latest = std::max(latest, first);
    c.expect(first != 0, "seed " + std::to_string(seed) + " never reached 0.8");
  }
  return c.verdict(fmt("trailing-100 SR >= 0.8 within 5000 episodes on %.0f/10 seeds (latest at episode %.0f)",
                       static_cast<double>(reached), static_cast<double>(latest)));
}

// 7. Random-action rollouts with 8 agents at density 0.3.
Verdict env_invariants() {
  Checker c;
  EnvConfig config;
  config.map_source = ProceduralMap{8, 0.3};
  config.n_agents = 8;
  config.max_steps = 64;
  std::size_t steps = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    Rng layout_rng(seed);
    const Layout layout = generate_map(config, layout_rng);
    std::set<std::size_t> endpoints;
    for (const auto& a : layout.agents) {
      const auto dist = bfs_distances(layout.map, a.position);
      c.expect(layout.map.is_free(a.position) && layout.map.is_free(a.goal), "start/goal on obstacle");
      c.expect(dist[layout.map.index(a.goal)] > 0, "goal unreachable");
      endpoints.insert(layout.map.index(a.position));
      endpoints.insert(layout.map.index(a.goal));
    }
    c.expect(endpoints.size() == 2 * layout.agents.size(), "starts and goals not distinct");
    MapfEnv env(config, layout);
    Rng act_rng = Rng::derive(seed, 7);
    while (!env.done()) {
      std::vector<Action> actions(env.n_agents());
      for (auto& a : actions) a = static_cast<Action>(act_rng.uniform_index(kNumActions));
      const auto before = env.agents();
      env.step(actions);
      ++steps;
      const auto& after = env.agents();
      const auto outcome = env.outcome();
      std::set<std::size_t> occupied;
      std::size_t active = 0;
      for (std::size_t i = 0; i < after.size(); ++i) {
        const int moved = std::abs(after[i].position.row - before[i].position.row) +
                          std::abs(after[i].position.col - before[i].position.col);
        c.expect(moved <= 1, "teleport");
        c.expect(before[i].active || after[i].position == before[i].position, "inactive agent moved");
        if (!after[i].active) {
          c.expect(outcome.per_agent_reached[i] && after[i].position == after[i].goal, "inactive off goal");
          continue;
        }
        ++active;
        c.expect(env.map().is_free(after[i].position), "agent on obstacle");
        c.expect(occupied.insert(env.map().index(after[i].position)).second, "shared cell");
      }
      c.expect(after.size() == 8 && active == env.active_count(), "agent conservation");
    }
  }
  return c.verdict(fmt("1000 rollouts, %.0f steps checked", static_cast<double>(steps)));
}

// 8. MovingAI round trip and malformed inputs.
Verdict parser_suite() {
  Checker c;
  Rng rng(88);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 1 + static_cast<int>(rng.uniform_index(40));
    const int w = 1 + static_cast<int>(rng.uniform_index(40));
    const GridMap map = random_grid(h, w, rng.uniform() * 0.9, rng);
    const std::string text = serialize_movingai_map(map);
    const GridMap back = parse_movingai_map(text);
    c.expect(back == map && serialize_movingai_map(back) == text, "round trip");
  }
  const std::vector<std::pair<std::string, std::string>> malformed = {
      {"type octile\nheight 3\nwidth 2\nmap\n..\n..\n", "row count mismatch at line 6"},
      {"type octile\nwidth 2\nmap\n..\n", "missing header field 'height' at line 3"},
      {"type octile\nheight 2\nwidth 2\nmap\n..\n.x\n", "unknown character 'x' at line 6"},
  };
  for (const auto& [text, message] : malformed) {
    try {
      parse_movingai_map(text);
      c.expect(false, "accepted: " + message);
    } catch (const MapParseError& e) {
      c.expect(std::string(e.what()).find(message) == 0 && e.line() > 0, "message: " + std::string(e.what()));
    }
  }
  return c.verdict("100 round trips, 3 malformed inputs rejected with line numbers");
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 9. Every preset run twice through the CLI; CSVs and plots must match byte for byte.
Verdict determinism() {
  Checker c;
  const fs::path root = fs::path(SITP_TEST_TMP) / "determinism";
  fs::remove_all(root);
  std::vector<fs::path> presets;
  for (const auto& e : fs::directory_iterator(SITP_PRESET_DIR)) {
    if (e.path().extension() == ".json") presets.push_back(e.path());
  }
  std::sort(presets.begin(), presets.end());
  std::size_t files = 0;
  for (const auto& p : presets) {
    const std::string name = p.stem().string();
    for (const char* pass : {"a", "b"}) {
      const fs::path dir = root / pass / name;
      std::ostringstream out, err;
      const int run = run_cli({"run", "-c", p.string(), "-o", dir.string()}, out, err);
      const int plot =
          run_cli({"plot", "--run-dir", dir.string(), "--label", name, "--out", (dir / "plot.svg").string()}, out, err);
      c.expect(run == kExitOk && plot == kExitOk, name + ": " + err.str());
    }
    for (const auto& e : fs::directory_iterator(root / "a" / name)) {
      const std::string ext = e.path().extension().string();
      if (ext != ".csv" && ext != ".svg") continue;
      const fs::path twin = root / "b" / name / e.path().filename();
      c.expect(fs::exists(twin) && slurp(e.path()) == slurp(twin), name + "/" + e.path().filename().string());
      ++files;
    }
  }
  return c.verdict(fmt("%.0f presets, %.0f CSV/SVG files identical across two runs",
                       static_cast<double>(presets.size()), static_cast<double>(files)));
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0 means no runtime limit
  std::function<Verdict()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exact math", 1.0, exact_math},
      {2, "threshold rule", 0.0, threshold_rule},
      {3, "two-task curriculum", 30.0, two_task},
      {4, "ten-task experiment", 120.0, ten_task},
      {5, "TSCL comparator", 60.0, tscl_comparator},
      {6, "tabular demo", 120.0, tabular_demo},
      {7, "environment invariants", 30.0, env_invariants},
      {8, "map parser", 1.0, parser_suite},
      {9, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criterion.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criterion.limit_seconds > 0.0 && seconds >= criterion.limit_seconds) {
      v.pass = false;
      v.detail += fmt(" | over the %.0f s limit", criterion.limit_seconds);
    }
    if (!v.pass) ++failed;
    std::printf("%s criterion %d (%s): %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", criterion.id, criterion.name,
                v.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
