#include "sitp/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

namespace sitp {

using nlohmann::json;

namespace {

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

// Typed access to one JSON object that rejects keys outside `allowed`.
class ObjectReader {
 public:
  ObjectReader(const json& node, std::string path, std::initializer_list<const char*> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "must be an object");
    for (const auto& item : node_.items()) {
      bool known = false;
      for (const char* key : allowed) known = known || item.key() == key;
      if (!known) throw ConfigError(join_path(path_, item.key()), "unknown key");
    }
  }

  bool has(const char* key) const { return node_.contains(key); }
  const json& at(const char* key) const {
    if (!has(key)) throw ConfigError(field(key), "missing required key");
    return node_.at(key);
  }
  std::string field(const char* key) const { return join_path(path_, key); }

  double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }
  double number(const char* key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key), "must be a number");
    const double out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(field(key), "must be finite");
    return out;
  }

  std::uint64_t unsigned_int(const char* key, std::uint64_t fallback) const {
    return has(key) ? unsigned_int(key) : fallback;
  }
  std::uint64_t unsigned_int(const char* key) const { return as_unsigned(at(key), field(key)); }

  std::string string(const char* key, const std::string& fallback) const { return has(key) ? string(key) : fallback; }
  std::string string(const char* key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(field(key), "must be a string");
    return v.get<std::string>();
  }

  static std::uint64_t as_unsigned(const json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
      const auto i = v.get<std::int64_t>();
      if (i < 0) throw ConfigError(where, "must be nonnegative");
      return static_cast<std::uint64_t>(i);
    }
    throw ConfigError(where, "must be a nonnegative integer");
  }

 private:
  const json& node_;
  std::string path_;
};

std::vector<double> number_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where, "must be an array of numbers");
  std::vector<double> out;
  for (const auto& item : v) {
    if (!item.is_number()) throw ConfigError(where, "must be an array of numbers");
    out.push_back(item.get<double>());
  }
  return out;
}

SchedulerConfig parse_scheduler(const json& node, SchedulerKind& kind, std::optional<std::size_t>& declared_n) {
  ObjectReader r(node, "scheduler",
                 {"kind", "alpha", "episodes_per_stage", "max_sr", "min_score", "iterations", "window_length",
                  "n_tasks"});
  SchedulerConfig c;
  try {
    kind.method = parse_scheduler_method(r.string("kind", "sitp"));
  } catch (const ConfigError& e) {
    throw e.nested("scheduler.");
  }
  kind.window_length = r.unsigned_int("window_length", 10);
  c.alpha = r.number("alpha", c.alpha);
  c.episodes_per_stage = r.unsigned_int("episodes_per_stage", c.episodes_per_stage);
  c.max_sr = r.number("max_sr", c.max_sr);
  c.min_score = r.number("min_score", c.min_score);
  c.iterations = r.unsigned_int("iterations", c.iterations);
  if (r.has("n_tasks")) declared_n = r.unsigned_int("n_tasks");
  return c;
}

LearnerSpec parse_learner(const json& node) {
  if (!node.is_object()) throw ConfigError("learner", "must be an object");
  const std::string type = node.contains("type") && node.at("type").is_string() ? node.at("type").get<std::string>() : "";
  if (type == "synthetic") {
    ObjectReader r(node, "learner",
                   {"type", "proficiency", "transfer", "learn_rate", "forget_rate", "reward_scale"});
    SyntheticLearnerModel m;
    m.proficiency = number_list(r.at("proficiency"), r.field("proficiency"));
    const json& rows = r.at("transfer");
    if (!rows.is_array()) throw ConfigError(r.field("transfer"), "must be an array of rows");
    for (const auto& row : rows) m.transfer.push_back(number_list(row, r.field("transfer")));
    m.learn_rate = r.number("learn_rate", m.learn_rate);
    m.forget_rate = r.number("forget_rate", m.forget_rate);
    m.reward_scale = r.number("reward_scale", m.reward_scale);
    try {
      m.validate();
    } catch (const ConfigError& e) {
      throw e.nested("learner.");
    }
    return m;
  }
  if (type == "tabular") {
    ObjectReader r(node, "learner",
                   {"type", "epsilon", "epsilon_decay", "epsilon_min", "learning_rate", "discount",
                    "eval_episodes"});
    TabularLearnerSpec spec;
    auto& p = spec.policy;
    p.epsilon = r.number("epsilon", p.epsilon);
    p.epsilon_decay = r.number("epsilon_decay", p.epsilon_decay);
    p.epsilon_min = r.number("epsilon_min", p.epsilon_min);
    p.learning_rate = r.number("learning_rate", p.learning_rate);
    p.discount = r.number("discount", p.discount);
    spec.eval_episodes = r.unsigned_int("eval_episodes", spec.eval_episodes);
    try {
      p.validate();
    } catch (const ConfigError& e) {
      throw e.nested("learner.");
    }
    if (spec.eval_episodes < 1) throw ConfigError("learner.eval_episodes", "must be at least 1");
    return spec;
  }
  throw ConfigError("learner.type", "must be \"synthetic\" or \"tabular\"");
}

TaskDescriptor parse_task(const json& node, std::size_t index, const std::string& base_dir) {
  const std::string path = "tasks[" + std::to_string(index) + "]";
  ObjectReader r(node, path, {"name", "size", "density", "map_file", "n_agents", "max_steps", "obs_radius"});
  TaskDescriptor task;
  task.name = r.string("name", "task" + std::to_string(index));
  const bool procedural = r.has("size") || r.has("density");
  const bool file = r.has("map_file");
  if (procedural && file) throw ConfigError(r.field("map_file"), "give either size/density or map_file, not both");
  if (!procedural && !file) {
    for (const char* key : {"n_agents", "max_steps", "obs_radius"}) {
      if (r.has(key)) throw ConfigError(r.field(key), "only valid for environment tasks");
    }
    return task;
  }
  EnvConfig env;
  int side = 0;
  if (procedural) {
    ProceduralMap proc;
    proc.size = static_cast<int>(r.unsigned_int("size"));
    proc.obstacle_density = r.number("density", 0.0);
    side = proc.size;
    env.map_source = proc;
  } else {
    std::filesystem::path p(r.string("map_file"));
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    env.map_source = MapFile{p.lexically_normal().string()};
    side = 64;  // file maps default to the large-map step limit
  }
  env.n_agents = r.unsigned_int("n_agents", 1);
  env.max_steps = r.unsigned_int("max_steps", default_max_steps(side));
  env.obs_radius = static_cast<int>(r.unsigned_int("obs_radius", 2));
  try {
    env.validate();
  } catch (const ConfigError& e) {
    throw e.nested(path + ".");
  }
  task.env = env;
  return task;
}

SrRule parse_sr_rule(const json& node) {
  ObjectReader r(node, "sr_rule", {"type", "sr_min"});
  const std::string type = r.string("type", "goal_all_agents");
  if (type == "goal_all_agents") {
    if (r.has("sr_min")) throw ConfigError(r.field("sr_min"), "only valid for reward_threshold");
    return SrRule::goal_all_agents();
  }
  if (type == "reward_threshold") return SrRule::reward_threshold(r.number("sr_min"));
  throw ConfigError(r.field("type"), "must be \"goal_all_agents\" or \"reward_threshold\"");
}

}  // namespace

void ExperimentConfig::validate() const {
  scheduler.validate();
  kind.validate();
  if (tasks.empty()) throw ConfigError("tasks", "needs at least one task");
  if (scheduler.n_tasks != tasks.size()) throw ConfigError("scheduler.n_tasks", "must equal the number of tasks");
  if (seeds.empty()) throw ConfigError("seeds", "needs at least one seed");
  if (!(target_sr > 0.0 && target_sr <= 1.0)) throw ConfigError("target_sr", "must lie in (0, 1]");
  if (sr_rule.kind == SrRule::Kind::kRewardThreshold && !std::isfinite(sr_rule.sr_min)) {
    throw ConfigError("sr_rule.sr_min", "must be finite");
  }
  if (const auto* model = std::get_if<SyntheticLearnerModel>(&learner)) {
    model->validate();
    if (model->n_tasks() != tasks.size()) {
      throw ConfigError("learner.proficiency", "must have one entry per task");
    }
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].env) throw ConfigError("tasks[" + std::to_string(i) + "]", "synthetic tasks take no environment");
    }
  } else {
    std::get<TabularLearnerSpec>(learner).policy.validate();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (!tasks[i].env) throw ConfigError("tasks[" + std::to_string(i) + "]", "tabular tasks need an environment");
      tasks[i].env->validate();
    }
  }
}

ExperimentConfig parse_experiment_config(const json& doc, const std::string& base_dir) {
  ObjectReader r(doc, "", {"name", "scheduler", "learner", "tasks", "sr_rule", "seeds", "output_dir", "target_sr"});
  ExperimentConfig c;
  c.name = r.string("name", c.name);

  std::optional<std::size_t> declared_n;
  c.scheduler = parse_scheduler(r.at("scheduler"), c.kind, declared_n);
  c.learner = parse_learner(r.at("learner"));

  const json& tasks = r.at("tasks");
  if (!tasks.is_array()) throw ConfigError("tasks", "must be an array");
  for (std::size_t i = 0; i < tasks.size(); ++i) c.tasks.push_back(parse_task(tasks[i], i, base_dir));
  c.scheduler.n_tasks = declared_n.value_or(c.tasks.size());

  if (r.has("sr_rule")) c.sr_rule = parse_sr_rule(r.at("sr_rule"));

  const json& seeds = r.at("seeds");
  if (!seeds.is_array()) throw ConfigError("seeds", "must be an array of integers");
  for (const auto& s : seeds) c.seeds.push_back(ObjectReader::as_unsigned(s, "seeds"));

  c.output_dir = r.string("output_dir", "");
  c.target_sr = r.number("target_sr", c.target_sr);

  try {
    c.scheduler.validate();
  } catch (const ConfigError& e) {
    throw e.nested("scheduler.");
  }
  try {
    c.kind.validate();
  } catch (const ConfigError& e) {
    throw e.nested("scheduler.");
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", "'" + path + "' is not valid JSON: " + e.what());
  }
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_experiment_config(doc, parent.empty() ? "." : parent.string());
}

json to_json(const ExperimentConfig& c) {
  json doc;
  doc["name"] = c.name;
  doc["scheduler"] = {{"kind", to_string(c.kind.method)},
                      {"alpha", c.scheduler.alpha},
                      {"episodes_per_stage", c.scheduler.episodes_per_stage},
                      {"max_sr", c.scheduler.max_sr},
                      {"min_score", c.scheduler.min_score},
                      {"iterations", c.scheduler.iterations},
                      {"window_length", c.kind.window_length},
                      {"n_tasks", c.scheduler.n_tasks}};
  if (const auto* m = std::get_if<SyntheticLearnerModel>(&c.learner)) {
    doc["learner"] = {{"type", "synthetic"},       {"proficiency", m->proficiency},
                      {"transfer", m->transfer},   {"learn_rate", m->learn_rate},
                      {"forget_rate", m->forget_rate}, {"reward_scale", m->reward_scale}};
  } else {
    const auto& t = std::get<TabularLearnerSpec>(c.learner);
    doc["learner"] = {{"type", "tabular"},
                      {"epsilon", t.policy.epsilon},
                      {"epsilon_decay", t.policy.epsilon_decay},
                      {"epsilon_min", t.policy.epsilon_min},
                      {"learning_rate", t.policy.learning_rate},
                      {"discount", t.policy.discount},
                      {"eval_episodes", t.eval_episodes}};
  }
  json tasks = json::array();
  for (const auto& task : c.tasks) {
    json t = {{"name", task.name}};
    if (task.env) {
      if (const auto* proc = std::get_if<ProceduralMap>(&task.env->map_source)) {
        t["size"] = proc->size;
        t["density"] = proc->obstacle_density;
      } else {
        t["map_file"] = std::get<MapFile>(task.env->map_source).path;
      }
      t["n_agents"] = task.env->n_agents;
      t["max_steps"] = task.env->max_steps;
      t["obs_radius"] = task.env->obs_radius;
    }
    tasks.push_back(t);
  }
  doc["tasks"] = tasks;
  if (c.sr_rule.kind == SrRule::Kind::kGoalAllAgents) {
    doc["sr_rule"] = {{"type", "goal_all_agents"}};
  } else {
    doc["sr_rule"] = {{"type", "reward_threshold"}, {"sr_min", c.sr_rule.sr_min}};
  }
  doc["seeds"] = c.seeds;
  doc["output_dir"] = c.output_dir;
  doc["target_sr"] = c.target_sr;
  return doc;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw ConfigError("seeds", "empty entry in '" + text + "'");
    item = item.substr(first, last - first + 1);
    std::size_t used = 0;
    std::uint64_t value = 0;
    try {
      if (item[0] == '-') throw std::invalid_argument("negative");
      value = std::stoull(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("seeds", "'" + item + "' is not a nonnegative integer");
    }
    if (used != item.size()) throw ConfigError("seeds", "'" + item + "' is not a nonnegative integer");
    seeds.push_back(value);
  }
  if (seeds.empty()) throw ConfigError("seeds", "no seeds given");
  return seeds;
}

}  // namespace sitp
