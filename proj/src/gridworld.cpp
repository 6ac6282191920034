#include "sitp/gridworld.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <queue>
#include <sstream>

namespace sitp {

GridMap::GridMap(int height, int width, std::string name)
    : height_(height), width_(width), name_(std::move(name)) {
  if (height <= 0 || width <= 0) throw std::invalid_argument("GridMap: dimensions must be positive");
  cells_.assign(static_cast<std::size_t>(height) * width, 0);
}

void GridMap::set_obstacle(Cell c, bool blocked) {
  if (!in_bounds(c)) throw std::out_of_range("GridMap::set_obstacle: cell out of bounds");
  cells_[index(c)] = blocked ? 1 : 0;
}

std::size_t GridMap::free_count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 0));
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    // Drops '\r' from CRLF as well as trailing blanks.
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    begin = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

int parse_dimension(std::string_view value, std::size_t line_no, const char* field) {
  int out = 0;
  std::istringstream in{std::string(value)};
  if (!(in >> out) || out <= 0 || !(in >> std::ws).eof()) {
    throw MapParseError(line_no, std::string("invalid ") + field + " value '" + std::string(value) + "'");
  }
  return out;
}

}  // namespace

GridMap parse_movingai_map(std::string_view text) {
  const auto lines = split_lines(text);
  std::optional<int> height;
  std::optional<int> width;
  bool has_type = false;
  std::size_t map_line = 0;  // 1-based line number of the `map` keyword

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = lines[i];
    const std::size_t space = line.find(' ');
    const std::string_view key = line.substr(0, space);
    const std::string_view value =
        space == std::string_view::npos ? std::string_view{} : line.substr(line.find_first_not_of(' ', space));
    if (key == "map") {
      map_line = line_no;
      break;
    }
    if (key == "type") {
      has_type = true;
    } else if (key == "height") {
      height = parse_dimension(value, line_no, "height");
    } else if (key == "width") {
      width = parse_dimension(value, line_no, "width");
    } else {
      throw MapParseError(line_no, "unexpected header line '" + std::string(line) + "'");
    }
  }
  const std::size_t header_end = map_line == 0 ? lines.size() + 1 : map_line;
  if (!has_type) throw MapParseError(header_end, "missing header field 'type'");
  if (!height) throw MapParseError(header_end, "missing header field 'height'");
  if (!width) throw MapParseError(header_end, "missing header field 'width'");
  if (map_line == 0) throw MapParseError(header_end, "missing header field 'map'");

  GridMap grid(*height, *width);
  const std::size_t body_rows = lines.size() - map_line;
  if (body_rows != static_cast<std::size_t>(*height)) {
    const std::size_t at = body_rows < static_cast<std::size_t>(*height)
                               ? lines.size()
                               : map_line + static_cast<std::size_t>(*height) + 1;
    throw MapParseError(at, "row count mismatch",
                        " (expected " + std::to_string(*height) + " rows, found " + std::to_string(body_rows) + ")");
  }
  for (int r = 0; r < *height; ++r) {
    const std::size_t line_no = map_line + 1 + static_cast<std::size_t>(r);
    const std::string_view row = lines[line_no - 1];
    if (row.size() != static_cast<std::size_t>(*width)) {
      throw MapParseError(line_no, "width mismatch",
                          " (expected " + std::to_string(*width) + " columns, found " + std::to_string(row.size()) + ")");
    }
    for (int c = 0; c < *width; ++c) {
      switch (row[static_cast<std::size_t>(c)]) {
        case '.':
        case 'G':
          break;
        case '@':
        case 'O':
        case 'T':
        case 'W':
          grid.set_obstacle({r, c}, true);
          break;
        default:
          throw MapParseError(line_no, "unknown character '" + std::string(1, row[static_cast<std::size_t>(c)]) + "'",
                              ", column " + std::to_string(c + 1));
      }
    }
  }
  return grid;
}

GridMap load_movingai_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open map file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  GridMap map = parse_movingai_map(buffer.str());
  const auto slash = path.find_last_of('/');
  map.set_name(slash == std::string::npos ? path : path.substr(slash + 1));
  return map;
}

std::string serialize_movingai_map(const GridMap& map) {
  std::string out = "type octile\nheight " + std::to_string(map.height()) + "\nwidth " +
                    std::to_string(map.width()) + "\nmap\n";
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) out.push_back(map.is_obstacle({r, c}) ? '@' : '.');
    out.push_back('\n');
  }
  return out;
}

GridMap random_grid(int height, int width, double density, Rng& rng) {
  GridMap map(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      if (rng.uniform() < density) map.set_obstacle({r, c}, true);
    }
  }
  return map;
}

std::vector<int> bfs_distances(const GridMap& map, Cell from) {
  std::vector<int> dist(static_cast<std::size_t>(map.height()) * map.width(), -1);
  if (map.is_obstacle(from)) return dist;
  std::queue<Cell> frontier;
  dist[map.index(from)] = 0;
  frontier.push(from);
  static constexpr Action kMoves[] = {Action::kUp, Action::kDown, Action::kLeft, Action::kRight};
  while (!frontier.empty()) {
    const Cell cur = frontier.front();
    frontier.pop();
    for (Action a : kMoves) {
      const Cell next = apply_action(cur, a);
      if (map.is_free(next) && dist[map.index(next)] < 0) {
        dist[map.index(next)] = dist[map.index(cur)] + 1;
        frontier.push(next);
      }
    }
  }
  return dist;
}

void EnvConfig::validate() const {
  if (n_agents < 1) throw ConfigError("n_agents", "must be at least 1");
  if (max_steps < 1) throw ConfigError("max_steps", "must be at least 1");
  if (obs_radius < 1) throw ConfigError("obs_radius", "must be at least 1");
  if (const auto* proc = std::get_if<ProceduralMap>(&map_source)) {
    if (proc->size < 1) throw ConfigError("size", "must be at least 1");
    if (!(proc->obstacle_density >= 0.0 && proc->obstacle_density < 1.0)) {
      throw ConfigError("density", "must lie in [0, 1)");
    }
    if (2 * n_agents > static_cast<std::size_t>(proc->size) * static_cast<std::size_t>(proc->size)) {
      throw ConfigError("n_agents", "needs at least two cells per agent");
    }
  } else if (std::get<MapFile>(map_source).path.empty()) {
    throw ConfigError("file", "map path is empty");
  }
}

std::size_t default_max_steps(int map_size) {
  return static_cast<std::size_t>(std::max(64, 4 * map_size));
}

Cell apply_action(Cell c, Action a) {
  switch (a) {
    case Action::kStay: return c;
    case Action::kUp: return {c.row - 1, c.col};
    case Action::kDown: return {c.row + 1, c.col};
    case Action::kLeft: return {c.row, c.col - 1};
    case Action::kRight: return {c.row, c.col + 1};
  }
  throw std::invalid_argument("apply_action: invalid action");
}

std::uint64_t Observation::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(&radius, sizeof(radius));
  mix(obstacles.data(), obstacles.size());
  mix(agents.data(), agents.size());
  mix(goal.data(), goal.size());
  mix(goal_offset.data(), sizeof(goal_offset));
  return h;
}

namespace {

constexpr int kMaxPlacementAttempts = 100;
constexpr int kMaxLayoutAttempts = 100;

std::optional<std::vector<AgentState>> try_place(const GridMap& map, std::size_t n_agents, Rng& rng) {
  std::vector<Cell> free_cells;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (map.is_free({r, c})) free_cells.push_back({r, c});
    }
  }
  if (free_cells.size() < 2 * n_agents) return std::nullopt;

  // Partial Fisher-Yates: the first n_agents entries become the starts.
  for (std::size_t i = 0; i < n_agents; ++i) {
    const std::size_t j = i + rng.uniform_index(free_cells.size() - i);
    std::swap(free_cells[i], free_cells[j]);
  }
  std::vector<std::uint8_t> taken(static_cast<std::size_t>(map.height()) * map.width(), 0);
  std::vector<AgentState> agents(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i) {
    agents[i].position = free_cells[i];
    taken[map.index(free_cells[i])] = 1;
  }
  for (std::size_t i = 0; i < n_agents; ++i) {
    const auto dist = bfs_distances(map, agents[i].position);
    std::vector<Cell> candidates;
    for (int r = 0; r < map.height(); ++r) {
      for (int c = 0; c < map.width(); ++c) {
        const std::size_t idx = map.index({r, c});
        if (dist[idx] > 0 && !taken[idx]) candidates.push_back({r, c});
      }
    }
    if (candidates.empty()) return std::nullopt;
    agents[i].goal = candidates[rng.uniform_index(candidates.size())];
    taken[map.index(agents[i].goal)] = 1;
  }
  return agents;
}

}  // namespace

Layout place_agents(const GridMap& map, std::size_t n_agents, Rng& rng) {
  for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
    if (auto agents = try_place(map, n_agents, rng)) return Layout{map, std::move(*agents)};
  }
  throw MapGenerationError("could not place " + std::to_string(n_agents) + " agents with reachable goals on map '" +
                           map.name() + "' after " + std::to_string(kMaxPlacementAttempts) + " attempts");
}

Layout generate_map(const EnvConfig& config, Rng& rng, const GridMap* preloaded) {
  config.validate();
  std::optional<GridMap> file_map;
  if (const auto* file = std::get_if<MapFile>(&config.map_source)) {
    file_map = preloaded ? *preloaded : load_movingai_map(file->path);
  }
  for (int layout = 0; layout < kMaxLayoutAttempts; ++layout) {
    GridMap map;
    if (file_map) {
      map = *file_map;
    } else {
      const auto& proc = std::get<ProceduralMap>(config.map_source);
      map = random_grid(proc.size, proc.size, proc.obstacle_density, rng);
      map.set_name("random-" + std::to_string(proc.size) + "-" + std::to_string(proc.size));
    }
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      if (auto agents = try_place(map, config.n_agents, rng)) return Layout{std::move(map), std::move(*agents)};
    }
  }
  throw MapGenerationError("no valid layout for " + std::to_string(config.n_agents) + " agents after " +
                           std::to_string(kMaxLayoutAttempts) + " obstacle layouts x " +
                           std::to_string(kMaxPlacementAttempts) +
                           " placements; lower the obstacle density or agent count");
}

MapfEnv::MapfEnv(EnvConfig config, Layout layout, RewardModel rewards)
    : config_(std::move(config)),
      map_(std::move(layout.map)),
      rewards_(rewards),
      agents_(std::move(layout.agents)),
      reached_(agents_.size(), false),
      occupancy_(static_cast<std::size_t>(map_.height()) * map_.width(), -1) {
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    auto& a = agents_[i];
    if (map_.is_obstacle(a.position)) throw std::invalid_argument("MapfEnv: agent starts on an obstacle");
    if (map_.is_obstacle(a.goal)) throw std::invalid_argument("MapfEnv: goal on an obstacle");
    if (a.position == a.goal) {
      a.active = false;
      reached_[i] = true;
      continue;
    }
    a.active = true;
    int& slot = occupancy_[map_.index(a.position)];
    if (slot >= 0) throw std::invalid_argument("MapfEnv: two agents share a start cell");
    slot = static_cast<int>(i);
  }
  done_ = active_count() == 0;
}

MapfEnv MapfEnv::from_config(const EnvConfig& config, RewardModel rewards) {
  Rng rng(config.seed);
  return MapfEnv(config, generate_map(config, rng), rewards);
}

std::size_t MapfEnv::active_count() const {
  return static_cast<std::size_t>(
      std::count_if(agents_.begin(), agents_.end(), [](const AgentState& a) { return a.active; }));
}

StepResult MapfEnv::step(std::span<const Action> actions) {
  if (done_) throw std::logic_error("MapfEnv::step: episode already finished");
  const std::size_t n = agents_.size();
  if (actions.size() != n) {
    throw std::invalid_argument("MapfEnv::step: expected " + std::to_string(n) + " actions, got " +
                                std::to_string(actions.size()));
  }
  for (Action a : actions) {
    if (static_cast<std::size_t>(a) >= kNumActions) throw std::invalid_argument("MapfEnv::step: invalid action");
  }

  StepResult result;
  result.rewards.assign(n, 0.0);
  result.blocked.assign(n, false);

  std::vector<Cell> target(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!agents_[i].active) continue;
    target[i] = apply_action(agents_[i].position, actions[i]);
    if (map_.is_obstacle(target[i])) {
      target[i] = agents_[i].position;
      result.blocked[i] = true;
    }
  }

  // Revert conflicting movers until nothing changes. Reverts only ever turn
  // movers into stayers, so this terminates within n rounds.
  std::vector<int> claims(occupancy_.size(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    std::fill(claims.begin(), claims.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (agents_[i].active) ++claims[map_.index(target[i])];
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!agents_[i].active || target[i] == agents_[i].position) continue;
      bool revert = claims[map_.index(target[i])] > 1;
      const int other = occupancy_[map_.index(target[i])];
      if (!revert && other >= 0 && target[static_cast<std::size_t>(other)] == agents_[i].position) {
        revert = true;  // swap
      }
      if (revert) {
        target[i] = agents_[i].position;
        result.blocked[i] = true;
        changed = true;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (agents_[i].active) occupancy_[map_.index(agents_[i].position)] = -1;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& agent = agents_[i];
    if (!agent.active) continue;
    agent.position = target[i];
    result.rewards[i] += rewards_.step_penalty;
    if (result.blocked[i]) result.rewards[i] += rewards_.blocked_penalty;
    if (agent.position == agent.goal) {
      agent.active = false;
      reached_[i] = true;
      result.rewards[i] += rewards_.goal_reward;
    } else {
      occupancy_[map_.index(agent.position)] = static_cast<int>(i);
    }
  }
  for (double r : result.rewards) total_reward_ += r;

  ++steps_;
  done_ = active_count() == 0 || steps_ >= config_.max_steps;
  result.done = done_;
  return result;
}

Observation MapfEnv::observe(std::size_t agent) const {
  if (agent >= agents_.size()) throw std::out_of_range("MapfEnv::observe: agent index out of range");
  const AgentState& self = agents_[agent];
  if (!self.active) throw std::logic_error("MapfEnv::observe: agent is inactive");

  Observation obs;
  obs.radius = config_.obs_radius;
  const int r = obs.radius;
  const std::size_t side = obs.side();
  obs.obstacles.assign(side * side, 0);
  obs.agents.assign(side * side, 0);
  obs.goal.assign(side * side, 0);

  for (int dr = -r; dr <= r; ++dr) {
    for (int dc = -r; dc <= r; ++dc) {
      const Cell cell{self.position.row + dr, self.position.col + dc};
      const std::size_t k = static_cast<std::size_t>(dr + r) * side + static_cast<std::size_t>(dc + r);
      obs.obstacles[k] = map_.is_obstacle(cell) ? 1 : 0;
      if (map_.in_bounds(cell)) {
        const int occupant = occupancy_[map_.index(cell)];
        obs.agents[k] = (occupant >= 0 && static_cast<std::size_t>(occupant) != agent) ? 1 : 0;
      }
    }
  }
  const int goal_dr = std::clamp(self.goal.row - self.position.row, -r, r);
  const int goal_dc = std::clamp(self.goal.col - self.position.col, -r, r);
  obs.goal[static_cast<std::size_t>(goal_dr + r) * side + static_cast<std::size_t>(goal_dc + r)] = 1;
  obs.goal_offset = {static_cast<double>(self.goal.row - self.position.row) / map_.height(),
                     static_cast<double>(self.goal.col - self.position.col) / map_.width()};
  return obs;
}

EpisodeOutcome MapfEnv::outcome() const {
  EpisodeOutcome out;
  out.per_agent_reached = reached_;
  out.total_reward = total_reward_;
  out.steps_used = steps_;
  out.truncated = steps_ >= config_.max_steps && active_count() > 0;
  return out;
}

std::string MapfEnv::render() const {
  std::vector<std::string> rows(static_cast<std::size_t>(map_.height()), std::string(map_.width(), '.'));
  for (int r = 0; r < map_.height(); ++r) {
    for (int c = 0; c < map_.width(); ++c) {
      if (map_.is_obstacle({r, c})) rows[r][c] = '#';
    }
  }
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    if (!agents_[i].active) continue;
    const Cell g = agents_[i].goal;
    rows[g.row][g.col] = static_cast<char>('A' + i % 26);
  }
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    if (!agents_[i].active) continue;
    const Cell p = agents_[i].position;
    rows[p.row][p.col] = static_cast<char>('a' + i % 26);
  }
  std::string out;
  for (const auto& row : rows) out += row + '\n';
  return out;
}

}  // namespace sitp
