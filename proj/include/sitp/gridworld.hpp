#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "sitp/errors.hpp"
#include "sitp/rng.hpp"
#include "sitp/sr_metrics.hpp"

namespace sitp {

struct Cell {
  int row = 0;
  int col = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

// Obstacle grid. Anything outside [0, height) x [0, width) counts as blocked.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int height, int width, std::string name = {});

  int height() const { return height_; }
  int width() const { return width_; }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  bool in_bounds(Cell c) const { return c.row >= 0 && c.col >= 0 && c.row < height_ && c.col < width_; }
  bool is_obstacle(Cell c) const { return !in_bounds(c) || cells_[index(c)] != 0; }
  bool is_free(Cell c) const { return !is_obstacle(c); }
  void set_obstacle(Cell c, bool blocked);

  std::size_t free_count() const;
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * width_ + c.col; }

  friend bool operator==(const GridMap& a, const GridMap& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.cells_ == b.cells_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::string name_;
  std::vector<std::uint8_t> cells_;
};

class MapParseError : public std::runtime_error {
 public:
  // Message reads "<what> at line <N><detail>".
  MapParseError(std::size_t line, const std::string& what, const std::string& detail = {})
      : std::runtime_error(what + " at line " + std::to_string(line) + detail), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// MovingAI grid format: `type`, `height H`, `width W`, `map`, then H rows of
// W characters. '.' and 'G' are free; '@', 'O', 'T', 'W' are obstacles.
// LF and CRLF line endings are accepted; trailing whitespace is ignored.
GridMap parse_movingai_map(std::string_view text);
GridMap load_movingai_map(const std::string& path);
std::string serialize_movingai_map(const GridMap& map);

// Every cell independently blocked with probability `density`, row-major,
// one draw per cell.
GridMap random_grid(int height, int width, double density, Rng& rng);

// 4-connected BFS distances over free cells; -1 marks unreachable.
std::vector<int> bfs_distances(const GridMap& map, Cell from);

struct ProceduralMap {
  int size = 8;
  double obstacle_density = 0.0;
};

struct MapFile {
  std::string path;
};

struct EnvConfig {
  std::variant<ProceduralMap, MapFile> map_source = ProceduralMap{};
  std::size_t n_agents = 1;
  std::size_t max_steps = 64;
  int obs_radius = 2;
  std::uint64_t seed = 0;

  // Throws ConfigError. Does not touch the filesystem.
  void validate() const;
};

// Default step limit for a square map of the given side.
std::size_t default_max_steps(int map_size);

struct AgentState {
  Cell position;
  Cell goal;
  bool active = true;
};

enum class Action : std::uint8_t { kStay = 0, kUp = 1, kDown = 2, kLeft = 3, kRight = 4 };
inline constexpr std::size_t kNumActions = 5;
Cell apply_action(Cell c, Action a);

struct Observation {
  int radius = 0;
  // Each channel is (2r+1)^2 row-major, centred on the observing agent.
  std::vector<std::uint8_t> obstacles;  // out of bounds = 1
  std::vector<std::uint8_t> agents;     // other active agents; centre is 0
  std::vector<std::uint8_t> goal;       // own goal, clipped onto the window
  std::array<double, 2> goal_offset{};  // (d_row / height, d_col / width)

  std::size_t side() const { return static_cast<std::size_t>(2 * radius + 1); }
  // Byte-exact hash over all channels and the offset pair.
  std::uint64_t hash() const;
};

struct Layout {
  GridMap map;
  std::vector<AgentState> agents;
};

class MapGenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fresh obstacle layout (or the file map) with distinct starts and goals,
// each goal reachable from its own start. After 100 failed placements the
// layout is regenerated; after 100 layouts a MapGenerationError is thrown.
// `file_map`, when given, replaces reading the config's map file.
Layout generate_map(const EnvConfig& config, Rng& rng, const GridMap* file_map = nullptr);

// Same placement procedure over a fixed obstacle grid.
Layout place_agents(const GridMap& map, std::size_t n_agents, Rng& rng);

struct StepResult {
  bool done = false;
  std::vector<double> rewards;  // per agent, this tick
  std::vector<bool> blocked;    // agent asked to move and stayed
};

struct RewardModel {
  double goal_reward = 1.0;
  double step_penalty = -0.01;
  double blocked_penalty = -0.1;
};

// Multi-agent grid pathfinding with simultaneous moves.
//
// Conflict rules, applied to a fixed point: moves into obstacles or out of
// bounds stay; every agent targeting a cell claimed by another agent stays;
// agents swapping cells both stay. An agent that lands on its goal becomes
// inactive and leaves the grid.
class MapfEnv {
 public:
  MapfEnv(EnvConfig config, Layout layout, RewardModel rewards = {});

  // Builds a fresh layout from `config` (uses config.seed).
  static MapfEnv from_config(const EnvConfig& config, RewardModel rewards = {});

  StepResult step(std::span<const Action> actions);
  Observation observe(std::size_t agent) const;

  const GridMap& map() const { return map_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  std::size_t n_agents() const { return agents_.size(); }
  std::size_t active_count() const;
  std::size_t steps() const { return steps_; }
  bool done() const { return done_; }
  const EnvConfig& config() const { return config_; }

  // Outcome so far; final once done() is true.
  EpisodeOutcome outcome() const;

  // '.' free, '#' obstacle, 'a'.. active agents, 'A'.. their goals.
  std::string render() const;

 private:
  EnvConfig config_;
  GridMap map_;
  RewardModel rewards_;
  std::vector<AgentState> agents_;
  std::vector<bool> reached_;
  std::vector<int> occupancy_;  // agent index per cell, -1 if empty
  double total_reward_ = 0.0;
  std::size_t steps_ = 0;
  bool done_ = false;
};

}  // namespace sitp
