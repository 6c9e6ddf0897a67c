#ifndef UGCPL_GRIDWORLD_HPP
#define UGCPL_GRIDWORLD_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace ugcpl {

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

enum class Heading : int { North = 0, East = 1, South = 2, West = 3 };
enum class Action : int { TurnLeft = 0, TurnRight = 1, Forward = 2 };

constexpr int kNumActions = 3;
constexpr int kObsSide = 56;      // pixels
constexpr int kViewTiles = 7;     // tiles per side of the egocentric window
constexpr int kTilePixels = 8;    // pixels per tile

// fixed palette; all renders are built from exactly these constants
struct Palette {
  std::array<float, 3> floor{0.75f, 0.75f, 0.75f};
  std::array<float, 3> wall{0.25f, 0.25f, 0.25f};
  std::array<float, 3> goal{0.0f, 0.8f, 0.0f};
  std::array<float, 3> out_of_view{0.0f, 0.0f, 0.0f};
};

/// Two rooms of 8x8 floor tiles separated by one wall column with a single
/// door opening; cells beyond the grid are treated as wall.
struct GridLayout {
  int height = 8;
  int width = 17;
  std::vector<uint8_t> wall;  // row-major, 1 = wall tile
  Cell door{3, 8};
  std::array<Cell, 2> goals{{{3, 4}, {3, 12}}};
  Palette palette;

  static GridLayout two_rooms();

  bool in_bounds(int r, int c) const { return r >= 0 && r < height && c >= 0 && c < width; }
  bool is_wall(int r, int c) const { return wall[static_cast<size_t>(r) * width + c] != 0; }
  bool passable(int r, int c) const { return in_bounds(r, c) && !is_wall(r, c); }
  int wall_count() const;
};

struct WorldState {
  Cell agent;
  Heading heading = Heading::North;
  int goal_id = 0;
  Cell goal_cell;
  int steps_taken = 0;
  int max_steps = 1000;
};

struct Observation {
  Tensor pixels;  // [56, 56, 3], values in [0, 1]
  int goal_id = 0;
};

// 1 - 0.9 * steps_taken / max_steps, the terminal payout for reaching the goal
double goal_reward(int steps_taken, int max_steps);

/// Egocentric render: a 7x7-tile window in front of the agent, 8 pixels per
/// tile, rotated so the agent always faces up with its own tile at the bottom
/// center. Pure function of the state.
Observation render(const GridLayout& layout, const WorldState& state);

// all (passable cell, heading) pairs for a fixed goal id, row-major cells,
// heading-minor (N, E, S, W)
std::vector<WorldState> enumerate_states(const GridLayout& layout, int goal_id = 0, int max_steps = 1000);

Cell heading_vector(Heading h);
Heading rotate_left(Heading h);
Heading rotate_right(Heading h);

struct StepResult {
  WorldState state;
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

class GridEnv {
 public:
  explicit GridEnv(GridLayout layout = GridLayout::two_rooms(), int max_steps = 1000);

  std::pair<WorldState, Observation> reset(uint64_t seed, std::optional<int> goal_id = {});
  StepResult step(Action action);

  const GridLayout& layout() const { return layout_; }
  const WorldState& state() const { return state_; }
  bool done() const { return done_; }

  // monotone counter over the whole lifetime, used to verify that dream
  // training never drives the real environment
  uint64_t total_steps() const { return total_steps_; }

 private:
  GridLayout layout_;
  WorldState state_;
  Rng rng_;
  bool done_ = true;  // must reset first
  int max_steps_;
  uint64_t total_steps_ = 0;
};

/// Memoized renders; the reachable state space is tiny so every observation
/// is rendered at most once.
class RenderCache {
 public:
  explicit RenderCache(const GridLayout& layout) : layout_(&layout) {}
  const Observation& get(Cell agent, Heading heading, int goal_id) const;

 private:
  const GridLayout* layout_;
  mutable std::unordered_map<uint32_t, Observation> cache_;
};

}  // namespace ugcpl

#endif  // UGCPL_GRIDWORLD_HPP
