#include "gridworld.hpp"

#include <string>

#include "errors.hpp"

namespace ugcpl {

GridLayout GridLayout::two_rooms() {
  GridLayout l;
  l.wall.assign(static_cast<size_t>(l.height) * l.width, 0);
  int divider = 8;  // rooms span columns 0-7 and 9-16
  for (int r = 0; r < l.height; ++r) l.wall[static_cast<size_t>(r) * l.width + divider] = 1;
  l.door = {3, divider};
  l.wall[static_cast<size_t>(l.door.row) * l.width + l.door.col] = 0;
  l.goals = {{{3, 4}, {3, 12}}};  // one per room, mirrored about the door column
  return l;
}

int GridLayout::wall_count() const {
  int n = 0;
  for (uint8_t w : wall) n += w;
  return n;
}

double goal_reward(int steps_taken, int max_steps) {
  if (max_steps <= 0) throw InvalidArgumentError("goal_reward: max_steps must be positive");
  if (steps_taken < 1) throw ContractViolationError("goal_reward: steps_taken must be at least 1");
  if (steps_taken > max_steps)
    throw ContractViolationError("goal_reward: steps_taken " + std::to_string(steps_taken) +
                                 " exceeds max_steps " + std::to_string(max_steps));
  return 1.0 - 0.9 * static_cast<double>(steps_taken) / static_cast<double>(max_steps);
}

Cell heading_vector(Heading h) {
  switch (h) {
    case Heading::North: return {-1, 0};
    case Heading::East: return {0, 1};
    case Heading::South: return {1, 0};
    case Heading::West: return {0, -1};
  }
  return {0, 0};
}

Heading rotate_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }
Heading rotate_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }

Observation render(const GridLayout& layout, const WorldState& state) {
  Observation obs;
  obs.goal_id = state.goal_id;
  obs.pixels = Tensor({kObsSide, kObsSide, 3});

  Cell fwd = heading_vector(state.heading);
  Cell right = heading_vector(rotate_right(state.heading));

  for (int vr = 0; vr < kViewTiles; ++vr) {
    int ahead = (kViewTiles - 1) - vr;  // bottom view row is the agent's own tile
    for (int vc = 0; vc < kViewTiles; ++vc) {
      int lateral = vc - kViewTiles / 2;
      int r = state.agent.row + fwd.row * ahead + right.row * lateral;
      int c = state.agent.col + fwd.col * ahead + right.col * lateral;

      const std::array<float, 3>* color;
      if (!layout.in_bounds(r, c) || layout.is_wall(r, c)) {
        color = &layout.palette.wall;
      } else if (Cell{r, c} == state.goal_cell) {
        color = &layout.palette.goal;
      } else {
        color = &layout.palette.floor;
      }

      for (int pr = vr * kTilePixels; pr < (vr + 1) * kTilePixels; ++pr)
        for (int pc = vc * kTilePixels; pc < (vc + 1) * kTilePixels; ++pc)
          for (int ch = 0; ch < 3; ++ch) obs.pixels.at3(pr, pc, ch) = (*color)[ch];
    }
  }
  return obs;
}

std::vector<WorldState> enumerate_states(const GridLayout& layout, int goal_id, int max_steps) {
  if (goal_id != 0 && goal_id != 1) throw InvalidArgumentError("enumerate_states: goal_id must be 0 or 1");
  std::vector<WorldState> out;
  for (int r = 0; r < layout.height; ++r) {
    for (int c = 0; c < layout.width; ++c) {
      if (!layout.passable(r, c)) continue;
      for (int h = 0; h < 4; ++h) {
        WorldState s;
        s.agent = {r, c};
        s.heading = static_cast<Heading>(h);
        s.goal_id = goal_id;
        s.goal_cell = layout.goals[static_cast<size_t>(goal_id)];
        s.steps_taken = 0;
        s.max_steps = max_steps;
        out.push_back(s);
      }
    }
  }
  return out;
}

GridEnv::GridEnv(GridLayout layout, int max_steps) : layout_(std::move(layout)), max_steps_(max_steps) {
  if (max_steps_ <= 0) throw InvalidArgumentError("GridEnv: max_steps must be positive");
}

std::pair<WorldState, Observation> GridEnv::reset(uint64_t seed, std::optional<int> goal_id) {
  if (goal_id && *goal_id != 0 && *goal_id != 1)
    throw InvalidArgumentError("reset: goal_id must be 0 or 1, got " + std::to_string(*goal_id));
  rng_.reseed(seed);
  int heading = rng_.next_int(4);
  int goal = goal_id ? *goal_id : rng_.next_int(2);

  state_.agent = layout_.door;
  state_.heading = static_cast<Heading>(heading);
  state_.goal_id = goal;
  state_.goal_cell = layout_.goals[static_cast<size_t>(goal)];
  state_.steps_taken = 0;
  state_.max_steps = max_steps_;
  done_ = false;
  return {state_, render(layout_, state_)};
}

StepResult GridEnv::step(Action action) {
  if (done_) throw ContractViolationError("step: episode is already terminal");

  switch (action) {
    case Action::TurnLeft:
      state_.heading = rotate_left(state_.heading);
      break;
    case Action::TurnRight:
      state_.heading = rotate_right(state_.heading);
      break;
    case Action::Forward: {
      Cell fwd = heading_vector(state_.heading);
      int nr = state_.agent.row + fwd.row;
      int nc = state_.agent.col + fwd.col;
      if (layout_.passable(nr, nc)) state_.agent = {nr, nc};
      // forward into a wall is a no-op on position
      break;
    }
    default:
      throw InvalidArgumentError("step: invalid action " + std::to_string(static_cast<int>(action)));
  }

  ++state_.steps_taken;
  ++total_steps_;

  bool reached = state_.agent == state_.goal_cell;
  double reward = reached ? goal_reward(state_.steps_taken, state_.max_steps) : 0.0;
  done_ = reached || state_.steps_taken >= state_.max_steps;

  return {state_, render(layout_, state_), reward, done_};
}

const Observation& RenderCache::get(Cell agent, Heading heading, int goal_id) const {
  uint32_t key = ((static_cast<uint32_t>(agent.row) * 32 + static_cast<uint32_t>(agent.col)) * 4 +
                  static_cast<uint32_t>(heading)) *
                     2 +
                 static_cast<uint32_t>(goal_id);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  WorldState s;
  s.agent = agent;
  s.heading = heading;
  s.goal_id = goal_id;
  s.goal_cell = layout_->goals[static_cast<size_t>(goal_id)];
  return cache_.emplace(key, render(*layout_, s)).first->second;
}

}  // namespace ugcpl
