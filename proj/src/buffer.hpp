#ifndef UGCPL_BUFFER_HPP
#define UGCPL_BUFFER_HPP

#include <cstdint>
#include <vector>

#include "gridworld.hpp"
#include "rng.hpp"

namespace ugcpl {

// Compact state identity; observations are pure functions of (state, goal)
// and materialize through a RenderCache.
struct StateKey {
  int8_t row = 0;
  int8_t col = 0;
  int8_t heading = 0;
  bool operator==(const StateKey&) const = default;
};

inline StateKey state_key(const WorldState& s) {
  return {static_cast<int8_t>(s.agent.row), static_cast<int8_t>(s.agent.col),
          static_cast<int8_t>(s.heading)};
}

struct Transition {
  StateKey state;       // o_t
  StateKey next_state;  // o_{t+1}
  int8_t goal_id = 0;   // fixed per rollout
  int8_t action = 0;
  float reward = 0.0f;  // r_{t+1}
  bool done = false;
  int32_t rollout_id = -1;
  int32_t step_index = -1;
  bool duplicate = false;

  bool same_payload(const Transition& o) const {
    return state == o.state && next_state == o.next_state && goal_id == o.goal_id && action == o.action &&
           reward == o.reward && done == o.done && rollout_id == o.rollout_id && step_index == o.step_index;
  }
};

/// Flat experience store with terminal oversampling and shuffle-truncation.
class ExperienceBuffer {
 public:
  ExperienceBuffer(int capacity, int oversample);

  /// Appends one contiguous rollout. Transitions get the next rollout id and
  /// consecutive step indices; every positive-reward terminal transition is
  /// appended `oversample` extra times with the duplicate flag set.
  int append_rollout(const std::vector<Transition>& rollout);

  /// Shuffle and keep the first `capacity` records when over capacity.
  void truncate(Rng& rng);

  size_t size() const { return records_.size(); }
  const Transition& operator[](size_t i) const { return records_[i]; }

  int capacity() const { return capacity_; }
  int oversample() const { return oversample_; }
  int rollout_count() const { return next_rollout_id_; }

  struct InitialObs {
    StateKey state;
    int8_t goal_id;
  };
  // first observation of every appended rollout (kept across truncation)
  const std::vector<InitialObs>& rollout_initials() const { return initials_; }

 private:
  std::vector<Transition> records_;
  std::vector<InitialObs> initials_;
  int capacity_;
  int oversample_;
  int32_t next_rollout_id_ = 0;
};

/// Uniform draw over records outside the window {t-1, ..., t+2} of the given
/// rollout. Raises InsufficientDataError when no admissible record exists.
size_t sample_negative(const ExperienceBuffer& buffer, int32_t rollout_id, int32_t t, Rng& rng);

}  // namespace ugcpl

#endif  // UGCPL_BUFFER_HPP
