#ifndef UGCPL_DREAM_HPP
#define UGCPL_DREAM_HPP

#include <memory>
#include <optional>

#include "buffer.hpp"
#include "world_model.hpp"

namespace ugcpl {

enum class InitialObsSource { RealEnvReset, BufferInitialObs };

struct DreamConfig {
  int horizon = 64;
  float terminal_reward_threshold = 0.5f;  // strictly-greater comparison
  float discount = 0.99f;
  InitialObsSource source = InitialObsSource::RealEnvReset;
  std::optional<int> goal_id;  // fixed goal; absent = draw per episode
};

/// Minimal latent-space environment contract shared by the dream MDP, the
/// real-environment wrapper and test fixtures.
class LatentEnv {
 public:
  virtual ~LatentEnv() = default;

  struct Step {
    LatentVec latent;
    double reward = 0.0;
    bool done = false;
  };

  virtual LatentVec reset(Rng& rng) = 0;
  virtual Step step(Action a, Rng& rng) = 0;
};

/// The synthesized MDP: states are re-normalized xi predictions, rewards come
/// from zeta, initial states embed real reset observations (or stored
/// rollout-initial observations). Never touches the training environment.
class DreamMdp : public LatentEnv {
 public:
  DreamMdp(const WorldModel& wm, DreamConfig cfg, const GridLayout& layout,
           const RenderCache* cache = nullptr, const ExperienceBuffer* buffer = nullptr);

  LatentVec reset(Rng& rng) override;
  Step step(Action a, Rng& rng) override;

  int steps() const { return steps_; }
  bool done() const { return done_; }
  const DreamConfig& config() const { return cfg_; }

 private:
  const WorldModel* wm_;
  DreamConfig cfg_;
  GridEnv init_env_;  // private instance, used only for initial observations
  const RenderCache* cache_;
  const ExperienceBuffer* buffer_;
  LatentVec latent_;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace ugcpl

#endif  // UGCPL_DREAM_HPP
