#include "dream.hpp"

#include <cmath>

#include "errors.hpp"

namespace ugcpl {

DreamMdp::DreamMdp(const WorldModel& wm, DreamConfig cfg, const GridLayout& layout,
                   const RenderCache* cache, const ExperienceBuffer* buffer)
    : wm_(&wm), cfg_(cfg), init_env_(layout), cache_(cache), buffer_(buffer) {
  if (cfg_.terminal_reward_threshold <= 0.0f || cfg_.terminal_reward_threshold >= 1.0f)
    throw InvalidArgumentError("dream: terminal reward threshold must lie in (0, 1)");
  if (cfg_.horizon <= 0) throw InvalidArgumentError("dream: horizon must be positive");
  if (cfg_.source == InitialObsSource::BufferInitialObs && (!buffer_ || !cache_))
    throw InvalidArgumentError("dream: buffer initial-observation source needs a buffer and render cache");
}

LatentVec DreamMdp::reset(Rng& rng) {
  if (cfg_.source == InitialObsSource::RealEnvReset) {
    auto [state, obs] = init_env_.reset(rng.next_u64(), cfg_.goal_id);
    latent_ = wm_->embed(obs, state.goal_id);
  } else {
    const auto& initials = buffer_->rollout_initials();
    if (initials.empty())
      throw InsufficientDataError("dream reset: buffer holds no rollout-initial observations");
    const auto& init = initials[static_cast<size_t>(rng.next_below(initials.size()))];
    const Observation& obs = cache_->get({init.state.row, init.state.col},
                                         static_cast<Heading>(init.state.heading), init.goal_id);
    latent_ = wm_->embed(obs, init.goal_id);
  }
  steps_ = 0;
  done_ = false;
  return latent_;
}

DreamMdp::Step DreamMdp::step(Action a, Rng&) {
  if (done_) throw ContractViolationError("dream step: episode is already terminal");

  double reward = wm_->predict_reward(latent_, a);
  LatentVec raw = wm_->predict_next_latent(latent_, a);

  double n = l2_norm(raw);
  if (n <= 1e-8)
    throw DegenerateInputError("dream step: xi output has near-zero norm " + std::to_string(n));
  for (auto& v : raw) v = static_cast<float>(v / n);

  latent_ = std::move(raw);
  ++steps_;
  done_ = reward > cfg_.terminal_reward_threshold || steps_ >= cfg_.horizon;

  return {latent_, reward, done_};
}

}  // namespace ugcpl
