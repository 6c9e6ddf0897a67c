#ifndef UGCPL_PPO_HPP
#define UGCPL_PPO_HPP

#include <optional>
#include <vector>

#include "dream.hpp"
#include "optim.hpp"
#include "world_model.hpp"

namespace ugcpl {

struct PpoConfig {
  float clip = 0.2f;
  int epochs = 4;
  int minibatch = 64;
  float gae_lambda = 0.95f;
  float gamma = 0.99f;
  float vf_coef = 0.5f;
  float ent_coef = 0.01f;
  bool normalize_advantage = true;
  float lr = 3e-4f;
  OptimizerKind optimizer = OptimizerKind::Adam;
};

enum class ActMode { Sample, Greedy };

struct ActResult {
  Action action = Action::TurnLeft;
  double log_prob = 0.0;
  double value = 0.0;
};

/// 3-action policy on latent inputs plus a separate value network with the
/// same hidden sizes (the policy head itself stays logits-only).
class PolicyValueNet {
 public:
  explicit PolicyValueNet(uint64_t init_seed, int latent_dim = kLatentDim);

  /// Sample draws from softmax(logits); Greedy takes the argmax with
  /// lowest-index tie-break. rng is only consulted in Sample mode.
  ActResult act(const LatentVec& latent, ActMode mode, Rng* rng) const;

  double log_prob(const LatentVec& latent, Action a) const;
  double state_value(const LatentVec& latent) const;

  Network& pi() { return pi_; }
  const Network& pi() const { return pi_; }
  Network& vf() { return vf_; }
  const Network& vf() const { return vf_; }

  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
  void load_params(const std::map<std::string, Tensor>& entries);

 private:
  Network pi_;
  Network vf_;
};

struct RolloutBatch {
  std::vector<LatentVec> latents;
  std::vector<Action> actions;
  std::vector<float> rewards;
  std::vector<uint8_t> dones;
  std::vector<float> log_probs;
  std::vector<float> values;
  float bootstrap_value = 0.0f;  // value of the state after the last transition
  size_t size() const { return latents.size(); }
};

struct GaeResult {
  std::vector<float> advantages;
  std::vector<float> returns;
};

/// Generalized advantage estimation with episode-boundary masking. `values`
/// must hold one entry per transition plus the bootstrap value of the final
/// state. Advantages are normalized to zero mean / unit variance per batch
/// when `normalize` is set (1e-8 guard).
GaeResult compute_gae(const std::vector<float>& rewards, const std::vector<float>& values,
                      const std::vector<uint8_t>& dones, double gamma, double lambda, bool normalize);

/// Runs the policy for exactly n_steps transitions against any LatentEnv,
/// auto-resetting finished episodes; log-probs and values are recorded from
/// the rollout-time parameters.
RolloutBatch collect_rollout(LatentEnv& env, const PolicyValueNet& net, int n_steps, Rng& rng,
                             ActMode mode = ActMode::Sample);

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

/// Clipped-surrogate update: k epochs of shuffled minibatches, clipped value
/// loss around the rollout-time values, entropy bonus.
class PpoLearner {
 public:
  PpoLearner(const PpoConfig& cfg, uint64_t init_seed);

  PpoStats update(const RolloutBatch& batch, Rng& rng);

  PolicyValueNet& net() { return net_; }
  const PolicyValueNet& net() const { return net_; }
  const PpoConfig& config() const { return cfg_; }

 private:
  PpoConfig cfg_;
  PolicyValueNet net_;
  Optimizer opt_pi_;
  Optimizer opt_vf_;
};

/// Real environment behind the latent contract: reset/step observations pass
/// through the representation before the policy sees them. Optionally records
/// raw transitions for the experience buffer, split per episode (an episode
/// cut off by the end of a collection window is its own partial rollout).
class EmbeddedGridEnv : public LatentEnv {
 public:
  EmbeddedGridEnv(GridEnv& env, const WorldModel& wm, std::optional<int> goal_id = {},
                  bool record = false);

  LatentVec reset(Rng& rng) override;
  Step step(Action a, Rng& rng) override;

  std::vector<std::vector<Transition>> take_episodes();

 private:
  void flush_current();

  GridEnv* env_;
  const WorldModel* wm_;
  std::optional<int> goal_id_;
  bool record_;
  WorldState prev_state_;
  std::vector<Transition> current_;
  std::vector<std::vector<Transition>> episodes_;
};

}  // namespace ugcpl

#endif  // UGCPL_PPO_HPP
