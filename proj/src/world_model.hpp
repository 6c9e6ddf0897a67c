#ifndef UGCPL_WORLD_MODEL_HPP
#define UGCPL_WORLD_MODEL_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "buffer.hpp"
#include "gridworld.hpp"
#include "network.hpp"
#include "optim.hpp"

namespace ugcpl {

/// 16-dimensional goal-conditioned embedding; unit L2 norm by construction.
using LatentVec = std::vector<float>;

constexpr int kLatentDim = 16;

struct WorldModelConfig {
  float margin = 0.2f;
  float lr = 1e-3f;
  OptimizerKind optimizer = OptimizerKind::Adam;
  float loss_weight_triplet = 1.0f;
  float loss_weight_reward = 1.0f;
  float loss_weight_latent = 1.0f;
  bool use_inverse_model = false;  // replaces the triplet loss when set
  int batch_size = 64;
};

/// One training example: anchor o_t, positive o_{t+1}, negative o_n, plus the
/// action and next-step reward. Each observation carries its own rollout's
/// goal id.
struct TrainItem {
  const Observation* anchor = nullptr;
  const Observation* positive = nullptr;
  const Observation* negative = nullptr;  // unused under the inverse-model variant
  Action action = Action::TurnLeft;
  float reward = 0.0f;
};

struct TrainBatch {
  std::vector<TrainItem> items;
};

struct WmLosses {
  double triplet = 0.0;
  double reward_mse = 0.0;
  double latent_mse = 0.0;
  double inverse_ce = 0.0;
  double total() const { return triplet + reward_mse + latent_mse + inverse_ce; }
};

// max(||a-p||^2 - ||a-n||^2 + margin, 0)
double triplet_loss(const LatentVec& anchor, const LatentVec& positive, const LatentVec& negative,
                    double margin);

// raw observation stacked with the two one-hot goal planes -> [56, 56, 5]
Tensor make_representation_input(const Observation& obs, int goal_id);

Tensor action_one_hot(Action a);

// FNV-1a over a network's parameter bytes; used for freeze checks
uint64_t params_hash(const Network& net);

/// The jointly trained representation phi, reward predictor zeta and latent
/// predictor xi (plus the optional inverse-model head).
class WorldModel {
 public:
  WorldModel(const WorldModelConfig& config, uint64_t init_seed);

  const WorldModelConfig& config() const { return cfg_; }

  LatentVec embed(const Observation& obs, int goal_id) const;
  double predict_reward(const LatentVec& z, Action a) const;
  // raw xi output; deliberately not re-normalized (the dream MDP re-normalizes)
  LatentVec predict_next_latent(const LatentVec& z, Action a) const;
  // cross-entropy of the inverse model's action prediction
  double inverse_loss(const LatentVec& z_t, const LatentVec& z_t1, Action a) const;

  /// One optimizer step on the summed loss over the batch. While the
  /// representation is frozen phi receives no update but zeta/xi still do.
  WmLosses train_step(const TrainBatch& batch);

  void freeze_representation() { frozen_ = true; }
  bool representation_frozen() const { return frozen_; }

  Network& phi() { return phi_; }
  const Network& phi() const { return phi_; }
  Network& zeta() { return zeta_; }
  Network& xi() { return xi_; }
  const Network& xi() const { return xi_; }
  Network* inverse() { return inv_ ? &*inv_ : nullptr; }

  // checkpoint entries with net-name prefixes phi/, zeta/, xi/, inv/
  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
  void load_params(const std::map<std::string, Tensor>& entries);

 private:
  WorldModelConfig cfg_;
  Network phi_;
  Network zeta_;
  Network xi_;
  std::optional<Network> inv_;
  Optimizer opt_phi_;
  Optimizer opt_zeta_;
  Optimizer opt_xi_;
  std::optional<Optimizer> opt_inv_;
  bool frozen_ = false;
};

/// Draws a training batch from the buffer: uniform anchors, negatives outside
/// the {t-1..t+2} window of the anchor's rollout, observations materialized
/// through the render cache.
TrainBatch assemble_batch(const ExperienceBuffer& buffer, const RenderCache& cache, int batch_size,
                          Rng& rng);

}  // namespace ugcpl

#endif  // UGCPL_WORLD_MODEL_HPP
