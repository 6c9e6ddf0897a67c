#include "world_model.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace ugcpl {

namespace {

std::vector<LayerSpec> representation_layers() {
  return {LayerSpec::subsample2x(),
          LayerSpec::conv2d(8, 3, 3),
          LayerSpec::relu(),
          LayerSpec::maxpool2d(2, 2),
          LayerSpec::conv2d(16, 3, 2),
          LayerSpec::relu(),
          LayerSpec::flatten(),
          LayerSpec::dense(kLatentDim),
          LayerSpec::l2_normalize()};
}

std::vector<LayerSpec> reward_layers() {
  return {LayerSpec::concat(),    LayerSpec::dense(256), LayerSpec::relu(),
          LayerSpec::dense(256),  LayerSpec::relu(),     LayerSpec::dense(1),
          LayerSpec::logistic()};
}

std::vector<LayerSpec> latent_predictor_layers() {
  return {LayerSpec::concat(),   LayerSpec::dense(512), LayerSpec::relu(), LayerSpec::dense(512),
          LayerSpec::relu(),     LayerSpec::dense(256), LayerSpec::relu(), LayerSpec::dense(kLatentDim)};
}

std::vector<LayerSpec> inverse_layers() {
  return {LayerSpec::concat(),    LayerSpec::dense(256), LayerSpec::relu(),
          LayerSpec::dense(256),  LayerSpec::relu(),     LayerSpec::dense(kNumActions),
          LayerSpec::softmax()};
}

LatentVec to_latent(const Tensor& t) { return LatentVec(t.data.begin(), t.data.end()); }

Tensor latent_tensor(const LatentVec& z) {
  return Tensor::from({static_cast<int>(z.size())}, std::vector<float>(z.begin(), z.end()));
}

}  // namespace

double triplet_loss(const LatentVec& anchor, const LatentVec& positive, const LatentVec& negative,
                    double margin) {
  double d_plus = squared_distance(anchor, positive);
  double d_minus = squared_distance(anchor, negative);
  return std::max(d_plus - d_minus + margin, 0.0);
}

Tensor make_representation_input(const Observation& obs, int goal_id) {
  if (goal_id != 0 && goal_id != 1)
    throw InvalidArgumentError("make_representation_input: goal_id must be 0 or 1");
  Tensor in({kObsSide, kObsSide, 5});
  float plane0 = goal_id == 0 ? 1.0f : 0.0f;
  float plane1 = goal_id == 1 ? 1.0f : 0.0f;
  const float* px = obs.pixels.data.data();
  float* out = in.data.data();
  for (int i = 0; i < kObsSide * kObsSide; ++i) {
    out[i * 5 + 0] = px[i * 3 + 0];
    out[i * 5 + 1] = px[i * 3 + 1];
    out[i * 5 + 2] = px[i * 3 + 2];
    out[i * 5 + 3] = plane0;
    out[i * 5 + 4] = plane1;
  }
  return in;
}

Tensor action_one_hot(Action a) {
  Tensor t({kNumActions});
  int idx = static_cast<int>(a);
  if (idx < 0 || idx >= kNumActions) throw InvalidArgumentError("action_one_hot: invalid action");
  t[idx] = 1.0f;
  return t;
}

uint64_t params_hash(const Network& net) {
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const Tensor& t) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data.data());
    for (size_t i = 0; i < t.data.size() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (size_t i = 0; i < net.layer_count(); ++i) {
    if (!net.params(i).trainable) continue;
    mix(net.params(i).weights);
    mix(net.params(i).bias);
  }
  return h;
}

WorldModel::WorldModel(const WorldModelConfig& config, uint64_t init_seed)
    : cfg_(config),
      phi_([&] {
        Rng r(mix_seed(init_seed, 1));
        return Network("phi", representation_layers(), {{kObsSide, kObsSide, 5}}, r);
      }()),
      zeta_([&] {
        Rng r(mix_seed(init_seed, 2));
        return Network("zeta", reward_layers(), {{kLatentDim}, {kNumActions}}, r);
      }()),
      xi_([&] {
        Rng r(mix_seed(init_seed, 3));
        return Network("xi", latent_predictor_layers(), {{kLatentDim}, {kNumActions}}, r);
      }()),
      opt_phi_(cfg_.optimizer, cfg_.lr),
      opt_zeta_(cfg_.optimizer, cfg_.lr),
      opt_xi_(cfg_.optimizer, cfg_.lr) {
  if (cfg_.margin <= 0.0f) throw InvalidArgumentError("world model: margin must be positive");
  if (cfg_.use_inverse_model) {
    Rng r(mix_seed(init_seed, 4));
    inv_.emplace("inverse", inverse_layers(), std::vector<std::vector<int>>{{kLatentDim}, {kLatentDim}}, r);
    opt_inv_.emplace(cfg_.optimizer, cfg_.lr);
    opt_inv_->attach(*inv_);
  }
  opt_phi_.attach(phi_);
  opt_zeta_.attach(zeta_);
  opt_xi_.attach(xi_);
}

LatentVec WorldModel::embed(const Observation& obs, int goal_id) const {
  Tensor in = make_representation_input(obs, goal_id);
  return to_latent(phi_.forward(in));
}

double WorldModel::predict_reward(const LatentVec& z, Action a) const {
  Tensor out = zeta_.forward({latent_tensor(z), action_one_hot(a)});
  return out[0];
}

LatentVec WorldModel::predict_next_latent(const LatentVec& z, Action a) const {
  return to_latent(xi_.forward({latent_tensor(z), action_one_hot(a)}));
}

double WorldModel::inverse_loss(const LatentVec& z_t, const LatentVec& z_t1, Action a) const {
  if (!inv_) throw ContractViolationError("inverse_loss: inverse model not configured");
  Tensor p = inv_->forward({latent_tensor(z_t), latent_tensor(z_t1)});
  double pa = std::max(static_cast<double>(p[static_cast<int>(a)]), 1e-12);
  return -std::log(pa);
}

WmLosses WorldModel::train_step(const TrainBatch& batch) {
  if (batch.items.empty()) throw InvalidArgumentError("train_step: empty batch");
  const size_t B = batch.items.size();
  const double inv_B = 1.0 / static_cast<double>(B);
  const bool use_inverse = cfg_.use_inverse_model;

  GradSet g_phi = phi_.make_grads();
  GradSet g_zeta = zeta_.make_grads();
  GradSet g_xi = xi_.make_grads();
  GradSet g_inv;
  if (use_inverse) g_inv = inv_->make_grads();

  WmLosses totals;

  for (const TrainItem& item : batch.items) {
    Tensor in_a = make_representation_input(*item.anchor, item.anchor->goal_id);
    Tensor in_p = make_representation_input(*item.positive, item.positive->goal_id);
    Tape tape_a, tape_p;
    Tensor z_a = phi_.forward(in_a, &tape_a);
    Tensor z_p = phi_.forward(in_p, &tape_p);

    Tensor dz_a({kLatentDim});
    Tensor dz_p({kLatentDim});

    Tape tape_n;
    Tensor z_n, dz_n;
    bool triplet_active = false;

    if (!use_inverse) {
      Tensor in_n = make_representation_input(*item.negative, item.negative->goal_id);
      z_n = phi_.forward(in_n, &tape_n);
      double d_plus = 0.0, d_minus = 0.0;
      for (int i = 0; i < kLatentDim; ++i) {
        double dp = static_cast<double>(z_a[i]) - z_p[i];
        double dm = static_cast<double>(z_a[i]) - z_n[i];
        d_plus += dp * dp;
        d_minus += dm * dm;
      }
      double l = d_plus - d_minus + cfg_.margin;
      if (l > 0.0) {
        totals.triplet += l;
        triplet_active = true;
        dz_n = Tensor({kLatentDim});
        float coef = static_cast<float>(cfg_.loss_weight_triplet * inv_B);
        for (int i = 0; i < kLatentDim; ++i) {
          dz_a[i] += coef * 2.0f * (z_n[i] - z_p[i]);
          dz_p[i] += coef * -2.0f * (z_a[i] - z_p[i]);
          dz_n[i] += coef * 2.0f * (z_a[i] - z_n[i]);
        }
      }
    } else {
      Tape tape_i;
      Tensor p = inv_->forward({z_a, z_p}, &tape_i);
      int a_idx = static_cast<int>(item.action);
      double pa = std::max(static_cast<double>(p[a_idx]), 1e-12);
      totals.inverse_ce += -std::log(pa);
      Tensor dp({kNumActions});
      dp[a_idx] = static_cast<float>(-cfg_.loss_weight_triplet * inv_B / pa);
      auto dins = inv_->backward(tape_i, dp, g_inv);
      for (int i = 0; i < kLatentDim; ++i) {
        dz_a[i] += dins[0][i];
        dz_p[i] += dins[1][i];
      }
    }

    Tensor a_onehot = action_one_hot(item.action);

    // reward head: squared error against r_{t+1}
    Tape tape_z;
    Tensor r_hat = zeta_.forward({z_a, a_onehot}, &tape_z);
    double r_err = static_cast<double>(r_hat[0]) - item.reward;
    totals.reward_mse += r_err * r_err;
    Tensor dr({1});
    dr[0] = static_cast<float>(2.0 * r_err * cfg_.loss_weight_reward * inv_B);
    auto dz_from_zeta = zeta_.backward(tape_z, dr, g_zeta);

    // latent head: mean squared error against phi(o_{t+1}); the target is
    // differentiable too (the module trains end to end)
    Tape tape_x;
    Tensor z_hat = xi_.forward({z_a, a_onehot}, &tape_x);
    double l_mse = 0.0;
    Tensor dz_hat({kLatentDim});
    float lcoef = static_cast<float>(2.0 * cfg_.loss_weight_latent * inv_B / kLatentDim);
    for (int i = 0; i < kLatentDim; ++i) {
      double e = static_cast<double>(z_hat[i]) - z_p[i];
      l_mse += e * e;
      dz_hat[i] = lcoef * static_cast<float>(e);
      dz_p[i] += -lcoef * static_cast<float>(e);
    }
    totals.latent_mse += l_mse / kLatentDim;
    auto dz_from_xi = xi_.backward(tape_x, dz_hat, g_xi);

    if (!frozen_) {
      for (int i = 0; i < kLatentDim; ++i) dz_a[i] += dz_from_zeta[0][i] + dz_from_xi[0][i];
      phi_.backward(tape_a, dz_a, g_phi);
      phi_.backward(tape_p, dz_p, g_phi);
      if (triplet_active) phi_.backward(tape_n, dz_n, g_phi);
    }
  }

  totals.triplet *= inv_B;
  totals.reward_mse *= inv_B;
  totals.latent_mse *= inv_B;
  totals.inverse_ce *= inv_B;

  if (!std::isfinite(totals.triplet))
    throw DivergenceError("world model: non-finite triplet loss");
  if (!std::isfinite(totals.reward_mse))
    throw DivergenceError("world model: non-finite reward mse");
  if (!std::isfinite(totals.latent_mse))
    throw DivergenceError("world model: non-finite latent mse");
  if (!std::isfinite(totals.inverse_ce))
    throw DivergenceError("world model: non-finite inverse cross-entropy");

  opt_zeta_.step(zeta_, g_zeta);
  opt_xi_.step(xi_, g_xi);
  if (use_inverse) opt_inv_->step(*inv_, g_inv);
  if (!frozen_) opt_phi_.step(phi_, g_phi);

  return totals;
}

std::vector<std::pair<std::string, const Tensor*>> WorldModel::named_params() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  auto add = [&](const char* prefix, const Network& n) {
    for (auto& [name, t] : n.named_params()) out.emplace_back(std::string(prefix) + name, t);
  };
  add("phi/", phi_);
  add("zeta/", zeta_);
  add("xi/", xi_);
  if (inv_) add("inv/", *inv_);
  return out;
}

void WorldModel::load_params(const std::map<std::string, Tensor>& entries) {
  auto load = [&](const char* prefix, Network& n) {
    for (const auto& [name, t] : entries) {
      if (name.rfind(prefix, 0) == 0) n.load_named_param(name.substr(std::string(prefix).size()), t);
    }
  };
  load("phi/", phi_);
  load("zeta/", zeta_);
  load("xi/", xi_);
  if (inv_) load("inv/", *inv_);
}

TrainBatch assemble_batch(const ExperienceBuffer& buffer, const RenderCache& cache, int batch_size,
                          Rng& rng) {
  if (buffer.size() == 0) throw InsufficientDataError("assemble_batch: buffer is empty");
  TrainBatch batch;
  batch.items.reserve(static_cast<size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) {
    size_t ai = static_cast<size_t>(rng.next_below(buffer.size()));
    const Transition& anchor = buffer[ai];
    size_t ni = sample_negative(buffer, anchor.rollout_id, anchor.step_index, rng);
    const Transition& neg = buffer[ni];

    TrainItem item;
    item.anchor = &cache.get({anchor.state.row, anchor.state.col}, static_cast<Heading>(anchor.state.heading),
                             anchor.goal_id);
    item.positive = &cache.get({anchor.next_state.row, anchor.next_state.col},
                               static_cast<Heading>(anchor.next_state.heading), anchor.goal_id);
    item.negative =
        &cache.get({neg.state.row, neg.state.col}, static_cast<Heading>(neg.state.heading), neg.goal_id);
    item.action = static_cast<Action>(anchor.action);
    item.reward = anchor.reward;
    batch.items.push_back(item);
  }
  return batch;
}

}  // namespace ugcpl
