#include "ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace ugcpl {

namespace {

std::vector<LayerSpec> mlp_layers(int out_units) {
  return {LayerSpec::dense(64), LayerSpec::relu(), LayerSpec::dense(64), LayerSpec::relu(),
          LayerSpec::dense(out_units)};
}

Tensor latent_tensor(const LatentVec& z) {
  return Tensor::from({static_cast<int>(z.size())}, std::vector<float>(z.begin(), z.end()));
}

struct Dist {
  double log_probs[kNumActions];
  double probs[kNumActions];
};

Dist distribution(const Tensor& logits) {
  double mx = logits[0];
  for (int i = 1; i < kNumActions; ++i) mx = std::max(mx, static_cast<double>(logits[i]));
  double sum = 0.0;
  for (int i = 0; i < kNumActions; ++i) sum += std::exp(static_cast<double>(logits[i]) - mx);
  double lse = mx + std::log(sum);
  Dist d;
  for (int i = 0; i < kNumActions; ++i) {
    d.log_probs[i] = static_cast<double>(logits[i]) - lse;
    d.probs[i] = std::exp(d.log_probs[i]);
  }
  return d;
}

}  // namespace

PolicyValueNet::PolicyValueNet(uint64_t init_seed, int latent_dim)
    : pi_([&] {
        Rng r(mix_seed(init_seed, 11));
        return Network("pi", mlp_layers(kNumActions), {{latent_dim}}, r);
      }()),
      vf_([&] {
        Rng r(mix_seed(init_seed, 12));
        return Network("vf", mlp_layers(1), {{latent_dim}}, r);
      }()) {}

ActResult PolicyValueNet::act(const LatentVec& latent, ActMode mode, Rng* rng) const {
  Tensor logits = pi_.forward(latent_tensor(latent));
  Dist d = distribution(logits);

  int a = 0;
  if (mode == ActMode::Greedy) {
    for (int i = 1; i < kNumActions; ++i)
      if (d.probs[i] > d.probs[a]) a = i;
  } else {
    if (!rng) throw InvalidArgumentError("act: Sample mode needs an rng");
    double u = rng->next_double();
    double cum = 0.0;
    a = kNumActions - 1;
    for (int i = 0; i < kNumActions; ++i) {
      cum += d.probs[i];
      if (u < cum) {
        a = i;
        break;
      }
    }
  }

  ActResult res;
  res.action = static_cast<Action>(a);
  res.log_prob = d.log_probs[a];
  res.value = state_value(latent);
  return res;
}

double PolicyValueNet::log_prob(const LatentVec& latent, Action a) const {
  Tensor logits = pi_.forward(latent_tensor(latent));
  return distribution(logits).log_probs[static_cast<int>(a)];
}

double PolicyValueNet::state_value(const LatentVec& latent) const {
  return vf_.forward(latent_tensor(latent))[0];
}

std::vector<std::pair<std::string, const Tensor*>> PolicyValueNet::named_params() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [name, t] : pi_.named_params()) out.emplace_back("pi/" + name, t);
  for (auto& [name, t] : vf_.named_params()) out.emplace_back("vf/" + name, t);
  return out;
}

void PolicyValueNet::load_params(const std::map<std::string, Tensor>& entries) {
  for (const auto& [name, t] : entries) {
    if (name.rfind("pi/", 0) == 0) pi_.load_named_param(name.substr(3), t);
    if (name.rfind("vf/", 0) == 0) vf_.load_named_param(name.substr(3), t);
  }
}

GaeResult compute_gae(const std::vector<float>& rewards, const std::vector<float>& values,
                      const std::vector<uint8_t>& dones, double gamma, double lambda, bool normalize) {
  const size_t n = rewards.size();
  if (values.size() != n + 1)
    throw InvalidArgumentError("compute_gae: values must hold one entry per transition plus bootstrap");
  if (dones.size() != n) throw InvalidArgumentError("compute_gae: dones length mismatch");

  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);

  double lastgae = 0.0;
  for (size_t t = n; t-- > 0;) {
    double nonterminal = dones[t] ? 0.0 : 1.0;
    double next_value = values[t + 1];
    double delta = rewards[t] + gamma * next_value * nonterminal - values[t];
    lastgae = delta + gamma * lambda * nonterminal * lastgae;
    out.advantages[t] = static_cast<float>(lastgae);
    out.returns[t] = static_cast<float>(lastgae + values[t]);
  }

  if (normalize && n > 0) {
    double mean = 0.0;
    for (float a : out.advantages) mean += a;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (float a : out.advantages) {
      double d = a - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    double denom = std::sqrt(var) + 1e-8;
    for (float& a : out.advantages) a = static_cast<float>((a - mean) / denom);
  }
  return out;
}

RolloutBatch collect_rollout(LatentEnv& env, const PolicyValueNet& net, int n_steps, Rng& rng,
                             ActMode mode) {
  if (n_steps <= 0) throw InvalidArgumentError("collect_rollout: n_steps must be positive");
  RolloutBatch batch;
  batch.latents.reserve(static_cast<size_t>(n_steps));

  LatentVec z = env.reset(rng);
  bool last_done = false;
  for (int t = 0; t < n_steps; ++t) {
    ActResult act = net.act(z, mode, &rng);
    LatentEnv::Step s = env.step(act.action, rng);

    batch.latents.push_back(z);
    batch.actions.push_back(act.action);
    batch.rewards.push_back(static_cast<float>(s.reward));
    batch.dones.push_back(s.done ? 1 : 0);
    batch.log_probs.push_back(static_cast<float>(act.log_prob));
    batch.values.push_back(static_cast<float>(act.value));

    last_done = s.done;
    z = s.done ? env.reset(rng) : s.latent;
  }
  batch.bootstrap_value = last_done ? 0.0f : static_cast<float>(net.state_value(z));
  return batch;
}

PpoLearner::PpoLearner(const PpoConfig& cfg, uint64_t init_seed)
    : cfg_(cfg),
      net_(init_seed),
      opt_pi_(cfg.optimizer, cfg.lr),
      opt_vf_(cfg.optimizer, cfg.lr) {
  if (cfg_.clip <= 0.0f || cfg_.clip >= 1.0f) throw InvalidArgumentError("ppo: clip must lie in (0, 1)");
  if (cfg_.gamma <= 0.0f || cfg_.gamma >= 1.0f) throw InvalidArgumentError("ppo: gamma must lie in (0, 1)");
  opt_pi_.attach(net_.pi());
  opt_vf_.attach(net_.vf());
}

PpoStats PpoLearner::update(const RolloutBatch& batch, Rng& rng) {
  const size_t n = batch.size();
  if (n == 0) throw InvalidArgumentError("ppo update: empty batch");

  std::vector<float> values_ext = batch.values;
  values_ext.push_back(batch.bootstrap_value);
  GaeResult gae = compute_gae(batch.rewards, values_ext, batch.dones, cfg_.gamma, cfg_.gae_lambda,
                              cfg_.normalize_advantage);

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});

  GradSet g_pi = net_.pi().make_grads();
  GradSet g_vf = net_.vf().make_grads();

  const double eps = cfg_.clip;
  double sum_pg = 0.0, sum_vl = 0.0, sum_ent = 0.0;
  size_t samples_seen = 0;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    shuffle(order, rng);
    for (size_t start = 0; start < n; start += static_cast<size_t>(cfg_.minibatch)) {
      size_t end = std::min(n, start + static_cast<size_t>(cfg_.minibatch));
      double inv_mb = 1.0 / static_cast<double>(end - start);
      g_pi.zero();
      g_vf.zero();

      for (size_t k = start; k < end; ++k) {
        size_t i = order[k];
        const LatentVec& z = batch.latents[i];
        int a = static_cast<int>(batch.actions[i]);
        double adv = gae.advantages[i];
        double ret = gae.returns[i];
        double v_old = batch.values[i];
        double lp_old = batch.log_probs[i];

        // policy head
        Tape tape_pi;
        Tensor logits = net_.pi().forward(latent_tensor(z), &tape_pi);
        Dist d = distribution(logits);
        double ratio = std::exp(d.log_probs[a] - lp_old);
        double unclipped = ratio * adv;
        double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
        double surrogate = std::min(unclipped, clipped);
        sum_pg += -surrogate;

        // d(-surrogate)/d(ratio): active only on the unclipped branch
        double dsur_dratio = unclipped <= clipped ? -adv : 0.0;

        double entropy = 0.0;
        for (int j = 0; j < kNumActions; ++j) entropy -= d.probs[j] * d.log_probs[j];
        sum_ent += entropy;

        Tensor dlogits({kNumActions});
        for (int j = 0; j < kNumActions; ++j) {
          double indicator = j == a ? 1.0 : 0.0;
          double dratio_dlogit = ratio * (indicator - d.probs[j]);
          double dH_dlogit = -d.probs[j] * (d.log_probs[j] + entropy);
          dlogits[j] = static_cast<float>(inv_mb * (dsur_dratio * dratio_dlogit - cfg_.ent_coef * dH_dlogit));
        }
        net_.pi().backward(tape_pi, dlogits, g_pi);

        // value head, clipped around the rollout-time value
        Tape tape_vf;
        Tensor vout = net_.vf().forward(latent_tensor(z), &tape_vf);
        double v = vout[0];
        double vdiff = v - ret;
        double v_clipped = v_old + std::clamp(v - v_old, -eps, eps);
        double cdiff = v_clipped - ret;
        double loss_unclipped = vdiff * vdiff;
        double loss_clipped = cdiff * cdiff;
        double vloss = 0.5 * std::max(loss_unclipped, loss_clipped);
        sum_vl += vloss;

        double dv;
        if (loss_unclipped >= loss_clipped) {
          dv = vdiff;
        } else {
          dv = std::abs(v - v_old) < eps ? cdiff : 0.0;
        }
        Tensor dvout({1});
        dvout[0] = static_cast<float>(inv_mb * cfg_.vf_coef * dv);
        net_.vf().backward(tape_vf, dvout, g_vf);

        ++samples_seen;
      }

      opt_pi_.step(net_.pi(), g_pi);
      opt_vf_.step(net_.vf(), g_vf);
    }
  }

  if (samples_seen == 0) throw ContractViolationError("ppo update: no samples processed");
  PpoStats stats;
  stats.policy_loss = sum_pg / static_cast<double>(samples_seen);
  stats.value_loss = sum_vl / static_cast<double>(samples_seen);
  stats.entropy = sum_ent / static_cast<double>(samples_seen);
  if (!std::isfinite(stats.policy_loss) || !std::isfinite(stats.value_loss) ||
      !std::isfinite(stats.entropy))
    throw DivergenceError("ppo update: non-finite loss");
  return stats;
}

EmbeddedGridEnv::EmbeddedGridEnv(GridEnv& env, const WorldModel& wm, std::optional<int> goal_id,
                                 bool record)
    : env_(&env), wm_(&wm), goal_id_(goal_id), record_(record) {}

void EmbeddedGridEnv::flush_current() {
  if (!current_.empty()) {
    episodes_.push_back(std::move(current_));
    current_.clear();
  }
}

LatentVec EmbeddedGridEnv::reset(Rng& rng) {
  flush_current();
  auto [state, obs] = env_->reset(rng.next_u64(), goal_id_);
  prev_state_ = state;
  return wm_->embed(obs, state.goal_id);
}

LatentEnv::Step EmbeddedGridEnv::step(Action a, Rng&) {
  StepResult r = env_->step(a);
  if (record_) {
    Transition t;
    t.state = state_key(prev_state_);
    t.next_state = state_key(r.state);
    t.goal_id = static_cast<int8_t>(prev_state_.goal_id);
    t.action = static_cast<int8_t>(a);
    t.reward = static_cast<float>(r.reward);
    t.done = r.done;
    current_.push_back(t);
    if (r.done) flush_current();
  }
  prev_state_ = r.state;
  return {wm_->embed(r.observation, r.state.goal_id), r.reward, r.done};
}

std::vector<std::vector<Transition>> EmbeddedGridEnv::take_episodes() {
  flush_current();
  return std::move(episodes_);
}

}  // namespace ugcpl
