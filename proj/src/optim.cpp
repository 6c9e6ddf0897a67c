#include "optim.hpp"

#include <cmath>

#include "errors.hpp"

namespace ugcpl {

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kRho = 0.9;
constexpr double kEps = 1e-8;
}  // namespace

OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "rmsprop") return OptimizerKind::RmsProp;
  throw ConfigError("unknown optimizer '" + s + "' (expected adam or rmsprop)");
}

const char* optimizer_kind_name(OptimizerKind k) {
  return k == OptimizerKind::Adam ? "adam" : "rmsprop";
}

Optimizer::Optimizer(OptimizerKind kind, float lr) : kind_(kind), lr_(lr) {}

void Optimizer::attach(const Network& net) {
  m_w_.clear();
  m_b_.clear();
  v_w_.clear();
  v_b_.clear();
  for (size_t i = 0; i < net.layer_count(); ++i) {
    const LayerParams& p = net.params(i);
    if (p.trainable) {
      if (kind_ == OptimizerKind::Adam) {
        m_w_.push_back(Tensor(p.weights.shape));
        m_b_.push_back(Tensor(p.bias.shape));
      }
      v_w_.push_back(Tensor(p.weights.shape));
      v_b_.push_back(Tensor(p.bias.shape));
    } else {
      if (kind_ == OptimizerKind::Adam) {
        m_w_.emplace_back();
        m_b_.emplace_back();
      }
      v_w_.emplace_back();
      v_b_.emplace_back();
    }
  }
  t_ = 0;
  attached_ = true;
}

void Optimizer::step(Network& net, const GradSet& grads) {
  if (!attached_) throw ContractViolationError("optimizer used before attach()");
  if (!grads.all_finite())
    throw DivergenceError(net.name() + ": non-finite gradient in optimizer step");

  ++t_;
  double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));

  auto update = [&](Tensor& w, const Tensor& g, Tensor* m, Tensor& v) {
    if (g.data.empty()) return;
    if (kind_ == OptimizerKind::Adam) {
      for (size_t i = 0; i < w.data.size(); ++i) {
        double gi = g.data[i];
        double mi = kBeta1 * m->data[i] + (1.0 - kBeta1) * gi;
        double vi = kBeta2 * v.data[i] + (1.0 - kBeta2) * gi * gi;
        m->data[i] = static_cast<float>(mi);
        v.data[i] = static_cast<float>(vi);
        double mhat = mi / bc1;
        double vhat = vi / bc2;
        w.data[i] = static_cast<float>(w.data[i] - lr_ * mhat / (std::sqrt(vhat) + kEps));
      }
    } else {
      for (size_t i = 0; i < w.data.size(); ++i) {
        double gi = g.data[i];
        double vi = kRho * v.data[i] + (1.0 - kRho) * gi * gi;
        v.data[i] = static_cast<float>(vi);
        w.data[i] = static_cast<float>(w.data[i] - lr_ * gi / (std::sqrt(vi) + kEps));
      }
    }
  };

  bool adam = kind_ == OptimizerKind::Adam;
  for (size_t i = 0; i < net.layer_count(); ++i) {
    LayerParams& p = net.params(i);
    if (!p.trainable) continue;
    update(p.weights, grads.d_weights[i], adam ? &m_w_[i] : nullptr, v_w_[i]);
    update(p.bias, grads.d_bias[i], adam ? &m_b_[i] : nullptr, v_b_[i]);
  }
  net.bump_version();
}

}  // namespace ugcpl
