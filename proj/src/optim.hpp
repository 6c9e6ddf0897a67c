#ifndef UGCPL_OPTIM_HPP
#define UGCPL_OPTIM_HPP

#include <string>
#include <vector>

#include "network.hpp"

namespace ugcpl {

enum class OptimizerKind { Adam, RmsProp };

OptimizerKind optimizer_kind_from_string(const std::string& s);
const char* optimizer_kind_name(OptimizerKind k);

/// Per-network optimizer state. Adam uses beta1=0.9, beta2=0.999, eps=1e-8
/// with bias correction; rmsprop uses rho=0.9, eps=1e-8.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, float lr);

  void attach(const Network& net);  // allocate moment buffers
  void step(Network& net, const GradSet& grads);

  float lr() const { return lr_; }
  void set_lr(float lr) { lr_ = lr; }
  OptimizerKind kind() const { return kind_; }

 private:
  OptimizerKind kind_;
  float lr_;
  int64_t t_ = 0;
  std::vector<Tensor> m_w_, m_b_;  // first moment (adam only)
  std::vector<Tensor> v_w_, v_b_;  // second moment
  bool attached_ = false;
};

}  // namespace ugcpl

#endif  // UGCPL_OPTIM_HPP
