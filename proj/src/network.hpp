#ifndef UGCPL_NETWORK_HPP
#define UGCPL_NETWORK_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace ugcpl {

enum class LayerKind {
  Subsample2x,  // keep every other row/column
  Conv2d,       // valid convolution, no padding
  MaxPool2d,    // no padding
  Dense,
  ReLU,
  Logistic,
  Softmax,
  L2Normalize,
  Flatten,
  Concat,  // first layer only: flattens and joins all network inputs
};

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
  LayerKind kind;
  int filters = 0;  // Conv2d
  int kernel = 0;   // Conv2d, MaxPool2d
  int stride = 0;   // Conv2d, MaxPool2d
  int units = 0;    // Dense

  static LayerSpec subsample2x() { return {LayerKind::Subsample2x}; }
  static LayerSpec conv2d(int filters, int kernel, int stride) {
    return {LayerKind::Conv2d, filters, kernel, stride, 0};
  }
  static LayerSpec maxpool2d(int kernel, int stride) { return {LayerKind::MaxPool2d, 0, kernel, stride, 0}; }
  static LayerSpec dense(int units) { return {LayerKind::Dense, 0, 0, 0, units}; }
  static LayerSpec relu() { return {LayerKind::ReLU}; }
  static LayerSpec logistic() { return {LayerKind::Logistic}; }
  static LayerSpec softmax() { return {LayerKind::Softmax}; }
  static LayerSpec l2_normalize() { return {LayerKind::L2Normalize}; }
  static LayerSpec flatten() { return {LayerKind::Flatten}; }
  static LayerSpec concat() { return {LayerKind::Concat}; }
};

struct LayerParams {
  Tensor weights;
  Tensor bias;
  bool trainable = false;
};

struct LayerTrace {
  Tensor input;             // layer input as seen during forward
  Tensor cached_output;     // Logistic / Softmax / L2Normalize
  std::vector<int> argmax;  // MaxPool2d: flat input index per output cell
  double norm = 0.0;        // L2Normalize
};

/// Activation record of one forward pass; consumed by Network::backward.
struct Tape {
  uint64_t net_id = 0;
  uint64_t params_version = 0;
  std::vector<LayerTrace> traces;
  std::vector<int64_t> input_sizes;  // Concat split points
  Tensor output;
};

/// Parameter gradients aligned with a network's layers. backward() adds into
/// it, so gradients from several tapes (e.g. shared-weight triplet branches)
/// accumulate naturally.
struct GradSet {
  std::vector<Tensor> d_weights;
  std::vector<Tensor> d_bias;
  void zero();
  void scale(float s);
  bool all_finite() const;
};

/// A sequential float32 network with owned parameters. Output spatial dims
/// follow floor((n-k)/s)+1 everywhere; construction fails if any layer would
/// produce a non-positive dimension.
class Network {
 public:
  Network(std::string name, std::vector<LayerSpec> specs, std::vector<std::vector<int>> input_shapes,
          Rng& init_rng);

  const std::string& name() const { return name_; }
  const std::vector<int>& output_shape() const { return shapes_.back(); }
  size_t layer_count() const { return specs_.size(); }
  const LayerSpec& spec(size_t i) const { return specs_[i]; }

  LayerParams& params(size_t i) { return params_[i]; }
  const LayerParams& params(size_t i) const { return params_[i]; }
  uint64_t params_version() const { return version_; }
  void bump_version() { ++version_; }
  uint64_t id() const { return id_; }
  int64_t param_count() const;

  Tensor forward(const std::vector<Tensor>& inputs, Tape* tape = nullptr) const;
  Tensor forward(const Tensor& input, Tape* tape = nullptr) const;

  /// Accumulates parameter gradients into grads and returns the gradient with
  /// respect to each network input. The tape must come from a forward pass on
  /// this network with the current parameters.
  std::vector<Tensor> backward(const Tape& tape, const Tensor& output_gradient, GradSet& grads) const;

  GradSet make_grads() const;

  // named parameters ("<layer>/W", "<layer>/b") for checkpointing
  std::vector<std::pair<std::string, const Tensor*>> named_params() const;
  void load_named_param(const std::string& name, const Tensor& value);

 private:
  std::vector<int> infer_shape(size_t layer, const std::vector<int>& in) const;

  std::string name_;
  std::vector<LayerSpec> specs_;
  std::vector<std::vector<int>> input_shapes_;
  std::vector<std::vector<int>> shapes_;  // shapes_[i] = output shape of layer i
  std::vector<LayerParams> params_;
  uint64_t version_ = 0;
  uint64_t id_ = 0;
};

// softmax over a rank-1 tensor, max-shifted for stability
Tensor softmax(const Tensor& logits);

// x / ||x||_2; raises DegenerateInputError when ||x|| <= eps
Tensor l2_normalize(const Tensor& x, double eps = 1e-8);

}  // namespace ugcpl

#endif  // UGCPL_NETWORK_HPP
