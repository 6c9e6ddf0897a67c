#include "network.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace ugcpl {

namespace {
std::atomic<uint64_t> g_next_net_id{1};

int conv_out_dim(int n, int k, int s) { return (n - k) / s + 1; }
}  // namespace

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Subsample2x: return "subsample2x";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::Dense: return "dense";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Logistic: return "logistic";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::L2Normalize: return "l2normalize";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Concat: return "concat";
  }
  return "?";
}

void GradSet::zero() {
  for (auto& t : d_weights) t.fill(0.0f);
  for (auto& t : d_bias) t.fill(0.0f);
}

void GradSet::scale(float s) {
  for (auto& t : d_weights)
    for (auto& v : t.data) v *= s;
  for (auto& t : d_bias)
    for (auto& v : t.data) v *= s;
}

bool GradSet::all_finite() const {
  for (const auto& t : d_weights)
    if (!t.data.empty() && !t.all_finite()) return false;
  for (const auto& t : d_bias)
    if (!t.data.empty() && !t.all_finite()) return false;
  return true;
}

Network::Network(std::string name, std::vector<LayerSpec> specs, std::vector<std::vector<int>> input_shapes,
                 Rng& init_rng)
    : name_(std::move(name)), specs_(std::move(specs)), input_shapes_(std::move(input_shapes)) {
  if (specs_.empty()) throw InvalidArgumentError(name_ + ": network needs at least one layer");
  if (input_shapes_.empty()) throw InvalidArgumentError(name_ + ": network needs an input shape");
  bool has_concat = specs_[0].kind == LayerKind::Concat;
  if (!has_concat && input_shapes_.size() != 1)
    throw InvalidArgumentError(name_ + ": multiple inputs require a leading concat layer");
  for (size_t i = 1; i < specs_.size(); ++i)
    if (specs_[i].kind == LayerKind::Concat)
      throw InvalidArgumentError(name_ + ": concat is only supported as the first layer");

  id_ = g_next_net_id.fetch_add(1);
  params_.resize(specs_.size());
  shapes_.resize(specs_.size());

  std::vector<int> cur = input_shapes_[0];
  for (size_t i = 0; i < specs_.size(); ++i) {
    const LayerSpec& sp = specs_[i];
    std::vector<int> out = infer_shape(i, cur);
    shapes_[i] = out;

    if (sp.kind == LayerKind::Conv2d) {
      int cin = cur[2];
      Tensor w({sp.filters, sp.kernel, sp.kernel, cin});
      Tensor b({sp.filters});
      double fan_in = static_cast<double>(sp.kernel) * sp.kernel * cin;
      double fan_out = static_cast<double>(sp.kernel) * sp.kernel * sp.filters;
      double lim = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : w.data) v = static_cast<float>(init_rng.uniform(-lim, lim));
      params_[i] = {std::move(w), std::move(b), true};
    } else if (sp.kind == LayerKind::Dense) {
      int n = cur[0];
      Tensor w({sp.units, n});
      Tensor b({sp.units});
      double lim = std::sqrt(6.0 / (static_cast<double>(n) + sp.units));
      for (auto& v : w.data) v = static_cast<float>(init_rng.uniform(-lim, lim));
      params_[i] = {std::move(w), std::move(b), true};
    }
    cur = out;
  }
}

std::vector<int> Network::infer_shape(size_t layer, const std::vector<int>& in) const {
  const LayerSpec& sp = specs_[layer];
  auto fail = [&](const std::string& why) {
    throw InvalidArgumentError(name_ + ": layer " + std::to_string(layer) + " (" + layer_kind_name(sp.kind) +
                               "): " + why);
  };
  switch (sp.kind) {
    case LayerKind::Concat: {
      if (layer != 0) fail("concat must be the first layer");
      int64_t total = 0;
      for (const auto& s : input_shapes_) total += Tensor::numel_of(s);
      return {static_cast<int>(total)};
    }
    case LayerKind::Subsample2x: {
      if (in.size() != 3) fail("expects [H,W,C] input, got " + std::to_string(in.size()) + " dims");
      return {(in[0] + 1) / 2, (in[1] + 1) / 2, in[2]};
    }
    case LayerKind::Conv2d: {
      if (in.size() != 3) fail("expects [H,W,C] input");
      if (sp.filters <= 0 || sp.kernel <= 0 || sp.stride <= 0) fail("bad hyperparameters");
      if (in[0] < sp.kernel || in[1] < sp.kernel) fail("kernel larger than input " + std::to_string(in[0]));
      int oh = conv_out_dim(in[0], sp.kernel, sp.stride);
      int ow = conv_out_dim(in[1], sp.kernel, sp.stride);
      if (oh <= 0 || ow <= 0) fail("output dimension not positive");
      return {oh, ow, sp.filters};
    }
    case LayerKind::MaxPool2d: {
      if (in.size() != 3) fail("expects [H,W,C] input");
      if (sp.kernel <= 0 || sp.stride <= 0) fail("bad hyperparameters");
      if (in[0] < sp.kernel || in[1] < sp.kernel) fail("kernel larger than input");
      int oh = conv_out_dim(in[0], sp.kernel, sp.stride);
      int ow = conv_out_dim(in[1], sp.kernel, sp.stride);
      if (oh <= 0 || ow <= 0) fail("output dimension not positive");
      return {oh, ow, in[2]};
    }
    case LayerKind::Dense: {
      if (in.size() != 1) fail("expects rank-1 input (add a flatten layer)");
      if (sp.units <= 0) fail("units must be positive");
      return {sp.units};
    }
    case LayerKind::Flatten:
      return {static_cast<int>(Tensor::numel_of(in))};
    case LayerKind::Softmax:
    case LayerKind::L2Normalize:
      if (in.size() != 1) fail("expects rank-1 input");
      return in;
    case LayerKind::ReLU:
    case LayerKind::Logistic:
      return in;
  }
  fail("unknown layer kind");
  return {};
}

int64_t Network::param_count() const {
  int64_t n = 0;
  for (const auto& p : params_) {
    n += p.weights.numel();
    n += p.bias.numel();
  }
  return n;
}

Tensor Network::forward(const Tensor& input, Tape* tape) const {
  std::vector<Tensor> in{input};
  return forward(in, tape);
}

Tensor Network::forward(const std::vector<Tensor>& inputs, Tape* tape) const {
  bool has_concat = specs_[0].kind == LayerKind::Concat;
  if (has_concat) {
    if (inputs.size() != input_shapes_.size())
      throw InvalidArgumentError(name_ + ": expected " + std::to_string(input_shapes_.size()) + " inputs, got " +
                                 std::to_string(inputs.size()));
  } else if (inputs.size() != 1) {
    throw InvalidArgumentError(name_ + ": expected a single input");
  }
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].shape != input_shapes_[i])
      throw InvalidArgumentError(name_ + ": input " + std::to_string(i) + " has shape " + inputs[i].shape_str() +
                                 ", expected " + Tensor(input_shapes_[i]).shape_str());
  }

  if (tape) {
    tape->net_id = id_;
    tape->params_version = version_;
    tape->traces.assign(specs_.size(), LayerTrace{});
    tape->input_sizes.clear();
    for (const auto& t : inputs) tape->input_sizes.push_back(t.numel());
  }

  Tensor cur;
  size_t start = 0;
  if (has_concat) {
    cur = Tensor({static_cast<int>(std::accumulate(inputs.begin(), inputs.end(), int64_t{0},
                                                   [](int64_t a, const Tensor& t) { return a + t.numel(); }))});
    int64_t off = 0;
    for (const auto& t : inputs) {
      std::copy(t.data.begin(), t.data.end(), cur.data.begin() + off);
      off += t.numel();
    }
    start = 1;
  } else {
    cur = inputs[0];
  }

  for (size_t li = start; li < specs_.size(); ++li) {
    const LayerSpec& sp = specs_[li];
    const LayerParams& lp = params_[li];
    LayerTrace* tr = tape ? &tape->traces[li] : nullptr;
    Tensor out;
    switch (sp.kind) {
      case LayerKind::Concat:
        throw ContractViolationError(name_ + ": concat encountered mid-network");
      case LayerKind::Subsample2x: {
        const auto& s = shapes_[li];
        out = Tensor(s);
        for (int r = 0; r < s[0]; ++r)
          for (int c = 0; c < s[1]; ++c)
            for (int ch = 0; ch < s[2]; ++ch) out.at3(r, c, ch) = cur.at3(2 * r, 2 * c, ch);
        if (tr) tr->input = cur;
        break;
      }
      case LayerKind::Conv2d: {
        const auto& s = shapes_[li];
        int k = sp.kernel, st = sp.stride, cin = cur.shape[2];
        out = Tensor(s);
        const float* wp = lp.weights.data.data();
        for (int oh = 0; oh < s[0]; ++oh) {
          for (int ow = 0; ow < s[1]; ++ow) {
            for (int f = 0; f < s[2]; ++f) {
              double acc = lp.bias[f];
              const float* wf = wp + static_cast<int64_t>(f) * k * k * cin;
              for (int kh = 0; kh < k; ++kh) {
                const float* inrow = &cur.at3(oh * st + kh, ow * st, 0);
                const float* wrow = wf + kh * k * cin;
                for (int j = 0; j < k * cin; ++j) acc += static_cast<double>(inrow[j]) * wrow[j];
              }
              out.at3(oh, ow, f) = static_cast<float>(acc);
            }
          }
        }
        if (tr) tr->input = cur;
        break;
      }
      case LayerKind::MaxPool2d: {
        const auto& s = shapes_[li];
        int k = sp.kernel, st = sp.stride;
        out = Tensor(s);
        std::vector<int> arg;
        if (tr) arg.resize(static_cast<size_t>(out.numel()));
        int W = cur.shape[1], C = cur.shape[2];
        for (int oh = 0; oh < s[0]; ++oh) {
          for (int ow = 0; ow < s[1]; ++ow) {
            for (int ch = 0; ch < s[2]; ++ch) {
              float best = cur.at3(oh * st, ow * st, ch);
              int best_idx = (oh * st * W + ow * st) * C + ch;
              for (int kh = 0; kh < k; ++kh)
                for (int kw = 0; kw < k; ++kw) {
                  int r = oh * st + kh, c = ow * st + kw;
                  float v = cur.at3(r, c, ch);
                  if (v > best) {
                    best = v;
                    best_idx = (r * W + c) * C + ch;
                  }
                }
              int64_t oidx = (static_cast<int64_t>(oh) * s[1] + ow) * s[2] + ch;
              out[oidx] = best;
              if (tr) arg[static_cast<size_t>(oidx)] = best_idx;
            }
          }
        }
        if (tr) {
          tr->input = cur;
          tr->argmax = std::move(arg);
        }
        break;
      }
      case LayerKind::Dense: {
        int n = cur.shape[0], u = sp.units;
        out = Tensor({u});
        const float* x = cur.data.data();
        for (int i = 0; i < u; ++i) {
          const float* wrow = lp.weights.data.data() + static_cast<int64_t>(i) * n;
          double acc = lp.bias[i];
          for (int j = 0; j < n; ++j) acc += static_cast<double>(wrow[j]) * x[j];
          out[i] = static_cast<float>(acc);
        }
        if (tr) tr->input = cur;
        break;
      }
      case LayerKind::ReLU: {
        out = cur;
        for (auto& v : out.data) v = v > 0.0f ? v : 0.0f;
        if (tr) tr->input = cur;
        break;
      }
      case LayerKind::Logistic: {
        out = cur;
        for (auto& v : out.data) {
          if (v >= 0.0f) {
            v = 1.0f / (1.0f + std::exp(-v));
          } else {
            float e = std::exp(v);
            v = e / (1.0f + e);
          }
        }
        if (tr) tr->cached_output = out;
        break;
      }
      case LayerKind::Softmax: {
        out = softmax(cur);
        if (tr) tr->cached_output = out;
        break;
      }
      case LayerKind::L2Normalize: {
        double n = l2_norm(cur);
        if (n <= 1e-8)
          throw DegenerateInputError(name_ + ": l2-normalize input has near-zero norm (" + std::to_string(n) + ")");
        out = cur;
        for (auto& v : out.data) v = static_cast<float>(v / n);
        if (tr) {
          tr->input = cur;
          tr->cached_output = out;
          tr->norm = n;
        }
        break;
      }
      case LayerKind::Flatten: {
        out = cur;
        out.shape = shapes_[li];
        if (tr) tr->input.shape = cur.shape;  // only the shape is needed
        break;
      }
    }
    cur = std::move(out);
  }

  if (tape) tape->output = cur;
  return cur;
}

std::vector<Tensor> Network::backward(const Tape& tape, const Tensor& output_gradient, GradSet& grads) const {
  if (tape.net_id != id_)
    throw ContractViolationError(name_ + ": tape belongs to a different network");
  if (tape.params_version != version_)
    throw ContractViolationError(name_ + ": stale tape (parameters changed since forward)");
  if (output_gradient.shape != shapes_.back())
    throw InvalidArgumentError(name_ + ": output gradient shape mismatch");

  Tensor d = output_gradient;
  bool has_concat = specs_[0].kind == LayerKind::Concat;
  size_t stop = has_concat ? 1 : 0;

  for (size_t li = specs_.size(); li-- > stop;) {
    const LayerSpec& sp = specs_[li];
    const LayerParams& lp = params_[li];
    const LayerTrace& tr = tape.traces[li];
    Tensor dn;
    switch (sp.kind) {
      case LayerKind::Concat:
        break;  // handled after the loop
      case LayerKind::Subsample2x: {
        dn = Tensor(tr.input.shape);
        const auto& s = shapes_[li];
        for (int r = 0; r < s[0]; ++r)
          for (int c = 0; c < s[1]; ++c)
            for (int ch = 0; ch < s[2]; ++ch) dn.at3(2 * r, 2 * c, ch) = d.at3(r, c, ch);
        break;
      }
      case LayerKind::Conv2d: {
        const auto& s = shapes_[li];
        int k = sp.kernel, st = sp.stride, cin = tr.input.shape[2];
        dn = Tensor(tr.input.shape);
        Tensor& dW = grads.d_weights[li];
        Tensor& dB = grads.d_bias[li];
        for (int oh = 0; oh < s[0]; ++oh) {
          for (int ow = 0; ow < s[1]; ++ow) {
            for (int f = 0; f < s[2]; ++f) {
              float g = d.at3(oh, ow, f);
              if (g == 0.0f) continue;
              dB[f] += g;
              float* dwf = dW.data.data() + static_cast<int64_t>(f) * k * k * cin;
              const float* wf = lp.weights.data.data() + static_cast<int64_t>(f) * k * k * cin;
              for (int kh = 0; kh < k; ++kh) {
                const float* inrow = &tr.input.at3(oh * st + kh, ow * st, 0);
                float* dinrow = &dn.at3(oh * st + kh, ow * st, 0);
                float* dwrow = dwf + kh * k * cin;
                const float* wrow = wf + kh * k * cin;
                for (int j = 0; j < k * cin; ++j) {
                  dwrow[j] += g * inrow[j];
                  dinrow[j] += g * wrow[j];
                }
              }
            }
          }
        }
        break;
      }
      case LayerKind::MaxPool2d: {
        dn = Tensor(tr.input.shape);
        for (int64_t i = 0; i < d.numel(); ++i) dn[tr.argmax[static_cast<size_t>(i)]] += d[i];
        break;
      }
      case LayerKind::Dense: {
        int n = tr.input.shape[0], u = sp.units;
        dn = Tensor(tr.input.shape);
        Tensor& dW = grads.d_weights[li];
        Tensor& dB = grads.d_bias[li];
        const float* x = tr.input.data.data();
        for (int i = 0; i < u; ++i) {
          float g = d[i];
          dB[i] += g;
          float* dwrow = dW.data.data() + static_cast<int64_t>(i) * n;
          const float* wrow = lp.weights.data.data() + static_cast<int64_t>(i) * n;
          for (int j = 0; j < n; ++j) {
            dwrow[j] += g * x[j];
            dn[j] += g * wrow[j];
          }
        }
        break;
      }
      case LayerKind::ReLU: {
        dn = d;
        for (int64_t i = 0; i < dn.numel(); ++i)
          if (tr.input[i] <= 0.0f) dn[i] = 0.0f;
        break;
      }
      case LayerKind::Logistic: {
        dn = d;
        for (int64_t i = 0; i < dn.numel(); ++i) {
          float y = tr.cached_output[i];
          dn[i] = d[i] * y * (1.0f - y);
        }
        break;
      }
      case LayerKind::Softmax: {
        const Tensor& y = tr.cached_output;
        double dot = 0.0;
        for (int64_t i = 0; i < d.numel(); ++i) dot += static_cast<double>(d[i]) * y[i];
        dn = d;
        for (int64_t i = 0; i < dn.numel(); ++i)
          dn[i] = static_cast<float>(y[i] * (static_cast<double>(d[i]) - dot));
        break;
      }
      case LayerKind::L2Normalize: {
        const Tensor& y = tr.cached_output;
        double dot = 0.0;
        for (int64_t i = 0; i < d.numel(); ++i) dot += static_cast<double>(d[i]) * y[i];
        dn = d;
        for (int64_t i = 0; i < dn.numel(); ++i)
          dn[i] = static_cast<float>((static_cast<double>(d[i]) - dot * y[i]) / tr.norm);
        break;
      }
      case LayerKind::Flatten: {
        dn = d;
        dn.shape = tr.input.shape;
        break;
      }
    }
    d = std::move(dn);
  }

  std::vector<Tensor> input_grads;
  if (has_concat) {
    int64_t off = 0;
    for (size_t i = 0; i < input_shapes_.size(); ++i) {
      Tensor g(input_shapes_[i]);
      std::copy(d.data.begin() + off, d.data.begin() + off + g.numel(), g.data.begin());
      off += g.numel();
      input_grads.push_back(std::move(g));
    }
  } else {
    input_grads.push_back(std::move(d));
  }
  return input_grads;
}

GradSet Network::make_grads() const {
  GradSet g;
  g.d_weights.resize(specs_.size());
  g.d_bias.resize(specs_.size());
  for (size_t i = 0; i < specs_.size(); ++i) {
    if (params_[i].trainable) {
      g.d_weights[i] = Tensor(params_[i].weights.shape);
      g.d_bias[i] = Tensor(params_[i].bias.shape);
    }
  }
  return g;
}

std::vector<std::pair<std::string, const Tensor*>> Network::named_params() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (size_t i = 0; i < specs_.size(); ++i) {
    if (!params_[i].trainable) continue;
    std::string base = std::to_string(i) + "_" + layer_kind_name(specs_[i].kind);
    out.emplace_back(base + "/W", &params_[i].weights);
    out.emplace_back(base + "/b", &params_[i].bias);
  }
  return out;
}

void Network::load_named_param(const std::string& name, const Tensor& value) {
  for (size_t i = 0; i < specs_.size(); ++i) {
    if (!params_[i].trainable) continue;
    std::string base = std::to_string(i) + "_" + layer_kind_name(specs_[i].kind);
    if (name == base + "/W") {
      if (value.shape != params_[i].weights.shape)
        throw InvalidArgumentError(name_ + ": checkpoint shape mismatch for " + name);
      params_[i].weights = value;
      ++version_;
      return;
    }
    if (name == base + "/b") {
      if (value.shape != params_[i].bias.shape)
        throw InvalidArgumentError(name_ + ": checkpoint shape mismatch for " + name);
      params_[i].bias = value;
      ++version_;
      return;
    }
  }
  throw InvalidArgumentError(name_ + ": unknown parameter name '" + name + "'");
}

Tensor softmax(const Tensor& logits) {
  Tensor out = logits;
  float mx = *std::max_element(logits.data.begin(), logits.data.end());
  double sum = 0.0;
  for (int64_t i = 0; i < out.numel(); ++i) {
    double e = std::exp(static_cast<double>(logits[i]) - mx);
    out[i] = static_cast<float>(e);
    sum += e;
  }
  for (auto& v : out.data) v = static_cast<float>(v / sum);
  return out;
}

Tensor l2_normalize(const Tensor& x, double eps) {
  double n = l2_norm(x);
  if (n <= eps) throw DegenerateInputError("l2_normalize: input norm " + std::to_string(n) + " below threshold");
  Tensor out = x;
  for (auto& v : out.data) v = static_cast<float>(v / n);
  return out;
}

}  // namespace ugcpl
