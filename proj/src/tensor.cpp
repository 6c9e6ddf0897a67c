#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace ugcpl {

int64_t Tensor::numel_of(const std::vector<int>& s) {
  int64_t n = 1;
  for (int d : s) {
    if (d <= 0) throw InvalidArgumentError("tensor dimension must be positive, got " + std::to_string(d));
    n *= d;
  }
  return n;
}

Tensor Tensor::from(std::vector<int> s, std::vector<float> d) {
  if (numel_of(s) != static_cast<int64_t>(d.size()))
    throw InvalidArgumentError("tensor data length does not match shape");
  Tensor t;
  t.shape = std::move(s);
  t.data = std::move(d);
  return t;
}

bool Tensor::all_finite() const {
  for (float v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

double l2_norm(const Tensor& t) {
  double s = 0.0;
  for (float v : t.data) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

double l2_norm(const std::vector<float>& v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

double squared_distance(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace ugcpl
