#ifndef UGCPL_TENSOR_HPP
#define UGCPL_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace ugcpl {

/// Dense row-major float32 tensor. Images are stored [H, W, C], vectors [D].
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) { data.assign(numel_of(shape), 0.0f); }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor from(std::vector<int> s, std::vector<float> d);

  static int64_t numel_of(const std::vector<int>& s);
  int64_t numel() const { return static_cast<int64_t>(data.size()); }

  float& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  // [H, W, C] accessor
  float& at3(int r, int c, int ch) {
    return data[static_cast<size_t>((static_cast<int64_t>(r) * shape[1] + c) * shape[2] + ch)];
  }
  const float& at3(int r, int c, int ch) const {
    return data[static_cast<size_t>((static_cast<int64_t>(r) * shape[1] + c) * shape[2] + ch)];
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  void fill(float v) { std::fill(data.begin(), data.end(), v); }

  std::string shape_str() const;
};

// ||x||_2 computed in double
double l2_norm(const Tensor& t);
double l2_norm(const std::vector<float>& v);

// squared euclidean distance between equal-length vectors, in double
double squared_distance(const std::vector<float>& a, const std::vector<float>& b);

}  // namespace ugcpl

#endif  // UGCPL_TENSOR_HPP
