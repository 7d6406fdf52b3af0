#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dtm {

// Dense row-major tensor of 64-bit floats. Scalars are rank-1 tensors with a
// single element. Shape checks happen at operation boundaries, not here.
struct Tensor {
  std::vector<int> dims;
  std::vector<double> data;

  Tensor() = default;

  static Tensor zeros(std::vector<int> dims);
  static Tensor full(std::vector<int> dims, double value);
  static Tensor from(std::vector<int> dims, std::vector<double> values);
  static Tensor scalar(double value);

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(dims.size()); }
  int dim(int i) const { return dims[static_cast<size_t>(i)]; }

  double& operator()(int i) { return data[static_cast<size_t>(i)]; }
  double operator()(int i) const { return data[static_cast<size_t>(i)]; }
  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * dims[1] + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * dims[1] + j]; }
  double& operator()(int i, int j, int k) {
    return data[(static_cast<size_t>(i) * dims[1] + j) * dims[2] + k];
  }
  double operator()(int i, int j, int k) const {
    return data[(static_cast<size_t>(i) * dims[1] + j) * dims[2] + k];
  }
  double& operator()(int i, int j, int k, int l) {
    return data[((static_cast<size_t>(i) * dims[1] + j) * dims[2] + k) * dims[3] + l];
  }
  double operator()(int i, int j, int k, int l) const {
    return data[((static_cast<size_t>(i) * dims[1] + j) * dims[2] + k) * dims[3] + l];
  }

  bool same_dims(const Tensor& other) const { return dims == other.dims; }
  bool all_finite() const;
  double scalar_value() const;  // UsageError unless numel()==1

  std::string dims_str() const;  // "[3x4]"
};

// Exact number of elements implied by a dim list; validates positivity.
int64_t checked_numel(const std::vector<int>& dims);

bool bit_equal(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace dtm
