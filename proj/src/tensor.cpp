#include "dtm/tensor.hpp"

#include <cmath>
#include <cstring>

#include "dtm/errors.hpp"

namespace dtm {

int64_t checked_numel(const std::vector<int>& dims) {
  if (dims.empty()) throw ShapeError("tensor rank must be >= 1");
  int64_t n = 1;
  for (int d : dims) {
    if (d <= 0) throw ShapeError("tensor extents must be positive");
    n *= d;
  }
  return n;
}

Tensor Tensor::zeros(std::vector<int> dims) {
  Tensor t;
  int64_t n = checked_numel(dims);
  t.dims = std::move(dims);
  t.data.assign(static_cast<size_t>(n), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int> dims, double value) {
  Tensor t = zeros(std::move(dims));
  for (double& x : t.data) x = value;
  return t;
}

Tensor Tensor::from(std::vector<int> dims, std::vector<double> values) {
  int64_t n = checked_numel(dims);
  if (n != static_cast<int64_t>(values.size()))
    throw ShapeError("value count does not match dims");
  Tensor t;
  t.dims = std::move(dims);
  t.data = std::move(values);
  return t;
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

double Tensor::scalar_value() const {
  if (numel() != 1) throw UsageError("expected a scalar tensor, got " + dims_str());
  return data[0];
}

std::string Tensor::dims_str() const {
  std::string s = "[";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  s += "]";
  return s;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.dims != b.dims) return false;
  return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.dims != b.dims) throw ShapeError("max_abs_diff: " + a.dims_str() + " vs " + b.dims_str());
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace dtm
