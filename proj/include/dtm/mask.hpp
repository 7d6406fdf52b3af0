#pragma once

#include <cstdint>
#include <vector>

#include "dtm/tensor.hpp"

namespace dtm {

// Binary segmentation mask, row-major h x w.
struct Mask {
  int w = 0, h = 0;
  std::vector<uint8_t> v;  // 0 or 1

  Mask() = default;
  Mask(int width, int height) : w(width), h(height), v(static_cast<size_t>(width) * height, 0) {}

  uint8_t at(int r, int c) const { return v[static_cast<size_t>(r) * w + c]; }
  void set(int r, int c, uint8_t val) { v[static_cast<size_t>(r) * w + c] = val; }
  int64_t count() const;
  bool empty_mask() const { return count() == 0; }
  bool operator==(const Mask& o) const { return w == o.w && h == o.h && v == o.v; }
};

// Block-majority downsample by an integer factor; a block maps to 1 only
// when object pixels form a strict majority (ties go to background).
Mask downsample_majority(const Mask& m, int factor);

Tensor mask_to_tensor(const Mask& m);   // [h x w]
Tensor mask_to_channel(const Mask& m);  // [h x w x 1]
std::vector<int> mask_to_labels(const Mask& m);

}  // namespace dtm
