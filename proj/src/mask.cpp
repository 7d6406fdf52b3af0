#include "dtm/mask.hpp"

#include "dtm/errors.hpp"

namespace dtm {

int64_t Mask::count() const {
  int64_t n = 0;
  for (uint8_t x : v) n += x;
  return n;
}

Mask downsample_majority(const Mask& m, int factor) {
  if (factor < 1) throw InputError("downsample_majority: factor must be >= 1");
  if (m.w % factor != 0 || m.h % factor != 0)
    throw InputError("downsample_majority: mask dims must be divisible by the factor");
  Mask out(m.w / factor, m.h / factor);
  const int block = factor * factor;
  for (int r = 0; r < out.h; ++r)
    for (int c = 0; c < out.w; ++c) {
      int cnt = 0;
      for (int dr = 0; dr < factor; ++dr)
        for (int dc = 0; dc < factor; ++dc) cnt += m.at(r * factor + dr, c * factor + dc);
      out.set(r, c, 2 * cnt > block ? 1 : 0);
    }
  return out;
}

Tensor mask_to_tensor(const Mask& m) {
  Tensor t = Tensor::zeros({m.h, m.w});
  for (size_t i = 0; i < m.v.size(); ++i) t.data[i] = m.v[i];
  return t;
}

Tensor mask_to_channel(const Mask& m) {
  Tensor t = Tensor::zeros({m.h, m.w, 1});
  for (size_t i = 0; i < m.v.size(); ++i) t.data[i] = m.v[i];
  return t;
}

std::vector<int> mask_to_labels(const Mask& m) {
  std::vector<int> out(m.v.size());
  for (size_t i = 0; i < m.v.size(); ++i) out[i] = m.v[i];
  return out;
}

}  // namespace dtm
