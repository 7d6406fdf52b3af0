#include "dtm/longmem.hpp"

#include "dtm/errors.hpp"

namespace dtm {

Var sgru_step(Var x, Var h_prev, Var w) {
  const Tensor& xv = x.val();
  const Tensor& hv = h_prev.val();
  const Tensor& wv = w.val();
  if (xv.rank() != 1 || hv.rank() != 1 || xv.dim(0) != hv.dim(0))
    throw ShapeError("sgru_step: x " + xv.dims_str() + " vs h " + hv.dims_str());
  const int d = xv.dim(0);
  if (wv.rank() != 2 || wv.dim(0) != d || wv.dim(1) != 2 * d)
    throw ShapeError("sgru_step: gate matrix " + wv.dims_str() + " for d=" + std::to_string(d));
  Var z = sigmoid(matvec(w, vec_concat(x, h_prev)));
  return add(h_prev, mul(z, sub(x, h_prev)));
}

Var init_state(Var features, const Mask& mask_featres, bool area_normalized) {
  return masked_gap(features, mask_to_tensor(mask_featres), area_normalized);
}

Var advance(Var h_prev, Var features_prev, const Mask& mask_prev_featres, Var w,
            bool area_normalized) {
  Var x = masked_gap(features_prev, mask_to_tensor(mask_prev_featres), area_normalized);
  return sgru_step(x, h_prev, w);
}

}  // namespace dtm
