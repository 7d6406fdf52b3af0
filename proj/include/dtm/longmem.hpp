#pragma once

#include "dtm/mask.hpp"
#include "dtm/ops.hpp"

namespace dtm {

// Long-term object memory: one d-vector hidden state blended by a
// single-gate recurrence. The gate matrix w is [d x 2d], applied to the
// concatenation [x; h]; there is no bias term.
//   z = sigmoid(w [x; h]);  h_new = h + z * (x - h)
// The blend form keeps x == h a bit-exact fixed point.
Var sgru_step(Var x, Var h_prev, Var w);

// h_1 = masked GAP of the first frame's features under its ground-truth
// mask (at feature resolution).
Var init_state(Var features, const Mask& mask_featres, bool area_normalized);

// Pool frame f's features under its mask, then take one gate step.
Var advance(Var h_prev, Var features_prev, const Mask& mask_prev_featres, Var w,
            bool area_normalized);

}  // namespace dtm
