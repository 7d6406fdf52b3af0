#pragma once

#include <functional>

#include "dtm/params.hpp"

namespace dtm {

// Rebuilds the forward pass on a fresh tape; parameters are registered in
// lexicographic name order and handed to the builder.
using ForwardFn = std::function<Var(Tape&, const ParamVars&)>;

// Central-difference check of every scalar parameter entry:
//   numeric = (f(p+eps) - f(p-eps)) / (2*eps)
// Relative error uses the denominator max(|analytic|, |numeric|, 1e-8).
// Returns the worst relative error over all entries.
double grad_check(const ForwardFn& forward, ParamStore& params, double eps);

}  // namespace dtm
