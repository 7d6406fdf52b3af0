#pragma once

#include <map>
#include <string>

#include "dtm/tape.hpp"
#include "dtm/tensor.hpp"

namespace dtm {

// Named parameter store. std::map keeps lexicographic name order, which is
// the canonical order for checkpoints, initialization draws and tape
// registration.
using ParamStore = std::map<std::string, Tensor>;

struct ParamVars {
  std::map<std::string, Var> vars;
  Var at(const std::string& name) const;
};

// Registers every parameter on the tape in lexicographic name order.
ParamVars register_params(Tape& tape, const ParamStore& params);

}  // namespace dtm
