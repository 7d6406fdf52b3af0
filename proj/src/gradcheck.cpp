#include "dtm/gradcheck.hpp"

#include <cmath>

#include "dtm/errors.hpp"

namespace dtm {

ParamVars register_params(Tape& tape, const ParamStore& params) {
  ParamVars out;
  for (const auto& [name, value] : params) out.vars[name] = tape.param(value);
  return out;
}

Var ParamVars::at(const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end()) throw UsageError("unknown parameter: " + name);
  return it->second;
}

namespace {

double eval_forward(const ForwardFn& forward, const ParamStore& params) {
  Tape tape;
  ParamVars vars = register_params(tape, params);
  Var loss = forward(tape, vars);
  double v = loss.val().scalar_value();
  if (!std::isfinite(v)) throw NumericError("grad_check: forward value is not finite");
  return v;
}

}  // namespace

double grad_check(const ForwardFn& forward, ParamStore& params, double eps) {
  if (eps <= 0.0) throw InputError("grad_check: eps must be positive");

  // Analytic gradients from one recorded pass.
  std::map<std::string, Tensor> analytic;
  {
    Tape tape;
    ParamVars vars = register_params(tape, params);
    Var loss = forward(tape, vars);
    if (!std::isfinite(loss.val().scalar_value()))
      throw NumericError("grad_check: forward value is not finite");
    tape.backward(loss);
    for (const auto& [name, v] : vars.vars) analytic[name] = tape.grad_of(v);
  }

  double worst = 0.0;
  for (auto& [name, p] : params) {
    const Tensor& ga = analytic.at(name);
    for (size_t i = 0; i < p.data.size(); ++i) {
      const double saved = p.data[i];
      p.data[i] = saved + eps;
      const double fp = eval_forward(forward, params);
      p.data[i] = saved - eps;
      const double fm = eval_forward(forward, params);
      p.data[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = ga.data[i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace dtm
