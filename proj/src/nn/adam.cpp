#include "timeapn/nn/adam.hpp"

#include <cmath>

namespace apn::nn {

void adam_step(std::span<Parameter* const> params, AdamState& state) {
  for (const Parameter* p : params) {
    if (!p->grad.allFinite()) {
      throw Error("adam_step: non-finite gradient for parameter '" + p->name() + "'");
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (Parameter* p : params) {
    auto [it, inserted] = state.moments.try_emplace(p->id());
    auto& mom = it->second;
    if (inserted) {
      mom.m = Matrix::Zero(p->value.rows(), p->value.cols());
      mom.v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    mom.m = state.beta1 * mom.m + (1.0 - state.beta1) * p->grad;
    mom.v = state.beta2 * mom.v + (1.0 - state.beta2) * p->grad.cwiseAbs2();
    p->value.array() -= state.lr * (mom.m.array() / bc1) /
                        ((mom.v.array() / bc2).sqrt() + state.eps);
    p->zero_grad();
  }
}

}  // namespace apn::nn
