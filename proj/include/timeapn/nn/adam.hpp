#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>

#include "timeapn/nn/tape.hpp"

namespace apn::nn {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;

  struct Moments {
    Matrix m;
    Matrix v;
  };
  std::unordered_map<std::uint64_t, Moments> moments;
};

/// One bias-corrected Adam update over `params`, then clears their gradients.
/// Throws (before touching any parameter) if a gradient is non-finite.
void adam_step(std::span<Parameter* const> params, AdamState& state);

}  // namespace apn::nn
