#pragma once

#include "timeapn/core.hpp"

namespace apn::denorm {

struct DenormInputs {
  Matrix y_bar;       // C x T backbone output
  Matrix delta_mu_t;  // C x T
  Matrix delta_mu_f;  // C x T
  Matrix delta_w;     // C x (T/2 + 1)
  double alpha = 1.0;
};

/// alpha * delta_mu_t + (1 - alpha) * delta_mu_f.
Matrix fuse_means(const Matrix& delta_mu_t, const Matrix& delta_mu_f, double alpha);

/// Per channel: apply_phase_shift(y_bar, delta_w) + fused mean.
Matrix denormalize(const DenormInputs& in);

/// Inverse map: recovers y_bar from y_star given the fused mean and delta_w.
Matrix invert(const Matrix& y_star, const Matrix& delta_mu, const Matrix& delta_w);

}  // namespace apn::denorm
