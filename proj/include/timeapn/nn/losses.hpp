#pragma once

#include "timeapn/core.hpp"
#include "timeapn/nn/ops.hpp"

namespace apn::nn {

// Plain evaluations on C x T (or C x bins) matrices.
double loss_forecast(const Matrix& y_star, const Matrix& y);
double loss_mean(const Matrix& delta_mu, const Matrix& mu_y);
/// mean(wrap(delta_w - w_y)^2).
double loss_phase(const Matrix& delta_w, const Matrix& w_y);
/// MSE between |dft(y*)|/T and |dft(y)|/T, row by row.
double loss_amplitude(const Matrix& y_star, const Matrix& y);

// Recorded forms; all return 1 x 1 nodes.
Var loss_forecast(Var y_star, Var y);
Var loss_mean(Var delta_mu, Var mu_y);
Var loss_phase(Var delta_w, Var w_y);
Var loss_amplitude(Var y_star, Var y);

}  // namespace apn::nn
