#include "timeapn/nn/losses.hpp"

#include <cmath>
#include <string>

#include "timeapn/spectral.hpp"

namespace apn::nn {

namespace {

void check_same(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()) + ")");
  }
  if (a.size() == 0) throw Error(std::string(what) + ": empty input");
}

Matrix scaled_amplitudes(const Matrix& y) {
  const auto n = static_cast<std::size_t>(y.cols());
  Matrix out(y.rows(), static_cast<Eigen::Index>(spectral::half_size(static_cast<int>(n))));
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const auto spec = spectral::dft({y.row(r).data(), n});
    for (Eigen::Index k = 0; k < out.cols(); ++k) {
      out(r, k) = std::abs(spec.bins[static_cast<std::size_t>(k)]) / static_cast<double>(n);
    }
  }
  return out;
}

}  // namespace

double loss_forecast(const Matrix& y_star, const Matrix& y) {
  check_same(y_star, y, "loss_forecast");
  return (y_star - y).squaredNorm() / static_cast<double>(y.size());
}

double loss_mean(const Matrix& delta_mu, const Matrix& mu_y) {
  check_same(delta_mu, mu_y, "loss_mean");
  return (delta_mu - mu_y).squaredNorm() / static_cast<double>(mu_y.size());
}

double loss_phase(const Matrix& delta_w, const Matrix& w_y) {
  check_same(delta_w, w_y, "loss_phase");
  double acc = 0.0;
  for (Eigen::Index r = 0; r < w_y.rows(); ++r) {
    for (Eigen::Index c = 0; c < w_y.cols(); ++c) {
      const double d = spectral::wrap_phase(delta_w(r, c) - w_y(r, c));
      acc += d * d;
    }
  }
  return acc / static_cast<double>(w_y.size());
}

double loss_amplitude(const Matrix& y_star, const Matrix& y) {
  check_same(y_star, y, "loss_amplitude");
  const Matrix a = scaled_amplitudes(y_star);
  const Matrix b = scaled_amplitudes(y);
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

Var loss_forecast(Var y_star, Var y) {
  check_same(y_star.value(), y.value(), "loss_forecast");
  return mse(y_star, y);
}

Var loss_mean(Var delta_mu, Var mu_y) {
  check_same(delta_mu.value(), mu_y.value(), "loss_mean");
  return mse(delta_mu, mu_y);
}

Var loss_phase(Var delta_w, Var w_y) {
  check_same(delta_w.value(), w_y.value(), "loss_phase");
  return mean_all(square(wrapped_residual(delta_w, w_y)));
}

Var loss_amplitude(Var y_star, Var y) {
  check_same(y_star.value(), y.value(), "loss_amplitude");
  const double inv_t = 1.0 / static_cast<double>(y.cols());
  Var a = scale(complex_abs(dft(y_star)), inv_t);
  Var b = scale(complex_abs(dft(y)), inv_t);
  return mse(a, b);
}

}  // namespace apn::nn
