#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "timeapn/nn/ops.hpp"
#include "timeapn/nn/tape.hpp"
#include "timeapn/rng.hpp"

namespace support {

using apn::Matrix;
using apn::nn::Parameter;
using apn::nn::Tape;
using apn::nn::Var;

struct GradReport {
  double worst = 0.0;
  std::string where;
};

/// Central-difference check of every parameter of a scalar loss. The error of one parameter
/// tensor is ||numeric - analytic|| / max(||numeric||, ||analytic||, floor).
template <typename F>
GradReport gradcheck(const std::vector<Parameter*>& params, F&& loss, double eps = 1e-5,
                     double floor = 1e-8) {
  for (auto* p : params) p->zero_grad();
  {
    Tape tape;
    Var l = loss(tape);
    tape.backward(l);
  }
  std::vector<Matrix> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  auto eval = [&] {
    Tape tape;
    return loss(tape).value()(0, 0);
  };
  GradReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter* p = params[i];
    Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      const double saved = p->value.data()[k];
      p->value.data()[k] = saved + eps;
      const double up = eval();
      p->value.data()[k] = saved - eps;
      const double down = eval();
      p->value.data()[k] = saved;
      numeric.data()[k] = (up - down) / (2.0 * eps);
    }
    const double denom = std::max({numeric.norm(), analytic[i].norm(), floor});
    const double err = (numeric - analytic[i]).norm() / denom;
    if (report.where.empty() || err > report.worst) {
      report.worst = err;
      report.where = p->name();
    }
  }
  for (auto* p : params) p->zero_grad();
  return report;
}

/// Random linear functional of a node, so every output entry reaches the loss.
inline Var project(Var out, apn::Rng& rng) {
  Matrix w = rng.normal_matrix(out.rows(), out.cols());
  return apn::nn::mean_all(apn::nn::mul_const(out, std::move(w)));
}

inline std::vector<double> random_vector(apn::Rng& rng, int n, double scale = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace support
