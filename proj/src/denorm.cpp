#include "timeapn/denorm.hpp"

#include <string>
#include <vector>

#include "timeapn/spectral.hpp"

namespace apn::denorm {

namespace {

void check_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(std::string("denormalize: ") + what + " is " + std::to_string(m.rows()) + "x" +
                std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                std::to_string(cols));
  }
}

Matrix shift_rows(const Matrix& y, const Matrix& delta_w, double sign) {
  Matrix out(y.rows(), y.cols());
  std::vector<double> dw(static_cast<std::size_t>(delta_w.cols()));
  for (Eigen::Index c = 0; c < y.rows(); ++c) {
    for (Eigen::Index k = 0; k < delta_w.cols(); ++k) dw[static_cast<std::size_t>(k)] = sign * delta_w(c, k);
    const auto row = spectral::apply_phase_shift({y.row(c).data(), static_cast<std::size_t>(y.cols())}, dw);
    out.row(c) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), y.cols());
  }
  return out;
}

}  // namespace

Matrix fuse_means(const Matrix& delta_mu_t, const Matrix& delta_mu_f, double alpha) {
  check_shape(delta_mu_f, delta_mu_t.rows(), delta_mu_t.cols(), "delta_mu_f");
  return alpha * delta_mu_t + (1.0 - alpha) * delta_mu_f;
}

Matrix denormalize(const DenormInputs& in) {
  const auto c = in.y_bar.rows();
  const auto t = in.y_bar.cols();
  check_shape(in.delta_mu_t, c, t, "delta_mu_t");
  check_shape(in.delta_mu_f, c, t, "delta_mu_f");
  check_shape(in.delta_w, c, t / 2 + 1, "delta_w");
  return shift_rows(in.y_bar, in.delta_w, 1.0) + fuse_means(in.delta_mu_t, in.delta_mu_f, in.alpha);
}

Matrix invert(const Matrix& y_star, const Matrix& delta_mu, const Matrix& delta_w) {
  check_shape(delta_mu, y_star.rows(), y_star.cols(), "delta_mu");
  check_shape(delta_w, y_star.rows(), y_star.cols() / 2 + 1, "delta_w");
  return shift_rows(y_star - delta_mu, delta_w, -1.0);
}

}  // namespace apn::denorm
