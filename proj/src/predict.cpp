#include "timeapn/predict.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "timeapn/nn/ops.hpp"
#include "timeapn/spectral.hpp"

namespace apn::predict {

namespace {

Matrix fan_in_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols, double fan_in) {
  return rng.uniform_matrix(rows, cols, 1.0 / std::sqrt(fan_in));
}

Matrix endpoint_mask(int out_bins, int horizon) {
  Matrix m = Matrix::Ones(1, out_bins);
  m(0, 0) = 0.0;
  if (horizon % 2 == 0) m(0, out_bins - 1) = 0.0;
  return m;
}

void require_cols(Var v, int n, const char* what) {
  if (v.cols() != n) {
    throw Error(std::string(what) + ": expected " + std::to_string(n) + " columns, got " +
                std::to_string(v.cols()));
  }
}

}  // namespace

MeanHead::MeanHead(int lookback_, int hidden, int horizon_, Rng& rng, const std::string& prefix)
    : lookback(lookback_),
      horizon(horizon_),
      w1(prefix + ".w1", fan_in_uniform(rng, 2 * lookback_, hidden, 2.0 * lookback_)),
      b1(prefix + ".b1", fan_in_uniform(rng, 1, hidden, 2.0 * lookback_)),
      w2(prefix + ".w2", Matrix::Zero(hidden, horizon_)),
      b2(prefix + ".b2", Matrix::Zero(1, horizon_)) {}

int phase_depth(int n) {
  int d = 0;
  while ((1 << d) < n) ++d;
  return std::max(d, 1);
}

PhaseHead::PhaseHead(int lookback, int width, int horizon_, Rng& rng, const std::string& prefix)
    : in_bins(lookback / 2 + 1),
      out_bins(horizon_ / 2 + 1),
      horizon(horizon_),
      proj_w(prefix + ".proj_w", Matrix::Zero(lookback / 2 + 1, horizon_ / 2 + 1)),
      proj_b(prefix + ".proj_b", Matrix::Zero(1, horizon_ / 2 + 1)) {
  const int depth = phase_depth(in_bins);
  conv_w.reserve(static_cast<std::size_t>(depth));
  conv_b.reserve(static_cast<std::size_t>(depth));
  for (int l = 0; l < depth; ++l) {
    const int cin = l == 0 ? 1 : width;
    const int cout = l == depth - 1 ? 1 : width;
    const double fan_in = 3.0 * cin;
    const std::string name = prefix + ".conv" + std::to_string(l);
    conv_w.emplace_back(name + ".w", fan_in_uniform(rng, 3 * cin, cout, fan_in));
    conv_b.emplace_back(name + ".b", fan_in_uniform(rng, 1, cout, fan_in));
  }
}

int PhaseHead::receptive_field() const { return 1 + 2 * ((1 << depth()) - 1); }

std::vector<Parameter*> PhaseHead::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t l = 0; l < conv_w.size(); ++l) {
    out.push_back(&conv_w[l]);
    out.push_back(&conv_b[l]);
  }
  out.push_back(&proj_w);
  out.push_back(&proj_b);
  return out;
}

MppmParams::MppmParams(int lookback, int horizon, int mean_hidden, int phase_width,
                       double alpha_init, double beta_init, Rng& rng)
    : mean_head_t(lookback, mean_hidden, horizon, rng, "mppm.mean_t"),
      mean_head_f(lookback, mean_hidden, horizon, rng, "mppm.mean_f"),
      phase_head(lookback, phase_width, horizon, rng, "mppm.phase"),
      alpha("mppm.alpha", Matrix::Constant(1, 1, alpha_init)),
      beta("mppm.beta", Matrix::Constant(1, 1, std::clamp(beta_init, 0.0, 1.0))) {}

void MppmParams::project() { beta.value(0, 0) = std::clamp(beta.value(0, 0), 0.0, 1.0); }

std::vector<Parameter*> MppmParams::parameters() {
  std::vector<Parameter*> out = mean_head_t.parameters();
  for (Parameter* p : mean_head_f.parameters()) out.push_back(p);
  for (Parameter* p : phase_head.parameters()) out.push_back(p);
  out.push_back(&alpha);
  out.push_back(&beta);
  return out;
}

Var predict_mean(Tape& tape, Var mu, Var x, MeanHead& head) {
  require_cols(mu, head.lookback, "predict_mean(mu)");
  require_cols(x, head.lookback, "predict_mean(x)");
  if (mu.rows() != x.rows()) throw Error("predict_mean: row count mismatch");
  Var a = nn::row_mean(mu);
  Var centered = nn::add_col(mu, nn::scale(a, -1.0));
  Var h = nn::relu(nn::affine(nn::concat_cols(centered, x), tape.parameter(head.w1),
                              tape.parameter(head.b1)));
  Var out = nn::affine(h, tape.parameter(head.w2), tape.parameter(head.b2));
  return nn::add_col(out, a);
}

Var predict_phase(Tape& tape, Var w_bar, PhaseHead& head) {
  require_cols(w_bar, head.in_bins, "predict_phase");
  const Eigen::Index batch = w_bar.rows();
  Var h = nn::reshape(w_bar, batch * head.in_bins, 1);
  const int depth = head.depth();
  for (int l = 0; l < depth; ++l) {
    Var z = nn::conv1d_causal(h, tape.parameter(head.conv_w[static_cast<std::size_t>(l)]),
                              tape.parameter(head.conv_b[static_cast<std::size_t>(l)]),
                              head.in_bins, 1 << l);
    if (l == depth - 1) {
      h = z;
    } else if (l == 0) {
      h = nn::relu(z);
    } else {
      h = nn::add(h, nn::relu(z));
    }
  }
  h = nn::reshape(h, batch, head.in_bins);
  Var raw = nn::affine(h, tape.parameter(head.proj_w), tape.parameter(head.proj_b));
  Matrix mask = endpoint_mask(head.out_bins, head.horizon).replicate(batch, 1);
  return nn::mul_const(nn::wrap(raw), std::move(mask));
}

std::vector<double> predict_mean(std::span<const double> mu, std::span<const double> x,
                                 MeanHead& head) {
  if (mu.size() != x.size()) throw Error("predict_mean: mu and x lengths differ");
  Tape tape;
  const auto n = static_cast<Eigen::Index>(mu.size());
  Var vm = tape.constant(Eigen::Map<const Matrix>(mu.data(), 1, n));
  Var vx = tape.constant(Eigen::Map<const Matrix>(x.data(), 1, n));
  const Matrix& out = predict_mean(tape, vm, vx, head).value();
  return {out.data(), out.data() + out.size()};
}

std::vector<double> predict_phase(std::span<const double> w_bar, PhaseHead& head) {
  Tape tape;
  const auto n = static_cast<Eigen::Index>(w_bar.size());
  Var vw = tape.constant(Eigen::Map<const Matrix>(w_bar.data(), 1, n));
  const Matrix& out = predict_phase(tape, vw, head).value();
  return {out.data(), out.data() + out.size()};
}

MppmOutput mppm_forward(const normalize::NormBundle& bundle, const SeriesTensor& x,
                        MppmParams& params) {
  if (bundle.mean_t.rows() != x.channels() || bundle.mean_t.cols() != x.length()) {
    throw Error("mppm_forward: bundle does not match the window shape");
  }
  Tape tape;
  Var vx = tape.constant(x.data());
  Var dmu_t = predict_mean(tape, tape.constant(bundle.mean_t), vx, params.mean_head_t);
  Var dmu_f = predict_mean(tape, tape.constant(bundle.mean_f), vx, params.mean_head_f);
  Var dw = predict_phase(tape, tape.constant(bundle.phase_t), params.phase_head);
  return {dmu_t.value(), dmu_f.value(), dw.value()};
}

}  // namespace apn::predict
