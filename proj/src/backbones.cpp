#include "timeapn/backbones.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "timeapn/nn/ops.hpp"

namespace apn::backbones {

namespace {

Matrix fan_in_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols, double fan_in) {
  return rng.uniform_matrix(rows, cols, 1.0 / std::sqrt(fan_in));
}

void require_cols(Var x, int n, const char* who) {
  if (x.cols() != n) {
    throw Error(std::string(who) + ": expected " + std::to_string(n) + " input columns, got " +
                std::to_string(x.cols()));
  }
}

std::vector<int> channel_rows(int channels) {
  std::vector<int> idx(static_cast<std::size_t>(channels));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

Matrix ForecastModel::forecast(const Matrix& x) {
  Tape tape;
  return forward(tape, tape.constant(x)).value();
}

LinearFM::LinearFM(int lookback, int horizon, Rng& rng)
    : weight("fm.weight", fan_in_uniform(rng, lookback, horizon, lookback)),
      bias("fm.bias", fan_in_uniform(rng, 1, horizon, lookback)) {}

Var LinearFM::forward(Tape& tape, Var x) {
  require_cols(x, lookback(), "LinearFM");
  return nn::affine(x, tape.parameter(weight), tape.parameter(bias));
}

MlpFM::MlpFM(int lookback, int hidden, int horizon, Rng& rng)
    : w1("fm.w1", fan_in_uniform(rng, lookback, hidden, lookback)),
      b1("fm.b1", fan_in_uniform(rng, 1, hidden, lookback)),
      w2("fm.w2", fan_in_uniform(rng, hidden, horizon, hidden)),
      b2("fm.b2", fan_in_uniform(rng, 1, horizon, hidden)) {}

Var MlpFM::forward(Tape& tape, Var x) {
  require_cols(x, lookback(), "MlpFM");
  Var h = nn::relu(nn::affine(x, tape.parameter(w1), tape.parameter(b1)));
  return nn::affine(h, tape.parameter(w2), tape.parameter(b2));
}

std::unique_ptr<ForecastModel> make_backbone(const ExperimentConfig& config, Rng& rng) {
  switch (config.backbone) {
    case Backbone::Linear:
      return std::make_unique<LinearFM>(config.lookback, config.horizon, rng);
    case Backbone::Mlp:
      return std::make_unique<MlpFM>(config.lookback, config.mlp_hidden, config.horizon, rng);
  }
  throw Error("make_backbone: unknown backbone");
}

RevIn::RevIn(int channels)
    : gamma("revin.gamma", Matrix::Ones(1, channels)),
      delta("revin.delta", Matrix::Zero(1, channels)) {}

RevIn::Stats RevIn::statistics(const Matrix& x) {
  Stats s{Matrix(x.rows(), 1), Matrix(x.rows(), 1)};
  const double n = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double m = x.row(r).sum() / n;
    const double var = (x.row(r).array() - m).square().sum() / n;
    s.mean(r, 0) = m;
    s.std(r, 0) = std::max(std::sqrt(var), kStdFloor);
  }
  return s;
}

Var RevIn::normalize(Tape& tape, Var x, const Stats& stats,
                     const std::vector<int>& channel_of_row) {
  Var z = nn::div_col(nn::add_col(x, tape.constant(-stats.mean)), tape.constant(stats.std));
  Var g = nn::gather_rows(tape.parameter(gamma), channel_of_row);
  Var d = nn::gather_rows(tape.parameter(delta), channel_of_row);
  return nn::add_col(nn::mul_col(z, g), d);
}

Var RevIn::denormalize(Tape& tape, Var y, const Stats& stats,
                       const std::vector<int>& channel_of_row) {
  Var g = nn::shift(nn::gather_rows(tape.parameter(gamma), channel_of_row), kAffineEps);
  Var d = nn::gather_rows(tape.parameter(delta), channel_of_row);
  Var u = nn::div_col(nn::add_col(y, nn::scale(d, -1.0)), g);
  return nn::add_col(nn::mul_col(u, tape.constant(stats.std)), tape.constant(stats.mean));
}

Matrix revin_wrap(ForecastModel& model, RevIn& revin, const Matrix& x) {
  if (x.rows() != revin.channels()) throw Error("revin_wrap: channel count mismatch");
  Tape tape;
  const auto stats = RevIn::statistics(x);
  const auto idx = channel_rows(revin.channels());
  Var z = revin.normalize(tape, tape.constant(x), stats, idx);
  return revin.denormalize(tape, model.forward(tape, z), stats, idx).value();
}

}  // namespace apn::backbones
