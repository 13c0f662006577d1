#pragma once

#include <memory>
#include <string>
#include <vector>

#include "timeapn/config.hpp"
#include "timeapn/core.hpp"
#include "timeapn/nn/tape.hpp"
#include "timeapn/rng.hpp"

namespace apn::backbones {

using nn::Parameter;
using nn::Tape;
using nn::Var;

/// Channel-independent forecaster: each row of a B x L input maps to a row of B x T.
class ForecastModel {
 public:
  virtual ~ForecastModel() = default;

  virtual Var forward(Tape& tape, Var x) = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual int lookback() const = 0;
  virtual int horizon() const = 0;

  /// Plain evaluation of forward on C x L.
  Matrix forecast(const Matrix& x);
};

/// y = x W + b. The weight is stored input-major (L x T).
class LinearFM final : public ForecastModel {
 public:
  LinearFM(int lookback, int horizon, Rng& rng);

  Var forward(Tape& tape, Var x) override;
  std::vector<Parameter*> parameters() override { return {&weight, &bias}; }
  int lookback() const override { return static_cast<int>(weight.value.rows()); }
  int horizon() const override { return static_cast<int>(weight.value.cols()); }

  Parameter weight;
  Parameter bias;
};

class MlpFM final : public ForecastModel {
 public:
  MlpFM(int lookback, int hidden, int horizon, Rng& rng);

  Var forward(Tape& tape, Var x) override;
  std::vector<Parameter*> parameters() override { return {&w1, &b1, &w2, &b2}; }
  int lookback() const override { return static_cast<int>(w1.value.rows()); }
  int horizon() const override { return static_cast<int>(w2.value.cols()); }

  Parameter w1;
  Parameter b1;
  Parameter w2;
  Parameter b2;
};

std::unique_ptr<ForecastModel> make_backbone(const ExperimentConfig& config, Rng& rng);

/// Instance normalisation with a learnable per-channel affine (gamma, delta).
class RevIn {
 public:
  static constexpr double kStdFloor = 1e-5;
  static constexpr double kAffineEps = 1e-10;

  explicit RevIn(int channels);

  struct Stats {
    Matrix mean;  // B x 1
    Matrix std;   // B x 1
  };

  /// Window statistics of each row, with the std floor applied.
  static Stats statistics(const Matrix& x);

  /// (x - mean) / std * gamma[c] + delta[c]; channel_of_row[b] selects c.
  Var normalize(Tape& tape, Var x, const Stats& stats, const std::vector<int>& channel_of_row);
  /// ((y - delta[c]) / (gamma[c] + eps)) * std + mean.
  Var denormalize(Tape& tape, Var y, const Stats& stats, const std::vector<int>& channel_of_row);

  int channels() const { return static_cast<int>(gamma.value.cols()); }
  std::vector<Parameter*> parameters() { return {&gamma, &delta}; }

  Parameter gamma;  // 1 x C
  Parameter delta;  // 1 x C
};

/// Normalise, forecast, de-normalise one C x L window.
Matrix revin_wrap(ForecastModel& model, RevIn& revin, const Matrix& x);

}  // namespace apn::backbones
