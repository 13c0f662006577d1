#pragma once

#include <memory>
#include <span>
#include <vector>

#include "timeapn/backbones.hpp"
#include "timeapn/config.hpp"
#include "timeapn/core.hpp"
#include "timeapn/nn/ops.hpp"
#include "timeapn/predict.hpp"
#include "timeapn/wavelet.hpp"

namespace apn::pipeline {

using nn::Parameter;
using nn::Tape;
using nn::Var;

/// The four filter-bank taps as trainable 1 x F rows.
struct LearnableFilters {
  explicit LearnableFilters(const wavelet::WaveletFilters& init);

  Parameter dec_lo;
  Parameter dec_hi;
  Parameter rec_lo;
  Parameter rec_hi;

  wavelet::WaveletFilters snapshot() const;
  std::vector<Parameter*> parameters() { return {&dec_lo, &dec_hi, &rec_lo, &rec_hi}; }
};

/// Everything a run trains. Only the parts used by config.norm are allocated.
struct Model {
  Model(const ExperimentConfig& config, int channels);

  ExperimentConfig config;
  int channels;
  std::unique_ptr<predict::MppmParams> mppm;
  std::unique_ptr<LearnableFilters> filters;
  std::unique_ptr<backbones::ForecastModel> fm;
  std::unique_ptr<backbones::RevIn> revin;

  /// MPPM heads, alpha, beta and filter taps (empty unless norm = timeapn).
  std::vector<Parameter*> stage1_parameters();
  /// Backbone plus RevIN affine.
  std::vector<Parameter*> forecast_parameters();
  std::vector<Parameter*> all_parameters();
};

/// Windows flattened to one row per (window, channel), window-major.
struct Batch {
  Matrix x;  // B x L
  Matrix y;  // B x T
  std::vector<int> channel;
};

Batch make_batch(std::span<const WindowPair> windows, std::span<const std::size_t> order);
Batch make_batch(std::span<const WindowPair> windows);

/// Non-stationary factors of a batch of look-back rows.
struct Factors {
  Var mean_t;      // B x L
  Var mean_f;      // B x L
  Var phase_t;     // B x (L/2 + 1)
  Var stationary;  // alpha-fused, B x L
  Var delta_mu_t;  // B x T
  Var delta_mu_f;  // B x T
  Var delta_mu;    // alpha-fused, B x T
  Var delta_w;     // B x (T/2 + 1)
};

/// Frequency-branch mean of each row with the given synthesis/analysis taps.
Var freq_mean(Var x, Var dec_lo, Var dec_hi, Var rec_lo, Var rec_hi, int s);

/// Normalisation and MPPM on the tape; requires model.mppm.
Factors timeapn_factors(Tape& tape, Var x, Model& model);

/// y* = phase_shift(y_bar, delta_w) + delta_mu.
Var denormalize(Var y_bar, Var delta_mu, Var delta_w);

/// Full prediction for the configured normalisation mode.
Var predict(Tape& tape, Model& model, const Batch& batch);

/// Detached MPPM outputs per row, used when the MPPM is frozen.
struct FrozenFactors {
  Matrix stationary;
  Matrix delta_mu;
  Matrix delta_w;
};

FrozenFactors freeze_factors(Model& model, const Matrix& x);

/// Prediction from precomputed factors (norm = timeapn only).
Var predict_frozen(Tape& tape, Model& model, const Matrix& stationary, const Matrix& delta_mu,
                   const Matrix& delta_w);

}  // namespace apn::pipeline
