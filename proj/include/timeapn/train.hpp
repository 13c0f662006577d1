#pragma once

#include <string>
#include <vector>

#include "timeapn/core.hpp"
#include "timeapn/pipeline.hpp"
#include "timeapn/wavelet.hpp"

namespace apn::train {

/// Supervision for the MPPM derived from one future window.
struct Stage1Targets {
  Matrix mean_t;  // C x T, sliding mean of y
  Matrix mean_f;  // C x T, frequency-branch mean of y
  Matrix phase;   // C x (T/2 + 1), phase of dft(y - mean_t)
};

Stage1Targets stage1_targets(const WindowPair& pair, const wavelet::WaveletFilters& filters,
                             int s);

/// Phase of the look-back residual x - sliding_mean(x) read over its last T samples (tiled
/// when L < T). Subtracted from the absolute target under PhaseTarget::Drift. Rows of x are
/// independent; returns rows x (T/2 + 1).
Matrix lookback_phase(const Matrix& x, int s, int horizon);

/// The phase target actually supervised for a batch of (x, y) rows.
Matrix phase_target(const Matrix& x, const Matrix& y, int s, PhaseTarget mode);

struct EpochStats {
  int epoch = 0;
  /// Mean objective over the epoch's mini-batches (beta-weighted in stage 1).
  double train_loss = 0.0;
  /// Same objective on the validation windows; drives early stopping.
  double val_loss = 0.0;
  /// Stage 1: the unweighted factor losses (without beta). Stage 2: equal to the objective.
  double train_factor_loss = 0.0;
  double val_factor_loss = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct StageTrace {
  std::string stage;
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  bool early_stopped = false;
  double seconds = 0.0;
};

/// Fits MPPM heads, alpha, beta and filter taps on beta * (mean and phase losses).
StageTrace train_stage1(pipeline::Model& model, const std::vector<WindowPair>& train,
                        const std::vector<WindowPair>& val);

/// Fits the forecasting model (and the RevIN affine when present) with everything else frozen.
/// For norm = timeapn the objective adds (1 - beta) * amplitude loss.
StageTrace train_stage2(pipeline::Model& model, const std::vector<WindowPair>& train,
                        const std::vector<WindowPair>& val);

/// Stage 2 with caller-supplied factors (one row per window and channel, window-major), in
/// place of the model's own MPPM outputs. Requires norm = timeapn.
StageTrace train_stage2(pipeline::Model& model, const std::vector<WindowPair>& train,
                        const std::vector<WindowPair>& val,
                        const pipeline::FrozenFactors& train_factors,
                        const pipeline::FrozenFactors& val_factors);

/// Mean unweighted stage-1 factor loss over `windows`.
double stage1_loss(pipeline::Model& model, const std::vector<WindowPair>& windows);

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  std::size_t windows = 0;
};

/// MSE / MAE of model predictions over all windows, channels and steps. When `predictions`
/// is given it receives one (window * C + c) row per prediction.
Metrics evaluate(pipeline::Model& model, const std::vector<WindowPair>& windows,
                 Matrix* predictions = nullptr);

/// Metrics of an explicit prediction matrix against targets of the same shape.
Metrics score(const Matrix& predictions, const Matrix& targets);

// Checkpoints.

/// Writes every parameter of `model` with its config echo and stage tag.
void save_checkpoint(pipeline::Model& model, const std::string& path, int stage);

struct LoadedCheckpoint {
  std::unique_ptr<pipeline::Model> model;
  int stage = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Throws naming the first field of `expected` that the checkpoint disagrees with.
void check_compatible(const ExperimentConfig& stored, const ExperimentConfig& expected);

}  // namespace apn::train
