#include "timeapn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "timeapn/nn/adam.hpp"
#include "timeapn/nn/losses.hpp"
#include "timeapn/normalize.hpp"
#include "timeapn/rng.hpp"
#include "timeapn/spectral.hpp"

namespace apn::train {

using nn::Tape;
using nn::Var;

namespace {

constexpr std::size_t kEvalChunk = 64;
constexpr std::uint64_t kStage1Stream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kStage2Stream = 0xc2b2ae3d27d4eb4fULL;

std::span<const double> row_span(const Matrix& m, Eigen::Index r) {
  return {m.row(r).data(), static_cast<std::size_t>(m.cols())};
}

Matrix sliding_mean_rows(const Matrix& x, int s) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto m = normalize::sliding_mean(row_span(x, r), s);
    out.row(r) = Eigen::Map<const Eigen::RowVectorXd>(m.data(), x.cols());
  }
  return out;
}

Matrix phase_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols() / 2 + 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto ap = spectral::amp_phase(spectral::dft(row_span(x, r)));
    out.row(r) = Eigen::Map<const Eigen::RowVectorXd>(ap.phase.data(), out.cols());
  }
  return out;
}

/// Rows of a flattened batch that belong to the given windows.
Matrix gather_rows(const Matrix& all, std::span<const std::size_t> order, int channels) {
  Matrix out(static_cast<Eigen::Index>(order.size()) * channels, all.cols());
  Eigen::Index row = 0;
  for (std::size_t i : order) {
    out.middleRows(row, channels) = all.middleRows(static_cast<Eigen::Index>(i) * channels, channels);
    row += channels;
  }
  return out;
}

std::vector<Matrix> snapshot(const std::vector<nn::Parameter*>& params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(p->value);
  return out;
}

void restore(const std::vector<nn::Parameter*>& params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

/// Precomputed data-only targets for every (window, channel) row.
struct Stage1Data {
  pipeline::Batch all;
  Matrix mean_t;
  Matrix phase;
};

Stage1Data prepare_stage1(const std::vector<WindowPair>& windows, const ExperimentConfig& cfg) {
  Stage1Data d{pipeline::make_batch(windows), {}, {}};
  d.mean_t = sliding_mean_rows(d.all.y, cfg.window_half_width);
  d.phase = phase_target(d.all.x, d.all.y, cfg.window_half_width, cfg.phase_target);
  return d;
}

/// Unweighted factor loss of one batch, recorded on `tape`.
Var factor_loss(Tape& tape, pipeline::Model& model, const Matrix& x, const Matrix& y,
                const Matrix& mean_t, const Matrix& phase) {
  const auto f = pipeline::timeapn_factors(tape, tape.constant(x), model);
  const auto& lf = *model.filters;
  Var mean_f = pipeline::freq_mean(tape.constant(y), tape.constant(lf.dec_lo.value),
                                   tape.constant(lf.dec_hi.value), tape.constant(lf.rec_lo.value),
                                   tape.constant(lf.rec_hi.value), model.config.window_half_width);
  Var target_t = tape.constant(mean_t);
  Var target_f = tape.constant(mean_f.value());
  Var loss = nn::add(nn::loss_mean(f.delta_mu_t, target_t), nn::loss_mean(f.delta_mu_f, target_f));
  loss = nn::add(loss, nn::loss_mean(f.delta_mu, target_t));
  return nn::add(loss, nn::loss_phase(f.delta_w, tape.constant(phase)));
}

double stage1_loss_prepared(pipeline::Model& model, const Stage1Data& d, std::size_t windows) {
  const int c = model.channels;
  double acc = 0.0;
  for (std::size_t begin = 0; begin < windows; begin += kEvalChunk) {
    const std::size_t end = std::min(windows, begin + kEvalChunk);
    const auto r0 = static_cast<Eigen::Index>(begin) * c;
    const auto nr = static_cast<Eigen::Index>(end - begin) * c;
    Tape tape;
    Var loss = factor_loss(tape, model, d.all.x.middleRows(r0, nr), d.all.y.middleRows(r0, nr),
                           d.mean_t.middleRows(r0, nr), d.phase.middleRows(r0, nr));
    acc += loss.value()(0, 0) * static_cast<double>(end - begin);
  }
  return acc / static_cast<double>(windows);
}

struct Stopper {
  explicit Stopper(int patience_) : patience(patience_) {}

  int patience;
  double best = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int waited = 0;
  std::vector<Matrix> best_values;

  /// Returns true when training should stop.
  bool update(double val, int epoch, const std::vector<nn::Parameter*>& params) {
    if (val < best) {
      best = val;
      best_epoch = epoch;
      waited = 0;
      if (patience > 0) best_values = snapshot(params);
      return false;
    }
    ++waited;
    return patience > 0 && waited >= patience;
  }
};

void require_finite(double v, const char* stage, int epoch) {
  if (!std::isfinite(v)) {
    throw Error(std::string(stage) + " diverged: non-finite loss at epoch " + std::to_string(epoch));
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Stage1Targets stage1_targets(const WindowPair& pair, const wavelet::WaveletFilters& filters,
                             int s) {
  const int c = pair.y.channels();
  const int t = pair.y.length();
  Stage1Targets out{Matrix(c, t), Matrix(c, t), Matrix(c, t / 2 + 1)};
  for (int ch = 0; ch < c; ++ch) {
    const auto td = normalize::time_domain_normalize(pair.y.channel(ch), s);
    const auto fd = normalize::freq_domain_normalize(pair.y.channel(ch), filters, s);
    out.mean_t.row(ch) = Eigen::Map<const Eigen::RowVectorXd>(td.mean.data(), t);
    out.mean_f.row(ch) = Eigen::Map<const Eigen::RowVectorXd>(fd.mean.data(), t);
    out.phase.row(ch) = Eigen::Map<const Eigen::RowVectorXd>(td.phase.data(), t / 2 + 1);
  }
  return out;
}

Matrix lookback_phase(const Matrix& x, int s, int horizon) {
  const Matrix resid = x - sliding_mean_rows(x, s);
  const auto l = resid.cols();
  Matrix tail(x.rows(), horizon);
  for (Eigen::Index n = 0; n < horizon; ++n) {
    tail.col(n) = resid.col(l - 1 - (horizon - 1 - n) % l);
  }
  return phase_rows(tail);
}

Matrix phase_target(const Matrix& x, const Matrix& y, int s, PhaseTarget mode) {
  Matrix w = phase_rows(y - sliding_mean_rows(y, s));
  if (mode == PhaseTarget::Drift) {
    w -= lookback_phase(x, s, static_cast<int>(y.cols()));
    w = w.unaryExpr([](double v) { return spectral::wrap_phase(v); });
  }
  return w;
}

double stage1_loss(pipeline::Model& model, const std::vector<WindowPair>& windows) {
  if (windows.empty()) throw Error("stage1_loss: no windows");
  return stage1_loss_prepared(model, prepare_stage1(windows, model.config), windows.size());
}

StageTrace train_stage1(pipeline::Model& model, const std::vector<WindowPair>& train,
                        const std::vector<WindowPair>& val) {
  if (!model.mppm) throw Error("train_stage1: model has no MPPM (norm is not timeapn)");
  if (train.empty()) throw Error("train_stage1: empty training set");
  if (val.empty()) throw Error("train_stage1: empty validation set");
  const auto t0 = std::chrono::steady_clock::now();
  const auto& cfg = model.config;
  const int c = model.channels;
  const auto params = model.stage1_parameters();
  nn::AdamState adam;
  adam.lr = cfg.learning_rate;
  Rng rng(cfg.seed ^ kStage1Stream);

  const Stage1Data tr = prepare_stage1(train, cfg);
  const Stage1Data va = prepare_stage1(val, cfg);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  StageTrace trace;
  trace.stage = "stage1";
  Stopper stop(cfg.patience);
  for (int epoch = 1; epoch <= cfg.epochs_stage1; ++epoch) {
    rng.shuffle(order);
    double weighted = 0.0;
    double factor = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      Tape tape;
      Var lf = factor_loss(tape, model, gather_rows(tr.all.x, idx, c), gather_rows(tr.all.y, idx, c),
                           gather_rows(tr.mean_t, idx, c), gather_rows(tr.phase, idx, c));
      Var loss = nn::scalar_mul(tape.parameter(model.mppm->beta), lf);
      const double lv = loss.value()(0, 0);
      require_finite(lv, "stage 1", epoch);
      tape.backward(loss);
      try {
        nn::adam_step(params, adam);
      } catch (const Error& e) {
        throw Error(std::string(e.what()) + " (stage 1, epoch " + std::to_string(epoch) + ")");
      }
      model.mppm->project();
      const double w = static_cast<double>(end - begin);
      weighted += lv * w;
      factor += lf.value()(0, 0) * w;
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = weighted / static_cast<double>(order.size());
    st.train_factor_loss = factor / static_cast<double>(order.size());
    st.alpha = model.mppm->alpha_value();
    st.beta = model.mppm->beta_value();
    st.val_factor_loss = stage1_loss_prepared(model, va, val.size());
    st.val_loss = st.beta * st.val_factor_loss;
    require_finite(st.val_loss, "stage 1", epoch);
    trace.epochs.push_back(st);
    if (stop.update(st.val_loss, epoch, params)) {
      trace.early_stopped = true;
      break;
    }
  }
  if (cfg.patience > 0 && !stop.best_values.empty()) restore(params, stop.best_values);
  trace.best_epoch = stop.best_epoch;
  trace.seconds = seconds_since(t0);
  return trace;
}

namespace {

/// Stage-2 inputs for every (window, channel) row; factors are precomputed when the MPPM is
/// frozen.
struct Stage2Data {
  pipeline::Batch all;
  pipeline::FrozenFactors frozen;
};

Stage2Data prepare_stage2(pipeline::Model& model, const std::vector<WindowPair>& windows) {
  Stage2Data d{pipeline::make_batch(windows), {}};
  if (model.config.norm == NormMode::TimeApn) {
    const int c = model.channels;
    const auto rows = d.all.x.rows();
    d.frozen.stationary.resize(rows, d.all.x.cols());
    d.frozen.delta_mu.resize(rows, d.all.y.cols());
    d.frozen.delta_w.resize(rows, d.all.y.cols() / 2 + 1);
    for (std::size_t begin = 0; begin < windows.size(); begin += kEvalChunk) {
      const std::size_t end = std::min(windows.size(), begin + kEvalChunk);
      const auto r0 = static_cast<Eigen::Index>(begin) * c;
      const auto nr = static_cast<Eigen::Index>(end - begin) * c;
      auto f = pipeline::freeze_factors(model, d.all.x.middleRows(r0, nr));
      d.frozen.stationary.middleRows(r0, nr) = f.stationary;
      d.frozen.delta_mu.middleRows(r0, nr) = f.delta_mu;
      d.frozen.delta_w.middleRows(r0, nr) = f.delta_w;
    }
  }
  return d;
}

Var stage2_prediction(Tape& tape, pipeline::Model& model, const Stage2Data& d,
                      std::span<const std::size_t> idx, const Matrix& y_rows) {
  const int c = model.channels;
  if (model.config.norm == NormMode::TimeApn) {
    return pipeline::predict_frozen(tape, model, gather_rows(d.frozen.stationary, idx, c),
                                    gather_rows(d.frozen.delta_mu, idx, c),
                                    gather_rows(d.frozen.delta_w, idx, c));
  }
  pipeline::Batch b{gather_rows(d.all.x, idx, c), y_rows, {}};
  b.channel.reserve(static_cast<std::size_t>(b.x.rows()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (int ch = 0; ch < c; ++ch) b.channel.push_back(ch);
  }
  return pipeline::predict(tape, model, b);
}

Var stage2_objective(pipeline::Model& model, Var y_star, Var y) {
  Var loss = nn::loss_forecast(y_star, y);
  if (model.config.norm == NormMode::TimeApn) {
    const double w = 1.0 - model.mppm->beta_value();
    if (w != 0.0) loss = nn::add(loss, nn::scale(nn::loss_amplitude(y_star, y), w));
  }
  return loss;
}

double stage2_loss_prepared(pipeline::Model& model, const Stage2Data& d, std::size_t windows) {
  const int c = model.channels;
  double acc = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < windows; begin += kEvalChunk) {
    const std::size_t end = std::min(windows, begin + kEvalChunk);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Matrix y = gather_rows(d.all.y, idx, c);
    Tape tape;
    Var pred = stage2_prediction(tape, model, d, idx, y);
    acc += stage2_objective(model, pred, tape.constant(y)).value()(0, 0) *
           static_cast<double>(end - begin);
  }
  return acc / static_cast<double>(windows);
}

}  // namespace

namespace {

StageTrace run_stage2(pipeline::Model& model, const Stage2Data& tr, const Stage2Data& va,
                      std::size_t train_windows, std::size_t val_windows,
                      std::chrono::steady_clock::time_point t0) {
  const auto& cfg = model.config;
  const int c = model.channels;
  const auto params = model.forecast_parameters();
  nn::AdamState adam;
  adam.lr = cfg.learning_rate;
  Rng rng(cfg.seed ^ kStage2Stream);

  std::vector<std::size_t> order(train_windows);
  std::iota(order.begin(), order.end(), std::size_t{0});

  StageTrace trace;
  trace.stage = "stage2";
  Stopper stop(cfg.patience);
  for (int epoch = 1; epoch <= cfg.epochs_stage2; ++epoch) {
    rng.shuffle(order);
    double acc = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Matrix y = gather_rows(tr.all.y, idx, c);
      Tape tape;
      Var pred = stage2_prediction(tape, model, tr, idx, y);
      Var loss = stage2_objective(model, pred, tape.constant(y));
      const double lv = loss.value()(0, 0);
      require_finite(lv, "stage 2", epoch);
      tape.backward(loss);
      try {
        nn::adam_step(params, adam);
      } catch (const Error& e) {
        throw Error(std::string(e.what()) + " (stage 2, epoch " + std::to_string(epoch) + ")");
      }
      acc += lv * static_cast<double>(end - begin);
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = acc / static_cast<double>(order.size());
    st.train_factor_loss = st.train_loss;
    st.val_loss = stage2_loss_prepared(model, va, val_windows);
    st.val_factor_loss = st.val_loss;
    if (model.mppm) {
      st.alpha = model.mppm->alpha_value();
      st.beta = model.mppm->beta_value();
    }
    require_finite(st.val_loss, "stage 2", epoch);
    trace.epochs.push_back(st);
    if (stop.update(st.val_loss, epoch, params)) {
      trace.early_stopped = true;
      break;
    }
  }
  if (cfg.patience > 0 && !stop.best_values.empty()) restore(params, stop.best_values);
  trace.best_epoch = stop.best_epoch;
  trace.seconds = seconds_since(t0);
  return trace;
}

void check_factors(const pipeline::FrozenFactors& f, const pipeline::Batch& b, const char* what) {
  if (f.stationary.rows() != b.x.rows() || f.stationary.cols() != b.x.cols() ||
      f.delta_mu.rows() != b.y.rows() || f.delta_mu.cols() != b.y.cols() ||
      f.delta_w.rows() != b.y.rows() || f.delta_w.cols() != b.y.cols() / 2 + 1) {
    throw Error(std::string("train_stage2: ") + what + " factors do not match the windows");
  }
}

}  // namespace

StageTrace train_stage2(pipeline::Model& model, const std::vector<WindowPair>& train,
                        const std::vector<WindowPair>& val) {
  if (train.empty()) throw Error("train_stage2: empty training set");
  if (val.empty()) throw Error("train_stage2: empty validation set");
  const auto t0 = std::chrono::steady_clock::now();
  const Stage2Data tr = prepare_stage2(model, train);
  const Stage2Data va = prepare_stage2(model, val);
  return run_stage2(model, tr, va, train.size(), val.size(), t0);
}

StageTrace train_stage2(pipeline::Model& model, const std::vector<WindowPair>& train,
                        const std::vector<WindowPair>& val,
                        const pipeline::FrozenFactors& train_factors,
                        const pipeline::FrozenFactors& val_factors) {
  if (model.config.norm != NormMode::TimeApn) {
    throw Error("train_stage2: external factors require norm = timeapn");
  }
  if (train.empty()) throw Error("train_stage2: empty training set");
  if (val.empty()) throw Error("train_stage2: empty validation set");
  const auto t0 = std::chrono::steady_clock::now();
  const Stage2Data tr{pipeline::make_batch(train), train_factors};
  const Stage2Data va{pipeline::make_batch(val), val_factors};
  check_factors(tr.frozen, tr.all, "training");
  check_factors(va.frozen, va.all, "validation");
  return run_stage2(model, tr, va, train.size(), val.size(), t0);
}

Metrics score(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw Error("score: prediction and target shapes differ");
  }
  if (targets.size() == 0) throw Error("score: empty evaluation set");
  const double n = static_cast<double>(targets.size());
  Metrics m;
  m.mse = (predictions - targets).squaredNorm() / n;
  m.mae = (predictions - targets).cwiseAbs().sum() / n;
  return m;
}

Metrics evaluate(pipeline::Model& model, const std::vector<WindowPair>& windows,
                 Matrix* predictions) {
  if (windows.empty()) throw Error("evaluate: empty evaluation set");
  const pipeline::Batch all = pipeline::make_batch(windows);
  const int c = model.channels;
  if (all.x.rows() != static_cast<Eigen::Index>(windows.size()) * c) {
    throw Error("evaluate: windows do not have " + std::to_string(c) + " channels");
  }
  Matrix pred(all.y.rows(), all.y.cols());
  for (std::size_t begin = 0; begin < windows.size(); begin += kEvalChunk) {
    const std::size_t end = std::min(windows.size(), begin + kEvalChunk);
    const auto r0 = static_cast<Eigen::Index>(begin) * c;
    const auto nr = static_cast<Eigen::Index>(end - begin) * c;
    pipeline::Batch b{all.x.middleRows(r0, nr), all.y.middleRows(r0, nr),
                      {all.channel.begin() + r0, all.channel.begin() + r0 + nr}};
    Tape tape;
    pred.middleRows(r0, nr) = pipeline::predict(tape, model, b).value();
  }
  Metrics m = score(pred, all.y);
  m.windows = windows.size();
  if (predictions) *predictions = std::move(pred);
  return m;
}

}  // namespace apn::train
