#include "timeapn/pipeline.hpp"

#include <numeric>

#include "timeapn/normalize.hpp"
#include "timeapn/rng.hpp"

namespace apn::pipeline {

namespace {

Matrix row_of(const std::vector<double>& v) {
  return Eigen::Map<const Matrix>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
}

std::vector<double> vec_of(const Parameter& p) {
  return {p.value.data(), p.value.data() + p.value.size()};
}

Var one_minus(Var a) { return nn::shift(nn::scale(a, -1.0), 1.0); }

/// alpha * a + (1 - alpha) * b, written so that alpha = 1 returns a exactly.
Var fuse(Var alpha, Var a, Var b) {
  return nn::add(nn::scalar_mul(alpha, a), nn::scalar_mul(one_minus(alpha), b));
}

}  // namespace

LearnableFilters::LearnableFilters(const wavelet::WaveletFilters& init)
    : dec_lo("filters.dec_lo", row_of(init.dec_lo)),
      dec_hi("filters.dec_hi", row_of(init.dec_hi)),
      rec_lo("filters.rec_lo", row_of(init.rec_lo)),
      rec_hi("filters.rec_hi", row_of(init.rec_hi)) {
  init.check();
}

wavelet::WaveletFilters LearnableFilters::snapshot() const {
  return {vec_of(dec_lo), vec_of(dec_hi), vec_of(rec_lo), vec_of(rec_hi)};
}

Model::Model(const ExperimentConfig& cfg, int channels_) : config(cfg), channels(channels_) {
  config.validate();
  if (channels < 1) throw Error("Model: channel count must be positive");
  Rng rng(config.seed);
  if (config.norm == NormMode::TimeApn) {
    mppm = std::make_unique<predict::MppmParams>(config.lookback, config.horizon,
                                                 config.mean_hidden, config.phase_width,
                                                 config.alpha_init, config.beta_init, rng);
    filters = std::make_unique<LearnableFilters>(wavelet::WaveletFilters::bior35());
  }
  fm = backbones::make_backbone(config, rng);
  if (config.norm == NormMode::RevIn) revin = std::make_unique<backbones::RevIn>(channels);
}

std::vector<Parameter*> Model::stage1_parameters() {
  std::vector<Parameter*> out;
  if (mppm) out = mppm->parameters();
  if (filters) {
    for (Parameter* p : filters->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<Parameter*> Model::forecast_parameters() {
  std::vector<Parameter*> out = fm->parameters();
  if (revin) {
    for (Parameter* p : revin->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<Parameter*> Model::all_parameters() {
  std::vector<Parameter*> out = stage1_parameters();
  for (Parameter* p : forecast_parameters()) out.push_back(p);
  return out;
}

Batch make_batch(std::span<const WindowPair> windows, std::span<const std::size_t> order) {
  if (order.empty()) throw Error("make_batch: empty batch");
  const auto& first = windows[order[0]];
  const int c = first.x.channels();
  const int l = first.x.length();
  const int t = first.y.length();
  Batch b{Matrix(static_cast<Eigen::Index>(order.size()) * c, l),
          Matrix(static_cast<Eigen::Index>(order.size()) * c, t), {}};
  b.channel.reserve(order.size() * static_cast<std::size_t>(c));
  Eigen::Index row = 0;
  for (std::size_t i : order) {
    const auto& w = windows[i];
    if (w.x.channels() != c || w.x.length() != l || w.y.length() != t) {
      throw Error("make_batch: windows have inconsistent shapes");
    }
    b.x.middleRows(row, c) = w.x.data();
    b.y.middleRows(row, c) = w.y.data();
    for (int ch = 0; ch < c; ++ch) b.channel.push_back(ch);
    row += c;
  }
  return b;
}

Batch make_batch(std::span<const WindowPair> windows) {
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return make_batch(windows, order);
}

Var freq_mean(Var x, Var dec_lo, Var dec_hi, Var rec_lo, Var rec_hi, int s) {
  const int sb = normalize::band_half_width(s);
  Var lo = nn::sliding_mean(nn::dwt_band(x, dec_lo), sb);
  Var hi = nn::sliding_mean(nn::dwt_band(x, dec_hi), sb);
  return nn::idwt(lo, hi, rec_lo, rec_hi, static_cast<int>(x.cols()));
}

Factors timeapn_factors(Tape& tape, Var x, Model& model) {
  if (!model.mppm || !model.filters) throw Error("timeapn_factors: model has no MPPM");
  const int s = model.config.window_half_width;
  const int l = static_cast<int>(x.cols());
  auto& f = *model.filters;
  auto& mp = *model.mppm;

  Factors out;
  out.mean_t = nn::sliding_mean(x, s);
  Var xt = nn::sub(x, out.mean_t);
  out.phase_t = nn::phase(nn::dft(xt));

  Var dec_lo = tape.parameter(f.dec_lo);
  Var dec_hi = tape.parameter(f.dec_hi);
  Var rec_lo = tape.parameter(f.rec_lo);
  Var rec_hi = tape.parameter(f.rec_hi);
  const int sb = normalize::band_half_width(s);
  Var lo = nn::dwt_band(x, dec_lo);
  Var hi = nn::dwt_band(x, dec_hi);
  Var mlo = nn::sliding_mean(lo, sb);
  Var mhi = nn::sliding_mean(hi, sb);
  out.mean_f = nn::idwt(mlo, mhi, rec_lo, rec_hi, l);
  Var xf = nn::idwt(nn::sub(lo, mlo), nn::sub(hi, mhi), rec_lo, rec_hi, l);

  Var alpha = tape.parameter(mp.alpha);
  out.stationary = fuse(alpha, xt, xf);
  out.delta_mu_t = predict::predict_mean(tape, out.mean_t, x, mp.mean_head_t);
  out.delta_mu_f = predict::predict_mean(tape, out.mean_f, x, mp.mean_head_f);
  out.delta_mu = fuse(alpha, out.delta_mu_t, out.delta_mu_f);
  out.delta_w = predict::predict_phase(tape, out.phase_t, mp.phase_head);
  return out;
}

Var denormalize(Var y_bar, Var delta_mu, Var delta_w) {
  return nn::add(nn::phase_shift(y_bar, delta_w), delta_mu);
}

Var predict(Tape& tape, Model& model, const Batch& batch) {
  Var x = tape.constant(batch.x);
  switch (model.config.norm) {
    case NormMode::None:
      return model.fm->forward(tape, x);
    case NormMode::RevIn: {
      const auto stats = backbones::RevIn::statistics(batch.x);
      Var z = model.revin->normalize(tape, x, stats, batch.channel);
      return model.revin->denormalize(tape, model.fm->forward(tape, z), stats, batch.channel);
    }
    case NormMode::TimeApn: {
      const Factors f = timeapn_factors(tape, x, model);
      return denormalize(model.fm->forward(tape, f.stationary), f.delta_mu, f.delta_w);
    }
  }
  throw Error("predict: unknown normalisation mode");
}

FrozenFactors freeze_factors(Model& model, const Matrix& x) {
  Tape tape;
  const Factors f = timeapn_factors(tape, tape.constant(x), model);
  return {f.stationary.value(), f.delta_mu.value(), f.delta_w.value()};
}

Var predict_frozen(Tape& tape, Model& model, const Matrix& stationary, const Matrix& delta_mu,
                   const Matrix& delta_w) {
  Var y_bar = model.fm->forward(tape, tape.constant(stationary));
  return denormalize(y_bar, tape.constant(delta_mu), tape.constant(delta_w));
}

}  // namespace apn::pipeline
