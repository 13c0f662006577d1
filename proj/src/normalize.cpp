#include "timeapn/normalize.hpp"

#include "timeapn/spectral.hpp"

namespace apn::normalize {

std::vector<double> sliding_mean(std::span<const double> x, int s) {
  const int n = static_cast<int>(x.size());
  if (s < 0) throw Error("sliding_mean: negative half-width");
  if (2 * s + 1 > n) {
    throw Error("sliding_mean: window 2s+1=" + std::to_string(2 * s + 1) +
                " larger than series length " + std::to_string(n));
  }
  const double width = 2.0 * s + 1.0;
  std::vector<double> out(x.size());
  for (int t = s; t <= n - 1 - s; ++t) {
    double acc = 0.0;
    for (int h = -s; h <= s; ++h) acc += x[static_cast<std::size_t>(t + h)];
    out[static_cast<std::size_t>(t)] = acc / width;
  }
  for (int t = 0; t < s; ++t) {
    out[static_cast<std::size_t>(t)] = out[static_cast<std::size_t>(s)];
    out[static_cast<std::size_t>(n - 1 - t)] = out[static_cast<std::size_t>(n - 1 - s)];
  }
  return out;
}

MeanNormPhaseResult mean_norm_phase(std::span<const double> x, int s) {
  MeanNormPhaseResult r;
  r.mean = sliding_mean(x, s);
  r.stationary.resize(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) r.stationary[t] = x[t] - r.mean[t];
  r.phase = spectral::amp_phase(spectral::dft(r.stationary)).phase;
  return r;
}

FreqNormResult freq_domain_normalize(std::span<const double> x,
                                     const wavelet::WaveletFilters& f, int s) {
  const int n = static_cast<int>(x.size());
  const auto bands = wavelet::dwt(x, f);
  const int sb = band_half_width(s);
  const auto mu_lo = sliding_mean(bands.low, sb);
  const auto mu_hi = sliding_mean(bands.high, sb);
  std::vector<double> st_lo(bands.low.size());
  std::vector<double> st_hi(bands.high.size());
  for (std::size_t i = 0; i < st_lo.size(); ++i) {
    st_lo[i] = bands.low[i] - mu_lo[i];
    st_hi[i] = bands.high[i] - mu_hi[i];
  }
  return {wavelet::idwt(st_lo, st_hi, f, n), wavelet::idwt(mu_lo, mu_hi, f, n)};
}

std::vector<double> fuse(std::span<const double> xt, std::span<const double> xf, double alpha) {
  if (xt.size() != xf.size()) {
    throw Error("fuse: length mismatch (" + std::to_string(xt.size()) + " vs " +
                std::to_string(xf.size()) + ")");
  }
  std::vector<double> out(xt.size());
  for (std::size_t t = 0; t < xt.size(); ++t) out[t] = alpha * xt[t] + (1.0 - alpha) * xf[t];
  return out;
}

NormBundle normalize_window(const SeriesTensor& x, const wavelet::WaveletFilters& f, int s,
                            double alpha) {
  const int c = x.channels();
  const int l = x.length();
  const int k = spectral::half_size(l);
  NormBundle b;
  b.stationary_t.resize(c, l);
  b.stationary_f.resize(c, l);
  b.mean_t.resize(c, l);
  b.mean_f.resize(c, l);
  b.phase_t.resize(c, k);
  b.fused.resize(c, l);
  auto put = [](Matrix& m, int row, const std::vector<double>& v) {
    m.row(row) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  };
  for (int ch = 0; ch < c; ++ch) {
    const auto series = x.channel(ch);
    const auto td = time_domain_normalize(series, s);
    const auto fd = freq_domain_normalize(series, f, s);
    put(b.stationary_t, ch, td.stationary);
    put(b.mean_t, ch, td.mean);
    put(b.phase_t, ch, td.phase);
    put(b.stationary_f, ch, fd.stationary);
    put(b.mean_f, ch, fd.mean);
    put(b.fused, ch, fuse(td.stationary, fd.stationary, alpha));
  }
  return b;
}

}  // namespace apn::normalize
