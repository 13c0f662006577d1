#include "timeapn/wavelet.hpp"

#include <cmath>

namespace apn::wavelet {

void WaveletFilters::check() const {
  const auto f = dec_lo.size();
  if (f == 0 || dec_hi.size() != f || rec_lo.size() != f || rec_hi.size() != f) {
    throw Error("wavelet filters must be non-empty and equally long");
  }
  for (const auto* v : {&dec_lo, &dec_hi, &rec_lo, &rec_hi}) {
    for (double t : *v) {
      if (!std::isfinite(t)) throw Error("wavelet filters contain non-finite taps");
    }
  }
}

WaveletFilters WaveletFilters::bior35() {
  // Reference bior3.5 bank (PyWavelets ordering).
  const double a = 0.013810679320049757;
  const double b = 0.04143203796014927;
  const double c = 0.052480581416189075;
  const double d = 0.26792717880896527;
  const double e = 0.07181553246425873;
  const double g = 0.966747552403483;
  const double p = 0.1767766952966369;
  const double q = 0.5303300858899106;
  WaveletFilters f;
  f.dec_lo = {-a, b, c, -d, -e, g, g, -e, -d, c, b, -a};
  f.dec_hi = {0, 0, 0, 0, -p, q, -q, p, 0, 0, 0, 0};
  f.rec_lo = {0, 0, 0, 0, p, q, q, p, 0, 0, 0, 0};
  f.rec_hi = {-a, -b, c, d, -e, -g, g, e, -d, -c, b, a};
  return f;
}

int symmetric_index(int i, int n) {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

int band_length(int n, int taps) { return (n + taps - 1) / 2; }

Bands dwt(std::span<const double> x, const WaveletFilters& f) {
  f.check();
  const int n = static_cast<int>(x.size());
  if (n < 2) throw Error("dwt: signal length " + std::to_string(n) + " is below 2");
  const int taps = f.taps();
  const int m = band_length(n, taps);
  Bands out{std::vector<double>(static_cast<std::size_t>(m)),
            std::vector<double>(static_cast<std::size_t>(m))};
  for (int i = 0; i < m; ++i) {
    double lo = 0.0;
    double hi = 0.0;
    for (int j = 0; j < taps; ++j) {
      const double v = x[static_cast<std::size_t>(symmetric_index(2 * i + 1 - j, n))];
      lo += f.dec_lo[static_cast<std::size_t>(j)] * v;
      hi += f.dec_hi[static_cast<std::size_t>(j)] * v;
    }
    out.low[static_cast<std::size_t>(i)] = lo;
    out.high[static_cast<std::size_t>(i)] = hi;
  }
  return out;
}

std::vector<double> idwt(std::span<const double> low, std::span<const double> high,
                         const WaveletFilters& f, int target_length) {
  f.check();
  const int taps = f.taps();
  const int m = static_cast<int>(low.size());
  if (target_length < 1 || high.size() != low.size() ||
      m != band_length(target_length, taps)) {
    throw Error("idwt: bands of length " + std::to_string(low.size()) + "/" +
                std::to_string(high.size()) + " do not match target length " +
                std::to_string(target_length) + " (expected " +
                std::to_string(target_length < 1 ? 0 : band_length(target_length, taps)) + ")");
  }
  const int full = 2 * m - taps + 2;
  const int offset = (full - target_length) / 2;
  std::vector<double> out(static_cast<std::size_t>(target_length), 0.0);
  for (int t = 0; t < target_length; ++t) {
    const int n = t + offset;
    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
      const int k = n + taps - 2 - 2 * i;
      if (k < 0) break;
      if (k >= taps) continue;
      acc += f.rec_lo[static_cast<std::size_t>(k)] * low[static_cast<std::size_t>(i)] +
             f.rec_hi[static_cast<std::size_t>(k)] * high[static_cast<std::size_t>(i)];
    }
    out[static_cast<std::size_t>(t)] = acc;
  }
  return out;
}

}  // namespace apn::wavelet
