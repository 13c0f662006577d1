#include "timeapn/spectral.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace apn::spectral {

namespace {

std::unique_ptr<DftPlan> build_plan(int n) {
  auto p = std::make_unique<DftPlan>();
  p->n = n;
  p->k = half_size(n);
  p->cos_table.resize(static_cast<std::size_t>(n));
  p->sin_table.resize(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    double c = 0.0;
    double s = 0.0;
    // Exact values at multiples of a quarter period keep bin 0 / Nyquist purely real.
    if (4 * m % n == 0) {
      switch (4 * m / n) {
        case 0: c = 1.0; s = 0.0; break;
        case 1: c = 0.0; s = 1.0; break;
        case 2: c = -1.0; s = 0.0; break;
        default: c = 0.0; s = -1.0; break;
      }
    } else {
      const double angle = 2.0 * std::numbers::pi * m / n;
      c = std::cos(angle);
      s = std::sin(angle);
    }
    p->cos_table[static_cast<std::size_t>(m)] = c;
    p->sin_table[static_cast<std::size_t>(m)] = s;
  }

  p->forward_re.resize(n, p->k);
  p->forward_im.resize(n, p->k);
  p->inverse_re.resize(p->k, n);
  p->inverse_im.resize(p->k, n);
  for (int t = 0; t < n; ++t) {
    for (int k = 0; k < p->k; ++k) {
      const auto m = static_cast<std::size_t>((static_cast<long long>(k) * t) % n);
      p->forward_re(t, k) = p->cos_table[m];
      p->forward_im(t, k) = -p->sin_table[m];
      const bool endpoint = k == 0 || (n % 2 == 0 && k == n / 2);
      const double w = (endpoint ? 1.0 : 2.0) / n;
      p->inverse_re(k, t) = w * p->cos_table[m];
      p->inverse_im(k, t) = endpoint ? 0.0 : -w * p->sin_table[m];
    }
  }
  return p;
}

void require_finite(std::span<const double> x, const char* what) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw Error(std::string(what) + ": non-finite input at index " + std::to_string(i));
    }
  }
}

}  // namespace

const DftPlan& plan(int n) {
  if (n < 1) throw Error("dft plan: length must be positive");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<DftPlan>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = build_plan(n);
  return *slot;
}

Spectrum dft(std::span<const double> x) {
  if (x.empty()) throw Error("dft: empty input");
  require_finite(x, "dft");
  const int n = static_cast<int>(x.size());
  const DftPlan& p = plan(n);
  Spectrum out;
  out.source_length = n;
  out.bins.resize(static_cast<std::size_t>(p.k));
  for (int k = 0; k < p.k; ++k) {
    double re = 0.0;
    double im = 0.0;
    for (int t = 0; t < n; ++t) {
      const auto m = static_cast<std::size_t>((static_cast<long long>(k) * t) % n);
      re += x[static_cast<std::size_t>(t)] * p.cos_table[m];
      im -= x[static_cast<std::size_t>(t)] * p.sin_table[m];
    }
    out.bins[static_cast<std::size_t>(k)] = {re, im};
  }
  return out;
}

std::vector<double> idft(const Spectrum& spectrum) {
  const int n = spectrum.source_length;
  if (n < 1 || spectrum.size() != half_size(n)) {
    throw Error("idft: spectrum has " + std::to_string(spectrum.size()) +
                " bins, expected " + std::to_string(n < 1 ? 0 : half_size(n)) +
                " for source length " + std::to_string(n));
  }
  const DftPlan& p = plan(n);
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    for (int k = 0; k < p.k; ++k) {
      const auto& b = spectrum.bins[static_cast<std::size_t>(k)];
      acc += b.real() * p.inverse_re(k, t) + b.imag() * p.inverse_im(k, t);
    }
    out[static_cast<std::size_t>(t)] = acc;
  }

  // Imaginary parts of bin 0 and Nyquist leave a residue (Im X0 +- Im X_{N/2}) / N.
  double residue = std::abs(spectrum.bins.front().imag());
  if (n % 2 == 0 && n > 1) residue += std::abs(spectrum.bins.back().imag());
  residue /= n;
  double max_re = 0.0;
  for (double v : out) max_re = std::max(max_re, std::abs(v));
  if (!(residue < 1e-8 * (1.0 + max_re))) {
    throw Error("idft: imaginary residue " + std::to_string(residue) +
                " exceeds tolerance; spectrum is not conjugate-symmetric at bin 0/Nyquist");
  }
  return out;
}

double phase_of(double re, double im, double amp_eps) {
  if (std::hypot(re, im) < amp_eps) return 0.0;
  const double w = std::atan2(im, re);
  return w <= -std::numbers::pi ? std::numbers::pi : w;
}

AmpPhase amp_phase(const Spectrum& spectrum, double amp_eps) {
  AmpPhase out;
  out.amplitude.reserve(spectrum.bins.size());
  out.phase.reserve(spectrum.bins.size());
  for (const auto& b : spectrum.bins) {
    out.amplitude.push_back(std::hypot(b.real(), b.imag()));
    out.phase.push_back(phase_of(b.real(), b.imag(), amp_eps));
  }
  return out;
}

Spectrum phase_compensate(const Spectrum& src, std::span<const double> amp_ratio,
                          std::span<const double> delta_w) {
  const auto k = src.bins.size();
  if (amp_ratio.size() != k || delta_w.size() != k) {
    throw Error("phase_compensate: length mismatch (bins=" + std::to_string(k) +
                ", amp_ratio=" + std::to_string(amp_ratio.size()) +
                ", delta_w=" + std::to_string(delta_w.size()) + ")");
  }
  Spectrum out{std::vector<Complex>(k), src.source_length};
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::isfinite(amp_ratio[i]) || amp_ratio[i] < 0.0) {
      throw Error("phase_compensate: amp_ratio must be finite and non-negative");
    }
    out.bins[i] = amp_ratio[i] * std::polar(1.0, delta_w[i]) * src.bins[i];
  }
  return out;
}

std::vector<double> apply_phase_shift(std::span<const double> y, std::span<const double> delta_w) {
  if (y.empty()) throw Error("apply_phase_shift: empty input");
  const int n = static_cast<int>(y.size());
  if (static_cast<int>(delta_w.size()) != half_size(n)) {
    throw Error("apply_phase_shift: delta_w has " + std::to_string(delta_w.size()) +
                " entries, expected " + std::to_string(half_size(n)));
  }
  require_finite(delta_w, "apply_phase_shift");
  Spectrum d = dft(y);
  for (std::size_t k = 0; k < d.bins.size(); ++k) {
    const double c = std::cos(delta_w[k]) - 1.0;
    const double s = std::sin(delta_w[k]);
    const Complex b = d.bins[k];
    d.bins[k] = {b.real() * c - b.imag() * s, b.real() * s + b.imag() * c};
  }
  std::vector<double> out = idft(d);
  for (std::size_t t = 0; t < out.size(); ++t) out[t] += y[t];
  return out;
}

double wrap_phase(double theta) {
  double r = std::remainder(theta, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

}  // namespace apn::spectral
