#pragma once

#include <complex>
#include <span>
#include <vector>

#include "timeapn/core.hpp"

/// Discrete Fourier analysis of real signals on the half spectrum (K = N/2 + 1 bins).
namespace apn::spectral {

using Complex = std::complex<double>;

/// Amplitudes below this are treated as zero; their phase is defined as 0.
inline constexpr double kAmpEps = 1e-12;

inline int half_size(int n) { return n / 2 + 1; }

/// Half spectrum of a real signal of length source_length.
struct Spectrum {
  std::vector<Complex> bins;
  int source_length = 0;

  int size() const { return static_cast<int>(bins.size()); }
};

struct AmpPhase {
  std::vector<double> amplitude;
  /// Each entry in (-pi, pi].
  std::vector<double> phase;
};

/// Twiddle tables and transform matrices for one length. Obtained from plan(n); lives for the
/// whole process.
struct DftPlan {
  int n = 0;
  int k = 0;
  /// cos/sin of 2*pi*m/n for m in [0, n), exact at quarter periods.
  std::vector<double> cos_table;
  std::vector<double> sin_table;
  /// x (1 x n) * forward_re -> Re X (1 x k); forward_im gives Im X.
  Matrix forward_re;
  Matrix forward_im;
  /// Re X * inverse_re + Im X * inverse_im -> x, using the conjugate-symmetric extension.
  /// The imaginary parts of bin 0 and of the Nyquist bin do not contribute.
  Matrix inverse_re;
  Matrix inverse_im;
};

/// Thread-safe; plans are built once per length.
const DftPlan& plan(int n);

Spectrum dft(std::span<const double> x);

/// Inverse of dft. Throws when the spectrum has imaginary content that the conjugate-symmetric
/// extension cannot represent (bin 0 / Nyquist), i.e. max|Im x| >= 1e-8 * (1 + max|Re x|).
std::vector<double> idft(const Spectrum& spectrum);

AmpPhase amp_phase(const Spectrum& spectrum, double amp_eps = kAmpEps);

/// out[k] = amp_ratio[k] * exp(j * delta_w[k]) * src[k].
Spectrum phase_compensate(const Spectrum& src, std::span<const double> amp_ratio,
                          std::span<const double> delta_w);

/// Spectral realisation of convolving y with the inverse transform of exp(j * delta_w).
/// Computed as y + idft(Y * (exp(j delta_w) - 1)), which is exactly y when delta_w == 0.
/// delta_w at bin 0 and at the Nyquist bin must keep the output real (multiples of pi, or a
/// bin with no energy); anything else is rejected by the idft residue check.
std::vector<double> apply_phase_shift(std::span<const double> y, std::span<const double> delta_w);

/// Maps theta into (-pi, pi].
double wrap_phase(double theta);

/// Four-quadrant phase of (re, im) in (-pi, pi]; 0 when the magnitude is below amp_eps.
double phase_of(double re, double im, double amp_eps = kAmpEps);

}  // namespace apn::spectral
