#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "timeapn/core.hpp"
#include "timeapn/wavelet.hpp"

namespace apn::normalize {

/// Centered moving average over [t-s, t+s]; the first and last s entries replicate the
/// nearest interior mean. Requires 2s+1 <= x.size().
std::vector<double> sliding_mean(std::span<const double> x, int s);

/// Half-width used on the wavelet bands, which are roughly half as long as the input.
inline int band_half_width(int s) { return std::max(1, s / 2); }

struct MeanNormPhaseResult {
  std::vector<double> stationary;  // x - mu
  std::vector<double> mean;        // mu
  std::vector<double> phase;       // phase of dft(x - mu), floor(L/2)+1 entries
};

MeanNormPhaseResult mean_norm_phase(std::span<const double> x, int s);

/// Same as mean_norm_phase on the raw series.
inline MeanNormPhaseResult time_domain_normalize(std::span<const double> x, int s) {
  return mean_norm_phase(x, s);
}

struct FreqNormResult {
  std::vector<double> stationary;
  std::vector<double> mean;
};

/// Splits x into wavelet bands, removes each band's sliding mean (half-width
/// band_half_width(s)) and synthesises the stationary and mean parts back to x.size() samples.
FreqNormResult freq_domain_normalize(std::span<const double> x,
                                     const wavelet::WaveletFilters& f, int s);

/// alpha * xt + (1 - alpha) * xf.
std::vector<double> fuse(std::span<const double> xt, std::span<const double> xf, double alpha);

/// Per-channel non-stationary factors of one look-back window. Matrices are C x L except
/// phase_t, which is C x (L/2 + 1).
struct NormBundle {
  Matrix stationary_t;
  Matrix stationary_f;
  Matrix mean_t;
  Matrix mean_f;
  Matrix phase_t;
  /// alpha-fused stationary input for the forecasting model.
  Matrix fused;
};

NormBundle normalize_window(const SeriesTensor& x, const wavelet::WaveletFilters& f, int s,
                            double alpha);

}  // namespace apn::normalize
