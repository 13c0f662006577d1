#pragma once

#include <span>
#include <utility>
#include <vector>

#include "timeapn/core.hpp"

/// Single-level filter-bank wavelet transform with half-sample symmetric extension.
///
/// Conventions (identical to PyWavelets' "symmetric" mode):
///   M      = floor((N + F - 1) / 2)
///   lo[i]  = sum_j dec_lo[j] * xe(2i + 1 - j),  xe = x reflected about both half-sample edges
///   full[n]= sum_i rec_lo[n + F - 2 - 2i] * lo[i] + rec_hi[...] * hi[i],  n in [0, 2M - F + 2)
///   idwt   = full center-cropped to N samples.
namespace apn::wavelet {

/// Analysis / synthesis taps. All four vectors have the same length.
struct WaveletFilters {
  std::vector<double> dec_lo;
  std::vector<double> dec_hi;
  std::vector<double> rec_lo;
  std::vector<double> rec_hi;

  int taps() const { return static_cast<int>(dec_lo.size()); }
  /// Throws unless all four filters are non-empty, equally long and finite.
  void check() const;

  /// Biorthogonal 3.5 filter bank (12 taps per filter).
  static WaveletFilters bior35();
};

/// Index into a length-n signal for position i of its symmetric extension.
int symmetric_index(int i, int n);

/// Band length M produced by dwt for a length-n signal and `taps`-tap filters.
int band_length(int n, int taps);

struct Bands {
  std::vector<double> low;
  std::vector<double> high;
};

/// Requires N >= 2.
Bands dwt(std::span<const double> x, const WaveletFilters& f);

/// Requires low/high of length band_length(target_length, taps).
std::vector<double> idwt(std::span<const double> low, std::span<const double> high,
                         const WaveletFilters& f, int target_length);

}  // namespace apn::wavelet
