#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "timeapn/core.hpp"

namespace apn::data {

/// Reads a benchmark CSV: a header row, a timestamp first column and numeric channels.
/// Warnings (non-monotonic timestamps) are appended to `warnings`.
SeriesTensor load_csv(const std::string& path, std::vector<std::string>& warnings);
/// As above; warnings go to stderr.
SeriesTensor load_csv(const std::string& path);

/// Writes a "date" column followed by one column per channel. When `timestamps` is empty the
/// column holds first_index, first_index + 1, ...
void write_csv(const std::string& path, const SeriesTensor& series,
               const std::vector<std::string>& timestamps = {}, long first_index = 0);

struct Dataset {
  SeriesTensor raw;
  SeriesTensor standardized;
  /// Column ranges [0, train_end), [train_end, val_end), [val_end, N).
  int train_end = 0;
  int val_end = 0;
  std::vector<double> mean;
  std::vector<double> std;

  SeriesTensor train() const { return standardized.slice(0, train_end); }
  SeriesTensor val() const { return standardized.slice(train_end, val_end - train_end); }
  SeriesTensor test() const {
    return standardized.slice(val_end, standardized.length() - val_end);
  }
  /// Maps a standardized C x n block back to raw units.
  Matrix destandardize(const Matrix& z) const;
};

inline constexpr double kStdFloor = 1e-8;

/// Chronological split (train = floor(N * r_train), val = floor(N * r_val), test = rest) and
/// z-scoring with train-segment statistics. Every split must hold at least `min_length`
/// columns.
Dataset split_standardize(const SeriesTensor& series, double r_train, double r_val,
                          double r_test, int min_length);

struct SynthSpec {
  int length = 4000;
  int channels = 2;
  /// Per-channel trend; when shorter than `channels` the defaults fill the rest.
  std::vector<double> slopes;
  double period = 24.0;
  /// (t, A) breakpoints of the piecewise-linear envelope, held constant outside.
  std::vector<std::pair<double, double>> envelope = {{0.0, 1.0}};
  /// Radians per step added to the sinusoid's phase.
  double drift = 0.0;
  double noise_std = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
  double slope(int c) const;
  double amplitude(double t) const;
};

/// Settings of the drifting-phase dataset: amplitude doubles at the midpoint.
SynthSpec drifting_phase_spec(std::uint64_t seed);

SeriesTensor generate_synthetic(const SynthSpec& spec);

}  // namespace apn::data
