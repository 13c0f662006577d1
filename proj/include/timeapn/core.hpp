#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace apn {

/// Row-major dense matrix. Rows are channels (or batch rows), columns are time.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised for every contract violation in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ValidationReport {
  bool ok = true;
  std::string message;
  /// (channel, index) coordinates of non-finite entries.
  std::vector<std::pair<int, int>> offending;

  explicit operator bool() const { return ok; }
};

/// Checks C >= 1, N >= 1 and that every entry is finite.
ValidationReport validate(const Matrix& data);

/// Multichannel real series, channels x timesteps. Immutable after construction.
class SeriesTensor {
 public:
  /// Throws apn::Error when validate(data) fails.
  explicit SeriesTensor(Matrix data, std::vector<std::string> channel_names = {});

  int channels() const { return static_cast<int>(data_.rows()); }
  int length() const { return static_cast<int>(data_.cols()); }
  const Matrix& data() const { return data_; }
  std::span<const double> channel(int c) const;
  const std::vector<std::string>& channel_names() const { return names_; }

  /// Copy of columns [begin, begin + count).
  SeriesTensor slice(int begin, int count) const;

  bool operator==(const SeriesTensor& other) const;

 private:
  Matrix data_;
  std::vector<std::string> names_;
};

/// One training sample: a look-back window and the horizon that immediately follows it.
struct WindowPair {
  SeriesTensor x;
  SeriesTensor y;
  /// Column of the source series where x starts.
  int offset = 0;
};

/// Windows at offsets 0, stride, 2*stride, ... with offset + L + T <= N.
std::vector<WindowPair> make_windows(const SeriesTensor& series, int lookback, int horizon,
                                     int stride);

inline std::vector<double> to_vector(std::span<const double> s) {
  return {s.begin(), s.end()};
}

}  // namespace apn
