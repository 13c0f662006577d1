#include "timeapn/core.hpp"

#include <cmath>
#include <sstream>

namespace apn {

ValidationReport validate(const Matrix& data) {
  ValidationReport report;
  if (data.rows() < 1) {
    report.ok = false;
    report.message = "C >= 1 violated";
    return report;
  }
  if (data.cols() < 1) {
    report.ok = false;
    report.message = "N >= 1 violated";
    return report;
  }
  for (Eigen::Index c = 0; c < data.rows(); ++c) {
    for (Eigen::Index t = 0; t < data.cols(); ++t) {
      if (!std::isfinite(data(c, t))) {
        report.offending.emplace_back(static_cast<int>(c), static_cast<int>(t));
      }
    }
  }
  if (!report.offending.empty()) {
    report.ok = false;
    std::ostringstream msg;
    msg << "non-finite values at";
    const std::size_t shown = std::min<std::size_t>(report.offending.size(), 8);
    for (std::size_t i = 0; i < shown; ++i) {
      msg << " (" << report.offending[i].first << "," << report.offending[i].second << ")";
    }
    if (report.offending.size() > shown) {
      msg << " and " << report.offending.size() - shown << " more";
    }
    report.message = msg.str();
  }
  return report;
}

SeriesTensor::SeriesTensor(Matrix data, std::vector<std::string> channel_names)
    : data_(std::move(data)), names_(std::move(channel_names)) {
  if (auto report = validate(data_); !report) {
    throw Error("invalid series: " + report.message);
  }
  if (!names_.empty() && static_cast<Eigen::Index>(names_.size()) != data_.rows()) {
    throw Error("channel_names has " + std::to_string(names_.size()) + " entries for " +
                std::to_string(data_.rows()) + " channels");
  }
}

std::span<const double> SeriesTensor::channel(int c) const {
  if (c < 0 || c >= channels()) {
    throw Error("channel index " + std::to_string(c) + " out of range");
  }
  return {data_.data() + static_cast<std::ptrdiff_t>(c) * data_.cols(),
          static_cast<std::size_t>(data_.cols())};
}

SeriesTensor SeriesTensor::slice(int begin, int count) const {
  if (begin < 0 || count < 1 || begin + count > length()) {
    throw Error("slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                ") outside series of length " + std::to_string(length()));
  }
  return SeriesTensor(data_.middleCols(begin, count), names_);
}

bool SeriesTensor::operator==(const SeriesTensor& other) const {
  return data_.rows() == other.data_.rows() && data_.cols() == other.data_.cols() &&
         data_ == other.data_ && names_ == other.names_;
}

std::vector<WindowPair> make_windows(const SeriesTensor& series, int lookback, int horizon,
                                     int stride) {
  if (lookback < 1 || horizon < 1 || stride < 1) {
    throw Error("make_windows: lookback, horizon and stride must be positive");
  }
  const int n = series.length();
  if (n < lookback + horizon) {
    throw Error("insufficient length: N=" + std::to_string(n) + " < L+T (L=" +
                std::to_string(lookback) + ", T=" + std::to_string(horizon) + ")");
  }
  const int count = (n - lookback - horizon) / stride + 1;
  std::vector<WindowPair> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int offset = i * stride;
    out.push_back(WindowPair{series.slice(offset, lookback),
                             series.slice(offset + lookback, horizon), offset});
  }
  return out;
}

}  // namespace apn
