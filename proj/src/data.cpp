#include "timeapn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "timeapn/rng.hpp"

namespace apn::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
  return s.substr(b);
}

bool parse_finite(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

/// Numeric timestamps compare as numbers, anything else lexicographically (ISO dates).
bool before(const std::string& a, const std::string& b) {
  double x = 0.0;
  double y = 0.0;
  if (parse_finite(a, x) && parse_finite(b, y)) return x < y;
  return a < b;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SeriesTensor load_csv(const std::string& path, std::vector<std::string>& warnings) {
  std::ifstream in(path);
  if (!in) throw Error("load_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || strip(line).empty()) throw Error("load_csv: '" + path + "' is empty");
  const auto header = split_line(strip(line));
  if (header.size() < 2) throw Error("load_csv: need a timestamp column and at least one channel");
  const std::size_t channels = header.size() - 1;

  std::vector<std::vector<double>> cols(channels);
  std::string prev_stamp;
  int row = 1;
  bool warned = false;
  while (std::getline(in, line)) {
    ++row;
    line = strip(line);
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw Error("load_csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                  " cells, expected " + std::to_string(header.size()));
    }
    const std::string stamp = strip(cells[0]);
    if (!prev_stamp.empty() && !before(prev_stamp, stamp) && !warned) {
      warnings.push_back("load_csv: timestamps not increasing at row " + std::to_string(row) +
                         " ('" + prev_stamp + "' then '" + stamp + "')");
      warned = true;
    }
    prev_stamp = stamp;
    for (std::size_t c = 0; c < channels; ++c) {
      double v = 0.0;
      const std::string cell = strip(cells[c + 1]);
      if (!parse_finite(cell, v)) {
        throw Error("load_csv: non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                    ", column " + std::to_string(c + 2) + " (" + header[c + 1] + ")");
      }
      cols[c].push_back(v);
    }
  }
  if (cols[0].empty()) throw Error("load_csv: '" + path + "' has no data rows");

  Matrix m(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(cols[0].size()));
  for (std::size_t c = 0; c < channels; ++c) {
    m.row(static_cast<Eigen::Index>(c)) =
        Eigen::Map<const Eigen::RowVectorXd>(cols[c].data(), static_cast<Eigen::Index>(cols[c].size()));
  }
  std::vector<std::string> names;
  for (std::size_t c = 1; c < header.size(); ++c) names.push_back(strip(header[c]));
  return SeriesTensor(std::move(m), std::move(names));
}

SeriesTensor load_csv(const std::string& path) {
  std::vector<std::string> warnings;
  auto s = load_csv(path, warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return s;
}

void write_csv(const std::string& path, const SeriesTensor& series,
               const std::vector<std::string>& timestamps, long first_index) {
  if (!timestamps.empty() && static_cast<int>(timestamps.size()) != series.length()) {
    throw Error("write_csv: timestamp count does not match the series length");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("write_csv: cannot open '" + path + "' for writing");
  out << "date";
  for (int c = 0; c < series.channels(); ++c) {
    const auto& names = series.channel_names();
    out << ',' << (c < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(c)]
                                                      : "ch" + std::to_string(c));
  }
  out << '\n';
  for (int t = 0; t < series.length(); ++t) {
    if (timestamps.empty()) {
      out << first_index + t;
    } else {
      out << timestamps[static_cast<std::size_t>(t)];
    }
    for (int c = 0; c < series.channels(); ++c) out << ',' << fmt(series.data()(c, t));
    out << '\n';
  }
  if (!out) throw Error("write_csv: write to '" + path + "' failed");
}

Matrix Dataset::destandardize(const Matrix& z) const {
  if (z.rows() != static_cast<Eigen::Index>(mean.size())) {
    throw Error("destandardize: channel count mismatch");
  }
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < z.rows(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    out.row(c) = z.row(c).array() * std[i] + mean[i];
  }
  return out;
}

Dataset split_standardize(const SeriesTensor& series, double r_train, double r_val,
                          double r_test, int min_length) {
  if (!(r_train > 0 && r_val > 0 && r_test > 0) || std::abs(r_train + r_val + r_test - 1.0) > 1e-9) {
    throw Error("split_standardize: ratios must be positive and sum to 1");
  }
  const int n = series.length();
  const int n_train = static_cast<int>(std::floor(n * r_train));
  const int n_val = static_cast<int>(std::floor(n * r_val));
  const int n_test = n - n_train - n_val;
  const std::pair<const char*, int> parts[] = {{"train", n_train}, {"val", n_val}, {"test", n_test}};
  for (const auto& [name, len] : parts) {
    if (len < min_length) {
      throw Error(std::string("split_standardize: ") + name + " split has " + std::to_string(len) +
                  " steps, fewer than L+T=" + std::to_string(min_length));
    }
  }
  const int c = series.channels();
  std::vector<double> mean(static_cast<std::size_t>(c));
  std::vector<double> sd(static_cast<std::size_t>(c));
  Matrix z(c, n);
  for (int ch = 0; ch < c; ++ch) {
    const auto seg = series.data().row(ch).head(n_train);
    const double m = seg.sum() / n_train;
    const double var = (seg.array() - m).square().sum() / n_train;
    const double s = std::max(std::sqrt(var), kStdFloor);
    mean[static_cast<std::size_t>(ch)] = m;
    sd[static_cast<std::size_t>(ch)] = s;
    z.row(ch) = (series.data().row(ch).array() - m) / s;
  }
  return Dataset{series, SeriesTensor(std::move(z), series.channel_names()), n_train,
                 n_train + n_val, std::move(mean), std::move(sd)};
}

void SynthSpec::validate() const {
  if (length < 1) throw Error("synth: length must be >= 1");
  if (channels < 1) throw Error("synth: channels must be >= 1");
  if (!(period >= 2.0)) throw Error("synth: period must be >= 2");
  if (!(noise_std >= 0.0)) throw Error("synth: noise std must be >= 0");
  if (!std::isfinite(drift)) throw Error("synth: drift must be finite");
  if (envelope.empty()) throw Error("synth: envelope needs at least one breakpoint");
  for (std::size_t i = 1; i < envelope.size(); ++i) {
    if (!(envelope[i].first > envelope[i - 1].first)) {
      throw Error("synth: envelope breakpoints must be strictly increasing in t");
    }
  }
}

double SynthSpec::slope(int c) const {
  if (c < static_cast<int>(slopes.size())) return slopes[static_cast<std::size_t>(c)];
  const double base = c % 2 == 0 ? 0.0015 : -0.001;
  return base * (1.0 + 0.25 * (c / 2));
}

double SynthSpec::amplitude(double t) const {
  if (t <= envelope.front().first) return envelope.front().second;
  if (t >= envelope.back().first) return envelope.back().second;
  const auto it = std::upper_bound(envelope.begin(), envelope.end(), t,
                                   [](double v, const auto& bp) { return v < bp.first; });
  const auto& [t1, a1] = *it;
  const auto& [t0, a0] = *(it - 1);
  return a0 + (a1 - a0) * (t - t0) / (t1 - t0);
}

SynthSpec drifting_phase_spec(std::uint64_t seed) {
  SynthSpec s;
  s.length = 4000;
  s.channels = 2;
  s.period = 24.0;
  s.drift = 0.002;
  s.noise_std = 0.05;
  s.envelope = {{0.0, 1.0}, {1999.0, 1.0}, {2000.0, 2.0}};
  s.seed = seed;
  return s;
}

SeriesTensor generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Matrix m(spec.channels, spec.length);
  for (int c = 0; c < spec.channels; ++c) {
    const double slope = spec.slope(c);
    for (int t = 0; t < spec.length; ++t) {
      const double td = static_cast<double>(t);
      const double angle = 2.0 * std::numbers::pi * td / spec.period + spec.drift * td;
      double v = slope * td + spec.amplitude(td) * std::sin(angle);
      if (spec.noise_std > 0.0) v += spec.noise_std * rng.normal();
      m(c, t) = v;
    }
  }
  std::vector<std::string> names;
  for (int c = 0; c < spec.channels; ++c) names.push_back("ch" + std::to_string(c));
  return SeriesTensor(std::move(m), std::move(names));
}

}  // namespace apn::data
