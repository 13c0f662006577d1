#include "timeapn/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "timeapn/core.hpp"

namespace apn {

std::string to_string(Backbone b) { return b == Backbone::Linear ? "linear" : "mlp"; }

std::string to_string(NormMode m) {
  switch (m) {
    case NormMode::TimeApn: return "timeapn";
    case NormMode::RevIn: return "revin";
    case NormMode::None: return "none";
  }
  return "?";
}

std::string to_string(PhaseTarget p) { return p == PhaseTarget::Absolute ? "absolute" : "drift"; }

Backbone parse_backbone(const std::string& s) {
  if (s == "linear") return Backbone::Linear;
  if (s == "mlp") return Backbone::Mlp;
  throw Error("unknown backbone '" + s + "' (expected linear|mlp)");
}

NormMode parse_norm(const std::string& s) {
  if (s == "timeapn") return NormMode::TimeApn;
  if (s == "revin") return NormMode::RevIn;
  if (s == "none") return NormMode::None;
  throw Error("unknown norm '" + s + "' (expected timeapn|revin|none)");
}

PhaseTarget parse_phase_target(const std::string& s) {
  if (s == "absolute") return PhaseTarget::Absolute;
  if (s == "drift") return PhaseTarget::Drift;
  throw Error("unknown phase_target '" + s + "' (expected absolute|drift)");
}

void ExperimentConfig::validate() const {
  auto require = [](bool cond, const char* what) {
    if (!cond) throw Error(std::string("config: ") + what);
  };
  require(lookback >= 1, "lookback must be positive");
  require(horizon >= 1, "horizon must be positive");
  require(window_half_width >= 0, "window_half_width must be non-negative");
  require(2 * window_half_width + 1 <= lookback, "2s+1 <= lookback violated");
  require(2 * window_half_width + 1 <= horizon, "2s+1 <= horizon violated");
  require(batch_size >= 1, "batch_size must be positive");
  require(epochs_stage1 >= 1 && epochs_stage2 >= 1, "epochs must be positive");
  require(learning_rate > 0, "learning_rate must be positive");
  require(std::isfinite(alpha_init) && std::isfinite(beta_init), "alpha/beta init must be finite");
  require(mean_hidden >= 1 && phase_width >= 1 && mlp_hidden >= 1, "widths must be positive");
  require(patience >= 0, "patience must be non-negative");
  require(train_stride >= 1, "train_stride must be positive");
  require(split_train > 0 && split_val > 0 && split_test > 0, "split ratios must be positive");
  require(std::abs(split_train + split_val + split_test - 1.0) < 1e-9, "split ratios must sum to 1");
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    out = std::strtod(first, &end);
    if (end != last || value.empty()) throw Error("config: bad value for " + key + ": '" + value + "'");
  } else {
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) {
      throw Error("config: bad value for " + key + ": '" + value + "'");
    }
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  out << "lookback=" << lookback << '\n'
      << "horizon=" << horizon << '\n'
      << "window_half_width=" << window_half_width << '\n'
      << "batch_size=" << batch_size << '\n'
      << "epochs_stage1=" << epochs_stage1 << '\n'
      << "epochs_stage2=" << epochs_stage2 << '\n'
      << "learning_rate=" << fmt_double(learning_rate) << '\n'
      << "seed=" << seed << '\n'
      << "alpha_init=" << fmt_double(alpha_init) << '\n'
      << "beta_init=" << fmt_double(beta_init) << '\n'
      << "backbone=" << to_string(backbone) << '\n'
      << "norm=" << to_string(norm) << '\n'
      << "phase_target=" << to_string(phase_target) << '\n'
      << "mean_hidden=" << mean_hidden << '\n'
      << "phase_width=" << phase_width << '\n'
      << "mlp_hidden=" << mlp_hidden << '\n'
      << "patience=" << patience << '\n'
      << "train_stride=" << train_stride << '\n'
      << "split_train=" << fmt_double(split_train) << '\n'
      << "split_val=" << fmt_double(split_val) << '\n'
      << "split_test=" << fmt_double(split_test) << '\n'
      << "rng=" << kRngName << '\n';
  return out.str();
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  return parse(text, ExperimentConfig{});
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, ExperimentConfig base) {
  ExperimentConfig c = std::move(base);
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"lookback", [&](auto& v) { c.lookback = parse_number<int>("lookback", v); }},
      {"horizon", [&](auto& v) { c.horizon = parse_number<int>("horizon", v); }},
      {"window_half_width",
       [&](auto& v) { c.window_half_width = parse_number<int>("window_half_width", v); }},
      {"batch_size", [&](auto& v) { c.batch_size = parse_number<int>("batch_size", v); }},
      {"epochs_stage1", [&](auto& v) { c.epochs_stage1 = parse_number<int>("epochs_stage1", v); }},
      {"epochs_stage2", [&](auto& v) { c.epochs_stage2 = parse_number<int>("epochs_stage2", v); }},
      {"learning_rate",
       [&](auto& v) { c.learning_rate = parse_number<double>("learning_rate", v); }},
      {"seed", [&](auto& v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
      {"alpha_init", [&](auto& v) { c.alpha_init = parse_number<double>("alpha_init", v); }},
      {"beta_init", [&](auto& v) { c.beta_init = parse_number<double>("beta_init", v); }},
      {"backbone", [&](auto& v) { c.backbone = parse_backbone(v); }},
      {"norm", [&](auto& v) { c.norm = parse_norm(v); }},
      {"phase_target", [&](auto& v) { c.phase_target = parse_phase_target(v); }},
      {"mean_hidden", [&](auto& v) { c.mean_hidden = parse_number<int>("mean_hidden", v); }},
      {"phase_width", [&](auto& v) { c.phase_width = parse_number<int>("phase_width", v); }},
      {"mlp_hidden", [&](auto& v) { c.mlp_hidden = parse_number<int>("mlp_hidden", v); }},
      {"patience", [&](auto& v) { c.patience = parse_number<int>("patience", v); }},
      {"train_stride", [&](auto& v) { c.train_stride = parse_number<int>("train_stride", v); }},
      {"split_train", [&](auto& v) { c.split_train = parse_number<double>("split_train", v); }},
      {"split_val", [&](auto& v) { c.split_val = parse_number<double>("split_val", v); }},
      {"split_test", [&](auto& v) { c.split_test = parse_number<double>("split_test", v); }},
      {"rng",
       [&](auto& v) {
         if (v != kRngName) throw Error("config: unsupported rng '" + v + "'");
       }},
  };

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error("config: unknown key '" + key + "'");
    it->second(value);
  }
  return c;
}

std::string run_id(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.to_text()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace apn
