#pragma once

#include <cstdint>
#include <string>

namespace apn {

enum class Backbone { Linear, Mlp };
enum class NormMode { TimeApn, RevIn, None };
/// What the phase head is supervised with.
///   Absolute: phase of the de-meaned future window.
///   Drift:    that phase minus the phase of the last T de-meaned look-back samples.
enum class PhaseTarget { Absolute, Drift };

std::string to_string(Backbone b);
std::string to_string(NormMode m);
std::string to_string(PhaseTarget p);
Backbone parse_backbone(const std::string& s);
NormMode parse_norm(const std::string& s);
PhaseTarget parse_phase_target(const std::string& s);

/// Name of the random generator recorded in every config echo.
inline constexpr const char* kRngName = "mt19937_64+box-muller";

struct ExperimentConfig {
  int lookback = 96;
  int horizon = 96;
  int window_half_width = 12;
  int batch_size = 32;
  int epochs_stage1 = 30;
  int epochs_stage2 = 30;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  double alpha_init = 1.0;
  double beta_init = 1.0;

  Backbone backbone = Backbone::Linear;
  NormMode norm = NormMode::TimeApn;
  PhaseTarget phase_target = PhaseTarget::Drift;
  int mean_hidden = 128;
  int phase_width = 32;
  int mlp_hidden = 256;
  /// Early-stopping patience in epochs; 0 disables early stopping.
  int patience = 5;
  int train_stride = 1;
  double split_train = 0.7;
  double split_val = 0.1;
  double split_test = 0.2;

  /// Throws apn::Error naming the first violated constraint.
  void validate() const;

  /// Canonical "key=value" lines in a fixed order; parse(to_text()) round-trips exactly.
  std::string to_text() const;
  static ExperimentConfig parse(const std::string& text);
  /// Applies "key=value" lines on top of `base`. Unknown keys are an error.
  static ExperimentConfig parse(const std::string& text, ExperimentConfig base);

  bool operator==(const ExperimentConfig&) const = default;
};

/// FNV-1a 64-bit digest of the canonical config text, as 16 hex digits.
std::string run_id(const ExperimentConfig& config);

}  // namespace apn
