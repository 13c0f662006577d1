#pragma once

#include <span>
#include <vector>

#include "timeapn/core.hpp"
#include "timeapn/normalize.hpp"
#include "timeapn/nn/tape.hpp"
#include "timeapn/rng.hpp"

namespace apn::predict {

using nn::Parameter;
using nn::Tape;
using nn::Var;

/// Two-layer rectifier MLP, 2L -> H -> T, final layer zero-initialised.
struct MeanHead {
  MeanHead(int lookback, int hidden, int horizon, Rng& rng, const std::string& prefix);

  int lookback;
  int horizon;
  Parameter w1;  // 2L x H
  Parameter b1;  // 1 x H
  Parameter w2;  // H x T
  Parameter b2;  // 1 x T

  std::vector<Parameter*> parameters() { return {&w1, &b1, &w2, &b2}; }
};

/// Dilated causal convolutions over the phase vector, then an affine projection from
/// L/2+1 to T/2+1 bins (zero-initialised).
struct PhaseHead {
  PhaseHead(int lookback, int width, int horizon, Rng& rng, const std::string& prefix);

  int in_bins;
  int out_bins;
  int horizon;
  std::vector<Parameter> conv_w;  // (3 * Cin) x Cout
  std::vector<Parameter> conv_b;  // 1 x Cout
  Parameter proj_w;               // in_bins x out_bins
  Parameter proj_b;               // 1 x out_bins

  int depth() const { return static_cast<int>(conv_w.size()); }
  int receptive_field() const;
  std::vector<Parameter*> parameters();
};

/// Number of dilated layers for an input of n bins: ceil(log2(n)), at least 1.
int phase_depth(int n);

struct MppmParams {
  MppmParams(int lookback, int horizon, int mean_hidden, int phase_width, double alpha_init,
             double beta_init, Rng& rng);

  MeanHead mean_head_t;
  MeanHead mean_head_f;
  PhaseHead phase_head;
  Parameter alpha;  // 1 x 1
  Parameter beta;   // 1 x 1

  double alpha_value() const { return alpha.value(0, 0); }
  double beta_value() const { return beta.value(0, 0); }
  /// Clamps beta into [0, 1].
  void project();
  std::vector<Parameter*> parameters();
};

// Recorded forms over batches (one row per sample).

/// MLP(concat(mu - a, x)) + a with a the row mean of mu.
Var predict_mean(Tape& tape, Var mu, Var x, MeanHead& head);
/// wrap(head(w_bar)) with bin 0 and, for even T, bin T/2 forced to 0.
Var predict_phase(Tape& tape, Var w_bar, PhaseHead& head);

// Single-vector forms.
std::vector<double> predict_mean(std::span<const double> mu, std::span<const double> x,
                                 MeanHead& head);
std::vector<double> predict_phase(std::span<const double> w_bar, PhaseHead& head);

struct MppmOutput {
  Matrix delta_mu_t;  // C x T
  Matrix delta_mu_f;  // C x T
  Matrix delta_w;     // C x (T/2 + 1)
};

/// Applies the shared heads to every channel of one normalised window.
MppmOutput mppm_forward(const normalize::NormBundle& bundle, const SeriesTensor& x,
                        MppmParams& params);

}  // namespace apn::predict
