#pragma once

#include <vector>

#include "timeapn/nn/tape.hpp"
#include "timeapn/spectral.hpp"

/// Differentiable primitives. Operands are batch-major: one sample per row.
namespace apn::nn {

Var matmul(Var a, Var b);
/// x * w + b, with w (in x out) and b (1 x out) broadcast over rows.
Var affine(Var x, Var w, Var b);
/// x * m for a constant m that must outlive the tape (e.g. a DftPlan matrix).
Var linear_map(Var x, const Matrix& m, const char* op = "linear_map");

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double k);
Var shift(Var x, double k);
/// s (1 x 1) times every entry of x.
Var scalar_mul(Var s, Var x);
/// Elementwise product with a constant matrix of the same shape.
Var mul_const(Var x, Matrix m);
Var relu(Var x);
Var square(Var x);

Var concat_cols(Var a, Var b);
/// Mean of each row, shape B x 1.
Var row_mean(Var x);
/// x + v, v (B x 1) broadcast over columns.
Var add_col(Var x, Var v);
Var mul_col(Var x, Var v);
Var div_col(Var x, Var v);
/// Row-major reinterpretation; rows * cols must equal x.size().
Var reshape(Var x, Eigen::Index rows, Eigen::Index cols);
/// out(b, 0) = p(0, index[b]) for a 1 x C parameter row.
Var gather_rows(Var p, std::vector<int> index);
Var mean_all(Var x);

/// Dilated causal 1-D convolution. x is (B*length) x Cin with rows ordered sample-major,
/// w is (K*Cin) x Cout with tap k occupying rows [k*Cin, (k+1)*Cin) and looking back
/// dilation*(K-1-k) steps, b is 1 x Cout. Positions before the start read zeros.
Var conv1d_causal(Var x, Var w, Var b, int length, int dilation);

/// Row-wise moving average with replication padding (bitwise equal to
/// normalize::sliding_mean on each row).
Var sliding_mean(Var x, int s);

/// One analysis band: x (B x N) filtered by taps (1 x F) with symmetric extension and
/// downsampled to B x band_length(N, F).
Var dwt_band(Var x, Var taps);
/// Synthesis of two bands to B x target_length.
Var idwt(Var low, Var high, Var rec_lo, Var rec_hi, int target_length);

struct ComplexVar {
  Var re;
  Var im;
};
/// Half-spectrum DFT along each row.
ComplexVar dft(Var x);
/// Magnitude; bins below eps get zero gradient.
Var complex_abs(const ComplexVar& z, double eps = spectral::kAmpEps);
/// Four-quadrant phase in (-pi, pi]; 0 (with zero gradient) below eps.
Var phase(const ComplexVar& z, double eps = spectral::kAmpEps);
/// Elementwise wrap into (-pi, pi]; gradient passes through.
Var wrap(Var x);
/// wrap(a - b).
Var wrapped_residual(Var a, Var b);
/// Row-wise apply_phase_shift: y (B x T), delta_w (B x (T/2+1)). The imaginary component
/// at bin 0 / Nyquist is dropped, so callers keep those delta_w entries at 0.
Var phase_shift(Var y, Var delta_w);

/// mean((a - b)^2) over all entries, 1 x 1.
Var mse(Var a, Var b);

}  // namespace apn::nn
