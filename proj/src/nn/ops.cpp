#include "timeapn/nn/ops.hpp"

#include <cmath>
#include <numbers>

#include "timeapn/normalize.hpp"
#include "timeapn/wavelet.hpp"

namespace apn::nn {

namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()) + ")");
  }
}

void require_col(const Var& x, const Var& v, const char* op) {
  if (v.cols() != 1 || v.rows() != x.rows()) {
    throw Error(std::string(op) + ": expected a " + std::to_string(x.rows()) + "x1 column");
  }
}

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw Error("nn op on an empty Var");
  return *v.tape();
}

/// Builds the N x M analysis matrix for one filter: lo = x * A.
Matrix analysis_matrix(const Matrix& taps, int n) {
  const int f = static_cast<int>(taps.cols());
  const int m = wavelet::band_length(n, f);
  Matrix a = Matrix::Zero(n, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < f; ++j) a(wavelet::symmetric_index(2 * i + 1 - j, n), i) += taps(0, j);
  }
  return a;
}

/// Builds the M x N synthesis matrix for one filter after center-cropping.
Matrix synthesis_matrix(const Matrix& taps, int m, int n) {
  const int f = static_cast<int>(taps.cols());
  const int offset = (2 * m - f + 2 - n) / 2;
  Matrix s = Matrix::Zero(m, n);
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < m; ++i) {
      const int k = t + offset + f - 2 - 2 * i;
      if (k >= 0 && k < f) s(i, t) = taps(0, k);
    }
  }
  return s;
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw Error("matmul: inner dimensions differ");
  Tape& t = tape_of(a);
  Matrix v = a.value() * b.value();
  const int ia = a.index();
  const int ib = b.index();
  return t.record("matmul", std::move(v), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia).noalias() += g * tp.value(ib).transpose();
    if (tp.requires_grad(ib)) tp.grad(ib).noalias() += tp.value(ia).transpose() * g;
  });
}

Var affine(Var x, Var w, Var b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
    throw Error("affine: shape mismatch (x " + std::to_string(x.rows()) + "x" +
                std::to_string(x.cols()) + ", w " + std::to_string(w.rows()) + "x" +
                std::to_string(w.cols()) + ", b " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()) + ")");
  }
  Tape& t = tape_of(x);
  Matrix v = x.value() * w.value();
  v.rowwise() += b.value().row(0);
  const int ix = x.index();
  const int iw = w.index();
  const int ib = b.index();
  return t.record("affine", std::move(v), {x, w, b}, [ix, iw, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ix)) tp.grad(ix).noalias() += g * tp.value(iw).transpose();
    if (tp.requires_grad(iw)) tp.grad(iw).noalias() += tp.value(ix).transpose() * g;
    if (tp.requires_grad(ib)) tp.grad(ib) += g.colwise().sum();
  });
}

Var linear_map(Var x, const Matrix& m, const char* op) {
  if (x.cols() != m.rows()) throw Error(std::string(op) + ": shape mismatch");
  Tape& t = tape_of(x);
  Matrix v = x.value() * m;
  const int ix = x.index();
  const Matrix* mp = &m;
  return t.record(op, std::move(v), {x}, [ix, mp](Tape& tp, int self) {
    if (tp.requires_grad(ix)) tp.grad(ix).noalias() += tp.grad(self) * mp->transpose();
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const int ia = a.index();
  const int ib = b.index();
  return tape_of(a).record("add", a.value() + b.value(), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) tp.grad(ib) += g;
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const int ia = a.index();
  const int ib = b.index();
  return tape_of(a).record("sub", a.value() - b.value(), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) tp.grad(ib) -= g;
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const int ia = a.index();
  const int ib = b.index();
  Matrix v = a.value().cwiseProduct(b.value());
  return tape_of(a).record("mul", std::move(v), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g.cwiseProduct(tp.value(ib));
    if (tp.requires_grad(ib)) tp.grad(ib) += g.cwiseProduct(tp.value(ia));
  });
}

Var scale(Var x, double k) {
  const int ix = x.index();
  return tape_of(x).record("scale", x.value() * k, {x}, [ix, k](Tape& tp, int self) {
    if (tp.requires_grad(ix)) tp.grad(ix) += k * tp.grad(self);
  });
}

Var shift(Var x, double k) {
  const int ix = x.index();
  Matrix v = x.value().array() + k;
  return tape_of(x).record("shift", std::move(v), {x}, [ix](Tape& tp, int self) {
    if (tp.requires_grad(ix)) tp.grad(ix) += tp.grad(self);
  });
}

Var scalar_mul(Var s, Var x) {
  if (s.rows() != 1 || s.cols() != 1) throw Error("scalar_mul: s must be 1x1");
  const int is = s.index();
  const int ix = x.index();
  Matrix v = s.value()(0, 0) * x.value();
  return tape_of(x).record("scalar_mul", std::move(v), {s, x}, [is, ix](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(is)) tp.grad(is)(0, 0) += g.cwiseProduct(tp.value(ix)).sum();
    if (tp.requires_grad(ix)) tp.grad(ix) += tp.value(is)(0, 0) * g;
  });
}

Var mul_const(Var x, Matrix m) {
  if (m.rows() != x.rows() || m.cols() != x.cols()) throw Error("mul_const: shape mismatch");
  const int ix = x.index();
  Matrix v = x.value().cwiseProduct(m);
  return tape_of(x).record("mul_const", std::move(v), {x},
                           [ix, m = std::move(m)](Tape& tp, int self) {
                             if (tp.requires_grad(ix)) tp.grad(ix) += tp.grad(self).cwiseProduct(m);
                           });
}

Var relu(Var x) {
  const int ix = x.index();
  Matrix v = x.value().cwiseMax(0.0);
  return tape_of(x).record("relu", std::move(v), {x}, [ix](Tape& tp, int self) {
    if (!tp.requires_grad(ix)) return;
    tp.grad(ix) += (tp.value(ix).array() > 0.0).select(tp.grad(self), 0.0).matrix();
  });
}

Var square(Var x) {
  const int ix = x.index();
  Matrix v = x.value().cwiseAbs2();
  return tape_of(x).record("square", std::move(v), {x}, [ix](Tape& tp, int self) {
    if (tp.requires_grad(ix)) tp.grad(ix) += 2.0 * tp.grad(self).cwiseProduct(tp.value(ix));
  });
}

Var concat_cols(Var a, Var b) {
  if (a.rows() != b.rows()) throw Error("concat_cols: row counts differ");
  const int ia = a.index();
  const int ib = b.index();
  const auto ca = a.cols();
  const auto cb = b.cols();
  Matrix v(a.rows(), ca + cb);
  v.leftCols(ca) = a.value();
  v.rightCols(cb) = b.value();
  return tape_of(a).record("concat", std::move(v), {a, b}, [ia, ib, ca, cb](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g.leftCols(ca);
    if (tp.requires_grad(ib)) tp.grad(ib) += g.rightCols(cb);
  });
}

Var row_mean(Var x) {
  const int ix = x.index();
  const auto n = x.cols();
  Matrix v = x.value().rowwise().mean();
  return tape_of(x).record("mean_reduce", std::move(v), {x}, [ix, n](Tape& tp, int self) {
    if (!tp.requires_grad(ix)) return;
    const Matrix& g = tp.grad(self);
    tp.grad(ix).colwise() += g.col(0) / static_cast<double>(n);
  });
}

Var add_col(Var x, Var v) {
  require_col(x, v, "add_col");
  const int ix = x.index();
  const int iv = v.index();
  Matrix out = x.value();
  out.colwise() += v.value().col(0);
  return tape_of(x).record("add_col", std::move(out), {x, v}, [ix, iv](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ix)) tp.grad(ix) += g;
    if (tp.requires_grad(iv)) tp.grad(iv) += g.rowwise().sum();
  });
}

Var mul_col(Var x, Var v) {
  require_col(x, v, "mul_col");
  const int ix = x.index();
  const int iv = v.index();
  Matrix out = x.value().array().colwise() * v.value().col(0).array();
  return tape_of(x).record("mul_col", std::move(out), {x, v}, [ix, iv](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ix)) {
      tp.grad(ix).array() += g.array().colwise() * tp.value(iv).col(0).array();
    }
    if (tp.requires_grad(iv)) tp.grad(iv) += g.cwiseProduct(tp.value(ix)).rowwise().sum();
  });
}

Var div_col(Var x, Var v) {
  require_col(x, v, "div_col");
  const int ix = x.index();
  const int iv = v.index();
  Matrix out = x.value().array().colwise() / v.value().col(0).array();
  return tape_of(x).record("div_col", std::move(out), {x, v}, [ix, iv](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    const auto inv = tp.value(iv).col(0).array().inverse().eval();
    if (tp.requires_grad(ix)) tp.grad(ix).array() += g.array().colwise() * inv;
    if (tp.requires_grad(iv)) {
      // d/dv (x / v) = -x / v^2
      tp.grad(iv).col(0).array() -=
          (g.cwiseProduct(tp.value(ix)).rowwise().sum().array() * inv.square());
    }
  });
}

Var reshape(Var x, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != x.value().size()) throw Error("reshape: size mismatch");
  const int ix = x.index();
  const auto r0 = x.rows();
  const auto c0 = x.cols();
  Matrix v = Eigen::Map<const Matrix>(x.value().data(), rows, cols);
  return tape_of(x).record("reshape", std::move(v), {x}, [ix, r0, c0](Tape& tp, int self) {
    if (tp.requires_grad(ix)) tp.grad(ix) += Eigen::Map<const Matrix>(tp.grad(self).data(), r0, c0);
  });
}

Var gather_rows(Var p, std::vector<int> index) {
  if (p.rows() != 1) throw Error("gather_rows: expected a 1 x C row");
  Matrix v(static_cast<Eigen::Index>(index.size()), 1);
  for (std::size_t b = 0; b < index.size(); ++b) {
    if (index[b] < 0 || index[b] >= p.cols()) throw Error("gather_rows: index out of range");
    v(static_cast<Eigen::Index>(b), 0) = p.value()(0, index[b]);
  }
  const int ip = p.index();
  return tape_of(p).record("gather", std::move(v), {p},
                           [ip, index = std::move(index)](Tape& tp, int self) {
                             if (!tp.requires_grad(ip)) return;
                             const Matrix& g = tp.grad(self);
                             Matrix& gp = tp.grad(ip);
                             for (std::size_t b = 0; b < index.size(); ++b) {
                               gp(0, index[b]) += g(static_cast<Eigen::Index>(b), 0);
                             }
                           });
}

Var mean_all(Var x) {
  const int ix = x.index();
  const auto n = static_cast<double>(x.value().size());
  Matrix v(1, 1);
  v(0, 0) = x.value().mean();
  return tape_of(x).record("mean_all", std::move(v), {x}, [ix, n](Tape& tp, int self) {
    if (tp.requires_grad(ix)) tp.grad(ix).array() += tp.grad(self)(0, 0) / n;
  });
}

Var conv1d_causal(Var x, Var w, Var b, int length, int dilation) {
  const auto cin = x.cols();
  const auto cout = w.cols();
  if (length < 1 || x.rows() % length != 0) throw Error("conv1d: rows not a multiple of length");
  if (w.rows() % cin != 0 || b.rows() != 1 || b.cols() != cout) {
    throw Error("conv1d: weight/bias shape mismatch");
  }
  if (dilation < 1) throw Error("conv1d: dilation must be positive");
  const int taps = static_cast<int>(w.rows() / cin);
  const auto batch = x.rows() / length;

  // Rows of x shifted down by `shift` steps inside each sample, zero-filled.
  auto shifted = [batch, length](const Matrix& src, int shift) {
    Matrix out = Matrix::Zero(src.rows(), src.cols());
    if (shift >= length) return out;
    for (Eigen::Index s = 0; s < batch; ++s) {
      out.middleRows(s * length + shift, length - shift) = src.middleRows(s * length, length - shift);
    }
    return out;
  };

  Matrix v(x.rows(), cout);
  v.rowwise() = b.value().row(0);
  for (int k = 0; k < taps; ++k) {
    const int sh = dilation * (taps - 1 - k);
    if (sh >= length) continue;
    v.noalias() += shifted(x.value(), sh) * w.value().middleRows(k * cin, cin);
  }

  const int ix = x.index();
  const int iw = w.index();
  const int ib = b.index();
  return tape_of(x).record(
      "conv1d_causal", std::move(v), {x, w, b},
      [ix, iw, ib, taps, cin, dilation, length, batch, shifted](Tape& tp, int self) {
        const Matrix& g = tp.grad(self);
        if (tp.requires_grad(ib)) tp.grad(ib) += g.colwise().sum();
        for (int k = 0; k < taps; ++k) {
          const int sh = dilation * (taps - 1 - k);
          if (sh >= length) continue;
          if (tp.requires_grad(iw)) {
            tp.grad(iw).middleRows(k * cin, cin).noalias() +=
                shifted(tp.value(ix), sh).transpose() * g;
          }
          if (tp.requires_grad(ix)) {
            const Matrix gs = g * tp.value(iw).middleRows(k * cin, cin).transpose();
            Matrix& gx = tp.grad(ix);
            for (Eigen::Index s = 0; s < batch; ++s) {
              gx.middleRows(s * length, length - sh) += gs.middleRows(s * length + sh, length - sh);
            }
          }
        }
      });
}

Var sliding_mean(Var x, int s) {
  const auto n = x.cols();
  Matrix v(x.rows(), n);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto row = normalize::sliding_mean(
        std::span<const double>(x.value().data() + r * n, static_cast<std::size_t>(n)), s);
    v.row(r) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), n);
  }
  const int ix = x.index();
  return tape_of(x).record("sliding_mean", std::move(v), {x}, [ix, s, n](Tape& tp, int self) {
    if (!tp.requires_grad(ix)) return;
    Matrix g = tp.grad(self);
    // Fold replicated boundary entries back onto the interior entries they copy.
    for (Eigen::Index t = 0; t < s; ++t) {
      g.col(s) += g.col(t);
      g.col(n - 1 - s) += g.col(n - 1 - t);
    }
    const double inv = 1.0 / (2.0 * s + 1.0);
    Matrix& gx = tp.grad(ix);
    for (Eigen::Index t = s; t <= n - 1 - s; ++t) {
      for (Eigen::Index h = -s; h <= s; ++h) gx.col(t + h) += inv * g.col(t);
    }
  });
}

Var dwt_band(Var x, Var taps) {
  if (taps.rows() != 1) throw Error("dwt_band: taps must be a 1 x F row");
  const int n = static_cast<int>(x.cols());
  if (n < 2) throw Error("dwt: signal length " + std::to_string(n) + " is below 2");
  const int f = static_cast<int>(taps.cols());
  const int m = wavelet::band_length(n, f);
  Matrix a = analysis_matrix(taps.value(), n);
  Matrix v = x.value() * a;
  const int ix = x.index();
  const int it = taps.index();
  return tape_of(x).record("dwt", std::move(v), {x, taps},
                           [ix, it, n, f, m, a = std::move(a)](Tape& tp, int self) {
                             const Matrix& g = tp.grad(self);
                             if (tp.requires_grad(ix)) tp.grad(ix).noalias() += g * a.transpose();
                             if (tp.requires_grad(it)) {
                               const Matrix q = tp.value(ix).transpose() * g;  // N x M
                               Matrix& gt = tp.grad(it);
                               for (int i = 0; i < m; ++i) {
                                 for (int j = 0; j < f; ++j) {
                                   gt(0, j) += q(wavelet::symmetric_index(2 * i + 1 - j, n), i);
                                 }
                               }
                             }
                           });
}

Var idwt(Var low, Var high, Var rec_lo, Var rec_hi, int target_length) {
  require_same_shape(low, high, "idwt");
  if (rec_lo.rows() != 1 || rec_hi.rows() != 1 || rec_lo.cols() != rec_hi.cols()) {
    throw Error("idwt: synthesis taps must be equal-length rows");
  }
  const int f = static_cast<int>(rec_lo.cols());
  const int m = static_cast<int>(low.cols());
  if (target_length < 1 || m != wavelet::band_length(target_length, f)) {
    throw Error("idwt: bands of length " + std::to_string(m) + " do not match target length " +
                std::to_string(target_length));
  }
  Matrix sl = synthesis_matrix(rec_lo.value(), m, target_length);
  Matrix sh = synthesis_matrix(rec_hi.value(), m, target_length);
  Matrix v = low.value() * sl + high.value() * sh;
  const int il = low.index();
  const int ih = high.index();
  const int igl = rec_lo.index();
  const int igh = rec_hi.index();
  const int n = target_length;
  return tape_of(low).record(
      "idwt", std::move(v), {low, high, rec_lo, rec_hi},
      [il, ih, igl, igh, f, m, n, sl = std::move(sl), sh = std::move(sh)](Tape& tp, int self) {
        const Matrix& g = tp.grad(self);
        if (tp.requires_grad(il)) tp.grad(il).noalias() += g * sl.transpose();
        if (tp.requires_grad(ih)) tp.grad(ih).noalias() += g * sh.transpose();
        const int offset = (2 * m - f + 2 - n) / 2;
        auto tap_grad = [&](int band, int taps_idx) {
          const Matrix p = tp.value(band).transpose() * g;  // M x N
          Matrix& gt = tp.grad(taps_idx);
          for (int t = 0; t < n; ++t) {
            for (int i = 0; i < m; ++i) {
              const int k = t + offset + f - 2 - 2 * i;
              if (k >= 0 && k < f) gt(0, k) += p(i, t);
            }
          }
        };
        if (tp.requires_grad(igl)) tap_grad(il, igl);
        if (tp.requires_grad(igh)) tap_grad(ih, igh);
      });
}

ComplexVar dft(Var x) {
  const auto& p = spectral::plan(static_cast<int>(x.cols()));
  return {linear_map(x, p.forward_re, "dft"), linear_map(x, p.forward_im, "dft")};
}

Var complex_abs(const ComplexVar& z, double eps) {
  require_same_shape(z.re, z.im, "complex_abs");
  Matrix v = z.re.value().binaryExpr(z.im.value(), [](double a, double b) { return std::hypot(a, b); });
  const int ir = z.re.index();
  const int ii = z.im.index();
  return tape_of(z.re).record("complex_abs", std::move(v), {z.re, z.im},
                              [ir, ii, eps](Tape& tp, int self) {
                                const Matrix& g = tp.grad(self);
                                const Matrix& mag = tp.value(self);
                                const Matrix& re = tp.value(ir);
                                const Matrix& im = tp.value(ii);
                                const auto safe = (mag.array() >= eps);
                                const Matrix inv = safe.select(mag.array().inverse(), 0.0);
                                if (tp.requires_grad(ir)) {
                                  tp.grad(ir).array() += g.array() * re.array() * inv.array();
                                }
                                if (tp.requires_grad(ii)) {
                                  tp.grad(ii).array() += g.array() * im.array() * inv.array();
                                }
                              });
}

Var phase(const ComplexVar& z, double eps) {
  require_same_shape(z.re, z.im, "phase");
  Matrix v = z.re.value().binaryExpr(
      z.im.value(), [eps](double a, double b) { return spectral::phase_of(a, b, eps); });
  const int ir = z.re.index();
  const int ii = z.im.index();
  return tape_of(z.re).record("atan2", std::move(v), {z.re, z.im}, [ir, ii, eps](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    const Matrix& re = tp.value(ir);
    const Matrix& im = tp.value(ii);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      for (Eigen::Index c = 0; c < g.cols(); ++c) {
        const double a = re(r, c);
        const double b = im(r, c);
        const double mag = std::hypot(a, b);
        if (mag < eps) continue;
        const double r2 = mag * mag;
        if (tp.requires_grad(ir)) tp.grad(ir)(r, c) += -g(r, c) * b / r2;
        if (tp.requires_grad(ii)) tp.grad(ii)(r, c) += g(r, c) * a / r2;
      }
    }
  });
}

Var wrap(Var x) {
  const int ix = x.index();
  Matrix v = x.value().unaryExpr([](double t) { return spectral::wrap_phase(t); });
  return tape_of(x).record("wrap", std::move(v), {x}, [ix](Tape& tp, int self) {
    if (tp.requires_grad(ix)) tp.grad(ix) += tp.grad(self);
  });
}

Var wrapped_residual(Var a, Var b) {
  require_same_shape(a, b, "wrapped_residual");
  const int ia = a.index();
  const int ib = b.index();
  Matrix v = (a.value() - b.value()).unaryExpr([](double t) { return spectral::wrap_phase(t); });
  return tape_of(a).record("phase_residual", std::move(v), {a, b}, [ia, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) tp.grad(ib) -= g;
  });
}

Var phase_shift(Var y, Var delta_w) {
  const int n = static_cast<int>(y.cols());
  const auto& p = spectral::plan(n);
  if (delta_w.rows() != y.rows() || delta_w.cols() != p.k) {
    throw Error("phase_shift: delta_w must be " + std::to_string(y.rows()) + "x" +
                std::to_string(p.k));
  }
  const Matrix re = y.value() * p.forward_re;
  const Matrix im = y.value() * p.forward_im;
  const Matrix c = delta_w.value().array().cos() - 1.0;
  const Matrix s = delta_w.value().array().sin();
  const Matrix dre = re.cwiseProduct(c) - im.cwiseProduct(s);
  const Matrix dim = re.cwiseProduct(s) + im.cwiseProduct(c);
  Matrix v = y.value() + dre * p.inverse_re + dim * p.inverse_im;
  const int iy = y.index();
  const int iw = delta_w.index();
  const spectral::DftPlan* pp = &p;
  return tape_of(y).record(
      "phase_shift", std::move(v), {y, delta_w},
      [iy, iw, pp, re, im, c, s](Tape& tp, int self) {
        const Matrix& g = tp.grad(self);
        const Matrix gdre = g * pp->inverse_re.transpose();
        const Matrix gdim = g * pp->inverse_im.transpose();
        if (tp.requires_grad(iy)) {
          const Matrix gre = gdre.cwiseProduct(c) + gdim.cwiseProduct(s);
          const Matrix gim = gdim.cwiseProduct(c) - gdre.cwiseProduct(s);
          tp.grad(iy) += g + gre * pp->forward_re.transpose() + gim * pp->forward_im.transpose();
        }
        if (tp.requires_grad(iw)) {
          // d(cos w - 1)/dw = -sin w = -s, d(sin w)/dw = cos w = c + 1.
          const Matrix cw = c.array() + 1.0;
          const Matrix d_dre = -re.cwiseProduct(s) - im.cwiseProduct(cw);
          const Matrix d_dim = re.cwiseProduct(cw) - im.cwiseProduct(s);
          tp.grad(iw) += gdre.cwiseProduct(d_dre) + gdim.cwiseProduct(d_dim);
        }
      });
}

Var mse(Var a, Var b) {
  require_same_shape(a, b, "mse");
  const int ia = a.index();
  const int ib = b.index();
  const Matrix diff = a.value() - b.value();
  const double n = static_cast<double>(diff.size());
  Matrix v(1, 1);
  v(0, 0) = diff.squaredNorm() / n;
  return tape_of(a).record("mse_reduce", std::move(v), {a, b}, [ia, ib, diff, n](Tape& tp, int self) {
    const double g = tp.grad(self)(0, 0);
    if (tp.requires_grad(ia)) tp.grad(ia) += (2.0 * g / n) * diff;
    if (tp.requires_grad(ib)) tp.grad(ib) -= (2.0 * g / n) * diff;
  });
}

}  // namespace apn::nn
