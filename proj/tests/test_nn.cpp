#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "grad_cases.hpp"
#include "support.hpp"
#include "timeapn/nn/adam.hpp"
#include "timeapn/nn/losses.hpp"
#include "timeapn/spectral.hpp"
#include "timeapn/wavelet.hpp"

using apn::Matrix;
using apn::Rng;
using apn::nn::Parameter;
using apn::nn::Tape;
using apn::nn::Var;
namespace nn = apn::nn;


TEST_CASE("backward of a squared dot product matches the closed form") {
  Rng rng(41);
  const Matrix x = rng.normal_matrix(1, 7);
  Parameter w("w", rng.normal_matrix(7, 1));
  Parameter unused("unused", rng.normal_matrix(2, 2));
  Tape t;
  Var l = nn::square(nn::matmul(t.constant(x), t.parameter(w)));
  t.parameter(unused);
  t.backward(l);
  const double dot = (x * w.value)(0, 0);
  const Matrix expected = 2.0 * dot * x.transpose();
  CHECK((w.grad - expected).norm() < 1e-12);
  CHECK(unused.grad.norm() == 0.0);
}

TEST_CASE("backward accumulates across uses and rejects opaque nodes") {
  Parameter p("p", Matrix::Constant(1, 1, 2.0));
  {
    Tape t;
    Var a = t.parameter(p);
    t.backward(nn::mul(a, a));
  }
  CHECK(p.grad(0, 0) == doctest::Approx(4.0));
  p.zero_grad();
  Tape t;
  Var a = t.parameter(p);
  Var o = t.opaque("external_solver", a.value() * 2.0, {a});
  CHECK_THROWS_WITH_AS(t.backward(nn::mean_all(o)), doctest::Contains("external_solver"),
                       apn::Error);
  Tape t2;
  CHECK_THROWS_AS(t2.backward(t2.constant(Matrix::Zero(2, 1))), apn::Error);
}

TEST_CASE("every primitive, head, backbone and pipeline loss passes a gradient check") {
  for (const auto& c : grad_cases::all_cases()) {
    for (std::uint64_t seed : grad_cases::kSeeds) {
      const auto r = c.run(seed);
      INFO(c.name << " seed " << seed << " worst " << r.worst << " at " << r.where);
      CHECK(r.worst < grad_cases::kTolerance);
    }
  }
}

TEST_CASE("phase_shift forward equals the single-series realisation") {
  Rng rng(42);
  const Matrix y = rng.normal_matrix(3, 10);
  Matrix dw = rng.normal_matrix(3, 6);
  dw.col(0).setZero();
  dw.col(5).setZero();
  Tape t;
  const Matrix out = nn::phase_shift(t.constant(y), t.constant(dw)).value();
  for (int r = 0; r < 3; ++r) {
    std::vector<double> yr(y.row(r).begin(), y.row(r).end());
    std::vector<double> wr(dw.row(r).begin(), dw.row(r).end());
    const auto ref = apn::spectral::apply_phase_shift(yr, wr);
    for (int c = 0; c < 10; ++c) CHECK(std::abs(out(r, c) - ref[c]) < 1e-12);
  }
}

TEST_CASE("adam first step and zero gradient") {
  Parameter p("p", Matrix::Constant(1, 1, 1.0));
  Parameter q("q", Matrix::Constant(1, 2, 5.0));
  nn::AdamState st;
  st.lr = 0.1;
  p.grad(0, 0) = 2.0;
  q.zero_grad();
  std::vector<Parameter*> ps{&p, &q};
  nn::adam_step(ps, st);
  // m_hat = g, v_hat = g^2 after one step.
  CHECK(p.value(0, 0) == doctest::Approx(1.0 - 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
  CHECK(q.value == Matrix::Constant(1, 2, 5.0));
  CHECK(p.grad(0, 0) == 0.0);
}

TEST_CASE("adam minimises a quadratic") {
  Parameter p("p", Matrix::Zero(1, 1));
  nn::AdamState st;
  st.lr = 0.05;
  std::vector<Parameter*> ps{&p};
  for (int i = 0; i < 2000; ++i) {
    Tape t;
    t.backward(nn::square(nn::shift(t.parameter(p), -3.0)));
    nn::adam_step(ps, st);
  }
  CHECK(p.value(0, 0) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("adam refuses non-finite gradients without touching parameters") {
  Parameter a("a", Matrix::Constant(1, 1, 1.0));
  Parameter b("b", Matrix::Constant(1, 1, 1.0));
  a.grad(0, 0) = 1.0;
  b.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  nn::AdamState st;
  std::vector<Parameter*> ps{&a, &b};
  CHECK_THROWS_WITH_AS(nn::adam_step(ps, st), doctest::Contains("'b'"), apn::Error);
  CHECK(a.value(0, 0) == 1.0);
  CHECK(st.step == 0);
}

TEST_CASE("loss examples") {
  Matrix a(1, 2), b(1, 2);
  a << 1, 2;
  b << 1, 4;
  CHECK(nn::loss_forecast(a, b) == doctest::Approx(2.0));
  CHECK(nn::loss_mean(a, b) == doctest::Approx(2.0));
  Matrix w1(1, 1), w2(1, 1);
  w1 << std::numbers::pi - 0.1;
  w2 << -std::numbers::pi + 0.1;
  CHECK(nn::loss_phase(w1, w2) == doctest::Approx(0.04));
  CHECK_THROWS_AS(nn::loss_forecast(a, Matrix::Zero(2, 1)), apn::Error);
}

TEST_CASE("amplitude loss ignores circular shifts and matches a direct formula") {
  Rng rng(43);
  const Matrix y = rng.normal_matrix(2, 16);
  Matrix shifted(2, 16);
  for (int t = 0; t < 16; ++t) shifted.col((t + 5) % 16) = y.col(t);
  CHECK(nn::loss_amplitude(shifted, y) < 1e-24);
  const Matrix z = rng.normal_matrix(2, 16);
  double acc = 0.0;
  int count = 0;
  for (int r = 0; r < 2; ++r) {
    std::vector<double> zr(z.row(r).begin(), z.row(r).end()), yr(y.row(r).begin(), y.row(r).end());
    const auto az = apn::spectral::amp_phase(apn::spectral::dft(zr)).amplitude;
    const auto ay = apn::spectral::amp_phase(apn::spectral::dft(yr)).amplitude;
    for (std::size_t k = 0; k < az.size(); ++k, ++count) acc += std::pow((az[k] - ay[k]) / 16.0, 2);
  }
  CHECK(nn::loss_amplitude(z, y) == doctest::Approx(acc / count).epsilon(1e-12));
  Tape t;
  CHECK(nn::loss_amplitude(t.constant(z), t.constant(y)).value()(0, 0) ==
        doctest::Approx(acc / count).epsilon(1e-12));
}
