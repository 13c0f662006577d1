#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "support.hpp"
#include "timeapn/normalize.hpp"
#include "timeapn/spectral.hpp"

namespace nz = apn::normalize;
namespace wv = apn::wavelet;

namespace {

// Direct window sum, in the same summation order, with edge replication.
std::vector<double> brute_sliding_mean(const std::vector<double>& x, int s) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(x.size());
  for (int t = 0; t < n; ++t) {
    const int centre = std::clamp(t, s, n - 1 - s);
    double acc = 0.0;
    for (int j = centre - s; j <= centre + s; ++j) acc += x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(t)] = acc / (2.0 * s + 1.0);
  }
  return out;
}

apn::Matrix random_matrix(std::uint64_t seed, int rows, int cols) {
  apn::Rng rng(seed);
  return rng.normal_matrix(rows, cols);
}

}  // namespace

TEST_CASE("sliding_mean example with edge replication") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const auto m = nz::sliding_mean(x, 1);
  CHECK(m == std::vector<double>{2, 2, 3, 4, 4});
  CHECK(nz::sliding_mean(x, 0) == x);
  CHECK(nz::sliding_mean(std::vector<double>(9, 4.5), 3) == std::vector<double>(9, 4.5));
  CHECK_THROWS_AS(nz::sliding_mean(x, 3), apn::Error);
}

TEST_CASE("sliding_mean agrees bitwise with a brute-force window sum") {
  apn::Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(200));
    const int s = static_cast<int>(rng.below(static_cast<std::uint64_t>((n - 1) / 2 + 1)));
    const auto x = support::random_vector(rng, n, 10.0);
    CHECK(nz::sliding_mean(x, s) == brute_sliding_mean(x, s));
  }
}

TEST_CASE("sliding_mean commutes with adding a constant") {
  apn::Rng rng(32);
  const auto x = support::random_vector(rng, 60);
  auto y = x;
  for (double& v : y) v += 7.0;
  const auto mx = nz::sliding_mean(x, 6), my = nz::sliding_mean(y, 6);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(my[i] - (mx[i] + 7.0)) < 1e-12);
}

TEST_CASE("sliding_mean recovers a ramp under a full-period sinusoid") {
  const int s = 6, period = 2 * s + 1, n = 96;
  std::vector<double> x(n), trend(n);
  for (int t = 0; t < n; ++t) {
    trend[t] = 0.3 + 0.02 * t;
    x[t] = trend[t] + std::sin(2.0 * std::numbers::pi * t / period);
  }
  const auto m = nz::sliding_mean(x, s);
  for (int t = s; t < n - s; ++t) CHECK(std::abs(m[t] - trend[t]) < 1e-12);
}

TEST_CASE("mean_norm_phase splits x into stationary part and mean") {
  apn::Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = support::random_vector(rng, 96, 3.0);
    const auto r = nz::mean_norm_phase(x, 12);
    for (std::size_t t = 0; t < x.size(); ++t) {
      CHECK(r.stationary[t] == x[t] - r.mean[t]);
      // One rounded subtraction: the sum is off by at most half an ulp of the stationary part.
      const double gap = std::abs((r.stationary[t] + r.mean[t]) - x[t]);
      CHECK(gap <= std::ldexp(std::abs(r.stationary[t]), -52) + std::ldexp(std::abs(x[t]), -53));
    }
    CHECK(r.phase.size() == 49);
    const auto expected = apn::spectral::amp_phase(apn::spectral::dft(r.stationary)).phase;
    CHECK(r.phase == expected);
  }
  const auto flat = nz::mean_norm_phase(std::vector<double>(24, 2.0), 3);
  for (double v : flat.stationary) CHECK(v == 0.0);
  for (double p : flat.phase) CHECK(p == 0.0);
}

TEST_CASE("freq_domain_normalize decomposes x") {
  const auto f = wv::WaveletFilters::bior35();
  apn::Rng rng(34);
  for (int n : {25, 96, 336}) {
    const auto x = support::random_vector(rng, n);
    const auto r = nz::freq_domain_normalize(x, f, 12);
    REQUIRE(r.stationary.size() == x.size());
    for (std::size_t t = 0; t < x.size(); ++t)
      CHECK(std::abs(r.stationary[t] + r.mean[t] - x[t]) < 1e-5);
  }
  const auto flat = nz::freq_domain_normalize(std::vector<double>(96, -1.5), f, 12);
  for (std::size_t t = 0; t < 96; ++t) {
    CHECK(std::abs(flat.mean[t] + 1.5) < 1e-5);
    CHECK(std::abs(flat.stationary[t]) < 1e-5);
  }
}

TEST_CASE("fuse endpoints and mixture") {
  const std::vector<double> a{1, 2, 3}, b{-1, 0, 5};
  CHECK(nz::fuse(a, b, 1.0) == a);
  CHECK(nz::fuse(a, b, 0.0) == b);
  const auto half = nz::fuse(a, b, 0.5);
  CHECK(half == std::vector<double>{0, 1, 4});
  CHECK_THROWS_AS(nz::fuse(a, std::vector<double>{1, 2}, 0.5), apn::Error);
}

TEST_CASE("normalize_window composes the per-channel transforms") {
  const auto f = wv::WaveletFilters::bior35();
  const apn::SeriesTensor x(random_matrix(35, 3, 96));
  const auto b = nz::normalize_window(x, f, 12, 0.3);
  CHECK(b.phase_t.cols() == 49);
  for (int c = 0; c < 3; ++c) {
    const auto td = nz::mean_norm_phase(x.channel(c), 12);
    const auto fd = nz::freq_domain_normalize(x.channel(c), f, 12);
    const auto fused = nz::fuse(td.stationary, fd.stationary, 0.3);
    for (int t = 0; t < 96; ++t) {
      CHECK(b.mean_t(c, t) == td.mean[t]);
      CHECK(b.stationary_t(c, t) == td.stationary[t]);
      CHECK(b.mean_f(c, t) == fd.mean[t]);
      CHECK(b.stationary_f(c, t) == fd.stationary[t]);
      CHECK(b.fused(c, t) == fused[t]);
    }
    for (int k = 0; k < 49; ++k) CHECK(b.phase_t(c, k) == td.phase[k]);
  }
}

TEST_CASE("normalize_window is equivariant to channel permutation") {
  const auto f = wv::WaveletFilters::bior35();
  const apn::Matrix m = random_matrix(36, 3, 48);
  apn::Matrix perm(3, 48);
  perm.row(0) = m.row(2);
  perm.row(1) = m.row(0);
  perm.row(2) = m.row(1);
  const auto a = nz::normalize_window(apn::SeriesTensor(m), f, 5, 0.7);
  const auto b = nz::normalize_window(apn::SeriesTensor(perm), f, 5, 0.7);
  CHECK(b.fused.row(0) == a.fused.row(2));
  CHECK(b.mean_f.row(1) == a.mean_f.row(0));
  CHECK(b.phase_t.row(2) == a.phase_t.row(1));
}
