// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when a blocking criterion
// fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "grad_cases.hpp"
#include "support.hpp"
#include "timeapn/cli.hpp"
#include "timeapn/data.hpp"
#include "timeapn/denorm.hpp"
#include "timeapn/normalize.hpp"
#include "timeapn/pipeline.hpp"
#include "timeapn/spectral.hpp"
#include "timeapn/train.hpp"
#include "timeapn/wavelet.hpp"

namespace sp = apn::spectral;
namespace fs = std::filesystem;
using apn::Matrix;
using apn::Rng;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
  bool skipped = false;
};

int g_blocking_failures = 0;

void report(const std::string& name, double limit_s, bool blocking,
            const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const char* tag = v.skipped ? "SKIP" : (v.pass && in_time ? "PASS" : "FAIL");
  std::printf("%s  %s  [%.2f s, limit %.0f s%s] %s\n", tag, name.c_str(), secs, limit_s,
              blocking ? "" : ", non-blocking", v.detail.c_str());
  std::fflush(stdout);
  if (!v.skipped && !(v.pass && in_time) && blocking) ++g_blocking_failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<double> seeded(std::uint64_t seed, int n, double scale = 1.0) {
  Rng rng(seed);
  return support::random_vector(rng, n, scale);
}

Verdict spectral_suite() {
  std::vector<int> sizes;
  for (int n = 1; n <= 16; ++n) sizes.push_back(n);
  sizes.insert(sizes.end(), {95, 96, 336});
  double dft_err = 0, rt_err = 0, parseval = 0;
  for (int n : sizes) {
    const auto x = seeded(static_cast<std::uint64_t>(n), n);
    const auto X = sp::dft(x);
    for (int k = 0; k < X.size(); ++k) {
      long double re = 0, im = 0;
      for (int t = 0; t < n; ++t) {
        const long double a = -2.0L * std::numbers::pi_v<long double> *
                              static_cast<long double>((static_cast<long>(k) * t) % n) / n;
        re += x[t] * std::cos(a);
        im += x[t] * std::sin(a);
      }
      dft_err = std::max(dft_err, std::abs(X.bins[k] - sp::Complex(static_cast<double>(re),
                                                                   static_cast<double>(im))));
    }
    rt_err = std::max(rt_err, support::max_abs_diff(sp::idft(X), x));
    double time = 0, freq = 0;
    for (double v : x) time += v * v;
    for (int k = 0; k < X.size(); ++k) {
      const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
      freq += (edge ? 1.0 : 2.0) * std::norm(X.bins[k]);
    }
    parseval = std::max(parseval, std::abs(freq / n - time) / time);
  }
  const bool ok = dft_err < 1e-9 && rt_err < 1e-9 && parseval < 1e-7;
  return {ok, "max dft err " + fmt("%.2e", dft_err) + ", idft(dft) err " + fmt("%.2e", rt_err) +
                  ", Parseval rel " + fmt("%.2e", parseval)};
}

Verdict wavelet_suite() {
  const auto f = apn::wavelet::WaveletFilters::bior35();
  double pr = 0, detail = 0;
  for (int n = 12; n <= 512; ++n) {
    const auto x = seeded(5000 + static_cast<std::uint64_t>(n), n);
    const auto b = apn::wavelet::dwt(x, f);
    pr = std::max(pr, support::max_abs_diff(apn::wavelet::idwt(b.low, b.high, f, n), x));
    const auto c = apn::wavelet::dwt(std::vector<double>(static_cast<std::size_t>(n), 1.7), f);
    for (double h : c.high) detail = std::max(detail, std::abs(h));
  }
  return {pr < 1e-6 && detail < 1e-6,
          "N=12..512: max |idwt(dwt(x)) - x| " + fmt("%.2e", pr) + ", constant detail " +
              fmt("%.2e", detail)};
}

Verdict mean_norm_phase_suite() {
  Rng rng(77);
  std::size_t interior = 0, interior_ok = 0, edge = 0, edge_ok = 0, entries = 0, exact = 0;
  double worst_ulps = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(200));
    const int s = static_cast<int>(rng.below(static_cast<std::uint64_t>((n - 1) / 2 + 1)));
    const auto x = support::random_vector(rng, n, 5.0);
    const auto r = apn::normalize::mean_norm_phase(x, s);
    for (int t = s; t < n - s; ++t) {
      double acc = 0.0;
      for (int j = t - s; j <= t + s; ++j) acc += x[j];
      ++interior;
      interior_ok += r.mean[t] == acc / (2.0 * s + 1.0);
    }
    for (int t = 0; t < s; ++t) {
      edge += 2;
      edge_ok += (r.mean[t] == r.mean[s]) + (r.mean[n - 1 - t] == r.mean[n - 1 - s]);
    }
    for (int t = 0; t < n; ++t) {
      ++entries;
      const double sum = r.stationary[t] + r.mean[t];
      exact += sum == x[t];
      const double ulp = std::nextafter(std::abs(x[t]), INFINITY) - std::abs(x[t]);
      worst_ulps = std::max(worst_ulps, std::abs(sum - x[t]) / ulp);
    }
  }
  const bool ok = interior_ok == interior && edge_ok == edge && exact == entries;
  return {ok, "sliding_mean bitwise " + std::to_string(interior_ok) + "/" +
                  std::to_string(interior) + " interior, " + std::to_string(edge_ok) + "/" +
                  std::to_string(edge) + " boundary; x_bar + mu == x bitwise in " +
                  std::to_string(exact) + "/" + std::to_string(entries) +
                  " entries (worst " + fmt("%.1f", worst_ulps) +
                  " ulp: x_bar = fl(x - mu) carries one rounding)"};
}

Verdict denorm_suite() {
  Rng rng(88);
  double worst = 0;
  int even = 0, odd = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 8 + static_cast<int>(rng.below(120));
    (T % 2 == 0 ? even : odd)++;
    const Matrix y = rng.normal_matrix(2, T, 2.0);
    const Matrix mu = rng.normal_matrix(2, T);
    Matrix dw(2, T / 2 + 1);
    for (Eigen::Index i = 0; i < dw.size(); ++i) dw.data()[i] = rng.uniform(-3.1, 3.1);
    dw.col(0).setZero();
    if (T % 2 == 0) dw.col(dw.cols() - 1).setZero();
    const Matrix y_bar = apn::denorm::invert(y, mu, dw);
    const Matrix back = apn::denorm::denormalize({y_bar, mu, mu, dw, 0.5});
    worst = std::max(worst, (back - y).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-6, "50 cases (" + std::to_string(even) + " even T, " + std::to_string(odd) +
                            " odd T, endpoint bins clamped): max err " + fmt("%.2e", worst)};
}

Verdict gradient_suite() {
  double worst = 0;
  std::string where;
  int checked = 0, failed = 0;
  for (const auto& c : grad_cases::all_cases()) {
    for (std::uint64_t seed : grad_cases::kSeeds) {
      const auto r = c.run(seed);
      ++checked;
      if (!(r.worst < grad_cases::kTolerance)) ++failed;
      if (r.worst >= worst) {
        worst = r.worst;
        where = c.name + " seed " + std::to_string(seed) + " (" + r.where + ")";
      }
    }
  }
  return {failed == 0, std::to_string(checked) + " instances, eps 1e-5, worst rel err " +
                           fmt("%.2e", worst) + " at " + where};
}

Verdict zero_init_suite() {
  apn::ExperimentConfig cfg;
  apn::pipeline::Model model(cfg, 2);
  apn::data::SynthSpec spec = apn::data::drifting_phase_spec(1);
  const auto series = apn::data::generate_synthetic(spec);
  const auto windows = apn::make_windows(series.slice(0, 600), cfg.lookback, cfg.horizon, 50);
  const auto batch = apn::pipeline::make_batch(windows);
  apn::nn::Tape tape;
  const auto f = apn::pipeline::timeapn_factors(tape, tape.constant(batch.x), model);
  const Matrix y_star = apn::pipeline::predict(tape, model, batch).value();

  const auto rows = batch.x.rows();
  Matrix x_bar(rows, cfg.lookback), mu(rows, cfg.lookback), level(rows, cfg.horizon);
  for (Eigen::Index r = 0; r < rows; ++r) {
    std::vector<double> xr(batch.x.row(r).begin(), batch.x.row(r).end());
    const auto td = apn::normalize::mean_norm_phase(xr, cfg.window_half_width);
    x_bar.row(r) = Eigen::Map<const Eigen::RowVectorXd>(td.stationary.data(), cfg.lookback);
    mu.row(r) = Eigen::Map<const Eigen::RowVectorXd>(td.mean.data(), cfg.lookback);
    // Summation order matters for bitwise equality; reduce a matrix row as the pipeline does.
    level.row(r).setConstant(mu.row(r).mean());
  }
  const Matrix expected = model.fm->forecast(x_bar) + level;
  const bool dw_zero = (f.delta_w.value().array() == 0.0).all();
  const std::size_t exact = ((y_star.array() == expected.array()).cast<int>()).sum();
  return {dw_zero && exact == static_cast<std::size_t>(y_star.size()),
          std::string("delta_w == 0: ") + (dw_zero ? "yes" : "no") + "; y* == FM(x_bar) + mean(mu) bitwise in " +
              std::to_string(exact) + "/" + std::to_string(y_star.size()) + " entries"};
}

Verdict stage1_suite() {
  bool ok = true;
  std::string detail;
  for (std::uint64_t seed : {1, 2, 3}) {
    apn::ExperimentConfig cfg;
    cfg.seed = seed;
    cfg.patience = 0;
    cfg.epochs_stage1 = 20;
    const auto ds = apn::cli::prepare_dataset(
        apn::data::generate_synthetic(apn::data::drifting_phase_spec(seed)), cfg);
    const auto w = apn::cli::split_windows(ds, cfg);
    apn::pipeline::Model model(cfg, ds.standardized.channels());
    const auto trace = apn::train::train_stage1(model, w.train, w.val);
    const auto& first = trace.epochs.front();
    const auto& last = trace.epochs.at(19);
    const double ratio = last.train_loss / first.train_loss;
    const double raw = last.train_factor_loss / first.train_factor_loss;
    ok = ok && ratio < 0.5;
    detail += "seed " + std::to_string(seed) + ": objective " + fmt("%.4g", first.train_loss) +
              " -> " + fmt("%.4g", last.train_loss) + " (ratio " + fmt("%.3f", ratio) +
              "), beta " + fmt("%.3f", last.beta) + ", unweighted factor loss ratio " +
              fmt("%.3f", raw) + "; ";
  }
  return {ok, detail + "the objective is beta-weighted, so its ratio reflects beta as well as the heads"};
}

Verdict end_to_end_suite() {
  apn::ExperimentConfig cfg;
  const auto ds = apn::cli::prepare_dataset(
      apn::data::generate_synthetic(apn::data::drifting_phase_spec(1)), cfg);
  const auto res = apn::cli::compare(cfg, ds, {apn::Backbone::Linear},
                                     {apn::NormMode::TimeApn, apn::NormMode::RevIn, apn::NormMode::None},
                                     {1, 2, 3}, apn::cli::threads_from_env());
  double timeapn = 0, revin = 0, none = 0;
  for (const auto& r : res.rows) {
    if (r.norm == apn::NormMode::TimeApn) timeapn = r.mse_mean;
    if (r.norm == apn::NormMode::RevIn) revin = r.mse_mean;
    if (r.norm == apn::NormMode::None) none = r.mse_mean;
  }
  const double gain = 1.0 - timeapn / none;
  const bool ok = timeapn < revin && timeapn < none && gain >= 0.10;
  return {ok, "mean test MSE over seeds 1-3: timeapn " + fmt("%.5f", timeapn) + ", revin " +
                  fmt("%.5f", revin) + ", none " + fmt("%.5f", none) +
                  "; timeapn vs none " + fmt("%+.1f%%", -100.0 * gain)};
}

Verdict real_data_suite() {
  const char* path = std::getenv("APN_ETTH1");
  if (!path || !*path) return {false, "set APN_ETTH1 to an ETTh1 CSV to run", true};
  apn::ExperimentConfig cfg;
  cfg.lookback = 336;
  cfg.horizon = 96;
  const auto ds = apn::cli::prepare_dataset(apn::data::load_csv(path), cfg);
  const auto r = apn::cli::run_experiment(cfg, ds);
  return {r.test.mse <= 0.45, "test MSE " + fmt("%.4f", r.test.mse) + " (bound 0.45)"};
}

Verdict determinism_suite() {
  apn::ExperimentConfig cfg;
  cfg.seed = 7;
  const auto ds = apn::cli::prepare_dataset(
      apn::data::generate_synthetic(apn::data::drifting_phase_spec(1)), cfg);
  auto a = apn::cli::run_experiment(cfg, ds);
  auto b = apn::cli::run_experiment(cfg, ds);
  bool same_params = true;
  const auto pa = a.model->all_parameters(), pb = b.model->all_parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) same_params = same_params && pa[i]->value == pb[i]->value;
  const bool same_metrics = a.test.mse == b.test.mse && a.test.mae == b.test.mae &&
                            a.val.mse == b.val.mse && a.val.mae == b.val.mae;
  const auto path = (fs::temp_directory_path() / "timeapn_acceptance.apn").string();
  apn::train::save_checkpoint(*a.model, path, 2);
  auto loaded = apn::train::load_checkpoint(path);
  fs::remove(path);
  const auto w = apn::cli::split_windows(ds, cfg);
  Matrix p1, p2;
  const auto m1 = apn::train::evaluate(*a.model, w.test, &p1);
  const auto m2 = apn::train::evaluate(*loaded.model, w.test, &p2);
  const bool same_eval = m1.mse == m2.mse && m1.mae == m2.mae && p1 == p2 && m1.mse == a.test.mse;
  return {same_params && same_metrics && same_eval,
          std::string("rerun params ") + (same_params ? "identical" : "differ") + ", metrics " +
              (same_metrics ? "identical" : "differ") + "; save/load/evaluate " +
              (same_eval ? "identical" : "differs") + " (test MSE " + fmt("%.6f", m1.mse) + ")"};
}

}  // namespace

int main() {
  report("Spectral oracle suite", 5, true, spectral_suite);
  report("Wavelet perfect reconstruction", 10, true, wavelet_suite);
  report("MeanNormPhase oracle", 2, true, mean_norm_phase_suite);
  report("De-normalization invertibility", 5, true, denorm_suite);
  report("Gradient checks", 60, true, gradient_suite);
  report("Zero-init identity", 1, true, zero_init_suite);
  report("Stage-1 learning", 300, true, stage1_suite);
  report("End-to-end ordering", 900, true, end_to_end_suite);
  report("Real-data sanity (ETTh1)", 3600, false, real_data_suite);
  report("Determinism & checkpointing", 120, true, determinism_suite);
  std::printf("%d blocking criteria failed\n", g_blocking_failures);
  return g_blocking_failures == 0 ? 0 : 1;
}
