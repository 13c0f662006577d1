#pragma once

// Finite-difference gradient cases shared by the unit tests and the acceptance run.

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "support.hpp"
#include "timeapn/backbones.hpp"
#include "timeapn/nn/losses.hpp"
#include "timeapn/pipeline.hpp"
#include "timeapn/predict.hpp"
#include "timeapn/train.hpp"
#include "timeapn/wavelet.hpp"

namespace grad_cases {

using apn::Matrix;
using apn::Rng;
using apn::nn::Parameter;
using apn::nn::Tape;
using apn::nn::Var;
namespace nn = apn::nn;

struct Case {
  std::string name;
  std::function<support::GradReport(std::uint64_t seed)> run;
};

inline constexpr std::uint64_t kSeeds[] = {1, 2, 3};
inline constexpr double kTolerance = 1e-4;

/// Parameters with random values; the deque keeps addresses stable.
struct Leaves {
  std::deque<Parameter> store;
  Rng* rng;

  Parameter& add(const std::string& name, Eigen::Index r, Eigen::Index c, double sd = 1.0) {
    return store.emplace_back(name, rng->normal_matrix(r, c, sd));
  }
  std::vector<Parameter*> all() {
    std::vector<Parameter*> out;
    for (auto& p : store) out.push_back(&p);
    return out;
  }
};

using Forward = std::function<Var(Tape&)>;

/// Checks mean(W .* f(params)) for a random W fixed per seed.
inline support::GradReport check_projected(const std::vector<Parameter*>& params,
                                           const Forward& forward, Rng& rng) {
  Matrix w;
  {
    Tape t;
    Var out = forward(t);
    w = rng.normal_matrix(out.rows(), out.cols());
  }
  return support::gradcheck(params, [&](Tape& t) { return nn::mean_all(nn::mul_const(forward(t), w)); });
}

inline Case leaf_case(std::string name, std::function<Forward(Leaves&, Rng&)> build) {
  return {name, [build](std::uint64_t seed) {
            Rng rng(seed);
            auto leaves = std::make_shared<Leaves>();
            leaves->rng = &rng;
            Forward f = build(*leaves, rng);
            return check_projected(leaves->all(), f, rng);
          }};
}

inline void randomize(Parameter& p, Rng& rng, double sd) {
  p.value = rng.normal_matrix(p.value.rows(), p.value.cols(), sd);
}

inline apn::ExperimentConfig tiny_config(apn::NormMode norm, apn::Backbone backbone) {
  apn::ExperimentConfig c;
  c.lookback = 16;
  c.horizon = 8;
  c.window_half_width = 2;
  c.mean_hidden = 6;
  c.phase_width = 3;
  c.mlp_hidden = 6;
  c.alpha_init = 0.6;
  c.beta_init = 0.7;
  c.norm = norm;
  c.backbone = backbone;
  return c;
}

/// Forecast loss plus the supervised factor terms through the whole prediction path, with
/// the zero-initialised layers perturbed so every parameter carries gradient.
inline support::GradReport pipeline_case(std::uint64_t seed, apn::NormMode norm,
                                         apn::Backbone backbone) {
  auto cfg = tiny_config(norm, backbone);
  cfg.seed = seed;
  apn::pipeline::Model model(cfg, 2);
  Rng rng(seed + 100);
  if (model.mppm) {
    for (auto* head : {&model.mppm->mean_head_t, &model.mppm->mean_head_f}) {
      randomize(head->w2, rng, 0.3);
      randomize(head->b2, rng, 0.3);
    }
    randomize(model.mppm->phase_head.proj_w, rng, 0.2);
    randomize(model.mppm->phase_head.proj_b, rng, 0.2);
  }
  if (model.revin) {
    model.revin->gamma.value = rng.uniform_matrix(1, 2, 0.3).array() + 1.0;
    randomize(model.revin->delta, rng, 0.2);
  }
  std::vector<apn::WindowPair> windows;
  for (int i = 0; i < 2; ++i) {
    Matrix x = rng.normal_matrix(2, 16), y = rng.normal_matrix(2, 8);
    windows.push_back({apn::SeriesTensor(x), apn::SeriesTensor(y), i});
  }
  const auto batch = apn::pipeline::make_batch(windows);
  const Matrix phase_target =
      apn::train::phase_target(batch.x, batch.y, cfg.window_half_width, cfg.phase_target);
  Matrix mean_target(batch.y.rows(), batch.y.cols());
  for (Eigen::Index r = 0; r < batch.y.rows(); ++r) {
    std::vector<double> yr(batch.y.row(r).begin(), batch.y.row(r).end());
    const auto m = apn::normalize::sliding_mean(yr, cfg.window_half_width);
    mean_target.row(r) = Eigen::Map<const Eigen::RowVectorXd>(m.data(), 8);
  }
  auto loss = [&](Tape& t) {
    Var y = t.constant(batch.y);
    Var pred = apn::pipeline::predict(t, model, batch);
    Var total = nn::add(nn::loss_forecast(pred, y), nn::loss_amplitude(pred, y));
    if (model.mppm) {
      const auto f = apn::pipeline::timeapn_factors(t, t.constant(batch.x), model);
      Var factor = nn::add(nn::loss_mean(f.delta_mu, t.constant(mean_target)),
                           nn::loss_phase(f.delta_w, t.constant(phase_target)));
      factor = nn::add(factor, nn::loss_mean(f.delta_mu_f, t.constant(mean_target)));
      total = nn::add(total, nn::scalar_mul(t.parameter(model.mppm->beta), factor));
    }
    return total;
  };
  return support::gradcheck(model.all_parameters(), loss);
}

inline std::vector<Case> all_cases() {
  std::vector<Case> cases;
  cases.push_back(leaf_case("matmul", [](Leaves& L, Rng&) -> Forward {
    auto& a = L.add("a", 3, 4);
    auto& b = L.add("b", 4, 2);
    return [&](Tape& t) { return nn::matmul(t.parameter(a), t.parameter(b)); };
  }));
  cases.push_back(leaf_case("affine", [](Leaves& L, Rng&) -> Forward {
    auto& x = L.add("x", 3, 4);
    auto& w = L.add("w", 4, 5);
    auto& b = L.add("b", 1, 5);
    return [&](Tape& t) { return nn::affine(t.parameter(x), t.parameter(w), t.parameter(b)); };
  }));
  cases.push_back(leaf_case("linear_map", [](Leaves& L, Rng& rng) -> Forward {
    auto& x = L.add("x", 2, 6);
    auto m = std::make_shared<Matrix>(rng.normal_matrix(6, 3));
    return [&x, m](Tape& t) { return nn::linear_map(t.parameter(x), *m); };
  }));
  cases.push_back(leaf_case("add/sub/mul/scale", [](Leaves& L, Rng&) -> Forward {
    auto& a = L.add("a", 2, 5);
    auto& b = L.add("b", 2, 5);
    return [&](Tape& t) {
      Var va = t.parameter(a), vb = t.parameter(b);
      return nn::mul(nn::add(va, vb), nn::sub(va, nn::scale(vb, 0.5)));
    };
  }));
  cases.push_back(leaf_case("shift/square", [](Leaves& L, Rng&) -> Forward {
    auto& a = L.add("a", 3, 3);
    return [&](Tape& t) { return nn::square(nn::shift(t.parameter(a), 0.7)); };
  }));
  cases.push_back(leaf_case("scalar_mul", [](Leaves& L, Rng&) -> Forward {
    auto& s = L.add("s", 1, 1);
    auto& x = L.add("x", 3, 4);
    return [&](Tape& t) { return nn::scalar_mul(t.parameter(s), t.parameter(x)); };
  }));
  cases.push_back(leaf_case("mul_const", [](Leaves& L, Rng& rng) -> Forward {
    auto& x = L.add("x", 3, 4);
    Matrix m = rng.normal_matrix(3, 4);
    return [&x, m](Tape& t) { return nn::mul_const(t.parameter(x), m); };
  }));
  cases.push_back(leaf_case("relu", [](Leaves& L, Rng&) -> Forward {
    auto& x = L.add("x", 4, 6);
    // Keep entries away from the kink.
    for (Eigen::Index i = 0; i < x.value.size(); ++i) {
      double& v = x.value.data()[i];
      if (std::abs(v) < 0.05) v = v < 0 ? -0.1 : 0.1;
    }
    return [&](Tape& t) { return nn::relu(t.parameter(x)); };
  }));
  cases.push_back(leaf_case("concat/row_mean/add_col/mul_col/div_col", [](Leaves& L, Rng&) -> Forward {
    auto& a = L.add("a", 3, 4);
    auto& b = L.add("b", 3, 2);
    auto& v = L.add("v", 3, 1);
    auto& d = L.add("d", 3, 1, 0.1);
    return [&](Tape& t) {
      Var cat = nn::concat_cols(t.parameter(a), t.parameter(b));
      Var m = nn::row_mean(cat);
      Var den = nn::shift(nn::square(t.parameter(d)), 1.0);
      return nn::div_col(nn::mul_col(nn::add_col(cat, m), t.parameter(v)), den);
    };
  }));
  cases.push_back(leaf_case("reshape/gather_rows/mean_all", [](Leaves& L, Rng&) -> Forward {
    auto& x = L.add("x", 2, 6);
    auto& g = L.add("g", 1, 3);
    return [&](Tape& t) {
      Var r = nn::reshape(t.parameter(x), 4, 3);
      Var sel = nn::gather_rows(t.parameter(g), {2, 0, 0, 1});
      return nn::scalar_mul(nn::mean_all(nn::square(r)), nn::mul_col(r, sel));
    };
  }));
  cases.push_back(leaf_case("conv1d_causal", [](Leaves& L, Rng&) -> Forward {
    auto& x = L.add("x", 2 * 6, 2);
    auto& w = L.add("w", 3 * 2, 3);
    auto& b = L.add("b", 1, 3);
    return [&](Tape& t) {
      return nn::conv1d_causal(t.parameter(x), t.parameter(w), t.parameter(b), 6, 2);
    };
  }));
  cases.push_back(leaf_case("sliding_mean", [](Leaves& L, Rng&) -> Forward {
    auto& x = L.add("x", 3, 15);
    return [&](Tape& t) { return nn::sliding_mean(t.parameter(x), 3); };
  }));
  cases.push_back(leaf_case("dwt_band", [](Leaves& L, Rng&) -> Forward {
    auto& x = L.add("x", 2, 17);
    auto& taps = L.add("taps", 1, 12);
    return [&](Tape& t) { return nn::dwt_band(t.parameter(x), t.parameter(taps)); };
  }));
  cases.push_back(leaf_case("idwt", [](Leaves& L, Rng&) -> Forward {
    const int m = apn::wavelet::band_length(20, 12);
    auto& lo = L.add("lo", 2, m);
    auto& hi = L.add("hi", 2, m);
    auto& rl = L.add("rec_lo", 1, 12);
    auto& rh = L.add("rec_hi", 1, 12);
    return [&](Tape& t) {
      return nn::idwt(t.parameter(lo), t.parameter(hi), t.parameter(rl), t.parameter(rh), 20);
    };
  }));
  for (int n : {11, 12}) {
    const std::string tag = " (N=" + std::to_string(n) + ")";
    cases.push_back(leaf_case("dft" + tag, [n](Leaves& L, Rng&) -> Forward {
      auto& x = L.add("x", 2, n);
      return [&x](Tape& t) {
        auto z = nn::dft(t.parameter(x));
        return nn::concat_cols(z.re, z.im);
      };
    }));
    cases.push_back(leaf_case("complex_abs" + tag, [n](Leaves& L, Rng&) -> Forward {
      auto& x = L.add("x", 2, n);
      return [&x](Tape& t) { return nn::complex_abs(nn::dft(t.parameter(x))); };
    }));
    cases.push_back(leaf_case("phase" + tag, [n](Leaves& L, Rng&) -> Forward {
      auto& x = L.add("x", 2, n);
      return [&x](Tape& t) {
        // Bins 0 and Nyquist sit on the real axis where the phase jumps; drop them.
        Var p = nn::phase(nn::dft(t.parameter(x)));
        Matrix mask = Matrix::Ones(p.rows(), p.cols());
        mask.col(0).setZero();
        if (x.value.cols() % 2 == 0) mask.col(p.cols() - 1).setZero();
        return nn::mul_const(p, mask);
      };
    }));
    cases.push_back(leaf_case("phase_shift" + tag, [n](Leaves& L, Rng&) -> Forward {
      auto& y = L.add("y", 3, n);
      auto& dw = L.add("dw", 3, n / 2 + 1, 0.5);
      return [&y, &dw](Tape& t) { return nn::phase_shift(t.parameter(y), t.parameter(dw)); };
    }));
  }
  cases.push_back(leaf_case("wrap", [](Leaves& L, Rng&) -> Forward {
    auto& x = L.add("x", 2, 5, 0.5);
    return [&](Tape& t) { return nn::wrap(t.parameter(x)); };
  }));
  cases.push_back(leaf_case("wrapped_residual", [](Leaves& L, Rng&) -> Forward {
    auto& a = L.add("a", 2, 5, 0.5);
    auto& b = L.add("b", 2, 5, 0.5);
    return [&](Tape& t) { return nn::wrapped_residual(t.parameter(a), t.parameter(b)); };
  }));
  cases.push_back(leaf_case("mse", [](Leaves& L, Rng&) -> Forward {
    auto& a = L.add("a", 2, 5);
    auto& b = L.add("b", 2, 5);
    return [&](Tape& t) { return nn::mse(t.parameter(a), t.parameter(b)); };
  }));
  cases.push_back(leaf_case("losses", [](Leaves& L, Rng&) -> Forward {
    auto& ys = L.add("y_star", 2, 12);
    auto& y = L.add("y", 2, 12);
    auto& dw = L.add("dw", 2, 7, 0.5);
    auto& wy = L.add("wy", 2, 7, 0.5);
    return [&](Tape& t) {
      Var a = t.parameter(ys), b = t.parameter(y);
      Var s = nn::add(nn::loss_forecast(a, b), nn::loss_amplitude(a, b));
      s = nn::add(s, nn::loss_mean(a, b));
      return nn::add(s, nn::loss_phase(t.parameter(dw), t.parameter(wy)));
    };
  }));

  cases.push_back({"MeanHead", [](std::uint64_t seed) {
                     Rng rng(seed);
                     apn::predict::MeanHead head(10, 6, 4, rng, "m");
                     randomize(head.w2, rng, 0.3);
                     randomize(head.b2, rng, 0.3);
                     const Matrix mu = rng.normal_matrix(3, 10), x = rng.normal_matrix(3, 10);
                     return check_projected(head.parameters(), [&](Tape& t) {
                       return apn::predict::predict_mean(t, t.constant(mu), t.constant(x), head);
                     }, rng);
                   }});
  cases.push_back({"PhaseHead", [](std::uint64_t seed) {
                     Rng rng(seed);
                     apn::predict::PhaseHead head(14, 3, 10, rng, "p");
                     randomize(head.proj_w, rng, 0.2);
                     randomize(head.proj_b, rng, 0.2);
                     Matrix in(2, 8);
                     for (Eigen::Index i = 0; i < in.size(); ++i) in.data()[i] = rng.uniform(-3, 3);
                     return check_projected(head.parameters(), [&](Tape& t) {
                       return apn::predict::predict_phase(t, t.constant(in), head);
                     }, rng);
                   }});
  for (auto kind : {apn::Backbone::Linear, apn::Backbone::Mlp}) {
    cases.push_back({"backbone " + apn::to_string(kind), [kind](std::uint64_t seed) {
                       Rng rng(seed);
                       auto cfg = tiny_config(apn::NormMode::None, kind);
                       auto fm = apn::backbones::make_backbone(cfg, rng);
                       const Matrix x = rng.normal_matrix(4, cfg.lookback);
                       return check_projected(fm->parameters(), [&](Tape& t) {
                         return fm->forward(t, t.constant(x));
                       }, rng);
                     }});
  }
  for (auto norm : {apn::NormMode::TimeApn, apn::NormMode::RevIn, apn::NormMode::None}) {
    for (auto kind : {apn::Backbone::Linear, apn::Backbone::Mlp}) {
      cases.push_back({"pipeline loss " + apn::to_string(norm) + "+" + apn::to_string(kind),
                       [norm, kind](std::uint64_t seed) { return pipeline_case(seed, norm, kind); }});
    }
  }
  return cases;
}

}  // namespace grad_cases
