#include "timeapn/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

namespace apn::cli {

using nlohmann::json;

SplitWindows split_windows(const data::Dataset& ds, const ExperimentConfig& config) {
  const int l = config.lookback;
  const int t = config.horizon;
  return {make_windows(ds.train(), l, t, config.train_stride),
          make_windows(ds.val(), l, t, config.train_stride), make_windows(ds.test(), l, t, t)};
}

data::Dataset prepare_dataset(const SeriesTensor& series, const ExperimentConfig& config) {
  return data::split_standardize(series, config.split_train, config.split_val, config.split_test,
                                 config.lookback + config.horizon);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const data::Dataset& ds) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto w = split_windows(ds, config);
  ExperimentResult r;
  r.model = std::make_unique<pipeline::Model>(config, ds.standardized.channels());
  if (config.norm == NormMode::TimeApn) r.stage1 = train::train_stage1(*r.model, w.train, w.val);
  r.stage2 = train::train_stage2(*r.model, w.train, w.val);
  r.val = train::evaluate(*r.model, w.val);
  r.test = train::evaluate(*r.model, w.test);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation; 0 for a single value.
double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

CompareResult compare(const ExperimentConfig& base, const data::Dataset& ds,
                      const std::vector<Backbone>& backbones, const std::vector<NormMode>& norms,
                      const std::vector<std::uint64_t>& seeds, int threads) {
  if (backbones.empty() || norms.empty() || seeds.empty()) {
    throw Error("compare: backbones, norms and seeds must be non-empty");
  }
  CompareResult out;
  for (Backbone b : backbones) {
    for (NormMode n : norms) {
      for (std::uint64_t s : seeds) out.cells.push_back({b, n, s, {}});
    }
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(out.cells.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < out.cells.size(); i = next++) {
      auto& cell = out.cells[i];
      try {
        ExperimentConfig cfg = base;
        cfg.backbone = cell.backbone;
        cfg.norm = cell.norm;
        cfg.seed = cell.seed;
        cell.test = run_experiment(cfg, ds).test;
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(threads, static_cast<int>(out.cells.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error("compare: " + e);
  }

  for (Backbone b : backbones) {
    const std::size_t first = out.rows.size();
    for (NormMode n : norms) {
      std::vector<double> mse;
      std::vector<double> mae;
      for (const auto& c : out.cells) {
        if (c.backbone == b && c.norm == n) {
          mse.push_back(c.test.mse);
          mae.push_back(c.test.mae);
        }
      }
      out.rows.push_back({b, n, mean_of(mse), std_of(mse), mean_of(mae), std_of(mae), false});
    }
    auto best = std::min_element(out.rows.begin() + static_cast<std::ptrdiff_t>(first), out.rows.end(),
                                 [](const auto& x, const auto& y) { return x.mse_mean < y.mse_mean; });
    best->best = true;
  }
  return out;
}

std::string format_table(const CompareResult& result) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-9s %-8s %-22s %-22s\n", "backbone", "norm", "mse (mean±std)",
                "mae (mean±std)");
  out << line;
  for (const auto& r : result.rows) {
    char mse[40];
    char mae[40];
    std::snprintf(mse, sizeof mse, "%.5f±%.5f", r.mse_mean, r.mse_std);
    std::snprintf(mae, sizeof mae, "%.5f±%.5f", r.mae_mean, r.mae_std);
    std::snprintf(line, sizeof line, "%-9s %-8s %-22s %-22s%s\n", to_string(r.backbone).c_str(),
                  to_string(r.norm).c_str(), mse, mae, r.best ? " *" : "");
    out << line;
  }
  return out.str();
}

int threads_from_env() {
  const char* v = std::getenv("APN_THREADS");
  if (!v || !*v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw Error(std::string("APN_THREADS must be a positive integer, got '") + v + "'");
  return static_cast<int>(std::min<long>(n, 256));
}

namespace {

json trace_json(const train::StageTrace& t) {
  json epochs = json::array();
  for (const auto& e : t.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss},
                      {"train_factor_loss", e.train_factor_loss},
                      {"val_factor_loss", e.val_factor_loss},
                      {"alpha", e.alpha},
                      {"beta", e.beta}});
  }
  return {{"epochs", epochs}, {"best_epoch", t.best_epoch}, {"early_stopped", t.early_stopped}};
}

json metrics_json(const train::Metrics& m, int horizon) {
  return {{"horizon", horizon}, {"mse", m.mse}, {"mae", m.mae}, {"windows", m.windows}};
}

json config_json(const ExperimentConfig& c) {
  json j = json::object();
  std::istringstream in(c.to_text());
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& s, F parse_one) {
  std::vector<T> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(parse_one(item));
  }
  if (out.empty()) throw Error("empty list '" + s + "'");
  return out;
}

/// Flags shared by train and compare. Values given on the command line override --config.
struct ConfigFlags {
  std::string config_file;
  std::string data;
  ExperimentConfig c;
  std::string backbone = "linear";
  std::string norm = "timeapn";
  std::string phase_target = to_string(ExperimentConfig{}.phase_target);
  std::vector<std::pair<std::string, CLI::Option*>> overrides;

  void add(CLI::App& app, bool with_model_choice) {
    app.add_option("--data", data, "benchmark CSV (date column + channels)")->required()->check(CLI::ExistingFile);
    app.add_option("--config", config_file, "canonical key=value config file")->check(CLI::ExistingFile);
    auto reg = [&](const std::string& key, CLI::Option* o) { overrides.emplace_back(key, o); };
    reg("lookback", app.add_option("--lookback", c.lookback)->check(CLI::PositiveNumber));
    reg("horizon", app.add_option("--horizon", c.horizon)->check(CLI::PositiveNumber));
    reg("window_half_width", app.add_option("--window", c.window_half_width, "sliding-mean half width s")->check(CLI::NonNegativeNumber));
    reg("batch_size", app.add_option("--batch", c.batch_size)->check(CLI::PositiveNumber));
    reg("epochs_stage1", app.add_option("--epochs1", c.epochs_stage1)->check(CLI::PositiveNumber));
    reg("epochs_stage2", app.add_option("--epochs2", c.epochs_stage2)->check(CLI::PositiveNumber));
    reg("learning_rate", app.add_option("--lr", c.learning_rate)->check(CLI::PositiveNumber));
    reg("patience", app.add_option("--patience", c.patience, "0 disables early stopping")->check(CLI::NonNegativeNumber));
    reg("train_stride", app.add_option("--stride", c.train_stride)->check(CLI::PositiveNumber));
    reg("phase_target", app.add_option("--phase-target", phase_target)->check(CLI::IsMember({"absolute", "drift"})));
    reg("alpha_init", app.add_option("--alpha-init", c.alpha_init));
    reg("beta_init", app.add_option("--beta-init", c.beta_init));
    if (with_model_choice) {
      reg("backbone", app.add_option("--backbone", backbone)->check(CLI::IsMember({"linear", "mlp"})));
      reg("norm", app.add_option("--norm", norm)->check(CLI::IsMember({"timeapn", "revin", "none"})));
      reg("seed", app.add_option("--seed", c.seed));
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig out;
    if (!config_file.empty()) out = ExperimentConfig::parse(read_file(config_file));
    std::ostringstream text;
    const auto flags = config_json(c);
    for (const auto& [key, opt] : overrides) {
      if (opt->count() == 0) continue;
      if (key == "backbone") {
        text << "backbone=" << backbone << '\n';
      } else if (key == "norm") {
        text << "norm=" << norm << '\n';
      } else if (key == "phase_target") {
        text << "phase_target=" << phase_target << '\n';
      } else {
        text << key << '=' << flags.at(key).get<std::string>() << '\n';
      }
    }
    out = ExperimentConfig::parse(text.str(), out);
    out.validate();
    return out;
  }
};

int cmd_synth(const data::SynthSpec& spec, const std::string& out) {
  data::write_csv(out, data::generate_synthetic(spec));
  std::cout << json{{"out", out}, {"length", spec.length}, {"channels", spec.channels}, {"seed", spec.seed}}.dump()
            << '\n';
  return 0;
}

int cmd_train(const ConfigFlags& flags, const std::string& out_dir) {
  const ExperimentConfig cfg = flags.resolve();
  const auto ds = prepare_dataset(data::load_csv(flags.data), cfg);
  auto r = run_experiment(cfg, ds);
  std::filesystem::create_directories(out_dir);
  const auto ckpt = std::filesystem::path(out_dir) / "checkpoint.apn";
  train::save_checkpoint(*r.model, ckpt.string(), 2);

  json m;
  m["run_id"] = run_id(cfg);
  m["config"] = config_json(cfg);
  m["config_text"] = cfg.to_text();
  m["data"] = flags.data;
  m["channels"] = ds.standardized.channels();
  m["splits"] = {{"train", {0, ds.train_end}},
                 {"val", {ds.train_end, ds.val_end}},
                 {"test", {ds.val_end, ds.standardized.length()}}};
  if (r.stage1) m["stage1"] = trace_json(*r.stage1);
  m["stage2"] = trace_json(r.stage2);
  m["val"] = metrics_json(r.val, cfg.horizon);
  m["test"] = metrics_json(r.test, cfg.horizon);
  m["checkpoint"] = ckpt.string();
  json timings = {{"total_s", r.seconds}, {"stage2_s", r.stage2.seconds}};
  if (r.stage1) timings["stage1_s"] = r.stage1->seconds;
  m["timings"] = timings;
  const std::string text = m.dump(2);
  write_file(std::filesystem::path(out_dir) / "manifest.json", text + "\n");
  std::cout << text << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path, std::string out) {
  if (!std::filesystem::exists(checkpoint)) throw Error("checkpoint '" + checkpoint + "' not found");
  auto loaded = train::load_checkpoint(checkpoint);
  auto& model = *loaded.model;
  const auto series = data::load_csv(data_path);
  if (series.channels() != model.channels) {
    throw Error("checkpoint expects " + std::to_string(model.channels) + " channels, data has " +
                std::to_string(series.channels()));
  }
  const auto ds = prepare_dataset(series, model.config);
  const auto w = split_windows(ds, model.config);
  Matrix pred;
  const auto metrics = train::evaluate(model, w.test, &pred);

  const int c = model.channels;
  const int t = model.config.horizon;
  if (out.empty()) out = (std::filesystem::path(checkpoint).parent_path() / "predictions.csv").string();
  Matrix rows(c, static_cast<Eigen::Index>(w.test.size()) * t);
  std::vector<std::string> stamps;
  for (std::size_t i = 0; i < w.test.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i) * t;
    rows.middleCols(col, t) = pred.middleRows(static_cast<Eigen::Index>(i) * c, c);
    const long start = ds.val_end + w.test[i].offset + model.config.lookback;
    for (int k = 0; k < t; ++k) stamps.push_back(std::to_string(start + k));
  }
  data::write_csv(out, SeriesTensor(rows, series.channel_names()), stamps);

  json j = metrics_json(metrics, t);
  j["run_id"] = run_id(model.config);
  j["predictions"] = out;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_compare(const ConfigFlags& flags, const std::string& backbones, const std::string& norms,
                const std::string& seeds) {
  const ExperimentConfig cfg = flags.resolve();
  const auto bbs = parse_list<Backbone>(backbones, parse_backbone);
  const auto nms = parse_list<NormMode>(norms, parse_norm);
  const auto sds = parse_list<std::uint64_t>(seeds, [](const std::string& s) {
    char* end = nullptr;
    const auto v = std::strtoull(s.c_str(), &end, 10);
    if (*end != '\0') throw Error("bad seed '" + s + "'");
    return static_cast<std::uint64_t>(v);
  });
  const auto ds = prepare_dataset(data::load_csv(flags.data), cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = compare(cfg, ds, bbs, nms, sds, threads_from_env());

  json cells = json::array();
  for (const auto& c : res.cells) {
    cells.push_back({{"backbone", to_string(c.backbone)},
                     {"norm", to_string(c.norm)},
                     {"seed", c.seed},
                     {"mse", c.test.mse},
                     {"mae", c.test.mae}});
  }
  json rows = json::array();
  for (const auto& r : res.rows) {
    rows.push_back({{"backbone", to_string(r.backbone)},
                    {"norm", to_string(r.norm)},
                    {"mse_mean", r.mse_mean},
                    {"mse_std", r.mse_std},
                    {"mae_mean", r.mae_mean},
                    {"mae_std", r.mae_std},
                    {"best", r.best}});
  }
  json j = {{"run_id", run_id(cfg)},
            {"config", config_json(cfg)},
            {"horizon", cfg.horizon},
            {"cells", cells},
            {"rows", rows},
            {"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
  std::cerr << format_table(res);
  std::cout << j.dump(2) << '\n';
  return 0;
}

std::vector<std::pair<double, double>> parse_envelope(const std::string& s) {
  return parse_list<std::pair<double, double>>(s, [](const std::string& item) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error("envelope breakpoint '" + item + "' is not t:A");
    return std::pair<double, double>(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
  });
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"TimeAPN: amplitude/phase-aware reversible normalization for forecasting"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "write a seeded synthetic non-stationary series as CSV");
  data::SynthSpec spec;
  std::string synth_out;
  std::string slopes;
  std::string envelope;
  synth->add_option("--length", spec.length)->required()->check(CLI::Range(1, 100000000));
  synth->add_option("--channels", spec.channels)->check(CLI::Range(1, 100000));
  synth->add_option("--period", spec.period)->check(CLI::Range(2.0, 1e12));
  synth->add_option("--drift", spec.drift, "phase drift in radians per step");
  synth->add_option("--noise", spec.noise_std)->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", spec.seed);
  synth->add_option("--slopes", slopes, "comma-separated per-channel trend slopes");
  synth->add_option("--envelope", envelope, "amplitude breakpoints t:A,t:A,...");
  synth->add_option("--out", synth_out)->required();

  auto* trn = app.add_subcommand("train", "train one configuration, write checkpoint and manifest");
  ConfigFlags train_flags;
  train_flags.add(*trn, true);
  std::string out_dir;
  trn->add_option("--out-dir", out_dir)->required();

  auto* ev = app.add_subcommand("eval", "score a checkpoint on the test split");
  std::string checkpoint;
  std::string eval_data;
  std::string eval_out;
  ev->add_option("--checkpoint", checkpoint)->required();
  ev->add_option("--data", eval_data)->required();
  ev->add_option("--out", eval_out, "predictions CSV (default: next to the checkpoint)");

  auto* cmp = app.add_subcommand("compare", "train every backbone x norm x seed cell");
  ConfigFlags cmp_flags;
  cmp_flags.add(*cmp, false);
  std::string backbones = "linear";
  std::string norms = "timeapn,revin,none";
  std::string seeds = "1";
  cmp->add_option("--backbones", backbones);
  cmp->add_option("--norms", norms);
  cmp->add_option("--seeds", seeds);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth) {
      if (!slopes.empty()) spec.slopes = parse_list<double>(slopes, [](const std::string& s) { return std::stod(s); });
      if (!envelope.empty()) spec.envelope = parse_envelope(envelope);
      return cmd_synth(spec, synth_out);
    }
    if (*trn) return cmd_train(train_flags, out_dir);
    if (*ev) return cmd_eval(checkpoint, eval_data, eval_out);
    if (*cmp) return cmd_compare(cmp_flags, backbones, norms, seeds);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace apn::cli
