#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "timeapn/config.hpp"
#include "timeapn/data.hpp"
#include "timeapn/pipeline.hpp"
#include "timeapn/train.hpp"

namespace apn::cli {

/// Windows of each split: training and validation at config.train_stride, test at stride T.
struct SplitWindows {
  std::vector<WindowPair> train;
  std::vector<WindowPair> val;
  std::vector<WindowPair> test;
};

SplitWindows split_windows(const data::Dataset& ds, const ExperimentConfig& config);

/// Standardizes and splits `series` according to config.
data::Dataset prepare_dataset(const SeriesTensor& series, const ExperimentConfig& config);

struct ExperimentResult {
  std::unique_ptr<pipeline::Model> model;
  std::optional<train::StageTrace> stage1;
  train::StageTrace stage2;
  train::Metrics val;
  train::Metrics test;
  double seconds = 0.0;
};

/// Trains one configuration (two stages for timeapn, one otherwise) and scores it.
ExperimentResult run_experiment(const ExperimentConfig& config, const data::Dataset& ds);

struct CompareCell {
  Backbone backbone;
  NormMode norm;
  std::uint64_t seed;
  train::Metrics test;
};

struct CompareRow {
  Backbone backbone;
  NormMode norm;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  double mae_mean = 0.0;
  double mae_std = 0.0;
  /// Lowest mean MSE among rows sharing this backbone.
  bool best = false;
};

struct CompareResult {
  std::vector<CompareCell> cells;
  std::vector<CompareRow> rows;
};

/// Trains every (backbone, norm, seed) cell on `ds`; up to `threads` cells run at once.
CompareResult compare(const ExperimentConfig& base, const data::Dataset& ds,
                      const std::vector<Backbone>& backbones, const std::vector<NormMode>& norms,
                      const std::vector<std::uint64_t>& seeds, int threads);

/// Aligned text table of the rows; the best row per backbone carries a '*'.
std::string format_table(const CompareResult& result);

/// Cell parallelism from APN_THREADS (default 1).
int threads_from_env();

/// Entry point of the command-line tool; returns the process exit code.
int run(int argc, char** argv);

}  // namespace apn::cli
