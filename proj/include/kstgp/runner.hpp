#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kstgp/model_io.hpp"
#include "kstgp/training.hpp"

namespace kstgp {

/// Full configuration of one reproducible run. Defaults follow the banknote
/// case-study setup: 2 units, 6 control points per AF, learning rates
/// 1e-1 / 1e-3, 7:3 split, 1000 epochs.
struct RunConfig {
  std::string data_path;
  int label_column = -1;
  std::size_t units = 2;   // R + 1
  std::size_t points = 6;  // control points per AF
  int epochs = 1000;
  double eta_inner = 1e-1;
  double eta_outer = 1e-3;
  double split_ratio = 0.7;
  std::uint64_t seed_init = 1;
  std::uint64_t seed_split = 1;
  std::uint64_t seed_noise = 1;
  int hyperfit_budget = 50;
  int batch_size = 64;  // 0 = full batch
  bool inject_noise = true;
  std::string out_dir = "out";
  bool log_epochs = true;
};

struct RunResult {
  ModelFile model;
  std::vector<EpochMetrics> history;
  double total_wall_ms = 0.0;
};

/// Ingest + train; on disk: model.json, metrics.csv, summary.txt.
RunResult run_train(const RunConfig& cfg);

/// Same pipeline without any file output (used by sweeps and tests).
RunResult train_in_memory(const RunConfig& cfg);

/// Rebuilds the standardized dataset a saved model was trained on
/// (stored column ranges, re-injected noise column).
Dataset dataset_for_model(const ModelFile& m, const std::string& data_path,
                          int label_column = -1);

struct EvalReport {
  EvalResult overall;
  std::optional<EvalResult> train_split;
  std::optional<EvalResult> val_split;
};

EvalReport run_eval(const std::string& model_path, const std::string& data_path,
                    int label_column = -1);

struct ExplainOptions {
  std::string data_path;  // empty: use the path recorded in the model
  int label_column = -1;
  std::string out_dir = "out";
  int grid = 201;
  bool svg = true;
  std::optional<std::size_t> trace_row;
  std::optional<std::pair<double, double>> reverse_target;
  int reverse_samples = 10000;
};

void run_explain(const std::string& model_path, const ExplainOptions& opts);

struct SweepCell {
  std::size_t points = 0;
  std::size_t units = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
  double final_val_acc = 0.0;
};

struct SweepResult {
  std::vector<SweepCell> runs;
  /// Aggregates in (points, units) grid order.
  struct Cell {
    std::size_t points = 0, units = 0;
    double mean_loss = 0.0, min_loss = 0.0;
    int failures = 0;
  };
  std::vector<Cell> cells;
};

SweepResult run_sweep(const RunConfig& base, const std::vector<std::size_t>& points_grid,
                      const std::vector<std::size_t>& units_grid, int n_seeds,
                      const std::string& out_dir);

void write_metrics_csv(const std::vector<EpochMetrics>& history,
                       const std::string& path);

}  // namespace kstgp
