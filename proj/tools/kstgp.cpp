#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "kstgp/runner.hpp"

namespace {

// Documented exit codes (see README):
//   0 success, 2 parse error, 3 invalid configuration, 4 training diverged,
//   5 dimension/shape mismatch, 6 bad data content, 7 unknown AF / row,
//   8 factorization failure, 10 other failure.
int exit_code_for(const std::exception& e) {
  using namespace kstgp;
  if (dynamic_cast<const ParseError*>(&e)) return 2;
  if (dynamic_cast<const InvalidConfig*>(&e)) return 3;
  if (dynamic_cast<const TrainingDiverged*>(&e)) return 4;
  if (dynamic_cast<const DimensionMismatch*>(&e)) return 5;
  if (dynamic_cast<const ShapeMismatch*>(&e)) return 5;
  if (dynamic_cast<const NonBinaryLabel*>(&e)) return 6;
  if (dynamic_cast<const DegenerateColumn*>(&e)) return 6;
  if (dynamic_cast<const UnknownAF*>(&e)) return 7;
  if (dynamic_cast<const RowOutOfRange*>(&e)) return 7;
  if (dynamic_cast<const FactorizationFailure*>(&e)) return 8;
  return 10;
}

std::vector<std::size_t> parse_grid(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    out.push_back(std::stoul(s.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

void add_common_flags(CLI::App* cmd, kstgp::RunConfig& cfg) {
  cmd->add_option("--data", cfg.data_path, "comma-separated dataset file")->required();
  cmd->add_option("--label-col", cfg.label_column, "label column index (-1 = last)");
  cmd->add_option("--units", cfg.units, "number of units (R+1)");
  cmd->add_option("--points", cfg.points, "control points per activation function");
  cmd->add_option("--epochs", cfg.epochs, "training epochs");
  cmd->add_option("--eta-inner", cfg.eta_inner, "layer-1 learning rate");
  cmd->add_option("--eta-outer", cfg.eta_outer, "layer-2 learning rate");
  cmd->add_option("--split-ratio", cfg.split_ratio, "training fraction");
  cmd->add_option("--seed-init", cfg.seed_init, "network initialization seed");
  cmd->add_option("--seed-split", cfg.seed_split, "train/validation split seed");
  cmd->add_option("--seed-noise", cfg.seed_noise, "noise attribute seed");
  cmd->add_option("--hyperfit-budget", cfg.hyperfit_budget,
                  "hyperparameter fit steps per AF per epoch");
  cmd->add_option("--batch", cfg.batch_size, "mini-batch size (0 = full batch)");
  cmd->add_flag("!--no-noise", cfg.inject_noise, "skip the injected noise attribute");
  cmd->add_option("--out", cfg.out_dir, "output directory")->envname("KSTGP_OUT");
  cmd->add_flag("!--quiet", cfg.log_epochs, "suppress per-epoch log lines");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kolmogorov-Arnold network with Gaussian-process activation functions"};
  app.require_subcommand(1);
  app.set_config("--config", "", "config file (flags override it)");

  kstgp::RunConfig cfg;
  std::string model_path, data_path, explain_out = "out";
  int label_col = -1;

  auto* train = app.add_subcommand("train", "train a model and write model/metrics files");
  add_common_flags(train, cfg);

  auto* eval = app.add_subcommand("eval", "evaluate a saved model on a dataset");
  eval->add_option("--model", model_path, "model file")->required();
  eval->add_option("--data", data_path, "dataset file")->required();
  eval->add_option("--label-col", label_col, "label column index (-1 = last)");

  kstgp::ExplainOptions eopts;
  std::string reverse_spec;
  long long trace_row = -1;
  auto* explain = app.add_subcommand("explain",
                                     "emit symbolic model, AF curves, and influence report");
  explain->add_option("--model", model_path, "model file")->required();
  explain->add_option("--data", eopts.data_path,
                      "dataset file (default: the one recorded in the model)");
  explain->add_option("--label-col", eopts.label_column, "label column index");
  explain->add_option("--out", eopts.out_dir, "output directory")->envname("KSTGP_OUT");
  explain->add_option("--grid", eopts.grid, "curve sample count");
  explain->add_flag("!--no-svg", eopts.svg, "skip SVG rendering");
  explain->add_option("--trace-row", trace_row, "emit a per-AF trace for this instance");
  explain->add_option("--reverse", reverse_spec,
                      "lo:hi target interval for reverse exploration");
  explain->add_option("--reverse-samples", eopts.reverse_samples,
                      "sample budget for reverse exploration");

  std::string sweep_points = "4,6,8", sweep_units = "1,2,3";
  int sweep_seeds = 5;
  auto* sweep = app.add_subcommand("sweep", "scaling study over control points and units");
  add_common_flags(sweep, cfg);
  sweep->add_option("--sweep-points", sweep_points, "comma-separated control point counts");
  sweep->add_option("--sweep-units", sweep_units, "comma-separated unit counts");
  sweep->add_option("--sweep-seeds", sweep_seeds, "seeds per grid cell");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const kstgp::RunResult res = kstgp::run_train(cfg);
      const auto& s = res.model.summary;
      std::printf("final: train_acc %.4f  val_acc %.4f  train_loss %.6g  val_loss %.6g  wall %.1fs\n",
                  s["final_train_acc"].get<double>(), s["final_val_acc"].get<double>(),
                  s["final_train_loss"].get<double>(), s["final_val_loss"].get<double>(),
                  res.total_wall_ms / 1000.0);
      std::printf("wrote %s/model.json, metrics.csv, summary.txt\n", cfg.out_dir.c_str());
    } else if (eval->parsed()) {
      const kstgp::EvalReport rep = kstgp::run_eval(model_path, data_path, label_col);
      std::printf("overall: accuracy %.6f  mean_loss %.8g\n", rep.overall.accuracy,
                  rep.overall.mean_loss);
      if (rep.train_split)
        std::printf("train split: accuracy %.6f  mean_loss %.8g\n",
                    rep.train_split->accuracy, rep.train_split->mean_loss);
      if (rep.val_split)
        std::printf("validation split: accuracy %.6f  mean_loss %.8g\n",
                    rep.val_split->accuracy, rep.val_split->mean_loss);
    } else if (explain->parsed()) {
      if (trace_row >= 0) eopts.trace_row = static_cast<std::size_t>(trace_row);
      if (!reverse_spec.empty()) {
        const auto colon = reverse_spec.find(':');
        if (colon == std::string::npos)
          throw kstgp::InvalidConfig("--reverse expects lo:hi");
        eopts.reverse_target = {std::stod(reverse_spec.substr(0, colon)),
                                std::stod(reverse_spec.substr(colon + 1))};
      }
      kstgp::run_explain(model_path, eopts);
      std::printf("wrote explanation artifacts to %s\n", eopts.out_dir.c_str());
    } else if (sweep->parsed()) {
      kstgp::run_sweep(cfg, parse_grid(sweep_points), parse_grid(sweep_units),
                       sweep_seeds, cfg.out_dir);
      std::printf("wrote %s/sweep_runs.csv, sweep_cells.csv\n", cfg.out_dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  }
  return 0;
}
