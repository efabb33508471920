#include "kstgp/runner.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "kstgp/explain.hpp"

namespace kstgp {

namespace {

namespace fs = std::filesystem;

nlohmann::json config_echo(const RunConfig& cfg) {
  return {{"data", cfg.data_path},
          {"label_column", cfg.label_column},
          {"units", cfg.units},
          {"points", cfg.points},
          {"epochs", cfg.epochs},
          {"eta_inner", cfg.eta_inner},
          {"eta_outer", cfg.eta_outer},
          {"split_ratio", cfg.split_ratio},
          {"seed_init", cfg.seed_init},
          {"seed_split", cfg.seed_split},
          {"seed_noise", cfg.seed_noise},
          {"hyperfit_budget", cfg.hyperfit_budget},
          {"batch_size", cfg.batch_size},
          {"inject_noise", cfg.inject_noise}};
}

}  // namespace

void write_metrics_csv(const std::vector<EpochMetrics>& history,
                       const std::string& path) {
  std::ofstream out(path);
  out << "epoch,train_loss,val_loss,train_acc,val_acc,wall_ms\n";
  char buf[200];
  for (const auto& m : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%.12g\n", m.epoch,
                  m.train_loss, m.val_loss, m.train_acc, m.val_acc, m.wall_ms);
    out << buf;
  }
}

RunResult train_in_memory(const RunConfig& cfg) {
  if (cfg.units < 1) throw InvalidConfig("need at least one unit");
  const auto t0 = std::chrono::steady_clock::now();

  const RawTable raw = load_csv(cfg.data_path, cfg.label_column);
  Dataset ds = standardize(raw);
  if (cfg.inject_noise) ds = inject_noise_attribute(ds, cfg.seed_noise);
  const SplitDataset sd = split(ds, cfg.split_ratio, cfg.seed_split);

  Network net = Network::random(ds.dims(), cfg.units - 1, cfg.points, cfg.seed_init);

  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.eta_inner = cfg.eta_inner;
  tc.eta_outer = cfg.eta_outer;
  tc.seed = cfg.seed_init;
  tc.hyperfit_budget = cfg.hyperfit_budget;
  tc.batch_size = cfg.batch_size;

  std::function<void(const EpochMetrics&)> on_epoch;
  if (cfg.log_epochs) {
    on_epoch = [](const EpochMetrics& m) {
      std::printf("epoch %4d  train_loss %.6g  val_loss %.6g  train_acc %.4f  val_acc %.4f\n",
                  m.epoch, m.train_loss, m.val_loss, m.train_acc, m.val_acc);
      std::fflush(stdout);
    };
  }
  std::vector<EpochMetrics> history = train(net, sd, tc, on_epoch);

  RunResult res;
  res.history = std::move(history);
  res.total_wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();

  ModelFile& m = res.model;
  m.net = std::move(net);
  m.col_range = ds.col_range;
  m.feature_names = ds.feature_names;
  m.noise_injected = cfg.inject_noise;
  m.noise_seed = cfg.seed_noise;
  m.split_seed = cfg.seed_split;
  m.split_ratio = cfg.split_ratio;
  m.trained_on_n = ds.size();
  m.config_echo = config_echo(cfg);
  const auto& last = res.history.back();
  m.summary = {{"epochs_run", res.history.size()},
               {"final_train_loss", last.train_loss},
               {"final_val_loss", last.val_loss},
               {"final_train_acc", last.train_acc},
               {"final_val_acc", last.val_acc}};
  return res;
}

RunResult run_train(const RunConfig& cfg) {
  RunResult res = train_in_memory(cfg);
  fs::create_directories(cfg.out_dir);
  save_model(res.model, (fs::path(cfg.out_dir) / "model.json").string());
  write_metrics_csv(res.history, (fs::path(cfg.out_dir) / "metrics.csv").string());

  const auto& last = res.history.back();
  std::ofstream sum(fs::path(cfg.out_dir) / "summary.txt");
  sum << "epochs_run=" << res.history.size() << "\n"
      << "final_train_loss=" << last.train_loss << "\n"
      << "final_val_loss=" << last.val_loss << "\n"
      << "final_train_acc=" << last.train_acc << "\n"
      << "final_val_acc=" << last.val_acc << "\n"
      << "total_wall_ms=" << res.total_wall_ms << "\n";
  return res;
}

Dataset dataset_for_model(const ModelFile& m, const std::string& data_path,
                          int label_column) {
  const RawTable raw = load_csv(data_path, label_column);
  const std::size_t model_dims = m.net.dims();
  const std::size_t raw_dims = static_cast<std::size_t>(raw.features.cols());
  const std::size_t expect = m.noise_injected ? model_dims - 1 : model_dims;
  if (raw_dims != expect)
    throw DimensionMismatch("dataset has " + std::to_string(raw_dims) +
                            " features, model expects " + std::to_string(expect) +
                            (m.noise_injected ? " (before noise injection)" : ""));
  std::vector<std::pair<double, double>> ranges(
      m.col_range.begin(), m.col_range.begin() + static_cast<std::ptrdiff_t>(expect));
  Dataset ds = apply_standardization(raw, ranges);
  if (m.noise_injected) ds = inject_noise_attribute(ds, m.noise_seed);
  return ds;
}

EvalReport run_eval(const std::string& model_path, const std::string& data_path,
                    int label_column) {
  const ModelFile m = load_model(model_path);
  const Dataset ds = dataset_for_model(m, data_path, label_column);

  EvalReport rep;
  rep.overall = evaluate(m.net, ds);
  if (ds.size() == m.trained_on_n) {
    const SplitDataset sd = split(ds, m.split_ratio, m.split_seed);
    rep.train_split = evaluate(m.net, sd.train);
    rep.val_split = evaluate(m.net, sd.validation);
  }
  return rep;
}

void run_explain(const std::string& model_path, const ExplainOptions& opts) {
  const ModelFile m = load_model(model_path);
  std::string data_path = opts.data_path;
  if (data_path.empty() && m.config_echo.contains("data"))
    data_path = m.config_echo["data"].get<std::string>();
  if (data_path.empty())
    throw InvalidConfig("explain needs a dataset (none recorded in the model)");
  int label_column = opts.label_column;
  if (opts.data_path.empty() && m.config_echo.contains("label_column"))
    label_column = m.config_echo["label_column"].get<int>();

  const Dataset ds = dataset_for_model(m, data_path, label_column);
  fs::create_directories(opts.out_dir);

  // symbolic model
  const SymbolicModel sym = export_symbolic(m.net);
  std::ofstream(fs::path(opts.out_dir) / "symbolic.txt") << sym.full_text();

  // instance trace, if requested (also marks the SVG curves)
  std::optional<InstanceTrace> itrace;
  if (opts.trace_row) {
    const std::size_t row = *opts.trace_row;
    if (row >= ds.size())
      throw RowOutOfRange("row " + std::to_string(row) + " out of range (N=" +
                          std::to_string(ds.size()) + ")");
    itrace = trace_instance(
        m.net, ds.features.row(static_cast<Eigen::Index>(row)).transpose(),
        ds.labels[row]);
    std::ofstream out(fs::path(opts.out_dir) / "trace.csv");
    out << "af,input,output\n";
    const auto& t = itrace->trace;
    for (const AfId& id : all_af_ids(m.net)) {
      const auto er = static_cast<Eigen::Index>(id.r);
      const double x = id.layer == 1 ? t.input[static_cast<Eigen::Index>(id.d)]
                                     : t.unit_sums[er];
      const double y = id.layer == 1
                           ? t.inner_outputs(er, static_cast<Eigen::Index>(id.d))
                           : t.unit_outputs[er];
      out << af_file_stem(id) << "," << x << "," << y << "\n";
    }
    out << "output," << t.output << ",\n";
    out << "predicted," << itrace->predicted << ",\n";
    out << "label," << itrace->truth << ",\n";
  }

  // AF curves
  const SplitDataset sd = split(ds, m.split_ratio, m.split_seed);
  write_af_curves_csv(m.net, &sd.train, opts.out_dir, opts.grid);
  if (opts.svg)
    write_af_curves_svg(m.net, &sd.train, opts.out_dir, opts.grid,
                        itrace ? &*itrace : nullptr);

  // influence report
  const InfluenceReport rep = influence_report(m.net, ds);
  {
    std::ofstream out(fs::path(opts.out_dir) / "influence.csv");
    out << "kind,unit,attribute,range\n";
    for (std::size_t r = 0; r < rep.unit_range.size(); ++r)
      out << "unit," << r << ",," << rep.unit_range[r] << "\n";
    for (std::size_t r = 0; r < rep.attr_unit_range.size(); ++r)
      for (std::size_t d = 0; d < rep.attr_unit_range[r].size(); ++d)
        out << "attribute," << r << "," << m.feature_names[d] << ","
            << rep.attr_unit_range[r][d] << "\n";
    out << "ranking,,,";
    for (std::size_t i = 0; i < rep.attr_ranking.size(); ++i)
      out << (i ? " " : "") << m.feature_names[rep.attr_ranking[i]];
    out << "\n";
  }

  if (opts.reverse_target) {
    const auto [lo, hi] = *opts.reverse_target;
    const ReverseQueryResult rq =
        reverse_query(m.net, lo, hi, opts.reverse_samples, m.noise_seed);
    std::ofstream out(fs::path(opts.out_dir) / "reverse.csv");
    for (std::size_t d = 0; d < m.feature_names.size(); ++d)
      out << (d ? "," : "") << m.feature_names[d];
    out << ",output\n";
    for (std::size_t i = 0; i < rq.inputs.size(); ++i) {
      for (Eigen::Index d = 0; d < rq.inputs[i].size(); ++d)
        out << (d ? "," : "") << rq.inputs[i][d];
      out << "," << rq.traces[i].output << "\n";
    }
    std::printf("reverse query: %zu hits / %d samples (rate %.4f)\n",
                rq.inputs.size(), opts.reverse_samples, rq.acceptance_rate);
  }
}

SweepResult run_sweep(const RunConfig& base, const std::vector<std::size_t>& points_grid,
                      const std::vector<std::size_t>& units_grid, int n_seeds,
                      const std::string& out_dir) {
  if (points_grid.empty() || units_grid.empty() || n_seeds < 1)
    throw InvalidConfig("sweep grids must be nonempty");

  SweepResult res;
  for (std::size_t np : points_grid) {
    for (std::size_t nu : units_grid) {
      SweepResult::Cell cell{np, nu, 0.0, 0.0, 0};
      double sum = 0.0;
      double best = std::numeric_limits<double>::infinity();
      int ok = 0;
      for (int s = 1; s <= n_seeds; ++s) {
        RunConfig cfg = base;
        cfg.points = np;
        cfg.units = nu;
        cfg.seed_init = static_cast<std::uint64_t>(s);
        cfg.log_epochs = false;
        SweepCell run{np, nu, cfg.seed_init, false, 0, 0, 0};
        try {
          const RunResult r = train_in_memory(cfg);
          const auto& last = r.history.back();
          run.final_train_loss = last.train_loss;
          run.final_val_loss = last.val_loss;
          run.final_val_acc = last.val_acc;
          sum += last.train_loss;
          best = std::min(best, last.train_loss);
          ++ok;
        } catch (const std::exception& e) {
          run.failed = true;
          ++cell.failures;
          warn("sweep cell (points=" + std::to_string(np) + ", units=" +
               std::to_string(nu) + ", seed=" + std::to_string(s) + ") failed: " +
               e.what());
        }
        res.runs.push_back(run);
        std::printf("sweep points=%zu units=%zu seed=%d %s train_loss=%.6g\n", np, nu,
                    s, run.failed ? "FAILED" : "ok", run.final_train_loss);
        std::fflush(stdout);
      }
      cell.mean_loss = ok > 0 ? sum / ok : std::numeric_limits<double>::quiet_NaN();
      cell.min_loss = ok > 0 ? best : std::numeric_limits<double>::quiet_NaN();
      res.cells.push_back(cell);
    }
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream runs(fs::path(out_dir) / "sweep_runs.csv");
    runs << "points,units,seed,failed,final_train_loss,final_val_loss,final_val_acc\n";
    for (const auto& r : res.runs)
      runs << r.points << "," << r.units << "," << r.seed << "," << r.failed << ","
           << r.final_train_loss << "," << r.final_val_loss << ","
           << r.final_val_acc << "\n";
    std::ofstream cells(fs::path(out_dir) / "sweep_cells.csv");
    cells << "points,units,mean_loss,min_loss,failures\n";
    for (const auto& c : res.cells)
      cells << c.points << "," << c.units << "," << c.mean_loss << "," << c.min_loss
            << "," << c.failures << "\n";
  }
  return res;
}

}  // namespace kstgp
