// Acceptance suite for the GP-activation Kolmogorov-Arnold network.
// Each numbered criterion prints exactly one [PASS]/[FAIL] line; the exit
// code is the number of failed blocking criteria. Criterion 3 is
// informational and never blocks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "kstgp/explain.hpp"
#include "kstgp/model_io.hpp"
#include "kstgp/runner.hpp"
#include "kstgp/training.hpp"

using namespace kstgp;

namespace {

const std::string kData = std::string(KSTGP_SOURCE_DIR) + "/data/banknote_synth.csv";

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail,
            bool blocking = true) {
  std::printf("[%s] criterion %d: %s%s\n", pass ? "PASS" : "FAIL", criterion,
              detail.c_str(),
              blocking ? "" : " (informational, non-blocking)");
  std::fflush(stdout);
  if (!pass && blocking) ++g_failures;
}

// ---------------------------------------------------------------- criteria 6/7

bool gp_property_suite(std::string& detail) {
  int checks = 0, failed = 0;
  auto expect = [&](bool ok, const char* what) {
    ++checks;
    if (!ok) {
      ++failed;
      std::printf("  gp property failed: %s\n", what);
    }
  };

  Hyperparameters h;  // sigma2=1, l=0.5, alpha=1, noise=0.01
  expect(std::abs(rq_kernel(0.0, 1.0, h) - 1.0 / 3.0) < 1e-12,
         "kernel value at distance 1");
  expect(std::abs(rq_kernel(0.2, 0.2, h) - 1.0) < 1e-15, "kernel at zero distance");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    const double a = u(rng), b = u(rng);
    expect(std::abs(rq_kernel(a, b, h) - rq_kernel(b, a, h)) < 1e-15,
           "kernel symmetry");
    expect(rq_kernel(a, b, h) > 0.0 && rq_kernel(a, b, h) <= h.sigma2 + 1e-15,
           "kernel positivity/bound");
  }
  Hyperparameters rbf;
  rbf.length_scale = 1.0;
  rbf.alpha = 1e8;
  expect(std::abs(rq_kernel(0.0, 1.0, rbf) - 0.6065306597126334) < 1e-6,
         "RBF limit at large alpha");

  // posterior closed form, single control point
  GPActivation single({{0.0}, {1.0}}, h);
  const double c = 1.0 + 0.01 + 1e-8;
  expect(std::abs(single.posterior_mean(0.0) - 1.0 / c) < 1e-12,
         "single-point posterior mean");
  expect(std::abs(single.posterior_variance(0.0) - (1.0 - 1.0 / c)) < 1e-9,
         "single-point posterior variance");

  // near-interpolation at the noise floor
  ControlPointSet sine;
  for (int i = 0; i < 6; ++i) {
    const double x = -1.0 + 0.4 * i;
    sine.xs.push_back(x);
    sine.ys.push_back(std::sin(3.0 * x));
  }
  Hyperparameters floor_h;
  floor_h.noise_var = kNoiseFloor;
  GPActivation interp(sine, floor_h);
  for (std::size_t i = 0; i < sine.size(); ++i)
    expect(std::abs(interp.posterior_mean(sine.xs[i]) - sine.ys[i]) < 1e-4,
           "near-interpolation at the noise floor");

  // variance bounds over the span
  GPActivation af(sine, h);
  for (int t = 0; t < 100; ++t) {
    const double v = af.posterior_variance(u(rng));
    expect(v >= 0.0 && v <= h.sigma2 + 1e-12, "posterior variance bounds");
  }

  // fitted noise separates clean from jittered ordinates
  ControlPointSet noisy = sine;
  std::normal_distribution<double> eps(0.0, 0.35);
  for (auto& y : noisy.ys) y += eps(rng);
  const Hyperparameters hc = fit_hyperparameters(sine, h, 80);
  const Hyperparameters hn = fit_hyperparameters(noisy, h, 80);
  expect(hc.noise_var < hn.noise_var, "noise ordering clean vs jittered");
  expect(neg_log_marginal_likelihood(sine, hc) <=
             neg_log_marginal_likelihood(sine, h) + 1e-9,
         "fit never worsens the cost");

  detail = std::to_string(checks - failed) + "/" + std::to_string(checks) +
           " GP property checks passed";
  return failed == 0;
}

bool gradient_suite(std::string& detail) {
  // slope vs the analytic RQ derivative
  double max_slope_err = 0.0;
  {
    ControlPointSet pts;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(-1.0, 1.0);
    std::normal_distribution<double> uy(0.0, 0.5);
    for (int i = 0; i < 8; ++i) {
      pts.xs.push_back(ux(rng));
      pts.ys.push_back(uy(rng));
    }
    std::sort(pts.xs.begin(), pts.xs.end());
    Hyperparameters h;
    h.length_scale = 0.45;
    h.alpha = 1.5;
    GPActivation af(pts, h);
    af.ensure_factor();
    const Eigen::VectorXd& w = af.weights();
    for (int t = 0; t < 100; ++t) {
      const double xs = ux(rng);
      double analytic = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = pts.xs[i] - xs;
        const double q =
            d * d / (2.0 * h.alpha * h.length_scale * h.length_scale);
        analytic += h.sigma2 * d / (h.length_scale * h.length_scale) *
                    std::exp(-(h.alpha + 1.0) * std::log1p(q)) *
                    w[static_cast<Eigen::Index>(i)];
      }
      max_slope_err = std::max(max_slope_err, std::abs(af.slope(xs) - analytic));
    }
  }

  // backprop vs whole-network finite differences on 10 random nets
  double max_rel = 0.0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Network net = Network::random(2, 1, 4, 500 + static_cast<std::uint64_t>(trial));
    Eigen::VectorXd x(2);
    x << ux(rng), ux(rng);
    const int target = trial % 2;

    const ForwardTrace t = net.forward(x);
    const GradientSet g = net.backward({t}, {loss_grad(t.output, target)});

    auto loss_at = [&] {
      const double yhat = net.forward(x).output;
      return (yhat - target) * (yhat - target);
    };
    const double h = 1e-5;
    auto check = [&](GPActivation& af, std::size_t i, bool is_x, double analytic) {
      ControlPointSet saved = af.points();
      ControlPointSet p = saved;
      (is_x ? p.xs : p.ys)[i] += h;
      af.set_points(p);
      const double lp = loss_at();
      (is_x ? p.xs : p.ys)[i] -= 2.0 * h;
      af.set_points(p);
      const double lm = loss_at();
      af.set_points(saved);
      const double fd = (lp - lm) / (2.0 * h);
      const double denom = std::max(std::abs(fd), std::abs(analytic));
      if (denom > 1e-8)
        max_rel = std::max(max_rel, std::abs(fd - analytic) / denom);
    };
    for (std::size_t r = 0; r < net.unit_count(); ++r) {
      for (std::size_t d = 0; d < net.dims(); ++d)
        for (std::size_t i = 0; i < net.points_per_af(); ++i) {
          check(net.units()[r].inner[d], i, true, g.inner[r][d].pts[i].x);
          check(net.units()[r].inner[d], i, false, g.inner[r][d].pts[i].y);
        }
      for (std::size_t i = 0; i < net.points_per_af(); ++i) {
        check(net.units()[r].outer, i, true, g.outer[r].pts[i].x);
        check(net.units()[r].outer, i, false, g.outer[r].pts[i].y);
      }
    }
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max backprop-vs-FD rel err %.3g (tol 1e-3), max slope err %.3g "
                "(tol 1e-4)",
                max_rel, max_slope_err);
  detail = buf;
  return max_rel < 1e-3 && max_slope_err < 1e-4;
}

// ------------------------------------------------------------------ criterion 8

double eval_expr(const std::string& s, double x, std::size_t& pos);

double eval_atom(const std::string& s, double x, std::size_t& pos) {
  while (pos < s.size() && s[pos] == ' ') ++pos;
  if (s[pos] == '(') {
    ++pos;
    const double v = eval_expr(s, x, pos);
    ++pos;  // ')'
    return v;
  }
  if (s[pos] == '-') {
    ++pos;
    return -eval_atom(s, x, pos);
  }
  if (s[pos] == 'x') {
    ++pos;
    return x;
  }
  std::size_t used = 0;
  const double v = std::stod(s.substr(pos), &used);
  pos += used;
  return v;
}

double eval_power(const std::string& s, double x, std::size_t& pos) {
  const double base = eval_atom(s, x, pos);
  while (pos < s.size() && s[pos] == ' ') ++pos;
  if (pos < s.size() && s[pos] == '^') {
    ++pos;
    return std::pow(base, eval_power(s, x, pos));
  }
  return base;
}

double eval_product(const std::string& s, double x, std::size_t& pos) {
  double v = eval_power(s, x, pos);
  for (;;) {
    while (pos < s.size() && s[pos] == ' ') ++pos;
    if (pos < s.size() && s[pos] == '*') {
      ++pos;
      v *= eval_power(s, x, pos);
    } else if (pos < s.size() && s[pos] == '/') {
      ++pos;
      v /= eval_power(s, x, pos);
    } else {
      return v;
    }
  }
}

double eval_expr(const std::string& s, double x, std::size_t& pos) {
  double v = eval_product(s, x, pos);
  for (;;) {
    while (pos < s.size() && s[pos] == ' ') ++pos;
    if (pos < s.size() && s[pos] == '+') {
      ++pos;
      v += eval_product(s, x, pos);
    } else if (pos < s.size() && s[pos] == '-') {
      ++pos;
      v -= eval_product(s, x, pos);
    } else {
      return v;
    }
  }
}

bool symbolic_suite(const Network& net, std::string& detail) {
  const SymbolicModel m = export_symbolic(net);
  double max_err = 0.0;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (const auto& af : m.afs) {
    const GPActivation& g = af.id.layer == 1
                                ? net.units()[af.id.r].inner[af.id.d]
                                : net.units()[af.id.r].outer;
    for (int t = 0; t < 100; ++t) {
      const double x = u(rng);
      std::size_t pos = 0;
      const double sym = eval_expr(af.expr, x, pos);
      max_err = std::max(max_err, std::abs(sym - g.posterior_mean(x)));
    }
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf),
                "max symbolic-vs-direct deviation %.3g over %zu AFs x 100 "
                "inputs (tol 1e-9)",
                max_err, m.afs.size());
  detail = buf;
  return max_err < 1e-9;
}

// ------------------------------------------------------------------ criterion 9

bool persistence_suite(std::string& detail) {
  RunConfig cfg;
  cfg.data_path = kData;
  cfg.epochs = 5;
  cfg.log_epochs = false;
  const RunResult a = train_in_memory(cfg);
  const RunResult b = train_in_memory(cfg);
  const std::string sa = model_to_string(a.model);
  const std::string sb = model_to_string(b.model);
  const bool bytes_equal = sa == sb;

  const ModelFile back = model_from_string(sa);
  double max_dev = 0.0;
  bool exact = true;
  for (std::size_t r = 0; r < a.model.net.unit_count(); ++r) {
    for (std::size_t d = 0; d < a.model.net.dims(); ++d) {
      const auto& pa = a.model.net.units()[r].inner[d].points();
      const auto& pb = back.net.units()[r].inner[d].points();
      for (std::size_t i = 0; i < pa.size(); ++i) {
        max_dev = std::max({max_dev, std::abs(pa.xs[i] - pb.xs[i]),
                            std::abs(pa.ys[i] - pb.ys[i])});
        exact = exact && pa.xs[i] == pb.xs[i] && pa.ys[i] == pb.ys[i];
      }
    }
    const auto& oa = a.model.net.units()[r].outer.points();
    const auto& ob = back.net.units()[r].outer.points();
    for (std::size_t i = 0; i < oa.size(); ++i)
      exact = exact && oa.xs[i] == ob.xs[i] && oa.ys[i] == ob.ys[i];
  }
  const std::string s2 = model_to_string(back);

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "round trip max deviation %.3g (tol 1e-12, bitwise %s); "
                "repeated identical runs byte-identical: %s",
                max_dev, exact ? "exact" : "NOT exact",
                bytes_equal && s2 == sa ? "yes" : "no");
  detail = buf;
  return max_dev <= 1e-12 && exact && bytes_equal && s2 == sa;
}

// ------------------------------------------------------------------ criterion 4

int axis_inversions(const std::vector<double>& marginal) {
  int inv = 0;
  for (std::size_t i = 0; i + 1 < marginal.size(); ++i)
    if (marginal[i + 1] > marginal[i] + 1e-12) ++inv;
  return inv;
}

}  // namespace

int main() {
  std::printf("data: %s\n", kData.c_str());

  // One full-length training run per init seed at the case-study defaults.
  std::vector<RunResult> runs;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    RunConfig cfg;
    cfg.data_path = kData;
    cfg.seed_init = s;
    cfg.log_epochs = false;
    runs.push_back(train_in_memory(cfg));
    const auto& last = runs.back().history.back();
    std::printf("seed %llu: val_acc %.4f train_loss %.6g (%.1fs)\n",
                static_cast<unsigned long long>(s), last.val_acc,
                last.train_loss, runs.back().total_wall_ms / 1000.0);
    std::fflush(stdout);
  }

  // criterion 1: best validation accuracy across init seeds 1-3
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (runs[i].history.back().val_acc > runs[best].history.back().val_acc)
      best = i;
  const double best_acc = runs[best].history.back().val_acc;
  {
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "best-of-3-seeds validation accuracy %.4f (needs >= 0.992)",
                  best_acc);
    report(1, best_acc >= 0.992, buf);
  }

  // criterion 2: converged training loss of the accepted run
  {
    const double tl = runs[best].history.back().train_loss;
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "accepted run final training loss %.6g (needs <= 1e-2)", tl);
    report(2, tl <= 1e-2, buf);
  }

  // criterion 3 (informational): early validation accuracy
  {
    int first_99 = -1;
    for (const auto& m : runs[best].history)
      if (m.val_acc >= 0.99) {
        first_99 = m.epoch;
        break;
      }
    char buf[140];
    std::snprintf(buf, sizeof(buf),
                  "validation accuracy first reaches 0.99 at epoch %d "
                  "(target: by epoch 300)",
                  first_99);
    report(3, first_99 >= 0 && first_99 <= 300, buf, /*blocking=*/false);
  }

  // criterion 5: injected noise attribute is least influential
  {
    RawTable raw = load_csv(kData);
    int good = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const ModelFile& m = runs[i].model;
      const std::vector<std::pair<double, double>> feat_ranges(
          m.col_range.begin(), m.col_range.end() - 1);
      Dataset ds = apply_standardization(raw, feat_ranges);
      ds = inject_noise_attribute(ds, m.noise_seed);
      const InfluenceReport rep = influence_report(m.net, ds);
      const std::size_t noise_idx = ds.dims() - 1;
      std::vector<double> score(ds.dims(), 0.0);
      for (std::size_t d = 0; d < ds.dims(); ++d)
        for (std::size_t r = 0; r < m.net.unit_count(); ++r)
          score[d] = std::max(score[d], rep.attr_unit_range[r][d]);
      const double top = *std::max_element(score.begin(), score.end());
      const bool last = rep.attr_ranking.back() == noise_idx;
      const bool small = score[noise_idx] <= 0.25 * top;
      if (last && small) ++good;
      std::printf("  seed %zu: noise ranked %s, range %.3g vs top %.3g\n",
                  i + 1, last ? "last" : "NOT last", score[noise_idx], top);
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf),
                  "noise attribute last-ranked with range <= 25%% of top in "
                  "%d/5 runs (needs >= 3)",
                  good);
    report(5, good >= 3, buf);
  }

  // criteria 6-9 (cheap suites) before the long sweep
  {
    std::string detail;
    report(6, gp_property_suite(detail), detail);
  }
  {
    std::string detail;
    report(7, gradient_suite(detail), detail);
  }
  {
    std::string detail;
    report(8, symbolic_suite(runs[best].model.net, detail), detail);
  }
  {
    std::string detail;
    report(9, persistence_suite(detail), detail);
  }

  // criterion 4: scaling study over control points and units
  {
    RunConfig base;
    base.data_path = kData;
    base.log_epochs = false;
    const std::vector<std::size_t> points{4, 6, 8}, units{1, 2, 3};
    const SweepResult sweep = run_sweep(base, points, units, 5, "acceptance_sweep");

    auto marginal = [&](bool by_points) {
      std::vector<double> out;
      const auto& axis = by_points ? points : units;
      for (std::size_t v : axis) {
        double sum = 0.0;
        int n = 0;
        for (const auto& cell : sweep.cells) {
          if ((by_points ? cell.points : cell.units) == v) {
            sum += cell.mean_loss;
            ++n;
          }
        }
        out.push_back(sum / n);
      }
      return out;
    };
    const std::vector<double> by_points = marginal(true);
    const std::vector<double> by_units = marginal(false);
    const int inv_p = axis_inversions(by_points);
    const int inv_u = axis_inversions(by_units);
    std::printf("  mean converged loss by points {4,6,8}: %.5g %.5g %.5g\n",
                by_points[0], by_points[1], by_points[2]);
    std::printf("  mean converged loss by units {1,2,3}: %.5g %.5g %.5g\n",
                by_units[0], by_units[1], by_units[2]);
    int cell_failures = 0;
    for (const auto& c : sweep.cells) cell_failures += c.failures;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "loss trend inversions: %d (points axis), %d (units axis); "
                  "allowed <= 1 per axis; failed runs %d",
                  inv_p, inv_u, cell_failures);
    report(4, inv_p <= 1 && inv_u <= 1 && cell_failures == 0, buf);
  }

  std::printf("%d blocking criteria failed\n", g_failures);
  return g_failures;
}
