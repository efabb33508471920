#include "kstgp/kst_network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

namespace kstgp {

namespace {

std::string af_name(std::size_t r, std::ptrdiff_t d) {
  if (d < 0) return "outer AF of unit " + std::to_string(r);
  return "inner AF (" + std::to_string(r) + "," + std::to_string(d) + ")";
}

/// Per-AF scratch for batch backprop: perturbed-abscissa weight vectors are
/// built once per backward call, then every trace costs only kernel-vector
/// work. Hyperparameters are held fixed throughout.
struct AfWorkspace {
  const GPActivation* af = nullptr;
  std::size_t n = 0;
  std::vector<double> h;
  std::vector<double> x_plus, x_minus;
  std::vector<Eigen::VectorXd> w_plus, w_minus;

  void build(const GPActivation& a) {
    af = &a;
    a.ensure_factor();
    n = a.points().size();
    h.resize(n);
    x_plus.resize(n);
    x_minus.resize(n);
    w_plus.resize(n);
    w_minus.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = fd_step(a.points().xs[i]);
      ControlPointSet p = a.points();
      p.xs[i] += h[i];
      x_plus[i] = p.xs[i];
      w_plus[i] = build_covariance(p, a.hyper()).llt.solve(
          Eigen::VectorXd(p.y_vector()));
      p.xs[i] = a.points().xs[i] - h[i];
      x_minus[i] = p.xs[i];
      w_minus[i] = build_covariance(p, a.hyper()).llt.solve(
          Eigen::VectorXd(p.y_vector()));
    }
  }

  double mean_base(double x) const {
    double m = 0.0;
    const auto& w = af->weights();
    for (std::size_t j = 0; j < n; ++j)
      m += rq_kernel(af->points().xs[j], x, af->hyper()) *
           w[static_cast<Eigen::Index>(j)];
    return m;
  }

  double slope(double x) const {
    const double s = fd_step(x);
    return (mean_base(x + s) - mean_base(x - s)) / (2.0 * s);
  }

  /// Accumulates scale * (dL/dx_i, dL/dy_i) at evaluation point x into dst.
  void accumulate(double x, double scale, AfGrad& dst) const {
    const auto& pts = af->points();
    Eigen::VectorXd k(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j)
      k[static_cast<Eigen::Index>(j)] = rq_kernel(pts.xs[j], x, af->hyper());
    const Eigen::VectorXd v = af->factor().llt.solve(k);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ei = static_cast<Eigen::Index>(i);
      // mean under x_i perturbation: base kernel row with one corrected entry
      const double mp = k.dot(w_plus[i]) +
                        (rq_kernel(x_plus[i], x, af->hyper()) - k[ei]) * w_plus[i][ei];
      const double mm = k.dot(w_minus[i]) +
                        (rq_kernel(x_minus[i], x, af->hyper()) - k[ei]) * w_minus[i][ei];
      dst.pts[i].x += scale * (mp - mm) / (2.0 * h[i]);
      dst.pts[i].y += scale * v[ei];
    }
  }
};

}  // namespace

Network::Network(std::size_t dims, std::vector<Unit> units)
    : dims_(dims), units_(std::move(units)) {
  if (dims_ < 1 || units_.empty()) throw InvalidConfig("network needs D >= 1 and at least one unit");
  for (const auto& u : units_) {
    if (u.inner.size() != dims_)
      throw InvalidConfig("unit inner count must equal network dims");
  }
}

Network Network::random(std::size_t dims, std::size_t repetition, std::size_t n,
                        std::uint64_t seed, const InitSpec& init) {
  if (dims < 1) throw InvalidConfig("network needs D >= 1");
  if (n < 2) throw InvalidConfig("need at least 2 control points per AF");
  init.hyper.validate();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> ord(0.0, init.ordinate_sd);
  const double outer_half = init.outer_half_span_per_dim * static_cast<double>(dims);

  auto make_af = [&](double lo, double hi) {
    std::uniform_real_distribution<double> absc(lo, hi);
    ControlPointSet pts;
    pts.xs.resize(n);
    pts.ys.resize(n);
    for (auto& x : pts.xs) x = absc(rng);
    std::sort(pts.xs.begin(), pts.xs.end());
    for (auto& y : pts.ys) y = ord(rng);
    return GPActivation(std::move(pts), init.hyper);
  };

  std::vector<Unit> units(repetition + 1);
  for (auto& u : units) {
    u.inner.reserve(dims);
    for (std::size_t d = 0; d < dims; ++d)
      u.inner.push_back(make_af(init.inner_x_lo, init.inner_x_hi));
    u.outer = make_af(-outer_half, outer_half);
  }
  return Network(dims, std::move(units));
}

std::size_t Network::points_per_af() const {
  return units_.front().outer.points().size();
}

void Network::ensure_factors() const {
  for (std::size_t r = 0; r < units_.size(); ++r) {
    try {
      for (const auto& af : units_[r].inner) af.ensure_factor();
      units_[r].outer.ensure_factor();
    } catch (const FactorizationFailure& e) {
      throw FactorizationFailure(std::string(e.what()) + " in unit " + std::to_string(r));
    }
  }
}

void Network::refit_all(int budget) {
  if (budget <= 0) return;
  for (auto& u : units_) {
    for (auto& af : u.inner) af.refit(budget);
    u.outer.refit(budget);
  }
}

ForwardTrace Network::forward(const Eigen::VectorXd& lambda) const {
  if (static_cast<std::size_t>(lambda.size()) != dims_)
    throw DimensionMismatch("input has " + std::to_string(lambda.size()) +
                            " dims, network expects " + std::to_string(dims_));
  if (!lambda.allFinite()) throw InvalidConfig("non-finite network input");

  const auto R1 = static_cast<Eigen::Index>(units_.size());
  ForwardTrace t;
  t.input = lambda;
  t.inner_outputs.resize(R1, static_cast<Eigen::Index>(dims_));
  t.unit_sums.resize(R1);
  t.unit_outputs.resize(R1);
  for (Eigen::Index r = 0; r < R1; ++r) {
    const Unit& u = units_[static_cast<std::size_t>(r)];
    double s = 0.0;
    for (std::size_t d = 0; d < dims_; ++d) {
      double v;
      try {
        v = u.inner[d].posterior_mean(lambda[static_cast<Eigen::Index>(d)]);
      } catch (const FactorizationFailure& e) {
        throw FactorizationFailure(std::string(e.what()) + " in " +
                                   af_name(static_cast<std::size_t>(r),
                                           static_cast<std::ptrdiff_t>(d)));
      }
      t.inner_outputs(r, static_cast<Eigen::Index>(d)) = v;
      s += v;
    }
    t.unit_sums[r] = s;
    try {
      t.unit_outputs[r] = u.outer.posterior_mean(s);
    } catch (const FactorizationFailure& e) {
      throw FactorizationFailure(std::string(e.what()) + " in " +
                                 af_name(static_cast<std::size_t>(r), -1));
    }
  }
  t.output = t.unit_outputs.sum();
  return t;
}

GradientSet Network::zero_gradients() const {
  GradientSet g;
  g.inner.resize(units_.size());
  g.outer.resize(units_.size());
  for (std::size_t r = 0; r < units_.size(); ++r) {
    g.inner[r].resize(dims_);
    for (std::size_t d = 0; d < dims_; ++d)
      g.inner[r][d].pts.resize(units_[r].inner[d].points().size());
    g.outer[r].pts.resize(units_[r].outer.points().size());
  }
  return g;
}

GradientSet Network::backward(const std::vector<ForwardTrace>& traces,
                              const std::vector<double>& dl_dy) const {
  if (traces.size() != dl_dy.size())
    throw ShapeMismatch("trace/gradient count mismatch");

  std::vector<AfWorkspace> ws_outer(units_.size());
  std::vector<std::vector<AfWorkspace>> ws_inner(units_.size());
  for (std::size_t r = 0; r < units_.size(); ++r) {
    try {
      ws_outer[r].build(units_[r].outer);
      ws_inner[r].resize(dims_);
      for (std::size_t d = 0; d < dims_; ++d)
        ws_inner[r][d].build(units_[r].inner[d]);
    } catch (const FactorizationFailure& e) {
      throw FactorizationFailure(std::string(e.what()) + " in unit " + std::to_string(r));
    }
  }

  GradientSet grads = zero_gradients();
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const ForwardTrace& tr = traces[t];
    if (static_cast<std::size_t>(tr.unit_sums.size()) != units_.size() ||
        static_cast<std::size_t>(tr.input.size()) != dims_)
      throw ShapeMismatch("trace shape does not match network topology");
    const double g = dl_dy[t];
    if (g == 0.0) continue;
    for (std::size_t r = 0; r < units_.size(); ++r) {
      const double s_r = tr.unit_sums[static_cast<Eigen::Index>(r)];
      ws_outer[r].accumulate(s_r, g, grads.outer[r]);
      const double kappa = ws_outer[r].slope(s_r);
      const double gi = g * kappa;
      if (gi == 0.0) continue;
      for (std::size_t d = 0; d < dims_; ++d)
        ws_inner[r][d].accumulate(tr.input[static_cast<Eigen::Index>(d)], gi,
                                  grads.inner[r][d]);
    }
  }
  return grads;
}

void Network::apply_update(const GradientSet& grads, double eta_inner,
                           double eta_outer) {
  if (grads.inner.size() != units_.size() || grads.outer.size() != units_.size())
    throw ShapeMismatch("gradient set does not match unit count");
  for (std::size_t r = 0; r < units_.size(); ++r) {
    if (grads.inner[r].size() != dims_)
      throw ShapeMismatch("gradient set does not match network dims");
    for (std::size_t d = 0; d < dims_; ++d) {
      const auto& ag = grads.inner[r][d];
      auto& af = units_[r].inner[d];
      if (ag.pts.size() != af.points().size())
        throw ShapeMismatch("gradient set does not match control point count");
      for (std::size_t i = 0; i < ag.pts.size(); ++i)
        af.shift_point(i, -eta_inner * ag.pts[i].x, -eta_inner * ag.pts[i].y);
    }
    const auto& og = grads.outer[r];
    auto& oaf = units_[r].outer;
    if (og.pts.size() != oaf.points().size())
      throw ShapeMismatch("gradient set does not match control point count");
    for (std::size_t i = 0; i < og.pts.size(); ++i)
      oaf.shift_point(i, -eta_outer * og.pts[i].x, -eta_outer * og.pts[i].y);
  }
}

}  // namespace kstgp
