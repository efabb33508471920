#include "kstgp/gp_activation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <utility>

namespace kstgp {

namespace {

std::function<void(const std::string&)>& warning_handler() {
  static std::function<void(const std::string&)> handler =
      [](const std::string& msg) { std::fprintf(stderr, "[warn] %s\n", msg.c_str()); };
  return handler;
}

}  // namespace

void warn(const std::string& msg) { warning_handler()(msg); }

void set_warning_handler(std::function<void(const std::string&)> handler) {
  warning_handler() = std::move(handler);
}

void Hyperparameters::validate() const {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(sigma2) || !ok(length_scale) || !ok(alpha) || !std::isfinite(noise_var))
    throw InvalidConfig("hyperparameters must be finite and strictly positive");
  if (noise_var < kNoiseFloor)
    throw InvalidConfig("noise variance below the floor " + std::to_string(kNoiseFloor));
}

void ControlPointSet::validate() const {
  if (xs.size() != ys.size())
    throw InvalidConfig("control point abscissae/ordinates length mismatch");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw InvalidConfig("non-finite control point coordinate");
  }
}

double rq_kernel(double xi, double xj, const Hyperparameters& hyper) {
  const double d = xi - xj;
  const double q = d * d / (2.0 * hyper.alpha * hyper.length_scale * hyper.length_scale);
  // (1+q)^(-alpha) via log1p keeps accuracy for very large alpha (RBF limit).
  return hyper.sigma2 * std::exp(-hyper.alpha * std::log1p(q));
}

CovarianceFactor build_covariance(const ControlPointSet& points,
                                  const Hyperparameters& hyper) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = hyper.sigma2;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double k = rq_kernel(points.xs[i], points.xs[j], hyper);
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  const double noise = std::max(hyper.noise_var, kNoiseFloor);
  for (double scale = kBaseJitterScale; scale <= kMaxJitterScale * 1.0000001;
       scale *= 10.0) {
    CovarianceFactor out;
    out.jitter = scale * hyper.sigma2;
    out.C = K;
    out.C.diagonal().array() += noise + out.jitter;
    out.llt.compute(out.C);
    if (out.llt.info() == Eigen::Success &&
        out.llt.matrixLLT().diagonal().minCoeff() > 0.0)
      return out;
  }
  throw FactorizationFailure("covariance factorization failed at maximum jitter");
}

double neg_log_marginal_likelihood(const ControlPointSet& points,
                                   const Hyperparameters& hyper) {
  const CovarianceFactor f = build_covariance(points, hyper);
  const Eigen::VectorXd y = points.y_vector();
  const Eigen::VectorXd alpha = f.llt.solve(y);
  const double logdet = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
  const double cost = y.dot(alpha) + logdet;
  if (!std::isfinite(cost))
    throw FactorizationFailure("non-finite marginal-likelihood cost");
  return cost;
}

namespace {

using LogTheta = Eigen::Vector4d;  // log(sigma2, length_scale, alpha, noise_var)

LogTheta to_log(const Hyperparameters& h) {
  return {std::log(h.sigma2), std::log(h.length_scale), std::log(h.alpha),
          std::log(std::max(h.noise_var, kNoiseFloor))};
}

Hyperparameters from_log(const LogTheta& t) {
  Hyperparameters h;
  h.sigma2 = std::exp(t[0]);
  h.length_scale = std::exp(t[1]);
  h.alpha = std::exp(t[2]);
  h.noise_var = std::max(std::exp(t[3]), kNoiseFloor);
  return h;
}

// Optimization box, log-space. The marginal-likelihood cost is happy to
// explain random early ordinates entirely as noise (sigma2 -> 0), which
// flattens the activation and kills its gradients for good; the box keeps
// every activation trainable while still letting noise_var act as a
// regularizer.
constexpr double kSigma2Lo = 0.05, kSigma2Hi = 20.0;
constexpr double kLengthLo = 0.05, kLengthHi = 5.0;
constexpr double kAlphaLo = 0.05, kAlphaHi = 1e4;
constexpr double kNoiseHi = 0.5;

LogTheta clamp_log(LogTheta t) {
  t[0] = std::clamp(t[0], std::log(kSigma2Lo), std::log(kSigma2Hi));
  t[1] = std::clamp(t[1], std::log(kLengthLo), std::log(kLengthHi));
  t[2] = std::clamp(t[2], std::log(kAlphaLo), std::log(kAlphaHi));
  t[3] = std::clamp(t[3], std::log(kNoiseFloor), std::log(kNoiseHi));
  return t;
}

}  // namespace

Hyperparameters fit_hyperparameters(const ControlPointSet& points,
                                    const Hyperparameters& init, int budget) {
  points.validate();
  init.validate();
  if (points.size() < 2) throw InvalidConfig("hyperparameter fit needs n >= 2");
  if (budget <= 0) return init;

  auto cost_of = [&](const LogTheta& t) -> double {
    try {
      return neg_log_marginal_likelihood(points, from_log(t));
    } catch (const FactorizationFailure&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const double init_cost = cost_of(to_log(init));
  LogTheta theta = clamp_log(to_log(init));
  double cost = cost_of(theta);
  if (!std::isfinite(cost) && !std::isfinite(init_cost)) {
    warn("hyperparameter fit: initial cost not computable, keeping init");
    return init;
  }

  const double grad_h = 1e-5;
  double step = 0.25;
  for (int it = 0; it < budget; ++it) {
    LogTheta grad;
    for (int k = 0; k < 4; ++k) {
      LogTheta tp = theta, tm = theta;
      tp[k] += grad_h;
      tm[k] -= grad_h;
      const double cp = cost_of(clamp_log(tp));
      const double cm = cost_of(clamp_log(tm));
      grad[k] = (std::isfinite(cp) && std::isfinite(cm))
                    ? (cp - cm) / (2.0 * grad_h)
                    : 0.0;
    }
    const double gnorm = grad.norm();
    if (gnorm < 1e-10) break;

    bool accepted = false;
    double t = step;
    for (int bt = 0; bt < 30; ++bt) {
      const LogTheta cand = clamp_log(theta - t * grad);
      const double c = cost_of(cand);
      if (c < cost) {
        theta = cand;
        cost = c;
        step = std::min(t * 2.0, 1.0);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  // never hand back something worse than the caller's starting point
  if (!(cost <= init_cost)) return init;
  return from_log(theta);
}

GPActivation::GPActivation(ControlPointSet points, Hyperparameters hyper)
    : points_(std::move(points)), hyper_(hyper) {
  points_.validate();
  hyper_.validate();
}

void GPActivation::set_points(ControlPointSet points) {
  points.validate();
  points_ = std::move(points);
  invalidate();
}

void GPActivation::set_hyper(Hyperparameters hyper) {
  hyper.validate();
  hyper_ = hyper;
  invalidate();
}

void GPActivation::shift_point(std::size_t i, double dx, double dy) {
  const double nx = points_.xs[i] + dx;
  const double ny = points_.ys[i] + dy;
  if (std::isfinite(nx)) {
    points_.xs[i] = nx;
  } else {
    warn("skipping non-finite abscissa update for control point " + std::to_string(i));
  }
  if (std::isfinite(ny)) {
    points_.ys[i] = ny;
  } else {
    warn("skipping non-finite ordinate update for control point " + std::to_string(i));
  }
  invalidate();
}

void GPActivation::refit(int budget) {
  hyper_ = fit_hyperparameters(points_, hyper_, budget);
  invalidate();
}

void GPActivation::ensure_factor() const {
  if (cache_valid_) return;
  factor_ = build_covariance(points_, hyper_);
  weights_ = factor_.llt.solve(Eigen::VectorXd(points_.y_vector()));
  cache_valid_ = true;
}

const CovarianceFactor& GPActivation::factor() const {
  ensure_factor();
  return factor_;
}

const Eigen::VectorXd& GPActivation::weights() const {
  ensure_factor();
  return weights_;
}

Eigen::VectorXd GPActivation::kernel_vector(double x_star) const {
  const auto n = static_cast<Eigen::Index>(points_.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i)
    k[i] = rq_kernel(points_.xs[i], x_star, hyper_);
  return k;
}

double GPActivation::posterior_mean(double x_star) const {
  ensure_factor();
  double m = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i)
    m += rq_kernel(points_.xs[i], x_star, hyper_) * weights_[static_cast<Eigen::Index>(i)];
  return m;
}

double GPActivation::posterior_variance(double x_star) const {
  ensure_factor();
  const Eigen::VectorXd k = kernel_vector(x_star);
  double var = hyper_.sigma2 - k.dot(factor_.llt.solve(k));
  if (var < 0.0) var = 0.0;
  return var;
}

double GPActivation::slope(double x_star, double h) const {
  return (posterior_mean(x_star + h) - posterior_mean(x_star - h)) / (2.0 * h);
}

std::vector<GPActivation::PointGradient> GPActivation::control_point_gradients(
    double x_star) const {
  ensure_factor();
  const std::size_t n = points_.size();
  const Eigen::VectorXd k = kernel_vector(x_star);
  const Eigen::VectorXd v = factor_.llt.solve(k);  // d mean / d y

  std::vector<PointGradient> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].d_y = v[static_cast<Eigen::Index>(i)];
    const double h = fd_step(points_.xs[i]);
    ControlPointSet p = points_;
    p.xs[i] = points_.xs[i] + h;
    CovarianceFactor fp = build_covariance(p, hyper_);
    Eigen::VectorXd wp = fp.llt.solve(Eigen::VectorXd(p.y_vector()));
    double mp = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      mp += rq_kernel(p.xs[j], x_star, hyper_) * wp[static_cast<Eigen::Index>(j)];

    p.xs[i] = points_.xs[i] - h;
    CovarianceFactor fm = build_covariance(p, hyper_);
    Eigen::VectorXd wm = fm.llt.solve(Eigen::VectorXd(p.y_vector()));
    double mm = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      mm += rq_kernel(p.xs[j], x_star, hyper_) * wm[static_cast<Eigen::Index>(j)];

    out[i].d_x = (mp - mm) / (2.0 * h);
  }
  return out;
}

}  // namespace kstgp
