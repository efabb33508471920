#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "kstgp/errors.hpp"

namespace kstgp {

/// Lower bound kept on the observation-noise variance; the posterior
/// formulas degenerate numerically at exactly zero noise.
inline constexpr double kNoiseFloor = 1e-6;

/// Diagonal jitter added before factorization, as a fraction of sigma2.
/// Escalated x10 on failure up to kMaxJitterScale.
inline constexpr double kBaseJitterScale = 1e-8;
inline constexpr double kMaxJitterScale = 1e-4;

/// Default finite-difference step for slope and control-point gradients.
inline double fd_step(double x) {
  return 1e-4 * std::max(1.0, std::abs(x));
}

/// Rational-quadratic kernel parameters plus observation-noise variance.
struct Hyperparameters {
  double sigma2 = 1.0;        // variance magnitude, > 0
  double length_scale = 0.5;  // > 0
  double alpha = 1.0;         // scale-mixture parameter, > 0
  double noise_var = 0.01;    // >= kNoiseFloor

  void validate() const;  // throws InvalidConfig
};

/// The n trainable (x, y) coordinates defining one activation function.
struct ControlPointSet {
  std::vector<double> xs;
  std::vector<double> ys;

  std::size_t size() const { return xs.size(); }
  void validate() const;  // equal lengths, all finite

  Eigen::Map<const Eigen::VectorXd> y_vector() const {
    return {ys.data(), static_cast<Eigen::Index>(ys.size())};
  }
};

double rq_kernel(double xi, double xj, const Hyperparameters& hyper);

struct CovarianceFactor {
  Eigen::MatrixXd C;  // K + noise_var*I + jitter*I, as factorized
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

/// Assembles C = K + noise_var*I + jitter*I and factorizes it, escalating
/// jitter x10 on failure up to kMaxJitterScale*sigma2.
/// Throws FactorizationFailure if every attempt fails.
CovarianceFactor build_covariance(const ControlPointSet& points,
                                  const Hyperparameters& hyper);

/// Two-term cost y^T C^-1 y + log|C|, via the Cholesky factor.
double neg_log_marginal_likelihood(const ControlPointSet& points,
                                   const Hyperparameters& hyper);

/// Gradient descent on the cost above, in log-space of all four parameters,
/// with backtracking line search. Never returns a cost above the initial
/// one; returns init unchanged when budget == 0 or nothing improves.
Hyperparameters fit_hyperparameters(const ControlPointSet& points,
                                    const Hyperparameters& init, int budget);

/// One activation function: control points + kernel hyperparameters, with a
/// cached Cholesky factorization and weight vector C^-1 y.
///
/// Read-only posterior evaluation is safe from concurrent readers once the
/// cache is built (call ensure_factor() first); any mutation requires
/// exclusive access.
class GPActivation {
 public:
  GPActivation() = default;
  GPActivation(ControlPointSet points, Hyperparameters hyper);

  const ControlPointSet& points() const { return points_; }
  const Hyperparameters& hyper() const { return hyper_; }

  void set_points(ControlPointSet points);
  void set_hyper(Hyperparameters hyper);
  /// Moves one control point by (dx, dy). Non-finite results are rejected
  /// per coordinate with a warning event.
  void shift_point(std::size_t i, double dx, double dy);

  /// Refits hyperparameters, warm-started from the current values.
  void refit(int budget);

  void ensure_factor() const;
  bool factor_valid() const { return cache_valid_; }
  const CovarianceFactor& factor() const;
  const Eigen::VectorXd& weights() const;  // C^-1 y

  double posterior_mean(double x_star) const;
  double posterior_variance(double x_star) const;

  /// Central-difference slope of the posterior mean at x_star.
  double slope(double x_star) const { return slope(x_star, fd_step(x_star)); }
  double slope(double x_star, double h) const;

  struct PointGradient {
    double d_x = 0.0;  // d mean / d x_i
    double d_y = 0.0;  // d mean / d y_i
  };

  /// Sensitivity of the posterior mean at x_star to each control point.
  /// Hyperparameters are held fixed during the perturbation. d_x is a
  /// central difference; d_y is the exact linear form (C^-1 k)_i.
  std::vector<PointGradient> control_point_gradients(double x_star) const;

  Eigen::VectorXd kernel_vector(double x_star) const;

 private:
  ControlPointSet points_;
  Hyperparameters hyper_;

  mutable bool cache_valid_ = false;
  mutable CovarianceFactor factor_;
  mutable Eigen::VectorXd weights_;

  void invalidate() { cache_valid_ = false; }
};

}  // namespace kstgp
