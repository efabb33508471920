#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "kstgp/gp_activation.hpp"

namespace kstgp {

/// Initialization ranges for a randomly seeded network.
struct InitSpec {
  double inner_x_lo = -1.0;
  double inner_x_hi = 1.0;
  /// Outer abscissae span [-D*half, D*half]; a unit sum of D inner outputs
  /// plausibly covers a few units of magnitude.
  double outer_half_span_per_dim = 0.5;
  double ordinate_sd = 0.3;
  Hyperparameters hyper{};
};

/// One repetition of the topology: D inner activations feeding one outer.
struct Unit {
  std::vector<GPActivation> inner;
  GPActivation outer;
};

/// All intermediate values of one forward pass; reused by backprop and the
/// explainability layer.
struct ForwardTrace {
  Eigen::VectorXd input;          // D
  Eigen::MatrixXd inner_outputs;  // (R+1) x D
  Eigen::VectorXd unit_sums;      // R+1
  Eigen::VectorXd unit_outputs;   // R+1
  double output = 0.0;
};

struct PointGrad {
  double x = 0.0;
  double y = 0.0;
};

struct AfGrad {
  std::vector<PointGrad> pts;
};

/// dL/d(coordinate) for every control point of every activation function.
struct GradientSet {
  std::vector<std::vector<AfGrad>> inner;  // [r][d]
  std::vector<AfGrad> outer;               // [r]
};

class Network {
 public:
  Network() = default;
  Network(std::size_t dims, std::vector<Unit> units);

  /// Seeded random network: inner abscissae uniform over the init range,
  /// outer abscissae uniform over [-D*half, D*half], ordinates Gaussian.
  /// Deterministic given the seed.
  static Network random(std::size_t dims, std::size_t repetition, std::size_t n,
                        std::uint64_t seed, const InitSpec& init = {});

  std::size_t dims() const { return dims_; }
  std::size_t repetition() const { return units_.size() - 1; }
  std::size_t unit_count() const { return units_.size(); }
  std::size_t points_per_af() const;

  std::vector<Unit>& units() { return units_; }
  const std::vector<Unit>& units() const { return units_; }

  /// Prebuilds every activation's factorization cache, so that subsequent
  /// forward calls are read-only.
  void ensure_factors() const;
  void refit_all(int budget);

  ForwardTrace forward(const Eigen::VectorXd& lambda) const;

  /// Accumulated (summed) control-point gradients over a batch of traces,
  /// chained through the finite-difference slope and point sensitivities.
  GradientSet backward(const std::vector<ForwardTrace>& traces,
                       const std::vector<double>& dl_dy) const;

  GradientSet zero_gradients() const;

  void apply_update(const GradientSet& grads, double eta_inner, double eta_outer);

 private:
  std::size_t dims_ = 0;
  std::vector<Unit> units_;
};

}  // namespace kstgp
