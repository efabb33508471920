#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kstgp/data.hpp"
#include "kstgp/kst_network.hpp"

namespace kstgp {

struct TrainConfig {
  int epochs = 1000;
  double eta_inner = 1e-1;
  double eta_outer = 1e-3;
  int batch_size = 64;  // 0 = full batch
  std::uint64_t seed = 1;
  int hyperfit_budget = 50;

  void validate() const;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-instance
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double wall_ms = 0.0;
};

/// Squared error against the 0/1 class code.
inline double loss(double yhat, int label) {
  const double d = yhat - static_cast<double>(label);
  return d * d;
}

inline double loss_grad(double yhat, int label) {
  return 2.0 * (yhat - static_cast<double>(label));
}

/// Nearest of the two class codes; the 0.5 tie goes to class 1.
inline int classify(double yhat) { return yhat >= 0.5 ? 1 : 0; }

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

EvalResult evaluate(const Network& net, const Dataset& ds);

/// Epoch loop: refit hyperparameters, forward the batch, backprop, update,
/// then evaluate both splits. Deterministic given (seed, data, config).
/// on_epoch, when set, is invoked after each epoch's metrics are recorded.
std::vector<EpochMetrics> train(
    Network& net, const SplitDataset& data, const TrainConfig& cfg,
    const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace kstgp
