#include "kstgp/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace kstgp {

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidConfig("epochs must be >= 1");
  if (!(eta_inner >= 0.0) || !(eta_outer >= 0.0))
    throw InvalidConfig("learning rates must be >= 0");
  if (batch_size < 0) throw InvalidConfig("batch size must be >= 0");
  if (hyperfit_budget < 0) throw InvalidConfig("hyperfit budget must be >= 0");
}

EvalResult evaluate(const Network& net, const Dataset& ds) {
  if (ds.size() == 0) throw EmptySet("evaluate called on an empty instance set");
  if (ds.dims() != net.dims())
    throw DimensionMismatch("dataset width does not match network dims");
  EvalResult r;
  std::size_t correct = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double yhat = net.forward(ds.features.row(static_cast<Eigen::Index>(i))
                                        .transpose()).output;
    total += loss(yhat, ds.labels[i]);
    if (classify(yhat) == ds.labels[i]) ++correct;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  r.mean_loss = total / static_cast<double>(ds.size());
  return r;
}

std::vector<EpochMetrics> train(
    Network& net, const SplitDataset& data, const TrainConfig& cfg,
    const std::function<void(const EpochMetrics&)>& on_epoch) {
  cfg.validate();
  if (data.train.dims() != net.dims())
    throw DimensionMismatch("training data width does not match network dims");

  const std::size_t n = data.train.size();
  std::mt19937_64 batch_rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochMetrics> history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));
  int bad_epochs = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    net.refit_all(cfg.hyperfit_budget);

    if (cfg.batch_size > 0) std::shuffle(order.begin(), order.end(), batch_rng);
    const std::size_t bs = cfg.batch_size > 0
                               ? std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n)
                               : n;
    for (std::size_t start = 0; start < n; start += bs) {
      const std::size_t count = std::min(bs, n - start);
      std::vector<ForwardTrace> traces;
      std::vector<double> dl;
      traces.reserve(count);
      dl.reserve(count);
      for (std::size_t b = 0; b < count; ++b) {
        const std::size_t i = order[start + b];
        traces.push_back(net.forward(
            data.train.features.row(static_cast<Eigen::Index>(i)).transpose()));
        // batch loss is the mean of per-instance losses
        dl.push_back(loss_grad(traces.back().output, data.train.labels[i]) /
                     static_cast<double>(count));
      }
      const GradientSet grads = net.backward(traces, dl);
      net.apply_update(grads, cfg.eta_inner, cfg.eta_outer);
    }

    EpochMetrics m;
    m.epoch = epoch;
    const EvalResult tr = evaluate(net, data.train);
    const EvalResult va = evaluate(net, data.validation);
    m.train_loss = tr.mean_loss;
    m.train_acc = tr.accuracy;
    m.val_loss = va.mean_loss;
    m.val_acc = va.accuracy;
    m.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0).count();
    history.push_back(m);
    if (on_epoch) on_epoch(m);

    if (!std::isfinite(m.train_loss) || m.train_loss > 1e6) {
      if (++bad_epochs >= 3)
        throw TrainingDiverged("train loss non-finite or above 1e6 for 3 consecutive epochs");
    } else {
      bad_epochs = 0;
    }
  }
  return history;
}

}  // namespace kstgp
