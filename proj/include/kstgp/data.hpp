#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kstgp/errors.hpp"

namespace kstgp {

/// Raw numeric table as parsed from disk; label column already separated.
struct RawTable {
  Eigen::MatrixXd features;  // N x D, raw units
  std::vector<int> labels;   // 0/1
  std::vector<std::string> feature_names;
};

/// Parses a rectangular comma-separated numeric file with an optional header
/// row. label_column < 0 counts from the end (-1 = last).
RawTable load_csv(const std::string& path, int label_column = -1);

struct Dataset {
  Eigen::MatrixXd features;  // N x D, standardized into [-1, 1]
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::vector<std::pair<double, double>> col_range;  // raw (min, max) per column

  std::size_t size() const { return labels.size(); }
  std::size_t dims() const { return static_cast<std::size_t>(features.cols()); }
};

/// Affine map of every column onto [-1, 1], recording (min, max) for the
/// inverse. Throws DegenerateColumn on a constant column.
Dataset standardize(const RawTable& raw);

/// Applies previously recorded column ranges (e.g. from a saved model) to
/// raw data. Values outside the recorded range map outside [-1, 1].
Dataset apply_standardization(const RawTable& raw,
                              const std::vector<std::pair<double, double>>& ranges);

double destandardize(const Dataset& ds, std::size_t col, double v);

/// Appends one i.i.d. uniform [-1, 1] column named "noise", deterministic
/// given the seed.
Dataset inject_noise_attribute(const Dataset& ds, std::uint64_t seed);

struct SplitDataset {
  Dataset train;
  Dataset validation;
  std::uint64_t split_seed = 0;
};

/// Seeded uniform permutation; first floor(ratio*N) rows become training.
SplitDataset split(const Dataset& ds, double ratio, std::uint64_t seed);

}  // namespace kstgp
