#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "kstgp/kst_network.hpp"

namespace kstgp {

/// Versioned, self-describing model document. Deliberately excludes wall
/// times so identical seeds reproduce byte-identical files.
struct ModelFile {
  int version = 1;
  Network net;
  std::vector<std::pair<double, double>> col_range;  // raw feature columns (incl. noise)
  std::vector<std::string> feature_names;
  bool noise_injected = false;
  std::uint64_t noise_seed = 0;
  std::uint64_t split_seed = 0;
  double split_ratio = 0.7;
  std::size_t trained_on_n = 0;  // instance count of the source dataset
  nlohmann::json config_echo = nlohmann::json::object();
  nlohmann::json summary = nlohmann::json::object();
};

std::string model_to_string(const ModelFile& m);
ModelFile model_from_string(const std::string& text);  // throws ParseError

void save_model(const ModelFile& m, const std::string& path);
ModelFile load_model(const std::string& path);

}  // namespace kstgp
