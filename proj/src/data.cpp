#include "kstgp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace kstgp {

namespace {

bool parse_double(const std::string& tok, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(tok, &pos);
    while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
    return pos == tok.size() && std::isfinite(out);
  } catch (...) {
    return false;
  }
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

RawTable load_csv(const std::string& path, int label_column) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::string line;
  std::size_t lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto toks = split_line(line);
    std::vector<double> row(toks.size());
    bool numeric = true;
    std::size_t badcol = 0;
    for (std::size_t c = 0; c < toks.size(); ++c) {
      if (!parse_double(toks[c], row[c])) {
        numeric = false;
        badcol = c;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && header.empty()) {
        header = toks;  // optional header row
        continue;
      }
      throw ParseError(path + ": non-numeric value at row " + std::to_string(lineno) +
                       ", column " + std::to_string(badcol + 1));
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw ParseError(path + ": ragged row " + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");
  if (width < 2) throw ParseError(path + ": need at least one feature and a label");

  int lc = label_column;
  if (lc < 0) lc += static_cast<int>(width);
  if (lc < 0 || lc >= static_cast<int>(width))
    throw ParseError(path + ": label column out of range");

  RawTable t;
  const auto n = rows.size();
  const auto d = width - 1;
  t.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  t.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t fc = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == static_cast<std::size_t>(lc)) {
        const double lv = rows[i][c];
        if (lv != 0.0 && lv != 1.0)
          throw NonBinaryLabel(path + ": label " + std::to_string(lv) + " at row " +
                               std::to_string(i + 1));
        t.labels[i] = static_cast<int>(lv);
      } else {
        t.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(fc++)) =
            rows[i][c];
      }
    }
  }
  t.feature_names.resize(d);
  std::size_t fc = 0;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == static_cast<std::size_t>(lc)) continue;
    t.feature_names[fc] = (c < header.size() && !header[c].empty())
                              ? header[c]
                              : "attr" + std::to_string(fc + 1);
    ++fc;
  }
  return t;
}

Dataset standardize(const RawTable& raw) {
  std::vector<std::pair<double, double>> ranges;
  ranges.reserve(static_cast<std::size_t>(raw.features.cols()));
  for (Eigen::Index c = 0; c < raw.features.cols(); ++c) {
    const double lo = raw.features.col(c).minCoeff();
    const double hi = raw.features.col(c).maxCoeff();
    if (hi <= lo)
      throw DegenerateColumn("constant feature column " + std::to_string(c + 1));
    ranges.emplace_back(lo, hi);
  }
  return apply_standardization(raw, ranges);
}

Dataset apply_standardization(const RawTable& raw,
                              const std::vector<std::pair<double, double>>& ranges) {
  if (ranges.size() != static_cast<std::size_t>(raw.features.cols()))
    throw DimensionMismatch("standardization ranges do not match feature count");
  Dataset ds;
  ds.labels = raw.labels;
  ds.feature_names = raw.feature_names;
  ds.col_range = ranges;
  ds.features.resize(raw.features.rows(), raw.features.cols());
  for (Eigen::Index c = 0; c < raw.features.cols(); ++c) {
    const auto [lo, hi] = ranges[static_cast<std::size_t>(c)];
    ds.features.col(c) =
        2.0 * (raw.features.col(c).array() - lo) / (hi - lo) - 1.0;
  }
  return ds;
}

double destandardize(const Dataset& ds, std::size_t col, double v) {
  const auto [lo, hi] = ds.col_range[col];
  return lo + (v + 1.0) * 0.5 * (hi - lo);
}

Dataset inject_noise_attribute(const Dataset& ds, std::uint64_t seed) {
  Dataset out = ds;
  const auto n = ds.features.rows();
  out.features.conservativeResize(n, ds.features.cols() + 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) out.features(i, ds.features.cols()) = u(rng);
  out.feature_names.push_back("noise");
  out.col_range.emplace_back(-1.0, 1.0);
  return out;
}

SplitDataset split(const Dataset& ds, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidConfig("split ratio must be in (0,1)");
  const std::size_t n = ds.size();
  if (n < 2) throw InvalidConfig("need at least 2 instances to split");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));

  auto take = [&](std::size_t from, std::size_t count) {
    Dataset part;
    part.feature_names = ds.feature_names;
    part.col_range = ds.col_range;
    part.features.resize(static_cast<Eigen::Index>(count), ds.features.cols());
    part.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto src = static_cast<Eigen::Index>(perm[from + i]);
      part.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(src);
      part.labels[i] = ds.labels[perm[from + i]];
    }
    return part;
  };

  SplitDataset s;
  s.train = take(0, n_train);
  s.validation = take(n_train, n - n_train);
  s.split_seed = seed;
  return s;
}

}  // namespace kstgp
