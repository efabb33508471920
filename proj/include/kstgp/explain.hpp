#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kstgp/data.hpp"
#include "kstgp/kst_network.hpp"

namespace kstgp {

/// Identifies one activation function: layer 1 = inner (r, d), layer 2 =
/// outer (r, d ignored).
struct AfId {
  int layer = 1;
  std::size_t r = 0;
  std::size_t d = 0;
};

struct AfSymbolic {
  AfId id;
  std::vector<double> xs;       // control abscissae
  std::vector<double> weights;  // C^-1 y
  Hyperparameters hyper;
  std::string name;  // e.g. "phi_1_0_2"
  std::string expr;  // fully expanded numeric expression in x
};

/// Closed-form record of the whole model: one expression per AF plus the
/// composition skeleton. The rendered text is machine-re-parsable (infix
/// arithmetic with ^ for powers).
struct SymbolicModel {
  std::size_t dims = 0;
  std::size_t repetition = 0;
  std::vector<AfSymbolic> afs;
  std::string composition;

  std::string full_text() const;
};

SymbolicModel export_symbolic(const Network& net);

struct CurvePoint {
  double x = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

std::vector<CurvePoint> sample_af(const Network& net, const AfId& id, int grid,
                                  std::pair<double, double> span);

/// Layer 1: the standardized input box [-1, 1]. Layer 2: observed min/max of
/// the unit's sums over the given set, padded 10%.
std::pair<double, double> default_span(const Network& net, const AfId& id,
                                       const Dataset* train = nullptr);

struct InstanceTrace {
  ForwardTrace trace;
  int predicted = 0;
  int truth = 0;
};

InstanceTrace trace_instance(const Network& net, const Eigen::VectorXd& lambda,
                             int label);

struct InfluenceReport {
  std::vector<double> unit_range;                    // per-unit output range
  std::vector<std::vector<double>> attr_unit_range;  // [r][d] inner output range
  std::vector<std::size_t> attr_ranking;             // attribute indices, most to least influential
};

InfluenceReport influence_report(const Network& net, const Dataset& ds);

struct ReverseQueryResult {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<ForwardTrace> traces;
  double acceptance_rate = 0.0;
};

/// Rejection sampling over the standardized input box for inputs whose
/// output lands in [lo, hi]. An empty result with rate 0 is not an error.
ReverseQueryResult reverse_query(const Network& net, double lo, double hi,
                                 int samples, std::uint64_t seed);

std::vector<AfId> all_af_ids(const Network& net);
std::string af_file_stem(const AfId& id);  // "af_<layer>_<r>_<d>"

/// One (x, mean, variance) CSV per AF into dir.
void write_af_curves_csv(const Network& net, const Dataset* train,
                         const std::string& dir, int grid = 201);

/// Standalone SVG per AF: mean curve, variance band, control points, and
/// optional instance markers.
void write_af_curves_svg(const Network& net, const Dataset* train,
                         const std::string& dir, int grid = 201,
                         const InstanceTrace* marker = nullptr);

}  // namespace kstgp
