#include "kstgp/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "kstgp/training.hpp"

namespace kstgp {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

const GPActivation& af_of(const Network& net, const AfId& id) {
  if (id.r >= net.unit_count())
    throw UnknownAF("unit index " + std::to_string(id.r) + " out of range");
  if (id.layer == 2) return net.units()[id.r].outer;
  if (id.layer != 1) throw UnknownAF("layer must be 1 or 2");
  if (id.d >= net.dims())
    throw UnknownAF("input dimension " + std::to_string(id.d) + " out of range");
  return net.units()[id.r].inner[id.d];
}

/// Renders sum_i c_i * (1 + (x - a_i)^2 / denom)^(-p) with numeric
/// coefficients; c_i = w_i * sigma2, denom = 2*alpha*l^2, p = alpha.
std::string render_af_expr(const std::vector<double>& xs,
                           const std::vector<double>& w,
                           const Hyperparameters& h) {
  const double denom = 2.0 * h.alpha * h.length_scale * h.length_scale;
  std::string out;
  bool first = true;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double c = w[i] * h.sigma2;
    if (c == 0.0) continue;
    const double ac = std::abs(c);
    if (first) {
      out += (c < 0.0 ? "-" : "");
      first = false;
    } else {
      out += (c < 0.0 ? " - " : " + ");
    }
    std::string shifted;
    if (xs[i] == 0.0)
      shifted = "x";
    else if (xs[i] < 0.0)
      shifted = "(x + " + num(-xs[i]) + ")";
    else
      shifted = "(x - " + num(xs[i]) + ")";
    out += num(ac) + "*(1 + " + shifted + "^2/" + num(denom) + ")^(-" +
           num(h.alpha) + ")";
  }
  if (first) out = "0";
  return out;
}

}  // namespace

std::vector<AfId> all_af_ids(const Network& net) {
  std::vector<AfId> ids;
  for (std::size_t r = 0; r < net.unit_count(); ++r) {
    for (std::size_t d = 0; d < net.dims(); ++d) ids.push_back({1, r, d});
    ids.push_back({2, r, 0});
  }
  return ids;
}

std::string af_file_stem(const AfId& id) {
  return "af_" + std::to_string(id.layer) + "_" + std::to_string(id.r) + "_" +
         std::to_string(id.d);
}

SymbolicModel export_symbolic(const Network& net) {
  SymbolicModel m;
  m.dims = net.dims();
  m.repetition = net.repetition();
  for (const AfId& id : all_af_ids(net)) {
    const GPActivation& af = af_of(net, id);
    af.ensure_factor();
    AfSymbolic s;
    s.id = id;
    s.xs = af.points().xs;
    const Eigen::VectorXd& w = af.weights();
    s.weights.assign(w.data(), w.data() + w.size());
    s.hyper = af.hyper();
    s.name = (id.layer == 1 ? "phi_1_" + std::to_string(id.r) + "_" + std::to_string(id.d)
                            : "PHI_2_" + std::to_string(id.r));
    s.expr = render_af_expr(s.xs, s.weights, s.hyper);
    m.afs.push_back(std::move(s));
  }

  std::ostringstream comp;
  comp << "F(";
  for (std::size_t d = 0; d < m.dims; ++d) comp << (d ? "," : "") << "l" << d + 1;
  comp << ") = ";
  for (std::size_t r = 0; r <= m.repetition; ++r) {
    if (r) comp << " + ";
    comp << "PHI_2_" << r << "(";
    for (std::size_t d = 0; d < m.dims; ++d) {
      if (d) comp << " + ";
      comp << "phi_1_" << r << "_" << d << "(l" << d + 1 << ")";
    }
    comp << ")";
  }
  m.composition = comp.str();
  return m;
}

std::string SymbolicModel::full_text() const {
  std::ostringstream out;
  out << "# symbolic model v1\n";
  out << "# D=" << dims << " R=" << repetition << "\n";
  out << "# grammar: infix arithmetic over x with + - * / ^ and parentheses\n";
  for (const auto& af : afs) out << af.name << "(x) = " << af.expr << "\n";
  out << composition << "\n";
  return out.str();
}

std::pair<double, double> default_span(const Network& net, const AfId& id,
                                       const Dataset* train) {
  af_of(net, id);  // validates the id
  if (id.layer == 1) return {-1.0, 1.0};
  if (train == nullptr || train->size() == 0)
    throw InvalidConfig("layer-2 span needs a reference dataset");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < train->size(); ++i) {
    const ForwardTrace t =
        net.forward(train->features.row(static_cast<Eigen::Index>(i)).transpose());
    const double s = t.unit_sums[static_cast<Eigen::Index>(id.r)];
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const double pad = 0.1 * std::max(hi - lo, 1e-12);
  return {lo - pad, hi + pad};
}

std::vector<CurvePoint> sample_af(const Network& net, const AfId& id, int grid,
                                  std::pair<double, double> span) {
  const GPActivation& af = af_of(net, id);
  if (grid < 2) throw InvalidConfig("grid must have at least 2 points");
  std::vector<CurvePoint> out(static_cast<std::size_t>(grid));
  for (int k = 0; k < grid; ++k) {
    const double x = span.first + (span.second - span.first) *
                                      static_cast<double>(k) /
                                      static_cast<double>(grid - 1);
    out[static_cast<std::size_t>(k)] = {x, af.posterior_mean(x),
                                        af.posterior_variance(x)};
  }
  return out;
}

InstanceTrace trace_instance(const Network& net, const Eigen::VectorXd& lambda,
                             int label) {
  InstanceTrace t;
  t.trace = net.forward(lambda);
  t.predicted = classify(t.trace.output);
  t.truth = label;
  return t;
}

InfluenceReport influence_report(const Network& net, const Dataset& ds) {
  if (ds.size() == 0) throw EmptySet("influence report over an empty dataset");
  const std::size_t U = net.unit_count();
  const std::size_t D = net.dims();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> out_lo(U, inf), out_hi(U, -inf);
  std::vector<std::vector<double>> in_lo(U, std::vector<double>(D, inf));
  std::vector<std::vector<double>> in_hi(U, std::vector<double>(D, -inf));

  for (std::size_t i = 0; i < ds.size(); ++i) {
    const ForwardTrace t =
        net.forward(ds.features.row(static_cast<Eigen::Index>(i)).transpose());
    for (std::size_t r = 0; r < U; ++r) {
      const auto er = static_cast<Eigen::Index>(r);
      out_lo[r] = std::min(out_lo[r], t.unit_outputs[er]);
      out_hi[r] = std::max(out_hi[r], t.unit_outputs[er]);
      for (std::size_t d = 0; d < D; ++d) {
        const double v = t.inner_outputs(er, static_cast<Eigen::Index>(d));
        in_lo[r][d] = std::min(in_lo[r][d], v);
        in_hi[r][d] = std::max(in_hi[r][d], v);
      }
    }
  }

  InfluenceReport rep;
  rep.unit_range.resize(U);
  rep.attr_unit_range.assign(U, std::vector<double>(D, 0.0));
  for (std::size_t r = 0; r < U; ++r) {
    rep.unit_range[r] = out_hi[r] - out_lo[r];
    for (std::size_t d = 0; d < D; ++d)
      rep.attr_unit_range[r][d] = in_hi[r][d] - in_lo[r][d];
  }

  std::vector<double> score(D, 0.0);
  for (std::size_t d = 0; d < D; ++d)
    for (std::size_t r = 0; r < U; ++r)
      score[d] = std::max(score[d], rep.attr_unit_range[r][d]);
  rep.attr_ranking.resize(D);
  std::iota(rep.attr_ranking.begin(), rep.attr_ranking.end(), std::size_t{0});
  std::stable_sort(rep.attr_ranking.begin(), rep.attr_ranking.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return rep;
}

ReverseQueryResult reverse_query(const Network& net, double lo, double hi,
                                 int samples, std::uint64_t seed) {
  if (!(lo <= hi)) throw InvalidConfig("reverse-query interval is empty");
  if (samples < 1) throw InvalidConfig("need at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ReverseQueryResult res;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd lambda(static_cast<Eigen::Index>(net.dims()));
    for (Eigen::Index d = 0; d < lambda.size(); ++d) lambda[d] = u(rng);
    ForwardTrace t = net.forward(lambda);
    if (t.output >= lo && t.output <= hi) {
      res.inputs.push_back(std::move(lambda));
      res.traces.push_back(std::move(t));
    }
  }
  res.acceptance_rate =
      static_cast<double>(res.inputs.size()) / static_cast<double>(samples);
  return res;
}

void write_af_curves_csv(const Network& net, const Dataset* train,
                         const std::string& dir, int grid) {
  std::filesystem::create_directories(dir);
  for (const AfId& id : all_af_ids(net)) {
    const auto span = default_span(net, id, train);
    const auto curve = sample_af(net, id, grid, span);
    std::ofstream out(std::filesystem::path(dir) / (af_file_stem(id) + ".csv"));
    out << "x,mean,variance\n";
    for (const auto& p : curve)
      out << num(p.x) << "," << num(p.mean) << "," << num(p.variance) << "\n";
  }
}

namespace {

struct SvgMapper {
  double x0, x1, y0, y1;  // data ranges
  double w = 640, h = 400, ml = 50, mr = 15, mt = 15, mb = 35;
  double px(double x) const { return ml + (x - x0) / (x1 - x0) * (w - ml - mr); }
  double py(double y) const { return h - mb - (y - y0) / (y1 - y0) * (h - mt - mb); }
};

}  // namespace

void write_af_curves_svg(const Network& net, const Dataset* train,
                         const std::string& dir, int grid,
                         const InstanceTrace* marker) {
  std::filesystem::create_directories(dir);
  for (const AfId& id : all_af_ids(net)) {
    const auto span = default_span(net, id, train);
    const auto curve = sample_af(net, id, grid, span);
    const GPActivation& af = af_of(net, id);

    double ylo = curve.front().mean, yhi = ylo;
    for (const auto& p : curve) {
      ylo = std::min(ylo, p.mean - std::sqrt(p.variance));
      yhi = std::max(yhi, p.mean + std::sqrt(p.variance));
    }
    for (double y : af.points().ys) {
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
    const double pad = 0.08 * std::max(yhi - ylo, 1e-9);
    SvgMapper m{span.first, span.second, ylo - pad, yhi + pad};

    std::ofstream out(std::filesystem::path(dir) / (af_file_stem(id) + ".svg"));
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << m.w
        << "\" height=\"" << m.h << "\" viewBox=\"0 0 " << m.w << " " << m.h
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // +/- 2 sd band
    std::ostringstream band;
    for (const auto& p : curve)
      band << m.px(p.x) << "," << m.py(p.mean + 2.0 * std::sqrt(p.variance)) << " ";
    for (auto it = curve.rbegin(); it != curve.rend(); ++it)
      band << m.px(it->x) << "," << m.py(it->mean - 2.0 * std::sqrt(it->variance)) << " ";
    out << "<polygon points=\"" << band.str()
        << "\" fill=\"#c8d8f0\" stroke=\"none\" opacity=\"0.6\"/>\n";

    // axes
    out << "<line x1=\"" << m.ml << "\" y1=\"" << m.h - m.mb << "\" x2=\""
        << m.w - m.mr << "\" y2=\"" << m.h - m.mb
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<line x1=\"" << m.ml << "\" y1=\"" << m.mt << "\" x2=\"" << m.ml
        << "\" y2=\"" << m.h - m.mb << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double x = span.first + (span.second - span.first) * k / 4.0;
      const double y = m.y0 + (m.y1 - m.y0) * k / 4.0;
      out << "<text x=\"" << m.px(x) << "\" y=\"" << m.h - m.mb + 16
          << "\" font-size=\"10\" text-anchor=\"middle\">" << num(x) << "</text>\n";
      out << "<text x=\"" << m.ml - 6 << "\" y=\"" << m.py(y) + 3
          << "\" font-size=\"10\" text-anchor=\"end\">" << num(y) << "</text>\n";
    }

    // posterior mean
    std::ostringstream line;
    for (const auto& p : curve) line << m.px(p.x) << "," << m.py(p.mean) << " ";
    out << "<polyline points=\"" << line.str()
        << "\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\"/>\n";

    // control points
    for (std::size_t i = 0; i < af.points().size(); ++i)
      out << "<circle cx=\"" << m.px(af.points().xs[i]) << "\" cy=\""
          << m.py(af.points().ys[i]) << "\" r=\"3\" fill=\"#d04020\"/>\n";

    // instance marker
    if (marker != nullptr) {
      const auto er = static_cast<Eigen::Index>(id.r);
      const double mx = id.layer == 1
                            ? marker->trace.input[static_cast<Eigen::Index>(id.d)]
                            : marker->trace.unit_sums[er];
      const double my = id.layer == 1
                            ? marker->trace.inner_outputs(er, static_cast<Eigen::Index>(id.d))
                            : marker->trace.unit_outputs[er];
      const char* color = marker->truth == 1 ? "#208040" : "#c03030";
      out << "<circle cx=\"" << m.px(mx) << "\" cy=\"" << m.py(my)
          << "\" r=\"5\" fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
    }

    out << "<text x=\"" << m.w / 2 << "\" y=\"" << m.h - 6
        << "\" font-size=\"11\" text-anchor=\"middle\">" << af_file_stem(id)
        << "</text>\n";
    out << "</svg>\n";
  }
}

}  // namespace kstgp
