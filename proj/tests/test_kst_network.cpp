#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "kstgp/kst_network.hpp"
#include "kstgp/training.hpp"

using namespace kstgp;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// A network whose every activation interpolates y = 0 (all ordinates zero).
Network zero_network(std::size_t dims, std::size_t rep, std::size_t n,
                     std::uint64_t seed) {
  Network net = Network::random(dims, rep, n, seed);
  for (auto& u : net.units()) {
    for (auto& af : u.inner) {
      ControlPointSet p = af.points();
      std::fill(p.ys.begin(), p.ys.end(), 0.0);
      af.set_points(p);
    }
    ControlPointSet p = u.outer.points();
    std::fill(p.ys.begin(), p.ys.end(), 0.0);
    u.outer.set_points(p);
  }
  return net;
}

// Whole-network loss via forward passes only, used as the backprop oracle.
double net_loss(const Network& net, const Eigen::VectorXd& x, double target) {
  const double yhat = net.forward(x).output;
  return (yhat - target) * (yhat - target);
}

}  // namespace

TEST_CASE("random network has the documented topology") {
  const Network net = Network::random(5, 1, 6, 1);
  CHECK(net.dims() == 5);
  CHECK(net.repetition() == 1);
  CHECK(net.unit_count() == 2);
  CHECK(net.points_per_af() == 6);
  std::size_t afs = 0, points = 0;
  for (const auto& u : net.units()) {
    CHECK(u.inner.size() == 5);
    for (const auto& af : u.inner) {
      ++afs;
      points += af.points().size();
    }
    ++afs;
    points += u.outer.points().size();
  }
  CHECK(afs == 12);          // 2 units x (5 inner + 1 outer)
  CHECK(points == 72);       // 12 AFs x 6 points
}

TEST_CASE("random initialization respects the configured ranges") {
  InitSpec init;
  const Network net = Network::random(3, 2, 8, 9, init);
  const double outer_half = init.outer_half_span_per_dim * 3.0;
  for (const auto& u : net.units()) {
    for (const auto& af : u.inner) {
      for (double x : af.points().xs) {
        CHECK(x >= init.inner_x_lo);
        CHECK(x <= init.inner_x_hi);
      }
      CHECK(std::is_sorted(af.points().xs.begin(), af.points().xs.end()));
    }
    for (double x : u.outer.points().xs) {
      CHECK(x >= -outer_half);
      CHECK(x <= outer_half);
    }
  }
}

TEST_CASE("random initialization is deterministic per seed") {
  const Network a = Network::random(4, 1, 5, 77);
  const Network b = Network::random(4, 1, 5, 77);
  const Network c = Network::random(4, 1, 5, 78);
  CHECK(a.units()[0].inner[2].points().xs == b.units()[0].inner[2].points().xs);
  CHECK(a.units()[1].outer.points().ys == b.units()[1].outer.points().ys);
  CHECK(a.units()[0].inner[0].points().xs != c.units()[0].inner[0].points().xs);
}

TEST_CASE("invalid topologies are rejected") {
  CHECK_THROWS_AS(Network::random(0, 1, 4, 1), InvalidConfig);
  CHECK_THROWS_AS(Network::random(2, 0, 1, 1), InvalidConfig);
  CHECK_THROWS_AS(Network(2, {}), InvalidConfig);
  Unit u;
  u.inner.emplace_back();  // only 1 inner AF for a 2-dim network
  CHECK_THROWS_AS(Network(2, {u}), InvalidConfig);
}

TEST_CASE("forward of the all-zero network is zero") {
  const Network net = zero_network(3, 1, 5, 4);
  const ForwardTrace t = net.forward(vec({0.3, -0.7, 0.9}));
  CHECK(t.output == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(t.inner_outputs.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(t.unit_outputs.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward trace is internally consistent") {
  const Network net = Network::random(4, 2, 6, 3);
  const ForwardTrace t = net.forward(vec({0.1, -0.4, 0.8, -0.9}));
  CHECK(t.inner_outputs.rows() == 3);
  CHECK(t.inner_outputs.cols() == 4);
  for (Eigen::Index r = 0; r < 3; ++r)
    CHECK(t.unit_sums[r] ==
          doctest::Approx(t.inner_outputs.row(r).sum()).epsilon(1e-14));
  CHECK(t.output == doctest::Approx(t.unit_outputs.sum()).epsilon(1e-14));
}

TEST_CASE("output is additive across units") {
  const Network net = Network::random(2, 2, 5, 8);
  const Eigen::VectorXd x = vec({0.25, -0.6});
  const ForwardTrace full = net.forward(x);
  double sum = 0.0;
  for (std::size_t r = 0; r < net.unit_count(); ++r) {
    const Network single(2, {net.units()[r]});
    sum += single.forward(x).output;
  }
  CHECK(full.output == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("forward rejects bad inputs") {
  const Network net = Network::random(3, 1, 4, 1);
  CHECK_THROWS_AS(net.forward(vec({0.1, 0.2})), DimensionMismatch);
  CHECK_THROWS_AS(
      net.forward(vec({0.1, std::numeric_limits<double>::quiet_NaN(), 0.0})),
      InvalidConfig);
}

TEST_CASE("backward with zero upstream gradient is all zeros") {
  const Network net = Network::random(2, 1, 4, 5);
  const ForwardTrace t = net.forward(vec({0.4, -0.2}));
  const GradientSet g = net.backward({t}, {0.0});
  for (const auto& row : g.inner)
    for (const auto& ag : row)
      for (const auto& p : ag.pts) {
        CHECK(p.x == 0.0);
        CHECK(p.y == 0.0);
      }
  for (const auto& ag : g.outer)
    for (const auto& p : ag.pts) CHECK(p.x == 0.0);
}

TEST_CASE("flat outer activation blocks the inner gradients") {
  Network net = Network::random(2, 0, 4, 6);
  ControlPointSet p = net.units()[0].outer.points();
  std::fill(p.ys.begin(), p.ys.end(), 0.0);  // identically-zero outer AF
  net.units()[0].outer.set_points(p);

  const ForwardTrace t = net.forward(vec({0.3, 0.1}));
  const GradientSet g = net.backward({t}, {1.0});
  // kappa of a zero function is exactly zero, so nothing reaches layer 1
  for (const auto& ag : g.inner[0])
    for (const auto& pt : ag.pts) {
      CHECK(pt.x == 0.0);
      CHECK(pt.y == 0.0);
    }
  // the outer ordinates still receive gradient
  double outer_mag = 0.0;
  for (const auto& pt : g.outer[0].pts) outer_mag += std::abs(pt.y);
  CHECK(outer_mag > 1e-3);
}

TEST_CASE("backward matches whole-network finite differences") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> ux(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Network net = Network::random(2, 1, 4, 1000 + static_cast<std::uint64_t>(trial));
    const Eigen::VectorXd x = vec({ux(rng), ux(rng)});
    const double target = trial % 2 ? 1.0 : 0.0;

    const ForwardTrace t = net.forward(x);
    const GradientSet g = net.backward({t}, {loss_grad(t.output, static_cast<int>(target))});

    const double h = 1e-5;
    int checked = 0;
    auto check_coord = [&](GPActivation& af, std::size_t i, bool is_x,
                           double analytic) {
      auto perturb = [&](double delta) {
        ControlPointSet p = af.points();
        (is_x ? p.xs : p.ys)[i] += delta;
        ControlPointSet saved = af.points();
        af.set_points(p);
        const double l = net_loss(net, x, target);
        af.set_points(saved);
        return l;
      };
      const double fd = (perturb(h) - perturb(-h)) / (2.0 * h);
      const double denom = std::max(std::abs(fd), std::abs(analytic));
      // both effectively zero counts as agreement; FD noise dominates there
      if (denom > 1e-8) CHECK(std::abs(fd - analytic) / denom < 1e-3);
      ++checked;
    };

    for (std::size_t r = 0; r < net.unit_count(); ++r) {
      for (std::size_t d = 0; d < net.dims(); ++d)
        for (std::size_t i = 0; i < net.points_per_af(); ++i) {
          check_coord(net.units()[r].inner[d], i, true, g.inner[r][d].pts[i].x);
          check_coord(net.units()[r].inner[d], i, false, g.inner[r][d].pts[i].y);
        }
      for (std::size_t i = 0; i < net.points_per_af(); ++i) {
        check_coord(net.units()[r].outer, i, true, g.outer[r].pts[i].x);
        check_coord(net.units()[r].outer, i, false, g.outer[r].pts[i].y);
      }
    }
    CHECK(checked == 2 * 2 * (2 + 1) * 4);  // every coordinate was exercised
  }
}

TEST_CASE("backward over a batch equals the sum of per-trace gradients") {
  const Network net = Network::random(2, 1, 4, 21);
  const std::vector<Eigen::VectorXd> xs = {vec({0.2, -0.3}), vec({-0.8, 0.5}),
                                           vec({0.0, 0.9})};
  std::vector<ForwardTrace> traces;
  std::vector<double> dl;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    traces.push_back(net.forward(xs[i]));
    dl.push_back(0.3 * static_cast<double>(i + 1));
  }
  const GradientSet batch = net.backward(traces, dl);
  GradientSet sum = net.zero_gradients();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const GradientSet one = net.backward({traces[i]}, {dl[i]});
    for (std::size_t r = 0; r < net.unit_count(); ++r) {
      for (std::size_t d = 0; d < net.dims(); ++d)
        for (std::size_t p = 0; p < net.points_per_af(); ++p) {
          sum.inner[r][d].pts[p].x += one.inner[r][d].pts[p].x;
          sum.inner[r][d].pts[p].y += one.inner[r][d].pts[p].y;
        }
      for (std::size_t p = 0; p < net.points_per_af(); ++p) {
        sum.outer[r].pts[p].x += one.outer[r].pts[p].x;
        sum.outer[r].pts[p].y += one.outer[r].pts[p].y;
      }
    }
  }
  for (std::size_t r = 0; r < net.unit_count(); ++r)
    for (std::size_t p = 0; p < net.points_per_af(); ++p) {
      CHECK(batch.outer[r].pts[p].x ==
            doctest::Approx(sum.outer[r].pts[p].x).epsilon(1e-10));
      CHECK(batch.inner[r][0].pts[p].y ==
            doctest::Approx(sum.inner[r][0].pts[p].y).epsilon(1e-10));
    }
}

TEST_CASE("backward shape validation") {
  const Network net = Network::random(2, 1, 4, 2);
  const ForwardTrace t = net.forward(vec({0.1, 0.2}));
  CHECK_THROWS_AS(net.backward({t}, {1.0, 2.0}), ShapeMismatch);
  const Network other = Network::random(3, 1, 4, 2);
  const ForwardTrace wrong = other.forward(vec({0.1, 0.2, 0.3}));
  CHECK_THROWS_AS(net.backward({wrong}, {1.0}), ShapeMismatch);
}

TEST_CASE("a gradient step reduces the loss") {
  Network net = Network::random(2, 1, 4, 31);
  const Eigen::VectorXd x = vec({0.5, -0.5});
  const double target = 1.0;
  const double before = net_loss(net, x, target);
  const ForwardTrace t = net.forward(x);
  const GradientSet g = net.backward({t}, {loss_grad(t.output, 1)});
  net.apply_update(g, 1e-4, 1e-4);
  CHECK(net_loss(net, x, target) < before);
}

TEST_CASE("apply_update moves only coordinates with nonzero gradient") {
  Network net = Network::random(2, 0, 4, 41);
  GradientSet g = net.zero_gradients();
  g.inner[0][1].pts[2].y = 1.0;
  const Network before = net;
  net.apply_update(g, 0.1, 0.1);
  CHECK(net.units()[0].inner[1].points().ys[2] ==
        doctest::Approx(before.units()[0].inner[1].points().ys[2] - 0.1));
  CHECK(net.units()[0].inner[1].points().xs ==
        before.units()[0].inner[1].points().xs);
  CHECK(net.units()[0].inner[0].points().ys ==
        before.units()[0].inner[0].points().ys);
  CHECK(net.units()[0].outer.points().ys == before.units()[0].outer.points().ys);
}

TEST_CASE("apply_update validates gradient shapes") {
  Network net = Network::random(2, 1, 4, 51);
  GradientSet g = net.zero_gradients();
  g.outer.pop_back();
  CHECK_THROWS_AS(net.apply_update(g, 0.1, 0.1), ShapeMismatch);
  g = net.zero_gradients();
  g.inner[0][0].pts.pop_back();
  CHECK_THROWS_AS(net.apply_update(g, 0.1, 0.1), ShapeMismatch);
}

TEST_CASE("one identical training step from identical seeds is reproducible") {
  auto run_step = [] {
    Network net = Network::random(3, 1, 5, 60);
    std::vector<ForwardTrace> traces;
    std::vector<double> dl;
    for (double base : {-0.5, 0.0, 0.5}) {
      traces.push_back(net.forward(vec({base, base + 0.1, base - 0.1})));
      dl.push_back(loss_grad(traces.back().output, 1));
    }
    net.apply_update(net.backward(traces, dl), 1e-2, 1e-3);
    return net.forward(vec({0.1, 0.2, 0.3})).output;
  };
  CHECK(run_step() == run_step());
}
