#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "soad/harness.hpp"
#include "soad/transport.hpp"
#include "support/lp.hpp"

using namespace soad;

namespace {

StateDistribution random_dist(Rng& rng, int S) {
  StateDistribution p(S);
  double s = 0.0;
  for (double& x : p) {
    x = urand(rng);
    s += x;
  }
  for (double& x : p) x /= s;
  return p;
}

MetricSpace two_point_metric() {
  MetricSpace m;
  m.n = 2;
  m.dist = {{0.0, 0.5}, {0.5, 0.0}};
  m.throughput = {0.5, 0.25};
  m.switch_beta = {0.25, 0.125};
  return m;
}

}  // namespace

TEST_CASE("ground cost table") {
  MetricSpace m = two_point_metric();
  CHECK(ground_cost(m, on_state(0), on_state(1)) == doctest::Approx(0.5));
  CHECK(ground_cost(m, on_state(0), off_state(0)) == doctest::Approx(0.25));
  CHECK(ground_cost(m, off_state(0), on_state(1)) == doctest::Approx(0.75));
  CHECK(ground_cost(m, off_state(0), off_state(1)) == doctest::Approx(0.875));
  CHECK(ground_cost(m, on_state(1), on_state(1)) == doctest::Approx(0.0));
  // Symmetry.
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      CHECK(ground_cost(m, a, b) == doctest::Approx(ground_cost(m, b, a)));
}

TEST_CASE("wasserstein1 agrees with the brute-force LP on the transport polytope") {
  Rng rng(17);
  for (int rep = 0; rep < 60; ++rep) {
    Instance inst = random_instance(rng, 3);
    const MetricSpace& m = inst.metric;
    StateDistribution p = random_dist(rng, m.num_states());
    StateDistribution q = random_dist(rng, m.num_states());
    auto tp = wasserstein1(m, p, q);
    int S = m.num_states();
    std::vector<std::vector<double>> C(S, std::vector<double>(S));
    for (int i = 0; i < S; ++i)
      for (int j = 0; j < S; ++j) C[i][j] = ground_cost(m, i, j);
    double lp = soad_tests::lp_transport(p, q, C);
    CHECK(tp.cost == doctest::Approx(lp).epsilon(1e-7));
    // Plan marginals match.
    for (int i = 0; i < S; ++i) {
      double row = 0.0, col = 0.0;
      for (int j = 0; j < S; ++j) {
        row += tp.plan[i][j];
        col += tp.plan[j][i];
      }
      CHECK(row == doctest::Approx(p[i]).epsilon(1e-8));
      CHECK(col == doctest::Approx(q[i]).epsilon(1e-8));
    }
  }
}

TEST_CASE("split formula equals the full flow solve") {
  Rng rng(29);
  for (int rep = 0; rep < 80; ++rep) {
    Instance inst = random_instance(rng, 6);
    const MetricSpace& m = inst.metric;
    StateDistribution p = random_dist(rng, m.num_states());
    StateDistribution q = random_dist(rng, m.num_states());
    CHECK(wasserstein1_cost(m, p, q) ==
          doctest::Approx(wasserstein1(m, p, q).cost).epsilon(1e-8));
  }
}

TEST_CASE("hand-checked wasserstein examples") {
  MetricSpace m = two_point_metric();
  StateDistribution a(4, 0.0), b(4, 0.0);
  a[off_state(0)] = 1.0;
  b[on_state(0)] = 1.0;
  CHECK(wasserstein1_cost(m, a, b) == doctest::Approx(0.25));  // switch on in place
  b = StateDistribution(4, 0.0);
  b[on_state(1)] = 1.0;
  CHECK(wasserstein1_cost(m, a, b) == doctest::Approx(0.25 + 0.5));  // on at 0, move
  b = StateDistribution(4, 0.0);
  b[off_state(1)] = 1.0;
  CHECK(wasserstein1_cost(m, a, b) == doctest::Approx(0.875));
  // Identity.
  CHECK(wasserstein1_cost(m, a, a) == doctest::Approx(0.0));
}

TEST_CASE("wbar1 caps spatial distances at D*min(c,c)") {
  MetricSpace m = two_point_metric();
  double D = m.norm_diameter();  // 2.0
  StateDistribution a(4, 0.0), b(4, 0.0);
  a[on_state(0)] = 1.0;
  b[on_state(1)] = 1.0;
  // dbar(0,1) = D * min(c0,c1) = 2 * 0.25 = 0.5, same as d here.
  CHECK(wbar1(m, D, a, b) == doctest::Approx(0.5));
  // With a doubled D the capped distance doubles.
  CHECK(wbar1(m, 2 * D, a, b) == doctest::Approx(1.0));
}

TEST_CASE("expected_run_cost accounts service, movement, terminal switch") {
  Instance inst;
  inst.metric = two_point_metric();
  inst.T = 2;
  inst.L = 1.0;
  inst.U = 10.0;
  inst.start = 0;
  inst.costs = {{2.0, 1.0}, {3.0, 0.5}};
  // Slot 1: all mass ON at point 0. Slot 2: all ON at point 1.
  std::vector<StateDistribution> dec = {{1, 0, 0, 0}, {0, 0, 1, 0}};
  RunResult r = expected_run_cost(inst, dec, "x");
  CHECK(r.service == doctest::Approx(2.0 + 0.5));
  CHECK(r.movement_spatial == doctest::Approx(0.5));
  // beta: switch on at 0 (0.25), spatial move keeps ON, terminal off at 1 (0.125).
  CHECK(r.movement_temporal == doctest::Approx(0.25 + 0.125));
  CHECK(r.utilization.back() == doctest::Approx(0.75));
  CHECK_FALSE(r.feasible);
  CHECK(r.objective == doctest::Approx(r.service + r.movement_spatial + r.movement_temporal));
}

TEST_CASE("utilization is monotone and matches constraint values") {
  Rng rng(43);
  for (int rep = 0; rep < 20; ++rep) {
    Instance inst = random_instance(rng, 5);
    std::vector<StateDistribution> dec;
    for (int t = 0; t < inst.T; ++t) dec.push_back(random_dist(rng, inst.metric.num_states()));
    RunResult r = expected_run_cost(inst, dec, "x");
    double z = 0.0;
    for (int t = 0; t < inst.T; ++t) {
      z += constraint_value(inst.metric, dec[t]);
      CHECK(r.utilization[t] == doctest::Approx(z).epsilon(1e-10));
    }
  }
}

TEST_CASE("coupled schedule sampling is unbiased for the expected objective") {
  Rng rng(59);
  Instance inst = random_instance(rng, 4, 8);
  std::vector<StateDistribution> dec;
  Rng drng(60);
  for (int t = 0; t < inst.T; ++t) dec.push_back(random_dist(drng, inst.metric.num_states()));
  RunResult expect = expected_run_cost(inst, dec, "x");

  int N = 20000;
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < N; ++i) {
    auto s = sample_coupled_schedule(inst, dec, rng);
    acc += s.realized_cost;
    acc2 += s.realized_cost * s.realized_cost;
  }
  double mean = acc / N;
  double var = std::max(acc2 / N - mean * mean, 0.0);
  double sigma = std::sqrt(var / N);
  CHECK(std::abs(mean - expect.objective) <= 3.0 * sigma + 1e-9);
}

TEST_CASE("sampled schedules follow the decisions' support") {
  Rng rng(67);
  Instance inst = random_instance(rng, 3, 6);
  std::vector<StateDistribution> dec;
  for (int t = 0; t < inst.T; ++t) {
    // Deterministic single-point decisions: the sample must follow them.
    StateDistribution p(inst.metric.num_states(), 0.0);
    int u = t % inst.metric.n;
    p[on_state(u)] = 0.6;
    p[off_state(u)] = 0.4;
    dec.push_back(p);
  }
  auto s = sample_coupled_schedule(inst, dec, rng);
  for (int t = 0; t < inst.T; ++t) {
    CHECK(s.location[t] == t % inst.metric.n);
    CHECK(s.on_fraction[t] == doctest::Approx(0.6));
  }
}
