#ifndef SOAD_ADVERSARY_HPP
#define SOAD_ADVERSARY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "soad/algorithms.hpp"
#include "soad/common.hpp"
#include "soad/model.hpp"
#include "soad/offline.hpp"

namespace soad {

// Uniform star: every pair of points at distance D*c, uniform throughput c,
// switching weight tau*c.
inline MetricSpace make_star_metric(int n, double c, double D, double tau) {
  MetricSpace m;
  m.n = n;
  m.dist.assign(n, std::vector<double>(n, D * c));
  for (int u = 0; u < n; ++u) m.dist[u][u] = 0.0;
  m.throughput.assign(n, c);
  m.switch_beta.assign(n, tau * c);
  return m;
}

struct AdversaryParams {
  char family = 'A';  // 'G', 'A', or 'P' (the modified two-stage family)
  double y = 1.0;     // terminal good price, in [L, U]
  int n = 5;
  int m = 50;  // price levels between U and L
  double L = 1.0, U = 10.0;
  // Default star has no temporal switching cost: the eta threshold algebra
  // is exactly tight only at tau = 0, which is what the competitive-bound
  // sweeps need; tau > 0 stars are exercised separately.
  double D = 2.0, tau = 0.0;
  double c = 0.05;  // uniform throughput; one full job takes mu = 1/c slots
  int start = 0;

  int mu() const { return (int)std::llround(1.0 / c); }
  double sigma() const { return (U - L) / m; }
  // Number of descending levels needed to reach y.
  int levels() const {
    int k = (int)std::llround((U - y) / sigma());
    return std::clamp(k, 1, m);
  }
  int horizon() const {
    int s1 = levels() * mu() + 1;
    if (family == 'G') return s1;
    if (family == 'A') return s1 + (2 * levels() - 1) + (mu() - 1) + mu();
    return s1 + 1 + mu() + mu();  // 'P'
  }
};

// Shell instance with every slot priced at U; the generator overwrites slots
// one at a time while probing the algorithm.
inline Instance adversary_shell(const AdversaryParams& ap) {
  Instance inst;
  inst.metric = make_star_metric(ap.n, ap.c, ap.D, ap.tau);
  inst.T = ap.horizon();
  inst.L = ap.L;
  inst.U = ap.U;
  inst.start = ap.start;
  inst.costs.assign(inst.T, std::vector<double>(ap.n, ap.c * ap.U));
  return inst;
}

// Adaptive two-stage price sequence. Stage 1 walks prices down from U to y
// in sigma steps; each level is offered mu times, always at a single live
// non-start point that hops between slots, and any point the algorithm ever
// touches (expected ON mass above 1e-12) goes dark for the rest of the run.
// Stage 2 depends on the family:
//   'G' : none (stage 1 only, closed by one all-U slot)
//   'A' : alternate Down^i / U at the start point down to y, then y for mu-1
//         more slots, then U everywhere for the last mu slots
//   'P' : one all-U slot, then y at the start point for mu slots, then U
//         everywhere for the last mu slots
// The probe is called once per slot with the freshly revealed prices; the
// realized prices are frozen into the shell instance.
inline void realize_y_adversary(
    Instance& inst, const AdversaryParams& ap,
    const std::function<StateDistribution(int, const std::vector<double>&)>& probe) {
  int n = ap.n, mu = ap.mu(), my = ap.levels();
  double sig = ap.sigma();
  std::vector<char> touched(n, 0);
  int last_good = -1;
  int t = 0;

  auto price_up = [&](std::vector<double>& row) {
    std::fill(row.begin(), row.end(), ap.c * ap.U);
  };
  auto reveal = [&](const std::vector<double>& row) {
    inst.costs[t] = row;
    StateDistribution p = probe(t + 1, row);
    for (int u = 0; u < n; ++u)
      if (u != ap.start && p[on_state(u)] > 1e-12) touched[u] = 1;
    ++t;
  };

  // Stage 1.
  for (int lvl = 1; lvl <= my; ++lvl) {
    double price = ap.c * (ap.U - lvl * sig);
    for (int rep = 0; rep < mu; ++rep) {
      std::vector<double> row(n, ap.c * ap.U);
      // Pick the next untouched non-start point, hopping between slots.
      int good = -1;
      for (int step = 1; step <= n && good == -1; ++step) {
        int cand = (std::max(last_good, 0) + step) % n;
        if (cand == ap.start || touched[cand] || cand == last_good) continue;
        good = cand;
      }
      if (good == -1 && last_good != -1 && !touched[last_good] && last_good != ap.start)
        good = last_good;  // only one live point left: keep using it
      if (good != -1) {
        row[good] = price;
        last_good = good;
      }
      reveal(row);
    }
  }
  {
    std::vector<double> row(n);
    price_up(row);
    reveal(row);
  }

  if (ap.family == 'A') {
    for (int lvl = 1; lvl <= my; ++lvl) {
      std::vector<double> row(n, ap.c * ap.U);
      row[ap.start] = ap.c * (ap.U - lvl * sig);
      reveal(row);
      if (lvl < my) {
        price_up(row);
        reveal(row);
      }
    }
    for (int rep = 0; rep < mu - 1; ++rep) {
      std::vector<double> row(n, ap.c * ap.U);
      row[ap.start] = ap.c * (ap.U - my * sig);
      reveal(row);
    }
    for (int rep = 0; rep < mu; ++rep) {
      std::vector<double> row(n);
      price_up(row);
      reveal(row);
    }
  } else if (ap.family == 'P') {
    std::vector<double> row(n);
    price_up(row);
    reveal(row);
    for (int rep = 0; rep < mu; ++rep) {
      std::vector<double> r2(n, ap.c * ap.U);
      r2[ap.start] = ap.c * (ap.U - my * sig);
      reveal(r2);
    }
    for (int rep = 0; rep < mu; ++rep) {
      price_up(row);
      reveal(row);
    }
  }
}

// Convenience wrapper probing with the robust algorithm.
inline Instance generate_y_adversary(const AdversaryParams& ap, std::uint64_t seed) {
  Instance inst = adversary_shell(ap);
  PcmRunner probe(inst, seed);
  realize_y_adversary(inst, ap,
                      [&](int, const std::vector<double>& row) { return probe.step(row); });
  return inst;
}

// --- Advice construction ----------------------------------------------------

inline Advice make_advice_opt(const Instance& inst) {
  return solve_offline_optimal(inst).decisions;
}

// xi = 0 reproduces the optimal advice, xi = 1 the cost-maximizing feasible
// solution; in between, a slot-wise blend.
inline Advice make_adversarial_advice(const Instance& inst, double xi) {
  Advice good = solve_offline_optimal(inst).decisions;
  Advice bad = solve_offline_worst(inst).decisions;
  Advice out(good.size());
  for (size_t t = 0; t < good.size(); ++t) {
    out[t].resize(good[t].size());
    for (size_t s = 0; s < good[t].size(); ++s)
      out[t][s] = (1.0 - xi) * good[t][s] + xi * bad[t][s];
  }
  return out;
}

// Advice that idles at the start point as long as the deadline allows, then
// completes there at the last possible moment.
inline Advice make_inactive_advice(const Instance& inst) {
  int need = (int)std::ceil(1.0 / inst.metric.throughput[inst.start] - kFeasTol);
  int start_slot = std::max(1, inst.T - need + 1);
  return detail::run_at_fixed_point(inst, inst.start, start_slot);
}

// Advice computed by solving offline on a forecast of the prices.
inline Advice make_advice_from_forecast(const Instance& inst,
                                        const std::vector<std::vector<double>>& forecast) {
  Instance f = inst;
  f.costs = forecast;
  return solve_offline_optimal(f).decisions;
}

// --- Time-varying distances -------------------------------------------------

// Adds a tv_dist sequence: slot 1 keeps the base metric, later slots have up
// to `upsilon` pairwise distances resampled downward and are then repaired to
// a metric by min-plus closure. Distances never exceed the base metric, so
// the stored D is preserved.
inline void apply_volatility(Instance& inst, int upsilon, Rng& rng) {
  int n = inst.metric.n;
  std::vector<DistMatrix> tv(inst.T, inst.metric.dist);
  for (int t = 1; t < inst.T; ++t) {
    DistMatrix d = inst.metric.dist;
    for (int k = 0; k < upsilon; ++k) {
      int u = (int)(urand(rng) * n), v = (int)(urand(rng) * n);
      u = std::min(u, n - 1);
      v = std::min(v, n - 1);
      if (u == v) continue;
      double nd = urand(rng, 0.3, 1.0) * inst.metric.dist[u][v];
      d[u][v] = d[v][u] = nd;
    }
    // Floyd-Warshall repair.
    for (int w = 0; w < n; ++w)
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
          d[u][v] = std::min(d[u][v], d[u][w] + d[w][v]);
    tv[t] = d;
  }
  inst.tv_dist = tv;
}

}  // namespace soad

#endif  // SOAD_ADVERSARY_HPP
