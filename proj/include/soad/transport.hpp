#ifndef SOAD_TRANSPORT_HPP
#define SOAD_TRANSPORT_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "soad/common.hpp"
#include "soad/model.hpp"

namespace soad {

// Ground cost between two states. OFF mass cannot relocate without standing
// up: OFF(u)->ON(v) pays beta(u) + d(u,v), OFF(u)->OFF(v) pays both betas.
inline double ground_cost(const MetricSpace& m, int s1, int s2,
                          const DistMatrix* dist_override = nullptr) {
  if (s1 == s2) return 0.0;
  const DistMatrix& d = dist_override ? *dist_override : m.dist;
  int u = point_of(s1), v = point_of(s2);
  double spatial = (u == v) ? 0.0 : d[u][v];
  double sw = 0.0;
  if (!is_on_state(s1)) sw += m.switch_beta[u];
  if (!is_on_state(s2)) sw += m.switch_beta[v];
  return spatial + sw;
}

struct TransportPlan {
  double cost = 0.0;
  std::vector<std::vector<double>> plan;  // plan[i][j], row marginals = a
};

// Exact minimum-cost transport between nonnegative vectors a and b with
// equal totals, by successive shortest augmenting paths on the bipartite
// residual graph. Sizes here are tiny (tens of nodes), so Bellman-Ford per
// augmentation is plenty.
inline TransportPlan min_cost_transport(const std::vector<double>& a,
                                        const std::vector<double>& b,
                                        const std::vector<std::vector<double>>& C) {
  int m = (int)a.size(), k = (int)b.size();
  TransportPlan out;
  out.plan.assign(m, std::vector<double>(k, 0.0));
  std::vector<double> rem_a = a, rem_b = b;
  double total = 0.0;
  for (double x : a) total += x;

  double pushed = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  while (total - pushed > kFeasTol) {
    // Nodes: 0 = source, 1..m = rows, m+1..m+k = cols, m+k+1 = sink.
    int N = m + k + 2, snk = m + k + 1;
    std::vector<double> dist(N, inf);
    std::vector<int> prev(N, -1);
    dist[0] = 0.0;
    for (int it = 0; it < N; ++it) {
      bool changed = false;
      for (int i = 0; i < m; ++i) {
        if (rem_a[i] > kFeasTol && dist[0] < dist[1 + i]) {
          dist[1 + i] = dist[0];
          prev[1 + i] = 0;
          changed = true;
        }
        for (int j = 0; j < k; ++j) {
          if (dist[1 + i] + C[i][j] < dist[1 + m + j] - 1e-15) {
            dist[1 + m + j] = dist[1 + i] + C[i][j];
            prev[1 + m + j] = 1 + i;
            changed = true;
          }
          if (out.plan[i][j] > kFeasTol &&
              dist[1 + m + j] - C[i][j] < dist[1 + i] - 1e-15) {
            dist[1 + i] = dist[1 + m + j] - C[i][j];
            prev[1 + i] = 1 + m + j;
            changed = true;
          }
        }
      }
      for (int j = 0; j < k; ++j)
        if (rem_b[j] > kFeasTol && dist[1 + m + j] < dist[snk]) {
          dist[snk] = dist[1 + m + j];
          prev[snk] = 1 + m + j;
          changed = true;
        }
      if (!changed) break;
    }
    if (prev[snk] == -1) break;  // numerically exhausted

    // Bottleneck along the path.
    double aug = total - pushed;
    for (int v = snk; v != 0;) {
      int p = prev[v];
      if (v == snk)
        aug = std::min(aug, rem_b[p - 1 - m]);
      else if (p == 0)
        aug = std::min(aug, rem_a[v - 1]);
      else if (p > m)  // reverse arc col -> row
        aug = std::min(aug, out.plan[v - 1][p - 1 - m]);
      v = p;
    }
    for (int v = snk; v != 0;) {
      int p = prev[v];
      if (v == snk)
        rem_b[p - 1 - m] -= aug;
      else if (p == 0)
        rem_a[v - 1] -= aug;
      else if (p <= m)
        out.plan[p - 1][v - 1 - m] += aug;  // forward arc row -> col
      else
        out.plan[v - 1][p - 1 - m] -= aug;  // reverse arc
      v = p;
    }
    pushed += aug;
  }
  out.cost = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < k; ++j) out.cost += out.plan[i][j] * C[i][j];
  return out;
}

// Exact Wasserstein-1 between state distributions under the ground cost,
// including the optimal plan.
inline TransportPlan wasserstein1(const MetricSpace& m, const StateDistribution& p,
                                  const StateDistribution& q,
                                  const DistMatrix* dist_override = nullptr) {
  int S = m.num_states();
  std::vector<std::vector<double>> C(S, std::vector<double>(S, 0.0));
  for (int i = 0; i < S; ++i)
    for (int j = 0; j < S; ++j) C[i][j] = ground_cost(m, i, j, dist_override);
  return min_cost_transport(p, q, C);
}

// Spatial marginal: r(u) = p[ON(u)] + p[OFF(u)].
inline std::vector<double> spatial_marginal(const StateDistribution& p) {
  std::vector<double> r(p.size() / 2, 0.0);
  for (int u = 0; u < (int)r.size(); ++u) r[u] = p[on_state(u)] + p[off_state(u)];
  return r;
}

// Optimal spatial transport between the surpluses of two spatial marginals.
inline TransportPlan spatial_transport(const std::vector<double>& rp,
                                       const std::vector<double>& rq,
                                       const DistMatrix& d) {
  int n = (int)rp.size();
  std::vector<double> a(n, 0.0), b(n, 0.0);
  for (int u = 0; u < n; ++u) {
    double diff = rp[u] - rq[u];
    if (diff > 0)
      a[u] = diff;
    else
      b[u] = -diff;
  }
  return min_cost_transport(a, b, d);
}

// Fast Wasserstein-1 via the spatial/temporal split:
//   W1(p, q) = W1_spatial(r_p, r_q) + sum_u beta(u) |p[OFF(u)] - q[OFF(u)]|.
inline double wasserstein1_cost(const MetricSpace& m, const StateDistribution& p,
                                const StateDistribution& q,
                                const DistMatrix* dist_override = nullptr) {
  const DistMatrix& d = dist_override ? *dist_override : m.dist;
  double c = spatial_transport(spatial_marginal(p), spatial_marginal(q), d).cost;
  for (int u = 0; u < m.n; ++u)
    c += m.switch_beta[u] * std::abs(p[off_state(u)] - q[off_state(u)]);
  return c;
}

// Distance-capped variant used by the time-varying consistency constraint:
// spatial distances are replaced by dbar(u,v) = D * min(c(u), c(v)).
inline double wbar1(const MetricSpace& m, double D, const StateDistribution& p,
                    const StateDistribution& q) {
  DistMatrix dbar(m.n, std::vector<double>(m.n, 0.0));
  for (int u = 0; u < m.n; ++u)
    for (int v = 0; v < m.n; ++v)
      if (u != v) dbar[u][v] = D * std::min(m.throughput[u], m.throughput[v]);
  return wasserstein1_cost(m, p, q, &dbar);
}

// Expected cost breakdown of a decision sequence, including the implicit
// terminal switch to OFF after slot T.
inline RunResult expected_run_cost(const Instance& inst,
                                   const std::vector<StateDistribution>& decisions,
                                   const std::string& name = "") {
  RunResult r;
  r.algorithm = name;
  r.decisions = decisions;
  const MetricSpace& m = inst.metric;
  StateDistribution prev = dirac(m.num_states(), off_state(inst.start));
  double z = 0.0;
  for (int t = 1; t <= (int)decisions.size(); ++t) {
    const StateDistribution& p = decisions[t - 1];
    r.service += service_cost(inst.costs[t - 1], p);
    const DistMatrix& d = inst.dist_at(t);
    r.movement_spatial += spatial_transport(spatial_marginal(prev), spatial_marginal(p), d).cost;
    for (int u = 0; u < m.n; ++u)
      r.movement_temporal += m.switch_beta[u] * std::abs(p[off_state(u)] - prev[off_state(u)]);
    z += constraint_value(m, p);
    r.utilization.push_back(z);
    prev = p;
  }
  // Terminal: all remaining ON mass switches OFF in place.
  for (int u = 0; u < m.n; ++u) r.movement_temporal += m.switch_beta[u] * prev[on_state(u)];
  r.objective = r.service + r.movement_spatial + r.movement_temporal;
  r.feasible = z >= 1.0 - kFeasTol;
  return r;
}

struct SampledSchedule {
  std::vector<int> location;      // u_t per slot
  std::vector<double> on_fraction;  // allocation intensity at u_t
  double realized_cost = 0.0;
};

// Draws a single executable schedule coupled to the fractional decisions:
// locations follow the conditional law of the optimal spatial plan between
// consecutive marginals, the ON fraction at the sampled point is
// p[ON(u)] / r(u). Service and spatial movement are sampled; switching is
// charged on the aggregate OFF-mass handover (deterministic given the
// decisions), which is what makes the estimator unbiased for
// expected_run_cost's objective.
inline SampledSchedule sample_coupled_schedule(const Instance& inst,
                                               const std::vector<StateDistribution>& decisions,
                                               Rng& rng) {
  const MetricSpace& m = inst.metric;
  SampledSchedule out;
  StateDistribution prev = dirac(m.num_states(), off_state(inst.start));
  int u_prev = inst.start;
  for (int t = 1; t <= (int)decisions.size(); ++t) {
    const StateDistribution& p = decisions[t - 1];
    std::vector<double> rp = spatial_marginal(prev), rq = spatial_marginal(p);
    const DistMatrix& d = inst.dist_at(t);

    // Conditional next location given u_prev: stay with the common mass,
    // move with the plan's outflow.
    TransportPlan tp = spatial_transport(rp, rq, d);
    std::vector<double> cond(m.n, 0.0);
    double outflow = 0.0;
    for (int v = 0; v < m.n; ++v) {
      cond[v] += tp.plan[u_prev][v];
      outflow += tp.plan[u_prev][v];
    }
    cond[u_prev] += std::max(rp[u_prev] - outflow, 0.0);  // mass that stays
    double mass = rp[u_prev] > outflow ? rp[u_prev] : outflow;
    int u_next = u_prev;  // zero-mass conditionals resolve to staying put
    if (mass > kFeasTol) {
      double x = urand(rng, 0.0, mass), acc = 0.0;
      for (int v = 0; v < m.n; ++v) {
        acc += cond[v];
        if (x <= acc) {
          u_next = v;
          break;
        }
      }
    }
    double frac = rq[u_next] > kFeasTol ? p[on_state(u_next)] / rq[u_next] : 0.0;
    out.location.push_back(u_next);
    out.on_fraction.push_back(frac);
    if (u_next != u_prev) out.realized_cost += d[u_prev][u_next];
    out.realized_cost += inst.costs[t - 1][u_next] * frac;
    for (int u = 0; u < m.n; ++u)
      out.realized_cost += m.switch_beta[u] * std::abs(p[off_state(u)] - prev[off_state(u)]);
    prev = p;
    u_prev = u_next;
  }
  for (int u = 0; u < m.n; ++u)
    out.realized_cost += m.switch_beta[u] * prev[on_state(u)];
  return out;
}

}  // namespace soad

#endif  // SOAD_TRANSPORT_HPP
