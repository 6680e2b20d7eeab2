#ifndef SOAD_MODEL_HPP
#define SOAD_MODEL_HPP

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "soad/common.hpp"

namespace soad {

// State space: each point u has an ON state and an OFF state.
// Convention: ON(u) = 2u, OFF(u) = 2u+1.
inline int on_state(int u) { return 2 * u; }
inline int off_state(int u) { return 2 * u + 1; }
inline bool is_on_state(int s) { return (s % 2) == 0; }
inline int point_of(int s) { return s / 2; }

// Probability distribution over the 2n states.
using StateDistribution = std::vector<double>;

using DistMatrix = std::vector<std::vector<double>>;

struct MetricSpace {
  int n = 0;
  DistMatrix dist;                  // pairwise point distances d(u,v)
  std::vector<double> throughput;   // c(u), per-slot constraint gain at full ON
  std::vector<double> switch_beta;  // beta(u), ON<->OFF switching weight

  int num_states() const { return 2 * n; }

  // D = max_{u != v} d(u,v) / min(c(u), c(v)); 0 for n == 1.
  double norm_diameter() const {
    double D = 0.0;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        D = std::max(D, dist[u][v] / std::min(throughput[u], throughput[v]));
    return D;
  }

  // tau = max_u beta(u) / c(u).
  double tau() const {
    double t = 0.0;
    for (int u = 0; u < n; ++u) t = std::max(t, switch_beta[u] / throughput[u]);
    return t;
  }
};

struct Instance {
  MetricSpace metric;
  int T = 0;
  double L = 0.0, U = 0.0;
  int start = 0;
  // costs[t][u] (t in 0..T-1): service cost coefficient for full ON at point u.
  std::vector<std::vector<double>> costs;
  // Optional time-varying distances, one matrix per slot (SOAD-T).
  std::optional<std::vector<DistMatrix>> tv_dist;

  // Distance matrix in effect at slot t (1-based); falls back to the base metric.
  const DistMatrix& dist_at(int t) const {
    if (tv_dist && t >= 1 && t <= (int)tv_dist->size()) return (*tv_dist)[t - 1];
    return metric.dist;
  }

  // D for SOAD-T is the sup over slots of the normalized distance.
  double norm_diameter() const {
    double D = metric.norm_diameter();
    if (tv_dist) {
      for (const auto& d : *tv_dist)
        for (int u = 0; u < metric.n; ++u)
          for (int v = u + 1; v < metric.n; ++v)
            D = std::max(D, d[u][v] / std::min(metric.throughput[u],
                                               metric.throughput[v]));
    }
    return D;
  }
};

// Expected service cost of a decision: sum_u costs[u] * p[ON(u)].
inline double service_cost(const std::vector<double>& slot_costs,
                           const StateDistribution& p) {
  double s = 0.0;
  for (int u = 0; u < (int)slot_costs.size(); ++u) s += slot_costs[u] * p[on_state(u)];
  return s;
}

// Expected constraint gain of a decision: sum_u c(u) * p[ON(u)].
inline double constraint_value(const MetricSpace& m, const StateDistribution& p) {
  double s = 0.0;
  for (int u = 0; u < m.n; ++u) s += m.throughput[u] * p[on_state(u)];
  return s;
}

// Deadline pressure test: true when the remaining slots after the current one
// cannot finish the job at any single point, i.e. (T-(t+1)) * c(u) < 1-z for all u.
inline bool mandatory_allocation_triggered(const Instance& inst, int t, double z) {
  double rem = 1.0 - z;
  if (rem <= kFeasTol) return false;
  for (int u = 0; u < inst.metric.n; ++u)
    if ((double)(inst.T - (t + 1)) * inst.metric.throughput[u] >= rem) return false;
  return true;
}

inline bool is_distribution(const StateDistribution& p, double tol = kFeasTol) {
  double s = 0.0;
  for (double x : p) {
    if (x < -tol) return false;
    s += x;
  }
  return std::abs(s - 1.0) <= tol;
}

// Dirac distribution on a single state.
inline StateDistribution dirac(int num_states, int s) {
  StateDistribution p(num_states, 0.0);
  p[s] = 1.0;
  return p;
}

namespace detail {
inline bool metric_ok(const DistMatrix& d, int n, std::vector<std::string>& out,
                      const char* label) {
  std::ostringstream os;
  for (int u = 0; u < n; ++u) {
    if ((int)d[u].size() != n) {
      os << label << ": row " << u << " has wrong length";
      out.push_back(os.str());
      return false;
    }
    if (std::abs(d[u][u]) > kPropTol) out.push_back(std::string(label) + ": nonzero diagonal");
  }
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (d[u][v] < -kPropTol) out.push_back(std::string(label) + ": negative distance");
      if (std::abs(d[u][v] - d[v][u]) > kFeasTol)
        out.push_back(std::string(label) + ": asymmetric");
      for (int w = 0; w < n; ++w)
        if (d[u][v] > d[u][w] + d[w][v] + kFeasTol) {
          std::ostringstream t;
          t << label << ": triangle inequality violated at (" << u << "," << v << "," << w << ")";
          out.push_back(t.str());
          return false;
        }
    }
  return true;
}
}  // namespace detail

// Returns a list of violations; empty means the instance is well-formed.
inline std::vector<std::string> validate(const Instance& inst) {
  std::vector<std::string> out;
  const MetricSpace& m = inst.metric;
  if (m.n <= 0) {
    out.push_back("metric: n must be positive");
    return out;
  }
  if ((int)m.dist.size() != m.n || (int)m.throughput.size() != m.n ||
      (int)m.switch_beta.size() != m.n) {
    out.push_back("metric: dimension mismatch");
    return out;
  }
  detail::metric_ok(m.dist, m.n, out, "dist");
  for (int u = 0; u < m.n; ++u) {
    if (!(m.throughput[u] > 0.0) || m.throughput[u] > 1.0 + kFeasTol)
      out.push_back("throughput out of (0,1]");
    if (m.switch_beta[u] < 0.0) out.push_back("negative switch_beta");
  }
  if (inst.T <= 0) out.push_back("T must be positive");
  if (!(inst.L > 0.0) || !(inst.U >= inst.L)) out.push_back("require 0 < L <= U");
  if (inst.start < 0 || inst.start >= m.n) out.push_back("start point out of range");
  if ((int)inst.costs.size() != inst.T) out.push_back("costs: wrong number of slots");
  for (int t = 0; t < (int)inst.costs.size(); ++t) {
    if ((int)inst.costs[t].size() != m.n) {
      out.push_back("costs: wrong row length");
      break;
    }
    for (int u = 0; u < m.n; ++u) {
      double f = inst.costs[t][u];
      if (f < m.throughput[u] * inst.L - kFeasTol ||
          f > m.throughput[u] * inst.U + kFeasTol) {
        std::ostringstream os;
        os << "costs[" << t << "][" << u << "] outside [cL, cU]";
        out.push_back(os.str());
      }
    }
  }
  // Assumption on the metric scale: D + 2*tau <= U - L.
  double D = inst.norm_diameter();
  double tau = m.tau();
  if (D + 2.0 * tau > inst.U - inst.L + kFeasTol)
    out.push_back("metric too large: D + 2*tau > U - L");
  if (inst.tv_dist) {
    if ((int)inst.tv_dist->size() != inst.T) out.push_back("tv_dist: wrong number of slices");
    for (const auto& d : *inst.tv_dist)
      if (!detail::metric_ok(d, m.n, out, "tv_dist")) break;
  }
  // The job must be finishable at all.
  double cmax = *std::max_element(m.throughput.begin(), m.throughput.end());
  if ((double)inst.T * cmax < 1.0 - kFeasTol) out.push_back("infeasible: T * max c < 1");
  return out;
}

// One algorithm run: the decision sequence plus its cost breakdown.
struct RunResult {
  std::string algorithm;
  std::vector<StateDistribution> decisions;  // p_1 .. p_T
  std::vector<double> utilization;           // z after each slot
  double service = 0.0;
  double movement_spatial = 0.0;
  double movement_temporal = 0.0;  // includes the terminal OFF switch
  double objective = 0.0;
  bool feasible = false;
  std::uint64_t seed = 0;
};

}  // namespace soad

#endif  // SOAD_MODEL_HPP
