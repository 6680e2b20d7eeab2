#ifndef SOAD_NUMERICS_HPP
#define SOAD_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "soad/common.hpp"
#include "soad/embedding.hpp"
#include "soad/model.hpp"

namespace soad {

// Principal branch of the Lambert W function, Halley iteration.
// Defined for x >= -1/e.
inline double lambert_w0(double x, double tol = 1e-12) {
  if (x < -0.36787944117144233) throw std::domain_error("lambert_w0: x < -1/e");
  double w;
  if (x < 0.0) {
    // Series start near the branch point.
    double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
    w = -1.0 + p - p * p / 3.0;
  } else if (x < 3.0) {
    w = x / (1.0 + x);
  } else {
    w = std::log(x) - std::log(std::log(x));
  }
  for (int i = 0; i < 100; ++i) {
    double e = std::exp(w);
    double f = w * e - x;
    double step = f / (e * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
    w -= step;
    if (std::abs(step) <= tol * (1.0 + std::abs(w))) break;
  }
  return w;
}

// Threshold function psi(z) = c1 + c2 * exp(z / scale), with c2 < 0 so psi is
// strictly decreasing. Carries its own closed-form integral and inverse.
struct Psi {
  double c1 = 0.0, c2 = 0.0, scale = 1.0;

  double operator()(double z) const { return c1 + c2 * std::exp(z / scale); }

  double integral(double a, double b) const {
    return c1 * (b - a) + c2 * scale * (std::exp(b / scale) - std::exp(a / scale));
  }

  // z such that psi(z) = v; requires v < c1.
  double inverse(double v) const { return scale * std::log((v - c1) / c2); }
};

// Closed form via Lambert W:
//   eta = 1 / ( W( (D + L - U + 2 tau) * exp((D - U)/U) / U ) + (U - D)/U ),
// the exact root of ln((U-L-D-2tau)/(U-U/eta-D)) = 1/eta. At tau = 0 this
// coincides with solve_eta below; for tau > 0 the two differ (the tau terms
// of this equation do not reproduce the psi(1) = L + D boundary condition).
inline double eta_closed_form(double L, double U, double D, double tau) {
  double arg = (D + L - U + 2.0 * tau) * std::exp((D - U) / U) / U;
  return 1.0 / (lambert_w0(arg) + (U - D) / U);
}

// Residual of the closed form's equation ln((U-L-D-2tau)/(U-U/eta-D)) = 1/eta.
inline double eta_residual(double eta, double L, double U, double D, double tau) {
  return std::log((U - L - D - 2.0 * tau) / (U - U / eta - D)) - 1.0 / eta;
}

// Competitive parameter eta of the robust algorithm: the root of the boundary
// condition psi_eta(1) = L + D, i.e.
//   U - tau + (U/eta - U + D + tau) e^{1/eta} = L + D.
// This anchor is what the threshold design needs: it makes the buy threshold
// sweep exactly [L + D, U/eta + D] as utilization goes 1 -> 0, so the
// algorithm finishes purchasing by the time prices reach L.
inline double solve_eta(double L, double U, double D, double tau) {
  auto resid = [&](double eta) {
    return U - tau + (U / eta - U + D + tau) * std::exp(1.0 / eta) - (L + D);
  };
  // resid decreases in eta: +(U - tau - L - D) > 0 where the exp coefficient
  // vanishes, and -> -L as eta -> inf.
  double lo = std::max(1.0, U / (U - D - tau)) * (1.0 + 1e-12);
  double hi = std::max(2.0 * lo, 4.0);
  while (resid(hi) > 0.0) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (resid(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Robustness factor gamma(eps) of the advice-augmented algorithm; solves
//   gamma = eps + U/L - (gamma (U - L + D)/L) ln((U-L-D-2tau)/(U - U/gamma - D - 2tau)).
// gamma(0) = U/L; gamma decreases toward eta as eps grows.
inline double solve_gamma(double eps, double L, double U, double D, double tau,
                          double tol = 1e-12) {
  auto resid = [&](double g) {
    double num = U - L - D - 2.0 * tau;
    double den = U - U / g - D - 2.0 * tau;
    return g - eps - U / L + g * (U - L + D) / L * std::log(num / den);
  };
  double lo = U / (U - D - 2.0 * tau);
  lo = lo * (1.0 + 1e-12) + 1e-300;
  double hi = U / L;
  // Residual runs from +inf (log blow-up) down to -eps at U/L.
  if (resid(hi) > 0.0) return hi;  // eps == 0 degenerates to U/L
  for (int i = 0; i < 400; ++i) {
    double mid = 0.5 * (lo + hi);
    if (resid(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= tol * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

// psi for the robust algorithm: psi(z) = U - tau + (U/eta - U + D + tau) e^{z/eta}.
inline Psi make_psi_robust(double L, double U, double D, double tau, double* eta_out = nullptr) {
  double eta = solve_eta(L, U, D, tau);
  if (eta_out) *eta_out = eta;
  return Psi{U - tau, U / eta - U + D + tau, eta};
}

// psi for the advice-augmented algorithm:
//   psi_eps(rho) = U + D - tau + ((U+D)/gamma - U + D + tau) e^{rho/gamma}.
inline Psi make_psi_clip(double eps, double L, double U, double D, double tau,
                         double* gamma_out = nullptr) {
  double g = solve_gamma(eps, L, U, D, tau);
  if (gamma_out) *gamma_out = g;
  return Psi{U + D - tau, (U + D) / g - U + D + tau, g};
}

// --- Per-slot pseudo-cost minimization -------------------------------------
//
// minimize over k in K with cbar(k) <= budget:
//     fbar(k) + ||k - k_prev||_w - integral_{s0}^{s0 + cbar(k)} psi(u) du
//
// The decision space is parametrized through the previous distribution: one
// unit of mass sitting at state s may stay or relocate to any state s',
// paying the tree distance. Under a Lagrange multiplier lambda on the
// purchased mass the relocation choices decouple, so the minimizer for fixed
// lambda is a table lookup; the outer problem is a monotone root-find in
// lambda (first-order condition lambda = psi(s0 + y)), with the final point
// mixed from the two bracketing tables so the purchased mass lands exactly
// on the target.

struct PseudoCostResult {
  StateDistribution p;
  KVector k;
  double purchased = 0.0;  // cbar(k)
  double objective = 0.0;
};

namespace detail {

struct DestTable {
  std::vector<int> dest;
  StateDistribution p;
  double y = 0.0;
};

inline DestTable dest_for_lambda(const MetricSpace& m,
                                 const std::vector<double>& slot_costs,
                                 const std::vector<std::vector<double>>& sdist,
                                 const StateDistribution& p_prev, double lambda) {
  int S = m.num_states();
  DestTable out;
  out.dest.assign(S, -1);
  out.p.assign(S, 0.0);
  for (int s = 0; s < S; ++s) {
    if (p_prev[s] <= 0.0) continue;
    int best = -1;
    double bestc = std::numeric_limits<double>::infinity();
    for (int t = 0; t < S; ++t) {
      double c = sdist[s][t];
      if (is_on_state(t))
        c += slot_costs[point_of(t)] - lambda * m.throughput[point_of(t)];
      if (c < bestc - 1e-15) {
        bestc = c;
        best = t;
      }
    }
    out.dest[s] = best;
    out.p[best] += p_prev[s];
    if (is_on_state(best)) out.y += p_prev[s] * m.throughput[point_of(best)];
  }
  return out;
}

}  // namespace detail

inline double pseudo_cost_objective(const MetricSpace& m,
                                    const std::vector<double>& slot_costs,
                                    const TreeEmbedding& emb, const KVector& k_prev,
                                    const Psi& psi, double s0, const KVector& k) {
  StateDistribution p = phi_inverse(emb, k);
  double y = constraint_value(m, p);
  return service_cost(slot_costs, p) + k_norm(emb, k, k_prev) - psi.integral(s0, s0 + y);
}

inline PseudoCostResult pseudo_cost_minimize(
    const MetricSpace& m, const std::vector<double>& slot_costs,
    const TreeEmbedding& emb, const std::vector<std::vector<double>>& sdist,
    const StateDistribution& p_prev, const Psi& psi, double s0, double budget) {
  budget = std::max(budget, 0.0);
  double maxd = 0.0, maxf = 0.0;
  for (const auto& row : sdist) maxd = std::max(maxd, *std::max_element(row.begin(), row.end()));
  for (double f : slot_costs) maxf = std::max(maxf, f);
  double cmin = *std::min_element(m.throughput.begin(), m.throughput.end());
  double lam_min = -(maxd + maxf + 1.0) / cmin;
  double lam_max = psi(s0) + 1.0;

  auto target = [&](double lam) {
    double yt;
    if (lam >= psi.c1)
      yt = 0.0;  // above psi's range: buy nothing
    else
      yt = psi.inverse(lam) - s0;
    return std::clamp(yt, 0.0, budget);
  };

  auto finish = [&](const StateDistribution& p) {
    PseudoCostResult r;
    r.p = p;
    r.k = phi(emb, p);
    r.purchased = constraint_value(m, p);
    KVector k_prev = phi(emb, p_prev);
    r.objective = service_cost(slot_costs, p) + k_norm(emb, r.k, k_prev) -
                  psi.integral(s0, s0 + r.purchased);
    return r;
  };

  if (budget <= kPropTol)
    return finish(detail::dest_for_lambda(m, slot_costs, sdist, p_prev, lam_min).p);

  double lo = lam_min, hi = lam_max;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    auto d = detail::dest_for_lambda(m, slot_costs, sdist, p_prev, mid);
    if (d.y >= target(mid))
      hi = mid;
    else
      lo = mid;
  }
  auto dlo = detail::dest_for_lambda(m, slot_costs, sdist, p_prev, lo);
  auto dhi = detail::dest_for_lambda(m, slot_costs, sdist, p_prev, hi);
  double ystar = target(0.5 * (lo + hi));
  double theta = 1.0;
  if (dhi.y > dlo.y + 1e-15) theta = std::clamp((ystar - dlo.y) / (dhi.y - dlo.y), 0.0, 1.0);
  StateDistribution p(m.num_states(), 0.0);
  for (int s = 0; s < m.num_states(); ++s) p[s] = (1.0 - theta) * dlo.p[s] + theta * dhi.p[s];
  if (constraint_value(m, p) <= budget + kPropTol) return finish(p);

  // The table can jump across the budget at a single lambda (the psi target
  // is already zero there, so the first bisection never sees the cap). Redo
  // the root-find against the budget itself and mix onto it exactly.
  lo = lam_min;
  hi = lam_max;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    auto d = detail::dest_for_lambda(m, slot_costs, sdist, p_prev, mid);
    if (d.y >= budget)
      hi = mid;
    else
      lo = mid;
  }
  dlo = detail::dest_for_lambda(m, slot_costs, sdist, p_prev, lo);
  dhi = detail::dest_for_lambda(m, slot_costs, sdist, p_prev, hi);
  theta = 1.0;
  if (dhi.y > dlo.y + 1e-15) theta = std::clamp((budget - dlo.y) / (dhi.y - dlo.y), 0.0, 1.0);
  for (int s = 0; s < m.num_states(); ++s) p[s] = (1.0 - theta) * dlo.p[s] + theta * dhi.p[s];
  return finish(p);
}

}  // namespace soad

#endif  // SOAD_NUMERICS_HPP
