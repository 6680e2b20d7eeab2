#ifndef SOAD_HARNESS_HPP
#define SOAD_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "soad/adversary.hpp"
#include "soad/algorithms.hpp"
#include "soad/common.hpp"
#include "soad/model.hpp"
#include "soad/numerics.hpp"
#include "soad/offline.hpp"

namespace soad {

// Hourly carbon intensity per region.
// The convexity of the pseudo-cost objective (and the threshold solver built
// on it) needs psi to be strictly decreasing, i.e. U/eta - U + D + tau < 0.
// The model assumption D + 2*tau <= U - L alone does not force this when tau
// is large relative to the slack, so generators shrink the switching factors
// until the instance sits inside the decreasing-psi regime.
inline void enforce_decreasing_psi(Instance& inst) {
  for (int iter = 0; iter < 200; ++iter) {
    double D = inst.norm_diameter(), tau = inst.metric.tau();
    double eta = solve_eta(inst.L, inst.U, D, tau);
    if (inst.U / eta - inst.U + D + tau < -1e-9 * inst.U) return;
    for (double& b : inst.metric.switch_beta) b *= 0.7;
  }
}

struct CarbonTrace {
  std::vector<std::string> regions;
  std::vector<std::string> timestamps;           // ISO-8601 UTC, ascending
  std::vector<std::vector<double>> carbon;       // [hour][region], gCO2/kWh
};

// Long-format CSV: timestamp_utc,region,carbon_gco2_kwh. Every region must
// cover the same ascending hourly timestamps. Errors carry line numbers.
inline CarbonTrace ingest_trace(std::istream& in) {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw std::runtime_error("trace: empty file");
  ++lineno;
  // Tolerate \r\n.
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
    return s;
  };
  if (strip(line) != "timestamp_utc,region,carbon_gco2_kwh")
    throw std::runtime_error("trace line 1: bad header '" + strip(line) + "'");

  std::map<std::string, std::map<std::string, double>> by_region;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    std::string err = "trace line " + std::to_string(lineno) + ": ";
    size_t c1 = line.find(','), c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 == c1) throw std::runtime_error(err + "expected 3 fields");
    std::string ts = line.substr(0, c1), region = line.substr(c1 + 1, c2 - c1 - 1);
    double val;
    try {
      size_t used;
      val = std::stod(line.substr(c2 + 1), &used);
      if (used != line.size() - c2 - 1) throw std::invalid_argument("");
    } catch (...) {
      throw std::runtime_error(err + "bad carbon value '" + line.substr(c2 + 1) + "'");
    }
    if (val < 0.0) throw std::runtime_error(err + "negative carbon intensity");
    if (ts.size() < 20 || ts[4] != '-' || ts[10] != 'T' || ts.back() != 'Z')
      throw std::runtime_error(err + "bad timestamp '" + ts + "'");
    if (by_region[region].count(ts))
      throw std::runtime_error(err + "duplicate sample for " + region + " at " + ts);
    by_region[region][ts] = val;
  }
  if (by_region.empty()) throw std::runtime_error("trace: no data rows");

  CarbonTrace tr;
  const auto& ref = by_region.begin()->second;
  for (const auto& [ts, v] : ref) tr.timestamps.push_back(ts);
  for (const auto& [region, samples] : by_region) {
    tr.regions.push_back(region);
    if (samples.size() != ref.size())
      throw std::runtime_error("trace: region " + region + " has a different sample count");
  }
  tr.carbon.assign(tr.timestamps.size(), std::vector<double>(tr.regions.size(), 0.0));
  for (size_t r = 0; r < tr.regions.size(); ++r) {
    const auto& samples = by_region[tr.regions[r]];
    for (size_t h = 0; h < tr.timestamps.size(); ++h) {
      auto it = samples.find(tr.timestamps[h]);
      if (it == samples.end())
        throw std::runtime_error("trace: region " + tr.regions[r] + " missing " +
                                 tr.timestamps[h]);
      tr.carbon[h][r] = it->second;
    }
  }
  return tr;
}

inline std::string trace_csv(const CarbonTrace& tr) {
  std::ostringstream os;
  os << "timestamp_utc,region,carbon_gco2_kwh\n";
  os.precision(17);
  for (size_t h = 0; h < tr.timestamps.size(); ++h)
    for (size_t r = 0; r < tr.regions.size(); ++r)
      os << tr.timestamps[h] << ',' << tr.regions[r] << ',' << tr.carbon[h][r] << '\n';
  return os.str();
}

// Synthetic diurnal trace. Profiles:
//   "mixed"            - equal means, phase-shifted diurnal swings
//   "low-carbon-heavy" - a subset of regions is consistently much cleaner
inline CarbonTrace synthesize_trace(int n_regions, int hours, const std::string& profile,
                                    std::uint64_t seed) {
  CarbonTrace tr;
  Rng rng(seed);
  char buf[32];
  for (int h = 0; h < hours; ++h) {
    int day = h / 24, hr = h % 24;
    std::snprintf(buf, sizeof(buf), "2024-01-%02dT%02d:00:00Z", 1 + day, hr);
    tr.timestamps.push_back(buf);
  }
  for (int r = 0; r < n_regions; ++r) tr.regions.push_back("region-" + std::to_string(r));
  tr.carbon.assign(hours, std::vector<double>(n_regions, 0.0));
  for (int r = 0; r < n_regions; ++r) {
    double base = 300.0, amp = 150.0;
    double phase = 2.0 * M_PI * r / n_regions;
    if (profile == "low-carbon-heavy") {
      phase = urand(rng, 0.0, 2.0 * M_PI);
      if (r % 3 == 0) base = 120.0, amp = 50.0;
    }
    double jitter = urand(rng, 0.9, 1.1);
    for (int h = 0; h < hours; ++h) {
      double diurnal = std::sin(2.0 * M_PI * (h % 24) / 24.0 + phase);
      double noise = urand(rng, -20.0, 20.0);
      tr.carbon[h][r] = std::max(5.0, jitter * (base + amp * diurnal) + noise);
    }
  }
  return tr;
}

struct BuildParams {
  int arrival = 0;   // hour offset into the trace
  int T = 48;        // deadline in slots (hours)
  int J = 12;        // job length at full throughput: c(u) = 1/J
  double tau = 0.2;  // switching scale, beta(u) = tau * c(u)
  double spread = 0.5;  // spatial diameter as a fraction of (U-L-2tau)
  int start = 0;
  int trailing = 24;  // extra trailing-window hours feeding the [L,U] estimate
};

// Turns a trace window into a solver-ready instance. L and U come from the
// window plus a trailing lookback; carbon values are clamped into [L, U] and
// scaled by the throughput. Distances form a uniform-ish ring metric scaled
// so that D + 2*tau fits under U - L.
inline Instance build_instance(const CarbonTrace& tr, const BuildParams& bp) {
  int n = (int)tr.regions.size();
  if (bp.arrival + bp.T > (int)tr.timestamps.size())
    throw std::runtime_error("build_instance: window exceeds trace length");
  Instance inst;
  inst.T = bp.T;
  inst.start = bp.start;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int h = std::max(0, bp.arrival - bp.trailing); h < bp.arrival + bp.T; ++h)
    for (int r = 0; r < n; ++r) {
      lo = std::min(lo, tr.carbon[h][r]);
      hi = std::max(hi, tr.carbon[h][r]);
    }
  inst.L = lo;
  inst.U = std::max(hi, lo * (1.0 + 1e-6));

  double c = 1.0 / bp.J;
  MetricSpace& m = inst.metric;
  m.n = n;
  m.throughput.assign(n, c);
  m.switch_beta.assign(n, bp.tau * c);
  double diam = bp.spread * (inst.U - inst.L - 2.0 * bp.tau);
  diam = std::max(diam, 0.0);
  m.dist.assign(n, std::vector<double>(n, 0.0));
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v) {
        // Ring-like spread: distance grows with index separation.
        int gap = std::min(std::abs(u - v), n - std::abs(u - v));
        double frac = n > 1 ? (double)gap / (n / 2 > 0 ? n / 2 : 1) : 0.0;
        m.dist[u][v] = c * diam * std::max(frac, 0.25);
      }

  inst.costs.assign(bp.T, std::vector<double>(n, 0.0));
  for (int t = 0; t < bp.T; ++t)
    for (int r = 0; r < n; ++r)
      inst.costs[t][r] = c * std::clamp(tr.carbon[bp.arrival + t][r], inst.L, inst.U);
  enforce_decreasing_psi(inst);
  return inst;
}

// Noisy forecast of the instance prices: a convex mix of the truth and
// uniform noise on [L, U], clamped back into the admissible band.
inline std::vector<std::vector<double>> make_forecast(const Instance& inst, Rng& rng,
                                                      double truth_weight = 0.6) {
  std::vector<std::vector<double>> f = inst.costs;
  for (int t = 0; t < inst.T; ++t)
    for (int u = 0; u < inst.metric.n; ++u) {
      double c = inst.metric.throughput[u];
      double noise = c * urand(rng, inst.L, inst.U);
      f[t][u] = std::clamp(truth_weight * inst.costs[t][u] + (1.0 - truth_weight) * noise,
                           c * inst.L, c * inst.U);
    }
  return f;
}

// Random small instance for property and feasibility sweeps: random points
// in the plane, random prices in [cL, cU].
inline Instance random_instance(Rng& rng, int max_n = 8, int max_T = 24) {
  Instance inst;
  int n = 2 + (int)(urand(rng) * (max_n - 1));
  n = std::min(n, max_n);
  inst.L = urand(rng, 0.5, 2.0);
  inst.U = inst.L * urand(rng, 2.0, 8.0);
  MetricSpace& m = inst.metric;
  m.n = n;
  m.throughput.resize(n);
  m.switch_beta.resize(n);
  double cmin = 1.0;
  for (int u = 0; u < n; ++u) {
    m.throughput[u] = urand(rng, 0.1, 0.5);
    cmin = std::min(cmin, m.throughput[u]);
  }
  double tau = urand(rng, 0.0, 0.2) * (inst.U - inst.L);
  for (int u = 0; u < n; ++u) m.switch_beta[u] = tau * m.throughput[u];
  // Random points in a square, scaled to fit the metric budget.
  std::vector<std::pair<double, double>> pts(n);
  for (auto& p : pts) p = {urand(rng), urand(rng)};
  double dmax = 0.0;
  m.dist.assign(n, std::vector<double>(n, 0.0));
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      double dx = pts[u].first - pts[v].first, dy = pts[u].second - pts[v].second;
      m.dist[u][v] = std::sqrt(dx * dx + dy * dy);
      dmax = std::max(dmax, m.dist[u][v]);
    }
  double D_budget = urand(rng, 0.1, 0.9) * (inst.U - inst.L - 2.0 * tau);
  if (dmax > 0.0)
    for (auto& row : m.dist)
      for (double& d : row) d *= D_budget * cmin / dmax;
  int Tmin = (int)std::ceil(1.0 / cmin) + 2;
  inst.T = Tmin + (int)(urand(rng) * std::max(1, max_T - Tmin));
  inst.start = (int)(urand(rng) * n) % n;
  inst.costs.assign(inst.T, std::vector<double>(n, 0.0));
  for (auto& row : inst.costs)
    for (int u = 0; u < n; ++u)
      row[u] = m.throughput[u] * urand(rng, inst.L, inst.U);
  enforce_decreasing_psi(inst);
  return inst;
}

// --- Experiment driver --------------------------------------------------------

struct ExperimentConfig {
  int instances = 50;
  int n = 5;
  int T = 48;
  int J = 12;
  double tau = 0.2;
  std::string profile = "mixed";
  std::string advice = "forecast";  // forecast | opt | adversarial | inactive
  double xi = 1.0;                  // blend for adversarial advice
  std::vector<double> eps = {0.1, 1.0, 2.0};
  int upsilon = 0;  // >0 adds time-varying distances
  std::uint64_t seed = 12345;
  int threads = 0;  // 0 = hardware concurrency
};

struct ResultRow {
  std::string instance_id;
  std::string alg;
  double objective = 0.0;
  double opt = 0.0;
  double cr = 0.0;
  bool feasible = false;
  std::uint64_t seed = 0;
};

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  std::vector<std::vector<ResultRow>> per(cfg.instances);
  int nthreads = cfg.threads > 0 ? cfg.threads
                                 : std::max(1u, std::thread::hardware_concurrency());
  std::atomic<int> next{0};

  auto work = [&]() {
    for (int i = next.fetch_add(1); i < cfg.instances; i = next.fetch_add(1)) {
      std::uint64_t seed = cfg.seed + 1000003ull * (std::uint64_t)i;
      Rng rng(seed);
      CarbonTrace tr = synthesize_trace(cfg.n, cfg.T + 48, cfg.profile, seed);
      BuildParams bp;
      bp.T = cfg.T;
      bp.J = cfg.J;
      bp.tau = cfg.tau;
      bp.arrival = 24;
      Instance inst = build_instance(tr, bp);
      if (cfg.upsilon > 0) apply_volatility(inst, cfg.upsilon, rng);
      auto forecast = make_forecast(inst, rng);

      Advice advice;
      if (cfg.advice == "opt")
        advice = make_advice_opt(inst);
      else if (cfg.advice == "adversarial")
        advice = make_adversarial_advice(inst, cfg.xi);
      else if (cfg.advice == "inactive")
        advice = make_inactive_advice(inst);
      else
        advice = make_advice_from_forecast(inst, forecast);

      double opt = solve_offline_optimal(inst).objective;
      std::string id = "synth-" + std::to_string(cfg.seed) + "-" + std::to_string(i);
      auto push = [&](RunResult r) {
        ResultRow row;
        row.instance_id = id;
        row.alg = r.algorithm;
        row.objective = r.objective;
        row.opt = opt;
        row.cr = opt > 0.0 ? r.objective / opt : 0.0;
        row.feasible = r.feasible;
        row.seed = seed;
        per[i].push_back(row);
      };
      push(run_pcm(inst, seed));
      for (double e : cfg.eps) {
        RunResult r = run_stclip(inst, advice, e, seed);
        std::ostringstream name;
        name << "stclip_eps" << e;
        r.algorithm = name.str();
        push(r);
      }
      push(run_carbon_agnostic(inst));
      push(run_greedy(inst));
      push(run_delayed_greedy(inst, forecast));
      push(run_simple_threshold(inst));
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < nthreads; ++k) pool.emplace_back(work);
  for (auto& th : pool) th.join();

  std::vector<ResultRow> rows;
  for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

inline std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "instance_id,alg,objective,opt,cr,feasible,seed\n";
  for (const auto& r : rows)
    os << r.instance_id << ',' << r.alg << ',' << r.objective << ',' << r.opt << ','
       << r.cr << ',' << (r.feasible ? 1 : 0) << ',' << r.seed << '\n';
  return os.str();
}

inline std::vector<ResultRow> parse_results_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("results: empty file");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    ResultRow r;
    std::string field;
    try {
      std::getline(ls, r.instance_id, ',');
      std::getline(ls, r.alg, ',');
      std::getline(ls, field, ',');
      r.objective = std::stod(field);
      std::getline(ls, field, ',');
      r.opt = std::stod(field);
      std::getline(ls, field, ',');
      r.cr = std::stod(field);
      std::getline(ls, field, ',');
      r.feasible = std::stoi(field) != 0;
      std::getline(ls, field, ',');
      r.seed = std::stoull(field);
    } catch (...) {
      throw std::runtime_error("results line " + std::to_string(lineno) + ": parse error");
    }
    rows.push_back(r);
  }
  return rows;
}

// Per-algorithm empirical CDF of competitive ratios.
inline std::string cdf_csv(const std::vector<ResultRow>& rows) {
  std::map<std::string, std::vector<double>> by_alg;
  for (const auto& r : rows) by_alg[r.alg].push_back(r.cr);
  std::ostringstream os;
  os.precision(17);
  os << "alg,cr,cum_fraction\n";
  for (auto& [alg, crs] : by_alg) {
    std::sort(crs.begin(), crs.end());
    for (size_t i = 0; i < crs.size(); ++i)
      os << alg << ',' << crs[i] << ',' << (double)(i + 1) / crs.size() << '\n';
  }
  return os.str();
}

}  // namespace soad

#endif  // SOAD_HARNESS_HPP
