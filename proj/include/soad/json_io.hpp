#ifndef SOAD_JSON_IO_HPP
#define SOAD_JSON_IO_HPP

#include <json.hpp>

#include "soad/model.hpp"

namespace soad {

using ordered_json = nlohmann::ordered_json;

// Canonical instance schema:
// {n, T, L, U, start, throughput[], beta[], dist[][], costs[][], tv_dist?}
inline ordered_json instance_to_json(const Instance& inst) {
  ordered_json j;
  j["n"] = inst.metric.n;
  j["T"] = inst.T;
  j["L"] = inst.L;
  j["U"] = inst.U;
  j["start"] = inst.start;
  j["throughput"] = inst.metric.throughput;
  j["beta"] = inst.metric.switch_beta;
  j["dist"] = inst.metric.dist;
  j["costs"] = inst.costs;
  if (inst.tv_dist) j["tv_dist"] = *inst.tv_dist;
  return j;
}

inline Instance instance_from_json(const ordered_json& j) {
  Instance inst;
  inst.metric.n = j.at("n").get<int>();
  inst.T = j.at("T").get<int>();
  inst.L = j.at("L").get<double>();
  inst.U = j.at("U").get<double>();
  inst.start = j.at("start").get<int>();
  inst.metric.throughput = j.at("throughput").get<std::vector<double>>();
  inst.metric.switch_beta = j.at("beta").get<std::vector<double>>();
  inst.metric.dist = j.at("dist").get<DistMatrix>();
  inst.costs = j.at("costs").get<std::vector<std::vector<double>>>();
  if (j.contains("tv_dist")) inst.tv_dist = j.at("tv_dist").get<std::vector<DistMatrix>>();
  return inst;
}

inline ordered_json run_result_to_json(const RunResult& r) {
  ordered_json j;
  j["algorithm"] = r.algorithm;
  j["objective"] = r.objective;
  j["service"] = r.service;
  j["movement_spatial"] = r.movement_spatial;
  j["movement_temporal"] = r.movement_temporal;
  j["feasible"] = r.feasible;
  j["seed"] = r.seed;
  j["utilization"] = r.utilization;
  j["decisions"] = r.decisions;
  return j;
}

inline RunResult run_result_from_json(const ordered_json& j) {
  RunResult r;
  r.algorithm = j.at("algorithm").get<std::string>();
  r.objective = j.at("objective").get<double>();
  r.service = j.at("service").get<double>();
  r.movement_spatial = j.at("movement_spatial").get<double>();
  r.movement_temporal = j.at("movement_temporal").get<double>();
  r.feasible = j.at("feasible").get<bool>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.utilization = j.at("utilization").get<std::vector<double>>();
  r.decisions = j.at("decisions").get<std::vector<StateDistribution>>();
  return r;
}

}  // namespace soad

#endif  // SOAD_JSON_IO_HPP
