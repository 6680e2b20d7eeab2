// Command-line front end: run experiments, generate instances and
// adversarial traces, solve single instances, and summarize results.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "soad/adversary.hpp"
#include "soad/algorithms.hpp"
#include "soad/harness.hpp"
#include "soad/json_io.hpp"
#include "soad/numerics.hpp"
#include "soad/offline.hpp"

using namespace soad;

namespace {

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  ordered_json j;
  in >> j;
  Instance inst = instance_from_json(j);
  auto errs = validate(inst);
  if (!errs.empty()) {
    std::string msg = "invalid instance " + path + ":";
    for (const auto& e : errs) msg += "\n  " + e;
    throw std::runtime_error(msg);
  }
  return inst;
}

void write_text(const std::string& path, const std::string& body) {
  if (path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spatiotemporal online allocation simulator"};
  app.require_subcommand(1);
  std::uint64_t seed = seed_from_env();

  // --- run ---
  auto* run = app.add_subcommand("run", "run an experiment batch");
  ExperimentConfig cfg;
  cfg.seed = seed;
  std::string results_out = "results.csv", cdf_out;
  run->add_option("--instances", cfg.instances);
  run->add_option("--n", cfg.n);
  run->add_option("--T", cfg.T);
  run->add_option("--J", cfg.J);
  run->add_option("--tau", cfg.tau);
  run->add_option("--profile", cfg.profile)->check(CLI::IsMember({"mixed", "low-carbon-heavy"}));
  run->add_option("--advice", cfg.advice)
      ->check(CLI::IsMember({"forecast", "opt", "adversarial", "inactive"}));
  run->add_option("--xi", cfg.xi);
  run->add_option("--eps", cfg.eps);
  run->add_option("--upsilon", cfg.upsilon);
  run->add_option("--seed", cfg.seed);
  run->add_option("--threads", cfg.threads);
  run->add_option("-o,--out", results_out);
  run->add_option("--cdf", cdf_out);

  // --- gen-instance ---
  auto* gen = app.add_subcommand("gen-instance", "synthesize a trace-driven instance");
  int gn = 5, gT = 48, gJ = 12;
  double gtau = 0.2;
  std::string gprofile = "mixed", gout = "-";
  std::uint64_t gseed = seed;
  gen->add_option("--n", gn);
  gen->add_option("--T", gT);
  gen->add_option("--J", gJ);
  gen->add_option("--tau", gtau);
  gen->add_option("--profile", gprofile);
  gen->add_option("--seed", gseed);
  gen->add_option("-o,--out", gout);

  // --- gen-adversary ---
  auto* adv = app.add_subcommand("gen-adversary", "generate an adaptive hard instance");
  AdversaryParams ap;
  std::string afamily = "A", aout = "-";
  std::uint64_t aseed = seed;
  adv->add_option("--family", afamily)->check(CLI::IsMember({"G", "A", "P"}));
  adv->add_option("--y", ap.y);
  adv->add_option("--n", ap.n);
  adv->add_option("--m", ap.m);
  adv->add_option("--L", ap.L);
  adv->add_option("--U", ap.U);
  adv->add_option("--D", ap.D);
  adv->add_option("--tau", ap.tau);
  adv->add_option("--c", ap.c);
  adv->add_option("--seed", aseed);
  adv->add_option("-o,--out", aout);

  // --- solve ---
  auto* solve = app.add_subcommand("solve", "run one algorithm on one instance");
  std::string salg = "pcm", sinst, sout = "-", sadvice = "opt";
  double seps = 1.0, sxi = 1.0;
  std::uint64_t sseed = seed;
  solve->add_option("--alg", salg)
      ->check(CLI::IsMember({"pcm", "stclip", "optimal", "worst", "carbon-agnostic",
                             "greedy", "delayed-greedy", "simple-threshold"}));
  solve->add_option("--instance", sinst)->required();
  solve->add_option("--eps", seps);
  solve->add_option("--advice", sadvice)
      ->check(CLI::IsMember({"opt", "inactive", "adversarial", "forecast"}));
  solve->add_option("--xi", sxi);
  solve->add_option("--seed", sseed);
  solve->add_option("-o,--out", sout);

  // --- report ---
  auto* report = app.add_subcommand("report", "summarize a results CSV into a CR CDF");
  std::string rin, rout = "-";
  report->add_option("--results", rin)->required();
  report->add_option("-o,--out", rout);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto rows = run_experiment(cfg);
      write_text(results_out, results_csv(rows));
      if (!cdf_out.empty()) write_text(cdf_out, cdf_csv(rows));
      int infeasible = 0;
      for (const auto& r : rows)
        if (!r.feasible) ++infeasible;
      std::cerr << "wrote " << rows.size() << " rows (" << infeasible << " infeasible)\n";
    } else if (*gen) {
      CarbonTrace tr = synthesize_trace(gn, gT + 48, gprofile, gseed);
      BuildParams bp;
      bp.T = gT;
      bp.J = gJ;
      bp.tau = gtau;
      bp.arrival = 24;
      Instance inst = build_instance(tr, bp);
      write_text(gout, instance_to_json(inst).dump(2) + "\n");
    } else if (*adv) {
      ap.family = afamily[0];
      Instance inst = generate_y_adversary(ap, aseed);
      write_text(aout, instance_to_json(inst).dump(2) + "\n");
    } else if (*solve) {
      Instance inst = load_instance(sinst);
      RunResult r;
      if (salg == "pcm")
        r = run_pcm(inst, sseed);
      else if (salg == "stclip") {
        Rng rng(sseed);
        Advice a;
        if (sadvice == "inactive")
          a = make_inactive_advice(inst);
        else if (sadvice == "adversarial")
          a = make_adversarial_advice(inst, sxi);
        else if (sadvice == "forecast")
          a = make_advice_from_forecast(inst, make_forecast(inst, rng));
        else
          a = make_advice_opt(inst);
        r = run_stclip(inst, a, seps, sseed);
      } else if (salg == "optimal")
        r = solve_offline_optimal(inst);
      else if (salg == "worst")
        r = solve_offline_worst(inst);
      else if (salg == "carbon-agnostic")
        r = run_carbon_agnostic(inst);
      else if (salg == "greedy")
        r = run_greedy(inst);
      else if (salg == "delayed-greedy") {
        Rng rng(sseed);
        r = run_delayed_greedy(inst, make_forecast(inst, rng));
      } else
        r = run_simple_threshold(inst);
      write_text(sout, run_result_to_json(r).dump(2) + "\n");
    } else if (*report) {
      std::ifstream in(rin);
      if (!in) throw std::runtime_error("cannot open " + rin);
      write_text(rout, cdf_csv(parse_results_csv(in)));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
