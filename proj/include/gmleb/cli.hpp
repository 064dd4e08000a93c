#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gmleb/estimators.hpp"
#include "gmleb/io.hpp"
#include "gmleb/mixture.hpp"
#include "gmleb/npmle.hpp"
#include "gmleb/selfcheck.hpp"
#include "gmleb/simlab.hpp"

namespace gmleb::cli {

//! Exit statuses: 0 success, 1 invariant/validation failure, 2 I/O or usage.
enum ExitCode { exit_ok = 0, exit_invariant = 1, exit_usage = 2 };

namespace detail {

inline std::size_t thread_budget() {
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GMLEB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) threads = std::min<std::size_t>(threads, static_cast<std::size_t>(cap));
  }
  return threads;
}

inline void write_fit_sidecar(const NpmleFit& fit, const std::string& path) {
  nlohmann::json j;
  j["iterations"] = fit.iterations;
  j["final_loglik"] = fit.final_loglik();
  if (fit.certificate) {
    j["certificate"] = {
        {"max_log_weight_ratio", fit.certificate->max_log_weight_ratio},
        {"threshold", fit.certificate->threshold},
        {"satisfied", fit.certificate->satisfied},
    };
  } else {
    j["certificate"] = nullptr;
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << j.dump(2) << '\n';
}

}  // namespace detail

inline int cmd_fit(const std::string& input, const std::string& grid_mode,
                   std::size_t iters, const std::string& stop_mode,
                   const std::string& out_prefix) {
  std::vector<double> x = read_value_file(input);
  Grid grid = grid_mode == "certified" ? build_grid_certified(x) : build_grid_paper(x);
  std::vector<double> init(grid.points.size(), 1.0 / static_cast<double>(grid.points.size()));
  StopRule stop = stop_mode == "certified"
                      ? StopRule{CertifiedStop{default_approximation_factor(x.size())}}
                      : StopRule{FixedIterations{iters}};
  NpmleFit fit = fit_npmle(x, grid.points, init, stop);

  write_mixture_csv(fit.mixture, out_prefix + ".mixture.csv");
  detail::write_fit_sidecar(fit, out_prefix + ".fit.json");
  std::cout.precision(6);
  std::cout << "fitted " << fit.mixture.size() << " grid points in " << fit.iterations
            << " EM iterations, log-likelihood " << fit.final_loglik() << '\n';
  if (fit.certificate && !fit.certificate->satisfied) {
    std::cerr << "warning: certified stopping criterion not reached before the iteration cap\n";
    return exit_invariant;
  }
  return exit_ok;
}

inline int cmd_estimate(const std::string& input, const std::string& kind_name, double q,
                        const std::string& truth_path, const std::string& out_path) {
  std::vector<double> x = read_value_file(input);
  EstimatorSpec spec = kind_name == "fdr" ? EstimatorSpec::fdr_at(q)
                                          : EstimatorSpec::of(estimator_kind_from_string(kind_name));
  std::optional<std::vector<double>> truth;
  if (spec.kind == EstimatorKind::oracle) {
    if (truth_path.empty()) {
      throw CLI::ValidationError("--truth is required for the oracle estimator");
    }
    truth = read_value_file(truth_path);
  }

  EstimateResult result = apply_estimator(spec, x, truth ? &*truth : nullptr);

  std::ostringstream body;
  write_value_lines(result.estimates, body);
  body.precision(6);
  body << "# estimator: " << spec.label() << '\n';
  if (result.threshold) body << "# threshold: " << *result.threshold << '\n';
  if (result.shrink_factor) body << "# shrink_factor: " << *result.shrink_factor << '\n';
  if (result.mixture) body << "# mixture_atoms: " << result.mixture->size() << '\n';

  if (out_path.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream os(out_path);
    if (!os) throw IoError("cannot open for writing: " + out_path);
    os << body.str();
  }
  return exit_ok;
}

inline int cmd_simulate(const std::string& scenario_path, std::optional<std::uint64_t> seed,
                        const std::string& out_dir, bool with_timings) {
  std::vector<ScenarioConfig> scenarios = load_scenarios(scenario_path);
  if (seed) {
    for (auto& sc : scenarios) sc.base_seed = *seed;
  }
  std::filesystem::create_directories(out_dir);
  const std::size_t threads = detail::thread_budget();

  std::vector<SimulationRecord> all_records;
  for (const auto& sc : scenarios) {
    std::cerr << "scenario " << sc.id << ": n=" << sc.n << ", " << sc.replications
              << " replications, " << sc.estimators.size() << " estimators\n";
    auto records = run_scenario(sc, threads);
    all_records.insert(all_records.end(), records.begin(), records.end());
  }
  auto rows = aggregate(all_records);

  const auto dir = std::filesystem::path(out_dir);
  {
    std::ofstream os(dir / "records.csv");
    if (!os) throw IoError("cannot write records.csv in " + out_dir);
    write_records_csv(all_records, os, with_timings);
  }
  {
    std::ofstream os(dir / "aggregate.csv");
    if (!os) throw IoError("cannot write aggregate.csv in " + out_dir);
    write_aggregate_csv(rows, os);
  }
  {
    std::ofstream os(dir / "table.md");
    if (!os) throw IoError("cannot write table.md in " + out_dir);
    write_markdown_table(rows, os);
  }
  std::cerr << "wrote " << all_records.size() << " records to " << out_dir << '\n';
  return exit_ok;
}

inline int cmd_check(std::ostream& os) {
  const auto results = run_self_checks();
  bool all_pass = true;
  for (const auto& r : results) {
    os << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " — " << r.detail << '\n';
    all_pass = all_pass && r.pass;
  }
  return all_pass ? exit_ok : exit_invariant;
}

//! Full command-line entry point; returns the process exit code.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"GMLEB: nonparametric empirical Bayes estimation of normal means"};
  app.require_subcommand(1);

  auto* fit = app.add_subcommand("fit", "fit the NPMLE mixing distribution to a value file");
  std::string fit_input, fit_grid = "paper", fit_stop = "fixed", fit_out = "npmle_fit";
  std::size_t fit_iters = 100;
  fit->add_option("input", fit_input, "newline-delimited reals")->required();
  fit->add_option("--grid", fit_grid, "grid recipe")->check(CLI::IsMember({"paper", "certified"}));
  fit->add_option("--iters", fit_iters, "EM iterations for fixed stopping");
  fit->add_option("--stop", fit_stop, "stopping rule")->check(CLI::IsMember({"fixed", "certified"}));
  fit->add_option("--out", fit_out, "output prefix (.mixture.csv / .fit.json)");

  auto* est = app.add_subcommand("estimate", "denoise a value file with a chosen estimator");
  std::string est_input, est_kind, est_truth, est_out;
  double est_q = 0.1;
  est->add_option("input", est_input, "newline-delimited reals")->required();
  est->add_option("--estimator", est_kind, "estimator kind")
      ->required()
      ->check(CLI::IsMember({"gmleb", "s_gmleb", "oracle", "james_stein", "sure", "fdr",
                             "universal_soft", "universal_hard", "identity"}));
  est->add_option("--q", est_q, "FDR level");
  est->add_option("--truth", est_truth, "truth file (oracle estimator)");
  est->add_option("--out", est_out, "output file (default stdout)");

  auto* sim = app.add_subcommand("simulate", "run a scenario file and tabulate the results");
  std::string sim_scenario, sim_out = "sim_out";
  std::optional<std::uint64_t> sim_seed;
  bool sim_timings = false;
  sim->add_option("--scenario", sim_scenario, "scenario JSON file")->required();
  sim->add_option("--seed", sim_seed, "override the base seed");
  sim->add_option("--out", sim_out, "output directory");
  sim->add_flag("--timings", sim_timings, "write measured wall times into records.csv");

  auto* chk = app.add_subcommand("check", "run the numerical invariant self-checks");

  try {
    app.parse(argc, argv);
    if (fit->parsed()) return cmd_fit(fit_input, fit_grid, fit_iters, fit_stop, fit_out);
    if (est->parsed()) return cmd_estimate(est_input, est_kind, est_q, est_truth, est_out);
    if (sim->parsed()) return cmd_simulate(sim_scenario, sim_seed, sim_out, sim_timings);
    if (chk->parsed()) return cmd_check(std::cout);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);  // prints the help of whichever (sub)command asked
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_invariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_invariant;
  }
  return exit_usage;
}

//! Convenience overload for tests.
inline int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("gmleb");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace gmleb::cli
