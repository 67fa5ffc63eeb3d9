// Command-line front end: solves the progression model, writes CSV reports,
// runs the sensitivity sweep and Monte Carlo simulator, and validates the
// build against the embedded reference tables.
//
// Exit codes: 0 success, 1 validation failure, 2 usage error, 3 I/O error.

#include <CLI11.hpp>

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bcms/model.hpp"
#include "bcms/outcomes.hpp"
#include "bcms/reference.hpp"
#include "bcms/report.hpp"
#include "bcms/scenario.hpp"
#include "bcms/simulate.hpp"
#include "bcms/solver.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<double> step;
  std::optional<double> horizon;
  std::vector<std::string> scenarios;
  std::optional<std::string> model;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> mu35_scale;
  std::optional<std::uint64_t> seed;
  std::optional<long long> paths;
  std::optional<int> start_state;
  int fit_degree = 4;
  bool dump_paths = false;
};

bcms::RunConfig assemble_config(const CliOptions& cli) {
  bcms::RunConfig cfg;
  if (!cli.config_path.empty()) cfg = bcms::load_run_config(cli.config_path);
  if (!cli.scenarios.empty()) cfg.scenarios = cli.scenarios;
  if (cli.model) {
    if (*cli.model == "both")
      cfg.kinds = {bcms::ModelKind::Markov, bcms::ModelKind::SemiMarkov};
    else
      cfg.kinds = {bcms::detail::parse_kind(*cli.model)};
  }
  if (cli.alpha) cfg.alpha = *cli.alpha;
  if (cli.beta) cfg.beta = *cli.beta;
  if (cli.mu35_scale) cfg.mu35_scale = *cli.mu35_scale;
  if (cli.step) cfg.step = *cli.step;
  if (cli.horizon) {
    cfg.horizon = *cli.horizon;
    if (cfg.horizon > 5.0) cfg.horizons = {1.0, 5.0, cfg.horizon};
  }
  if (cli.seed) cfg.seed = *cli.seed;
  if (cli.paths) cfg.paths = *cli.paths;
  if (cli.start_state) {
    if (*cli.start_state < 0 || *cli.start_state > 3)
      throw std::invalid_argument("start state must be 0..3");
    cfg.start_states = {static_cast<bcms::State>(*cli.start_state)};
  }
  // --out beats the config, which beats the environment override
  if (!cli.out_dir.empty()) {
    cfg.out_dir = cli.out_dir;
  } else if (cfg.out_dir.empty()) {
    if (const char* env = std::getenv("BCMS_OUT_DIR"); env && *env)
      cfg.out_dir = env;
    else
      cfg.out_dir = ".";
  }
  return cfg;
}

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::string path = dir + "/" + name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw std::ios_base::failure("write failed: " + path);
  std::cerr << "wrote " << path << "\n";
}

int warn_failed_cells(const bcms::OutcomeReport& report) {
  int failed = 0;
  auto warn = [&](const std::string& what, const std::string& err) {
    std::cerr << "warning: " << what << " cell failed: " << err << "\n";
    ++failed;
  };
  for (const auto& r : report.occupancy)
    if (r.failed) warn("occupancy", r.error);
  for (const auto& r : report.survival)
    if (r.failed) warn("survival", r.error);
  for (const auto& r : report.excess)
    if (r.failed) warn("excess", r.error);
  return failed;
}

bcms::SweepRequest request_from_config(const bcms::RunConfig& cfg) {
  bcms::SweepRequest req;
  bcms::ParameterSet p = cfg.parameters(bcms::ModelKind::Markov);
  p.id = "config";
  req.parameter_sets = {p};
  for (const auto& name : cfg.scenarios) req.scenarios.push_back(cfg.overlay(name));
  req.bands = cfg.bands;
  req.kinds = cfg.kinds;
  req.occupancy_horizons = cfg.horizons;
  req.grid = cfg.grid();
  return req;
}

int cmd_solve(const bcms::RunConfig& cfg) {
  std::vector<bcms::OccupancyRow> rows;
  for (const auto& scenario_name : cfg.scenarios) {
    const bcms::ScenarioOverlay overlay = cfg.overlay(scenario_name);
    for (bcms::ModelKind kind : cfg.kinds) {
      const bcms::ParameterSet params = cfg.parameters(kind);
      for (bcms::AgeBand band : cfg.bands) {
        for (bcms::State start : cfg.start_states) {
          const bcms::OccupancyCurve curve =
              bcms::solve(start, band, params, overlay, cfg.grid());
          bcms::OccupancyRow row;
          row.scenario = scenario_name;
          row.kind = kind;
          row.band = band;
          row.start = start;
          if (cfg.report_full_grid) {
            for (std::size_t i = 0; i < curve.times.size(); ++i) {
              row.horizon = curve.times[i];
              row.prob = curve.prob[i];
              rows.push_back(row);
            }
          } else {
            for (double h : cfg.horizons) {
              if (h > cfg.horizon + 1e-12) continue;
              row.horizon = h;
              row.prob = curve.at(h);
              rows.push_back(row);
            }
          }
        }
      }
    }
  }
  write_file(cfg.out_dir, "occupancy.csv", bcms::occupancy_csv(rows));
  return kExitOk;
}

int cmd_report(const bcms::RunConfig& cfg) {
  bcms::SweepRequest req = request_from_config(cfg);
  req.grid.horizon = 10.0;  // survival tables run to 10 years
  const bcms::OutcomeReport report = bcms::sensitivity_sweep(req);
  write_file(cfg.out_dir, "survival.csv", bcms::survival_csv(report.survival));
  write_file(cfg.out_dir, "excess.csv", bcms::excess_csv(report.excess));
  return warn_failed_cells(report) == 0 ? kExitOk : kExitValidation;
}

int cmd_sweep(const bcms::RunConfig& cfg) {
  bcms::SweepRequest req = request_from_config(cfg);
  req.parameter_sets = bcms::sensitivity_parameter_sets();
  req.grid.horizon = 10.0;
  const bcms::OutcomeReport report = bcms::sensitivity_sweep(req);
  write_file(cfg.out_dir, "sweep_occupancy.csv", bcms::occupancy_csv(report.occupancy, true));
  write_file(cfg.out_dir, "sweep_survival.csv", bcms::survival_csv(report.survival, true));
  write_file(cfg.out_dir, "sweep_excess.csv", bcms::excess_csv(report.excess, true));
  return warn_failed_cells(report) == 0 ? kExitOk : kExitValidation;
}

int cmd_simulate(const bcms::RunConfig& cfg, bool dump_paths) {
  std::string estimates;
  estimates += "scenario,model,age_band,start_state,t_years,state,estimate,standard_error\n";
  std::string paths_csv = "path_id,t,from,to\n";

  std::vector<double> times;
  for (double h : cfg.horizons)
    if (h <= cfg.horizon + 1e-12) times.push_back(h);
  if (times.empty()) times.push_back(cfg.horizon);

  for (const auto& scenario_name : cfg.scenarios) {
    for (bcms::ModelKind kind : cfg.kinds) {
      for (bcms::AgeBand band : cfg.bands) {
        for (bcms::State start : cfg.start_states) {
          bcms::SimulationConfig sim;
          sim.n_paths = cfg.paths;
          sim.seed = cfg.seed;
          sim.start = start;
          sim.band = band;
          sim.params = cfg.parameters(kind);
          sim.scenario = cfg.overlay(scenario_name);
          sim.horizon = cfg.horizon;
          const bcms::OccupancyEstimate est = bcms::estimate_occupancy(sim, times);
          for (std::size_t k = 0; k < est.times.size(); ++k)
            for (int s = 0; s < bcms::kNumStates; ++s) {
              estimates += scenario_name + "," + std::string(bcms::kind_label(kind)) + "," +
                           std::string(bcms::band_label(band)) + "," +
                           std::to_string(static_cast<int>(start)) + "," +
                           bcms::format_significant(est.times[k]) + "," + std::to_string(s) +
                           "," + bcms::format_significant(est.frequency[k][s]) + "," +
                           bcms::format_significant(est.standard_error[k][s]) + "\n";
            }
          if (dump_paths) {
            for (long long i = 0; i < sim.n_paths; ++i) {
              const bcms::LifeHistory h =
                  bcms::sample_history(sim, static_cast<std::uint64_t>(i));
              for (const auto& e : h.events)
                paths_csv += std::to_string(i) + "," + bcms::format_significant(e.time) + "," +
                             std::to_string(static_cast<int>(e.from)) + "," +
                             std::to_string(static_cast<int>(e.to)) + "\n";
            }
          }
        }
      }
    }
  }
  write_file(cfg.out_dir, "mc_occupancy.csv", estimates);
  if (dump_paths) write_file(cfg.out_dir, "paths.csv", paths_csv);
  return kExitOk;
}

int cmd_validate() {
  const bcms::ValidationReport report = bcms::run_validation();
  report.print(std::cout);
  return report.ok() ? kExitOk : kExitValidation;
}

int cmd_fit(const bcms::RunConfig& cfg, int degree) {
  const auto points = bcms::duration_rate_points();
  const std::vector<double> coeffs = bcms::fit_duration_polynomial(points, degree);
  std::string csv = "order,coefficient\n";
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    csv += std::to_string(k) + "," + bcms::format_significant(coeffs[k]) + "\n";
  write_file(cfg.out_dir, "fit_coefficients.csv", csv);
  std::cout << "degree " << degree << " fit, rmse "
            << bcms::format_significant(bcms::fit_rmse(coeffs, points), 6) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Six-state breast-cancer progression model with pandemic scenario overlays"};
  app.require_subcommand(1);

  CliOptions cli;
  app.add_option("--config", cli.config_path, "Run-configuration file");
  app.add_option("--out", cli.out_dir, "Output directory (default: BCMS_OUT_DIR or .)");
  app.add_option("--step", cli.step, "Grid step in years");
  app.add_option("--horizon", cli.horizon, "Solve horizon in years (<= 10)");
  app.add_option("--scenario", cli.scenarios, "Scenarios: pre, s1, s2, custom")
      ->delimiter(',');
  app.add_option("--model", cli.model, "Model kind: markov, semimarkov or both");
  app.add_option("--alpha", cli.alpha, "Diagnosed fraction of onset, in (0,1)");
  app.add_option("--beta", cli.beta, "Treated/untreated progression ratio, in (0,1)");
  app.add_option("--mu35-scale", cli.mu35_scale, "Multiplier on the metastatic death rate");
  app.add_option("--seed", cli.seed, "Simulation seed");
  app.add_option("--paths", cli.paths, "Simulation path count");
  app.add_option("--start", cli.start_state, "Start state 0..3");

  auto* solve_cmd = app.add_subcommand("solve", "Write occupancy.csv");
  auto* report_cmd = app.add_subcommand("report", "Write survival.csv and excess.csv");
  auto* sweep_cmd =
      app.add_subcommand("sweep", "Full parameter sweep across the built-in variant grid");
  auto* simulate_cmd =
      app.add_subcommand("simulate", "Monte Carlo occupancy estimates (mc_occupancy.csv)");
  simulate_cmd->add_flag("--dump-paths", cli.dump_paths,
                         "Also write one CSV row per sampled transition");
  auto* validate_cmd =
      app.add_subcommand("validate", "Recompute the embedded reference tables and compare");
  auto* fit_cmd = app.add_subcommand("fit", "Least-squares fit of the duration-hazard points");
  fit_cmd->add_option("--degree", cli.fit_degree, "Polynomial degree (3, 4, 6 or 7)");

  // global flags are accepted on either side of the subcommand
  for (CLI::App* sub : {solve_cmd, report_cmd, sweep_cmd, simulate_cmd, validate_cmd, fit_cmd})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (validate_cmd->parsed()) return cmd_validate();
    const bcms::RunConfig cfg = assemble_config(cli);
    if (solve_cmd->parsed()) return cmd_solve(cfg);
    if (report_cmd->parsed()) return cmd_report(cfg);
    if (sweep_cmd->parsed()) return cmd_sweep(cfg);
    if (simulate_cmd->parsed()) return cmd_simulate(cfg, cli.dump_paths);
    if (fit_cmd->parsed()) return cmd_fit(cfg, cli.fit_degree);
    std::cerr << "error: no subcommand\n";
    return kExitUsage;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
