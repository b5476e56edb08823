#include "magg/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "magg/cahn_hilliard.hpp"
#include "magg/diagnostics.hpp"
#include "magg/errors.hpp"
#include "magg/io.hpp"
#include "magg/simulation.hpp"

namespace magg {

namespace {

constexpr const char* kUsage = R"(usage: magg <command> [options]

commands:
  run            --config <path> --out <dir>
  sweep-etar     --config <path> --values <list> --out <dir>
  compare-modelh --config <path> --mismatch <list> --out <dir>
  check-energy   --config <path> --dts <list>
  mollify        --config <path> --k <level> [--out <dir>]
  convergence    --config <path> --grids <list>

<list> is comma separated, e.g. 0.1,0.01,0.001.
Exit status: 0 success, 1 invalid input, 2 solver failure.
)";

constexpr const char* kConfigHelp = R"(
Config file (JSON, unknown keys rejected). Defaults in brackets:
  grid:   n (required, even, >= 8), box_length [2 pi], dealias ["two_thirds" | "half"]
  params: sigma [1], eps [0.25], rho1 [1], rho2 [1], eta [0.1], eta_r [0],
          c0 [0.1], cd [0.1], ca [0.05]   (number, or [phase1, phase2])
          theta [1], theta0 [2], potential ["quartic" | "logarithmic"], alpha [0],
          variant ["magg" | "agg" | "model_h"], rho_bar [1],
          stabilization [sigma/eps * max(1, theta0) for logarithmic, sigma/eps otherwise],
          delta_floor [1e-9]
  dt (required), t_end (required), cfl_number [0.4], fixed_dt [false], seed [0]
  flow:   pressure_iterations [40], implicit_viscosity [min eta / max rho],
          implicit_omega_diffusion [min(cd + ca) / max rho]
  output: directory [""], ledger_every [1], snapshot_every [0 = final only]
  initial_condition: type ["uniform_plus_modes" | "tanh_stripe" | "from_snapshot"],
          phi, u_x, u_y, omega: {mean, modes: [{k: [kx, ky], amplitude, phase}]},
          noise: {amplitude, max_mode}, width [0.3], amplitude [0.9], path
)";

std::vector<double> parse_doubles(const std::string& text, const char* option) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size())
      throw ValidationError(std::string(option) + ": \"" + item + "\" is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ValidationError(std::string(option) + ": empty list");
  return out;
}

std::vector<int> parse_ints(const std::string& text, const char* option) {
  std::vector<int> out;
  for (double v : parse_doubles(text, option)) {
    if (v != static_cast<int>(v)) throw ValidationError(std::string(option) + ": expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

SimConfig load_checked(const std::string& path, std::ostream& err) {
  SimConfig c = load_config(path);
  for (const auto& w : c.validate()) err << "warning: " << w << "\n";
  return c;
}

void write_sweep(const std::filesystem::path& dir, const SweepReport& report, const SimConfig& config) {
  std::filesystem::create_directories(dir);
  write_text(dir / "sweep_report.json", sweep_report_json(report, config_digest(config)));
}

void print_sweep(std::ostream& out, const SweepReport& report) {
  for (std::size_t i = 0; i < report.errors.size(); ++i)
    out << report.parameter << " = " << report.parameter_values[i] << "  error = " << report.errors[i] << "\n";
  if (report.fitted_slope)
    out << "fitted_slope = " << *report.fitted_slope << "  fit_r2 = " << *report.fit_r2 << "\n";
  else
    out << "fitted_slope undefined (fewer than two fit points)\n";
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  if (argc < 2) {
    err << kUsage;
    return 1;
  }
  CLI::App app{"Pseudo-spectral solver for micropolar two-phase flow on the periodic square", "magg"};
  app.footer(kConfigHelp);
  app.require_subcommand(1);

  std::string config_path, out_dir, list;
  double k_level = 0.0;

  auto* run_cmd = app.add_subcommand("run", "integrate a configuration, writing ledger.csv and snapshots");
  run_cmd->add_option("--config", config_path, "config file")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* etar_cmd = app.add_subcommand("sweep-etar", "eta_r sweep against the nonpolar reference");
  etar_cmd->add_option("--config", config_path, "config file")->required();
  etar_cmd->add_option("--values", list, "decreasing eta_r values")->required();
  etar_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* mh_cmd = app.add_subcommand("compare-modelh", "density mismatch sweep against matched-density Model H");
  mh_cmd->add_option("--config", config_path, "config file")->required();
  mh_cmd->add_option("--mismatch", list, "decreasing density mismatch values")->required();
  mh_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* energy_cmd = app.add_subcommand("check-energy", "order of the discrete energy-law residual");
  energy_cmd->add_option("--config", config_path, "config file")->required();
  energy_cmd->add_option("--dts", list, "decreasing time steps")->required();

  auto* moll_cmd = app.add_subcommand("mollify", "regularize the initial phase field");
  moll_cmd->add_option("--config", config_path, "config file")->required();
  moll_cmd->add_option("--k", k_level, "mollifier level k > 0")->required();
  moll_cmd->add_option("--out", out_dir, "optional directory for the mollified snapshot");

  auto* conv_cmd = app.add_subcommand("convergence", "spatial self-convergence against the finest grid");
  conv_cmd->add_option("--config", config_path, "config file")->required();
  conv_cmd->add_option("--grids", list, "increasing grid sizes")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << kUsage;
    return 1;
  }

  try {
    if (run_cmd->parsed()) {
      SimConfig c = load_checked(config_path, err);
      c.output.directory = out_dir;
      const RunResult r = run(c);
      out << "steps = " << r.steps << "  t = " << r.final_state.time
          << "  E = " << r.ledger.records.back().energy.total
          << "  max|residual| = " << r.ledger.max_abs_residual() << "\n";
    } else if (etar_cmd->parsed()) {
      const SimConfig c = load_checked(config_path, err);
      try {
        const SweepReport report = etar_sweep(c, parse_doubles(list, "--values"));
        write_sweep(out_dir, report, c);
        print_sweep(out, report);
      } catch (const SweepAborted& e) {
        write_sweep(out_dir, e.partial(), c);
        throw;
      }
    } else if (mh_cmd->parsed()) {
      const SimConfig c = load_checked(config_path, err);
      try {
        const SweepReport report = modelh_sweep(c, parse_doubles(list, "--mismatch"));
        write_sweep(out_dir, report, c);
        print_sweep(out, report);
      } catch (const SweepAborted& e) {
        write_sweep(out_dir, e.partial(), c);
        throw;
      }
    } else if (energy_cmd->parsed()) {
      const SimConfig c = load_checked(config_path, err);
      out << energy_order_json(energy_order(c, parse_doubles(list, "--dts")));
    } else if (moll_cmd->parsed()) {
      if (!(k_level > 0.0)) throw ValidationError("--k: must be positive");
      const SimConfig c = load_checked(config_path, err);
      const State s0 = make_initial_state(c, make_grid(c.grid.n, c.grid.box_length));
      auto [phi, report] = mollify_initial_phi(s0.phi, k_level, c.params);
      out << mollifier_json(report);
      if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const State s = make_state(s0.time, s0.u, s0.omega, std::move(phi), c.params, c.grid.dealias);
        write_snapshot(s, std::filesystem::path(out_dir) / "mollified.bin");
        write_text(std::filesystem::path(out_dir) / "mollifier_report.json", mollifier_json(report));
      }
    } else if (conv_cmd->parsed()) {
      const SimConfig c = load_checked(config_path, err);
      out << convergence_json(convergence(c, parse_ints(list, "--grids")));
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int cli_dispatch(int argc, const char* const* argv) { return cli_dispatch(argc, argv, std::cout, std::cerr); }

}  // namespace magg
