#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eclqr/io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Equality-constrained LQR solver on factor graphs"};
  app.require_subcommand(1);

  std::string problem_path;
  std::string traj_path;
  std::string gains_path;
  std::string values_path;
  std::string x0_csv;

  auto* solve_cmd = app.add_subcommand("solve", "Solve a problem file; write trajectory and gains");
  solve_cmd->add_option("problem", problem_path, "Problem JSON file")->required();
  solve_cmd->add_option("--traj", traj_path, "Trajectory CSV output path")->required();
  solve_cmd->add_option("--gains", gains_path, "Gains CSV output path")->required();
  solve_cmd->add_option("--values", values_path, "Optional cost-to-go / constraint-to-go CSV path");

  auto* sim_cmd =
      app.add_subcommand("simulate", "Roll the solved feedback policies out from a given x0");
  sim_cmd->add_option("problem", problem_path, "Problem JSON file")->required();
  sim_cmd->add_option("--x0", x0_csv, "Initial state override, comma-separated")->required();
  sim_cmd->add_option("--traj", traj_path, "Trajectory CSV output path")->required();

  auto* verify_cmd =
      app.add_subcommand("verify", "Cross-check the solver against the KKT and Riccati oracles");
  verify_cmd->add_option("problem", problem_path, "Problem JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return eclqr::io::kExitParse;
  }

  if (solve_cmd->parsed())
    return eclqr::io::cmd_solve(problem_path, traj_path, gains_path, values_path, std::cout,
                                std::cerr);
  if (sim_cmd->parsed())
    return eclqr::io::cmd_simulate(problem_path, x0_csv, traj_path, std::cout, std::cerr);
  return eclqr::io::cmd_verify(problem_path, std::cout, std::cerr);
}
