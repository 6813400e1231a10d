#pragma once

#include <iosfwd>
#include <string>

#include "eclqr/solve.hpp"

namespace eclqr::io {

struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Strict JSON problem format; unknown keys are rejected. Dynamics and cost
/// matrices may be given once (broadcast over the horizon) or as per-step
/// lists.
EcLqrProblem load_problem(const std::string& path);
EcLqrProblem parse_problem(const std::string& text);
void save_problem(const EcLqrProblem& p, const std::string& path);

/// Header "t,x_0..x_{n-1},u_0..u_{m-1}", one row per t = 0..T with empty
/// control columns on the final row. 12 significant digits.
void write_trajectory_csv(std::ostream& os, const EcLqrProblem& p, const std::vector<Vec>& xs,
                          const std::vector<Vec>& us);

/// One row per control per parent: t,parent_kind,parent_t,K row-major...,k...
void write_gains_csv(std::ostream& os, const std::vector<Policy>& policies);

/// One row per control: t,V row-major...,v...,H row-major...,h...
void write_values_csv(std::ostream& os, const std::vector<ValueRecord>& values,
                      const std::vector<ConstraintToGo>& ctgs);

// Process exit codes shared by all subcommands.
constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitUnderdetermined = 3;
constexpr int kExitBadOverride = 4;
constexpr int kExitToleranceFail = 5;

int cmd_solve(const std::string& problem_path, const std::string& traj_path,
              const std::string& gains_path, const std::string& values_path, std::ostream& out,
              std::ostream& err);

int cmd_simulate(const std::string& problem_path, const std::string& x0_csv,
                 const std::string& traj_path, std::ostream& out, std::ostream& err);

int cmd_verify(const std::string& problem_path, std::ostream& out, std::ostream& err);

}  // namespace eclqr::io
