#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "eclqr/problem.hpp"

namespace eclqr {

/// Feedback law u_t = -sum_j K_j * parent_j + k. Parents are states, usually
/// just x_t; under cross-time-step constraints they can include earlier
/// states.
struct Policy {
  int t = 0;
  std::vector<graph::VarKey> parents;
  std::vector<Mat> K_blocks;
  Vec k;
};

/// Cost-to-go record at control time t over the stacked parent vector z:
/// future cost = z' V z - v' z + const, taken right after u_t's elimination
/// (surviving objective rows plus the native state objective).
struct ValueRecord {
  int t = 0;
  std::vector<graph::VarKey> parents;
  Mat V;
  Vec v;
};

/// Surviving equality rows H z = h on the parent states after eliminating
/// u_t.
struct ConstraintToGo {
  int t = 0;
  std::vector<graph::VarKey> parents;
  Mat H;
  Vec h;
};

struct Solution {
  std::vector<Vec> xs;
  std::vector<Vec> us;
  std::vector<Policy> policies;
  std::vector<ValueRecord> values;
  std::vector<ConstraintToGo> ctgs;
  double cost = 0.0;
  double max_violation = 0.0;
};

/// Builds the constrained Gaussian factor graph of the problem: whitened
/// unary objective factors, hard dynamics and initial-condition factors, and
/// hard factors for the local and cross-time-step constraints.
graph::FactorGraph build_graph(const EcLqrProblem& p);

/// x_T, u_{T-1}, x_{T-1}, ..., u_0, x_0.
std::vector<graph::VarKey> default_ordering(const EcLqrProblem& p);

/// Full pipeline: build, eliminate, back-substitute; extracts feedback
/// policies from the control conditionals and value / constraint-to-go
/// records at each control elimination.
Solution solve(const EcLqrProblem& p);

/// Forward-simulates the dynamics under the given policies, optionally from
/// an overridden initial state. Multi-parent policies read back recorded
/// states.
std::pair<std::vector<Vec>, std::vector<Vec>> rollout(const EcLqrProblem& p,
                                                      const std::vector<Policy>& policies,
                                                      const std::optional<Vec>& x0_override = {});

/// Objective value and worst-case constraint residual (dynamics, initial
/// condition, local and cross constraints) of a trajectory.
std::pair<double, double> evaluate(const EcLqrProblem& p, const std::vector<Vec>& xs,
                                   const std::vector<Vec>& us);

}  // namespace eclqr
