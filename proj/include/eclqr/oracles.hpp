#pragma once

#include <vector>

#include "eclqr/problem.hpp"

namespace eclqr::oracles {

/// Classical discrete-time Riccati backward pass: P[T] = QxxT,
/// K[t] = (Quu + Fu' P[t+1] Fu)^-1 Fu' P[t+1] Fx,
/// P[t] = Qxx + Fx' P[t+1] Fx - Fx' P[t+1] Fu K[t].
struct RiccatiResult {
  std::vector<Mat> K;  // t = 0..T-1
  std::vector<Mat> P;  // t = 0..T
};

/// Standard-LQR ground truth; the problem must carry no local or cross
/// constraints (the initial condition is fine).
RiccatiResult riccati(const EcLqrProblem& p);

/// Primal/dual solution of the dense equality-constrained QP. z stacks all
/// states then all controls, each group in time order.
struct KktSolution {
  Vec z;
  Vec lambda;
  double cost = 0.0;
};

/// Assembles the full dense objective and constraint set and solves the
/// symmetric indefinite KKT system by a pivoted dense factorization.
/// Deliberately O(T^3): correctness over speed.
KktSolution kkt_solve(const EcLqrProblem& p);

std::vector<Vec> kkt_states(const KktSolution& s, const EcLqrProblem& p);
std::vector<Vec> kkt_controls(const KktSolution& s, const EcLqrProblem& p);

}  // namespace eclqr::oracles
