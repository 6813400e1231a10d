#pragma once

#include <vector>

#include "eclqr/graph.hpp"

namespace eclqr {

using linalg::Mat;
using linalg::Vec;

/// Linear equality constraint on the state (and, except at the final step,
/// the control) of a single time step: Gx x_t + Gu u_t + g = 0. Gu may be
/// empty (0x0) for state-only constraints.
struct LocalConstraint {
  int t = 0;
  Mat Gx;
  Mat Gu;
  Vec g;
};

struct CrossTerm {
  graph::VarKind kind = graph::VarKind::State;
  int t = 0;
  Mat S;
};

/// Equality constraint coupling variables at arbitrary time steps:
/// sum_k S_k z_k + s = 0 over the listed terms.
struct CrossConstraint {
  std::vector<CrossTerm> terms;
  Vec s;
};

/// Finite-horizon discrete-time LQR problem with auxiliary equality
/// constraints. States run t = 0..T, controls t = 0..T-1; dynamics are
/// x_{t+1} = Fx[t] x_t + Fu[t] u_t with hard initial condition x_0.
struct EcLqrProblem {
  int n = 0;
  int m = 0;
  int T = 0;
  std::vector<Mat> Qxx;  // per step, T entries
  std::vector<Mat> Quu;  // per step, T entries
  Mat QxxT;
  std::vector<Mat> Fx;  // per step, T entries
  std::vector<Mat> Fu;  // per step, T entries
  Vec x0;
  std::vector<LocalConstraint> local_constraints;
  std::vector<CrossConstraint> cross_constraints;

  /// Broadcasts time-invariant cost and dynamics matrices over the horizon.
  static EcLqrProblem time_invariant(int n, int m, int T, const Mat& Qxx, const Mat& Quu,
                                     const Mat& QxxT, const Mat& Fx, const Mat& Fu,
                                     const Vec& x0);

  /// Dimension consistency; throws DimensionMismatch.
  void check() const;
};

/// Exact (bitwise) equality of all problem data.
bool problems_equal(const EcLqrProblem& a, const EcLqrProblem& b);

}  // namespace eclqr
