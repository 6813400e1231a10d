#pragma once

#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eclqr/linalg.hpp"

namespace eclqr::graph {

using linalg::Mat;
using linalg::Vec;

enum class VarKind { Control, State };

/// A state or control variable at one time step. Totally ordered by ascending
/// time, control before state at equal time, which matches the column layout
/// used when stacking adjacent factors.
struct VarKey {
  VarKind kind = VarKind::State;
  int t = 0;

  friend auto operator<=>(const VarKey& a, const VarKey& b) {
    if (auto c = a.t <=> b.t; c != 0) return c;
    return static_cast<int>(a.kind) <=> static_cast<int>(b.kind);
  }
  friend bool operator==(const VarKey&, const VarKey&) = default;
};

inline VarKey state(int t) { return {VarKind::State, t}; }
inline VarKey control(int t) { return {VarKind::Control, t}; }

std::string to_string(const VarKey& key);

enum class FactorKind { Objective, Constraint };

/// One block row of the stacked system, attached to an ordered set of
/// variables. Objective factors are stored pre-whitened (unit row weights);
/// Constraint factors carry hard rows.
struct Factor {
  FactorKind kind = FactorKind::Objective;
  std::vector<VarKey> keys;
  std::vector<Mat> blocks;
  Vec rhs;

  Eigen::Index rows() const { return rhs.size(); }
};

struct FactorGraph {
  std::map<VarKey, int> dims;
  std::vector<Factor> factors;

  void add_variable(const VarKey& key, int dim);
  void add(Factor f);
};

/// Elimination output for one variable: an affine expression for the frontal
/// variable in its separator, with a unit-diagonal upper-triangular frontal
/// block. Row tags record whether a row came from a finite pivot or a hard
/// constraint.
struct Conditional {
  VarKey frontal;
  std::vector<VarKey> parents;
  Mat frontal_block;
  std::vector<Mat> parent_blocks;
  Vec rhs;
  std::vector<linalg::RowWeight> tags;
};

struct BayesNet {
  std::vector<Conditional> conditionals;
  std::vector<Factor> residual_factors;
  double cost_offset = 0.0;
};

struct EliminateOneResult {
  Conditional conditional;
  std::vector<Factor> new_factors;
  FactorGraph graph;
};

/// Eliminates `key`: stacks its adjacent factors, factorizes with
/// linalg::eliminate_block, and returns the conditional, the factor(s) left
/// on the separator (objective and constraint rows split apart), and the
/// reduced graph.
EliminateOneResult eliminate_one(const FactorGraph& g, const VarKey& key);

using StepObserver =
    std::function<void(const VarKey& key, const Conditional&, const std::vector<Factor>&)>;

/// Runs eliminate_one over the full ordering (which must be a permutation of
/// the graph's variables) and assembles the Bayes net. Constant objective
/// rows shed along the way accumulate into cost_offset; a leftover constraint
/// constant is an infeasibility.
BayesNet eliminate_all(const FactorGraph& g, const std::vector<VarKey>& ordering,
                       const StepObserver& observer = {});

/// Back-substitution through the Bayes net in reverse elimination order.
std::map<VarKey, Vec> solve_assignment(const BayesNet& bn);

}  // namespace eclqr::graph
