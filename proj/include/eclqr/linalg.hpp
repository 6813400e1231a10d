#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "eclqr/errors.hpp"

namespace eclqr::linalg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Entries count as zero when |entry| <= kZeroTol * max(1, row max-abs).
constexpr double kZeroTol = 1e-12;

/// Per-row weight of a stacked system: a finite scalar precision or a hard
/// constraint. Hard constraints carry no numeric payload; an infinite weight
/// is never stored as a floating-point infinity.
class RowWeight {
 public:
  static RowWeight finite(double precision);
  static RowWeight constrained() { return RowWeight(0.0, true); }

  bool is_constrained() const { return constrained_; }
  double precision() const;

  friend bool operator==(const RowWeight&, const RowWeight&) = default;

 private:
  RowWeight(double precision, bool constrained)
      : precision_(precision), constrained_(constrained) {}
  double precision_;
  bool constrained_;
};

/// Stacked rows [a|b] with one weight per row.
struct WeightedSystem {
  Mat a;
  Vec b;
  std::vector<RowWeight> weights;

  Eigen::Index rows() const { return a.rows(); }
  Eigen::Index cols() const { return a.cols(); }
  void check() const;
};

/// Result of eliminating the leading k columns of a WeightedSystem.
///
/// `eliminated` holds exactly k rows, upper triangular with unit diagonal on
/// the first k columns: row j expresses variable j in terms of columns > j.
/// Gram-Schmidt rows keep their squashed column norm as a Finite precision so
/// stacking sqrt(precision)-scaled eliminated rows with the remainder
/// reproduces the information matrix; constraint pivots stay Constrained.
/// `remainder` is exactly zero on the first k columns.
struct PartialFactorization {
  WeightedSystem eliminated;
  WeightedSystem remainder;
};

/// Eliminates the first k columns of `sys` by the constrained, weighted
/// Gram-Schmidt process: columns with a usable hard-constraint entry are
/// removed by pivoted row reduction (direct substitution), all other columns
/// by weighted Gram-Schmidt over the finite rows.
///
/// Throws Underdetermined if a column has no pivot of either kind, Infeasible
/// if a constraint row reduces to 0 = rhs with |rhs| above tolerance.
PartialFactorization eliminate_block(const WeightedSystem& sys, Eigen::Index k);

/// One solved variable block: rows [frontal | parents] = rhs, with the
/// frontal sub-matrix unit-diagonal upper-triangular.
struct EliminatedBlock {
  int id = 0;
  Mat frontal;
  std::vector<std::pair<int, Mat>> parents;
  Vec rhs;
};

using Assignment = std::map<int, Vec>;

/// Evaluates eliminated blocks in the given order; every parent must be
/// resolved (by `known` or an earlier block) before its row is applied.
Assignment back_solve(const std::vector<EliminatedBlock>& blocks, Assignment known = {});

/// Thread-local multiply-accumulate counter covering eliminate_block and
/// back_solve, used for complexity measurements.
std::uint64_t mac_count();
void reset_mac_count();

}  // namespace eclqr::linalg
