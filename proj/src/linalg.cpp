#include "eclqr/linalg.hpp"

#include <cmath>

namespace eclqr::linalg {

namespace {

thread_local std::uint64_t g_mac_count = 0;

inline void count_macs(std::uint64_t n) { g_mac_count += n; }

inline bool significant(double entry, double row_scale) {
  return std::abs(entry) > kZeroTol * std::max(1.0, row_scale);
}

}  // namespace

std::uint64_t mac_count() { return g_mac_count; }
void reset_mac_count() { g_mac_count = 0; }

RowWeight RowWeight::finite(double precision) {
  if (!(precision > 0.0) || !std::isfinite(precision))
    throw std::invalid_argument("RowWeight::finite: precision must be positive and finite");
  return RowWeight(precision, false);
}

double RowWeight::precision() const {
  if (constrained_) throw std::logic_error("RowWeight::precision: row is constrained");
  return precision_;
}

void WeightedSystem::check() const {
  if (a.rows() != b.size() || static_cast<std::size_t>(a.rows()) != weights.size())
    throw DimensionMismatch("WeightedSystem: row counts of a, b, weights disagree");
  if (!a.allFinite() || !b.allFinite())
    throw std::invalid_argument("WeightedSystem: entries must be finite");
}

PartialFactorization eliminate_block(const WeightedSystem& sys, Eigen::Index k) {
  sys.check();
  const Eigen::Index r = sys.rows();
  const Eigen::Index c = sys.cols();
  if (k < 0 || k > c) throw DimensionMismatch("eliminate_block: k exceeds column count");

  // Whiten: scale every finite row to unit precision up front.
  Mat a = sys.a;
  Vec b = sys.b;
  std::vector<char> constrained(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    constrained[i] = sys.weights[i].is_constrained();
    if (!constrained[i]) {
      const double s = std::sqrt(sys.weights[i].precision());
      if (s != 1.0) {
        a.row(i) *= s;
        b(i) *= s;
        count_macs(static_cast<std::uint64_t>(c) + 1);
      }
    }
  }

  std::vector<char> active(r, 1);
  Mat elim_a = Mat::Zero(k, c);
  Vec elim_b = Vec::Zero(k);
  std::vector<RowWeight> elim_w;
  elim_w.reserve(static_cast<std::size_t>(k));

  for (Eigen::Index j = 0; j < k; ++j) {
    // Hard-constraint pivot takes precedence: largest |entry|, lowest row on ties.
    Eigen::Index pivot = -1;
    double pivot_abs = 0.0;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (!active[i] || !constrained[i]) continue;
      const double v = std::abs(a(i, j));
      if (significant(a(i, j), a.row(i).cwiseAbs().maxCoeff()) && v > pivot_abs) {
        pivot = i;
        pivot_abs = v;
      }
    }

    if (pivot >= 0) {
      const double p = a(pivot, j);
      a.row(pivot) /= p;
      b(pivot) /= p;
      a(pivot, j) = 1.0;
      count_macs(static_cast<std::uint64_t>(c) + 1);
      for (Eigen::Index i = 0; i < r; ++i) {
        if (!active[i] || i == pivot) continue;
        const double f = a(i, j);
        if (f != 0.0) {
          a.row(i) -= f * a.row(pivot);
          b(i) -= f * b(pivot);
          count_macs(static_cast<std::uint64_t>(c) + 1);
        }
        a(i, j) = 0.0;
      }
      elim_a.row(j) = a.row(pivot);
      elim_b(j) = b(pivot);
      elim_w.push_back(RowWeight::constrained());
      active[pivot] = 0;
    } else {
      // Weighted Gram-Schmidt over the finite rows. Sub-tolerance entries in
      // this column (including stray constraint entries) are snapped to zero.
      double nu2 = 0.0;
      for (Eigen::Index i = 0; i < r; ++i) {
        if (!active[i] || a(i, j) == 0.0) continue;
        if (!significant(a(i, j), a.row(i).cwiseAbs().maxCoeff()) || constrained[i]) {
          a(i, j) = 0.0;
          continue;
        }
        nu2 += a(i, j) * a(i, j);
        count_macs(1);
      }
      if (nu2 == 0.0) throw Underdetermined(static_cast<int>(j));
      const double nu = std::sqrt(nu2);

      Eigen::RowVectorXd comb = Eigen::RowVectorXd::Zero(c);
      double comb_b = 0.0;
      for (Eigen::Index i = 0; i < r; ++i) {
        if (!active[i] || constrained[i]) continue;
        const double f = a(i, j);
        if (f != 0.0) {
          comb += f * a.row(i);
          comb_b += f * b(i);
          count_macs(static_cast<std::uint64_t>(c) + 1);
        }
      }
      comb /= nu;
      comb_b /= nu;
      comb(j) = nu;
      count_macs(static_cast<std::uint64_t>(c) + 1);

      for (Eigen::Index i = 0; i < r; ++i) {
        if (!active[i] || constrained[i]) continue;
        const double f = a(i, j) / nu;
        if (f != 0.0) {
          a.row(i) -= f * comb;
          b(i) -= f * comb_b;
          count_macs(static_cast<std::uint64_t>(c) + 1);
        }
        a(i, j) = 0.0;
      }

      // Stored with unit diagonal; nu2 survives as the row precision.
      elim_a.row(j) = comb / nu;
      elim_b(j) = comb_b / nu;
      elim_a(j, j) = 1.0;
      count_macs(static_cast<std::uint64_t>(c) + 1);
      elim_w.push_back(RowWeight::finite(nu2));
    }
    elim_a.row(j).head(j).setZero();
  }

  // Compact the finite residual when it has more rows than its rank bound:
  // plain Gram-Schmidt over the trailing columns rotates it into the
  // upper-triangular tail of the local QR, so remainder factors stay bounded
  // and elimination cost stays linear in the trajectory length.
  Eigen::Index active_finite = 0;
  for (Eigen::Index i = 0; i < r; ++i)
    if (active[i] && !constrained[i]) ++active_finite;

  Mat compact_a;
  Vec compact_b;
  Eigen::Index compact_rows = 0;
  if (active_finite > c - k) {
    compact_a = Mat::Zero(c - k, c);
    compact_b = Vec::Zero(c - k);
    for (Eigen::Index j = k; j < c; ++j) {
      double nu2 = 0.0;
      for (Eigen::Index i = 0; i < r; ++i) {
        if (!active[i] || constrained[i] || a(i, j) == 0.0) continue;
        if (!significant(a(i, j), a.row(i).cwiseAbs().maxCoeff())) {
          a(i, j) = 0.0;
          continue;
        }
        nu2 += a(i, j) * a(i, j);
        count_macs(1);
      }
      if (nu2 == 0.0) continue;
      const double nu = std::sqrt(nu2);
      Eigen::RowVectorXd comb = Eigen::RowVectorXd::Zero(c);
      double comb_b = 0.0;
      for (Eigen::Index i = 0; i < r; ++i) {
        if (!active[i] || constrained[i]) continue;
        const double f = a(i, j);
        if (f != 0.0) {
          comb += f * a.row(i);
          comb_b += f * b(i);
          count_macs(static_cast<std::uint64_t>(c) + 1);
        }
      }
      comb /= nu;
      comb_b /= nu;
      comb(j) = nu;
      count_macs(static_cast<std::uint64_t>(c) + 1);
      for (Eigen::Index i = 0; i < r; ++i) {
        if (!active[i] || constrained[i]) continue;
        const double f = a(i, j) / nu;
        if (f != 0.0) {
          a.row(i) -= f * comb;
          b(i) -= f * comb_b;
          count_macs(static_cast<std::uint64_t>(c) + 1);
        }
        a(i, j) = 0.0;
      }
      comb.head(k).setZero();
      compact_a.row(compact_rows) = comb;
      compact_b(compact_rows) = comb_b;
      ++compact_rows;
    }
  }

  // Remainder: compacted rows plus surviving input rows, with fully vanished
  // rows dropped and a feasibility check on constraint rows that lost all
  // their coefficients.
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!active[i]) continue;
    const double row_scale = (c > 0) ? a.row(i).cwiseAbs().maxCoeff() : 0.0;
    const bool coeffs_zero = !significant(row_scale, row_scale);
    const bool rhs_zero = !significant(b(i), row_scale);
    if (coeffs_zero) {
      if (constrained[i] && !rhs_zero)
        throw Infeasible("eliminate_block: constraint row reduced to 0 = " + std::to_string(b(i)));
      if (rhs_zero) continue;
    }
    keep.push_back(i);
  }

  PartialFactorization out;
  out.eliminated.a = std::move(elim_a);
  out.eliminated.b = std::move(elim_b);
  out.eliminated.weights = std::move(elim_w);
  const Eigen::Index rem_rows = compact_rows + static_cast<Eigen::Index>(keep.size());
  out.remainder.a.resize(rem_rows, c);
  out.remainder.b.resize(rem_rows);
  out.remainder.weights.reserve(static_cast<std::size_t>(rem_rows));
  for (Eigen::Index i = 0; i < compact_rows; ++i) {
    out.remainder.a.row(i) = compact_a.row(i);
    out.remainder.b(i) = compact_b(i);
    out.remainder.weights.push_back(RowWeight::finite(1.0));
  }
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.remainder.a.row(compact_rows + static_cast<Eigen::Index>(i)) = a.row(keep[i]);
    out.remainder.b(compact_rows + static_cast<Eigen::Index>(i)) = b(keep[i]);
    out.remainder.weights.push_back(constrained[keep[i]] ? RowWeight::constrained()
                                                         : RowWeight::finite(1.0));
  }
  return out;
}

Assignment back_solve(const std::vector<EliminatedBlock>& blocks, Assignment known) {
  Assignment out = std::move(known);
  for (const auto& blk : blocks) {
    const Eigen::Index k = blk.frontal.rows();
    if (blk.frontal.cols() != k || blk.rhs.size() != k)
      throw DimensionMismatch("back_solve: frontal block must be square and match rhs");
    Vec v = blk.rhs;
    for (const auto& [pid, m] : blk.parents) {
      auto it = out.find(pid);
      if (it == out.end())
        throw MissingParent("back_solve: parent " + std::to_string(pid) + " unresolved");
      if (m.rows() != k || m.cols() != it->second.size())
        throw DimensionMismatch("back_solve: parent block shape mismatch");
      v.noalias() -= m * it->second;
      count_macs(static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(m.cols()));
    }
    for (Eigen::Index j = k - 1; j >= 0; --j)
      for (Eigen::Index j2 = j + 1; j2 < k; ++j2) v(j) -= blk.frontal(j, j2) * v(j2);
    count_macs(static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(k) / 2);
    out.insert_or_assign(blk.id, std::move(v));
  }
  return out;
}

}  // namespace eclqr::linalg
