#include "eclqr/problem.hpp"

namespace eclqr {

namespace {

bool mat_equal(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

bool vec_equal(const Vec& a, const Vec& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace

EcLqrProblem EcLqrProblem::time_invariant(int n, int m, int T, const Mat& Qxx, const Mat& Quu,
                                          const Mat& QxxT, const Mat& Fx, const Mat& Fu,
                                          const Vec& x0) {
  EcLqrProblem p;
  p.n = n;
  p.m = m;
  p.T = T;
  p.Qxx.assign(static_cast<std::size_t>(T), Qxx);
  p.Quu.assign(static_cast<std::size_t>(T), Quu);
  p.QxxT = QxxT;
  p.Fx.assign(static_cast<std::size_t>(T), Fx);
  p.Fu.assign(static_cast<std::size_t>(T), Fu);
  p.x0 = x0;
  p.check();
  return p;
}

void EcLqrProblem::check() const {
  require(n >= 1 && m >= 1 && T >= 0, "EcLqrProblem: need n >= 1, m >= 1, T >= 0");
  const auto steps = static_cast<std::size_t>(T);
  require(Qxx.size() == steps && Quu.size() == steps, "EcLqrProblem: need T cost matrices");
  require(Fx.size() == steps && Fu.size() == steps, "EcLqrProblem: need T dynamics matrices");
  for (int t = 0; t < T; ++t) {
    require(Qxx[t].rows() == n && Qxx[t].cols() == n, "EcLqrProblem: Qxx must be n x n");
    require(Quu[t].rows() == m && Quu[t].cols() == m, "EcLqrProblem: Quu must be m x m");
    require(Fx[t].rows() == n && Fx[t].cols() == n, "EcLqrProblem: Fx must be n x n");
    require(Fu[t].rows() == n && Fu[t].cols() == m, "EcLqrProblem: Fu must be n x m");
  }
  require(QxxT.rows() == n && QxxT.cols() == n, "EcLqrProblem: QxxT must be n x n");
  require(x0.size() == n, "EcLqrProblem: x0 must have length n");

  for (const auto& lc : local_constraints) {
    require(lc.t >= 0 && lc.t <= T, "local constraint: t out of range");
    const Eigen::Index l = lc.g.size();
    require(l > 0 && lc.Gx.rows() == l && lc.Gx.cols() == n, "local constraint: Gx must be l x n");
    if (lc.Gu.size() > 0) {
      require(lc.t < T, "local constraint: Gu not allowed at t = T");
      require(lc.Gu.rows() == l && lc.Gu.cols() == m, "local constraint: Gu must be l x m");
    }
  }
  for (const auto& cc : cross_constraints) {
    require(!cc.terms.empty(), "cross constraint: needs at least one term");
    const Eigen::Index c = cc.s.size();
    require(c > 0, "cross constraint: s must be nonempty");
    for (const auto& term : cc.terms) {
      const bool is_state = term.kind == graph::VarKind::State;
      require(term.t >= 0 && term.t <= (is_state ? T : T - 1), "cross constraint: t out of range");
      require(term.S.rows() == c && term.S.cols() == (is_state ? n : m),
              "cross constraint: S block shape mismatch");
    }
  }
}

bool problems_equal(const EcLqrProblem& a, const EcLqrProblem& b) {
  if (a.n != b.n || a.m != b.m || a.T != b.T) return false;
  if (a.Qxx.size() != b.Qxx.size() || a.Quu.size() != b.Quu.size() || a.Fx.size() != b.Fx.size() ||
      a.Fu.size() != b.Fu.size())
    return false;
  for (std::size_t t = 0; t < a.Qxx.size(); ++t)
    if (!mat_equal(a.Qxx[t], b.Qxx[t]) || !mat_equal(a.Quu[t], b.Quu[t]) ||
        !mat_equal(a.Fx[t], b.Fx[t]) || !mat_equal(a.Fu[t], b.Fu[t]))
      return false;
  if (!mat_equal(a.QxxT, b.QxxT) || !vec_equal(a.x0, b.x0)) return false;
  if (a.local_constraints.size() != b.local_constraints.size() ||
      a.cross_constraints.size() != b.cross_constraints.size())
    return false;
  for (std::size_t i = 0; i < a.local_constraints.size(); ++i) {
    const auto& la = a.local_constraints[i];
    const auto& lb = b.local_constraints[i];
    if (la.t != lb.t || !mat_equal(la.Gx, lb.Gx) || !mat_equal(la.Gu, lb.Gu) ||
        !vec_equal(la.g, lb.g))
      return false;
  }
  for (std::size_t i = 0; i < a.cross_constraints.size(); ++i) {
    const auto& ca = a.cross_constraints[i];
    const auto& cb = b.cross_constraints[i];
    if (ca.terms.size() != cb.terms.size() || !vec_equal(ca.s, cb.s)) return false;
    for (std::size_t j = 0; j < ca.terms.size(); ++j)
      if (ca.terms[j].kind != cb.terms[j].kind || ca.terms[j].t != cb.terms[j].t ||
          !mat_equal(ca.terms[j].S, cb.terms[j].S))
        return false;
  }
  return true;
}

}  // namespace eclqr
