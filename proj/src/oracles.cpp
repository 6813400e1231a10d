#include "eclqr/oracles.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

namespace eclqr::oracles {

using graph::VarKind;

RiccatiResult riccati(const EcLqrProblem& p) {
  p.check();
  if (!p.local_constraints.empty() || !p.cross_constraints.empty())
    throw std::invalid_argument("riccati: only standard LQR (no auxiliary constraints)");

  RiccatiResult out;
  out.K.resize(static_cast<std::size_t>(p.T));
  out.P.resize(static_cast<std::size_t>(p.T) + 1);
  out.P[p.T] = p.QxxT;
  for (int t = p.T - 1; t >= 0; --t) {
    const Mat& pn = out.P[t + 1];
    const Mat gram = p.Quu[t] + p.Fu[t].transpose() * pn * p.Fu[t];
    Eigen::LLT<Mat> llt(gram);
    if (llt.info() != Eigen::Success)
      throw SingularGainSolve("riccati: Quu + Fu' P Fu not positive definite at t=" +
                              std::to_string(t));
    out.K[t] = llt.solve(p.Fu[t].transpose() * pn * p.Fx[t]);
    out.P[t] = p.Qxx[t] + p.Fx[t].transpose() * pn * p.Fx[t] -
               p.Fx[t].transpose() * pn * p.Fu[t] * out.K[t];
  }
  return out;
}

namespace {

struct DenseQp {
  Mat h;
  Mat c;
  Vec d;
};

DenseQp assemble(const EcLqrProblem& p) {
  const Eigen::Index nx = static_cast<Eigen::Index>(p.T + 1) * p.n;
  const Eigen::Index nu = static_cast<Eigen::Index>(p.T) * p.m;
  const Eigen::Index nz = nx + nu;

  DenseQp qp;
  qp.h = Mat::Zero(nz, nz);
  for (int t = 0; t < p.T; ++t) {
    qp.h.block(t * p.n, t * p.n, p.n, p.n) = p.Qxx[t];
    qp.h.block(nx + t * p.m, nx + t * p.m, p.m, p.m) = p.Quu[t];
  }
  qp.h.block(p.T * p.n, p.T * p.n, p.n, p.n) = p.QxxT;

  Eigen::Index rows = p.n + static_cast<Eigen::Index>(p.T) * p.n;
  for (const auto& lc : p.local_constraints) rows += lc.g.size();
  for (const auto& cc : p.cross_constraints) rows += cc.s.size();

  qp.c = Mat::Zero(rows, nz);
  qp.d = Vec::Zero(rows);
  Eigen::Index at = 0;
  qp.c.block(at, 0, p.n, p.n) = Mat::Identity(p.n, p.n);
  qp.d.segment(at, p.n) = p.x0;
  at += p.n;
  for (int t = 0; t < p.T; ++t) {
    qp.c.block(at, (t + 1) * p.n, p.n, p.n) = Mat::Identity(p.n, p.n);
    qp.c.block(at, t * p.n, p.n, p.n) = -p.Fx[t];
    qp.c.block(at, nx + t * p.m, p.n, p.m) = -p.Fu[t];
    at += p.n;
  }
  for (const auto& lc : p.local_constraints) {
    const Eigen::Index l = lc.g.size();
    qp.c.block(at, lc.t * p.n, l, p.n) = lc.Gx;
    if (lc.Gu.size() > 0) qp.c.block(at, nx + lc.t * p.m, l, p.m) = lc.Gu;
    qp.d.segment(at, l) = -lc.g;
    at += l;
  }
  for (const auto& cc : p.cross_constraints) {
    const Eigen::Index c = cc.s.size();
    for (const auto& term : cc.terms) {
      const Eigen::Index col =
          term.kind == VarKind::State ? term.t * p.n : nx + term.t * p.m;
      qp.c.block(at, col, c, term.S.cols()) += term.S;
    }
    qp.d.segment(at, c) = -cc.s;
    at += c;
  }
  return qp;
}

}  // namespace

KktSolution kkt_solve(const EcLqrProblem& p) {
  p.check();
  const DenseQp qp = assemble(p);
  const Eigen::Index nz = qp.h.rows();
  const Eigen::Index mc = qp.c.rows();
  const Eigen::Index nk = nz + mc;

  Mat kkt = Mat::Zero(nk, nk);
  kkt.topLeftCorner(nz, nz) = 2.0 * qp.h;
  kkt.topRightCorner(nz, mc) = qp.c.transpose();
  kkt.bottomLeftCorner(mc, nz) = qp.c;
  Vec rhs = Vec::Zero(nk);
  rhs.tail(mc) = qp.d;

  const double scale =
      1.0 + rhs.cwiseAbs().maxCoeff() + kkt.cwiseAbs().maxCoeff();
  auto residual_ok = [&](const Vec& sol) {
    return (kkt * sol - rhs).cwiseAbs().maxCoeff() <=
           1e-10 * scale * (1.0 + sol.cwiseAbs().maxCoeff());
  };

  Vec sol = Eigen::PartialPivLU<Mat>(kkt).solve(rhs);
  if (!sol.allFinite() || !residual_ok(sol)) {
    Eigen::FullPivLU<Mat> lu(kkt);
    sol = lu.solve(rhs);
    if (!sol.allFinite() || !residual_ok(sol)) {
      Eigen::FullPivLU<Mat> lu_c(qp.c);
      Mat aug(mc, nz + 1);
      aug << qp.c, qp.d;
      if (Eigen::FullPivLU<Mat>(aug).rank() > lu_c.rank())
        throw Infeasible("kkt_solve: inconsistent equality constraints");
      throw SingularKkt("kkt_solve: singular or degenerate KKT system");
    }
  }

  KktSolution out;
  out.z = sol.head(nz);
  out.lambda = sol.tail(mc);
  out.cost = out.z.dot(qp.h * out.z);
  return out;
}

std::vector<Vec> kkt_states(const KktSolution& s, const EcLqrProblem& p) {
  std::vector<Vec> xs(static_cast<std::size_t>(p.T) + 1);
  for (int t = 0; t <= p.T; ++t) xs[t] = s.z.segment(t * p.n, p.n);
  return xs;
}

std::vector<Vec> kkt_controls(const KktSolution& s, const EcLqrProblem& p) {
  const Eigen::Index nx = static_cast<Eigen::Index>(p.T + 1) * p.n;
  std::vector<Vec> us(static_cast<std::size_t>(p.T));
  for (int t = 0; t < p.T; ++t) us[t] = s.z.segment(nx + t * p.m, p.m);
  return us;
}

}  // namespace eclqr::oracles
