#include "eclqr/solve.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <map>

namespace eclqr {

using graph::Conditional;
using graph::Factor;
using graph::FactorGraph;
using graph::FactorKind;
using graph::VarKey;
using graph::VarKind;

namespace {

void require_symmetric(const Mat& q, const char* what) {
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidCost(std::string(what) + " must be symmetric");
}

/// Symmetric square root of a PSD matrix; rejects indefinite input.
Mat psd_sqrt(const Mat& q, const char* what) {
  require_symmetric(q, what);
  Eigen::SelfAdjointEigenSolver<Mat> es(q);
  if (es.info() != Eigen::Success) throw InvalidCost(std::string(what) + ": eigensolve failed");
  const Vec& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-10 * scale)
    throw InvalidCost(std::string(what) + " must be positive semidefinite");
  const Vec s = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

/// Cholesky-based whitening root of a strictly positive definite matrix.
Mat pd_sqrt(const Mat& q, const char* what) {
  require_symmetric(q, what);
  Eigen::LLT<Mat> llt(q);
  if (llt.info() != Eigen::Success)
    throw InvalidCost(std::string(what) + " must be positive definite");
  return llt.matrixU();
}

Mat solve_unit_upper(const Mat& u, const Mat& rhs) {
  return u.triangularView<Eigen::Upper>().solve(rhs);
}

}  // namespace

FactorGraph build_graph(const EcLqrProblem& p) {
  p.check();
  FactorGraph g;
  for (int t = 0; t <= p.T; ++t) g.add_variable(graph::state(t), p.n);
  for (int t = 0; t < p.T; ++t) g.add_variable(graph::control(t), p.m);

  auto add_unary_objective = [&g](const VarKey& key, Mat root) {
    Factor f;
    f.kind = FactorKind::Objective;
    f.keys = {key};
    f.rhs = Vec::Zero(root.rows());
    f.blocks = {std::move(root)};
    g.add(std::move(f));
  };

  {
    Factor init;
    init.kind = FactorKind::Constraint;
    init.keys = {graph::state(0)};
    init.blocks = {Mat::Identity(p.n, p.n)};
    init.rhs = p.x0;
    g.add(std::move(init));
  }

  for (int t = 0; t < p.T; ++t) {
    if (!p.Qxx[t].isZero(0.0)) add_unary_objective(graph::state(t), psd_sqrt(p.Qxx[t], "Qxx"));
    if (!p.Quu[t].isZero(0.0)) add_unary_objective(graph::control(t), pd_sqrt(p.Quu[t], "Quu"));
    Factor dyn;
    dyn.kind = FactorKind::Constraint;
    dyn.keys = {graph::state(t + 1), graph::state(t), graph::control(t)};
    dyn.blocks = {Mat::Identity(p.n, p.n), -p.Fx[t], -p.Fu[t]};
    dyn.rhs = Vec::Zero(p.n);
    g.add(std::move(dyn));
  }
  if (!p.QxxT.isZero(0.0)) add_unary_objective(graph::state(p.T), psd_sqrt(p.QxxT, "QxxT"));

  // Local constraints enter as Gx x + Gu u = -g.
  for (const auto& lc : p.local_constraints) {
    Factor f;
    f.kind = FactorKind::Constraint;
    f.keys = {graph::state(lc.t)};
    f.blocks = {lc.Gx};
    if (lc.Gu.size() > 0) {
      f.keys.push_back(graph::control(lc.t));
      f.blocks.push_back(lc.Gu);
    }
    f.rhs = -lc.g;
    g.add(std::move(f));
  }

  // Cross-time-step constraints: sum of terms = -s, duplicate variables coalesced.
  for (const auto& cc : p.cross_constraints) {
    std::map<VarKey, Mat> coeffs;
    for (const auto& term : cc.terms) {
      const VarKey key{term.kind, term.t};
      auto [it, fresh] = coeffs.emplace(key, term.S);
      if (!fresh) it->second += term.S;
    }
    Factor f;
    f.kind = FactorKind::Constraint;
    for (auto& [key, block] : coeffs) {
      f.keys.push_back(key);
      f.blocks.push_back(std::move(block));
    }
    f.rhs = -cc.s;
    g.add(std::move(f));
  }
  return g;
}

std::vector<VarKey> default_ordering(const EcLqrProblem& p) {
  std::vector<VarKey> ordering;
  ordering.reserve(2 * static_cast<std::size_t>(p.T) + 1);
  for (int t = p.T; t >= 1; --t) {
    ordering.push_back(graph::state(t));
    ordering.push_back(graph::control(t - 1));
  }
  ordering.push_back(graph::state(0));
  return ordering;
}

Solution solve(const EcLqrProblem& p) {
  FactorGraph g = build_graph(p);

  struct ControlStep {
    Conditional cond;
    std::vector<Factor> new_factors;
  };
  std::map<int, ControlStep> steps;
  auto observer = [&steps](const VarKey& key, const Conditional& cond,
                           const std::vector<Factor>& new_factors) {
    if (key.kind == VarKind::Control) steps.emplace(key.t, ControlStep{cond, new_factors});
  };

  graph::BayesNet bn = graph::eliminate_all(g, default_ordering(p), observer);
  auto assignment = graph::solve_assignment(bn);

  Solution sol;
  sol.xs.resize(static_cast<std::size_t>(p.T) + 1);
  sol.us.resize(static_cast<std::size_t>(p.T));
  for (int t = 0; t <= p.T; ++t) sol.xs[t] = assignment.at(graph::state(t));
  for (int t = 0; t < p.T; ++t) sol.us[t] = assignment.at(graph::control(t));

  for (const auto& [t, step] : steps) {
    const Conditional& cond = step.cond;

    Policy pol;
    pol.t = t;
    pol.parents = cond.parents;
    for (const auto& block : cond.parent_blocks)
      pol.K_blocks.push_back(solve_unit_upper(cond.frontal_block, block));
    pol.k = solve_unit_upper(cond.frontal_block, cond.rhs);
    sol.policies.push_back(std::move(pol));

    // Value / constraint-to-go over the stacked parent vector: objective and
    // constraint rows surviving this elimination, plus the native state cost.
    std::vector<Eigen::Index> offsets(cond.parents.size());
    Eigen::Index width = 0;
    for (std::size_t s = 0; s < cond.parents.size(); ++s) {
      offsets[s] = width;
      width += g.dims.at(cond.parents[s]);
    }
    auto column_of = [&](const VarKey& key) -> Eigen::Index {
      const auto pos = std::lower_bound(cond.parents.begin(), cond.parents.end(), key);
      return offsets[static_cast<std::size_t>(pos - cond.parents.begin())];
    };

    ValueRecord value;
    value.t = t;
    value.parents = cond.parents;
    ConstraintToGo ctg;
    ctg.t = t;
    ctg.parents = cond.parents;

    Eigen::Index obj_rows = (!p.Qxx[t].isZero(0.0)) ? p.n : 0;
    Eigen::Index con_rows = 0;
    for (const auto& f : step.new_factors)
      (f.kind == FactorKind::Objective ? obj_rows : con_rows) += f.rows();

    Mat obj_a = Mat::Zero(obj_rows, width);
    Vec obj_b = Vec::Zero(obj_rows);
    ctg.H = Mat::Zero(con_rows, width);
    ctg.h = Vec::Zero(con_rows);
    Eigen::Index obj_at = 0, con_at = 0;
    for (const auto& f : step.new_factors) {
      const Eigen::Index nr = f.rows();
      Mat& target = (f.kind == FactorKind::Objective) ? obj_a : ctg.H;
      const Eigen::Index at = (f.kind == FactorKind::Objective) ? obj_at : con_at;
      for (std::size_t ki = 0; ki < f.keys.size(); ++ki)
        target.block(at, column_of(f.keys[ki]), nr, f.blocks[ki].cols()) = f.blocks[ki];
      if (f.kind == FactorKind::Objective) {
        obj_b.segment(obj_at, nr) = f.rhs;
        obj_at += nr;
      } else {
        ctg.h.segment(con_at, nr) = f.rhs;
        con_at += nr;
      }
    }
    if (obj_rows > obj_at) {
      // Native objective on x_t, whitened like the graph factor.
      const auto xt = std::lower_bound(cond.parents.begin(), cond.parents.end(), graph::state(t));
      if (xt != cond.parents.end() && *xt == graph::state(t))
        obj_a.block(obj_at, column_of(graph::state(t)), p.n, p.n) = psd_sqrt(p.Qxx[t], "Qxx");
    }
    value.V = obj_a.transpose() * obj_a;
    value.v = 2.0 * obj_a.transpose() * obj_b;
    sol.values.push_back(std::move(value));
    sol.ctgs.push_back(std::move(ctg));
  }

  auto [cost, violation] = evaluate(p, sol.xs, sol.us);
  sol.cost = cost;
  sol.max_violation = violation;
  return sol;
}

std::pair<std::vector<Vec>, std::vector<Vec>> rollout(const EcLqrProblem& p,
                                                      const std::vector<Policy>& policies,
                                                      const std::optional<Vec>& x0_override) {
  p.check();
  std::vector<const Policy*> by_t(static_cast<std::size_t>(p.T), nullptr);
  for (const auto& pol : policies) {
    if (pol.t < 0 || pol.t >= p.T) throw std::invalid_argument("rollout: policy time out of range");
    by_t[pol.t] = &pol;
  }
  for (int t = 0; t < p.T; ++t)
    if (!by_t[t]) throw std::invalid_argument("rollout: missing policy for t=" + std::to_string(t));

  Vec x = x0_override.value_or(p.x0);
  if (x.size() != p.n) throw DimensionMismatch("rollout: x0 override must have length n");

  std::vector<Vec> xs(static_cast<std::size_t>(p.T) + 1);
  std::vector<Vec> us(static_cast<std::size_t>(p.T));
  xs[0] = x;
  for (int t = 0; t < p.T; ++t) {
    const Policy& pol = *by_t[t];
    if (pol.parents.size() != pol.K_blocks.size() || pol.k.size() != p.m)
      throw DimensionMismatch("rollout: malformed policy at t=" + std::to_string(t));
    Vec u = pol.k;
    for (std::size_t j = 0; j < pol.parents.size(); ++j) {
      const VarKey& parent = pol.parents[j];
      if (parent.kind != VarKind::State || parent.t > t)
        throw MissingParent("rollout: policy at t=" + std::to_string(t) +
                            " depends on unvisited " + graph::to_string(parent));
      u.noalias() -= pol.K_blocks[j] * xs[parent.t];
    }
    us[t] = u;
    xs[t + 1] = p.Fx[t] * xs[t] + p.Fu[t] * us[t];
  }
  return {std::move(xs), std::move(us)};
}

std::pair<double, double> evaluate(const EcLqrProblem& p, const std::vector<Vec>& xs,
                                   const std::vector<Vec>& us) {
  p.check();
  if (xs.size() != static_cast<std::size_t>(p.T) + 1 || us.size() != static_cast<std::size_t>(p.T))
    throw DimensionMismatch("evaluate: trajectory lengths must be T+1 states, T controls");
  for (const auto& x : xs)
    if (x.size() != p.n) throw DimensionMismatch("evaluate: state dimension mismatch");
  for (const auto& u : us)
    if (u.size() != p.m) throw DimensionMismatch("evaluate: control dimension mismatch");

  double cost = xs[p.T].dot(p.QxxT * xs[p.T]);
  for (int t = 0; t < p.T; ++t)
    cost += xs[t].dot(p.Qxx[t] * xs[t]) + us[t].dot(p.Quu[t] * us[t]);

  double violation = (xs[0] - p.x0).cwiseAbs().maxCoeff();
  for (int t = 0; t < p.T; ++t) {
    const Vec r = xs[t + 1] - p.Fx[t] * xs[t] - p.Fu[t] * us[t];
    violation = std::max(violation, r.cwiseAbs().maxCoeff());
  }
  for (const auto& lc : p.local_constraints) {
    Vec r = lc.Gx * xs[lc.t] + lc.g;
    if (lc.Gu.size() > 0) r += lc.Gu * us[lc.t];
    violation = std::max(violation, r.cwiseAbs().maxCoeff());
  }
  for (const auto& cc : p.cross_constraints) {
    Vec r = cc.s;
    for (const auto& term : cc.terms)
      r += term.S * (term.kind == VarKind::State ? xs[term.t] : us[term.t]);
    violation = std::max(violation, r.cwiseAbs().maxCoeff());
  }
  return {cost, violation};
}

}  // namespace eclqr
