#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eclqr/io.hpp"
#include "eclqr/oracles.hpp"
#include "eclqr/solve.hpp"

namespace py = pybind11;
using namespace eclqr;

namespace {

Mat stack_states(const std::vector<Vec>& xs) {
  if (xs.empty()) return Mat(0, 0);
  Mat out(static_cast<Eigen::Index>(xs.size()), xs[0].size());
  for (std::size_t t = 0; t < xs.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = xs[t];
  return out;
}

std::vector<Vec> unstack(const Mat& rows) {
  std::vector<Vec> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index t = 0; t < rows.rows(); ++t) out[static_cast<std::size_t>(t)] = rows.row(t);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Equality-constrained LQR solver on constrained Gaussian factor graphs";

  py::register_exception<Infeasible>(m, "InfeasibleError");
  py::register_exception<Underdetermined>(m, "UnderdeterminedError");
  py::register_exception<InvalidCost>(m, "InvalidCostError");

  py::class_<LocalConstraint>(m, "LocalConstraint")
      .def(py::init([](int t, Mat gx, std::optional<Mat> gu, Vec g) {
             LocalConstraint lc;
             lc.t = t;
             lc.Gx = std::move(gx);
             if (gu) lc.Gu = std::move(*gu);
             lc.g = std::move(g);
             return lc;
           }),
           py::arg("t"), py::arg("Gx"), py::arg("Gu") = std::nullopt, py::arg("g"))
      .def_readwrite("t", &LocalConstraint::t)
      .def_readwrite("Gx", &LocalConstraint::Gx)
      .def_readwrite("Gu", &LocalConstraint::Gu)
      .def_readwrite("g", &LocalConstraint::g);

  py::class_<CrossTerm>(m, "CrossTerm")
      .def(py::init([](const std::string& kind, int t, Mat s) {
             if (kind != "x" && kind != "u")
               throw std::invalid_argument("CrossTerm kind must be 'x' or 'u'");
             return CrossTerm{kind == "x" ? graph::VarKind::State : graph::VarKind::Control, t,
                              std::move(s)};
           }),
           py::arg("kind"), py::arg("t"), py::arg("S"))
      .def_property_readonly(
          "kind", [](const CrossTerm& t) { return t.kind == graph::VarKind::State ? "x" : "u"; })
      .def_readwrite("t", &CrossTerm::t)
      .def_readwrite("S", &CrossTerm::S);

  py::class_<CrossConstraint>(m, "CrossConstraint")
      .def(py::init([](std::vector<CrossTerm> terms, Vec s) {
             return CrossConstraint{std::move(terms), std::move(s)};
           }),
           py::arg("terms"), py::arg("s"))
      .def_readwrite("terms", &CrossConstraint::terms)
      .def_readwrite("s", &CrossConstraint::s);

  py::class_<EcLqrProblem>(m, "Problem")
      .def(py::init([](int n, int m, int T, const Mat& qxx, const Mat& quu, const Mat& qxxT,
                       const Mat& fx, const Mat& fu, const Vec& x0) {
             return EcLqrProblem::time_invariant(n, m, T, qxx, quu, qxxT, fx, fu, x0);
           }),
           py::arg("n"), py::arg("m"), py::arg("T"), py::arg("Qxx"), py::arg("Quu"),
           py::arg("QxxT"), py::arg("Fx"), py::arg("Fu"), py::arg("x0"))
      .def_readwrite("n", &EcLqrProblem::n)
      .def_readwrite("m", &EcLqrProblem::m)
      .def_readwrite("T", &EcLqrProblem::T)
      .def_readwrite("Qxx", &EcLqrProblem::Qxx)
      .def_readwrite("Quu", &EcLqrProblem::Quu)
      .def_readwrite("QxxT", &EcLqrProblem::QxxT)
      .def_readwrite("Fx", &EcLqrProblem::Fx)
      .def_readwrite("Fu", &EcLqrProblem::Fu)
      .def_readwrite("x0", &EcLqrProblem::x0)
      .def_readwrite("local_constraints", &EcLqrProblem::local_constraints)
      .def_readwrite("cross_constraints", &EcLqrProblem::cross_constraints)
      .def("check", &EcLqrProblem::check);

  py::class_<Policy>(m, "Policy")
      .def_readonly("t", &Policy::t)
      .def_property_readonly("parents",
                             [](const Policy& p) {
                               std::vector<std::pair<std::string, int>> out;
                               for (const auto& key : p.parents)
                                 out.emplace_back(
                                     key.kind == graph::VarKind::State ? "x" : "u", key.t);
                               return out;
                             })
      .def_readonly("K_blocks", &Policy::K_blocks)
      .def_readonly("k", &Policy::k);

  py::class_<ValueRecord>(m, "ValueRecord")
      .def_readonly("t", &ValueRecord::t)
      .def_readonly("V", &ValueRecord::V)
      .def_readonly("v", &ValueRecord::v);

  py::class_<ConstraintToGo>(m, "ConstraintToGo")
      .def_readonly("t", &ConstraintToGo::t)
      .def_readonly("H", &ConstraintToGo::H)
      .def_readonly("h", &ConstraintToGo::h);

  py::class_<Solution>(m, "Solution")
      .def_property_readonly("xs", [](const Solution& s) { return stack_states(s.xs); })
      .def_property_readonly("us", [](const Solution& s) { return stack_states(s.us); })
      .def_readonly("policies", &Solution::policies)
      .def_readonly("values", &Solution::values)
      .def_readonly("ctgs", &Solution::ctgs)
      .def_readonly("cost", &Solution::cost)
      .def_readonly("max_violation", &Solution::max_violation);

  py::class_<oracles::RiccatiResult>(m, "RiccatiResult")
      .def_readonly("K", &oracles::RiccatiResult::K)
      .def_readonly("P", &oracles::RiccatiResult::P);

  py::class_<oracles::KktSolution>(m, "KktSolution")
      .def_readonly("z", &oracles::KktSolution::z)
      .def_readonly("lambda_", &oracles::KktSolution::lambda)
      .def_readonly("cost", &oracles::KktSolution::cost);

  m.def("solve", &solve, py::arg("problem"),
        "Solve the problem; returns trajectories, feedback policies, value and "
        "constraint-to-go records.");
  m.def(
      "rollout",
      [](const EcLqrProblem& p, const std::vector<Policy>& policies,
         std::optional<Vec> x0) {
        auto [xs, us] = rollout(p, policies, x0);
        return py::make_tuple(stack_states(xs), stack_states(us));
      },
      py::arg("problem"), py::arg("policies"), py::arg("x0") = std::nullopt,
      "Forward-simulate the policies; returns (xs, us) row-stacked.");
  m.def(
      "evaluate",
      [](const EcLqrProblem& p, const Mat& xs, const Mat& us) {
        auto [cost, violation] = evaluate(p, unstack(xs), unstack(us));
        return py::make_tuple(cost, violation);
      },
      py::arg("problem"), py::arg("xs"), py::arg("us"),
      "Cost and max constraint violation of a row-stacked trajectory.");
  m.def("riccati", &oracles::riccati, py::arg("problem"));
  m.def(
      "kkt_solve",
      [](const EcLqrProblem& p) {
        auto sol = oracles::kkt_solve(p);
        return py::make_tuple(stack_states(oracles::kkt_states(sol, p)),
                              stack_states(oracles::kkt_controls(sol, p)), sol.cost);
      },
      py::arg("problem"), "Dense KKT ground-truth solve; returns (xs, us, cost).");
  m.def("load_problem", &io::load_problem, py::arg("path"));
  m.def("save_problem", &io::save_problem, py::arg("problem"), py::arg("path"));
}
