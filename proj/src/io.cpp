#include "eclqr/io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "eclqr/oracles.hpp"

namespace eclqr::io {

using json = nlohmann::json;
using graph::VarKind;

namespace {

[[noreturn]] void fail(const std::string& what) { throw ParseError(what); }

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) fail("unknown key \"" + key + "\" in " + where);
  }
}

Vec parse_vec(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where + " must be an array of numbers");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(where + " must contain only numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Mat parse_mat(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    fail(where + " must be a nested array (row-major matrix)");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) fail(where + " rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) fail(where + " must contain only numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

int parse_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where + " must be an integer");
  return j.get<int>();
}

/// A matrix field that is either one matrix (broadcast) or a per-step list of
/// {"t", <key>} entries covering 0..count-1 exactly.
std::vector<Mat> parse_schedule(const json& j, int count, const char* entry_key,
                                const std::string& where) {
  std::vector<Mat> out;
  if (j.is_array() && !j.empty() && j[0].is_object()) {
    out.resize(static_cast<std::size_t>(count));
    std::vector<bool> seen(static_cast<std::size_t>(count), false);
    for (const auto& item : j) {
      reject_unknown(item, {"t", entry_key}, where);
      if (!item.contains("t") || !item.contains(entry_key))
        fail(where + " entries need \"t\" and \"" + entry_key + "\"");
      const int t = parse_int(item["t"], where + ".t");
      if (t < 0 || t >= count || seen[static_cast<std::size_t>(t)])
        fail(where + ": time steps must cover 0.." + std::to_string(count - 1) + " exactly once");
      seen[static_cast<std::size_t>(t)] = true;
      out[static_cast<std::size_t>(t)] = parse_mat(item[entry_key], where);
    }
    for (bool s : seen)
      if (!s) fail(where + ": missing time steps");
  } else {
    out.assign(static_cast<std::size_t>(count), parse_mat(j, where));
  }
  return out;
}

EcLqrProblem from_json(const json& j) {
  if (!j.is_object()) fail("problem file must be a JSON object");
  reject_unknown(j, {"n", "m", "T", "dynamics", "costs", "x0", "local_constraints",
                     "cross_constraints"},
                 "problem");
  for (const char* key : {"n", "m", "T", "dynamics", "costs", "x0"})
    if (!j.contains(key)) fail(std::string("missing key \"") + key + "\"");

  EcLqrProblem p;
  p.n = parse_int(j["n"], "n");
  p.m = parse_int(j["m"], "m");
  p.T = parse_int(j["T"], "T");
  if (p.n < 1 || p.m < 1 || p.T < 0) fail("need n >= 1, m >= 1, T >= 0");

  const json& dyn = j["dynamics"];
  if (dyn.is_object()) {
    reject_unknown(dyn, {"Fx", "Fu"}, "dynamics");
    if (!dyn.contains("Fx") || !dyn.contains("Fu")) fail("dynamics needs Fx and Fu");
    p.Fx.assign(static_cast<std::size_t>(p.T), parse_mat(dyn["Fx"], "dynamics.Fx"));
    p.Fu.assign(static_cast<std::size_t>(p.T), parse_mat(dyn["Fu"], "dynamics.Fu"));
  } else if (dyn.is_array()) {
    p.Fx.resize(static_cast<std::size_t>(p.T));
    p.Fu.resize(static_cast<std::size_t>(p.T));
    std::vector<bool> seen(static_cast<std::size_t>(p.T), false);
    for (const auto& item : dyn) {
      reject_unknown(item, {"t", "Fx", "Fu"}, "dynamics");
      const int t = parse_int(item.at("t"), "dynamics.t");
      if (t < 0 || t >= p.T || seen[static_cast<std::size_t>(t)])
        fail("dynamics: time steps must cover 0..T-1 exactly once");
      seen[static_cast<std::size_t>(t)] = true;
      p.Fx[static_cast<std::size_t>(t)] = parse_mat(item.at("Fx"), "dynamics.Fx");
      p.Fu[static_cast<std::size_t>(t)] = parse_mat(item.at("Fu"), "dynamics.Fu");
    }
    for (bool s : seen)
      if (!s) fail("dynamics: missing time steps");
  } else {
    fail("dynamics must be an object or a list");
  }

  const json& costs = j["costs"];
  if (!costs.is_object()) fail("costs must be an object");
  reject_unknown(costs, {"Qxx", "Quu", "QxxT"}, "costs");
  for (const char* key : {"Qxx", "Quu", "QxxT"})
    if (!costs.contains(key)) fail(std::string("costs needs \"") + key + "\"");
  p.Qxx = parse_schedule(costs["Qxx"], p.T, "value", "costs.Qxx");
  p.Quu = parse_schedule(costs["Quu"], p.T, "value", "costs.Quu");
  const json& qxxT = costs["QxxT"];
  if (qxxT.is_array() && !qxxT.empty() && qxxT[0].is_object()) {
    if (qxxT.size() != 1) fail("costs.QxxT: only one terminal cost allowed");
    reject_unknown(qxxT[0], {"t", "value"}, "costs.QxxT");
    if (parse_int(qxxT[0].at("t"), "costs.QxxT.t") != p.T)
      fail("costs.QxxT: t must equal T");
    p.QxxT = parse_mat(qxxT[0].at("value"), "costs.QxxT");
  } else {
    p.QxxT = parse_mat(qxxT, "costs.QxxT");
  }

  p.x0 = parse_vec(j["x0"], "x0");

  if (j.contains("local_constraints")) {
    if (!j["local_constraints"].is_array()) fail("local_constraints must be a list");
    for (const auto& item : j["local_constraints"]) {
      reject_unknown(item, {"t", "Gx", "Gu", "g"}, "local_constraints");
      LocalConstraint lc;
      lc.t = parse_int(item.at("t"), "local_constraints.t");
      lc.Gx = parse_mat(item.at("Gx"), "local_constraints.Gx");
      if (item.contains("Gu")) lc.Gu = parse_mat(item["Gu"], "local_constraints.Gu");
      lc.g = parse_vec(item.at("g"), "local_constraints.g");
      p.local_constraints.push_back(std::move(lc));
    }
  }
  if (j.contains("cross_constraints")) {
    if (!j["cross_constraints"].is_array()) fail("cross_constraints must be a list");
    for (const auto& item : j["cross_constraints"]) {
      reject_unknown(item, {"terms", "s"}, "cross_constraints");
      CrossConstraint cc;
      if (!item.contains("terms") || !item["terms"].is_array())
        fail("cross_constraints needs a \"terms\" list");
      for (const auto& term_j : item["terms"]) {
        reject_unknown(term_j, {"kind", "t", "S"}, "cross_constraints.terms");
        CrossTerm term;
        const std::string kind = term_j.at("kind").get<std::string>();
        if (kind == "x")
          term.kind = VarKind::State;
        else if (kind == "u")
          term.kind = VarKind::Control;
        else
          fail("cross constraint term kind must be \"x\" or \"u\"");
        term.t = parse_int(term_j.at("t"), "cross_constraints.terms.t");
        term.S = parse_mat(term_j.at("S"), "cross_constraints.terms.S");
        cc.terms.push_back(std::move(term));
      }
      cc.s = parse_vec(item.at("s"), "cross_constraints.s");
      p.cross_constraints.push_back(std::move(cc));
    }
  }

  try {
    p.check();
  } catch (const DimensionMismatch& e) {
    fail(e.what());
  }
  return p;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

bool all_equal(const std::vector<Mat>& ms) {
  for (std::size_t i = 1; i < ms.size(); ++i)
    if (ms[i].rows() != ms[0].rows() || ms[i].cols() != ms[0].cols() ||
        !(ms[i].array() == ms[0].array()).all())
      return false;
  return true;
}

json schedule_to_json(const std::vector<Mat>& ms, const char* entry_key) {
  if (ms.empty() || all_equal(ms)) return mat_to_json(ms.empty() ? Mat(0, 0) : ms[0]);
  json list = json::array();
  for (std::size_t t = 0; t < ms.size(); ++t)
    list.push_back({{"t", static_cast<int>(t)}, {entry_key, mat_to_json(ms[t])}});
  return list;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

EcLqrProblem parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  return from_json(j);
}

EcLqrProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_problem(buf.str());
}

void save_problem(const EcLqrProblem& p, const std::string& path) {
  p.check();
  json j;
  j["n"] = p.n;
  j["m"] = p.m;
  j["T"] = p.T;
  if (all_equal(p.Fx) && all_equal(p.Fu) && p.T > 0) {
    j["dynamics"] = {{"Fx", mat_to_json(p.Fx[0])}, {"Fu", mat_to_json(p.Fu[0])}};
  } else {
    json list = json::array();
    for (int t = 0; t < p.T; ++t)
      list.push_back({{"t", t}, {"Fx", mat_to_json(p.Fx[t])}, {"Fu", mat_to_json(p.Fu[t])}});
    j["dynamics"] = std::move(list);
  }
  j["costs"] = {{"Qxx", schedule_to_json(p.Qxx, "value")},
                {"Quu", schedule_to_json(p.Quu, "value")},
                {"QxxT", mat_to_json(p.QxxT)}};
  j["x0"] = vec_to_json(p.x0);
  if (!p.local_constraints.empty()) {
    json list = json::array();
    for (const auto& lc : p.local_constraints) {
      json item = {{"t", lc.t}, {"Gx", mat_to_json(lc.Gx)}, {"g", vec_to_json(lc.g)}};
      if (lc.Gu.size() > 0) item["Gu"] = mat_to_json(lc.Gu);
      list.push_back(std::move(item));
    }
    j["local_constraints"] = std::move(list);
  }
  if (!p.cross_constraints.empty()) {
    json list = json::array();
    for (const auto& cc : p.cross_constraints) {
      json terms = json::array();
      for (const auto& term : cc.terms)
        terms.push_back({{"kind", term.kind == VarKind::State ? "x" : "u"},
                         {"t", term.t},
                         {"S", mat_to_json(term.S)}});
      list.push_back({{"terms", std::move(terms)}, {"s", vec_to_json(cc.s)}});
    }
    j["cross_constraints"] = std::move(list);
  }
  std::ofstream out(path);
  if (!out) fail("cannot write " + path);
  out << j.dump(2) << "\n";
}

void write_trajectory_csv(std::ostream& os, const EcLqrProblem& p, const std::vector<Vec>& xs,
                          const std::vector<Vec>& us) {
  os << "t";
  for (int i = 0; i < p.n; ++i) os << ",x_" << i;
  for (int i = 0; i < p.m; ++i) os << ",u_" << i;
  os << "\n";
  for (int t = 0; t <= p.T; ++t) {
    os << t;
    for (int i = 0; i < p.n; ++i) os << "," << fmt(xs[t](i));
    for (int i = 0; i < p.m; ++i) {
      os << ",";
      if (t < p.T) os << fmt(us[t](i));
    }
    os << "\n";
  }
}

void write_gains_csv(std::ostream& os, const std::vector<Policy>& policies) {
  for (const auto& pol : policies) {
    for (std::size_t j = 0; j < pol.parents.size(); ++j) {
      os << pol.t << "," << (pol.parents[j].kind == VarKind::State ? "x" : "u") << ","
         << pol.parents[j].t;
      const Mat& K = pol.K_blocks[j];
      for (Eigen::Index r = 0; r < K.rows(); ++r)
        for (Eigen::Index c = 0; c < K.cols(); ++c) os << "," << fmt(K(r, c));
      for (Eigen::Index i = 0; i < pol.k.size(); ++i) os << "," << fmt(pol.k(i));
      os << "\n";
    }
  }
}

void write_values_csv(std::ostream& os, const std::vector<ValueRecord>& values,
                      const std::vector<ConstraintToGo>& ctgs) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& val = values[i];
    os << val.t;
    for (Eigen::Index r = 0; r < val.V.rows(); ++r)
      for (Eigen::Index c = 0; c < val.V.cols(); ++c) os << "," << fmt(val.V(r, c));
    for (Eigen::Index r = 0; r < val.v.size(); ++r) os << "," << fmt(val.v(r));
    if (i < ctgs.size()) {
      const auto& ctg = ctgs[i];
      for (Eigen::Index r = 0; r < ctg.H.rows(); ++r)
        for (Eigen::Index c = 0; c < ctg.H.cols(); ++c) os << "," << fmt(ctg.H(r, c));
      for (Eigen::Index r = 0; r < ctg.h.size(); ++r) os << "," << fmt(ctg.h(r));
    }
    os << "\n";
  }
}

namespace {

int classify(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  if (dynamic_cast<const Infeasible*>(&e)) return kExitInfeasible;
  if (dynamic_cast<const Underdetermined*>(&e)) return kExitUnderdetermined;
  if (dynamic_cast<const SingularKkt*>(&e)) return kExitUnderdetermined;
  return kExitParse;
}

}  // namespace

int cmd_solve(const std::string& problem_path, const std::string& traj_path,
              const std::string& gains_path, const std::string& values_path, std::ostream& out,
              std::ostream& err) {
  EcLqrProblem p;
  try {
    p = load_problem(problem_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  }
  Solution sol;
  try {
    sol = solve(p);
  } catch (const std::exception& e) {
    return classify(e, err);
  }
  {
    std::ofstream traj(traj_path);
    if (!traj) {
      err << "error: cannot write " << traj_path << "\n";
      return kExitParse;
    }
    write_trajectory_csv(traj, p, sol.xs, sol.us);
  }
  {
    std::ofstream gains(gains_path);
    if (!gains) {
      err << "error: cannot write " << gains_path << "\n";
      return kExitParse;
    }
    write_gains_csv(gains, sol.policies);
  }
  if (!values_path.empty()) {
    std::ofstream values(values_path);
    if (!values) {
      err << "error: cannot write " << values_path << "\n";
      return kExitParse;
    }
    write_values_csv(values, sol.values, sol.ctgs);
  }
  out << "cost=" << fmt(sol.cost) << " violation=" << fmt(sol.max_violation) << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& problem_path, const std::string& x0_csv,
                 const std::string& traj_path, std::ostream& out, std::ostream& err) {
  EcLqrProblem p;
  try {
    p = load_problem(problem_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  }

  std::vector<double> entries;
  {
    std::stringstream ss(x0_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        entries.push_back(std::stod(item, &used));
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        err << "error: bad --x0 entry \"" << item << "\"\n";
        return kExitBadOverride;
      }
    }
  }
  if (static_cast<int>(entries.size()) != p.n) {
    err << "error: --x0 needs " << p.n << " entries, got " << entries.size() << "\n";
    return kExitBadOverride;
  }
  Vec x0 = Eigen::Map<Vec>(entries.data(), static_cast<Eigen::Index>(entries.size()));

  try {
    Solution sol = solve(p);
    auto [xs, us] = rollout(p, sol.policies, x0);
    std::ofstream traj(traj_path);
    if (!traj) {
      err << "error: cannot write " << traj_path << "\n";
      return kExitParse;
    }
    write_trajectory_csv(traj, p, xs, us);
    // Cost and violation of the rolled-out trajectory, with the override as
    // the initial condition.
    EcLqrProblem shifted = p;
    shifted.x0 = x0;
    auto [cost, violation] = evaluate(shifted, xs, us);
    out << "cost=" << fmt(cost) << " violation=" << fmt(violation) << "\n";
  } catch (const std::exception& e) {
    return classify(e, err);
  }
  return kExitOk;
}

int cmd_verify(const std::string& problem_path, std::ostream& out, std::ostream& err) {
  EcLqrProblem p;
  try {
    p = load_problem(problem_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  }

  try {
    const Solution sol = solve(p);
    const auto kkt = oracles::kkt_solve(p);
    const auto kxs = oracles::kkt_states(kkt, p);
    const auto kus = oracles::kkt_controls(kkt, p);

    double traj_diff = 0.0;
    for (int t = 0; t <= p.T; ++t)
      traj_diff = std::max(traj_diff, (sol.xs[t] - kxs[t]).cwiseAbs().maxCoeff());
    for (int t = 0; t < p.T; ++t)
      traj_diff = std::max(traj_diff, (sol.us[t] - kus[t]).cwiseAbs().maxCoeff());
    const double cost_diff =
        std::abs(sol.cost - kkt.cost) / std::max(1.0, std::abs(kkt.cost));

    out << "trajectory_max_diff=" << fmt(traj_diff) << "\n";
    out << "cost_rel_diff=" << fmt(cost_diff) << "\n";

    double gain_diff = 0.0;
    bool gains_checked = false;
    if (p.local_constraints.empty() && p.cross_constraints.empty() && p.T > 0) {
      const auto ric = oracles::riccati(p);
      for (const auto& pol : sol.policies) {
        Mat k_full = Mat::Zero(p.m, p.n);
        for (std::size_t j = 0; j < pol.parents.size(); ++j)
          if (pol.parents[j] == graph::state(pol.t)) k_full = pol.K_blocks[j];
        gain_diff = std::max(gain_diff, (k_full - ric.K[pol.t]).cwiseAbs().maxCoeff());
      }
      gains_checked = true;
      out << "riccati_gain_max_diff=" << fmt(gain_diff) << "\n";
    }

    const bool ok =
        traj_diff <= 1e-6 && cost_diff <= 1e-6 && (!gains_checked || gain_diff <= 1e-7);
    out << (ok ? "verify: PASS" : "verify: FAIL") << "\n";
    return ok ? kExitOk : kExitToleranceFail;
  } catch (const std::exception& e) {
    return classify(e, err);
  }
}

}  // namespace eclqr::io
