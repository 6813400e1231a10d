#include "eclqr/graph.hpp"

#include <algorithm>
#include <optional>
#include <set>

namespace eclqr::graph {

namespace {

constexpr double kTol = linalg::kZeroTol;

inline bool significant(double entry, double row_scale) {
  return std::abs(entry) > kTol * std::max(1.0, row_scale);
}

/// In-place elimination over factor slots with a variable adjacency index.
/// eliminate_one and eliminate_all are thin wrappers around this.
class Eliminator {
 public:
  explicit Eliminator(const FactorGraph& g) : dims_(g.dims) {
    slots_.reserve(g.factors.size());
    for (const auto& f : g.factors) insert_factor(f);
  }

  std::pair<Conditional, std::vector<Factor>> eliminate(const VarKey& key) {
    auto dim_it = dims_.find(key);
    if (dim_it == dims_.end()) throw UnknownVariable("eliminate: unknown variable " + to_string(key));
    const int k = dim_it->second;

    std::vector<std::size_t> adjacent;
    if (auto it = index_.find(key); it != index_.end()) adjacent = it->second;
    std::sort(adjacent.begin(), adjacent.end());

    // Separator: every other variable sharing a factor with `key`, in VarKey order.
    std::set<VarKey> sep_set;
    Eigen::Index total_rows = 0;
    for (std::size_t fid : adjacent) {
      const Factor& f = *slots_[fid];
      total_rows += f.rows();
      for (const auto& fk : f.keys)
        if (!(fk == key)) sep_set.insert(fk);
    }
    std::vector<VarKey> separator(sep_set.begin(), sep_set.end());

    std::vector<Eigen::Index> offsets(separator.size());
    Eigen::Index width = k;
    for (std::size_t s = 0; s < separator.size(); ++s) {
      offsets[s] = width;
      width += dims_.at(separator[s]);
    }

    linalg::WeightedSystem sys;
    sys.a = Mat::Zero(total_rows, width);
    sys.b = Vec::Zero(total_rows);
    sys.weights.reserve(static_cast<std::size_t>(total_rows));
    Eigen::Index row = 0;
    for (std::size_t fid : adjacent) {
      const Factor& f = *slots_[fid];
      const Eigen::Index nr = f.rows();
      for (std::size_t ki = 0; ki < f.keys.size(); ++ki) {
        Eigen::Index col;
        if (f.keys[ki] == key) {
          col = 0;
        } else {
          const auto pos = std::lower_bound(separator.begin(), separator.end(), f.keys[ki]);
          col = offsets[static_cast<std::size_t>(pos - separator.begin())];
        }
        sys.a.block(row, col, nr, f.blocks[ki].cols()) = f.blocks[ki];
      }
      sys.b.segment(row, nr) = f.rhs;
      for (Eigen::Index i = 0; i < nr; ++i)
        sys.weights.push_back(f.kind == FactorKind::Constraint ? linalg::RowWeight::constrained()
                                                               : linalg::RowWeight::finite(1.0));
      row += nr;
    }

    auto fact = linalg::eliminate_block(sys, k);

    Conditional cond;
    cond.frontal = key;
    cond.parents = separator;
    cond.frontal_block = fact.eliminated.a.leftCols(k);
    cond.rhs = fact.eliminated.b;
    cond.tags = fact.eliminated.weights;
    cond.parent_blocks.reserve(separator.size());
    for (std::size_t s = 0; s < separator.size(); ++s)
      cond.parent_blocks.push_back(
          fact.eliminated.a.middleCols(offsets[s], dims_.at(separator[s])));

    std::vector<Factor> new_factors = split_remainder(fact.remainder, separator, offsets);

    for (std::size_t fid : adjacent) remove_factor(fid);
    dims_.erase(key);
    for (const auto& f : new_factors) insert_factor(f);
    return {std::move(cond), std::move(new_factors)};
  }

  FactorGraph snapshot() const {
    FactorGraph g;
    g.dims = dims_;
    for (const auto& slot : slots_)
      if (slot) g.factors.push_back(*slot);
    return g;
  }

  bool empty_dims() const { return dims_.empty(); }
  std::size_t live_factors() const {
    std::size_t n = 0;
    for (const auto& s : slots_)
      if (s) ++n;
    return n;
  }
  double take_cost_offset() { return cost_offset_; }
  std::vector<Factor> take_leftovers() {
    std::vector<Factor> out;
    for (auto& s : slots_)
      if (s) {
        out.push_back(std::move(*s));
        s.reset();
      }
    return out;
  }

 private:
  void insert_factor(const Factor& f) {
    const std::size_t fid = slots_.size();
    slots_.push_back(f);
    for (const auto& fk : f.keys) index_[fk].push_back(fid);
  }

  void remove_factor(std::size_t fid) {
    for (const auto& fk : slots_[fid]->keys) {
      auto& v = index_[fk];
      v.erase(std::remove(v.begin(), v.end(), fid), v.end());
    }
    slots_[fid].reset();
  }

  /// Splits remainder rows into an objective and a constraint factor on the
  /// separator, dropping constant rows (their squared rhs joins the cost
  /// offset) and pruning separator variables with no support.
  std::vector<Factor> split_remainder(const linalg::WeightedSystem& rem,
                                      const std::vector<VarKey>& separator,
                                      const std::vector<Eigen::Index>& offsets) {
    std::vector<Factor> out;
    for (FactorKind kind : {FactorKind::Objective, FactorKind::Constraint}) {
      std::vector<Eigen::Index> rows;
      for (Eigen::Index i = 0; i < rem.rows(); ++i) {
        const bool is_con = rem.weights[static_cast<std::size_t>(i)].is_constrained();
        if ((kind == FactorKind::Constraint) != is_con) continue;
        const double row_scale = rem.cols() ? rem.a.row(i).cwiseAbs().maxCoeff() : 0.0;
        if (!significant(row_scale, row_scale)) {
          // Constant row: the kernel already raised Infeasible for hard rows.
          if (!is_con) cost_offset_ += rem.b(i) * rem.b(i);
          continue;
        }
        rows.push_back(i);
      }
      if (rows.empty()) continue;

      Factor f;
      f.kind = kind;
      f.rhs.resize(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) f.rhs(static_cast<Eigen::Index>(i)) = rem.b(rows[i]);
      for (std::size_t s = 0; s < separator.size(); ++s) {
        const int d = dims_.at(separator[s]);
        bool support = false;
        for (Eigen::Index ri : rows) {
          const double row_scale = rem.a.row(ri).cwiseAbs().maxCoeff();
          if (rem.a.row(ri).segment(offsets[s], d).cwiseAbs().maxCoeff() >
              kTol * std::max(1.0, row_scale)) {
            support = true;
            break;
          }
        }
        if (!support) continue;
        Mat block(static_cast<Eigen::Index>(rows.size()), d);
        for (std::size_t i = 0; i < rows.size(); ++i)
          block.row(static_cast<Eigen::Index>(i)) = rem.a.row(rows[i]).segment(offsets[s], d);
        f.keys.push_back(separator[s]);
        f.blocks.push_back(std::move(block));
      }
      out.push_back(std::move(f));
    }
    return out;
  }

  std::map<VarKey, int> dims_;
  std::vector<std::optional<Factor>> slots_;
  std::map<VarKey, std::vector<std::size_t>> index_;
  double cost_offset_ = 0.0;
};

}  // namespace

std::string to_string(const VarKey& key) {
  return (key.kind == VarKind::State ? "x" : "u") + std::to_string(key.t);
}

void FactorGraph::add_variable(const VarKey& key, int dim) {
  if (dim <= 0) throw DimensionMismatch("add_variable: dimension must be positive");
  if (!dims.emplace(key, dim).second)
    throw std::invalid_argument("add_variable: duplicate variable " + to_string(key));
}

void FactorGraph::add(Factor f) {
  if (f.keys.size() != f.blocks.size())
    throw DimensionMismatch("Factor: one block per key required");
  for (std::size_t i = 0; i < f.keys.size(); ++i) {
    auto it = dims.find(f.keys[i]);
    if (it == dims.end()) throw UnknownVariable("Factor references unknown " + to_string(f.keys[i]));
    if (f.blocks[i].cols() != it->second || f.blocks[i].rows() != f.rhs.size())
      throw DimensionMismatch("Factor: block shape mismatch on " + to_string(f.keys[i]));
  }
  factors.push_back(std::move(f));
}

EliminateOneResult eliminate_one(const FactorGraph& g, const VarKey& key) {
  Eliminator engine(g);
  auto [cond, new_factors] = engine.eliminate(key);
  return {std::move(cond), std::move(new_factors), engine.snapshot()};
}

BayesNet eliminate_all(const FactorGraph& g, const std::vector<VarKey>& ordering,
                       const StepObserver& observer) {
  Eliminator engine(g);
  BayesNet bn;
  bn.conditionals.reserve(ordering.size());
  for (const auto& key : ordering) {
    auto [cond, new_factors] = engine.eliminate(key);
    if (observer) observer(key, cond, new_factors);
    bn.conditionals.push_back(std::move(cond));
  }
  if (!engine.empty_dims())
    throw std::invalid_argument("eliminate_all: ordering does not cover all variables");
  for (auto& f : engine.take_leftovers()) {
    if (f.kind == FactorKind::Constraint && f.rhs.cwiseAbs().maxCoeff() > kTol)
      throw Infeasible("eliminate_all: residual constraint with nonzero rhs");
    bn.residual_factors.push_back(std::move(f));
  }
  bn.cost_offset = engine.take_cost_offset();
  return bn;
}

std::map<VarKey, Vec> solve_assignment(const BayesNet& bn) {
  std::map<VarKey, int> ids;
  for (const auto& c : bn.conditionals)
    ids.emplace(c.frontal, static_cast<int>(ids.size()));

  std::vector<linalg::EliminatedBlock> blocks;
  blocks.reserve(bn.conditionals.size());
  for (auto it = bn.conditionals.rbegin(); it != bn.conditionals.rend(); ++it) {
    linalg::EliminatedBlock blk;
    auto fid = ids.find(it->frontal);
    blk.id = fid->second;
    blk.frontal = it->frontal_block;
    blk.rhs = it->rhs;
    for (std::size_t p = 0; p < it->parents.size(); ++p) {
      auto pid = ids.find(it->parents[p]);
      if (pid == ids.end())
        throw MissingParent("solve_assignment: no conditional for parent " +
                            to_string(it->parents[p]));
      blk.parents.emplace_back(pid->second, it->parent_blocks[p]);
    }
    blocks.push_back(std::move(blk));
  }

  auto values = linalg::back_solve(blocks);
  std::map<VarKey, Vec> out;
  for (const auto& [key, id] : ids) out.emplace(key, std::move(values.at(id)));
  return out;
}

}  // namespace eclqr::graph
