#pragma once

#include <stdexcept>
#include <string>

namespace eclqr {

/// Matrix/vector shapes disagree with declared dimensions.
struct DimensionMismatch : std::invalid_argument {
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

/// A column to be eliminated carries no information: no finite row touches it
/// and no constraint row can pivot on it.
struct Underdetermined : std::runtime_error {
  explicit Underdetermined(int column)
      : std::runtime_error("underdetermined: column " + std::to_string(column) +
                           " has no usable pivot"),
        column(column) {}
  int column;
};

/// The hard-constraint subsystem has no solution.
struct Infeasible : std::runtime_error {
  explicit Infeasible(const std::string& what) : std::runtime_error(what) {}
};

/// Back-substitution reached a row whose parent has no value yet.
struct MissingParent : std::runtime_error {
  explicit MissingParent(const std::string& what) : std::runtime_error(what) {}
};

struct UnknownVariable : std::invalid_argument {
  explicit UnknownVariable(const std::string& what) : std::invalid_argument(what) {}
};

/// Cost matrices fail their definiteness requirements.
struct InvalidCost : std::invalid_argument {
  explicit InvalidCost(const std::string& what) : std::invalid_argument(what) {}
};

/// The Riccati gain solve hit a singular (Quu + Fu' P Fu).
struct SingularGainSolve : std::runtime_error {
  explicit SingularGainSolve(const std::string& what) : std::runtime_error(what) {}
};

/// The dense KKT system is singular without being detectably infeasible.
struct SingularKkt : std::runtime_error {
  explicit SingularKkt(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace eclqr
