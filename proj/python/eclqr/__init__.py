"""Equality-constrained LQR solver on constrained Gaussian factor graphs."""

from ._core import (
    ConstraintToGo,
    CrossConstraint,
    CrossTerm,
    InfeasibleError,
    InvalidCostError,
    KktSolution,
    LocalConstraint,
    Policy,
    Problem,
    RiccatiResult,
    Solution,
    UnderdeterminedError,
    ValueRecord,
    evaluate,
    kkt_solve,
    load_problem,
    riccati,
    rollout,
    save_problem,
    solve,
)

__all__ = [
    "ConstraintToGo",
    "CrossConstraint",
    "CrossTerm",
    "InfeasibleError",
    "InvalidCostError",
    "KktSolution",
    "LocalConstraint",
    "Policy",
    "Problem",
    "RiccatiResult",
    "Solution",
    "UnderdeterminedError",
    "ValueRecord",
    "evaluate",
    "kkt_solve",
    "load_problem",
    "riccati",
    "rollout",
    "save_problem",
    "solve",
]
