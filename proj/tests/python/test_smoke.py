"""Smoke tests for the python bindings."""

import os
from pathlib import Path

import numpy as np
import pytest

import eclqr

PROBLEMS = Path(os.environ.get("ECLQR_PROBLEMS_DIR", Path(__file__).parents[2] / "problems"))


def scalar_toy():
    one = np.ones((1, 1))
    return eclqr.Problem(n=1, m=1, T=1, Qxx=one, Quu=one, QxxT=one, Fx=one, Fu=one,
                         x0=np.ones(1))


def test_scalar_toy_closed_form():
    sol = eclqr.solve(scalar_toy())
    assert sol.us[0, 0] == pytest.approx(-0.5, abs=1e-12)
    assert sol.xs[1, 0] == pytest.approx(0.5, abs=1e-12)
    assert sol.cost == pytest.approx(1.5, abs=1e-12)
    (policy,) = sol.policies
    assert policy.parents == [("x", 0)]
    assert policy.K_blocks[0][0, 0] == pytest.approx(0.5, abs=1e-12)


def test_p7_pinned_states():
    sol = eclqr.solve(eclqr.load_problem(str(PROBLEMS / "p7.json")))
    np.testing.assert_allclose(sol.xs[50], [1.0, 2.0, 3.0], atol=1e-8)
    np.testing.assert_allclose(sol.xs[100], [3.0, 2.0, 1.0], atol=1e-8)
    assert sol.max_violation <= 1e-8

    kxs, _, kcost = eclqr.kkt_solve(eclqr.load_problem(str(PROBLEMS / "p7.json")))
    np.testing.assert_allclose(sol.xs, kxs, atol=1e-7)
    assert sol.cost == pytest.approx(kcost, rel=1e-8)


def test_p9_perturbed_rollout_stays_feasible():
    p = eclqr.load_problem(str(PROBLEMS / "p9.json"))
    sol = eclqr.solve(p)
    xs, us = eclqr.rollout(p, sol.policies, x0=np.array([0.0, 1.8]))

    p.x0 = np.array([0.0, 1.8])
    kxs, kus, _ = eclqr.kkt_solve(p)
    np.testing.assert_allclose(xs, kxs, atol=1e-6)
    np.testing.assert_allclose(us, kus, atol=1e-6)
    _, violation = eclqr.evaluate(p, xs, us)
    assert violation <= 1e-8
    for nc in range(0, 81, 20):
        np.testing.assert_allclose(xs[nc + 20] - xs[nc], [-0.6, 0.0], atol=1e-8)


def test_riccati_matches_solver_gains():
    rng = np.random.default_rng(7)
    n, m, T = 3, 2, 12
    fx = rng.normal(size=(n, n)) * 0.4
    fu = rng.normal(size=(n, m))
    q = rng.normal(size=(n, n))
    r = rng.normal(size=(m, m))
    p = eclqr.Problem(n=n, m=m, T=T, Qxx=q @ q.T + 0.1 * np.eye(n),
                      Quu=r @ r.T + 0.1 * np.eye(m), QxxT=np.eye(n), Fx=fx, Fu=fu,
                      x0=rng.normal(size=n))
    sol = eclqr.solve(p)
    ric = eclqr.riccati(p)
    for policy in sol.policies:
        np.testing.assert_allclose(policy.K_blocks[0], ric.K[policy.t], atol=1e-9)


def test_save_load_round_trip(tmp_path):
    p = eclqr.load_problem(str(PROBLEMS / "p9.json"))
    out = tmp_path / "copy.json"
    eclqr.save_problem(p, str(out))
    p2 = eclqr.load_problem(str(out))
    sol, sol2 = eclqr.solve(p), eclqr.solve(p2)
    np.testing.assert_array_equal(sol.xs, sol2.xs)


def test_infeasible_problem_raises():
    with pytest.raises(eclqr.InfeasibleError):
        eclqr.solve(eclqr.load_problem(str(PROBLEMS / "infeasible.json")))


def test_underdetermined_problem_raises():
    with pytest.raises(eclqr.UnderdeterminedError):
        eclqr.solve(eclqr.load_problem(str(PROBLEMS / "underdetermined.json")))
