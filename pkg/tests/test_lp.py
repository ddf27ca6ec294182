"""Solver unit tests: pinned examples, determinism, oracle cross-checks."""

import numpy as np
import pytest
from scipy.optimize import linprog

from sipg.lp import (GE, LE, LpBuilder, STATUS_INFEASIBLE, STATUS_OPTIMAL,
                     STATUS_UNBOUNDED, make_lp, solve)


def test_single_variable_floor():
    # min x  s.t. x >= 5
    lp = make_lp([1.0], [[1.0]], [5.0], [GE])
    sol = solve(lp)
    assert sol.status == STATUS_OPTIMAL
    assert sol.x[0] == pytest.approx(5.0, abs=1e-9)
    assert sol.objective_value == pytest.approx(5.0, abs=1e-9)


def test_unbounded_below():
    # min -x  with x >= 0 and no cap
    lp = make_lp([-1.0], np.zeros((0, 1)), [], [])
    assert solve(lp).status == STATUS_UNBOUNDED


def test_infeasible_sign_conflict():
    # x >= 0 (implicit) and x <= -1
    lp = make_lp([1.0], [[1.0]], [-1.0], [LE])
    assert solve(lp).status == STATUS_INFEASIBLE


def test_two_variable_vertex():
    # min -x - 2y  s.t. x + y <= 4, y <= 3
    lp = make_lp([-1.0, -2.0], [[1.0, 1.0], [0.0, 1.0]], [4.0, 3.0], [LE, LE])
    sol = solve(lp)
    assert sol.status == STATUS_OPTIMAL
    np.testing.assert_allclose(sol.x, [1.0, 3.0], atol=1e-9)
    assert sol.objective_value == pytest.approx(-7.0, abs=1e-9)


def test_upper_bounds_and_shifted_lowers():
    # min x + y with 1 <= x <= 2, y >= 3, x + y >= 5
    lp = make_lp([1.0, 1.0], [[1.0, 1.0]], [5.0], [GE],
                 lower=[1.0, 3.0], upper=[2.0, np.inf])
    sol = solve(lp)
    assert sol.status == STATUS_OPTIMAL
    assert sol.objective_value == pytest.approx(5.0, abs=1e-9)
    assert sol.x[0] >= 1.0 - 1e-12 and sol.x[0] <= 2.0 + 1e-12


def test_degenerate_ties_terminate():
    # many redundant rows through the same vertex; Bland must not cycle
    lp = make_lp([-1.0, -1.0],
                 [[1.0, 1.0], [2.0, 2.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
                 [2.0, 4.0, 2.0, 2.0, 2.0],
                 [LE, LE, LE, LE, LE])
    sol = solve(lp)
    assert sol.status == STATUS_OPTIMAL
    assert sol.objective_value == pytest.approx(-2.0, abs=1e-9)


def test_equality_via_pair_of_rows():
    lp = make_lp([3.0, 1.0],
                 [[1.0, 1.0], [1.0, 1.0]],
                 [2.0, 2.0], [LE, GE])
    sol = solve(lp)
    assert sol.status == STATUS_OPTIMAL
    np.testing.assert_allclose(sol.x, [0.0, 2.0], atol=1e-9)


def test_builder_round_trip():
    b = LpBuilder()
    b.var("use", cost=2.0, upper=10.0)
    b.var("buy", cost=7.0)
    b.row_ge({"use": 1.0, "buy": 1.0}, 14.0)
    sol, values = b.solve()
    assert sol.status == STATUS_OPTIMAL
    assert values["use"] == pytest.approx(10.0, abs=1e-9)
    assert values["buy"] == pytest.approx(4.0, abs=1e-9)


def _random_instance(rng):
    n = int(rng.integers(1, 6))
    m = int(rng.integers(0, 6))
    c = rng.integers(-5, 6, size=n).astype(float)
    a = rng.integers(-3, 4, size=(m, n)).astype(float)
    b = rng.integers(0, 12, size=m).astype(float)
    senses = [LE if rng.random() < 0.7 else GE for _ in range(m)]
    upper = np.where(rng.random(n) < 0.6, rng.integers(1, 9, size=n).astype(float), np.inf)
    return make_lp(c, a, b, senses, upper=upper)


def _scipy_reference(lp):
    a_ub, b_ub = [], []
    for row, sense, bound in zip(lp.a, lp.senses, lp.b):
        if sense == LE:
            a_ub.append(row)
            b_ub.append(bound)
        else:
            a_ub.append(-row)
            b_ub.append(-bound)
    bounds = [(lo, None if not np.isfinite(up) else up)
              for lo, up in zip(lp.lower, lp.upper)]
    if a_ub:
        return linprog(lp.c, A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                       bounds=bounds, method="highs")
    return linprog(lp.c, bounds=bounds, method="highs")


def test_randomized_against_reference_solver():
    rng = np.random.default_rng(20260814)
    statuses = {STATUS_OPTIMAL: 0, STATUS_INFEASIBLE: 0, STATUS_UNBOUNDED: 0}
    for _ in range(300):
        lp = _random_instance(rng)
        mine = solve(lp)
        ref = _scipy_reference(lp)
        statuses[mine.status] += 1
        if ref.status == 0:
            assert mine.status == STATUS_OPTIMAL
            scale = max(1.0, abs(ref.fun))
            assert abs(mine.objective_value - ref.fun) <= 1e-6 * scale
            # the vertex itself must be feasible
            assert np.all(mine.x >= lp.lower - 1e-9)
            assert np.all(mine.x <= lp.upper + 1e-9)
            for row, sense, bound in zip(lp.a, lp.senses, lp.b):
                g = float(row @ mine.x)
                if sense == LE:
                    assert g <= bound + 1e-6 * max(1.0, abs(bound))
                else:
                    assert g >= bound - 1e-6 * max(1.0, abs(bound))
        elif ref.status == 2:
            assert mine.status == STATUS_INFEASIBLE
        elif ref.status == 3:
            assert mine.status == STATUS_UNBOUNDED
    # the generator must exercise every status
    assert min(statuses.values()) > 0


def test_determinism_bitwise():
    rng = np.random.default_rng(7)
    for _ in range(50):
        lp = _random_instance(rng)
        s1, s2 = solve(lp), solve(lp)
        assert s1.status == s2.status
        if s1.status == STATUS_OPTIMAL:
            assert np.array_equal(s1.x, s2.x)
            assert s1.objective_value == s2.objective_value


def test_objective_scaling_keeps_vertex():
    rng = np.random.default_rng(99)
    kept = 0
    for _ in range(80):
        lp = _random_instance(rng)
        base = solve(lp)
        if base.status != STATUS_OPTIMAL:
            continue
        kept += 1
        for lam in (0.5, 3.0, 1000.0):
            scaled = make_lp(lam * lp.c, lp.a, lp.b, lp.senses,
                             lower=lp.lower, upper=lp.upper)
            same = solve(scaled)
            assert same.status == STATUS_OPTIMAL
            assert np.array_equal(same.x, base.x)
    assert kept > 20


def test_grid_upper_bounds_never_beat_solver():
    # every feasible grid point is an upper bound on the true minimum
    rng = np.random.default_rng(41)
    checked = 0
    for _ in range(60):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        c = rng.integers(-4, 5, size=n).astype(float)
        a = rng.integers(-2, 4, size=(m, n)).astype(float)
        b = rng.integers(1, 10, size=m).astype(float)
        senses = [LE] * m
        upper = rng.integers(1, 7, size=n).astype(float)
        lp = make_lp(c, a, b, senses, upper=upper)
        sol = solve(lp)
        if sol.status != STATUS_OPTIMAL:
            continue
        checked += 1
        axes = [np.linspace(0.0, u, 13) for u in upper]
        mesh = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        ok = np.all(mesh @ a.T <= b[None, :] + 1e-9, axis=1)
        feasible = mesh[ok]
        assert feasible.size  # origin is feasible for these rows
        grid_best = float(np.min(feasible @ c))
        assert sol.objective_value <= grid_best + 1e-7 * max(1.0, abs(grid_best))
    assert checked > 30
