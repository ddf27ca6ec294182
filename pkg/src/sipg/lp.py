"""Deterministic dense linear programming.

Minimizes c.x subject to row constraints a.x <= b or a.x >= b plus
per-variable bounds (lower defaults to 0).  Two-phase primal simplex on a
dense tableau with Bland's smallest-index rule for both the entering
column and ratio-test ties, which prevents cycling and makes the returned
vertex a pure function of the instance.  Problem sizes here are tiny
(tens of variables), so the dense tableau is the right trade.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

LE = "<="
GE = ">="

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_UNBOUNDED = "unbounded"

# Pivot eligibility / reduced-cost zero threshold.  Coefficients in this
# package are table constants of magnitude 1e-2..1e4, so an absolute
# threshold is safe; reduced costs are compared against a cost-scaled one.
_PIVOT_TOL = 1e-9
_MAX_PIVOTS = 50_000


@dataclass(frozen=True)
class LinearProgram:
    """Immutable LP instance: minimize c.x, rows a_i.x (<=|>=) b_i, lb <= x <= ub."""

    c: np.ndarray
    a: np.ndarray
    b: np.ndarray
    senses: tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.size == 0:
            a = a.reshape((0, c.size))
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        n = c.shape[0]
        if n == 0:
            raise ValueError("linear program needs at least one variable")
        if a.shape != (b.shape[0], n):
            raise ValueError(f"coefficient matrix shape {a.shape} does not match "
                             f"{b.shape[0]} bounds x {n} variables")
        if len(self.senses) != b.shape[0]:
            raise ValueError("one sense per constraint row required")
        for s in self.senses:
            if s not in (LE, GE):
                raise ValueError(f"unknown row sense {s!r}")
        if lower.shape != (n,) or upper.shape != (n,):
            raise ValueError("bound vectors must match variable count")
        if not np.all(np.isfinite(c)):
            raise ValueError("objective coefficients must be finite")
        if not np.all(np.isfinite(a)):
            raise ValueError("constraint coefficients must be finite")
        if not np.all(np.isfinite(b)):
            raise ValueError("constraint bounds must be finite")
        if not np.all(np.isfinite(lower)):
            raise ValueError("lower bounds must be finite")
        if np.any(upper < lower):
            raise ValueError("upper bound below lower bound")


def make_lp(c, a, b, senses, lower=None, upper=None) -> LinearProgram:
    """Convenience constructor filling default bounds (x >= 0, no upper)."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    if lower is None:
        lower = np.zeros(n)
    if upper is None:
        upper = np.full(n, np.inf)
    return LinearProgram(c=c, a=np.asarray(a, dtype=float),
                         b=np.asarray(b, dtype=float), senses=tuple(senses),
                         lower=np.asarray(lower, dtype=float),
                         upper=np.asarray(upper, dtype=float))


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray | None
    objective_value: float | None

    @property
    def is_optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL


def _pivot(tab: np.ndarray, basis: list[int], row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    factors = tab[:, col].copy()
    factors[row] = 0.0
    # rank-1 elimination of the pivot column everywhere else
    tab -= np.outer(factors, tab[row])
    tab[:, col] = 0.0
    tab[row, col] = 1.0
    basis[row] = col


def _run_simplex(tab: np.ndarray, basis: list[int], rtol: float) -> str:
    """Pivot to optimality on `tab` (constraint rows + objective last row).

    The objective row must already hold reduced costs.  Returns "optimal"
    or "unbounded".  Bland's rule throughout.
    """
    m = tab.shape[0] - 1
    for _ in range(_MAX_PIVOTS):
        reduced = tab[-1, :-1]
        entering = -1
        for j in range(reduced.shape[0]):
            if reduced[j] < -rtol:
                entering = j
                break
        if entering < 0:
            return STATUS_OPTIMAL
        col = tab[:m, entering]
        best_row = -1
        best_ratio = 0.0
        for i in range(m):
            if col[i] > _PIVOT_TOL:
                ratio = tab[i, -1] / col[i]
                if best_row < 0:
                    best_ratio, best_row = ratio, i
                    continue
                tie_tol = _PIVOT_TOL * max(1.0, abs(best_ratio))
                if ratio < best_ratio - tie_tol:
                    best_ratio, best_row = ratio, i
                elif ratio <= best_ratio + tie_tol and basis[i] < basis[best_row]:
                    # tie: leave the smallest basis index (anti-cycling)
                    best_ratio, best_row = min(best_ratio, ratio), i
        if best_row < 0:
            return STATUS_UNBOUNDED
        _pivot(tab, basis, best_row, entering)
    raise RuntimeError("simplex pivot limit exceeded")


def solve(lp: LinearProgram) -> LpSolution:
    """Solve to a deterministic optimal vertex, or report infeasible/unbounded."""
    n = lp.c.shape[0]

    # Shift to y = x - lower so every variable is >= 0.
    shift = lp.lower
    b = lp.b - lp.a @ shift
    rows = [np.array(r, dtype=float) for r in lp.a]
    bounds = list(b)
    senses = list(lp.senses)
    for j in range(n):
        u = lp.upper[j] - shift[j]
        if np.isfinite(u):
            e = np.zeros(n)
            e[j] = 1.0
            rows.append(e)
            bounds.append(u)
            senses.append(LE)

    m = len(rows)
    a = np.vstack(rows) if m else np.zeros((0, n))
    b = np.asarray(bounds, dtype=float)

    # Standard form: slack per row, artificial where the slack cannot seed
    # the basis (>= rows with nonneg rhs, <= rows with negative rhs).
    n_slack = m
    art_rows = []
    for i in range(m):
        needs_art = (senses[i] == GE) == (b[i] >= 0)
        if b[i] == 0 and senses[i] == GE:
            needs_art = True
        if needs_art:
            art_rows.append(i)
    n_art = len(art_rows)
    width = n + n_slack + n_art

    tab = np.zeros((m + 1, width + 1))
    basis: list[int] = [0] * m
    art_of_row = {}
    for k, i in enumerate(art_rows):
        art_of_row[i] = n + n_slack + k
    for i in range(m):
        row = a[i].copy()
        rhs = b[i]
        slack = 1.0 if senses[i] == LE else -1.0
        if rhs < 0:
            row = -row
            rhs = -rhs
            slack = -slack
        tab[i, :n] = row
        tab[i, n + i] = slack
        tab[i, -1] = rhs
        if i in art_of_row:
            j = art_of_row[i]
            tab[i, j] = 1.0
            basis[i] = j
        else:
            basis[i] = n + i

    scale_b = max(1.0, float(np.max(np.abs(b))) if m else 0.0)

    if n_art:
        phase1_cost = np.zeros(width)
        phase1_cost[n + n_slack:] = 1.0
        tab[-1, :width] = phase1_cost
        tab[-1, -1] = 0.0
        for i in range(m):
            if phase1_cost[basis[i]] != 0.0:
                tab[-1] -= tab[i]
        status = _run_simplex(tab, basis, _PIVOT_TOL)
        if status != STATUS_OPTIMAL:  # phase 1 is always bounded below by 0
            raise RuntimeError("phase 1 simplex reported unbounded")
        infeas = -tab[-1, -1]
        if infeas > 1e-7 * scale_b:
            return LpSolution(status=STATUS_INFEASIBLE, x=None, objective_value=None)
        # Drive leftover artificials out of the basis; drop redundant rows.
        drop = []
        for i in range(m):
            if basis[i] >= n + n_slack:
                pivot_col = -1
                for j in range(n + n_slack):
                    if abs(tab[i, j]) > _PIVOT_TOL:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    _pivot(tab, basis, i, pivot_col)
                else:
                    drop.append(i)
        if drop:
            keep = [i for i in range(m) if i not in drop]
            tab = np.vstack([tab[keep], tab[-1:]])
            basis = [basis[i] for i in keep]
            m = len(keep)
        # Strip artificial columns.
        tab = np.hstack([tab[:, :n + n_slack], tab[:, -1:]])
        width = n + n_slack

    cost = np.zeros(width)
    cost[:n] = lp.c
    tab[-1, :width] = cost
    tab[-1, -1] = 0.0
    for i in range(m):
        if cost[basis[i]] != 0.0:
            tab[-1] -= cost[basis[i]] * tab[i]
    rtol = _PIVOT_TOL * max(1.0, float(np.max(np.abs(lp.c))))
    status = _run_simplex(tab, basis, rtol)
    if status == STATUS_UNBOUNDED:
        return LpSolution(status=STATUS_UNBOUNDED, x=None, objective_value=None)

    y = np.zeros(width)
    for i in range(m):
        y[basis[i]] = tab[i, -1]
    x = y[:n] + shift
    # Snap solver noise off the bounds so downstream flow records stay clean.
    x = np.where(np.abs(x - lp.lower) < 1e-12 * np.maximum(1.0, np.abs(lp.lower)),
                 lp.lower, x)
    finite_u = np.isfinite(lp.upper)
    x = np.where(finite_u & (np.abs(x - lp.upper) < 1e-12 * np.maximum(1.0, np.abs(lp.upper))),
                 lp.upper, x)
    value = float(lp.c @ x)
    return LpSolution(status=STATUS_OPTIMAL, x=x, objective_value=value)


class LpBuilder:
    """Incremental LP construction with named variables.

    Sector models build their dispatch programs row by row; the builder
    keeps the name -> column mapping so decisions can be read back by name.
    """

    def __init__(self):
        self._names: list[str] = []
        self._index: dict[str, int] = {}
        self._costs: list[float] = []
        self._lowers: list[float] = []
        self._uppers: list[float] = []
        self._rows: list[tuple[dict[int, float], str, float]] = []

    def var(self, name: str, cost: float = 0.0, lower: float = 0.0,
            upper: float | None = None) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable {name!r}")
        idx = len(self._names)
        self._names.append(name)
        self._index[name] = idx
        self._costs.append(float(cost))
        self._lowers.append(float(lower))
        self._uppers.append(np.inf if upper is None else float(upper))
        return idx

    def _coeff_map(self, coeffs: Mapping[str, float] | Iterable[tuple[str, float]]) -> dict[int, float]:
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        out: dict[int, float] = {}
        for name, v in items:
            j = self._index[name]
            out[j] = out.get(j, 0.0) + float(v)
        return out

    def row_le(self, coeffs, bound: float) -> None:
        self._rows.append((self._coeff_map(coeffs), LE, float(bound)))

    def row_ge(self, coeffs, bound: float) -> None:
        self._rows.append((self._coeff_map(coeffs), GE, float(bound)))

    def build(self) -> LinearProgram:
        n = len(self._names)
        m = len(self._rows)
        a = np.zeros((m, n))
        b = np.zeros(m)
        senses = []
        for i, (coeffs, sense, bound) in enumerate(self._rows):
            for j, v in coeffs.items():
                a[i, j] = v
            b[i] = bound
            senses.append(sense)
        return make_lp(np.array(self._costs), a, b, senses,
                       lower=np.array(self._lowers), upper=np.array(self._uppers))

    def solve(self) -> tuple[LpSolution, dict[str, float]]:
        sol = solve(self.build())
        if not sol.is_optimal:
            return sol, {}
        return sol, {name: float(sol.x[j]) for name, j in self._index.items()}
