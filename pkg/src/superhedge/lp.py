"""Dense two-phase simplex solver.

Every hedging and duality computation in the package reduces to a small or
medium sized linear program. The solver here works on a dense tableau and
returns, besides the primal solution, row multipliers for optimal problems, a
Farkas certificate for infeasible ones and an improving ray for unbounded ones.

Multiplier convention: ``duals[i]`` is the derivative of the optimal value with
respect to ``b[i]``. For a maximisation this makes multipliers of ``<=`` rows
nonnegative; for a minimisation they are nonpositive.

Farkas convention: every inequality row is first written in ``<=`` form
(``>=`` rows are negated). ``farkas[i]`` is the weight of that normalised row,
nonnegative for inequalities and free for equalities, such that the weighted
row sum ``r = sum_i farkas[i] * row_i`` satisfies
``min_{lb <= x <= ub} r @ x > sum_i farkas[i] * rhs_i``.
"""

from __future__ import annotations

import contextlib
import contextvars
import enum
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import NumericalFailure

__all__ = [
    "Status",
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "active_tolerances",
    "use_tolerances",
    "LinearProgram",
    "LpSolution",
    "LPBuilder",
    "solve",
    "to_lp_format",
]


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-8
    pivot: float = 1e-10
    duality_gap: float = 1e-7
    # consecutive degenerate Dantzig pivots before switching to Bland's rule
    degenerate_limit: int = 50
    refactor_every: int = 100
    max_iter: int = 100_000
    restarts: int = 3


DEFAULT_TOLERANCES = Tolerances()
_ACTIVE = contextvars.ContextVar("lp_tolerances", default=DEFAULT_TOLERANCES)


def active_tolerances() -> Tolerances:
    return _ACTIVE.get()


@contextlib.contextmanager
def use_tolerances(tol: Tolerances):
    """Make ``tol`` the default for every ``solve`` in the enclosed block."""
    token = _ACTIVE.set(tol)
    try:
        yield tol
    finally:
        _ACTIVE.reset(token)

_SENSES = {"<=": 1, ">=": -1, "=": 0, "==": 0, "L": 1, "G": -1, "E": 0}


@dataclass(frozen=True)
class LinearProgram:
    """``max/min c @ x`` s.t. ``A[i] @ x (sense_i) b[i]`` and ``lb <= x <= ub``."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    maximize: bool = False
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        A = np.asarray(self.A, dtype=float).reshape(-1, n)
        b = np.asarray(self.b, dtype=float).ravel()
        lb = np.broadcast_to(np.asarray(self.lb, dtype=float), (n,)).copy()
        ub = np.broadcast_to(np.asarray(self.ub, dtype=float), (n,)).copy()
        senses = tuple(self.senses)
        if A.shape[0] != b.size or len(senses) != b.size:
            raise ValueError("row count mismatch between A, b and senses")
        if any(s not in _SENSES for s in senses):
            raise ValueError(f"unknown constraint sense in {set(senses)}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("LP data must be finite")
        if np.any(lb > ub) or np.any(lb == np.inf) or np.any(ub == -np.inf):
            raise ValueError("inconsistent variable bounds")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        object.__setattr__(self, "senses", senses)

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_rows(self) -> int:
        return self.b.size

    def sense_signs(self) -> np.ndarray:
        return np.array([_SENSES[s] for s in self.senses], dtype=int)


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray | None = None
    value: float = float("nan")
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    ray: np.ndarray | None = None
    farkas: np.ndarray | None = None
    iterations: int = 0
    lp: LinearProgram | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def residuals(self) -> dict[str, float]:
        """Primal/dual feasibility, complementarity and duality-gap residuals."""
        if self.status is not Status.OPTIMAL:
            raise ValueError("residuals are defined for optimal solutions only")
        return optimality_residuals(self.lp, self.x, self.duals)

    def is_certified(self, tol: Tolerances | None = None) -> bool:
        tol = tol or active_tolerances()
        lp = self.lp
        if self.status is Status.OPTIMAL:
            r = self.residuals()
            scale = 1.0 + float(np.max(np.abs(lp.b), initial=0.0))
            return (r["primal"] <= tol.feasibility * scale
                    and r["dual"] <= tol.feasibility
                    and r["complementarity"] <= tol.feasibility * scale
                    and r["gap"] <= tol.duality_gap * (1.0 + abs(self.value)))
        if self.status is Status.INFEASIBLE:
            return check_farkas(lp, self.farkas, tol.feasibility)
        return check_ray(lp, self.ray, tol.feasibility)


def optimality_residuals(lp: LinearProgram, x: np.ndarray, y: np.ndarray) -> dict[str, float]:
    sgn = lp.sense_signs()
    Ax = lp.A @ x
    viol = np.where(sgn > 0, Ax - lp.b, np.where(sgn < 0, lp.b - Ax, np.abs(Ax - lp.b)))
    bviol = np.maximum(np.maximum(lp.lb - x, x - lp.ub), 0.0)
    primal = float(max(np.max(viol, initial=0.0), np.max(bviol, initial=0.0), 0.0))

    # work with a minimisation view: min s*c x, multipliers s*y
    s = -1.0 if lp.maximize else 1.0
    cy = s * lp.c
    yy = s * y
    # min-problem multipliers: <= rows nonpositive, >= rows nonnegative
    dual_sign = np.where(sgn > 0, np.maximum(yy, 0.0), np.where(sgn < 0, np.maximum(-yy, 0.0), 0.0))
    r = cy - lp.A.T @ yy
    r = np.where(np.abs(r) <= 1e-12 * (1.0 + np.abs(cy)), 0.0, r)
    at_lb = np.isfinite(lp.lb) & (np.abs(x - lp.lb) <= 1e-9 * (1 + np.abs(lp.lb)))
    at_ub = np.isfinite(lp.ub) & (np.abs(x - lp.ub) <= 1e-9 * (1 + np.abs(lp.ub)))
    # reduced cost must be >= 0 where only the lower bound can be active, <= 0 at upper
    rc_viol = np.where(at_lb & at_ub, 0.0,
                       np.where(at_lb, np.maximum(-r, 0.0),
                                np.where(at_ub, np.maximum(r, 0.0), np.abs(r))))
    dual = float(max(np.max(dual_sign, initial=0.0), np.max(rc_viol, initial=0.0)))

    slack = Ax - lp.b
    comp_rows = np.abs(yy * slack)
    bound_dist = np.where(r > 0, np.where(np.isfinite(lp.lb), x - lp.lb, np.inf),
                          np.where(np.isfinite(lp.ub), lp.ub - x, np.inf))
    with np.errstate(invalid="ignore"):
        comp_cols = np.where(r == 0, 0.0, np.abs(r) * bound_dist)
    complementarity = float(max(np.max(comp_rows, initial=0.0), np.max(comp_cols, initial=0.0)))

    primal_val = float(cy @ x)
    bound_term = np.where(r > 0, lp.lb, np.where(r < 0, lp.ub, 0.0))
    with np.errstate(invalid="ignore"):
        bound_term = np.where(r == 0, 0.0, np.where(np.isfinite(bound_term), r * bound_term, np.inf))
    dual_val = float(lp.b @ yy + np.sum(bound_term))
    gap = abs(primal_val - dual_val)
    return {"primal": primal, "dual": dual, "complementarity": complementarity, "gap": gap}


def check_farkas(lp: LinearProgram, lam: np.ndarray | None, tol: float = 1e-8) -> bool:
    if lam is None:
        return False
    sgn = lp.sense_signs()
    if np.any(lam[sgn != 0] < -tol):
        return False
    flip = np.where(sgn < 0, -1.0, 1.0)
    G = lp.A * flip[:, None]
    h = lp.b * flip
    r = lam @ G
    lo = np.where(r > 0, lp.lb, lp.ub)
    with np.errstate(invalid="ignore"):
        terms = np.where(np.abs(r) <= tol * (1 + np.max(np.abs(lam), initial=0.0)), 0.0, r * lo)
    if np.any(~np.isfinite(terms)):
        return False
    scale = 1.0 + float(np.sum(np.abs(lam) * (1 + np.abs(h))))
    return float(np.sum(terms)) - float(lam @ h) > tol * scale


def check_ray(lp: LinearProgram, d: np.ndarray | None, tol: float = 1e-8) -> bool:
    if d is None:
        return False
    sgn = lp.sense_signs()
    Ad = lp.A @ d
    scale = 1.0 + float(np.max(np.abs(d), initial=0.0))
    ok_rows = np.where(sgn > 0, Ad <= tol * scale, np.where(sgn < 0, Ad >= -tol * scale,
                                                             np.abs(Ad) <= tol * scale))
    ok_lb = ~np.isfinite(lp.lb) | (d >= -tol * scale)
    ok_ub = ~np.isfinite(lp.ub) | (d <= tol * scale)
    gain = lp.c @ d if lp.maximize else -(lp.c @ d)
    return bool(np.all(ok_rows) and np.all(ok_lb) and np.all(ok_ub) and gain > tol * scale)


class LPBuilder:
    """Incremental LP assembly with sparse row specification."""

    def __init__(self):
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._names: list[str] = []
        self._rows: list[tuple[np.ndarray, np.ndarray]] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []
        self._c: dict[int, float] = {}

    @property
    def num_vars(self) -> int:
        return len(self._lb)

    @property
    def num_rows(self) -> int:
        return len(self._rhs)

    def add_vars(self, n: int, lb: float = -np.inf, ub: float = np.inf, name: str = "v") -> np.ndarray:
        start = len(self._lb)
        self._lb.extend([lb] * n)
        self._ub.extend([ub] * n)
        self._names.extend(f"{name}_{k}" for k in range(n))
        return np.arange(start, start + n)

    def add_row(self, idx, coef, sense: str, rhs: float) -> int:
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        coef = np.broadcast_to(np.asarray(coef, dtype=float), idx.shape).copy()
        self._rows.append((idx, coef))
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        return len(self._rhs) - 1

    def add_objective(self, idx, coef) -> None:
        idx = np.atleast_1d(np.asarray(idx, dtype=int))
        coef = np.broadcast_to(np.asarray(coef, dtype=float), idx.shape)
        for i, v in zip(idx.tolist(), coef.tolist()):
            self._c[i] = self._c.get(i, 0.0) + v

    def scale_objective(self, factor: float) -> None:
        self._c = {i: factor * v for i, v in self._c.items()}

    def build(self, maximize: bool = False) -> LinearProgram:
        n = len(self._lb)
        A = np.zeros((len(self._rows), n))
        for r, (idx, coef) in enumerate(self._rows):
            np.add.at(A[r], idx, coef)
        c = np.zeros(n)
        for i, v in self._c.items():
            c[i] = v
        return LinearProgram(c=c, A=A, senses=tuple(self._senses), b=np.array(self._rhs),
                             lb=np.array(self._lb, dtype=float), ub=np.array(self._ub, dtype=float),
                             maximize=maximize, names=tuple(self._names))


# --------------------------------------------------------------------------
# standard form

@dataclass
class _StdForm:
    A: np.ndarray            # rows x cols, equality form, nonnegative rhs
    b: np.ndarray
    c: np.ndarray            # minimisation costs on structural + slack columns
    const: float             # objective constant from variable shifts
    row_factor: np.ndarray   # std row = row_factor * (original <=-normalised row); len = m_orig + bound rows
    row_origin: np.ndarray   # original row index, or -1 for bound rows
    slack_basis: np.ndarray  # per std row: slack column usable as initial basis, or -1
    col_var: np.ndarray      # original variable of each structural column, -1 for slacks
    col_sign: np.ndarray     # +1/-1 orientation of structural column wrt the variable
    offset: np.ndarray       # x = offset + sum col_sign * z
    n_struct: int


def _standard_form(lp: LinearProgram) -> _StdForm:
    m, n = lp.A.shape
    sgn = lp.sense_signs()
    cols: list[np.ndarray] = []
    col_var: list[int] = []
    col_sign: list[float] = []
    cost: list[float] = []
    offset = np.zeros(n)
    obj_sign = -1.0 if lp.maximize else 1.0
    bound_rows: list[tuple[int, float]] = []   # (structural column, capacity)
    for j in range(n):
        lo, hi = lp.lb[j], lp.ub[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append(lp.A[:, j]); col_var.append(j); col_sign.append(1.0); cost.append(obj_sign * lp.c[j])
            if np.isfinite(hi):
                bound_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append(-lp.A[:, j]); col_var.append(j); col_sign.append(-1.0); cost.append(-obj_sign * lp.c[j])
        else:
            cols.append(lp.A[:, j]); col_var.append(j); col_sign.append(1.0); cost.append(obj_sign * lp.c[j])
            cols.append(-lp.A[:, j]); col_var.append(j); col_sign.append(-1.0); cost.append(-obj_sign * lp.c[j])
    n_struct = len(cols)
    S = np.column_stack(cols) if cols else np.zeros((m, 0))
    rhs = lp.b - lp.A @ offset
    flip = np.where(sgn < 0, -1.0, 1.0)
    S = S * flip[:, None]
    rhs = rhs * flip
    nb = len(bound_rows)
    if nb:
        B = np.zeros((nb, n_struct))
        for k, (col, cap) in enumerate(bound_rows):
            B[k, col] = 1.0
        S = np.vstack([S, B])
        rhs = np.concatenate([rhs, [cap for _, cap in bound_rows]])
    is_ineq = np.concatenate([sgn != 0, np.ones(nb, dtype=bool)])
    mt = m + nb
    n_slack = int(is_ineq.sum())
    slack = np.zeros((mt, n_slack))
    slack_col = np.full(mt, -1)
    k = 0
    for r in range(mt):
        if is_ineq[r]:
            slack[r, k] = 1.0
            slack_col[r] = n_struct + k
            k += 1
    A = np.hstack([S, slack])
    # row equilibration
    scale = np.max(np.abs(A), axis=1)
    scale = np.where(scale > 0, scale, 1.0)
    orient = np.where(rhs < 0, -1.0, 1.0)
    factor = orient / scale
    A = A * factor[:, None]
    rhs = rhs * factor
    slack_basis = np.where((slack_col >= 0) & (orient > 0), slack_col, -1)
    c = np.concatenate([np.array(cost, dtype=float), np.zeros(n_slack)])
    row_factor = factor * np.concatenate([flip, np.ones(nb)])
    row_origin = np.concatenate([np.arange(m), -np.ones(nb, dtype=int)])
    return _StdForm(A=A, b=rhs, c=c, const=float(obj_sign * lp.c @ offset), row_factor=row_factor,
                    row_origin=row_origin, slack_basis=slack_basis,
                    col_var=np.array(col_var + [-1] * n_slack, dtype=int),
                    col_sign=np.array(col_sign + [0.0] * n_slack), offset=offset, n_struct=n_struct)


# --------------------------------------------------------------------------
# tableau simplex

class _Unbounded(Exception):
    def __init__(self, col: int):
        self.col = col


class _Tableau:
    """Tableau ``B^{-1} [A | b]`` over a fixed column set with a basis."""

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: np.ndarray, tol: Tolerances):
        self.A0 = A
        self.b0 = b
        self.basis = basis.copy()
        self.tol = tol
        self.iterations = 0
        self.refactor()

    def refactor(self) -> None:
        B = self.A0[:, self.basis]
        rhs = np.hstack([self.A0, self.b0[:, None]])
        try:
            self.T = np.linalg.solve(B, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis during refactorisation") from exc
        self.T[:, -1] = np.where(np.abs(self.T[:, -1]) < self.tol.feasibility * 1e-3, 0.0, self.T[:, -1])
        self._since_refactor = 0

    def duals(self, c: np.ndarray) -> np.ndarray:
        B = self.A0[:, self.basis]
        return np.linalg.solve(B.T, c[self.basis])

    def reduced_costs(self, c: np.ndarray) -> np.ndarray:
        return c - self.duals(c) @ self.A0

    def pivot(self, r: int, q: int) -> None:
        T = self.T
        piv = T[r, q]
        T[r] /= piv
        col = T[:, q].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        T[:, q] = 0.0
        T[r, q] = 1.0
        self.basis[r] = q
        self.iterations += 1
        self._since_refactor += 1
        if self._since_refactor >= self.tol.refactor_every:
            self.refactor()

    def run(self, c: np.ndarray, allowed: np.ndarray) -> None:
        """Minimise ``c`` over the current tableau; raises ``_Unbounded``."""
        tol = self.tol
        d = self.reduced_costs(c)
        dtol = 1e-9 * (1.0 + float(np.max(np.abs(c), initial=0.0)))
        bland = False
        degenerate = 0
        is_basic = np.zeros(self.A0.shape[1], dtype=bool)
        is_basic[self.basis] = True
        while True:
            if self.iterations > tol.max_iter:
                raise NumericalFailure("iteration limit reached")
            cand = allowed & ~is_basic & (d < -dtol)
            if not cand.any():
                # confirm with a fresh factorisation before declaring optimality
                if self._since_refactor:
                    self.refactor()
                    d = self.reduced_costs(c)
                    if (allowed & ~is_basic & (d < -dtol)).any():
                        continue
                return
            if bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                q = int(np.argmin(np.where(cand, d, np.inf)))
            col = self.T[:, q]
            rhs = self.T[:, -1]
            pos = col > tol.pivot
            if not pos.any():
                raise _Unbounded(q)
            ratios = np.full(col.shape, np.inf)
            ratios[pos] = np.maximum(rhs[pos], 0.0) / col[pos]
            rmin = ratios.min()
            ties = np.flatnonzero(ratios <= rmin + 1e-12 * (1.0 + rmin))
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(col[ties])])
            if rmin <= tol.feasibility * 1e-3:
                degenerate += 1
                if degenerate > tol.degenerate_limit:
                    bland = True
            else:
                degenerate = 0
                bland = False
            leaving = self.basis[r]
            dq = d[q]
            self.pivot(r, q)
            if self._since_refactor == 0:
                d = self.reduced_costs(c)
            else:
                d = d - dq * self.T[r, :-1]
                d[q] = 0.0
            is_basic[leaving] = False
            is_basic[q] = True
            neg = self.T[:, -1] < 0
            if neg.any():
                self.T[neg & (self.T[:, -1] > -tol.feasibility), -1] = 0.0


def solve(lp: LinearProgram, tol: Tolerances | None = None) -> LpSolution:
    """Solve ``lp`` with the two-phase simplex method.

    The result is deterministic for identical input. ``NumericalFailure`` is
    raised if the final basis cannot be certified after ``tol.restarts``
    refactorisation rounds. ``tol`` defaults to the active tolerances (see
    :func:`use_tolerances`).
    """
    tol = tol or active_tolerances()
    std = _standard_form(lp)
    m, ncols = std.A.shape
    if m == 0:
        return _solve_unconstrained(lp, std)

    need_art = std.slack_basis < 0
    n_art = int(need_art.sum())
    art = np.zeros((m, n_art))
    art[np.flatnonzero(need_art), np.arange(n_art)] = 1.0
    A1 = np.hstack([std.A, art])
    basis = std.slack_basis.copy()
    basis[need_art] = ncols + np.arange(n_art)
    c1 = np.concatenate([np.zeros(ncols), np.ones(n_art)])
    tab = _Tableau(A1, std.b, basis, tol)
    all_cols = np.ones(ncols + n_art, dtype=bool)

    # phase 1
    if n_art:
        for attempt in range(tol.restarts + 1):
            try:
                tab.run(c1, all_cols)
            except _Unbounded:  # pragma: no cover - phase 1 is bounded below by 0
                raise NumericalFailure("phase 1 reported unboundedness")
            infeas = float(c1[tab.basis] @ tab.T[:, -1])
            w = tab.duals(c1)
            d1 = c1 - w @ A1
            if np.min(d1, initial=0.0) >= -1e-9:
                break
        scale = 1.0 + float(np.max(np.abs(std.b), initial=0.0))
        if infeas > tol.feasibility * scale:
            lam = _farkas_from_phase1(lp, std, w)
            if not check_farkas(lp, lam, tol.feasibility):
                lam = _farkas_by_lp(lp, tol)
            return LpSolution(Status.INFEASIBLE, farkas=lam, iterations=tab.iterations, lp=lp)
        _drive_out_artificials(tab, ncols, tol)

    keep_rows = tab.keep_rows if hasattr(tab, "keep_rows") else np.arange(m)
    # phase 2 on structural + slack columns only
    tab2 = _Tableau(std.A[keep_rows], std.b[keep_rows], tab.basis.copy(), tol)
    tab2.iterations = tab.iterations
    allowed = np.ones(ncols, dtype=bool)
    for attempt in range(tol.restarts + 1):
        try:
            tab2.run(std.c, allowed)
        except _Unbounded as ub:
            ray = _ray(lp, std, tab2, ub.col)
            x = _primal(lp, std, tab2)
            return LpSolution(Status.UNBOUNDED, x=x, ray=ray, iterations=tab2.iterations, lp=lp)
        if np.all(tab2.T[:, -1] >= -tol.feasibility):
            break
        _repair_primal(tab2, tol)
    else:
        raise NumericalFailure("could not restore primal feasibility after restarts")

    x = _primal(lp, std, tab2)
    w = np.zeros(m)
    w[keep_rows] = tab2.duals(std.c)
    duals = _row_duals(lp, std, w)
    rc = lp.c - lp.A.T @ duals
    sol = LpSolution(Status.OPTIMAL, x=x, value=float(lp.c @ x), duals=duals, reduced_costs=rc,
                     iterations=tab2.iterations, lp=lp)
    return sol


def _solve_unconstrained(lp: LinearProgram, std: _StdForm) -> LpSolution:
    s = -1.0 if lp.maximize else 1.0
    x = np.where(np.isfinite(lp.lb), lp.lb, np.where(np.isfinite(lp.ub), lp.ub, 0.0))
    improving = s * lp.c < 0
    bad = (improving & ~np.isfinite(lp.ub)) | (~improving & (s * lp.c > 0) & ~np.isfinite(lp.lb))
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        d = np.zeros(lp.num_vars)
        d[j] = 1.0 if improving[j] else -1.0
        return LpSolution(Status.UNBOUNDED, x=x, ray=d, lp=lp)
    x = np.where(improving, lp.ub, np.where(s * lp.c > 0, lp.lb, x))
    return LpSolution(Status.OPTIMAL, x=x, value=float(lp.c @ x), duals=np.zeros(0),
                      reduced_costs=lp.c.copy(), lp=lp)


def _drive_out_artificials(tab: _Tableau, ncols: int, tol: Tolerances) -> None:
    keep = []
    for r in range(tab.T.shape[0]):
        if tab.basis[r] < ncols:
            keep.append(r)
            continue
        row = tab.T[r, :ncols]
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-7:
            tab.pivot(r, j)
            keep.append(r)
        # else: redundant row, dropped
    tab.refactor()
    keep = np.array(keep, dtype=int)
    tab.keep_rows = keep
    tab.basis = tab.basis[keep]


def _repair_primal(tab: _Tableau, tol: Tolerances) -> None:
    tab.refactor()
    neg = tab.T[:, -1] < -tol.feasibility
    if neg.any():
        raise NumericalFailure("basis lost primal feasibility")


def _primal(lp: LinearProgram, std: _StdForm, tab: _Tableau) -> np.ndarray:
    z = np.zeros(std.A.shape[1])
    z[tab.basis] = np.maximum(tab.T[:, -1], 0.0)
    x = std.offset.copy()
    structural = z[: std.n_struct]
    np.add.at(x, std.col_var[: std.n_struct], std.col_sign[: std.n_struct] * structural)
    return x


def _ray(lp: LinearProgram, std: _StdForm, tab: _Tableau, q: int) -> np.ndarray:
    dz = np.zeros(std.A.shape[1])
    dz[q] = 1.0
    dz[tab.basis] = -tab.T[:, q]
    d = np.zeros(lp.num_vars)
    np.add.at(d, std.col_var[: std.n_struct], std.col_sign[: std.n_struct] * dz[: std.n_struct])
    return d


def _row_duals(lp: LinearProgram, std: _StdForm, w: np.ndarray) -> np.ndarray:
    m = lp.num_rows
    y = w[:m] * std.row_factor[:m]
    return -y if lp.maximize else y


def _farkas_from_phase1(lp: LinearProgram, std: _StdForm, w: np.ndarray) -> np.ndarray:
    m = lp.num_rows
    flip = np.where(lp.sense_signs() < 0, -1.0, 1.0)
    # std row = factor * flip * original row; normalised row = flip * original row
    lam = -w[:m] * std.row_factor[:m] * flip
    sgn = lp.sense_signs()
    lam = np.where((sgn != 0) & (lam < 0) & (lam > -1e-9), 0.0, lam)
    return lam


def _farkas_by_lp(lp: LinearProgram, tol: Tolerances) -> np.ndarray:
    """Fallback certificate via the alternative system (feasible when lp is not)."""
    sgn = lp.sense_signs()
    flip = np.where(sgn < 0, -1.0, 1.0)
    G = lp.A * flip[:, None]
    h = lp.b * flip
    m, n = G.shape
    bld = LPBuilder()
    lam = bld.add_vars(m, 0.0, np.inf, "lam")
    for i in np.flatnonzero(sgn == 0):
        bld._lb[lam[i]] = -np.inf
    has_lb = np.isfinite(lp.lb)
    has_ub = np.isfinite(lp.ub)
    rp = bld.add_vars(n, 0.0, np.inf, "rp")
    rm = bld.add_vars(n, 0.0, np.inf, "rm")
    for j in range(n):
        if not has_lb[j]:
            bld._ub[rp[j]] = 0.0
        if not has_ub[j]:
            bld._ub[rm[j]] = 0.0
        # lam @ G[:, j] = rp_j - rm_j
        bld.add_row(np.concatenate([lam, [rp[j], rm[j]]]),
                    np.concatenate([G[:, j], [-1.0, 1.0]]), "=", 0.0)
    # lam @ h - (rp @ lb - rm @ ub) = -1
    lo = np.where(has_lb, lp.lb, 0.0)
    hi = np.where(has_ub, lp.ub, 0.0)
    bld.add_row(np.concatenate([lam, rp, rm]), np.concatenate([h, -lo, hi]), "=", -1.0)
    alt = solve(bld.build(), replace(tol, restarts=0))
    if alt.status is not Status.OPTIMAL:
        raise NumericalFailure("phase 1 reported infeasibility without a certificate")
    return alt.x[lam]


def to_lp_format(lp: LinearProgram) -> str:
    """Render ``lp`` in the CPLEX LP text layout."""
    names = lp.names or tuple(f"x{j}" for j in range(lp.num_vars))
    names = [n.replace(" ", "_") for n in names]

    def expr(coefs: np.ndarray) -> str:
        parts = []
        for j in np.flatnonzero(coefs):
            v = coefs[j]
            parts.append(f"{'-' if v < 0 else '+'} {abs(v):.17g} {names[j]}")
        text = " ".join(parts) or "0 " + names[0]
        return text[2:] if text.startswith("+ ") else text

    lines = ["Maximize" if lp.maximize else "Minimize", f" obj: {expr(lp.c)}", "Subject To"]
    ops = {1: "<=", -1: ">=", 0: "="}
    for i, s in enumerate(lp.sense_signs()):
        lines.append(f" r{i}: {expr(lp.A[i])} {ops[int(s)]} {lp.b[i] + 0.0:.17g}")
    lines.append("Bounds")
    for j in range(lp.num_vars):
        lo, hi = lp.lb[j], lp.ub[j]
        if np.isinf(lo) and np.isinf(hi):
            lines.append(f" {names[j]} free")
        else:
            los = "-inf" if np.isinf(lo) else f"{lo:.17g}"
            his = "+inf" if np.isinf(hi) else f"{hi:.17g}"
            lines.append(f" {los} <= {names[j]} <= {his}")
    lines.append("End")
    return "\n".join(lines) + "\n"
