"""Dense two-phase revised simplex.

Linear programs are stated as ``max`` or ``min c·x`` over ``x >= 0`` subject
to rows ``a_k·x (<=|=|>=) b_k``. The basis is held as an LU factorisation
of a reference basis followed by a file of eta (pivot) updates, and is
refactorised every ``REFACTOR_EVERY`` pivots. Rows and columns are equilibrated
to unit max-norm before solving.
Pricing is Dantzig's rule; after ``STALL_LIMIT`` consecutive degenerate
pivots it falls back to Bland's rule until the objective moves again.

Phase 1 minimises the total mass of artificial variables. The problem is
declared infeasible when that minimum exceeds ``feas_tol * (1 + ||b||_1)``.
"""
from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy import linalg

from .errors import DomainError, SolverError

__all__ = [
    "Sense",
    "Status",
    "LinearProgram",
    "SolveResult",
    "Feasibility",
    "solve",
    "check_feasible",
    "dump_lp",
    "load_lp",
]

REFACTOR_EVERY = 100
STALL_LIMIT = 50
_PIVOT_TOL = 1e-11
_PHASE1_TOL = 1e-12
_CERTIFY_ROUNDS = 5
_RELATIONS = ("<=", "=", ">=")


class Sense(str, Enum):
    MAX = "MAX"
    MIN = "MIN"


class Status(str, Enum):
    OPTIMAL = "OPTIMAL"
    INFEASIBLE = "INFEASIBLE"
    UNBOUNDED = "UNBOUNDED"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``sense c·x`` subject to ``A x (rel) b`` and ``x >= 0``."""

    c: np.ndarray
    A: np.ndarray
    relations: tuple
    b: np.ndarray
    sense: Sense = Sense.MAX

    def __post_init__(self):
        c = np.array(self.c, dtype=float).ravel()
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).ravel()
        if A.size == 0:
            A = A.reshape(0, len(c))
        rel = tuple(self.relations)
        if len(c) < 1:
            raise DomainError("a linear program needs at least one variable")
        if A.ndim != 2 or A.shape[1] != len(c):
            raise DomainError(f"constraint matrix shape {A.shape} does not match {len(c)} variables")
        if len(rel) != A.shape[0] or len(b) != A.shape[0]:
            raise DomainError("relations, rhs and rows differ in count")
        bad = [r for r in rel if r not in _RELATIONS]
        if bad:
            raise DomainError(f"unknown relation(s) {bad}")
        for name, arr in (("objective", c), ("matrix", A), ("rhs", b)):
            if not np.all(np.isfinite(arr)):
                raise DomainError(f"non-finite entries in {name}")
        for name, arr in (("c", c), ("A", A), ("b", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "relations", rel)
        object.__setattr__(self, "sense", Sense(self.sense))

    @classmethod
    def from_rows(cls, c, rows, sense=Sense.MAX):
        """Build from an iterable of ``(coefficients, relation, rhs)``."""
        rows = list(rows)
        A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), len(c))
        return cls(c, A, tuple(r[1] for r in rows), [r[2] for r in rows], sense)

    @property
    def n(self):
        return len(self.c)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def rows(self):
        return [(self.A[k], self.relations[k], float(self.b[k])) for k in range(self.m)]

    def with_objective(self, c, sense):
        return LinearProgram(c, self.A, self.relations, self.b, sense)

    def with_row(self, a, relation, rhs):
        return LinearProgram(
            self.c,
            np.vstack([self.A, np.asarray(a, float)[None, :]]),
            self.relations + (relation,),
            np.append(self.b, rhs),
            self.sense,
        )

    def residuals(self, x):
        """Per-row constraint violation at ``x`` (zero when satisfied)."""
        act = self.A @ x
        viol = np.zeros(self.m)
        rel = np.array(self.relations)
        le, ge, eq = rel == "<=", rel == ">=", rel == "="
        viol[le] = np.maximum(act[le] - self.b[le], 0.0)
        viol[ge] = np.maximum(self.b[ge] - act[ge], 0.0)
        viol[eq] = np.abs(act[eq] - self.b[eq])
        return viol


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Outcome of :func:`solve`.

    ``objective_value`` and ``solution`` are set iff the status is OPTIMAL,
    ``infeasibility_measure`` iff it is INFEASIBLE. ``basis`` lists the
    indices of the basic columns in the solver's standard form (structural
    variables come first).
    """

    status: Status
    objective_value: float = None
    solution: np.ndarray = None
    infeasibility_measure: float = None
    iterations: int = 0
    basis: tuple = None
    reduced_costs: np.ndarray = None


@dataclass(frozen=True, eq=False)
class Feasibility:
    feasible: bool
    infeasibility_measure: float
    point: np.ndarray = None

    def __bool__(self):
        return self.feasible

    def __iter__(self):
        yield self.feasible
        yield self.infeasibility_measure


class _RevisedSimplex:
    """Mutable solver state for one program; not shared between threads."""

    def __init__(self, lp, feas_tol, opt_tol, max_iter):
        self.lp = lp
        self.opt_tol = opt_tol
        m, n = lp.m, lp.n
        A = np.array(lp.A)
        b = np.array(lp.b)
        rel = list(lp.relations)
        for k in np.flatnonzero(b < 0):
            A[k] *= -1
            b[k] *= -1
            rel[k] = {"<=": ">=", ">=": "<=", "=": "="}[rel[k]]

        # equilibrate: unit max-norm rows, then unit max-norm columns
        row_scale = np.abs(A).max(axis=1) if n else np.ones(m)
        row_scale[row_scale == 0] = 1.0
        A = A / row_scale[:, None]
        b = b / row_scale
        col_scale = np.abs(A).max(axis=0) if m else np.ones(n)
        col_scale[col_scale == 0] = 1.0
        A = A / col_scale
        self.row_scale, self.col_scale = row_scale, col_scale

        ineq = [k for k in range(m) if rel[k] != "="]
        needs_art = [k for k in range(m) if rel[k] != "<="]
        n_slack, n_art = len(ineq), len(needs_art)
        N = n + n_slack + n_art
        T = np.zeros((m, N))
        T[:, :n] = A
        basis = np.empty(m, dtype=np.intp)
        for j, k in enumerate(ineq):
            T[k, n + j] = 1.0 if rel[k] == "<=" else -1.0
            if rel[k] == "<=":
                basis[k] = n + j
        self.art_units = np.zeros(N)
        for j, k in enumerate(needs_art):
            T[k, n + n_slack + j] = 1.0
            basis[k] = n + n_slack + j
            # converts an artificial's value back to original row units
            self.art_units[n + n_slack + j] = row_scale[k]
        self.T = T
        self.b = b
        self.n, self.m, self.N = n, m, N
        self.art_start = n + n_slack
        self.is_art = np.zeros(N, dtype=bool)
        self.is_art[self.art_start:] = True
        self.basis = basis
        self.iterations = 0
        self.phase2 = False
        self.max_iter = max_iter if max_iter is not None else 50 * (n + m)
        self.b_norm = 1.0 + float(np.abs(lp.b).sum())
        self.feas_abs = feas_tol * self.b_norm
        # primal tolerance of the ratio test, far below any slack of interest
        self.ptol = 1e-13 * (1.0 + float(np.abs(b).max(initial=0.0)))
        # residual of B x = b still well inside the feasibility tolerance
        self.rtol = 1e-2 * feas_tol * (1.0 + float(np.abs(b).max(initial=0.0)))
        self.refactor()

    # -- basis factorisation: LU of a reference basis times an eta file ------

    def refactor(self):
        B = self.T[:, self.basis]
        if self.m:
            lu = linalg.lu_factor(B, check_finite=False)
            if np.any(np.abs(np.diag(lu[0])) < 1e-300):
                raise SolverError("basis matrix became singular")
            self.lu = lu
        self.etas = []
        fresh = self.ftran(self.b)
        old = getattr(self, "xB", None)
        if old is not None and fresh.min(initial=0.0) < -self.ptol and old.min(initial=0.0) > fresh.min():
            # In an ill-conditioned basis the updated and the recomputed values
            # can differ along a near-null direction while both solve B x = b
            # far inside the feasibility tolerance. Keep the updated one then,
            # since it is closer to primal feasibility.
            B = self.T[:, self.basis]
            r_old = np.abs(B @ old - self.b).max()
            r_new = np.abs(B @ fresh - self.b).max()
            if r_old <= max(10.0 * r_new, self.rtol):
                fresh = old
        self.xB = fresh

    def ftran(self, a):
        """Solve ``B u = a``."""
        if not self.m:
            return np.zeros(0)
        u = linalg.lu_solve(self.lu, a, check_finite=False)
        for r, col in self.etas:
            t = u[r] / col[r]
            u -= t * col
            u[r] = t
        return u

    def btran(self, v):
        """Solve ``B^T y = v``."""
        if not self.m:
            return np.zeros(0)
        v = np.array(v, dtype=float)
        for r, col in reversed(self.etas):
            v[r] = (v[r] - (v @ col - v[r] * col[r])) / col[r]
        return linalg.lu_solve(self.lu, v, trans=1, check_finite=False)

    def pivot(self, r, q, u):
        self.basis[r] = q
        self.etas.append((r, u.copy()))
        if len(self.etas) >= REFACTOR_EVERY:
            self.refactor()

    # -- main loop ------------------------------------------------------------

    def run(self, cost, allowed, tol):
        """Minimise ``cost`` from the current feasible basis.

        Returns ``"optimal"`` or ``"unbounded"`` and the final reduced costs.
        """
        stall = 0
        bland = False
        last_obj = math.inf
        while True:
            y = self.btran(cost[self.basis])
            d = cost - y @ self.T
            d[~allowed] = 0.0
            d[self.basis] = 0.0
            cand = d < -tol
            if not cand.any():
                return "optimal", d
            if self.iterations >= self.max_iter:
                raise SolverError(
                    f"simplex iteration cap of {self.max_iter} exceeded "
                    f"({self.m} rows, {self.n} variables)"
                )
            q = int(np.flatnonzero(cand)[0]) if bland else int(np.argmin(d))
            u = self.ftran(self.T[:, q])
            r = self.ratio_test(u, bland)
            if r is None:
                return "unbounded", d
            leaving_art = self.is_art[self.basis[r]]
            theta = max(self.xB[r] / u[r], 0.0)
            self.xB -= theta * u
            self.xB[r] = theta
            self.pivot(r, q, u)
            self.iterations += 1
            if self.phase2 and leaving_art:
                self.refactor()

            obj = float(cost[self.basis] @ self.xB)
            if obj < last_obj - 1e-14 * (1.0 + abs(last_obj)):
                stall = 0
                bland = False
            else:
                stall += 1
                if stall >= STALL_LIMIT:
                    bland = True
            last_obj = obj

    def ratio_test(self, u, bland):
        """Leaving row for entering direction ``u`` (two-pass Harris test)."""
        xB = self.xB
        pos = u > _PIVOT_TOL
        # artificials still basic in phase 2 must not grow
        art_neg = self.is_art[self.basis] & (u < -_PIVOT_TOL) & self.phase2
        if art_neg.any():
            return int(np.flatnonzero(art_neg)[0])
        if not pos.any():
            return None
        idx = np.flatnonzero(pos)
        xs = np.maximum(xB[idx], 0.0)
        ratios = xs / u[idx]
        if bland:
            best = ratios.min()
            tie = idx[ratios <= best + self.ptol / u[idx]]
            return int(tie[np.argmin(self.basis[tie])])
        theta_max = ((xs + self.ptol) / u[idx]).min()
        ok = idx[ratios <= theta_max]
        return int(ok[np.argmax(u[ok])])

    def absorb_residual(self):
        """Move the leftover phase-1 infeasibility into the right-hand side.

        Each basic artificial has a unit column, so subtracting its value from
        its row's rhs leaves the basic solution feasible for a program within
        ``w`` of the original one, with every artificial at zero.
        """
        for r in np.flatnonzero(self.is_art[self.basis]):
            k = int(np.flatnonzero(self.T[:, self.basis[r]])[0])
            self.b[k] -= self.xB[r]
        self.refactor()

    def drive_out_artificials(self):
        """Pivot zero-level artificials out of the basis where possible."""
        self.absorb_residual()
        for r in range(self.m):
            if not self.is_art[self.basis[r]] or self.xB[r] > self.ptol:
                continue
            e = np.zeros(self.m)
            e[r] = 1.0
            row = self.btran(e) @ self.T[:, : self.art_start]
            basic = self.basis[self.basis < self.art_start]
            row[basic] = 0.0
            q = int(np.argmax(np.abs(row)))
            if abs(row[q]) > 1e-7:
                u = self.ftran(self.T[:, q])
                theta = self.xB[r] / u[r]
                self.xB -= theta * u
                self.xB[r] = theta
                self.pivot(r, q, u)
        self.refactor()
        self.phase2 = True

    def point(self):
        x = np.zeros(self.N)
        x[self.basis] = self.xB
        return x[: self.n] / self.col_scale

    def phase1(self):
        cost = self.is_art.astype(float)
        if cost[self.basis].any():
            self.run(cost, np.ones(self.N, dtype=bool), _PHASE1_TOL)
            self.refactor()
        return float(self.art_units[self.basis] @ np.maximum(self.xB, 0.0))


def _check_tols(feas_tol, opt_tol):
    if not feas_tol > 0 or not opt_tol > 0:
        raise DomainError("tolerances must be > 0")


def check_feasible(lp, feas_tol=1e-9, max_iter=None):
    """Run phase 1 only.

    Returns
    -------
    Feasibility
        Truthy iff a nonnegative point satisfies every row to within the
        phase-1 threshold. Unpacks as ``(feasible, infeasibility_measure)``;
        ``point`` holds the phase-1 vertex.
    """
    _check_tols(feas_tol, 1.0)
    s = _RevisedSimplex(lp, feas_tol, 1e-9, max_iter)
    w = s.phase1()
    return Feasibility(w <= s.feas_abs, w, s.point())


def solve(lp, feas_tol=1e-9, opt_tol=1e-9, max_iter=None):
    """Solve ``lp`` by the two-phase revised simplex method.

    Parameters
    ----------
    lp : LinearProgram
    feas_tol : float
        Feasibility tolerance, relative to ``1 + ||b||_1``.
    opt_tol : float
        Reduced-cost tolerance for optimality.
    max_iter : int, optional
        Pivot cap, default ``50 * (n + rows)``.

    Returns
    -------
    SolveResult

    Raises
    ------
    SolverError
        If the iteration cap is hit or the final point fails its own
        feasibility check.
    """
    _check_tols(feas_tol, opt_tol)
    s = _RevisedSimplex(lp, feas_tol, opt_tol, max_iter)
    w = s.phase1()
    if w > s.feas_abs:
        return SolveResult(Status.INFEASIBLE, infeasibility_measure=w, iterations=s.iterations)
    s.drive_out_artificials()

    sign = 1.0 if lp.sense is Sense.MIN else -1.0
    cost = np.zeros(s.N)
    cost[: s.n] = sign * np.asarray(lp.c) / s.col_scale
    # opt_tol is relative to the largest scaled cost coefficient
    cmax = float(np.abs(cost).max()) or 1.0
    # re-price after each fresh factorisation so the reduced costs returned
    # certify optimality rather than reflect accumulated eta-file drift
    for _ in range(_CERTIFY_ROUNDS):
        before = s.iterations
        state, d = s.run(cost / cmax, ~s.is_art, s.opt_tol)
        if state == "unbounded":
            return SolveResult(Status.UNBOUNDED, iterations=s.iterations)
        s.refactor()
        if s.iterations == before:
            break
    else:
        raise SolverError("reduced costs failed to certify optimality after refactorisation")
    x = s.point()
    if np.any(x < -s.feas_abs) or s.lp.residuals(x).max(initial=0.0) > s.feas_abs:
        raise SolverError("optimal point violates the constraints beyond tolerance")
    reduced = sign * cmax * d[: s.n] * s.col_scale
    return SolveResult(
        Status.OPTIMAL,
        objective_value=float(np.dot(lp.c, x)),
        solution=x,
        iterations=s.iterations,
        basis=tuple(int(j) for j in np.sort(s.basis)),
        reduced_costs=reduced,
    )


# ---------------------------------------------------------------------------
# Text dump
# ---------------------------------------------------------------------------


def _fmt(v):
    return format(float(v), ".17g")


def dump_lp(lp, path):
    """Write ``lp`` in a self-describing line format.

    ::

        # klbounds linear program
        sense MAX
        variables <n>
        objective <c_1> ... <c_n>
        row <a_1> ... <a_n> <relation> <rhs>
    """
    lines = ["# klbounds linear program", f"sense {lp.sense.value}", f"variables {lp.n}"]
    lines.append("objective " + " ".join(_fmt(v) for v in lp.c))
    for a, rel, rhs in lp.rows:
        lines.append("row " + " ".join(_fmt(v) for v in a) + f" {rel} {_fmt(rhs)}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_lp(path):
    """Inverse of :func:`dump_lp`."""
    sense, c, rows = None, None, []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            key = parts[0]
            if key == "sense":
                sense = Sense(parts[1])
            elif key == "objective":
                c = [float(v) for v in parts[1:]]
            elif key == "row":
                rows.append(([float(v) for v in parts[1:-2]], parts[-2], float(parts[-1])))
    return LinearProgram.from_rows(c, rows, sense)
