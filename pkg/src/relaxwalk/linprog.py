"""Dense two-phase simplex for small/medium LPs, with no external solver.

Models are stated in general form:

    maximize    c . x  (+ objective_offset)
    subject to  a_i . x  {<=, =, >=}  b_i      for every row i
                lo_j <= x_j <= hi_j            (either side may be infinite)

The solver shifts/splits variables into nonnegative standard form, adds
explicit rows for finite upper bounds, runs phase 1 with artificial
variables, then phase 2 on the real objective. Pivot selection is
Dantzig's most-negative rule until a run of degenerate pivots is
detected, after which Bland's rule is used permanently so termination is
guaranteed. Everything is deterministic for a fixed model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# statuses
OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"

# row senses
LE = "<="
EQ = "="
GE = ">="

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9

# consecutive non-improving pivots before switching to Bland's rule
_STALL_LIMIT = 100


@dataclass
class LpModel:
    """General-form LP. `rows` is a (m, n) matrix, one constraint per row."""

    c: np.ndarray
    rows: np.ndarray
    senses: list[str]
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    objective_offset: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        if n < 1:
            raise ValueError("LP needs at least one variable")
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if len(self.senses) != self.rows.shape[0]:
            raise ValueError("one sense per row required")
        if self.rhs.shape[0] != self.rows.shape[0]:
            raise ValueError("one rhs per row required")
        if self.lo.shape[0] != n or self.hi.shape[0] != n:
            raise ValueError("bounds must match variable count")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("rhs entries must be finite")
        for s in self.senses:
            if s not in (LE, EQ, GE):
                raise ValueError(f"unknown sense {s!r}")

    @property
    def n(self) -> int:
        return self.c.shape[0]


@dataclass
class LpOutcome:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None
    pivots: int = 0


@dataclass
class _Standardized:
    """Nonnegative-variable equivalent of an LpModel plus the recovery map."""

    A: np.ndarray
    senses: list[str]
    b: np.ndarray
    c: np.ndarray
    offset: float
    # per original variable: list of (column, sign) plus an additive base
    var_map: list[list[tuple[int, float]]]
    var_base: np.ndarray
    infeasible_bounds: bool = False


def _standardize(model: LpModel) -> _Standardized:
    n = model.n
    cols: list[np.ndarray] = []
    c_std: list[float] = []
    var_map: list[list[tuple[int, float]]] = []
    base = np.zeros(n)
    offset = model.objective_offset
    extra_rows: list[tuple[int, float]] = []
    extra_rhs: list[float] = []

    ncol = 0

    def new_col(sign: float, j: int) -> int:
        nonlocal ncol
        cols.append(sign * model.rows[:, j])
        c_std.append(sign * model.c[j])
        ncol += 1
        return ncol - 1

    for j in range(n):
        lo, hi = model.lo[j], model.hi[j]
        if lo > hi:
            return _Standardized(np.zeros((0, 0)), [], np.zeros(0), np.zeros(0),
                                 0.0, [], np.zeros(0), infeasible_bounds=True)
        if np.isfinite(lo) and lo == hi:
            # fixed variable: substitute the constant
            base[j] = lo
            offset += model.c[j] * lo
            var_map.append([])
        elif np.isfinite(lo):
            base[j] = lo
            offset += model.c[j] * lo
            k = new_col(1.0, j)
            var_map.append([(k, 1.0)])
            if np.isfinite(hi):
                extra_rows.append((k, 1.0))  # one-entry row: u_k <= hi - lo
                extra_rhs.append(hi - lo)
        elif np.isfinite(hi):
            # only an upper bound: x = hi - u, u >= 0
            base[j] = hi
            offset += model.c[j] * hi
            k = new_col(-1.0, j)
            var_map.append([(k, -1.0)])
        else:
            kp = new_col(1.0, j)
            km = new_col(-1.0, j)
            var_map.append([(kp, 1.0), (km, -1.0)])

    A = np.column_stack(cols) if cols else np.zeros((model.rows.shape[0], 0))
    b = model.rhs - model.rows @ base
    senses = list(model.senses)

    if extra_rows:
        ub_block = np.zeros((len(extra_rows), ncol))
        for r, (k, coef) in enumerate(extra_rows):
            ub_block[r, k] = coef
        A = np.vstack([A, ub_block])
        b = np.concatenate([b, np.asarray(extra_rhs)])
        senses.extend([LE] * len(extra_rows))

    return _Standardized(A, senses, b, np.asarray(c_std), offset, var_map, base)


def _run_simplex(T: np.ndarray, basis: list[int], budget: int,
                 pivots_done: int) -> tuple[str, int]:
    """Pivot the tableau in place until optimal/unbounded/budget exhausted.

    Objective row is T[-1]: entries are reduced costs z_j - c_j for a
    maximization; optimal when all >= -PIVOT_TOL.
    """
    m = T.shape[0] - 1
    bland = False
    stall = 0
    pivots = pivots_done
    while True:
        red = T[-1, :-1]
        if bland:
            neg = np.nonzero(red < -PIVOT_TOL)[0]
            if neg.size == 0:
                return OPTIMAL, pivots
            col = int(neg[0])
        else:
            col = int(np.argmin(red))
            if red[col] >= -PIVOT_TOL:
                return OPTIMAL, pivots
        ratios_col = T[:m, col]
        eligible = np.nonzero(ratios_col > PIVOT_TOL)[0]
        if eligible.size == 0:
            return UNBOUNDED, pivots
        ratios = T[eligible, -1] / ratios_col[eligible]
        best = np.min(ratios)
        ties = eligible[np.nonzero(ratios <= best + PIVOT_TOL)[0]]
        # Bland-compatible tie break: smallest basis index leaves
        row = int(min(ties, key=lambda i: basis[i]))

        if pivots >= budget:
            return ITERATION_LIMIT, pivots
        pivots += 1

        obj_before = T[-1, -1]
        piv = T[row, col]
        T[row, :] /= piv
        colvals = T[:, col].copy()
        colvals[row] = 0.0
        T -= np.outer(colvals, T[row, :])
        T[:, col] = 0.0
        T[row, col] = 1.0
        basis[row] = col

        if not bland:
            if T[-1, -1] > obj_before + 1e-12:
                stall = 0
            else:
                stall += 1
                if stall >= _STALL_LIMIT:
                    bland = True


def solve_lp(model: LpModel, max_pivots: int | None = None) -> LpOutcome:
    """Two-phase simplex solve of a general-form LP.

    `max_pivots` defaults to 50 * (variables + rows); exhausting it yields
    status ITERATION_LIMIT, which callers must treat as a solve failure
    rather than infeasibility.
    """
    std = _standardize(model)
    if std.infeasible_bounds:
        return LpOutcome(INFEASIBLE)

    m, k = std.A.shape
    if max_pivots is None:
        max_pivots = 50 * (model.n + len(model.senses) + m)

    # orient rows so rhs >= 0
    A = std.A.copy()
    b = std.b.copy()
    senses = list(std.senses)
    for i in range(m):
        if b[i] < 0:
            A[i, :] *= -1.0
            b[i] *= -1.0
            if senses[i] == LE:
                senses[i] = GE
            elif senses[i] == GE:
                senses[i] = LE

    n_slack = sum(1 for s in senses if s != EQ)
    n_art = sum(1 for s in senses if s != LE)
    total = k + n_slack + n_art
    T = np.zeros((m + 1, total + 1))
    T[:m, :k] = A
    T[:m, -1] = b

    basis: list[int] = []
    s_at, a_at = k, k + n_slack
    art_cols: list[int] = []
    for i in range(m):
        s = senses[i]
        if s == LE:
            T[i, s_at] = 1.0
            basis.append(s_at)
            s_at += 1
        elif s == GE:
            T[i, s_at] = -1.0
            s_at += 1
            T[i, a_at] = 1.0
            basis.append(a_at)
            art_cols.append(a_at)
            a_at += 1
        else:
            T[i, a_at] = 1.0
            basis.append(a_at)
            art_cols.append(a_at)
            a_at += 1

    pivots = 0
    if n_art:
        # phase 1: maximize -(sum of artificials); price out the basic ones
        art_set = set(art_cols)
        for i, bc in enumerate(basis):
            if bc in art_set:
                T[-1, :] -= T[i, :]
        for j in art_cols:
            T[-1, j] = 0.0
        status, pivots = _run_simplex(T, basis, max_pivots, pivots)
        if status == ITERATION_LIMIT:
            return LpOutcome(ITERATION_LIMIT, pivots=pivots)
        if status == UNBOUNDED:
            raise RuntimeError("phase-1 objective cannot be unbounded")
        if T[-1, -1] < -1e-8:
            return LpOutcome(INFEASIBLE, pivots=pivots)

        # drive remaining artificials out of the basis; a row is redundant
        # only if it has no usable coefficient on any structural OR slack
        # column (artificial columns sit contiguously at the end)
        redundant: list[int] = []
        for i in range(m):
            if basis[i] in art_set:
                cands = np.nonzero(np.abs(T[i, :k + n_slack]) > PIVOT_TOL)[0]
                if cands.size:
                    col = int(cands[np.argmax(np.abs(T[i, cands]))])
                    piv = T[i, col]
                    T[i, :] /= piv
                    colvals = T[:, col].copy()
                    colvals[i] = 0.0
                    T -= np.outer(colvals, T[i, :])
                    T[:, col] = 0.0
                    T[i, col] = 1.0
                    basis[i] = col
                else:
                    redundant.append(i)
        if redundant:
            keep = [i for i in range(m) if i not in set(redundant)]
            T = np.vstack([T[keep, :], T[-1:, :]])
            basis = [basis[i] for i in keep]
            m = len(keep)
        keep_cols = [j for j in range(total) if j not in art_set] + [total]
        col_renum = {old: new for new, old in enumerate(keep_cols[:-1])}
        T = T[:, keep_cols]
        basis = [col_renum[bc] for bc in basis]
        total = T.shape[1] - 1

    # phase 2: reduced costs for the real objective, then price out the basis
    T[-1, :] = 0.0
    T[-1, :k] = -std.c
    for i, bc in enumerate(basis):
        if bc < k and std.c[bc] != 0.0:
            T[-1, :] += std.c[bc] * T[i, :]
    status, pivots = _run_simplex(T, basis, max_pivots, pivots)
    if status == ITERATION_LIMIT:
        return LpOutcome(ITERATION_LIMIT, pivots=pivots)
    if status == UNBOUNDED:
        return LpOutcome(UNBOUNDED, pivots=pivots)

    u = np.zeros(total)
    for i, bc in enumerate(basis):
        u[bc] = T[i, -1]
    x = std.var_base.copy()
    for j, parts in enumerate(std.var_map):
        for col, sign in parts:
            x[j] += sign * u[col]
    objective = float(model.c @ x) + model.objective_offset
    return LpOutcome(OPTIMAL, x=x, objective=objective, pivots=pivots)


def verify_solution(model: LpModel, x: np.ndarray) -> dict:
    """Independent feasibility/objective report for a candidate point.

    Returns {"feasible": bool, "max_violation": float, "objective": float}
    where feasibility means max_violation <= FEAS_TOL.
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] != model.n:
        raise ValueError(f"point has {x.shape[0]} entries, model has {model.n}")
    worst = 0.0
    if model.rows.shape[0]:
        lhs = model.rows @ x
        for i, s in enumerate(model.senses):
            if s == LE:
                v = lhs[i] - model.rhs[i]
            elif s == GE:
                v = model.rhs[i] - lhs[i]
            else:
                v = abs(lhs[i] - model.rhs[i])
            worst = max(worst, float(v))
    lo_viol = np.where(np.isfinite(model.lo), model.lo - x, 0.0)
    hi_viol = np.where(np.isfinite(model.hi), x - model.hi, 0.0)
    if lo_viol.size:
        worst = max(worst, float(np.max(lo_viol)), float(np.max(hi_viol)))
    return {
        "feasible": worst <= FEAS_TOL,
        "max_violation": worst,
        "objective": float(model.c @ x) + model.objective_offset,
    }


def format_mps(model: LpModel, name: str = "LP") -> str:
    """Fixed-column MPS-style dump of a model, for cross-checking.

    Layout: NAME, ROWS (N objective + L/G/E rows named R1..Rm), COLUMNS
    (X1..Xn), RHS, BOUNDS (LO/UP/FR/MI/PL per finite side), ENDATA. The
    objective is written as stated (a maximization); external tools that
    minimize should negate it.
    """
    out = [f"NAME          {name}"]
    out.append("ROWS")
    out.append(" N  COST")
    tag = {LE: "L", GE: "G", EQ: "E"}
    for i, s in enumerate(model.senses):
        out.append(f" {tag[s]}  R{i + 1}")
    out.append("COLUMNS")
    for j in range(model.n):
        entries = []
        if model.c[j] != 0.0:
            entries.append(("COST", model.c[j]))
        for i in range(model.rows.shape[0]):
            if model.rows[i, j] != 0.0:
                entries.append((f"R{i + 1}", model.rows[i, j]))
        for rname, val in entries:
            out.append(f"    X{j + 1:<9} {rname:<9} {val:.12g}")
    out.append("RHS")
    for i in range(model.rows.shape[0]):
        if model.rhs[i] != 0.0:
            out.append(f"    RHS       R{i + 1:<8} {model.rhs[i]:.12g}")
    out.append("BOUNDS")
    for j in range(model.n):
        lo, hi = model.lo[j], model.hi[j]
        if np.isfinite(lo):
            out.append(f" LO BND       X{j + 1:<8} {lo:.12g}")
        else:
            out.append(f" MI BND       X{j + 1}")
        if np.isfinite(hi):
            out.append(f" UP BND       X{j + 1:<8} {hi:.12g}")
        else:
            out.append(f" PL BND       X{j + 1}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"
