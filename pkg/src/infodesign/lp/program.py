"""Dense linear programs and a two-phase tableau simplex with Bland's rule.

Problems are stated as::

    maximize    c @ x
    subject to  A_eq @ x == b_eq
                A_ge @ x >= b_ge
                lower <= x <= upper      (bounds may be infinite)
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _simplex_py

try:
    from . import _simplex_core  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on the build
    _simplex_core = None


def _default_backend() -> str:
    if os.environ.get("INFODESIGN_PURE_PYTHON", "") not in ("", "0") or _simplex_core is None:
        return "python"
    return "compiled"


BACKEND = _default_backend()


def available_backends() -> list[str]:
    return ["compiled", "python"] if _simplex_core is not None else ["python"]


class NumericalBreakdown(RuntimeError):
    """Every improving column has only near-zero pivots, or the iteration cap was hit."""


class LPStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class ToleranceConfig:
    feasibility: float = 1e-7
    optimality: float = 1e-9
    pivot: float = 1e-9
    cisr: float = 0.0
    max_iter: int | None = None
    # consecutive degenerate pivots before pricing switches to Bland's rule
    bland_after: int = 50


@dataclass(eq=False)
class LinearProgram:
    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ge: np.ndarray | None = None
    b_ge: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "equality")
        self.A_ge, self.b_ge = _rows(self.A_ge, self.b_ge, n, "inequality")
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must have one entry per variable")
        for name, arr in (("c", self.c), ("A_eq", self.A_eq), ("b_eq", self.b_eq),
                          ("A_ge", self.A_ge), ("b_ge", self.b_ge)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has NaN or infinite entries")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds contain NaN")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise ValueError("lower bound +inf or upper bound -inf")

    @property
    def num_vars(self) -> int:
        return self.c.size

    def to_bytes(self) -> bytes:
        """Canonical byte image (used to compare assembled programs)."""
        parts = [np.asarray(self.A_eq.shape, dtype=np.int64), np.asarray(self.A_ge.shape, dtype=np.int64),
                 self.c, self.A_eq, self.b_eq, self.A_ge, self.b_ge, self.lower, self.upper]
        return b"".join(np.ascontiguousarray(p).tobytes() for p in parts)


def _rows(A, b, n, what):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.asarray(A, dtype=float).reshape(-1, n) if np.size(A) else np.zeros((0, n))
    b = np.asarray(b, dtype=float).ravel()
    if b.size != A.shape[0]:
        raise ValueError(f"{what} rows: matrix has {A.shape[0]} rows, rhs has {b.size}")
    return A, b


@dataclass(frozen=True)
class DualCertificate:
    y_eq: np.ndarray
    y_ge: np.ndarray
    reduced_costs: np.ndarray
    objective: float
    gap: float
    dual_residual: float
    complementary_slackness: float


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    x: np.ndarray | None
    objective: float | None
    residual: float
    pivots: int = 0
    dual: DualCertificate | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


def constraint_residual(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest violation of any equality, inequality, or bound at ``x``."""
    x = np.asarray(x, dtype=float)
    worst = 0.0
    if lp.b_eq.size:
        worst = max(worst, float(np.max(np.abs(lp.A_eq @ x - lp.b_eq))))
    if lp.b_ge.size:
        worst = max(worst, float(np.max(lp.b_ge - lp.A_ge @ x, initial=0.0)))
    worst = max(worst, float(np.max(lp.lower - x, initial=0.0)), float(np.max(x - lp.upper, initial=0.0)))
    return worst


def check_feasible(lp: LinearProgram, point, tol: float) -> tuple[bool, float]:
    """Return ``(feasible, worst residual)`` for ``point`` against every constraint and bound."""
    point = np.asarray(point, dtype=float).ravel()
    if point.size != lp.num_vars:
        raise ValueError(f"point has {point.size} entries, program has {lp.num_vars} variables")
    res = constraint_residual(lp, point)
    return res <= tol, res


# ---------------------------------------------------------------------------
# Standard form: maximize cs @ y, As @ y == bs, y >= 0, bs >= 0.


@dataclass
class _StandardForm:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    row_sign: np.ndarray
    n_eq: int
    n_ge: int
    # x = offset + T @ y[:n_struct]
    offset: np.ndarray
    T: np.ndarray
    obj_const: float


def _standard_form(lp: LinearProgram) -> _StandardForm:
    n = lp.num_vars
    lo, up = lp.lower, lp.upper
    cols = []  # (original var, coefficient) per structural column
    offset = np.zeros(n)
    ub_rows = []
    for j in range(n):
        if np.isfinite(lo[j]):
            offset[j] = lo[j]
            cols.append((j, 1.0))
            if np.isfinite(up[j]):
                ub_rows.append((len(cols) - 1, up[j] - lo[j]))
        elif np.isfinite(up[j]):
            offset[j] = up[j]
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ns = len(cols)
    T = np.zeros((n, ns))
    for k, (j, s) in enumerate(cols):
        T[j, k] = s
    n_eq, n_ge, n_ub = lp.b_eq.size, lp.b_ge.size, len(ub_rows)
    m = n_eq + n_ge + n_ub
    A = np.zeros((m, ns + n_ge + n_ub))
    b = np.zeros(m)
    A[:n_eq, :ns] = lp.A_eq @ T
    b[:n_eq] = lp.b_eq - lp.A_eq @ offset
    A[n_eq:n_eq + n_ge, :ns] = lp.A_ge @ T
    A[n_eq:n_eq + n_ge, ns:ns + n_ge] = -np.eye(n_ge)
    b[n_eq:n_eq + n_ge] = lp.b_ge - lp.A_ge @ offset
    for k, (col, width) in enumerate(ub_rows):
        r = n_eq + n_ge + k
        A[r, col] = 1.0
        A[r, ns + n_ge + k] = 1.0
        b[r] = width
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b *= sign
    c = np.zeros(A.shape[1])
    c[:ns] = lp.c @ T
    return _StandardForm(A, b, c, sign, n_eq, n_ge, offset, T, float(lp.c @ offset))


def _run(T, basis, ncols, tol: ToleranceConfig, backend: str) -> tuple[int, int]:
    max_iter = tol.max_iter if tol.max_iter is not None else 50_000 + 50 * (T.shape[0] + T.shape[1])
    if backend == "compiled":
        if _simplex_core is None:
            raise RuntimeError("compiled simplex core is not built")
        status, it = _simplex_core.run_simplex(T, basis, ncols, tol.optimality, tol.pivot, max_iter,
                                               tol.bland_after)
    elif backend == "python":
        status, it = _simplex_py.run_simplex(T, basis, ncols, tol.optimality, tol.pivot, max_iter,
                                             tol.bland_after)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return int(status), int(it)


def solve_lp(lp: LinearProgram, tol: ToleranceConfig | None = None, backend: str | None = None) -> LPSolution:
    """Solve ``lp`` by two-phase primal simplex.

    Pricing picks the largest reduced cost (lowest index on ties) and falls
    back to Bland's rule during runs of degenerate pivots, which rules out
    cycling.  Set ``tol.bland_after = 0`` for pure Bland pricing.

    Raises:
        NumericalBreakdown: no usable pivot exists for any improving column, or
            the iteration limit is reached.
    """
    tol = tol or ToleranceConfig()
    backend = backend or BACKEND
    sf = _standard_form(lp)
    A, b = sf.A, sf.b
    m, nv = A.shape
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))

    # Phase 1: an artificial per row, maximize -sum(artificials).
    T = np.zeros((m + 1, nv + m + 1))
    T[:m, :nv] = A
    T[:m, nv:nv + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :nv] = A.sum(axis=0)
    T[m, -1] = b.sum()
    basis = np.arange(nv, nv + m, dtype=np.int64)
    status, pivots = _run(T, basis, nv, tol, backend)
    if status != 0:
        raise NumericalBreakdown(f"phase 1 stopped with status {status} after {pivots} pivots")
    if T[m, -1] > tol.feasibility * scale:
        return LPSolution(LPStatus.INFEASIBLE, None, None, float(T[m, -1]), pivots)

    # Drive remaining artificials out; rows where that is impossible are redundant.
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] < nv:
            continue
        row = np.abs(T[r, :nv])
        j = int(np.argmax(row)) if nv else 0
        if nv and row[j] > tol.pivot:
            _simplex_py._pivot(T, r, j)
            basis[r] = j
        else:
            keep[r] = False
    rows = np.flatnonzero(keep)
    T2 = np.zeros((rows.size + 1, nv + 1))
    T2[:-1, :nv] = T[rows, :nv]
    T2[:-1, -1] = T[rows, -1]
    basis2 = basis[rows].copy()
    cB = sf.c[basis2]
    T2[-1, :nv] = sf.c - cB @ T2[:-1, :nv]
    T2[-1, basis2] = 0.0
    T2[-1, -1] = -(cB @ T2[:-1, -1])
    status, it2 = _run(T2, basis2, nv, tol, backend)
    pivots += it2
    if status == 1:
        return LPSolution(LPStatus.UNBOUNDED, None, None, 0.0, pivots)
    if status != 0:
        raise NumericalBreakdown(f"phase 2 stopped with status {status} after {pivots} pivots")

    y = np.zeros(nv)
    y[basis2] = T2[:-1, -1]
    B = A[np.ix_(rows, basis2)]
    x = sf.offset + sf.T @ y[:sf.T.shape[1]]
    lam = np.zeros(m)
    try:
        yB = np.linalg.solve(B, b[rows])
        y_alt = np.zeros(nv)
        y_alt[basis2] = np.maximum(yB, 0.0)
        x_alt = sf.offset + sf.T @ y_alt[:sf.T.shape[1]]
        if constraint_residual(lp, x_alt) <= constraint_residual(lp, x):
            x = x_alt
        lam[rows] = np.linalg.solve(B.T, sf.c[basis2])
    except np.linalg.LinAlgError:  # pragma: no cover - basis is nonsingular by construction
        lam[rows] = 0.0
    residual = constraint_residual(lp, x)
    objective = float(lp.c @ x)
    dual = _dual_certificate(lp, sf, lam, x, objective)
    return LPSolution(LPStatus.OPTIMAL, x, objective, residual, pivots, dual)


def _dual_certificate(lp, sf, lam, x, objective) -> DualCertificate:
    y_all = lam * sf.row_sign
    y_eq = y_all[:sf.n_eq]
    y_ge = y_all[sf.n_eq:sf.n_eq + sf.n_ge]
    d = lp.c - lp.A_eq.T @ y_eq - lp.A_ge.T @ y_ge
    lo, up = lp.lower, lp.upper
    bound_term = 0.0
    dual_res = float(np.max(y_ge, initial=0.0))
    cs = float(np.max(np.abs(y_ge) * np.abs(lp.A_ge @ x - lp.b_ge), initial=0.0))
    for j, dj in enumerate(d):
        if dj > 0:
            if np.isfinite(up[j]):
                bound_term += dj * up[j]
                cs = max(cs, dj * (up[j] - x[j]))
            else:
                dual_res = max(dual_res, dj)
        elif dj < 0:
            if np.isfinite(lo[j]):
                bound_term += dj * lo[j]
                cs = max(cs, -dj * (x[j] - lo[j]))
            else:
                dual_res = max(dual_res, -dj)
    dual_obj = float(lp.b_eq @ y_eq + lp.b_ge @ y_ge + bound_term)
    return DualCertificate(y_eq, y_ge, d, dual_obj, dual_obj - objective, dual_res, cs)


# ---------------------------------------------------------------------------
# Fixed-format MPS


def _name(j: int) -> str:
    return f"X{j + 1:06d}"


def _num(v: float) -> str:
    """Most precise ``g`` rendering that fits the 12-character numeric field."""
    for digits in range(12, 0, -1):
        s = f"{v:.{digits}g}"
        if len(s) <= 12:
            return s
    return f"{v:.1e}"


def write_mps(lp: LinearProgram, path: str | Path, name: str = "INFODSGN") -> None:
    """Write ``lp`` in fixed MPS.  The objective row is negated (MPS minimizes).

    Numbers are limited to 12 characters, so values round to about 10
    significant digits.
    """
    out = [f"NAME          {name}", "ROWS", " N  COST"]
    rows = [(f"E{k + 1:06d}", "E", lp.A_eq[k], lp.b_eq[k]) for k in range(lp.b_eq.size)]
    rows += [(f"G{k + 1:06d}", "G", lp.A_ge[k], lp.b_ge[k]) for k in range(lp.b_ge.size)]
    out += [f" {kind}  {rname}" for rname, kind, _, _ in rows]
    out.append("COLUMNS")
    for j in range(lp.num_vars):
        entries = [("COST", -lp.c[j])] if lp.c[j] != 0 else []
        entries += [(rname, a[j]) for rname, _, a, _ in rows if a[j] != 0]
        if not entries:
            entries = [("COST", 0.0)]
        for rname, v in entries:
            out.append(f"    {_name(j):<8}  {rname:<8}  {_num(v):>12}")
    out.append("RHS")
    for rname, _, _, rhs in rows:
        if rhs != 0:
            out.append(f"    {'RHS':<8}  {rname:<8}  {_num(rhs):>12}")
    out.append("BOUNDS")
    for j in range(lp.num_vars):
        lo, up = lp.lower[j], lp.upper[j]
        nm = _name(j)
        if lo == -np.inf and up == np.inf:
            out.append(f" FR BND       {nm:<8}")
            continue
        if lo == -np.inf:
            out.append(f" MI BND       {nm:<8}")
        elif lo != 0:
            out.append(f" LO BND       {nm:<8}  {_num(lo):>12}")
        if up != np.inf:
            out.append(f" UP BND       {nm:<8}  {_num(up):>12}")
    out.append("ENDATA")
    Path(path).write_text("\n".join(out) + "\n")


def read_mps(path: str | Path) -> LinearProgram:
    """Read a file produced by :func:`write_mps` (free-token parsing of the fixed layout)."""
    section = None
    kinds: dict[str, str] = {}
    order: list[str] = []
    coef: dict[tuple[str, str], float] = {}
    cols: list[str] = []
    rhs: dict[str, float] = {}
    lo: dict[str, float] = {}
    up: dict[str, float] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        if not line.startswith(" "):
            section = line.split()[0]
            continue
        tok = line.split()
        if section == "ROWS":
            kinds[tok[1]] = tok[0]
            if tok[0] != "N":
                order.append(tok[1])
        elif section == "COLUMNS":
            if tok[0] not in cols:
                cols.append(tok[0])
            for r, v in zip(tok[1::2], tok[2::2]):
                coef[(r, tok[0])] = float(v)
        elif section == "RHS":
            for r, v in zip(tok[1::2], tok[2::2]):
                rhs[r] = float(v)
        elif section == "BOUNDS":
            kind, col = tok[0], tok[2]
            if kind == "FR":
                lo[col], up[col] = -np.inf, np.inf
            elif kind == "MI":
                lo[col] = -np.inf
            elif kind == "LO":
                lo[col] = float(tok[3])
            elif kind == "UP":
                up[col] = float(tok[3])
    obj = next(r for r, k in kinds.items() if k == "N")
    c = np.array([-coef.get((obj, j), 0.0) for j in cols]) + 0.0
    eq = [r for r in order if kinds[r] == "E"]
    ge = [r for r in order if kinds[r] == "G"]

    def mat(rs):
        return np.array([[coef.get((r, j), 0.0) for j in cols] for r in rs]).reshape(len(rs), len(cols))

    return LinearProgram(
        c=c, A_eq=mat(eq), b_eq=np.array([rhs.get(r, 0.0) for r in eq]),
        A_ge=mat(ge), b_ge=np.array([rhs.get(r, 0.0) for r in ge]),
        lower=np.array([lo.get(j, 0.0) for j in cols]), upper=np.array([up.get(j, np.inf) for j in cols]),
    )
