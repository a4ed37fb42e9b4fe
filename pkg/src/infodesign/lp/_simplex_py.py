"""Pure-numpy pivot loop, used when the compiled core is unavailable."""

from __future__ import annotations

import numpy as np

TINY = 1e-12


def _pivot(T: np.ndarray, r: int, e: int) -> None:
    T[r] /= T[r, e]
    T[r, e] = 1.0
    col = T[:, e].copy()
    col[r] = 0.0
    nz = np.flatnonzero(col)
    if nz.size:
        T[nz] -= np.multiply.outer(col[nz], T[r])
        T[nz, e] = 0.0


def _ratio(T: np.ndarray, basis: np.ndarray, j: int, pivot_tol: float) -> tuple[int, int, float]:
    """Return ``(code, row, ratio)``; code 0 found, 1 unbounded, 2 only tiny pivots."""
    col = T[:-1, j]
    rows = np.flatnonzero(col > pivot_tol)
    if rows.size == 0:
        return (2 if np.any(col > TINY) else 1), -1, 0.0
    ratios = T[rows, -1] / col[rows]
    # Sequential scan, identical to the compiled core.
    row, best = rows[0], ratios[0]
    for i, ratio in zip(rows[1:], ratios[1:]):
        if ratio < best - TINY:
            row, best = i, ratio
        elif ratio <= best + TINY and basis[i] < basis[row]:
            row, best = i, ratio
    return 0, int(row), float(best)


def run_simplex(T: np.ndarray, basis: np.ndarray, ncols: int, opt_tol: float, pivot_tol: float,
                max_iter: int, bland_after: int) -> tuple[int, int]:
    """Pivot ``T`` to optimality in place; same contract as the compiled core."""
    m = T.shape[0] - 1
    it = streak = 0
    while True:
        if it >= max_iter:
            return 3, it
        reduced = T[m, :ncols]
        candidates = np.flatnonzero(reduced > opt_tol)
        if candidates.size == 0:
            return 0, it
        e = -1
        if streak < bland_after:
            j = int(candidates[np.argmax(reduced[candidates])])
            code, row, best = _ratio(T, basis, j, pivot_tol)
            if code == 1:
                return 1, it
            if code == 0:
                e = j
        if e < 0:
            for j in candidates:
                code, row, best = _ratio(T, basis, int(j), pivot_tol)
                if code == 0:
                    e = int(j)
                    break
                if code == 1:
                    return 1, it
            if e < 0:
                return 2, it
        streak = streak + 1 if best <= TINY else 0
        _pivot(T, row, e)
        basis[row] = e
        it += 1
