"""Independent oracles and instance builders shared by the test modules."""

from __future__ import annotations

import itertools
from math import comb

import numpy as np

from infodesign.lp import LinearProgram

# ---------------------------------------------------------------------------
# Basic-feasible-solution enumeration


def _independent_rows(A):
    keep = []
    for r in range(A.shape[0]):
        if np.linalg.matrix_rank(A[keep + [r]], tol=1e-9) == len(keep) + 1:
            keep.append(r)
    return keep


def _vertices(A_eq, b_eq, G, h, chunk=20000):
    """All points where the equalities and enough independent rows of ``G x >= h`` are tight.

    Dependent equality rows are dropped when forming bases but still checked
    for feasibility.
    """
    n = A_eq.shape[1] if A_eq.size else G.shape[1]
    A_full, b_full = A_eq, b_eq
    keep = _independent_rows(A_eq)
    A_eq, b_eq = A_eq[keep], b_eq[keep]
    k = n - A_eq.shape[0]
    if k < 0 or k > G.shape[0]:
        return np.zeros((0, n))
    found = []
    combos = itertools.combinations(range(G.shape[0]), k)
    while True:
        batch = list(itertools.islice(combos, chunk))
        if not batch:
            break
        idx = np.array(batch, dtype=np.int64).reshape(len(batch), k)
        M = np.concatenate([np.broadcast_to(A_eq, (len(batch), *A_eq.shape)), G[idx]], axis=1)
        rhs = np.concatenate([np.broadcast_to(b_eq, (len(batch), b_eq.size)), h[idx]], axis=1)
        ok = np.abs(np.linalg.det(M)) > 1e-9
        if not ok.any():
            continue
        x = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
        feas = np.all(x @ G.T >= h - 1e-9, axis=1)
        if A_full.size:
            feas &= np.all(np.abs(x @ A_full.T - b_full) <= 1e-9, axis=1)
        found.append(x[feas])
    return np.concatenate(found) if found else np.zeros((0, n))


def _inequalities(lp: LinearProgram, homogeneous: bool = False):
    n = lp.num_vars
    rows, rhs = [lp.A_ge], [np.zeros(lp.A_ge.shape[0]) if homogeneous else lp.b_ge]
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lp.lower[j]):
            rows.append(e[None])
            rhs.append(np.array([0.0 if homogeneous else lp.lower[j]]))
        if np.isfinite(lp.upper[j]):
            rows.append(-e[None])
            rhs.append(np.array([0.0 if homogeneous else -lp.upper[j]]))
    return np.concatenate(rows), np.concatenate(rhs)


def bfs_oracle(lp: LinearProgram) -> tuple[str, float | None]:
    """Status and optimal value of a maximization LP by enumerating basic solutions.

    Needs every variable to have a finite lower bound, so the feasible set is
    pointed (feasible iff it has a vertex).  Unboundedness is decided by
    enumerating the vertices of the recession cone cut by ``sum r = 1``.
    """
    if not np.all(np.isfinite(lp.lower)):
        raise ValueError("oracle needs finite lower bounds")
    G, h = _inequalities(lp)
    verts = _vertices(lp.A_eq, lp.b_eq, G, h)
    if verts.shape[0] == 0:
        return "Infeasible", None
    Gr, hr = _inequalities(lp, homogeneous=True)
    Aeq_r = np.concatenate([lp.A_eq, np.ones((1, lp.num_vars))])
    beq_r = np.concatenate([np.zeros(lp.A_eq.shape[0]), [1.0]])
    rays = _vertices(Aeq_r, beq_r, Gr, hr)
    if rays.shape[0] and np.max(rays @ lp.c) > 1e-9:
        return "Unbounded", None
    return "Optimal", float(np.max(verts @ lp.c))


def enumeration_size(n, m_eq, m_ge, n_bounds) -> int:
    k = n - m_eq
    return comb(m_ge + n_bounds, k) if k >= 0 else 0


def random_lp(rng: np.random.Generator, max_n: int = 12, max_m: int = 20, budget: int = 40000) -> LinearProgram:
    """Random maximization LP whose basic-solution enumeration stays under ``budget``.

    Mixes feasible-by-construction right-hand sides (some rows tight at the
    construction point, which makes degenerate vertices) with arbitrary ones,
    integer and real coefficients, and a few finite upper bounds.
    """
    while True:
        n = int(rng.integers(1, max_n + 1))
        m = int(rng.integers(1, max_m + 1))
        m_eq = int(rng.integers(0, min(m, n) + 1)) if rng.random() < 0.6 else 0
        m_ge = m - m_eq
        has_upper = rng.random(n) < 0.2
        nb = n + int(has_upper.sum())
        # the ray enumeration adds one equality, so bound both counts
        if max(enumeration_size(n, m_eq, m_ge, nb), enumeration_size(n, m_eq + 1, m_ge, nb)) <= budget:
            break
    integer = rng.random() < 0.5
    draw = (lambda *s: rng.integers(-4, 5, size=s).astype(float)) if integer else (lambda *s: rng.normal(size=s))
    A_eq, A_ge, c = draw(m_eq, n), draw(m_ge, n), draw(n)
    lower = np.where(rng.random(n) < 0.2, -rng.integers(1, 4, size=n).astype(float), 0.0)
    upper = np.where(has_upper, lower + rng.integers(1, 5, size=n), np.inf)
    if rng.random() < 0.7:
        x0 = lower + rng.random(n) * np.where(np.isfinite(upper), upper - lower, 3.0)
        slack = np.where(rng.random(m_ge) < 0.4, 0.0, rng.random(m_ge))
        b_eq, b_ge = A_eq @ x0, A_ge @ x0 - slack
    else:
        b_eq, b_ge = draw(m_eq), draw(m_ge)
    return LinearProgram(c, A_eq, b_eq, A_ge, b_ge, lower, upper)


# ---------------------------------------------------------------------------
# One-stage designer optimum written out directly


def static_optimum(spec) -> tuple[str, float | None]:
    """Optimal designer value of a one-stage instance, assembled independently and solved by scipy.

    Variables are ``g(d | p0)`` in the solver's output order.  Each
    obedience row compares the target action with one deviation, summed
    over the states, private values and noise consistent with a cell.
    """
    from scipy.optimize import linprog

    assert spec.horizon == 1
    sp = spec.spaces[0]
    K = spec.num_agents
    msgs, u0s = spec.decode_outputs(0)
    D = msgs.shape[0]
    P0 = sp.private[0]
    joint = spec.p_x1[:, None, None] * spec.noise[0][None, :, None] * spec.lam.reshape(sp.state, sp.noise, -1)
    pi = joint.sum(axis=(1,)).reshape(*sp.belief_shape, spec.c1_size)
    best = 0.0
    for c in range(spec.c1_size):
        pc = pi[..., c].sum()
        if pc <= 0:
            continue
        belief = pi[..., c] / pc
        obj = np.zeros(P0 * D)
        rows: dict = {}
        for idx in itertools.product(*(range(s) for s in sp.belief_shape)):
            w = belief[idx]
            if w == 0:
                continue
            x, p = idx[0], idx[1:]
            for d in range(D):
                u0 = spec.h0[0].table[p[0]] if u0s is None else u0s[d]
                h = [spec.targets[i][0].table[msgs[d, i], p[i + 1]] for i in range(K)]
                u = (u0, *h)
                col = p[0] * D + d
                obj[col] += w * spec.rewards[0][0][(x, *u)]
                for i in range(K):
                    for v in range(sp.actions[i + 1]):
                        if v == h[i]:
                            continue
                        dev = list(u)
                        dev[i + 1] = v
                        key = (i, msgs[d, i], p[i + 1], v)
                        row = rows.setdefault(key, np.zeros(P0 * D))
                        row[col] += w * (spec.rewards[0][i + 1][(x, *u)] - spec.rewards[0][i + 1][(x, *dev)])
        A_ub = -np.array(list(rows.values())) if rows else None
        b_ub = np.zeros(len(rows)) if rows else None
        A_eq = np.kron(np.eye(P0), np.ones((1, D)))
        res = linprog(-obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.ones(P0), bounds=(0, None), method="highs")
        if res.status == 2:
            return "Infeasible", None
        best += pc * -res.fun
    return "Optimal", best


# ---------------------------------------------------------------------------
# Reference congestion kernel (per-vector masses, 4 decimals)


def reference_congestion_kernels(num_agents: int = 10) -> dict[tuple[int, int], np.ndarray]:
    """Kernels by ``(level, class index)``; rows are the designer's state reading."""
    D = 2 ** num_agents
    sigma = np.array([bin(d).count("1") for d in range(D)])

    def ker(masses):
        g = np.zeros((2, D))
        for p0, by_sigma in masses.items():
            for s, v in by_sigma.items():
                g[p0, sigma == s] = v
        return g

    first = ker({0: {4: 0.0048}, 1: {8: 0.0222}})
    return {
        (0, 0): first,
        (1, 0): first,
        (1, 1): ker({0: {5: 0.0039, 6: 0.0001}, 1: {9: 0.0557, 10: 0.4426}}),
    }
