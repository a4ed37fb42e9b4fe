"""Independent checks of a designer solution.

None of these oracles reuse the solver's assembled programs.  They recompute
the joint distribution at each node from the returned kernel and the belief,
then evaluate rewards with plain loops (or, for Monte Carlo, by sampling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .model import ProblemSpec, Variant
from .solver import DesignerSolution

MASS_FLOOR = 1e-14
KERNEL_FLOOR = 0.0

# f(t, node_index, m_i, p_i) -> action; t is 0-based, node_index indexes solution.tree.levels[t]
AgentStrategy = Callable[[int, int, int, int], int]


class TooLarge(RuntimeError):
    """The deviation-strategy space is too big to enumerate."""


def _target_fn(spec: ProblemSpec, sol: DesignerSolution, i: int) -> AgentStrategy:
    def f(t, idx, m, p):
        nd = sol.tree.levels[t][idx]
        return int(spec.targets[i][t].lookup(nd.node_key, nd.belief_key)[m, p])
    return f


def _h0(spec: ProblemSpec, sol: DesignerSolution, t: int, idx: int, p0: int) -> int:
    nd = sol.tree.levels[t][idx]
    return int(spec.h0[t].lookup(nd.node_key, nd.belief_key)[p0])


def _outputs(spec, t):
    msgs, u0s = spec.decode_outputs(t)
    return [tuple(int(v) for v in row) for row in msgs], (None if u0s is None else [int(v) for v in u0s])


def _node_entries(spec: ProblemSpec, sol: DesignerSolution, t: int, idx: int):
    """Support of eta at a node: list of (weight, x, p, n, m, u0)."""
    nd = sol.tree.levels[t][idx]
    sp = spec.spaces[t]
    g = sol.kernels[t][idx]
    msgs, u0s = _outputs(spec, t)
    pi = nd.belief.reshape(sp.belief_shape)
    q = spec.noise[t]
    out = []
    for xp in zip(*np.nonzero(pi)):
        x, p = int(xp[0]), tuple(int(v) for v in xp[1:])
        for n in range(sp.noise):
            if q[n] <= 0:
                continue
            for d in range(len(msgs)):
                if g[p[0], d] <= KERNEL_FLOOR:
                    continue
                u0 = u0s[d] if u0s is not None else _h0(spec, sol, t, idx, p[0])
                out.append((float(pi[xp]) * float(q[n]) * float(g[p[0], d]), x, p, n, msgs[d], u0))
    return out


def _step(spec: ProblemSpec, t: int, x: int, p: tuple, u: tuple, n: int):
    """Next (x, p, z) from the transition tables."""
    K = spec.num_agents
    x2 = int(spec.dynamics[t][(x, *u, n)])
    p2 = tuple(int(spec.xi[t][i][(x, p[i], *u, n)]) for i in range(K + 1))
    z = int(spec.zeta[t][(x, *p, *u, n)])
    return x2, p2, z


# ---------------------------------------------------------------------------
# Exact evaluation


@dataclass
class EvaluationReport:
    """Exact expectations under a profile.

    ``reward_to_go[t]`` maps a node path (tuple) to the conditional expected
    remaining reward of players ``0..K`` given that common information.
    ``from_initial[t]`` lists the paths whose values were obtained by forward
    conditioning from the initial distribution; the rest were evaluated from
    their belief (paths the profile never reaches).
    """

    J: np.ndarray
    reward_to_go: list[dict[tuple, np.ndarray]]
    from_initial: list[set]
    path_index: list[dict[tuple, int]]

    def identity_errors(self, sol: DesignerSolution) -> tuple[float, float]:
        """Largest |reward-to-go - W^i| over agents and nodes, and |J0 - sum P(c1) V1|."""
        w_err = 0.0
        for t, level in enumerate(self.reward_to_go):
            for path, vals in level.items():
                idx = self.path_index[t][path]
                w_err = max(w_err, float(np.max(np.abs(vals[1:] - sol.W[t][idx]))))
        return w_err, abs(float(self.J[0]) - float(sol.J0))


def _rollout(spec, sol, strategies, t0, start: dict, path_index):
    """Forward probabilities from ``start`` plus per-state values by recursion.

    ``start`` maps (path, idx, x, p, n_or_None) -> probability at stage ``t0``.
    Returns (per-stage state probability dicts, value cache).
    """
    T, K = spec.horizon, spec.num_agents
    cache: dict = {}
    entries_cache: dict = {}

    def kernel_support(t, idx, p0):
        key = (t, idx, p0)
        if key not in entries_cache:
            g = sol.kernels[t][idx]
            msgs, u0s = _outputs(spec, t)
            items = []
            for d in np.flatnonzero(g[p0] > KERNEL_FLOOR):
                d = int(d)
                u0 = u0s[d] if u0s is not None else _h0(spec, sol, t, idx, p0)
                items.append((float(g[p0, d]), msgs[d], u0))
            entries_cache[key] = items
        return entries_cache[key]

    def transitions(t, path, idx, x, p, n_fixed):
        q = spec.noise[t]
        noises = [n_fixed] if n_fixed is not None else [n for n in range(spec.spaces[t].noise) if q[n] > 0]
        for n in noises:
            qn = 1.0 if n_fixed is not None else float(q[n])
            for gd, m, u0 in kernel_support(t, idx, p[0]):
                u = (u0, *(strategies[i](t, idx, m[i], p[i + 1]) for i in range(K)))
                r = np.array([spec.rewards[t][j][(x, *u)] for j in range(K + 1)])
                nxt = None
                if t < T - 1:
                    x2, p2, z = _step(spec, t, x, p, u, n)
                    nidx = sol.tree.levels[t][idx].children[z]
                    npath = (*path, z)
                    path_index[t + 1].setdefault(npath, nidx)
                    nxt = (npath, nidx, x2, p2, None)
                yield qn * gd, r, nxt

    def value(t, state):
        key = (t, state)
        if key in cache:
            return cache[key]
        path, idx, x, p, n_fixed = state
        v = np.zeros(K + 1)
        for w, r, nxt in transitions(t, path, idx, x, p, n_fixed):
            v = v + w * (r if nxt is None else r + value(t + 1, nxt))
        cache[key] = v
        return v

    probs = [dict() for _ in range(T)]
    probs[t0] = dict(start)
    for t in range(t0, T):
        for state, pr in probs[t].items():
            value(t, state)
            if t < T - 1:
                for w, _, nxt in transitions(t, *state):
                    probs[t + 1][nxt] = probs[t + 1].get(nxt, 0.0) + pr * w
    return probs, cache


def evaluate_profile(spec: ProblemSpec, solution: DesignerSolution,
                     agent_strategies: Sequence[AgentStrategy | None] | None = None) -> EvaluationReport:
    """Exact expected rewards by enumeration, plus conditional reward-to-go at every node."""
    if not solution.solved:
        raise ValueError("solution is not solved")
    T, K = spec.horizon, spec.num_agents
    strategies = [(agent_strategies[i] if agent_strategies and agent_strategies[i] else _target_fn(spec, solution, i))
                  for i in range(K)]
    sp0 = spec.spaces[0]
    tree = solution.tree
    path_index: list[dict] = [dict() for _ in range(T)]
    # Initial joint over (x, n, p, c1), keeping n: it also drives the first transition.
    joint = spec.p_x1[:, None, None] * spec.noise[0][None, :, None] * spec.lam.reshape(sp0.state, sp0.noise, -1)
    joint = joint.reshape(sp0.state, sp0.noise, *sp0.private, spec.c1_size)
    start = {}
    for idx_tuple in zip(*np.nonzero(joint)):
        x, n, *p, c1 = (int(v) for v in idx_tuple)
        idx = tree.initial_index[c1]
        path_index[0].setdefault((c1,), idx)
        start[((c1,), idx, x, tuple(p), n)] = float(joint[idx_tuple])
    probs, cache = _rollout(spec, solution, strategies, 0, start, path_index)

    J = np.zeros(K + 1)
    for state, pr in probs[0].items():
        J += pr * cache[(0, state)]
    rtg: list[dict] = [dict() for _ in range(T)]
    covered: list[set] = [set() for _ in range(T)]
    for t in range(T):
        mass: dict = {}
        acc: dict = {}
        for state, pr in probs[t].items():
            path = state[0]
            mass[path] = mass.get(path, 0.0) + pr
            acc[path] = acc.get(path, 0.0) + pr * cache[(t, state)]
        for path, m in mass.items():
            if m > 0:
                rtg[t][path] = acc[path] / m
                covered[t].add(path)

    # Nodes the profile never reaches: evaluate from their belief.
    for t, level in enumerate(tree.levels):
        reached = {path_index[t][pth] for pth in covered[t]}
        sp = spec.spaces[t]
        for idx, nd in enumerate(level):
            if idx in reached:
                continue
            pi = nd.belief.reshape(sp.belief_shape)
            start = {(nd.path, idx, int(xp[0]), tuple(int(v) for v in xp[1:]), None): float(pi[xp])
                     for xp in zip(*np.nonzero(pi))}
            path_index[t].setdefault(nd.path, idx)
            sub_probs, sub_cache = _rollout(spec, solution, strategies, t, start, path_index)
            rtg[t][nd.path] = sum(pr * sub_cache[(t, state)] for state, pr in sub_probs[t].items())
    return EvaluationReport(J, rtg, covered, path_index)


# ---------------------------------------------------------------------------
# Best-response check


@dataclass
class CisrReport:
    passes: bool
    tol: float
    max_gain: np.ndarray                  # per agent, max over nodes of W~ - W
    worst: list[dict | None]              # per agent: node, cell, best action, per-cell gain
    W_tilde: list[np.ndarray]             # per level (nodes, K)
    W_recomputed: list[np.ndarray]        # per level (nodes, K)
    gains: list[np.ndarray]               # per level (nodes, K)
    w_mismatch: float                     # max |recomputed W - solver W|

    def to_dict(self) -> dict:
        return {"passes": self.passes, "tol": self.tol, "max_gain": self.max_gain.tolist(),
                "worst": self.worst, "w_mismatch": self.w_mismatch}


def cisr_check(spec: ProblemSpec, solution: DesignerSolution, tol: float = 1e-6) -> CisrReport:
    """Best-response values for each agent with the others on target, compared with the target values."""
    if not solution.solved:
        raise ValueError("solution is not solved")
    T, K = spec.horizon, spec.num_agents
    tree = solution.tree
    targets = [_target_fn(spec, solution, i) for i in range(K)]
    Wt = [np.zeros((len(lv), K)) for lv in tree.levels]
    Wr = [np.zeros((len(lv), K)) for lv in tree.levels]
    worst: list[dict | None] = [None] * K
    worst_gain = np.full(K, -np.inf)
    for t in range(T - 1, -1, -1):
        sp = spec.spaces[t]
        for idx, nd in enumerate(tree.levels[t]):
            entries = _node_entries(spec, solution, t, idx)
            for i in range(K):
                cells: dict = {}
                w_target = 0.0
                for w, x, p, n, m, u0 in entries:
                    base = [u0] + [targets[j](t, idx, m[j], p[j + 1]) for j in range(K)]
                    cell = (m[i], p[i + 1])
                    c = cells.setdefault(cell, [0.0, np.zeros(sp.actions[i + 1])])
                    c[0] += w
                    for v in range(sp.actions[i + 1]):
                        u = list(base)
                        u[i + 1] = v
                        u = tuple(u)
                        val = spec.rewards[t][i + 1][(x, *u)]
                        cont_tilde = 0.0
                        cont = 0.0
                        if t < T - 1:
                            _, _, z = _step(spec, t, x, p, u, n)
                            child = nd.children[z]
                            cont_tilde = Wt[t + 1][child, i]
                            cont = Wr[t + 1][child, i]
                        c[1][v] += w * (val + cont_tilde)
                        if v == base[i + 1]:
                            w_target += w * (val + cont)
                best_total = 0.0
                for (mi, pi_), (mass, vals) in sorted(cells.items()):
                    if mass < MASS_FLOOR:
                        continue
                    h = targets[i](t, idx, mi, pi_)
                    best_total += float(vals.max())
                    cell_gain = float(vals.max() - vals[h]) / mass
                    if cell_gain > worst_gain[i]:
                        worst_gain[i] = cell_gain
                        worst[i] = {"time": t + 1, "node_key": nd.node_key, "m": mi, "p": pi_,
                                    "target": h, "best": int(np.argmax(vals)), "cell_gain": cell_gain}
                Wt[t][idx, i] = best_total
                Wr[t][idx, i] = w_target
    gains = [Wt[t] - Wr[t] for t in range(T)]
    max_gain = np.max(np.stack([g.max(axis=0) if g.size else np.zeros(K) for g in gains]), axis=0)
    mismatch = max(float(np.max(np.abs(Wr[t] - solution.W[t]), initial=0.0)) for t in range(T))
    return CisrReport(bool(np.all(max_gain <= tol)), tol, max_gain, worst, Wt, Wr, gains, mismatch)


# ---------------------------------------------------------------------------
# Exhaustive deviation enumeration


@dataclass
class BruteForceReport:
    passes: bool
    tol: float
    max_gain: np.ndarray            # per agent
    strategies: list[int]           # strategies enumerated per agent (all enumerations summed)
    worst_node: list[str | None]


@dataclass
class _Cell:
    key: tuple
    target: int
    a: np.ndarray                   # (U,) eta-weighted stage reward per action
    b: list[dict[int, float]]       # per action: child index -> eta weight


def _cell_tables(spec, solution, i):
    """Per level and node: cells with positive mass, and the increments leading to each child."""
    T, K = spec.horizon, spec.num_agents
    tree = solution.tree
    targets = [_target_fn(spec, solution, j) for j in range(K)]
    cells_out, zsets_out = [], []
    for t in range(T):
        nu = spec.spaces[t].actions[i + 1]
        level_cells, level_z = [], []
        for idx, nd in enumerate(tree.levels[t]):
            acc: dict = {}
            zsets: dict[int, set] = {}
            for w, x, p, n, m, u0 in _node_entries(spec, solution, t, idx):
                base = [u0] + [targets[j](t, idx, m[j], p[j + 1]) for j in range(K)]
                key = (m[i], p[i + 1])
                c = acc.setdefault(key, [0.0, np.zeros(nu), [dict() for _ in range(nu)]])
                c[0] += w
                for v in range(nu):
                    u = list(base)
                    u[i + 1] = v
                    u = tuple(u)
                    c[1][v] += w * spec.rewards[t][i + 1][(x, *u)]
                    if t < T - 1:
                        _, _, z = _step(spec, t, x, p, u, n)
                        ch = nd.children[z]
                        c[2][v][ch] = c[2][v].get(ch, 0.0) + w
                        zsets.setdefault(ch, set()).add(z)
            level_cells.append([_Cell(key, targets[i](t, idx, *key), acc[key][1], acc[key][2])
                                for key in sorted(acc) if acc[key][0] >= MASS_FLOOR])
            level_z.append(zsets)
        cells_out.append(level_cells)
        zsets_out.append(level_z)
    return cells_out, zsets_out


def _reachable(cells, T, t0, idx0):
    """Nodes reachable from (t0, idx0) when the agent may play any action, in level order."""
    seen = [dict() for _ in range(T)]
    seen[t0][idx0] = None
    for t in range(t0, T - 1):
        for idx in list(seen[t]):
            for cell in cells[t][idx]:
                for bv in cell.b:
                    for ch in bv:
                        seen[t + 1][ch] = None
    return [list(s) for s in seen]


def _evaluate_digits(cells, T, reach, slot, digits):
    """Conditional values (S,) at every node in ``reach`` for strategies given by ``digits``."""
    S = digits.shape[0]
    vals: list[dict[int, np.ndarray]] = [dict() for _ in range(T)]
    for t in range(T - 1, -1, -1):
        for idx in reach[t]:
            acc = np.zeros(S)
            for r, cell in enumerate(cells[t][idx]):
                dcol = digits[:, slot[(t, idx, r)]]
                for v in range(cell.a.size):
                    sel = dcol == v
                    if not np.any(sel):
                        continue
                    contrib = np.full(int(sel.sum()), cell.a[v])
                    for ch, wb in cell.b[v].items():
                        contrib = contrib + wb * vals[t + 1][ch][sel]
                    acc[sel] += contrib
            vals[t][idx] = acc
    return vals


def brute_force_cisr(spec: ProblemSpec, solution: DesignerSolution, tol: float = 1e-6,
                     limit: float = 1e6, chunk: int = 1 << 15) -> BruteForceReport:
    """Enumerate every deterministic deviation of each agent and compare with the target.

    A deviation fixes an action at every (node, message, private value) cell
    with positive mass that the agent can reach from the initial nodes when
    the others follow their targets.  The enumeration bound counts such cells
    along distinct tree paths (class members counted separately); the
    enumeration itself runs on the stored nodes, which gives the same maxima
    because members of a class face identical continuation problems.  Every
    node's conditional value under every enumerated strategy is compared
    with its value under the target.

    Raises:
        TooLarge: more than ``limit`` strategies for some agent.
    """
    if not solution.solved:
        raise ValueError("solution is not solved")
    T, K = spec.horizon, spec.num_agents
    tree = solution.tree
    tables = [_cell_tables(spec, solution, i) for i in range(K)]

    for i in range(K):
        cells, zsets = tables[i]
        roots = sorted(set(tree.initial_index.values()))
        paths = [dict() for _ in range(T)]
        for r in roots:
            paths[0][r] = sum(1 for v in tree.initial_index.values() if v == r)
        log_count = 0.0
        for t in range(T):
            nu = spec.spaces[t].actions[i + 1]
            for idx, npaths in sorted(paths[t].items()):
                log_count += npaths * len(cells[t][idx]) * math.log(nu)
                if t < T - 1:
                    live = {ch for cell in cells[t][idx] for bv in cell.b for ch in bv}
                    for ch in live:
                        paths[t + 1][ch] = paths[t + 1].get(ch, 0) + npaths * len(zsets[t][idx][ch])
        if log_count > math.log(limit) + 1e-9:
            raise TooLarge(f"agent {i + 1}: about 10^{log_count / math.log(10):.1f} deviation strategies")

    max_gain = np.zeros(K)
    counts, worst_nodes = [], []
    for i in range(K):
        cells, _ = tables[i]
        covered = [np.zeros(len(lv), dtype=bool) for lv in tree.levels]
        best_gain = [np.full(len(lv), -np.inf) for lv in tree.levels]
        enumerated = 0
        for t0 in range(T):
            for idx0 in range(len(tree.levels[t0])):
                if covered[t0][idx0]:
                    continue
                reach = _reachable(cells, T, t0, idx0)
                where = [(t, idx, r) for t in range(T) for idx in reach[t] for r in range(len(cells[t][idx]))]
                slot = {w: k for k, w in enumerate(where)}
                radix = np.array([spec.spaces[t].actions[i + 1] for (t, _, _) in where], dtype=np.int64)
                total = int(np.prod(radix)) if radix.size else 1
                enumerated += total
                target = np.array([[cells[t][idx][r].target for (t, idx, r) in where]], dtype=np.int64)
                target_vals = _evaluate_digits(cells, T, reach, slot, target.reshape(1, -1))
                best = [{idx: -np.inf for idx in reach[t]} for t in range(T)]
                for lo in range(0, total, chunk):
                    ids = np.arange(lo, min(total, lo + chunk), dtype=np.int64)
                    digits = np.empty((ids.size, radix.size), dtype=np.int64)
                    rem = ids
                    for k in range(radix.size - 1, -1, -1):
                        digits[:, k] = rem % radix[k]
                        rem = rem // radix[k]
                    vals = _evaluate_digits(cells, T, reach, slot, digits)
                    for t in range(T):
                        for idx in reach[t]:
                            best[t][idx] = max(best[t][idx], float(vals[t][idx].max()))
                for t in range(T):
                    for idx in reach[t]:
                        gain = best[t][idx] - float(target_vals[t][idx][0])
                        best_gain[t][idx] = max(best_gain[t][idx], gain)
                        covered[t][idx] = True
        g_worst, n_worst = 0.0, None
        for t in range(T):
            for idx, g in enumerate(best_gain[t]):
                if g > g_worst:
                    g_worst, n_worst = float(g), tree.levels[t][idx].node_key
        max_gain[i] = g_worst
        counts.append(enumerated)
        worst_nodes.append(n_worst)
    return BruteForceReport(bool(np.all(max_gain <= tol)), tol, max_gain, counts, worst_nodes)


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass
class MonteCarloResult:
    episodes: int
    seed: int
    mean: np.ndarray
    stderr: np.ndarray

    def to_dict(self) -> dict:
        return {"episodes": self.episodes, "seed": self.seed, "mean": self.mean.tolist(),
                "stderr": self.stderr.tolist()}


def _draw(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(out, cdf.size - 1)


def monte_carlo(spec: ProblemSpec, solution: DesignerSolution, episodes: int, seed: int = 0,
                chunk: int = 1 << 16) -> MonteCarloResult:
    """Sample episodes under the designer kernel and target strategies.

    Uniforms come from a Philox stream keyed by ``seed``, four per episode
    and stage, in episode-major order, so results do not depend on ``chunk``.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    if not solution.solved:
        raise ValueError("solution is not solved")
    T, K = spec.horizon, spec.num_agents
    tree = solution.tree
    rng = np.random.Generator(np.random.Philox(key=seed))
    sp0 = spec.spaces[0]
    joint = spec.p_x1[:, None, None] * spec.noise[0][None, :, None] * spec.lam.reshape(sp0.state, sp0.noise, -1)
    init_shape = (sp0.state, sp0.noise, *sp0.private, spec.c1_size)
    init_cdf = np.cumsum(joint.ravel())
    init_class = np.array([tree.initial_index.get(c, -1) for c in range(spec.c1_size)])

    level_data = []
    for t in range(T):
        sp = spec.spaces[t]
        msgs, u0s = spec.decode_outputs(t)
        nodes = tree.levels[t]
        cdfs = np.cumsum(np.stack([solution.kernels[t][k] for k in range(len(nodes))]), axis=2)
        acts = np.zeros((len(nodes), K, max(sp.messages), max(sp.private[1:])), dtype=np.int64)
        h0 = np.zeros((len(nodes), sp.private[0]), dtype=np.int64)
        for k, nd in enumerate(nodes):
            for i in range(K):
                tab = spec.targets[i][t].lookup(nd.node_key, nd.belief_key)
                acts[k, i, :tab.shape[0], :tab.shape[1]] = tab
            if spec.variant is Variant.FIXED_ACTION:
                h0[k] = spec.h0[t].lookup(nd.node_key, nd.belief_key)
        child = None
        if t < T - 1:
            child = np.full((len(nodes), spec.spaces[t + 1].increment), -1, dtype=np.int64)
            for k, nd in enumerate(nodes):
                for z, ci in nd.children.items():
                    child[k, z] = ci
        level_data.append((msgs, u0s, cdfs, acts, h0, child, np.cumsum(spec.noise[t])))

    totals = np.zeros((episodes, K + 1))
    for lo in range(0, episodes, chunk):
        S = min(chunk, episodes - lo)
        U = rng.random((S, T, 4))
        draw = np.unravel_index(_draw(init_cdf, U[:, 0, 0]), init_shape)
        x, n = draw[0], draw[1]
        p = list(draw[2:2 + K + 1])
        node = init_class[draw[-1]]
        acc = np.zeros((S, K + 1))
        for t in range(T):
            msgs, u0s, cdfs, acts, h0, child, q_cdf = level_data[t]
            if t > 0:
                n = _draw(q_cdf, U[:, t, 1])
            d = np.empty(S, dtype=np.int64)
            groups = node * spec.spaces[t].private[0] + p[0]
            for gkey in np.unique(groups):
                sel = groups == gkey
                k, p0 = divmod(int(gkey), spec.spaces[t].private[0])
                d[sel] = _draw(cdfs[k, p0], U[sel, t, 2])
            m = msgs[d]
            u0 = u0s[d] if u0s is not None else h0[node, p[0]]
            u = [u0] + [acts[node, i, m[:, i], p[i + 1]] for i in range(K)]
            for j in range(K + 1):
                acc[:, j] += spec.rewards[t][j][(x, *u)]
            if t < T - 1:
                x2 = spec.dynamics[t][(x, *u, n)]
                p2 = [spec.xi[t][i][(x, p[i], *u, n)] for i in range(K + 1)]
                z = spec.zeta[t][(x, *p, *u, n)]
                node = child[node, z]
                if np.any(node < 0):
                    raise RuntimeError("sampled an increment outside the tree")
                x, p = x2, p2
        totals[lo:lo + S] = acc
    mean = totals.mean(axis=0)
    se = totals.std(axis=0, ddof=1) / math.sqrt(episodes) if episodes > 1 else np.zeros(K + 1)
    return MonteCarloResult(episodes, seed, mean, se)
