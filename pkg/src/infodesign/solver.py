"""Per-node linear programs and backward induction over the common-information tree.

At a node at stage ``t`` with belief ``pi`` the designer picks a kernel
``g(d | p0)`` where ``d`` is a message profile (plus the designer action
unless it is fixed).  The joint distribution ``eta = Q(n) pi(x, p) g(d | p0)``
is linear in ``g``, so the program is written directly over ``g`` and the
scalar values ``W^1..W^K, V``:

* rows of ``g`` sum to one;
* ``W^i`` and ``V`` equal the ``eta``-expected stage reward plus child value
  when every agent follows its target;
* for every agent, every (message, private value) cell and every alternative
  action, following the target is at least as good in ``eta``-weighted sum
  as switching to the alternative (child values re-indexed by the increment
  the switch would produce).
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .beliefs import (
    CommonNode,
    CommonTree,
    build_tree,
    canonical_belief,
    check_assumption2,
)
from .lp import LinearProgram, LPStatus, NumericalBreakdown, ToleranceConfig, check_feasible, solve_lp
from .model import ProblemSpec, Variant

SOLUTION_FORMAT = "1"


class AssumptionViolation(RuntimeError):
    """Beliefs depend on the strategy profile, so the per-node decomposition does not apply."""

    def __init__(self, report):
        self.report = report
        super().__init__(f"beliefs are strategy dependent (deviation {report.max_deviation:.3g} "
                         f"at node {report.worst_node}); use force=True (CLI: --force) to solve anyway")


@dataclass
class NodeProgram:
    """A node LP plus the layout needed to read its solution.

    Variables are ``g`` (``P0 * D`` entries, row-major over ``(p0, d)``), then
    ``W^1..W^K``, then ``V``.  ``equality_rows`` lists, for each of the
    ``K + 1`` value rows, the coefficients of ``g`` in the value definition.
    """

    lp: LinearProgram
    num_private0: int
    num_outputs: int
    num_agents: int
    value_coeffs: np.ndarray  # (K + 1, P0 * D); row 0 is V, rows 1..K are W^i
    cisr_cells: list[tuple[int, int, int, int]]  # (agent, m, p_i, deviation)

    @property
    def num_kernel_vars(self) -> int:
        return self.num_private0 * self.num_outputs

    def kernel(self, x: np.ndarray) -> np.ndarray:
        return x[:self.num_kernel_vars].reshape(self.num_private0, self.num_outputs)

    def point(self, kernel: np.ndarray) -> np.ndarray:
        """Full LP point for a kernel, with values filled in from their defining rows."""
        g = np.asarray(kernel, dtype=float).ravel()
        vals = self.value_coeffs @ g
        return np.concatenate([g, vals[1:], vals[:1]])


def _target_tables(spec: ProblemSpec, t: int, node: CommonNode):
    targets = [spec.targets[i][t].lookup(node.node_key, node.belief_key) for i in range(spec.num_agents)]
    h0 = None
    if spec.variant is Variant.FIXED_ACTION:
        h0 = spec.h0[t].lookup(node.node_key, node.belief_key)
    return targets, h0


@dataclass
class _NodeGrid:
    """Support rows ``(x, p, n)`` of the node crossed with designer outputs ``d``."""

    w: np.ndarray          # (s,) pi(x, p) Q(n)
    x: np.ndarray          # (s,)
    p: tuple               # K+1 arrays (s,)
    n: np.ndarray          # (s,)
    msgs: np.ndarray       # (D, K)
    actions: np.ndarray    # (K+1, s, D) target joint action
    var: np.ndarray        # (s, D) kernel variable index
    child_of: np.ndarray | None


def _grid(spec: ProblemSpec, t: int, node: CommonNode) -> _NodeGrid:
    sp = spec.spaces[t]
    K = spec.num_agents
    pi = canonical_belief(node.belief)
    q = spec.noise[t]
    sup, nz = np.flatnonzero(pi > 0), np.flatnonzero(q > 0)
    xp = np.repeat(sup, nz.size)
    n = np.tile(nz, sup.size)
    w = pi[xp] * q[n]
    coords = np.unravel_index(xp, sp.belief_shape)
    x, p = coords[0], coords[1:]
    msgs, u0s = spec.decode_outputs(t)
    D = msgs.shape[0]
    targets, h0 = _target_tables(spec, t, node)
    acts = np.empty((K + 1, xp.size, D), dtype=np.int64)
    acts[0] = u0s[None, :] if u0s is not None else h0[p[0]][:, None]
    for i in range(K):
        acts[i + 1] = targets[i][msgs[None, :, i], p[i + 1][:, None]]
    var = p[0][:, None] * D + np.arange(D)[None, :]
    child_of = None
    if t < spec.horizon - 1:
        child_of = np.full(spec.spaces[t + 1].increment, -1, dtype=np.int64)
        for z, ci in node.children.items():
            child_of[z] = ci
    return _NodeGrid(w, x, p, n, msgs, acts, var, child_of)


def _values(spec, t, g: _NodeGrid, acts, next_W, next_V, players):
    """Stage reward plus child value for each player in ``players`` at joint actions ``acts``."""
    xb = g.x[:, None]
    out = [spec.rewards[t][j][(xb, *acts)] for j in players]
    if g.child_of is not None:
        pb = tuple(pi[:, None] for pi in g.p)
        z = spec.zeta[t][(xb, *pb, *acts, g.n[:, None])]
        child = g.child_of[z]
        if np.any(child < 0):
            raise RuntimeError(f"increment unreachable under the reference profile at node at t={t + 1}")
        for k, j in enumerate(players):
            out[k] = out[k] + (next_V[child] if j == 0 else next_W[child, j - 1])
    return out


def node_lp(spec: ProblemSpec, node: CommonNode, next_W: np.ndarray | None = None,
            next_V: np.ndarray | None = None, tol: ToleranceConfig | None = None) -> NodeProgram:
    """Assemble the node program.

    ``next_W`` has shape ``(children at t+1, K)`` and ``next_V`` shape
    ``(children at t+1,)``; both are ignored at the last stage.
    """
    tol = tol or ToleranceConfig()
    t = node.time - 1
    K = spec.num_agents
    sp = spec.spaces[t]
    g = _grid(spec, t, node)
    P0, D = sp.private[0], g.msgs.shape[0]
    ng = P0 * D
    nvar = ng + K + 1
    wv = g.w[:, None]

    vals = _values(spec, t, g, g.actions, next_W, next_V, range(K + 1))
    coeffs = np.stack([np.bincount(g.var.ravel(), weights=(wv * v).ravel(), minlength=ng) for v in vals])

    # CISR rows
    rows, cells = [], []
    for i in range(1, K + 1):
        target = spec.targets[i - 1][t].lookup(node.node_key, node.belief_key)
        m_i = g.msgs[None, :, i - 1]
        p_i = g.p[i][:, None]
        own = vals[i]
        n_cells = sp.messages[i - 1] * sp.private[i]
        cell = np.broadcast_to(m_i * sp.private[i] + p_i, own.shape)
        block = np.zeros((n_cells, sp.actions[i], ng))
        for v in range(sp.actions[i]):
            dev = g.actions.copy()
            dev[i] = v
            (dev_val,) = _values(spec, t, g, dev, next_W, next_V, [i])
            diff = wv * (own - dev_val)
            mask = g.actions[i] != v
            flat = cell[mask] * ng + g.var[mask]
            block[:, v, :] = np.bincount(flat, weights=diff[mask], minlength=n_cells * ng).reshape(n_cells, ng)
        for m in range(sp.messages[i - 1]):
            for b in range(sp.private[i]):
                for v in range(sp.actions[i]):
                    if v == target[m, b]:
                        continue
                    rows.append(block[m * sp.private[i] + b, v])
                    cells.append((i, m, b, v))
    A_ge = np.zeros((len(rows), nvar))
    if rows:
        A_ge[:, :ng] = np.stack(rows)
    b_ge = np.full(len(rows), -tol.cisr)

    A_eq = np.zeros((P0 + K + 1, nvar))
    b_eq = np.zeros(P0 + K + 1)
    for p0 in range(P0):
        A_eq[p0, p0 * D:(p0 + 1) * D] = 1.0
        b_eq[p0] = 1.0
    for i in range(1, K + 1):
        A_eq[P0 + i - 1, :ng] = -coeffs[i]
        A_eq[P0 + i - 1, ng + i - 1] = 1.0
    A_eq[P0 + K, :ng] = -coeffs[0]
    A_eq[P0 + K, ng + K] = 1.0

    c = np.zeros(nvar)
    c[-1] = 1.0
    lower = np.concatenate([np.zeros(ng), np.full(K + 1, -np.inf)])
    lp = LinearProgram(c, A_eq, b_eq, A_ge, b_ge, lower, np.full(nvar, np.inf))
    return NodeProgram(lp, P0, D, K, coeffs, cells)


def compute_eta(spec: ProblemSpec, node: CommonNode, kernel: np.ndarray) -> np.ndarray:
    """Joint distribution over ``(x, p0..pK, m1..mK, [u0], n)`` induced by ``kernel`` at ``node``."""
    t = node.time - 1
    sp = spec.spaces[t]
    out_shape = tuple(sp.messages) if spec.variant is Variant.FIXED_ACTION else (*sp.messages, sp.actions[0])
    pi = node.belief.reshape(sp.belief_shape)
    g = np.asarray(kernel, dtype=float).reshape(sp.private[0], *out_shape)
    K = spec.num_agents
    pi_b = pi.reshape(*sp.belief_shape, *([1] * len(out_shape)), 1)
    g_b = g.reshape(1, sp.private[0], *([1] * K), *out_shape, 1)
    q_b = spec.noise[t].reshape(*([1] * (len(sp.belief_shape) + len(out_shape))), -1)
    return pi_b * g_b * q_b


# ---------------------------------------------------------------------------
# Backward induction


@dataclass
class SolveStats:
    lps_solved: int = 0
    pivots: int = 0
    wall_time: float = 0.0
    lps_per_level: list[int] = field(default_factory=list)


@dataclass
class DesignerSolution:
    """Kernels and values on every node (or belief class) of the tree.

    ``kernels[t][k]`` has shape ``(|P0_t|, D_t)``; ``W[t]`` has shape
    ``(nodes, K)`` and ``V[t]`` shape ``(nodes,)``.  Levels above an
    infeasible node are left unsolved (``None``).
    """

    variant: Variant
    tree: CommonTree
    kernels: list[list[np.ndarray | None]]
    W: list[np.ndarray]
    V: list[np.ndarray]
    J0: float | None
    status: str
    infeasible_nodes: list[str] = field(default_factory=list)
    symmetrized: bool = False
    stats: SolveStats = field(default_factory=SolveStats)

    @property
    def solved(self) -> bool:
        return self.status == "Solved"

    @property
    def memoized(self) -> bool:
        return self.tree.memoized

    def to_dict(self, record_time: bool = False) -> dict:
        levels = []
        for t, level in enumerate(self.tree.levels):
            rows = []
            for k, nd in enumerate(level):
                ker = self.kernels[t][k]
                rows.append({
                    "node_key": nd.node_key,
                    "belief_key": nd.belief_key,
                    "multiplicity": nd.multiplicity,
                    "kernel": None if ker is None else ker.tolist(),
                    "W": None if ker is None else self.W[t][k].tolist(),
                    "V": None if ker is None else float(self.V[t][k]),
                })
            levels.append(rows)
        stats = {"lps_solved": self.stats.lps_solved, "pivots": self.stats.pivots,
                 "lps_per_level": list(self.stats.lps_per_level)}
        if record_time:
            stats["wall_time"] = self.stats.wall_time
        status = self.status if self.solved else f"InfeasibleAt({self.infeasible_nodes[0]})"
        return {
            "format_version": SOLUTION_FORMAT,
            "variant": self.variant.value,
            "J0": self.J0,
            "status": status,
            "infeasible_nodes": list(self.infeasible_nodes),
            "memoized": self.memoized,
            "symmetrized": self.symmetrized,
            "stats": stats,
            "levels": levels,
        }

    def save(self, path: str | Path, record_time: bool = False) -> None:
        Path(path).write_text(json.dumps(self.to_dict(record_time)) + "\n")


def solution_from_dict(doc: dict, spec: ProblemSpec) -> DesignerSolution:
    """Rebuild a solution from its JSON form; the tree is re-enumerated from ``spec``."""
    if str(doc.get("format_version")) != SOLUTION_FORMAT:
        raise ValueError(f"unsupported solution format_version {doc.get('format_version')!r}")
    tree = build_tree(spec, memoize=bool(doc["memoized"]))
    levels = doc["levels"]
    if len(levels) != len(tree.levels):
        raise ValueError("solution does not match the problem's tree depth")
    kernels, Ws, Vs = [], [], []
    for t, (rows, nodes) in enumerate(zip(levels, tree.levels)):
        if len(rows) != len(nodes):
            raise ValueError(f"solution has {len(rows)} nodes at t={t + 1}, problem has {len(nodes)}")
        ks, w, v = [], np.zeros((len(nodes), spec.num_agents)), np.zeros(len(nodes))
        for k, (row, nd) in enumerate(zip(rows, nodes)):
            if row["node_key"] != nd.node_key:
                raise ValueError(f"node {row['node_key']} does not match problem node {nd.node_key}")
            if row["kernel"] is None:
                ks.append(None)
                continue
            ks.append(np.asarray(row["kernel"], dtype=float))
            w[k] = row["W"]
            v[k] = row["V"]
        kernels.append(ks)
        Ws.append(w)
        Vs.append(v)
    st = doc.get("stats", {})
    status = doc["status"]
    return DesignerSolution(
        variant=Variant(doc["variant"]), tree=tree, kernels=kernels, W=Ws, V=Vs, J0=doc["J0"],
        status="Solved" if status == "Solved" else "Infeasible",
        infeasible_nodes=list(doc.get("infeasible_nodes", [])), symmetrized=bool(doc.get("symmetrized")),
        stats=SolveStats(st.get("lps_solved", 0), st.get("pivots", 0), st.get("wall_time", 0.0),
                         list(st.get("lps_per_level", []))),
    )


def load_solution(path: str | Path, spec: ProblemSpec) -> DesignerSolution:
    return solution_from_dict(json.loads(Path(path).read_text()), spec)


@dataclass
class NodeResult:
    status: LPStatus
    kernel: np.ndarray | None = None
    W: np.ndarray | None = None
    V: float | None = None
    pivots: int = 0
    program: NodeProgram | None = None


def solve_node(spec: ProblemSpec, node: CommonNode, next_W=None, next_V=None,
               tol: ToleranceConfig | None = None, symmetrize: bool = False) -> NodeResult:
    """Assemble and solve one node program.

    Raises:
        NumericalBreakdown: propagated from the simplex.
    """
    tol = tol or ToleranceConfig()
    prog = node_lp(spec, node, next_W, next_V, tol)
    sol = solve_lp(prog.lp, tol)
    if sol.status is not LPStatus.OPTIMAL:
        if sol.status is LPStatus.UNBOUNDED:
            raise NumericalBreakdown("node program reported unbounded; values are bounded by construction")
        return NodeResult(sol.status, pivots=sol.pivots, program=prog)
    kernel = np.maximum(prog.kernel(sol.x), 0.0)
    kernel /= kernel.sum(axis=1, keepdims=True)
    if symmetrize:
        kernel = _symmetrize(spec, node, prog, kernel, tol)
    vals = prog.value_coeffs @ kernel.ravel()
    return NodeResult(LPStatus.OPTIMAL, kernel, vals[1:].copy(), float(vals[0]), sol.pivots, prog)


def _orbit_labels(spec: ProblemSpec, t: int) -> np.ndarray | None:
    """Label each output by its message histogram (agent-permutation orbit), or None if agents differ."""
    sp = spec.spaces[t]
    K = spec.num_agents
    if K < 2 or len(set(sp.messages)) != 1 or len(set(sp.private[1:])) != 1 or len(set(sp.actions[1:])) != 1:
        return None
    msgs, u0s = spec.decode_outputs(t)
    hist = np.stack([np.sum(msgs == v, axis=1) for v in range(sp.messages[0])], axis=1)
    key = hist if u0s is None else np.concatenate([hist, u0s[:, None]], axis=1)
    _, labels = np.unique(key, axis=0, return_inverse=True)
    return labels.ravel()


def _symmetrize(spec, node, prog: NodeProgram, kernel: np.ndarray, tol: ToleranceConfig) -> np.ndarray:
    """Average the kernel over agent permutations; keep it only if still feasible and optimal."""
    labels = _orbit_labels(spec, node.time - 1)
    if labels is None:
        return kernel
    counts = np.bincount(labels)
    sym = np.stack([(np.bincount(labels, weights=row) / counts)[labels] for row in kernel])
    point = prog.point(sym)
    ok, _ = check_feasible(prog.lp, point, 1e-9)
    v_old = float(prog.value_coeffs[0] @ kernel.ravel())
    if ok and point[-1] >= v_old - 1e-9:
        return sym
    return kernel


def backward_induct(spec: ProblemSpec, memoize: bool = True, tol: ToleranceConfig | None = None, *,
                    force: bool = False, scan_all: bool = False, threads: int = 1,
                    symmetrize: bool = False, a2_trials: int = 5, a2_seed: int = 0,
                    tree: CommonTree | None = None) -> DesignerSolution:
    """Solve every node program from the last stage to the first.

    Raises:
        AssumptionViolation: beliefs depend on the profile and ``force`` is False.
        MemoizationUnsound: ``memoize`` with node-keyed strategies.
        NumericalBreakdown: from the simplex.
    """
    tol = tol or ToleranceConfig()
    start = time.perf_counter()
    if not force:
        report = check_assumption2(spec, trials=a2_trials, tol=1e-9, seed=a2_seed)
        if not report.passes:
            raise AssumptionViolation(report)
    if tree is None:
        tree = build_tree(spec, memoize=memoize, threads=threads)
    T, K = spec.horizon, spec.num_agents
    kernels: list[list] = [[None] * len(lv) for lv in tree.levels]
    Ws = [np.zeros((len(lv), K)) for lv in tree.levels]
    Vs = [np.zeros(len(lv)) for lv in tree.levels]
    stats = SolveStats(lps_per_level=[0] * T)
    infeasible: list[str] = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for t in range(T - 1, -1, -1):
            nW = Ws[t + 1] if t + 1 < T else None
            nV = Vs[t + 1] if t + 1 < T else None
            level = tree.levels[t]

            def work(nd, nW=nW, nV=nV):
                return solve_node(spec, nd, nW, nV, tol, symmetrize)

            if pool is not None:
                results = list(pool.map(work, level))
            else:
                results = []
                for nd in level:
                    res = work(nd)
                    results.append(res)
                    if res.status is not LPStatus.OPTIMAL and not scan_all:
                        break
            for k, res in enumerate(results):
                stats.lps_solved += 1
                stats.lps_per_level[t] += 1
                stats.pivots += res.pivots
                if res.status is not LPStatus.OPTIMAL:
                    infeasible.append(level[k].node_key)
                    if not scan_all:
                        break
                    continue
                kernels[t][k] = res.kernel
                Ws[t][k] = res.W
                Vs[t][k] = res.V
            if infeasible:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    stats.wall_time = time.perf_counter() - start
    if infeasible:
        return DesignerSolution(spec.variant, tree, kernels, Ws, Vs, None, "Infeasible", infeasible,
                                symmetrize, stats)
    J0 = float(math.fsum(nd.prob * Vs[0][k] for k, nd in enumerate(tree.levels[0])))
    return DesignerSolution(spec.variant, tree, kernels, Ws, Vs, J0, "Solved", [], symmetrize, stats)


def designer_value_of(spec: ProblemSpec, tree: CommonTree, kernels) -> float:
    """Designer value of arbitrary per-node kernels, computed through the node value rows."""
    T, K = spec.horizon, spec.num_agents
    nW, nV = None, None
    for t in range(T - 1, -1, -1):
        level = tree.levels[t]
        W = np.zeros((len(level), K))
        V = np.zeros(len(level))
        for k, nd in enumerate(level):
            prog = node_lp(spec, nd, nW, nV)
            vals = prog.value_coeffs @ np.asarray(kernels[t][k], dtype=float).ravel()
            W[k], V[k] = vals[1:], vals[0]
        nW, nV = W, V
    return float(math.fsum(nd.prob * nV[k] for k, nd in enumerate(tree.levels[0])))
