"""Common-information tree and the strategy-independent beliefs attached to it.

A node at time ``t`` is identified by its increment path ``(c1, z2, ..., zt)``.
Its belief is a distribution over ``(x, p0, ..., pK)`` at time ``t``.  Children
are the increments with positive probability under the reference profile in
which every joint action ``(u0, ..., uK)`` is played uniformly at random.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import ProblemSpec

KEY_DECIMALS = 12
COLLISION_TOL = 1e-10


class MemoizationUnsound(ValueError):
    """Belief coalescing was requested but some strategy is keyed by node."""


class TreeTooLarge(RuntimeError):
    """The node budget was exhausted while expanding the tree."""


@dataclass
class StageTables:
    """Every ``(x, p, u, n)`` combination at one stage, flattened row-major.

    ``z`` and ``nxp`` (next flat belief index) are ``None`` at the last stage.
    """

    t: int
    belief_shape: tuple[int, ...]
    action_shape: tuple[int, ...]
    xp: np.ndarray
    u: np.ndarray
    n: np.ndarray
    x: np.ndarray
    z: np.ndarray | None
    nxp: np.ndarray | None
    next_belief_size: int
    num_increments: int

    @property
    def belief_size(self) -> int:
        return int(np.prod(self.belief_shape))

    @property
    def joint_actions(self) -> int:
        return int(np.prod(self.action_shape))


def stage_tables(spec: ProblemSpec, t: int) -> StageTables:
    """Combination arrays for stage ``t`` (0-based), cached on the ProblemSpec."""
    cache = spec.__dict__.setdefault("_stage_cache", {})
    if t in cache:
        return cache[t]
    sp = spec.spaces[t]
    K = spec.num_agents
    bshape, ashape = sp.belief_shape, tuple(sp.actions)
    full = (*bshape, *ashape, sp.noise)
    grid = np.indices(full).reshape(len(full), -1)
    x, p, u_parts, n = grid[0], grid[1:K + 2], grid[K + 2:2 * K + 3], grid[-1]
    xp = np.ravel_multi_index((x, *p), bshape)
    u = np.ravel_multi_index(tuple(u_parts), ashape)
    z = nxp = None
    nb, nz = 1, 1
    if t < spec.horizon - 1:
        nx = spec.spaces[t + 1]
        uidx = tuple(u_parts)
        x2 = spec.dynamics[t][(x, *uidx, n)]
        p2 = [spec.xi[t][i][(x, p[i], *uidx, n)] for i in range(K + 1)]
        z = spec.zeta[t][(x, *p, *uidx, n)]
        nxp = np.ravel_multi_index((x2, *p2), nx.belief_shape)
        nb, nz = nx.belief_size, nx.increment
    tab = StageTables(t, bshape, ashape, xp, u, n, x, z, nxp, nb, nz)
    cache[t] = tab
    return tab


def canonical_belief(belief: np.ndarray) -> np.ndarray:
    """Flat belief rounded to the fingerprint precision.

    Node programs are assembled from this vector, so nodes sharing a
    fingerprint get bit-identical programs.
    """
    return np.round(np.asarray(belief, dtype=float).ravel(), KEY_DECIMALS) + 0.0


def belief_key(belief: np.ndarray) -> str:
    """Fingerprint of a belief: sorted support with probabilities rounded to 12 decimals."""
    r = canonical_belief(belief)
    support = np.flatnonzero(r)
    text = ";".join(f"{i}:{r[i]:.{KEY_DECIMALS}f}" for i in support)
    return hashlib.sha1(text.encode()).hexdigest()[:16]


def child_distribution(spec: ProblemSpec, t: int, belief: np.ndarray,
                       action_probs: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Increment probabilities and unnormalized next beliefs from a stage-``t`` belief.

    ``action_probs`` is ``P(u | x, p)`` with shape ``(belief_size, joint_actions)``;
    the default is the uniform reference profile.  Returns ``(pz, joint)`` with
    ``joint[z]`` the mass on each next ``(x, p)`` jointly with ``z``.
    """
    tab = stage_tables(spec, t)
    q = spec.noise[t]
    w = belief.ravel()[tab.xp] * q[tab.n]
    if action_probs is None:
        w = w / tab.joint_actions
    else:
        w = w * action_probs[tab.xp, tab.u]
    joint = np.bincount(tab.z * tab.next_belief_size + tab.nxp, weights=w,
                        minlength=tab.num_increments * tab.next_belief_size)
    joint = joint.reshape(tab.num_increments, tab.next_belief_size)
    return joint.sum(axis=1), joint


@dataclass
class CommonNode:
    """A common-information realization (or a class of belief-equivalent ones).

    ``time`` is 1-based.  ``prob`` is ``P(c1)`` at the first stage and
    ``P(z | parent)`` afterwards.  In a memoized tree ``path`` is the class
    representative (first member in lexicographic order), ``multiplicity`` the
    number of realizations in the class, and ``in_edges`` lists
    ``(parent index, z, P(z | parent))`` for every incoming transition.
    """

    time: int
    path: tuple[int, ...]
    belief: np.ndarray
    belief_key: str
    prob: float
    parent: int | None = None
    children: dict[int, int] = field(default_factory=dict)
    child_probs: dict[int, float] = field(default_factory=dict)
    in_edges: list[tuple[int, int, float]] = field(default_factory=list)
    multiplicity: int = 1

    @property
    def node_key(self) -> str:
        return "/".join(str(v) for v in self.path)

    @property
    def increment(self) -> int:
        return self.path[-1]


@dataclass
class CommonTree:
    levels: list[list[CommonNode]]
    memoized: bool
    # initial common value -> index of its node (or class) in levels[0]
    initial_index: dict[int, int] = field(default_factory=dict)

    def num_nodes(self) -> int:
        return sum(len(lv) for lv in self.levels)

    def locate(self, path) -> list[int]:
        """Indices along ``path`` (one per level); raises KeyError if unreachable."""
        idx = [self.initial_index[path[0]]]
        for t, z in enumerate(path[1:]):
            idx.append(self.levels[t][idx[-1]].children[z])
        return idx


def _keyed_lookup(registry: dict[str, list[tuple[np.ndarray, str]]], belief: np.ndarray) -> str:
    """Resolve a belief to a collision-free key, extending the registry if needed."""
    base = belief_key(belief)
    entries = registry.setdefault(base, [])
    for vec, key in entries:
        if np.allclose(vec, belief, atol=COLLISION_TOL, rtol=0.0):
            return key
    key = base if not entries else f"{base}#{len(entries) + 1}"
    entries.append((belief, key))
    return key


def initial_nodes(spec: ProblemSpec) -> list[CommonNode]:
    """One node per initial common value with positive probability."""
    sp = spec.spaces[0]
    # joint over (x, n, p0..pK, c1); the noise axis is summed out.
    joint = spec.p_x1[:, None, None] * spec.noise[0][None, :, None] * spec.lam.reshape(sp.state, sp.noise, -1)
    joint = joint.sum(axis=1).reshape(*sp.belief_shape, spec.c1_size)
    pc = joint.reshape(-1, spec.c1_size).sum(axis=0)
    nodes = []
    registry: dict = {}
    for c in range(spec.c1_size):
        if pc[c] <= 0:
            continue
        b = joint[..., c] / pc[c]
        nodes.append(CommonNode(1, (c,), b, _keyed_lookup(registry, b), float(pc[c])))
    return nodes


def expand_children(spec: ProblemSpec, node: CommonNode) -> list[CommonNode]:
    """Children of ``node`` reachable under the uniform reference profile."""
    t = node.time - 1
    if t >= spec.horizon - 1:
        return []
    pz, joint = child_distribution(spec, t, node.belief)
    shape = spec.spaces[t + 1].belief_shape
    out = []
    for z in np.flatnonzero(pz > 0):
        b = (joint[z] / pz[z]).reshape(shape)
        out.append(CommonNode(node.time + 1, (*node.path, int(z)), b, belief_key(b), float(pz[z])))
    return out


def _check_memo_hypothesis(spec: ProblemSpec) -> None:
    bad = [f"h{i + 1}_{t + 1}" for i, per_t in enumerate(spec.targets) for t, km in enumerate(per_t)
           if not km.belief_dependent]
    if spec.h0 is not None:
        bad += [f"h0_{t + 1}" for t, km in enumerate(spec.h0) if not km.belief_dependent]
    if bad:
        raise MemoizationUnsound("belief coalescing needs belief-keyed strategies; node-keyed: " + ", ".join(bad))


def build_tree(spec: ProblemSpec, memoize: bool = False, threads: int = 1,
               max_nodes: int = 2_000_000) -> CommonTree:
    """Enumerate the reachable common-information tree level by level.

    With ``memoize`` nodes at the same time with the same belief are merged
    into one class; the result is then a DAG whose edges carry the transition
    probabilities and whose nodes carry class multiplicities.

    Raises:
        MemoizationUnsound: ``memoize`` with a node-keyed target or designer action.
        TreeTooLarge: more than ``max_nodes`` nodes would be created.
    """
    if memoize:
        _check_memo_hypothesis(spec)
    level = initial_nodes(spec)
    if memoize:
        level, initial_index = _coalesce_initial(level)
    else:
        initial_index = {nd.path[0]: k for k, nd in enumerate(level)}
    levels = [level]
    total = len(level)
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for _ in range(1, spec.horizon):
            parents = levels[-1]
            if pool is not None:
                expanded = list(pool.map(lambda nd: expand_children(spec, nd), parents))
            else:
                expanded = [expand_children(spec, nd) for nd in parents]
            nxt: list[CommonNode] = []
            registry: dict = {}
            index: dict[str, int] = {}
            for pi, kids in enumerate(expanded):
                parent = parents[pi]
                for kid in kids:
                    z = kid.increment
                    parent.child_probs[z] = kid.prob
                    if memoize:
                        key = _keyed_lookup(registry, kid.belief)
                        if key in index:
                            ci = index[key]
                            cls = nxt[ci]
                            cls.multiplicity += parent.multiplicity
                        else:
                            ci = len(nxt)
                            index[key] = ci
                            kid.belief_key = key
                            kid.parent = pi
                            kid.multiplicity = parent.multiplicity
                            nxt.append(kid)
                            cls = kid
                        cls.in_edges.append((pi, z, kid.prob))
                        parent.children[z] = ci
                    else:
                        kid.belief_key = _keyed_lookup(registry, kid.belief)
                        kid.parent = pi
                        kid.in_edges.append((pi, z, kid.prob))
                        parent.children[z] = len(nxt)
                        nxt.append(kid)
            total += len(nxt)
            if total > max_nodes:
                raise TreeTooLarge(f"tree exceeds {max_nodes} nodes at t={len(levels) + 1}")
            levels.append(nxt)
    finally:
        if pool is not None:
            pool.shutdown()
    return CommonTree(levels, memoize, initial_index)


def _coalesce_initial(nodes: list[CommonNode]) -> tuple[list[CommonNode], dict[int, int]]:
    out: list[CommonNode] = []
    index: dict[str, int] = {}
    where: dict[int, int] = {}
    for nd in nodes:
        if nd.belief_key in index:
            cls = out[index[nd.belief_key]]
            cls.prob += nd.prob
            cls.multiplicity += 1
        else:
            index[nd.belief_key] = len(out)
            out.append(nd)
        where[nd.path[0]] = index[nd.belief_key]
    return out, where


# ---------------------------------------------------------------------------
# Strategy-independence check


@dataclass
class Assumption2Report:
    passes: bool
    max_deviation: float
    worst_node: str | None
    trials: int
    nodes_checked: int
    truncated: bool = False

    def to_dict(self) -> dict:
        return {"passes": self.passes, "max_deviation": self.max_deviation, "worst_node": self.worst_node,
                "trials": self.trials, "nodes_checked": self.nodes_checked, "truncated": self.truncated}


def _random_action_probs(spec: ProblemSpec, t: int, rng: np.random.Generator) -> np.ndarray:
    """``P(u | x, p)`` for a random strictly mixed profile, shape ``(belief_size, joint_actions)``.

    The designer draws ``(m, u0)`` from a random kernel given ``p0``; agent ``i``
    draws ``u_i`` from a random kernel given ``(m_i, p_i)``.
    """
    sp = spec.spaces[t]
    K = spec.num_agents
    msgs = tuple(sp.messages)
    g = rng.dirichlet(np.ones(int(np.prod(msgs)) * sp.actions[0]), size=sp.private[0])
    g = g.reshape(sp.private[0], *msgs, sp.actions[0])
    # Contract one agent at a time: axes (p0, m_1..m_K, u0) -> (p0, p_1, u_1, ..., u0)
    cur = g  # (p0, m1, ..., mK, u0) with processed agents replaced by (p_i, u_i) at the end
    for i in range(K):
        sig = rng.dirichlet(np.ones(sp.actions[i + 1]), size=(msgs[i], sp.private[i + 1]))  # (m_i, p_i, u_i)
        cur = np.tensordot(cur, sig, axes=([1], [0]))  # m_i consumed; (p_i, u_i) appended
    # cur axes: p0, u0, p1, u1, ..., pK, uK
    order_p = [0] + [2 + 2 * i for i in range(K)]
    order_u = [1] + [3 + 2 * i for i in range(K)]
    cur = np.transpose(cur, order_p + order_u)
    probs = cur.reshape(int(np.prod(sp.private)), -1)
    return np.broadcast_to(probs[None], (sp.state, *probs.shape)).reshape(sp.belief_size, -1)


def check_assumption2(spec: ProblemSpec, trials: int = 5, tol: float = 1e-9, seed: int = 0,
                      max_nodes: int = 200_000) -> Assumption2Report:
    """Recompute every node belief under random strictly mixed profiles.

    Each trial draws fresh kernels for every node and stage; the report gives
    the largest absolute deviation from the reference beliefs.  At most
    ``max_nodes`` nodes are visited per trial (``truncated`` is set otherwise).
    """
    if trials < 2:
        raise ValueError("trials must be >= 2")
    roots = initial_nodes(spec)
    worst, worst_node, checked, truncated = 0.0, None, 0, False
    for trial in range(trials):
        visited = 0
        stack = [(nd.path, nd.belief, nd.belief) for nd in reversed(roots)]
        while stack:
            path, ref_b, alt_b = stack.pop()
            visited += 1
            dev = float(np.max(np.abs(ref_b - alt_b)))
            if dev > worst:
                worst, worst_node = dev, "/".join(map(str, path))
            t = len(path) - 1
            if t >= spec.horizon - 1:
                continue
            if visited >= max_nodes:
                truncated = True
                break
            rng = np.random.default_rng(np.random.SeedSequence([seed, trial, *path]))
            probs = _random_action_probs(spec, t, rng)
            pz_ref, j_ref = child_distribution(spec, t, ref_b)
            pz_alt, j_alt = child_distribution(spec, t, alt_b, probs)
            shape = spec.spaces[t + 1].belief_shape
            for z in reversed(np.flatnonzero((pz_ref > 0) | (pz_alt > 0))):
                if pz_ref[z] <= 0 or pz_alt[z] <= 0:
                    worst, worst_node = max(worst, 1.0), "/".join(map(str, (*path, int(z))))
                    continue
                stack.append(((*path, int(z)), (j_ref[z] / pz_ref[z]).reshape(shape),
                              (j_alt[z] / pz_alt[z]).reshape(shape)))
        checked = max(checked, visited)
    return Assumption2Report(worst <= tol, worst, worst_node, trials, checked, truncated)
