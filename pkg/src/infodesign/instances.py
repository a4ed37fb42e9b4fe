"""Small instance generators used by the tests, the benchmark and the CLI.

Random instances keep beliefs strategy independent by construction: the
common increment reveals the current state and every action, and private
information is a noisy reading of the next state.  Given the increment, the
next state and private values then depend only on fresh noise.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .model import KeyedMap, ProblemSpec, TimeSpaces, Variant


def _dirichlet(rng, k, size=None):
    return rng.dirichlet(np.ones(k), size=size)


def random_problem(rng: np.random.Generator, variant: Variant | str = Variant.MULTI_AGENT, *,
                   horizon: int | None = None, num_agents: int | None = None, num_states: int | None = None,
                   designer_actions: int | None = None, private_sizes: tuple[int, ...] | None = None,
                   num_noise: int = 2, c1_size: int | None = None) -> ProblemSpec:
    """Random instance with binary agent actions and messages and obedience targets.

    Unspecified sizes are drawn at random: horizon 1..3, 2..3 states, private
    spaces of size 1..2, one or two initial common values.
    """
    variant = Variant(variant)
    T = horizon or int(rng.integers(1, 4))
    K = num_agents or (1 if variant is not Variant.MULTI_AGENT else 2)
    nx = num_states or int(rng.integers(2, 4))
    u0 = designer_actions or (2 if variant is Variant.FIXED_ACTION else int(rng.integers(1, 3)))
    priv = private_sizes or tuple(int(rng.integers(1, 3)) for _ in range(K + 1))
    c1 = c1_size or int(rng.integers(1, 3))
    actions = (u0,) + (2,) * K
    n_act = int(np.prod(actions))
    sp = TimeSpaces(state=nx, noise=num_noise, actions=actions, messages=(2,) * K, private=priv, increment=c1)
    spaces = (sp,) + tuple(replace(sp, increment=nx * n_act) for _ in range(T - 1))

    noise = tuple(_dirichlet(rng, num_noise) for _ in range(T))
    p_x1 = _dirichlet(rng, nx)
    # Initial private values are noisy readings of x1; the initial common value is another.
    obs = [_dirichlet(rng, priv[i], size=nx) for i in range(K + 1)]
    cdist = _dirichlet(rng, c1, size=nx)
    lam = np.ones((nx, num_noise, *priv, c1))
    for i in range(K + 1):
        shape = [nx, 1] + [1] * (K + 1) + [1]
        shape[2 + i] = priv[i]
        lam = lam * obs[i].reshape(shape)
    lam = lam * cdist.reshape(nx, 1, *([1] * (K + 1)), c1)

    dynamics, xi, zeta = [], [], []
    for t in range(T - 1):
        f = rng.integers(0, nx, size=(nx, *actions, num_noise))
        readings = [rng.integers(0, priv[i], size=(nx, num_noise)) for i in range(K + 1)]
        n_idx = np.arange(num_noise).reshape(1, *([1] * len(actions)), num_noise)
        xi_t = []
        for i in range(K + 1):
            r = readings[i][f, np.broadcast_to(n_idx, f.shape)]
            xi_t.append(np.ascontiguousarray(np.broadcast_to(r[:, None], (nx, priv[i], *actions, num_noise))))
        grid = np.indices((nx, *actions))
        zflat = np.ravel_multi_index(tuple(grid), (nx, *actions))
        z = np.broadcast_to(zflat.reshape(nx, *([1] * (K + 1)), *actions, 1), (nx, *priv, *actions, num_noise))
        dynamics.append(f)
        xi.append(tuple(xi_t))
        zeta.append(np.ascontiguousarray(z))

    rewards = tuple(tuple(np.round(rng.uniform(-1, 1, size=(nx, *actions)), 3) for _ in range(K + 1))
                    for _ in range(T))
    targets = tuple(tuple(KeyedMap(np.repeat(np.arange(2)[:, None], priv[i + 1], axis=1), "belief")
                          for _ in range(T)) for i in range(K))
    h0 = None
    if variant is Variant.FIXED_ACTION:
        h0 = tuple(KeyedMap(rng.integers(0, u0, size=priv[0]), "belief") for _ in range(T))
    return ProblemSpec(
        horizon=T, num_agents=K, variant=variant, spaces=spaces, noise=noise, p_x1=p_x1, lam=lam,
        c1_size=c1, dynamics=tuple(dynamics), xi=tuple(xi), zeta=tuple(zeta), rewards=rewards,
        targets=targets, h0=h0,
    )


def with_belief_overrides(spec: ProblemSpec, rng: np.random.Generator, fraction: float = 0.5) -> ProblemSpec:
    """Give a random subset of beliefs reversed-obedience targets (play the other action).

    Reversal is a relabeling of messages, so it is exactly as attainable as
    obedience; the point is to make targets vary with the belief.
    """
    from .beliefs import build_tree

    tree = build_tree(spec, memoize=False)
    targets = []
    for i, per_t in enumerate(spec.targets):
        new_t = []
        for t, km in enumerate(per_t):
            keys = sorted({nd.belief_key for nd in tree.levels[t]})
            chosen = [k for k in keys if rng.random() < fraction]
            flipped = 1 - np.asarray(km.table)
            new_t.append(KeyedMap(km.table, "belief", {k: flipped for k in chosen}))
        targets.append(tuple(new_t))
    return replace(spec, targets=tuple(targets))


def joint_twin(spec: ProblemSpec) -> ProblemSpec:
    """The same single-agent instance with the designer action optimized instead of fixed."""
    if spec.variant is not Variant.FIXED_ACTION:
        raise ValueError("expected a FixedAction instance")
    return replace(spec, variant=Variant.JOINT_MESSAGE_ACTION, h0=None)


def static_persuasion(prior_guilty: float = 0.3) -> ProblemSpec:
    """One-shot persuasion: the agent wants to match the state, the designer wants action 1.

    With prior ``mu`` on state 1 the optimal designer value is ``min(1, 2 mu)``
    for ``mu <= 1/2`` (recommend 1 always in state 1, and in state 0 with
    probability ``mu / (1 - mu)``).
    """
    sp = TimeSpaces(state=2, noise=1, actions=(1, 2), messages=(2,), private=(2, 1), increment=1)
    lam = np.zeros((2, 1, 2, 1, 1))
    lam[0, 0, 0] = lam[1, 0, 1] = 1.0
    r_agent = np.array([[1.0, 0.0], [0.0, 1.0]]).reshape(2, 1, 2)
    r_designer = np.array([[0.0, 1.0], [0.0, 1.0]]).reshape(2, 1, 2)
    obey = np.array([[0], [1]])
    return ProblemSpec(
        horizon=1, num_agents=1, variant=Variant.JOINT_MESSAGE_ACTION, spaces=(sp,), noise=(np.ones(1),),
        p_x1=np.array([1 - prior_guilty, prior_guilty]), lam=lam, c1_size=1, dynamics=(), xi=(), zeta=(),
        rewards=((r_designer, r_agent),), targets=((KeyedMap(obey, "belief"),),), h0=None,
    )


def dominated_target() -> ProblemSpec:
    """Two stages, state fixed and revealed after stage 1; one message only.

    The target always plays action 1.  At stage 2 in state 1 that action is
    strictly worse for the agent, so the node reached through increment 1
    (key ``0/1``) has no feasible kernel; the node ``0/0`` is fine.
    """
    sp1 = TimeSpaces(state=2, noise=1, actions=(1, 2), messages=(1,), private=(1, 1), increment=1)
    sp2 = replace(sp1, increment=2)
    lam = np.ones((2, 1, 1, 1, 1))
    stay = np.broadcast_to(np.arange(2).reshape(2, 1, 1, 1), (2, 1, 2, 1)).copy()
    xi = tuple(np.zeros((2, 1, 1, 2, 1), dtype=np.int64) for _ in range(2))
    zeta = np.broadcast_to(np.arange(2).reshape(2, 1, 1, 1, 1, 1), (2, 1, 1, 1, 2, 1)).copy()
    neutral = np.zeros((2, 1, 2))
    r2 = np.array([[0.0, 0.0], [0.0, -1.0]]).reshape(2, 1, 2)
    target = KeyedMap(np.array([[1]]), "belief")
    return ProblemSpec(
        horizon=2, num_agents=1, variant=Variant.JOINT_MESSAGE_ACTION, spaces=(sp1, sp2),
        noise=(np.ones(1), np.ones(1)), p_x1=np.array([0.5, 0.5]), lam=lam, c1_size=1,
        dynamics=(stay,), xi=(xi,), zeta=(zeta,),
        rewards=((neutral, neutral), (neutral, r2)), targets=((target, target),), h0=None,
    )


def hidden_action() -> ProblemSpec:
    """The agent privately remembers its first action; nobody else sees it.

    The belief about the agent's private value at stage 2 is then the
    agent's own mixing probability, so it changes with the strategy.
    """
    sp1 = TimeSpaces(state=2, noise=1, actions=(1, 2), messages=(2,), private=(2, 1), increment=1)
    sp2 = TimeSpaces(state=2, noise=1, actions=(1, 2), messages=(2,), private=(2, 2), increment=1)
    lam = np.zeros((2, 1, 2, 1, 1))
    lam[0, 0, 0] = lam[1, 0, 1] = 1.0
    stay = np.broadcast_to(np.arange(2).reshape(2, 1, 1, 1), (2, 1, 2, 1)).copy()
    xi0 = np.broadcast_to(np.arange(2).reshape(2, 1, 1, 1, 1), (2, 2, 1, 2, 1)).copy()
    xi1 = np.broadcast_to(np.arange(2).reshape(1, 1, 1, 2, 1), (2, 1, 1, 2, 1)).copy()
    zeta = np.zeros((2, 2, 1, 1, 2, 1), dtype=np.int64)
    r = np.array([[1.0, 0.0], [0.0, 1.0]]).reshape(2, 1, 2)
    r2 = np.zeros((2, 1, 2))
    obey1 = KeyedMap(np.array([[0], [1]]), "belief")
    obey2 = KeyedMap(np.array([[0, 0], [1, 1]]), "belief")
    return ProblemSpec(
        horizon=2, num_agents=1, variant=Variant.JOINT_MESSAGE_ACTION, spaces=(sp1, sp2),
        noise=(np.ones(1), np.ones(1)), p_x1=np.array([0.5, 0.5]), lam=lam, c1_size=1,
        dynamics=(stay,), xi=((xi0, xi1),), zeta=(zeta,),
        rewards=((r, r), (r2, r2)), targets=((obey1, obey2),), h0=None,
    )


def trivial(reward_designer: float = 1.5, reward_agent: float = 0.25) -> ProblemSpec:
    """One stage, one agent, every space a singleton."""
    sp = TimeSpaces(state=1, noise=1, actions=(1, 1), messages=(1,), private=(1, 1), increment=1)
    return ProblemSpec(
        horizon=1, num_agents=1, variant=Variant.FIXED_ACTION, spaces=(sp,), noise=(np.ones(1),),
        p_x1=np.ones(1), lam=np.ones((1, 1, 1, 1, 1)), c1_size=1, dynamics=(), xi=(), zeta=(),
        rewards=((np.full((1, 1, 1), reward_designer), np.full((1, 1, 1), reward_agent)),),
        targets=((KeyedMap(np.zeros((1, 1), dtype=np.int64), "belief"),),),
        h0=(KeyedMap(np.zeros(1, dtype=np.int64), "belief"),),
    )
