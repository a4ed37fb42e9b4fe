"""Two-route congestion game with a designer who privately observes the risky route."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import KeyedMap, ProblemSpec, TimeSpaces, Variant


@dataclass(frozen=True)
class CongestionParams:
    """Parameters of the congestion instance.

    Attributes:
        k: number of agents.
        t: horizon in days.
        a: condition of the safe route (route 0).
        theta1: low condition of the risky route (route 1).
        theta2: high condition of the risky route.
        p1: probability that the risky route starts at ``theta1``.
        rho: probability that the risky route keeps its condition overnight.
    """

    k: int = 10
    t: int = 2
    a: float = 1.5
    theta1: float = 1.2
    theta2: float = 2.8
    p1: float = 0.5
    rho: float = 0.9

    def __post_init__(self):
        if self.k < 1 or self.t < 1:
            raise ValueError("k and t must be >= 1")
        if not 0.0 <= self.p1 <= 1.0 or not 0.0 <= self.rho <= 1.0:
            raise ValueError("p1 and rho must lie in [0, 1]")


def congestion_rewards(params: CongestionParams) -> np.ndarray:
    """Agent rewards with shape ``(K, 2, 2, ..., 2)`` over ``(x, u_1, ..., u_K)``."""
    K = params.k
    theta = np.array([params.theta1, params.theta2])
    grid = np.indices((2,) + (2,) * K)
    x, u = grid[0], grid[1:]
    risky = u.sum(axis=0)
    out = np.empty((K,) + x.shape)
    for i in range(K):
        out[i] = np.where(u[i] == 0, params.a - (K - risky) / K, theta[x] - risky / K)
    return out


def generate_congestion(params: CongestionParams) -> ProblemSpec:
    """Build the tabular instance.

    The designer sees the current route condition, sends each agent a
    recommended route, and takes no action (singleton no-op).  Everyone
    observes the previous condition and all agents' routes afterwards.
    Targets are obedience, keyed by belief.
    """
    K, T = params.k, params.t
    n_z = 2 * 2 ** K
    sp = TimeSpaces(
        state=2, noise=2, actions=(1,) + (2,) * K, messages=(2,) * K, private=(2,) + (1,) * K,
        increment=1, state_names=(f"theta1={params.theta1:g}", f"theta2={params.theta2:g}")
        if params.theta1 != params.theta2 else None,
    )
    spaces = (sp,) + tuple(TimeSpaces(**{**sp.__dict__, "increment": n_z}) for _ in range(T - 1))
    noise = tuple(np.array([params.rho, 1.0 - params.rho]) for _ in range(T))

    ushape = (1,) + (2,) * K
    x, *us, n = np.indices((2, *ushape, 2))
    nxt = np.where(n == 0, x, 1 - x)
    dynamics = nxt
    # designer's private value tracks the state: (x, p0, u..., n) -> x'
    xi0 = np.ascontiguousarray(np.broadcast_to(nxt[:, None], (2, 2, *ushape, 2)))
    xi_agent = np.zeros((2, 1, *ushape, 2), dtype=np.int64)
    weights = 2 ** np.arange(K - 1, -1, -1)
    zflat = x * 2 ** K + sum(w * u for w, u in zip(weights, us[1:]))
    # zeta axes: (x, p0, p_1..p_K, u0, u_1..u_K, n); only x and the agents' routes matter.
    zeta = np.ascontiguousarray(np.broadcast_to(
        zflat.reshape(2, 1, *([1] * K), *ushape, 2), (2, 2, *([1] * K), *ushape, 2)))

    agent_r = congestion_rewards(params)
    rewards_t = tuple([agent_r.sum(axis=0).reshape(2, *ushape)] + [agent_r[i].reshape(2, *ushape) for i in range(K)])

    lam = np.zeros((2, 2, 2) + (1,) * K + (1,))
    for xv in range(2):
        lam[xv, :, xv] = 1.0
    obey = np.array([[0], [1]], dtype=np.int64)
    targets = tuple(tuple(KeyedMap(obey, "belief") for _ in range(T)) for _ in range(K))
    return ProblemSpec(
        horizon=T, num_agents=K,
        variant=Variant.MULTI_AGENT if K >= 2 else Variant.JOINT_MESSAGE_ACTION,
        spaces=spaces, noise=noise, p_x1=np.array([params.p1, 1.0 - params.p1]), lam=lam, c1_size=1,
        dynamics=tuple(dynamics for _ in range(T - 1)),
        xi=tuple((xi0, *(xi_agent for _ in range(K))) for _ in range(T - 1)),
        zeta=tuple(zeta for _ in range(T - 1)),
        rewards=tuple(rewards_t for _ in range(T)),
        targets=targets, h0=None,
    )
