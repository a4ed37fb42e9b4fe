"""Human-readable solution summaries.

Multi-agent kernels are often invariant under permuting agents, in which
case the mass on a message vector depends only on how many agents receive
each message.  For binary messages that is the count ``sigma = sum_i m^i``.
The summary groups outputs by ``sigma`` (and the designer action, if any)
and prints the grouped view only when every entry of a group agrees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ProblemSpec
from .solver import DesignerSolution

SYMMETRY_TOL = 1e-9
SHOW_MASS = 1e-12


@dataclass(frozen=True)
class SigmaGroup:
    """Outputs sharing a message count (and designer action).

    Attributes:
        p0: designer private value.
        sigma: sum of the agents' messages.
        u0: designer action, or None when the kernel ranges over messages only.
        size: number of message vectors in the group.
        per_vector: mass on each vector of the group.
    """

    p0: int
    sigma: int
    u0: int | None
    size: int
    per_vector: float

    @property
    def count_mass(self) -> float:
        return self.per_vector * self.size


def _sigma_labels(spec: ProblemSpec, t: int) -> tuple[np.ndarray, np.ndarray | None]:
    msgs, u0s = spec.decode_outputs(t)
    if spec.spaces[t].actions[0] == 1:
        u0s = None
    return msgs.sum(axis=1), u0s


def compress_kernel(spec: ProblemSpec, t: int, kernel: np.ndarray,
                    tol: float = SYMMETRY_TOL) -> list[SigmaGroup] | None:
    """Group a stage-``t`` kernel by message count, or None if that would lose information.

    Returns None for a single agent, for agents with different message
    spaces, or when two vectors in one group carry masses more than ``tol``
    apart.  Groups with no mass are omitted.
    """
    sp = spec.spaces[t]
    if spec.num_agents < 2 or len(set(sp.messages)) != 1:
        return None
    sigma, u0s = _sigma_labels(spec, t)
    u0_key = np.zeros_like(sigma) if u0s is None else u0s
    out = []
    for p0, row in enumerate(np.asarray(kernel, dtype=float)):
        for s, a in sorted(set(zip(sigma.tolist(), u0_key.tolist()))):
            sel = (sigma == s) & (u0_key == a)
            vals = row[sel]
            if vals.max() - vals.min() > tol:
                return None
            if vals.max() > SHOW_MASS:
                out.append(SigmaGroup(p0, int(s), None if u0s is None else int(a), int(sel.sum()),
                                      float(vals.mean())))
    return out


def _output_label(msgs: np.ndarray, u0s: np.ndarray | None, d: int) -> str:
    sep = "" if msgs.max(initial=0) < 10 else ","
    label = "m=" + sep.join(str(v) for v in msgs[d])
    if u0s is not None:
        label += f" u0={u0s[d]}"
    return label


def _node_lines(spec: ProblemSpec, t: int, kernel: np.ndarray, compress: bool) -> list[str]:
    groups = compress_kernel(spec, t, kernel) if compress else None
    lines = []
    if groups is not None:
        for g in groups:
            act = "" if g.u0 is None else f" u0={g.u0}"
            lines.append(f"    p0={g.p0}{act}: sigma={g.sigma}, mass/vector {g.per_vector:.4f}, "
                         f"count mass {g.count_mass:.4f} ({g.size} vectors)")
        return lines
    msgs, u0s = spec.decode_outputs(t)
    if spec.spaces[t].actions[0] == 1:
        u0s = None
    for p0, row in enumerate(kernel):
        for d in np.flatnonzero(row > SHOW_MASS):
            lines.append(f"    p0={p0} {_output_label(msgs, u0s, int(d))}: {row[d]:.4f}")
    return lines


def report(solution: DesignerSolution, spec: ProblemSpec, compress: bool = True) -> str:
    """Summary text: status, designer value, LP counts, and per-node kernels."""
    out = [f"status: {solution.to_dict()['status']}"]
    if solution.J0 is not None:
        out.append(f"J0: {solution.J0:.6f}")
    per_level = ", ".join(f"t={t + 1}: {n}" for t, n in enumerate(solution.stats.lps_per_level))
    out.append(f"LPs solved: {solution.stats.lps_solved} ({per_level})")
    if solution.infeasible_nodes:
        out.append("infeasible nodes: " + ", ".join(solution.infeasible_nodes))
    for t, level in enumerate(solution.tree.levels):
        for k, nd in enumerate(level):
            ker = solution.kernels[t][k]
            if ker is None:
                continue
            out.append(f"  t={t + 1} node {nd.node_key} (belief {nd.belief_key}, "
                       f"multiplicity {nd.multiplicity}, V={solution.V[t][k]:.6f})")
            out.extend(_node_lines(spec, t, ker, compress))
    return "\n".join(out)
