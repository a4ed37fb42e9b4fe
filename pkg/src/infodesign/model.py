"""Problem instances: spaces, dynamics, information evolution, rewards, targets.

Every space is an index set ``0..size-1``.  Time is 0-based internally
(``t = 0`` is the first stage); node keys and JSON output use the same
0-based convention except where noted.

Table layouts (row-major, ``K`` = number of agents):

* ``dynamics[t]``  shape ``(X_t, U0_t, U1_t, ..., UK_t, N_t)`` -> index in ``X_{t+1}``
* ``xi[t][i]``     shape ``(X_t, Pi_t, U0_t, ..., UK_t, N_t)`` -> index in ``Pi_{t+1}``
* ``zeta[t]``      shape ``(X_t, P0_t, ..., PK_t, U0_t, ..., UK_t, N_t)`` -> index in ``Z_{t+1}``
* ``rewards[t][i]`` shape ``(X_t, U0_t, ..., UK_t)``, real
* ``lam``          shape ``(X_0, N_0, P0_0, ..., PK_0, C_1)``, rows over the trailing axes sum to 1
* ``targets[i-1][t].table`` shape ``(Mi_t, Pi_t)`` -> index in ``Ui_t``
* ``h0[t].table``  shape ``(P0_t,)`` -> index in ``U0_t``

Transition tables exist for ``t = 0..T-2`` only.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

FORMAT_VERSION = "1"
PROB_TOL = 1e-12


class ParseError(ValueError):
    """The problem file is not well-formed JSON of the expected layout."""


class ValidationError(ValueError):
    """The problem parses but violates an invariant."""

    def __init__(self, diagnostics: Sequence["Diagnostic"]):
        self.diagnostics = list(diagnostics)
        lines = [str(d) for d in self.diagnostics[:20]]
        if len(self.diagnostics) > 20:
            lines.append(f"... and {len(self.diagnostics) - 20} more")
        super().__init__("invalid problem:\n  " + "\n  ".join(lines))


class Variant(str, enum.Enum):
    FIXED_ACTION = "FixedAction"
    JOINT_MESSAGE_ACTION = "JointMessageAction"
    MULTI_AGENT = "MultiAgent"


@dataclass(frozen=True)
class Diagnostic:
    field: str
    index: tuple = ()
    message: str = ""

    def __str__(self) -> str:
        where = self.field + (str(list(self.index)) if self.index else "")
        return f"{where}: {self.message}"


@dataclass(frozen=True)
class FiniteSpace:
    label: str
    size: int
    element_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"space {self.label!r} must have size >= 1")
        if self.element_names is not None:
            if len(self.element_names) != self.size:
                raise ValueError(f"space {self.label!r}: {len(self.element_names)} names for size {self.size}")
            if len(set(self.element_names)) != self.size:
                raise ValueError(f"space {self.label!r}: element names are not unique")

    def name(self, index: int) -> str:
        return self.element_names[index] if self.element_names else str(index)


@dataclass(frozen=True)
class TimeSpaces:
    """Space sizes at one stage.

    ``actions`` and ``private`` are indexed by player ``0..K`` (0 = designer);
    ``messages`` by agent ``0..K-1`` (agent ``i+1``).  ``increment`` is the size
    of the common-information increment arriving at this stage (``C_1`` size at
    stage 0).
    """

    state: int
    noise: int
    actions: tuple[int, ...]
    messages: tuple[int, ...]
    private: tuple[int, ...]
    increment: int
    state_names: tuple[str, ...] | None = None

    @property
    def joint_actions(self) -> int:
        return int(np.prod(self.actions))

    @property
    def belief_shape(self) -> tuple[int, ...]:
        return (self.state, *self.private)

    @property
    def belief_size(self) -> int:
        return int(np.prod(self.belief_shape))

    def state_space(self) -> FiniteSpace:
        return FiniteSpace("X", self.state, self.state_names)


@dataclass(frozen=True)
class KeyedMap:
    """Deterministic per-stage strategy ``(m, p, key) -> u`` (or ``(p0, key) -> u0``).

    ``table`` is the default used at every common-information realization;
    ``overrides`` replaces it at specific keys.  ``keyed_by`` says whether keys
    are node keys or belief keys.  A belief-keyed map is a function of the
    common information only through the belief.
    """

    table: np.ndarray
    keyed_by: str = "belief"
    overrides: Mapping[str, np.ndarray] = field(default_factory=dict)

    @property
    def belief_dependent(self) -> bool:
        return self.keyed_by == "belief"

    def lookup(self, node_key: str, belief_key: str) -> np.ndarray:
        if not self.overrides:
            return self.table
        key = belief_key if self.keyed_by == "belief" else node_key
        return self.overrides.get(key, self.table)


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    horizon: int
    num_agents: int
    variant: Variant
    spaces: tuple[TimeSpaces, ...]
    noise: tuple[np.ndarray, ...]
    p_x1: np.ndarray
    lam: np.ndarray
    c1_size: int
    dynamics: tuple[np.ndarray, ...]
    xi: tuple[tuple[np.ndarray, ...], ...]
    zeta: tuple[np.ndarray, ...]
    rewards: tuple[tuple[np.ndarray, ...], ...]
    targets: tuple[tuple[KeyedMap, ...], ...]
    h0: tuple[KeyedMap, ...] | None = None

    @property
    def players(self) -> range:
        return range(self.num_agents + 1)

    def designer_outputs(self, t: int) -> int:
        """Number of designer outputs ``d`` per private-information value at stage ``t``.

        FixedAction kernels range over messages only; the other variants range
        over (messages, designer action) with the action last.
        """
        sp = self.spaces[t]
        n = int(np.prod(sp.messages))
        if self.variant is Variant.FIXED_ACTION:
            return n
        return n * sp.actions[0]

    def decode_outputs(self, t: int) -> tuple[np.ndarray, np.ndarray | None]:
        """Per-output message tuples ``(D, K)`` and designer actions ``(D,)`` (None for FixedAction)."""
        sp = self.spaces[t]
        if self.variant is Variant.FIXED_ACTION:
            idx = np.unravel_index(np.arange(self.designer_outputs(t)), sp.messages)
            return np.stack(idx, axis=1), None
        idx = np.unravel_index(np.arange(self.designer_outputs(t)), (*sp.messages, sp.actions[0]))
        return np.stack(idx[:-1], axis=1), idx[-1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProblemSpec):
            return NotImplemented
        return to_dict(self) == to_dict(other)

    __hash__ = None  # type: ignore[assignment]


# ---------------------------------------------------------------------------
# Validation


def _check_dist(diags, name, index, vec, tol=PROB_TOL):
    vec = np.asarray(vec, dtype=float)
    if not np.all(np.isfinite(vec)):
        diags.append(Diagnostic(name, index, "non-finite probability"))
        return
    if np.any(vec < 0):
        diags.append(Diagnostic(name, index, f"negative probability {vec.min():.3g}"))
    s = float(vec.sum())
    if abs(s - 1.0) > tol:
        diags.append(Diagnostic(name, index, f"probabilities sum to {s!r}, not 1"))


def _check_table(diags, name, arr, shape, upper, integer=True):
    arr = np.asarray(arr)
    if arr.shape != tuple(shape):
        diags.append(Diagnostic(name, (), f"shape {arr.shape} does not match declared domain {tuple(shape)}"))
        return False
    if integer:
        if arr.size and (arr.min() < 0 or arr.max() >= upper):
            bad = np.argwhere((arr < 0) | (arr >= upper))[0]
            diags.append(Diagnostic(name, tuple(int(v) for v in bad),
                                    f"index {int(arr[tuple(bad)])} outside range 0..{upper - 1}"))
    elif not np.all(np.isfinite(arr)):
        diags.append(Diagnostic(name, (), "non-finite entries"))
    return True


def _check_keyed(diags, name, km: KeyedMap, shape, upper):
    if km.keyed_by not in ("belief", "node"):
        diags.append(Diagnostic(name, (), f"keyed_by must be 'belief' or 'node', got {km.keyed_by!r}"))
    _check_table(diags, name, km.table, shape, upper)
    for key, tab in km.overrides.items():
        _check_table(diags, f"{name}.overrides[{key}]", tab, shape, upper)


def validate_spec(spec: ProblemSpec) -> list[Diagnostic]:
    """Return every invariant violation found in ``spec`` (empty when valid)."""
    d: list[Diagnostic] = []
    T, K = spec.horizon, spec.num_agents
    if T < 1:
        d.append(Diagnostic("horizon", (), "must be >= 1"))
        return d
    if K < 1:
        d.append(Diagnostic("num_agents", (), "must be >= 1"))
        return d

    variant = spec.variant
    if variant is Variant.FIXED_ACTION:
        if K != 1:
            d.append(Diagnostic("variant", (), f"FixedAction requires exactly one agent, got {K}"))
        if spec.h0 is None:
            d.append(Diagnostic("h0", (), "FixedAction requires a designer action strategy"))
    elif variant is Variant.JOINT_MESSAGE_ACTION:
        if K != 1:
            d.append(Diagnostic("variant", (), f"JointMessageAction requires exactly one agent, got {K}"))
        if spec.h0 is not None:
            d.append(Diagnostic("h0", (), "JointMessageAction optimizes the designer action; h0 must be absent"))
    elif variant is Variant.MULTI_AGENT:
        if K < 2:
            d.append(Diagnostic("variant", (), f"MultiAgent requires at least two agents, got {K}"))
        if spec.h0 is not None:
            d.append(Diagnostic("h0", (), "MultiAgent optimizes the designer action; h0 must be absent"))

    if len(spec.spaces) != T:
        d.append(Diagnostic("spaces", (), f"{len(spec.spaces)} stages declared for horizon {T}"))
        return d
    for t, sp in enumerate(spec.spaces):
        if len(sp.actions) != K + 1 or len(sp.private) != K + 1 or len(sp.messages) != K:
            d.append(Diagnostic("spaces", (t,), "per-player space lists have the wrong length"))
            return d
        sizes = [sp.state, sp.noise, *sp.actions, *sp.messages, *sp.private]
        if t > 0:
            sizes.append(sp.increment)
        if min(sizes) < 1:
            d.append(Diagnostic("spaces", (t,), "every space must have size >= 1"))
            return d
    if spec.c1_size < 1:
        d.append(Diagnostic("initial.c1_size", (), "must be >= 1"))
        return d

    if len(spec.noise) != T:
        d.append(Diagnostic("noise", (), f"expected {T} distributions"))
    else:
        for t, q in enumerate(spec.noise):
            if np.shape(q) != (spec.spaces[t].noise,):
                d.append(Diagnostic(f"Q_{t + 1}", (), f"length {np.size(q)} != |N_{t + 1}| = {spec.spaces[t].noise}"))
            else:
                _check_dist(d, f"Q_{t + 1}", (), q)

    sp0 = spec.spaces[0]
    if np.shape(spec.p_x1) != (sp0.state,):
        d.append(Diagnostic("initial.p_x1", (), f"length {np.size(spec.p_x1)} != |X_1| = {sp0.state}"))
    else:
        _check_dist(d, "initial.p_x1", (), spec.p_x1)

    lam_shape = (sp0.state, sp0.noise, *sp0.private, spec.c1_size)
    lam = np.asarray(spec.lam, dtype=float)
    if lam.shape != lam_shape:
        d.append(Diagnostic("initial.lambda", (), f"shape {lam.shape} does not match {lam_shape}"))
    else:
        rows = lam.reshape(sp0.state * sp0.noise, -1)
        for r, row in enumerate(rows):
            _check_dist(d, "initial.lambda", tuple(int(v) for v in np.unravel_index(r, lam_shape[:2])), row)
        if sp0.noise > 1 and not np.allclose(lam, lam[:, :1], atol=PROB_TOL, rtol=0):
            d.append(Diagnostic("initial.lambda", (), "initial information must not depend on the stage-1 noise"))

    expect = lambda what: (T - 1) if what != "rewards" else T  # noqa: E731
    for name, seq in (("dynamics", spec.dynamics), ("zeta", spec.zeta), ("xi", spec.xi), ("rewards", spec.rewards)):
        if len(seq) != expect(name):
            d.append(Diagnostic(name, (), f"expected {expect(name)} stages, got {len(seq)}"))
            return d

    for t in range(T - 1):
        sp, nx = spec.spaces[t], spec.spaces[t + 1]
        _check_table(d, f"dynamics[{t}]", spec.dynamics[t], (sp.state, *sp.actions, sp.noise), nx.state)
        _check_table(d, f"zeta[{t}]", spec.zeta[t], (sp.state, *sp.private, *sp.actions, sp.noise), nx.increment)
        if len(spec.xi[t]) != K + 1:
            d.append(Diagnostic(f"xi[{t}]", (), f"expected {K + 1} players"))
            continue
        for i in range(K + 1):
            _check_table(d, f"xi[{t}][{i}]", spec.xi[t][i],
                         (sp.state, sp.private[i], *sp.actions, sp.noise), nx.private[i])

    for t in range(T):
        sp = spec.spaces[t]
        if len(spec.rewards[t]) != K + 1:
            d.append(Diagnostic(f"rewards[{t}]", (), f"expected {K + 1} players"))
            continue
        for i in range(K + 1):
            _check_table(d, f"rewards[{t}][{i}]", np.asarray(spec.rewards[t][i], dtype=float),
                         (sp.state, *sp.actions), 0, integer=False)

    if len(spec.targets) != K:
        d.append(Diagnostic("targets", (), f"expected {K} agents"))
    else:
        for i, per_t in enumerate(spec.targets):
            if len(per_t) != T:
                d.append(Diagnostic("targets", (i,), f"expected {T} stages"))
                continue
            for t, km in enumerate(per_t):
                sp = spec.spaces[t]
                _check_keyed(d, f"h{i + 1}_{t + 1}", km, (sp.messages[i], sp.private[i + 1]), sp.actions[i + 1])

    if spec.h0 is not None:
        if len(spec.h0) != T:
            d.append(Diagnostic("h0", (), f"expected {T} stages"))
        else:
            for t, km in enumerate(spec.h0):
                sp = spec.spaces[t]
                _check_keyed(d, f"h0_{t + 1}", km, (sp.private[0],), sp.actions[0])
    return d


# ---------------------------------------------------------------------------
# Serialization


def _keyed_to_dict(km: KeyedMap) -> dict:
    out: dict[str, Any] = {"keyed_by": km.keyed_by, "table": np.asarray(km.table).ravel().tolist()}
    if km.overrides:
        out["overrides"] = {k: np.asarray(v).ravel().tolist() for k, v in sorted(km.overrides.items())}
    return out


def to_dict(spec: ProblemSpec) -> dict:
    """Serialize to the JSON document layout."""
    T, K = spec.horizon, spec.num_agents
    sps = spec.spaces
    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "horizon": T,
        "num_agents": K,
        "variant": spec.variant.value,
        "spaces": {
            "state": [s.state for s in sps],
            "noise": [s.noise for s in sps],
            "actions": [[s.actions[i] for s in sps] for i in range(K + 1)],
            "messages": [[s.messages[i] for s in sps] for i in range(K)],
            "private": [[s.private[i] for s in sps] for i in range(K + 1)],
            "increments": [s.increment for s in sps[1:]],
        },
        "initial": {
            "p_x1": np.asarray(spec.p_x1, dtype=float).tolist(),
            "lambda": np.asarray(spec.lam, dtype=float).ravel().tolist(),
            "c1_size": spec.c1_size,
        },
        "noise": [np.asarray(q, dtype=float).tolist() for q in spec.noise],
        "dynamics": [np.asarray(a).ravel().tolist() for a in spec.dynamics],
        "xi": [[np.asarray(spec.xi[t][i]).ravel().tolist() for t in range(T - 1)] for i in range(K + 1)],
        "zeta": [np.asarray(a).ravel().tolist() for a in spec.zeta],
        "rewards": [[np.asarray(spec.rewards[t][i], dtype=float).ravel().tolist() for t in range(T)]
                    for i in range(K + 1)],
        "targets": [[_keyed_to_dict(km) for km in per_t] for per_t in spec.targets],
    }
    if any(s.state_names for s in sps):
        doc["names"] = {"state": [list(s.state_names) if s.state_names else None for s in sps]}
    if spec.h0 is not None:
        doc["h0"] = [_keyed_to_dict(km) for km in spec.h0]
    return doc


def save_problem(spec: ProblemSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(spec)) + "\n")


def _need(doc: Mapping, key: str, where: str = "") -> Any:
    if not isinstance(doc, Mapping) or key not in doc:
        raise ParseError(f"missing field {where + key!r}")
    return doc[key]


def _reshape(name, flat, shape, dtype):
    arr = np.asarray(flat, dtype=dtype)
    if arr.ndim != 1:
        raise ParseError(f"{name}: expected a flat array")
    if arr.size != int(np.prod(shape)):
        raise ValidationError([Diagnostic(name, (), f"{arr.size} entries, declared domain {tuple(shape)} "
                                                    f"needs {int(np.prod(shape))}")])
    return arr.reshape(shape)


def _int_array(name, flat, shape):
    arr = np.asarray(flat)
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise ParseError(f"{name}: deterministic maps must be integer arrays")
    return _reshape(name, arr, shape, np.int64)


def _keyed_from_dict(name, doc, shape) -> KeyedMap:
    table = _int_array(name, _need(doc, "table", name + "."), shape)
    overrides = {str(k): _int_array(f"{name}.overrides[{k}]", v, shape)
                 for k, v in doc.get("overrides", {}).items()}
    return KeyedMap(table=table, keyed_by=doc.get("keyed_by", "belief"), overrides=overrides)


def from_dict(doc: Mapping) -> ProblemSpec:
    """Parse a JSON document into a spec (shape-checked, not yet validated)."""
    if not isinstance(doc, Mapping):
        raise ParseError("problem document must be a JSON object")
    if str(_need(doc, "format_version")) != FORMAT_VERSION:
        raise ParseError(f"unsupported format_version {doc['format_version']!r}")
    try:
        T = int(_need(doc, "horizon"))
        K = int(_need(doc, "num_agents"))
        variant = Variant(_need(doc, "variant"))
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from exc
    if T < 1 or K < 1:
        raise ValidationError([Diagnostic("horizon" if T < 1 else "num_agents", (), "must be >= 1")])

    s = _need(doc, "spaces")
    try:
        state, noise = list(_need(s, "state", "spaces.")), list(_need(s, "noise", "spaces."))
        actions, messages = _need(s, "actions", "spaces."), _need(s, "messages", "spaces.")
        private, increments = _need(s, "private", "spaces."), _need(s, "increments", "spaces.")
        ini = _need(doc, "initial")
        c1 = int(_need(ini, "c1_size", "initial."))
        names = doc.get("names", {}).get("state") or [None] * T
        if (len(state) != T or len(noise) != T or len(actions) != K + 1 or len(messages) != K
                or len(private) != K + 1 or len(increments) != T - 1 or len(names) != T
                or any(len(a) != T for a in [*actions, *messages, *private])):
            raise ValidationError([Diagnostic("spaces", (), "per-time size arrays do not match horizon/num_agents")])
        spaces = tuple(
            TimeSpaces(
                state=int(state[t]), noise=int(noise[t]),
                actions=tuple(int(actions[i][t]) for i in range(K + 1)),
                messages=tuple(int(messages[i][t]) for i in range(K)),
                private=tuple(int(private[i][t]) for i in range(K + 1)),
                increment=c1 if t == 0 else int(increments[t - 1]),
                state_names=tuple(str(n) for n in names[t]) if names[t] else None,
            )
            for t in range(T)
        )
    except (TypeError, KeyError) as exc:
        raise ParseError(f"malformed spaces: {exc}") from exc
    if any(min(sp.state, sp.noise, *sp.actions, *sp.messages, *sp.private, sp.increment) < 1 for sp in spaces):
        raise ValidationError([Diagnostic("spaces", (), "every space must have size >= 1")])

    sp0 = spaces[0]
    noise_d = _need(doc, "noise")
    if len(noise_d) != T:
        raise ValidationError([Diagnostic("noise", (), f"expected {T} distributions")])
    q = tuple(np.asarray(v, dtype=float) for v in noise_d)
    p_x1 = np.asarray(_need(ini, "p_x1", "initial."), dtype=float)
    lam = _reshape("initial.lambda", _need(ini, "lambda", "initial."),
                   (sp0.state, sp0.noise, *sp0.private, c1), float)

    def per_t(key, n):
        seq = _need(doc, key)
        if len(seq) != n:
            raise ValidationError([Diagnostic(key, (), f"expected {n} stages, got {len(seq)}")])
        return seq

    dyn_d, zeta_d = per_t("dynamics", T - 1), per_t("zeta", T - 1)
    xi_d, rew_d = _need(doc, "xi"), _need(doc, "rewards")
    if len(xi_d) != K + 1 or len(rew_d) != K + 1:
        raise ValidationError([Diagnostic("xi" if len(xi_d) != K + 1 else "rewards", (), f"expected {K + 1} players")])
    dynamics, zeta, xi, rewards = [], [], [], []
    for t in range(T - 1):
        sp = spaces[t]
        dynamics.append(_int_array(f"dynamics[{t}]", dyn_d[t], (sp.state, *sp.actions, sp.noise)))
        zeta.append(_int_array(f"zeta[{t}]", zeta_d[t], (sp.state, *sp.private, *sp.actions, sp.noise)))
        xi.append(tuple(_int_array(f"xi[{i}][{t}]", xi_d[i][t], (sp.state, sp.private[i], *sp.actions, sp.noise))
                        for i in range(K + 1)))
    for t in range(T):
        sp = spaces[t]
        rewards.append(tuple(_reshape(f"rewards[{i}][{t}]", rew_d[i][t], (sp.state, *sp.actions), float)
                             for i in range(K + 1)))

    tg = _need(doc, "targets")
    if len(tg) != K or any(len(a) != T for a in tg):
        raise ValidationError([Diagnostic("targets", (), f"expected {K} agents x {T} stages")])
    targets = tuple(
        tuple(_keyed_from_dict(f"h{i + 1}_{t + 1}", tg[i][t], (spaces[t].messages[i], spaces[t].private[i + 1]))
              for t in range(T))
        for i in range(K)
    )
    h0 = None
    if doc.get("h0") is not None:
        if len(doc["h0"]) != T:
            raise ValidationError([Diagnostic("h0", (), f"expected {T} stages")])
        h0 = tuple(_keyed_from_dict(f"h0_{t + 1}", doc["h0"][t], (spaces[t].private[0],)) for t in range(T))

    return ProblemSpec(
        horizon=T, num_agents=K, variant=variant, spaces=spaces, noise=q, p_x1=p_x1, lam=lam,
        c1_size=c1, dynamics=tuple(dynamics), xi=tuple(xi), zeta=tuple(zeta), rewards=tuple(rewards),
        targets=targets, h0=h0,
    )


def parse_problem(doc: Mapping) -> ProblemSpec:
    spec = from_dict(doc)
    diags = validate_spec(spec)
    if diags:
        raise ValidationError(diags)
    return spec


def load_problem(path: str | Path) -> ProblemSpec:
    """Read and validate a problem file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_problem(doc)


# ---------------------------------------------------------------------------
# Building tables from formulas


def tabulate(shape: Sequence[int], fn: Callable[..., Any], dtype=np.int64) -> np.ndarray:
    """Evaluate ``fn(*index)`` over every index of ``shape``."""
    out = np.empty(tuple(shape), dtype=dtype)
    for idx in itertools.product(*(range(n) for n in shape)):
        out[idx] = fn(*idx)
    return out


def from_functions(
    *,
    horizon: int,
    num_agents: int,
    variant: Variant | str,
    spaces: Sequence[TimeSpaces],
    noise: Sequence[Sequence[float]],
    p_x1: Sequence[float],
    lam: Callable[[int, int, tuple, int], float],
    c1_size: int,
    dynamics: Callable[[int, int, tuple, int], int],
    xi: Callable[[int, int, int, int, tuple, int], int],
    zeta: Callable[[int, int, tuple, tuple, int], int],
    reward: Callable[[int, int, int, tuple], float],
    target: Callable[[int, int, int, int], int],
    target_keyed_by: str = "belief",
    h0: Callable[[int, int], int] | None = None,
) -> ProblemSpec:
    """Expand formula-style model callbacks into the tabular representation.

    Callback signatures (``u`` is the full action tuple ``(u0, ..., uK)``,
    ``p`` the tuple ``(p0, ..., pK)``):

    * ``lam(x, n, p, c1)`` probability, ``dynamics(t, x, u, n)`` next state,
    * ``xi(t, i, x, p_i, u, n)`` next private value of player ``i``,
    * ``zeta(t, x, p, u, n)`` increment index, ``reward(t, i, x, u)``,
    * ``target(t, i, m, p_i)`` for agents ``i = 1..K``, ``h0(t, p0)``.
    """
    variant = Variant(variant)
    T, K = horizon, num_agents
    sps = tuple(spaces)
    nact = K + 1

    def split_u(idx):
        return idx[:nact]

    dyn, zt, xis, rews = [], [], [], []
    for t in range(T - 1):
        sp = sps[t]
        dyn.append(tabulate((sp.state, *sp.actions, sp.noise),
                            lambda x, *r: dynamics(t, x, tuple(r[:nact]), r[nact])))
        zt.append(tabulate((sp.state, *sp.private, *sp.actions, sp.noise),
                           lambda x, *r: zeta(t, x, tuple(r[:nact]), tuple(r[nact:2 * nact]), r[2 * nact])))
        xis.append(tuple(
            tabulate((sp.state, sp.private[i], *sp.actions, sp.noise),
                     lambda x, pi, *r, i=i: xi(t, i, x, pi, split_u(r), r[nact]))
            for i in range(K + 1)))
    for t in range(T):
        sp = sps[t]
        rews.append(tuple(
            tabulate((sp.state, *sp.actions), lambda x, *u, i=i: reward(t, i, x, tuple(u)), dtype=float)
            for i in range(K + 1)))
    sp0 = sps[0]
    lam_t = tabulate((sp0.state, sp0.noise, *sp0.private, c1_size),
                     lambda x, n, *r: lam(x, n, tuple(r[:nact]), r[nact]), dtype=float)
    targets = tuple(
        tuple(KeyedMap(tabulate((sps[t].messages[i - 1], sps[t].private[i]),
                                lambda m, p, i=i, t=t: target(t, i, m, p)), keyed_by=target_keyed_by)
              for t in range(T))
        for i in range(1, K + 1))
    h0_maps = None
    if h0 is not None:
        h0_maps = tuple(KeyedMap(tabulate((sps[t].private[0],), lambda p, t=t: h0(t, p)), keyed_by=target_keyed_by)
                        for t in range(T))
    return ProblemSpec(
        horizon=T, num_agents=K, variant=variant, spaces=sps,
        noise=tuple(np.asarray(q, dtype=float) for q in noise), p_x1=np.asarray(p_x1, dtype=float),
        lam=lam_t, c1_size=c1_size, dynamics=tuple(dyn), xi=tuple(xis), zeta=tuple(zt),
        rewards=tuple(rews), targets=targets, h0=h0_maps,
    )
