from dataclasses import replace

import numpy as np
import pytest
from helpers import random_lp
from hypothesis import given
from hypothesis import strategies as st

from infodesign.beliefs import belief_key, canonical_belief
from infodesign.instances import random_problem
from infodesign.lp import LinearProgram, ToleranceConfig, check_feasible, solve_lp
from infodesign.model import Variant
from infodesign.solver import backward_induct
from infodesign.verify import cisr_check

seeds = st.integers(0, 2**32 - 1)
variants = st.sampled_from(list(Variant))


def instance(seed, variant, horizon=2):
    return random_problem(np.random.default_rng(seed), variant, horizon=horizon)


def map_rewards(spec, agent, fn):
    rewards = tuple(tuple(fn(r) if i == agent else r for i, r in enumerate(level)) for level in spec.rewards)
    return replace(spec, rewards=rewards)


@given(seed=seeds)
def test_lp_solution_is_feasible_and_certified(seed):
    lp = random_lp(np.random.default_rng(seed), max_n=8, max_m=10)
    sol = solve_lp(lp)
    if sol.optimal:
        assert check_feasible(lp, sol.x, 1e-7)[0]
        assert abs(sol.dual.gap) <= 1e-6
        assert sol.objective == pytest.approx(float(lp.c @ sol.x), abs=1e-9)


@given(seed=seeds, scale=st.floats(0.1, 10.0))
def test_lp_objective_scales(seed, scale):
    lp = random_lp(np.random.default_rng(seed), max_n=8, max_m=10)
    a = solve_lp(lp)
    b = solve_lp(LinearProgram(lp.c * scale, lp.A_eq, lp.b_eq, lp.A_ge, lp.b_ge, lp.lower, lp.upper))
    assert a.status is b.status
    if a.optimal:
        assert b.objective == pytest.approx(scale * a.objective, rel=1e-7, abs=1e-7)


@given(seed=seeds, variant=variants)
def test_kernels_are_distributions_and_obedient(seed, variant):
    spec = instance(seed, variant)
    sol = backward_induct(spec)
    if not sol.solved:
        return
    for level in sol.kernels:
        for g in level:
            assert np.all(g >= 0)
            np.testing.assert_allclose(g.sum(axis=1), 1.0, atol=1e-12)
    assert cisr_check(spec, sol, 1e-6).passes


@given(seed=seeds, variant=variants, shift=st.floats(-3.0, 3.0), scale=st.floats(0.25, 4.0))
def test_designer_value_is_affine_in_designer_rewards(seed, variant, shift, scale):
    spec = instance(seed, variant)
    base = backward_induct(spec)
    moved = backward_induct(map_rewards(spec, 0, lambda r: scale * r + shift))
    assert base.status == moved.status
    if base.solved:
        assert moved.J0 == pytest.approx(scale * base.J0 + shift * spec.horizon, abs=1e-7)


@given(seed=seeds, variant=variants, shift=st.floats(-3.0, 3.0), scale=st.floats(0.25, 4.0))
def test_agent_reward_affine_change_keeps_value(seed, variant, shift, scale):
    # best responses are unchanged under positive affine maps of an agent's reward
    spec = instance(seed, variant)
    base = backward_induct(spec)
    moved = backward_induct(map_rewards(spec, 1, lambda r: scale * r + shift))
    assert base.status == moved.status
    if base.solved:
        assert moved.J0 == pytest.approx(base.J0, abs=1e-7)


@given(seed=seeds, variant=variants)
def test_obedience_slack_only_helps(seed, variant):
    spec = instance(seed, variant, horizon=1)
    tight = backward_induct(spec)
    loose = backward_induct(spec, tol=ToleranceConfig(cisr=0.05))
    if tight.solved:
        assert loose.solved and loose.J0 >= tight.J0 - 1e-9


@given(seed=seeds, variant=variants)
def test_memoization_is_exact(seed, variant):
    spec = instance(seed, variant)
    a = backward_induct(spec, memoize=True)
    b = backward_induct(spec, memoize=False)
    assert a.status == b.status
    if a.solved:
        assert a.J0 == pytest.approx(b.J0, abs=1e-9)


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12).filter(lambda v: sum(v) > 0.1))
def test_canonical_belief_is_idempotent(values):
    b = np.array(values) / sum(values)
    c = canonical_belief(b)
    np.testing.assert_array_equal(canonical_belief(c), c)
    assert belief_key(c) == belief_key(b)
