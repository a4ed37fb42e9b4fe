import pytest
from helpers import static_optimum

from infodesign.beliefs import check_assumption2
from infodesign.congestion import CongestionParams, congestion_rewards, generate_congestion
from infodesign.model import validate_spec
from infodesign.solver import backward_induct
from infodesign.verify import brute_force_cisr, cisr_check, evaluate_profile


def test_instance_validates_and_is_safe():
    spec = generate_congestion(CongestionParams(k=3, t=3))
    assert validate_spec(spec) == []
    assert check_assumption2(spec).passes


def test_rewards_by_hand():
    r = congestion_rewards(CongestionParams(k=2))
    # both on the risky route in state theta1: 1.2 - 2/2
    assert r[0, 0, 1, 1] == pytest.approx(0.2)
    # agent 0 safe, agent 1 risky in theta2: 1.5 - 1/2 and 2.8 - 1/2
    assert r[0, 1, 0, 1] == pytest.approx(1.0)
    assert r[1, 1, 0, 1] == pytest.approx(2.3)


def test_single_agent_gets_full_revelation():
    # with one agent the designer's and agent's rewards coincide: route 0 pays 0.5,
    # route 1 pays 0.2 or 1.8, so telling the truth earns 0.5 * 0.5 + 0.5 * 1.8
    sol = backward_induct(generate_congestion(CongestionParams(k=1, t=1)))
    assert sol.J0 == pytest.approx(1.15, abs=1e-12)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_one_day_matches_direct_assembly(k):
    spec = generate_congestion(CongestionParams(k=k, t=1, p1=0.4))
    status, value = static_optimum(spec)
    sol = backward_induct(spec)
    assert status == "Optimal" and sol.J0 == pytest.approx(value, abs=1e-8)


def test_value_below_full_information_welfare():
    for k in (2, 3, 5):
        params = CongestionParams(k=k, t=1)
        sol = backward_induct(generate_congestion(params))
        welfare = congestion_rewards(params).sum(axis=0).reshape(2, -1).max(axis=1)
        assert sol.J0 <= params.p1 * welfare[0] + (1 - params.p1) * welfare[1] + 1e-9


def test_three_agents_pass_exhaustive_check(small_congestion):
    spec, sol = small_congestion
    assert cisr_check(spec, sol).passes
    bf = brute_force_cisr(spec, sol)
    assert bf.passes
    ev = evaluate_profile(spec, sol)
    assert max(ev.identity_errors(sol)) <= 1e-8


def test_ten_agents_memoized(congestion_spec, congestion_solution):
    sol = congestion_solution
    assert sol.solved
    assert sol.stats.lps_solved == 3
    assert sol.stats.lps_per_level == [1, 2]
    assert cisr_check(congestion_spec, sol).passes
    assert sol.J0 == pytest.approx(27.05, abs=1e-6)


def test_memoization_preserves_value_small():
    spec = generate_congestion(CongestionParams(k=3, t=3))
    a = backward_induct(spec, memoize=True)
    b = backward_induct(spec, memoize=False)
    assert a.J0 == pytest.approx(b.J0, abs=1e-9)
    assert a.stats.lps_solved < b.stats.lps_solved


def test_rejects_bad_parameters():
    with pytest.raises(ValueError):
        CongestionParams(k=0)
    with pytest.raises(ValueError):
        CongestionParams(rho=1.5)
