from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from clinching.auction import Outcome, Scenario, clinch_amounts, run
from clinching.cli import example1_scenario
from clinching.errors import GridMisalignmentError
from clinching.payment import Agent
from clinching.polymatroid import SubmodularFunction, greedy_max
from clinching.verification import (
    FAIL, PASS, basic_checks, brute_force_clinch, grid_for, ic_grid_check, misreport_grid,
    multi_unit_partition, pareto_check, truncated_values, vcg_baseline, verify_scenario,
)

from conftest import functions, vectors


def test_vcg_on_example():
    s = example1_scenario()
    assert truncated_values(s.agents) == (1, 2)
    out = vcg_baseline(s.f, s.agents)
    assert out.x == (1, 2) and out.payments == (0, 1)


def test_vcg_is_refuted():
    s = example1_scenario()
    res = pareto_check(s.f, s.agents, vcg_baseline(s.f, s.agents))
    assert not res.efficient
    assert (res.optimum, res.welfare) == (18, 14)
    imp = res.improvement
    assert imp.welfare_gain > 0
    # the certificate must satisfy the definitions on its own
    checks = basic_checks(s.f, s.agents, Outcome(imp.x, imp.payments))
    assert all(c.status == PASS for c in checks)


def test_clinching_outcome_is_efficient():
    s = example1_scenario()
    out, _ = run(s)
    assert pareto_check(s.f, s.agents, out).efficient


def test_basic_checks_on_zero_outcome():
    s = example1_scenario()
    zero = Outcome((F(0), F(0)), (F(0), F(0)))
    plain = {c.name: c.status for c in basic_checks(s.f, s.agents, zero)}
    assert set(plain.values()) == {PASS}
    flagged = {c.name: c.status for c in basic_checks(s.f, s.agents, zero, clinching=True)}
    assert flagged["all_goods_sold"] == FAIL


def test_basic_checks_catch_violations():
    s = example1_scenario()
    bad = Outcome((F(3), F(1)), (F(5), F(0)))
    status = {c.name: c.status for c in basic_checks(s.f, s.agents, bad)}
    assert status["feasible"] == FAIL
    assert status["admissible"] == FAIL


def test_ic_on_two_agent_example():
    f = SubmodularFunction.multi_unit(2, 1)
    s = Scenario(f, (Agent.make(3, [(0, 100)]), Agent.make(2, [(0, 100)])), F(1))
    assert misreport_grid(s) == [F(k) for k in range(5)]
    for i in range(2):
        assert ic_grid_check(s, i).ok


def test_ic_detects_a_manipulable_rule():
    # pretend truth-telling left agent 0 empty-handed; reporting 3 then pays off
    f = SubmodularFunction.multi_unit(2, 1)
    s = Scenario(f, (Agent.make(3, [(0, 100)]), Agent.make(2, [(0, 100)])), F(1))
    rigged = Outcome((F(0), F(1)), (F(0), F(0)))
    res = ic_grid_check(s, 0, truthful=rigged)
    assert not res.ok and res.gain > 0


def test_oracle_example():
    f = SubmodularFunction.sponsored_search([2, 1])
    got = brute_force_clinch(f, (0, 0), (2, 1), F(1, 4))
    assert got == clinch_amounts(f, (0, 0), (2, 1))


def test_oracle_grid_guard():
    f = SubmodularFunction.multi_unit(2, 1)
    with pytest.raises(GridMisalignmentError):
        brute_force_clinch(f, (0, 0), (F(1, 3), 0), F(1, 2))


@given(functions(n_max=3), st.data())
def test_oracle_agrees_with_formula(f, data):
    x = greedy_max(f, data.draw(vectors(f.n)), data.draw(st.permutations(range(f.n))))
    x = tuple(v / 2 for v in x)
    d = data.draw(vectors(f.n))
    step = grid_for(f, x, d)
    assert brute_force_clinch(f, x, d, step) == clinch_amounts(f, x, d)


def test_verify_scenario_passes_on_example():
    rep = verify_scenario(example1_scenario())
    assert rep.ok, [c for c in rep.failures()]
    names = {c.name for c in rep.checks}
    assert {"pareto", "ic_agent_0", "clinch_oracle", "invariants", "tight_family"} <= names


def test_multi_unit_partition_shape():
    f = SubmodularFunction.multi_unit(3, 2)
    agents = (Agent.make(4, [(0, 4)]), Agent.make(3, [(0, 3)]), Agent.make(1, [(0, 1)]))
    s = Scenario(f, agents, F(1))
    _, tr = run(s)
    low, k, high = multi_unit_partition(tr)
    assert low | high | 1 << k == 0b111 and not low & high


@pytest.mark.parametrize("z", [F(1, 8), F(1, 4), F(1, 2)])
def test_published_improvement_family(z):
    # (1+z, 2-z) with payments (2z, 1-2z) improves on VCG for 0 < z <= 1/2
    from clinching.verification import _is_improvement
    s = example1_scenario()
    vcg = vcg_baseline(s.f, s.agents)
    assert _is_improvement(s.f, s.agents, vcg, (1 + z, 2 - z), (2 * z, 1 - 2 * z))


def test_lp_certificate_is_the_extreme_member():
    s = example1_scenario()
    imp = pareto_check(s.f, s.agents, vcg_baseline(s.f, s.agents)).improvement
    assert imp.x == (F(3, 2), F(3, 2)) and imp.payments == (1, 0)
