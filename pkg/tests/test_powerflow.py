import numpy as np
import pytest

from rtopf.powerflow import (InjectionSpec, NonConvergence, check_limits,
                             solve_power_flow)

from conftest import chain_net, random_radial_net
from oracles import gauss_seidel_power_flow


def injections(net, p_by_bus, q_by_bus=None):
    return InjectionSpec.from_mappings(net, p_by_bus, q_by_bus or {})


def test_no_load_flat_solution():
    net = chain_net(3)
    sol = solve_power_flow(net, injections(net, {}))
    assert np.allclose(sol.v, 1.0)
    assert np.allclose(sol.theta, 0.0)
    assert sol.p_s == pytest.approx(0.0, abs=1e-9)
    assert sol.iterations == 0


def test_two_bus_matches_gauss_seidel_oracle():
    net = chain_net(2, r=0.02, x=0.06)
    inj = injections(net, {2: -3.0}, {2: -1.0})
    sol = solve_power_flow(net, inj)
    v_gs, p_s_gs, q_s_gs = gauss_seidel_power_flow(net, inj)
    assert np.abs(sol.v - np.abs(v_gs)).max() < 1e-8
    assert np.abs(sol.theta - np.angle(v_gs)).max() < 1e-8
    assert sol.p_s == pytest.approx(p_s_gs, abs=1e-6)
    assert sol.q_s == pytest.approx(q_s_gs, abs=1e-6)


def test_randomized_cases_match_gauss_seidel_oracle():
    rng = np.random.default_rng(12)
    for _ in range(25):
        n = int(rng.integers(2, 7))
        net = random_radial_net(rng, n)
        p = {i: float(rng.uniform(-2.0, 0.5)) for i in range(2, n + 1)}
        q = {i: float(rng.uniform(-1.0, 0.2)) for i in range(2, n + 1)}
        inj = injections(net, p, q)
        sol = solve_power_flow(net, inj)
        v_gs, p_s_gs, q_s_gs = gauss_seidel_power_flow(net, inj)
        assert np.abs(sol.v - np.abs(v_gs)).max() < 1e-7
        assert np.abs(sol.theta - np.angle(v_gs)).max() < 1e-7
        assert abs(sol.p_s - p_s_gs) < 1e-5
        assert abs(sol.q_s - q_s_gs) < 1e-5


def test_balance_identity():
    rng = np.random.default_rng(3)
    for _ in range(10):
        net = random_radial_net(rng, 5)
        inj = injections(net, {i: float(rng.uniform(-2, 1))
                               for i in range(2, 6)})
        sol = solve_power_flow(net, inj)
        # p_loss = p_s + sum of specified injections, exactly by construction
        assert sol.p_loss == pytest.approx(
            sol.p_s + float(np.sum(inj.p_mw[1:])), abs=1e-12)
        # and losses are physically non-negative for these line parameters
        assert sol.p_loss >= -1e-8


def test_loss_matches_branch_i2r():
    net = chain_net(3, r=0.02, x=0.05)
    inj = injections(net, {2: -1.5, 3: -2.5}, {2: -0.5, 3: -0.8})
    sol = solve_power_flow(net, inj)
    vc = sol.v * np.exp(1j * sol.theta)
    loss = 0.0
    for br in net.branches:
        i = net.index_of(br.from_bus)
        j = net.index_of(br.to_bus)
        ys = 1.0 / complex(br.resistance, br.reactance)
        cur = (vc[i] - vc[j]) * ys
        loss += abs(cur) ** 2 * br.resistance
    assert sol.p_loss == pytest.approx(loss * net.base_mva, abs=1e-8)


def test_slack_entries_of_injection_spec_are_ignored():
    net = chain_net(3)
    inj1 = injections(net, {2: -1.0, 3: -0.5})
    p = inj1.p_mw.copy()
    p[0] = 1234.5
    sol1 = solve_power_flow(net, inj1)
    sol2 = solve_power_flow(net, InjectionSpec(p, inj1.q_mvar))
    assert sol1.p_s == pytest.approx(sol2.p_s, abs=1e-12)
    assert np.array_equal(sol1.v, sol2.v)


def test_warm_start_from_solution_needs_no_iterations():
    net = chain_net(4)
    inj = injections(net, {3: -2.0, 4: -1.0})
    cold = solve_power_flow(net, inj)
    warm = solve_power_flow(net, inj, start=(cold.v, cold.theta))
    assert warm.iterations == 0
    assert cold.iterations > 0


def test_nonconvergence_beyond_loadability():
    net = chain_net(2, r=0.05, x=0.1)
    with pytest.raises(NonConvergence):
        solve_power_flow(net, injections(net, {2: -1000.0}))


def test_input_validation():
    net = chain_net(2)
    inj = injections(net, {})
    with pytest.raises(ValueError):
        solve_power_flow(net, inj, tol=0.0)
    with pytest.raises(ValueError):
        solve_power_flow(net, inj, max_iter=0)


def test_flows_reported_per_branch():
    net = chain_net(3, r=0.01, x=0.02)
    sol = solve_power_flow(net, injections(net, {3: -4.0}))
    assert sol.flows.shape == (2,)
    # the branch nearer the slack carries at least the downstream one's load
    assert sol.flows[0] >= sol.flows[1] - 1e-9
    assert sol.flows[0] == pytest.approx(4.0, rel=0.05)


def test_check_limits_ok_at_modest_load(net41):
    inj = injections(net41, {22: -1.0, 41: -0.5}, {22: -0.4, 41: -0.2})
    report = check_limits(net41, solve_power_flow(net41, inj))
    assert report.ok
    assert not report.violations
    names = {c.name for c in report.checks}
    assert "slack_active_mw" in names
    assert "slack_apparent_mva" in names
    assert len([n for n in names if n.startswith("voltage_")]) == 40
    assert len([n for n in names if n.startswith("flow_")]) == 40


def test_check_limits_flags_reverse_power_flow():
    # generation without demand exports toward the upstream grid
    net = chain_net(3, station_buses=(3,))
    sol = solve_power_flow(net, injections(net, {3: 2.0}))
    assert sol.p_s < 0
    report = check_limits(net, sol)
    assert any(c.name == "slack_active_mw" and c.violated
               for c in report.checks)


def test_check_limits_flags_undervoltage():
    net = chain_net(2, r=0.05, x=0.1, v_min=0.99, v_max=1.01)
    sol = solve_power_flow(net, injections(net, {2: -3.0}))
    report = check_limits(net, sol)
    assert any(c.name == "voltage_bus_2" and c.violated
               for c in report.checks)
    bad = [c for c in report.violations if c.name == "voltage_bus_2"][0]
    assert bad.slack < 0


def test_check_limits_flags_branch_overload():
    net = chain_net(2, s_l_max=1.0)
    sol = solve_power_flow(net, injections(net, {2: -3.0}))
    report = check_limits(net, sol)
    assert any(c.name == "flow_1_2" and c.violated for c in report.checks)


def test_check_limits_tolerance_absorbs_tiny_violations():
    net = chain_net(3, station_buses=(3,))
    sol = solve_power_flow(net, injections(net, {2: -1.0, 3: 1.0}))
    # p_s is a hair above/below zero; a loose tolerance must not flag it
    report = check_limits(net, sol, tol=1.0)
    assert report.ok
