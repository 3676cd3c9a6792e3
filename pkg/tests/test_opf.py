import numpy as np
import pytest

from rtopf.opf import (FAST_OPTS, HorizonInput, OPFOptions, STATUS_FAILURE,
                       STATUS_INFEASIBLE, STATUS_OPTIMAL, evaluate_objective,
                       oracle_opf, solve_opf)

from conftest import chain_net


def one_station_net(**kw):
    return chain_net(3, r=0.01, x=0.02, station_buses=(3,), **kw)


def make_input(net, demand_p, wind, price_p=1.67, price_q=0.4):
    q = {b: 0.37 * v for b, v in demand_p.items()}
    return HorizonInput(demand_p=demand_p, demand_q=q,
                        wind_available=wind, price_p=price_p, price_q=price_q)


def test_input_validation():
    net = one_station_net()
    with pytest.raises(ValueError, match="negative demand"):
        make_input(net, {2: -1.0}, {3: 1.0}).validated(net)
    with pytest.raises(ValueError, match="no wind station"):
        make_input(net, {2: 1.0}, {2: 1.0}).validated(net)
    with pytest.raises(ValueError, match="outside"):
        make_input(net, {2: 1.0}, {3: 99.0}).validated(net)
    with pytest.raises(ValueError, match="prices"):
        make_input(net, {2: 1.0}, {3: 1.0}, price_p=-1.0).validated(net)


def test_objective_decomposition_identity():
    net = one_station_net()
    inp = make_input(net, {2: 3.0}, {3: 2.0})
    bd = evaluate_objective(net, inp, [0.7])
    assert bd.f == pytest.approx(bd.f1 - bd.f2 - bd.f3 - bd.f4, abs=1e-12)
    assert bd.f1 == pytest.approx(1.67 * 0.7 * 2.0, abs=1e-12)
    assert bd.f2 == pytest.approx(1.67 * bd.power_flow.p_loss, abs=1e-12)
    assert bd.f3 == pytest.approx(1.67 * bd.power_flow.p_s, abs=1e-12)
    assert bd.f4 == pytest.approx(0.4 * bd.power_flow.q_s, abs=1e-12)


def test_evaluate_objective_rejects_beta_outside_box():
    net = one_station_net()
    inp = make_input(net, {2: 3.0}, {3: 2.0})
    with pytest.raises(ValueError):
        evaluate_objective(net, inp, [1.5])


def test_wind_below_demand_runs_uncurtailed():
    # every injected MW displaces an imported MW, so beta = 1 must win
    net = one_station_net()
    inp = make_input(net, {2: 5.0}, {3: 2.0})
    sol = solve_opf(net, inp)
    assert sol.status == STATUS_OPTIMAL
    assert sol.beta == (1.0,)
    assert sol.p_s > 0
    assert sol.report.ok


def test_zero_wind_is_degenerate_and_optimal():
    net = one_station_net()
    sol = solve_opf(net, make_input(net, {2: 2.0}, {3: 0.0}))
    assert sol.status == STATUS_OPTIMAL
    assert sol.beta == (1.0,)


def test_zero_prices_are_degenerate_and_optimal():
    net = one_station_net()
    sol = solve_opf(net, make_input(net, {2: 2.0}, {3: 1.0},
                                    price_p=0.0, price_q=0.0))
    assert sol.status == STATUS_OPTIMAL
    assert sol.beta == (1.0,)
    assert sol.f == pytest.approx(0.0, abs=1e-12)


def test_excess_wind_curtailed_to_reverse_flow_boundary():
    # wind above demand+losses must be spilled; the boundary p_s = 0 binds
    net = one_station_net()
    inp = make_input(net, {2: 3.0}, {3: 8.0})
    sol = solve_opf(net, inp)
    assert sol.status == STATUS_OPTIMAL
    assert 0.3 < sol.beta[0] < 0.5
    assert abs(sol.p_s) < 1e-5
    assert sol.report.ok


def test_solution_matches_oracle_one_station():
    net = one_station_net()
    for wind in (1.0, 4.0, 8.0):
        inp = make_input(net, {2: 3.0}, {3: wind})
        sol = solve_opf(net, inp)
        ora = oracle_opf(net, inp, grid_points=41)
        assert sol.status == ora.status == STATUS_OPTIMAL
        assert sol.f == pytest.approx(ora.f, abs=1e-3 * max(1.0, abs(ora.f)))


def test_solution_matches_oracle_two_stations(net41, horizon1):
    sol = solve_opf(net41, horizon1)
    ora = oracle_opf(net41, horizon1)
    assert sol.status == ora.status == STATUS_OPTIMAL
    assert sol.f >= ora.f - 1e-3 * max(1.0, abs(ora.f))
    assert abs(sol.f - ora.f) <= 1e-3 * max(1.0, abs(ora.f))
    assert sol.report.ok


def test_price_scaling_leaves_allocation_unchanged(net41, horizon1):
    sol1 = solve_opf(net41, horizon1, FAST_OPTS)
    scaled = HorizonInput(demand_p=horizon1.demand_p,
                          demand_q=horizon1.demand_q,
                          wind_available=horizon1.wind_available,
                          price_p=horizon1.price_p * 3.0,
                          price_q=horizon1.price_q * 3.0)
    sol2 = solve_opf(net41, scaled, FAST_OPTS)
    assert np.allclose(sol1.beta, sol2.beta, atol=5e-3)
    assert sol2.f == pytest.approx(3.0 * sol1.f, rel=1e-3)


def test_deterministic_repeat(net41, horizon1):
    a = solve_opf(net41, horizon1, FAST_OPTS)
    b = solve_opf(net41, horizon1, FAST_OPTS)
    assert a.beta == b.beta
    assert a.f == b.f


def test_more_wind_never_hurts():
    net = one_station_net()
    fs = []
    for wind in (0.5, 2.0, 5.0, 9.0):
        sol = solve_opf(net, make_input(net, {2: 3.0}, {3: wind}))
        assert sol.status == STATUS_OPTIMAL
        fs.append(sol.f)
    assert all(b >= a - 1e-6 for a, b in zip(fs, fs[1:]))


def test_infeasible_when_demand_exceeds_loadability():
    net = one_station_net()
    sol = solve_opf(net, make_input(net, {2: 900.0}, {3: 1.0}))
    assert sol.status == STATUS_INFEASIBLE
    assert np.isnan(sol.f)
    assert "grid" in sol.message or "zero wind" in sol.message


def test_infeasible_when_voltage_band_unreachable():
    net = one_station_net(v_min=1.02, v_max=1.05)
    sol = solve_opf(net, make_input(net, {2: 5.0}, {3: 0.5}))
    assert sol.status == STATUS_INFEASIBLE


def test_failure_status_when_budget_too_small():
    net = one_station_net()
    tiny = OPFOptions(max_evals=5, coarse_grid=2, pg_iters=0)
    sol = solve_opf(net, make_input(net, {2: 3.0}, {3: 8.0}), tiny)
    assert sol.status == STATUS_FAILURE
    assert "budget" in sol.message
    # the best point found so far is still reported
    assert np.isfinite(sol.f)


def test_no_station_network():
    net = chain_net(3)
    inp = HorizonInput(demand_p={2: 1.0}, demand_q={2: 0.3},
                       wind_available={}, price_p=1.67, price_q=0.4)
    sol = solve_opf(net, inp)
    assert sol.status == STATUS_OPTIMAL
    assert sol.beta == ()
    assert sol.p_s > 1.0


def test_oracle_rejects_bad_grid_and_many_stations(net41, horizon1):
    with pytest.raises(ValueError):
        oracle_opf(net41, horizon1, grid_points=1)
    many = chain_net(6, station_buses=(2, 3, 4, 5))
    inp = HorizonInput(demand_p={6: 1.0}, demand_q={6: 0.3},
                       wind_available={2: 1.0, 3: 1.0, 4: 1.0, 5: 1.0},
                       price_p=1.67, price_q=0.4)
    with pytest.raises(ValueError, match="tractable"):
        oracle_opf(many, inp)


def test_fast_options_track_default_options(net41, horizon1):
    fast = solve_opf(net41, horizon1, FAST_OPTS)
    full = solve_opf(net41, horizon1)
    assert fast.status == full.status == STATUS_OPTIMAL
    assert fast.f == pytest.approx(full.f, abs=1e-3 * max(1.0, abs(full.f)))
    assert fast.evals < full.evals
