import numpy as np
import pytest

from rtopf.profiles import (ProfileError, ProfileGenConfig, SLOTS_PER_DAY,
                            UPDATES_PER_DAY, UPDATES_PER_SLOT,
                            gen_actual_wind, gen_day_profiles, gen_demand,
                            gen_wind_forecast, load_profiles, save_profiles,
                            validate_profiles)

from conftest import chain_net

SHAPE = [0.6 + 0.01 * h for h in range(24)]
BASE = [5.0 + 0.1 * h for h in range(24)]


def small_net(stations=(3,)):
    return chain_net(4, station_buses=stations,
                     demand={2: (4.0, 1.5)})


def test_counts_are_consistent():
    assert SLOTS_PER_DAY == 720
    assert UPDATES_PER_DAY == 4320
    assert SLOTS_PER_DAY * UPDATES_PER_SLOT == UPDATES_PER_DAY


def test_same_seed_reproduces_everything():
    net = small_net()
    cfg = ProfileGenConfig(seed=11)
    a = gen_day_profiles(net, SHAPE, BASE, cfg)
    b = gen_day_profiles(net, SHAPE, BASE, cfg)
    for series in ("demand_p", "demand_q", "wind_forecast", "wind_actual"):
        for bus in getattr(a, series):
            assert np.array_equal(getattr(a, series)[bus],
                                  getattr(b, series)[bus])


def test_different_seeds_differ():
    net = small_net()
    a = gen_day_profiles(net, SHAPE, BASE, ProfileGenConfig(seed=1))
    b = gen_day_profiles(net, SHAPE, BASE, ProfileGenConfig(seed=2))
    assert not np.array_equal(a.wind_forecast[3], b.wind_forecast[3])
    assert not np.array_equal(a.demand_p[2], b.demand_p[2])


def test_adding_a_station_does_not_perturb_existing_streams():
    # streams are keyed by bus id, so the shared station's series match
    one = gen_day_profiles(small_net((3,)), SHAPE, BASE,
                           ProfileGenConfig(seed=5))
    two = gen_day_profiles(small_net((3, 4)), SHAPE, BASE,
                           ProfileGenConfig(seed=5))
    assert np.array_equal(one.wind_forecast[3], two.wind_forecast[3])
    assert np.array_equal(one.wind_actual[3], two.wind_actual[3])
    assert np.array_equal(one.demand_p[2], two.demand_p[2])


def test_noise_free_demand_is_exactly_shape_times_peak():
    cfg = ProfileGenConfig(sigma_d=0.0, seed=0)
    dp, dq = gen_demand(SHAPE, {2: 4.0}, {2: 1.5}, cfg)
    hourly = np.repeat(np.asarray(SHAPE), SLOTS_PER_DAY // 24)
    assert np.array_equal(dp[2], hourly * 4.0)
    assert np.array_equal(dq[2], hourly * 1.5)


def test_demand_noise_magnitude():
    cfg = ProfileGenConfig(seed=9)
    dp, _ = gen_demand([1.0] * 24, {2: 1.0}, {2: 0.0}, cfg)
    rel = dp[2] - 1.0
    assert abs(float(np.std(rel)) - cfg.sigma_d) < 0.3 * cfg.sigma_d
    assert abs(float(np.mean(rel))) < 3 * cfg.sigma_d / np.sqrt(SLOTS_PER_DAY)


def test_forecast_hourly_band_containment():
    # with no per-slot noise, each hour's forecast stays in the uniform band
    net = small_net()
    cfg = ProfileGenConfig(sigma_w=0.0, seed=4)
    fc = gen_wind_forecast(BASE, net, cfg)[3]
    per_hour = fc.reshape(24, SLOTS_PER_DAY // 24)
    for h in range(24):
        assert np.all(per_hour[h] == per_hour[h][0])
        ratio = per_hour[h][0] / BASE[h]
        assert 1 - cfg.hourly_band - 1e-12 <= ratio \
            <= 1 + cfg.hourly_band + 1e-12


def test_actual_wind_band_around_forecast():
    net = small_net()
    prof = gen_day_profiles(net, SHAPE, BASE, ProfileGenConfig(seed=3))
    parent = np.repeat(prof.wind_forecast[3], UPDATES_PER_SLOT)
    mask = parent > 0
    ratio = prof.wind_actual[3][mask] / parent[mask]
    assert np.all(ratio >= 1 - 0.15 - 1e-12)
    # clamping at rated power can only reduce values
    assert np.all(ratio <= 1 + 0.15 + 1e-12)
    assert np.all(prof.wind_actual[3] <= 10.0 + 1e-9)


def test_forecast_clamped_to_rated():
    net = small_net()
    fc = gen_wind_forecast([9.9] * 24, net, ProfileGenConfig(seed=8))[3]
    assert np.all(fc <= 10.0)
    assert np.all(fc >= 0.0)


def test_round_trip(tmp_path):
    net = small_net()
    prof = gen_day_profiles(net, SHAPE, BASE, ProfileGenConfig(seed=6))
    path = tmp_path / "day.json"
    save_profiles(prof, path)
    again = load_profiles(path, net)
    for series in ("demand_p", "demand_q", "wind_forecast", "wind_actual"):
        for bus in getattr(prof, series):
            assert np.array_equal(getattr(prof, series)[bus],
                                  getattr(again, series)[bus])
    assert again.meta["seed"] == 6


def test_shape_errors():
    net = small_net()
    cfg = ProfileGenConfig()
    with pytest.raises(ProfileError, match="24"):
        gen_demand([1.0] * 23, {2: 1.0}, {2: 0.0}, cfg)
    with pytest.raises(ProfileError, match=r"\[0, 1\]"):
        gen_demand([2.0] * 24, {2: 1.0}, {2: 0.0}, cfg)
    with pytest.raises(ProfileError, match="24"):
        gen_wind_forecast([5.0] * 10, net, cfg)
    with pytest.raises(ProfileError, match="rated"):
        gen_wind_forecast([50.0] * 24, net, cfg)
    with pytest.raises(ProfileError, match="negative"):
        gen_demand(SHAPE, {2: -1.0}, {2: 0.0}, cfg)
    with pytest.raises(ValueError):
        ProfileGenConfig(sigma_d=-0.1)


def test_validate_profiles_catches_corruption():
    net = small_net()
    prof = gen_day_profiles(net, SHAPE, BASE, ProfileGenConfig(seed=2))
    bad = type(prof)(demand_p=prof.demand_p, demand_q=prof.demand_q,
                     wind_forecast={3: prof.wind_forecast[3][:100]},
                     wind_actual=prof.wind_actual)
    with pytest.raises(ProfileError, match="expected 720"):
        validate_profiles(bad)
    wrong_bus = type(prof)(demand_p=prof.demand_p, demand_q=prof.demand_q,
                           wind_forecast={9: prof.wind_forecast[3]},
                           wind_actual=prof.wind_actual)
    with pytest.raises(ProfileError, match="station buses"):
        validate_profiles(wrong_bus, net)


def test_load_rejects_malformed_bundle(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"demand_p": {"2": [1, 2, 3]}}')
    with pytest.raises(ProfileError, match="expected 720"):
        load_profiles(path)
    path.write_text('{"unexpected": 1}')
    with pytest.raises(ProfileError, match="unknown section"):
        load_profiles(path)
    path.write_text("[]")
    with pytest.raises(ProfileError, match="JSON object"):
        load_profiles(path)
