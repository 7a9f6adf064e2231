import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgplan.errors import EmptyInputError, KTooLargeError
from mgplan.scenarios import (day_vectors, extract_triplet, kmeans, net_load_stress,
                              read_days_csv, write_days_csv)


def _two_value_year():
    a = np.linspace(0.1, 0.9, 24)
    b = a[::-1] * 0.5
    days = [a] * 200 + [b] * 165
    return a, b, np.array(days)


def _dv(load_days, wind_days=None):
    load = np.asarray(load_days).ravel()
    avail = {} if wind_days is None else {"wind": np.asarray(wind_days).ravel()}
    return day_vectors({"load": load}, avail)


def test_identical_days_single_cluster():
    day = np.linspace(0, 1, 24)
    res = kmeans(np.tile(day, (365, 1)), 1)
    assert np.allclose(res.centroids[0], day)
    assert res.weights.tolist() == [365]


def test_two_value_partition():
    a, b, x = _two_value_year()
    res = kmeans(x, 2, seed=3)
    got = {tuple(np.round(c, 12)): w for c, w in zip(res.centroids, res.weights)}
    assert got == {tuple(np.round(a, 12)): 200, tuple(np.round(b, 12)): 165}
    assert res.objective == 0.0


def test_k_too_large():
    x = np.random.default_rng(0).random((365, 24))
    with pytest.raises(KTooLargeError):
        kmeans(x, 366)
    with pytest.raises(KTooLargeError):
        kmeans(np.tile(x[0], (365, 1)), 2)


def test_empty_input():
    with pytest.raises(EmptyInputError):
        kmeans(np.zeros((0, 24)), 1)
    with pytest.raises(EmptyInputError):
        day_vectors({}, {})


def _check_lloyd(x, res):
    hist = np.array(res.history)
    assert np.all(np.diff(hist) <= 1e-9 * max(1.0, hist[0]))
    d2 = ((x[:, None, :] - res.centroids[None]) ** 2).sum(axis=2)
    assert np.array_equal(np.argmin(d2, axis=1), res.assignment)
    assert res.weights.sum() == len(x) and np.all(res.weights >= 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 12))
def test_lloyd_properties(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.random((60, 8)) ** 2
    res = kmeans(x, k, seed=seed)
    _check_lloyd(x, res)


def test_k_equal_distinct_gives_zero():
    rng = np.random.default_rng(1)
    base = rng.random((7, 24))
    x = base[rng.integers(0, 7, 365)]
    x[:7] = base
    res = kmeans(x, 7, seed=5)
    assert res.objective == 0.0


def test_deterministic():
    x = np.random.default_rng(2).random((365, 24))
    r1, r2 = kmeans(x, 5, seed=11), kmeans(x, 5, seed=11)
    assert np.array_equal(r1.assignment, r2.assignment)
    assert np.array_equal(r1.centroids, r2.centroids)


def test_tolerance_and_iteration_cap_stop_early():
    x = np.random.default_rng(4).random((365, 24))
    full = kmeans(x, 6, seed=0)
    capped = kmeans(x, 6, seed=0, max_iter=1)
    assert capped.iterations == 1 <= full.iterations
    assert capped.objective >= full.objective - 1e-12


def test_triplet_constant_profiles():
    dv = _dv(np.full((365, 24), 0.6), np.full((365, 24), 0.3))
    best, nominal, worst = extract_triplet(dv, 1)
    assert best[0].demand_profile == nominal[0].demand_profile == worst[0].demand_profile
    assert best[0].availability_profile == worst[0].availability_profile


def test_worst_day_has_no_wind():
    rng = np.random.default_rng(8)
    load = rng.uniform(0.3, 1.0, (365, 24))
    wind = rng.uniform(0.2, 1.0, (365, 24))
    wind[123] = 0.0
    load[123] = load.mean()
    best, nominal, worst = extract_triplet(_dv(load, wind), 1)
    assert worst[0].availability_profile["wind"] == (0.0,) * 24
    assert worst[0].weight == 365


def test_triplet_two_value_weights():
    a, b, x = _two_value_year()
    best, nominal, worst = extract_triplet(_dv(x), 2, seed=1)
    for days in (best, nominal, worst):
        assert len(days) == 2
        assert sorted(d.weight for d in days) == [165, 200]


def test_triplet_ordering_by_stress():
    rng = np.random.default_rng(9)
    dv = _dv(rng.random((365, 24)), rng.random((365, 24)))
    best, nominal, worst = extract_triplet(dv, 4, seed=2)
    score = net_load_stress(dv)
    for b, w in zip(best, worst):
        sb = sum(b.demand_profile["load"]) - sum(b.availability_profile["wind"])
        sw = sum(w.demand_profile["load"]) - sum(w.availability_profile["wind"])
        assert score.min() - 1e-9 <= sb <= sw <= score.max() + 1e-9
    for days in (best, nominal, worst):
        assert sum(d.weight for d in days) == pytest.approx(365)


def test_weights_rescaled_to_year_days():
    x = np.random.default_rng(3).random((10, 24))
    best, nominal, worst = extract_triplet(_dv(x), 2, year_days=365)
    assert sum(d.weight for d in nominal) == pytest.approx(365)


def test_days_csv_round_trip(tmp_path):
    rng = np.random.default_rng(6)
    dv = _dv(rng.random((365, 24)), rng.random((365, 24)))
    _, nominal, _ = extract_triplet(dv, 3)
    write_days_csv(nominal, tmp_path / "days.csv")
    back = read_days_csv(tmp_path / "days.csv", demand_keys=["load"])
    assert back == nominal


def test_profiles_must_be_normalized():
    with pytest.raises(ValueError):
        day_vectors({"load": np.full(48, 1.5)}, {})
