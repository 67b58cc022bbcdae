import math

import numpy as np
import pytest

import cloudheight as ch


def test_bessel_half_order_closed_form():
    x = np.array([0.1, 1.0, 7.5])
    want = np.sqrt(np.pi / (2 * x)) * np.exp(-x)
    np.testing.assert_allclose(ch.bessel_k(0.5, x), want, rtol=1e-12)
    with pytest.raises(ch.DomainError):
        ch.bessel_k(1.0, -1.0)


def test_matern_and_covariance():
    p = ch.MaternParams(2.0, 4.0, 0.5)
    assert ch.matern(0.0, p) == pytest.approx(2.0)
    assert ch.matern(3.0, p) == pytest.approx(2.0 * math.exp(-math.sqrt(2) * 3 / 4), rel=1e-12)
    c = ch.cov_matrix(np.array([[0.0, 0.0], [0.0, 1.0], [2.0, 0.0]]))
    assert c.shape == (3, 3)
    np.testing.assert_allclose(c, c.T)


def test_parallax_hand_value():
    hw = ch.HeightWind(1000.0)
    got = ch.along_track_parallax(hw, ch.Camera("f", 45.6), ch.Camera("n", 0.0))
    assert got == pytest.approx(1000 * math.tan(math.radians(45.6)), rel=1e-12)
    s = ch.shift_for_camera(ch.HeightWind(3000.0), ch.camera("Af"), ch.camera("An"))
    assert s.int_along + s.frac_along == pytest.approx(s.along)
    assert -0.5 <= s.frac_along < 0.5


def _grid(n, rows, cols, seed):
    rng = np.random.default_rng(seed)
    coords, values = [], []
    for _ in range(n):
        r, c = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
        pts = np.column_stack([r.ravel(), c.ravel()]).astype(float)
        coords.append(pts + rng.uniform(-0.2, 0.2, pts.shape))
        values.append(rng.normal(size=rows * cols))
    return np.vstack(coords), np.concatenate(values)


def test_likelihoods_are_affine_invariant():
    coords, values = _grid(2, 4, 4, 3)
    trend = 3.0 + 0.5 * coords[:, 0] - 2.0 * coords[:, 1]
    low = ch.low_cloud_loglik(coords, values, 2)
    high = ch.high_cloud_loglik(coords, values, 2)
    assert ch.high_cloud_loglik(coords, values + trend, 2) == pytest.approx(high, abs=1e-8)
    shifted = values.copy()
    shifted[:16] += trend[:16]
    shifted[16:] -= 2 * trend[16:]
    assert ch.low_cloud_loglik(coords, shifted, 2) == pytest.approx(low, abs=1e-8)
    # n = 2 blocks of m = 16: low shifts by -n (m - 3) log c.
    assert ch.low_cloud_loglik(coords, 10 * values, 2) == pytest.approx(low - 26 * math.log(10), abs=1e-8)
    with pytest.raises(ch.DegenerateError):
        ch.low_cloud_loglik(coords, np.zeros_like(values), 2)


def test_search_recovers_synthetic_height():
    cams = [ch.camera(n) for n in ("An", "Af", "Aa")]
    images = ch.simulate_scene(cams, rows=48, cols=16, truth=ch.HeightWind(5000.0), seed=11)
    assert len(images) == 3 and images[0].shape == (48, 16)
    cfg = ch.EstimatorConfig(cams, mode=ch.Mode.low)
    prof = ch.search(images, origin=(16, 0), size=(15, 16), grid=ch.SearchGrid(2900, 7000, 100), config=cfg)
    assert prof.valid
    assert abs(prof.best_candidate.h - 5000.0) <= 100.0
    assert prof.rejection == ch.Rejection.none


def test_stabilize_and_height_map():
    cams = [ch.camera(n) for n in ("An", "Af", "Aa")]
    images = ch.simulate_scene(cams, rows=30, cols=10, truth=ch.HeightWind(4000.0), seed=2)
    _, plain = ch.stabilize(images)
    images[1] = 3.0 * images[1] - 0.5
    fixed, gains = ch.stabilize(images)
    assert gains[0] == (1.0, 0.0)
    assert gains[1][0] == pytest.approx(plain[1][0] / 3, rel=1e-12)
    np.testing.assert_allclose(fixed[1], images[1] * gains[1][0] + gains[1][1])
    cfg = ch.EstimatorConfig(cams, mode=ch.Mode.high)
    hm = ch.height_map(fixed, size=(8, 8), stride=4, grid=ch.SearchGrid(3000, 5000, 250), config=cfg)
    assert hm["height"].shape == ((30 - 8) // 4 + 1, (10 - 8) // 4 + 1)
    assert hm["valid"].dtype == bool
    assert np.all(np.isnan(hm["height"][~hm["valid"]]))


def test_config_errors_surface_as_python_exceptions():
    with pytest.raises(ch.ConfigError):
        ch.SearchGrid(0.0, 100.0, 0.0)
    with pytest.raises(ch.ConfigError):
        ch.EstimatorConfig([])
    assert issubclass(ch.ConfigError, ch.Error)


def test_strip_simulation_table():
    cfg = ch.SimConfig()
    cfg.d_min, cfg.d_max = 0.49, 0.52
    strip = ch.simulate_strip(cfg, ch.rep_seed(1, 0))
    assert strip.shape == (501, 3)
    rows = ch.run_table1(reps=2, seed=5, methods=[ch.Method.full, ch.Method.baseline], config=cfg)
    assert [r["method"] for r in rows] == ["full", "baseline"]
    for r in rows:
        assert len(r["estimates"]) == 2
        dev = np.asarray(r["estimates"]) - 0.504
        assert r["rmse"] == pytest.approx(math.sqrt(np.mean(dev**2)))
