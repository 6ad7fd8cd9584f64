import numpy as np
import pytest

from gaugepaths.geometry import (EvolvedPoint, FrameBoost, Metric, Polyline, boost,
                                 boost_path, com_frame, inner, resample)


def test_inner_examples():
    assert inner((0, 0), Metric(2)) == 0
    assert inner((1, 0, 0, 0), Metric.minkowski(4)) == 1
    assert inner((1, 1), Metric(2, (1, -1))) == 0


def test_inner_dimension_mismatch():
    with pytest.raises(ValueError):
        inner((1, 2, 3), Metric(2))


def test_metric_validation():
    with pytest.raises(ValueError):
        Metric(2, (1, 1))
    with pytest.raises(ValueError):
        Metric(3, (1, -1))
    with pytest.raises(ValueError):
        Metric(0)
    assert Metric.minkowski().signature == (1, -1, -1, -1)
    assert Metric.spatial(2).time_axis is None


def test_point_and_polyline_validation():
    with pytest.raises(ValueError):
        EvolvedPoint((np.nan, 0.0), 0.0)
    with pytest.raises(ValueError):
        Polyline(np.zeros((1, 2)), np.zeros(1))
    p = Polyline(np.array([[0.0, 0], [1, 1], [2, 0]]), np.array([0.0, 1, 0.5]))
    assert not p.monotonic
    assert Polyline.straight((0, 0), (1, 0), 0, 1).monotonic


def test_polyline_readonly():
    p = Polyline.straight((0, 0), (1, 0), 0, 1)
    with pytest.raises(ValueError):
        p.x[0, 0] = 5.0


def test_from_points_roundtrip():
    p = Polyline.straight((0, 0), (2, 1), 0, 3, n=4)
    q = Polyline.from_points(p.samples)
    assert np.array_equal(p.x, q.x) and np.array_equal(p.tau, q.tau)


def test_resample_midpoint():
    p = Polyline.straight((0.0, 0.0), (2.0, 4.0), 0.0, 1.0)
    r = resample(p, 3)
    assert np.allclose(r.x[1], (1.0, 2.0)) and r.tau[1] == pytest.approx(0.5)


def test_resample_idempotent_and_length(rng):
    x = np.cumsum(rng.normal(size=(7, 2)), axis=0)
    p = Polyline(x, np.arange(7.0))
    once = resample(p, 100)
    twice = resample(once, 100)
    assert np.array_equal(once.x, twice.x)
    assert abs(once.length() - p.length()) < 1e-12
    assert np.array_equal(once.x[0], p.x[0]) and np.array_equal(once.x[-1], p.x[-1])


def test_resample_rejects_small_n():
    with pytest.raises(ValueError):
        resample(Polyline.straight((0,), (1,), 0, 1), 1)


def test_boost_identity_and_inverse(rng):
    m = Metric.minkowski(4)
    pt = EvolvedPoint(tuple(rng.normal(size=4)), 1.5)
    assert boost(pt, FrameBoost((0, 0, 0)), m).x == pytest.approx(pt.x, abs=0)
    b = FrameBoost((0.4, -0.3, 0.2))
    back = boost(boost(pt, b, m), b.inverse(), m)
    assert np.allclose(back.x, pt.x, atol=1e-12, rtol=0)
    assert back.tau == pt.tau


def test_boost_preserves_inner(rng):
    m = Metric.minkowski(4)
    b = FrameBoost((0.5, 0.1, -0.6))
    for _ in range(20):
        x = rng.normal(size=4)
        y = boost(EvolvedPoint(tuple(x), 0.0), b, m).x
        assert abs(inner(y, m) - inner(x, m)) < 1e-12


def test_boost_speed_limit():
    with pytest.raises(ValueError):
        FrameBoost((0.8, 0.7))


def _moving(v, T=2.0):
    return Polyline.straight((0.0, 0.0), (T, v * T), 0.0, T)


def test_com_frame_examples():
    m = Metric.minkowski(2)
    assert FrameBoost(com_frame([_moving(0.0)], m).velocity).speed == 0
    assert com_frame([_moving(0.3), _moving(-0.3)], m).speed == pytest.approx(0, abs=1e-15)
    b = com_frame([_moving(0.6)], m)
    assert b.velocity[0] == pytest.approx(0.6)
    moved = boost_path(_moving(0.6), b, m)
    assert abs(moved.mean_velocity()[1]) < 1e-12


def test_com_frame_zeroes_summed_velocity(rng):
    m = Metric.minkowski(3)
    paths = []
    for _ in range(5):
        v = rng.uniform(-0.4, 0.4, 2)
        paths.append(Polyline.straight((0, 0, 0), (1.0, *v), 0, 1))
    b = com_frame(paths, m)
    total = sum(boost_path(p, b, m).mean_velocity() for p in paths)
    assert np.linalg.norm(total[1:]) < 1e-10


def test_com_frame_rejects_spacelike():
    with pytest.raises(ValueError):
        com_frame([Polyline.straight((0, 0), (1, 2), 0, 1)], Metric.minkowski(2))
