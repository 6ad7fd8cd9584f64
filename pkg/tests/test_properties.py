import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from gaugepaths.action import LagrangianSpec, Potential, cumulative_action, v_element
from gaugepaths.geometry import EvolvedPoint, FrameBoost, Metric, Polyline, boost, inner
from gaugepaths.mode_reduction import kg_eigenvalue, kk_mass_squared, riemann_eigenvalue
from gaugepaths.physical_paths import (find_equivalent_points, interfering_pair,
                                       wrap_phase)

TWO_PI = 2 * np.pi
coord = st.floats(-50, 50, allow_nan=False)
vec4 = st.lists(coord, min_size=4, max_size=4)
speed = st.floats(-0.9, 0.9)


@given(vec4, st.floats(-20, 20))
def test_inner_quadratic(xi, c):
    g = Metric.minkowski(4)
    a = inner(np.multiply(c, xi), g)
    assert np.isclose(a, c * c * inner(xi, g), rtol=1e-12, atol=1e-9)


@given(vec4, st.tuples(speed, speed, speed))
def test_inner_boost_invariant(xi, v):
    assume(np.dot(v, v) < 0.95)
    g = Metric.minkowski(4)
    p = EvolvedPoint(tuple(xi), 0.0)
    q = boost(p, FrameBoost(v), g)
    scale = max(1.0, float(np.dot(xi, xi))) / (1 - np.dot(v, v))
    assert abs(inner(q.x, g) - inner(xi, g)) < 1e-12 * scale


@given(st.floats(-1e6, 1e6))
def test_wrap_range(s):
    r = wrap_phase(s)
    assert -np.pi < r <= np.pi
    assert np.isclose(np.exp(1j * r), np.exp(1j * s), atol=1e-9)


def _random_path(rng, n, dim, t0=0.0):
    x = np.cumsum(rng.normal(size=(n, dim)), axis=0)
    tau = t0 + np.cumsum(rng.uniform(0.2, 1.5, size=n))
    return Polyline(x, tau)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(2, 6))
def test_phase_additivity(seed, na, nb):
    rng = np.random.default_rng(seed)
    spec = LagrangianSpec(1.3, Potential.uniform_magnetic(0.4, dim=3), Metric.minkowski(3))
    ab = _random_path(rng, na, 3)
    tail = _random_path(rng, nb, 3, ab.tau[-1])
    bc = Polyline(np.vstack([ab.x[-1:], ab.x[-1] + tail.x - tail.x[0]]),
                  np.concatenate([[ab.tau[-1]], tail.tau + 0.1]))
    prod = v_element(ab, spec) * v_element(bc, spec)
    assert abs(prod - v_element(ab.concat(bc), spec)) < 1e-12 * max(1, len(ab) + len(bc))


@given(st.floats(0.1, 5.0), st.floats(0.1, 3.0), st.floats(0.5, 300.0), st.integers(2, 40))
def test_crossing_count(m, u, length, n):
    spec = LagrangianSpec(m, kinematics="nonrelativistic", metric=Metric.spatial(1))
    path = Polyline.straight([0.0], [length], 0.0, length / u, n)
    total = cumulative_action(path, spec)[-1]
    assert len(find_equivalent_points(path, spec)) == int(np.floor(total / TWO_PI))


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_pair_antisymmetry(seed):
    rng = np.random.default_rng(seed)
    spec = LagrangianSpec(1.0, metric=Metric.minkowski(2))
    a = _random_path(rng, 4, 2)
    b = _random_path(rng, 5, 2)
    b = Polyline(b.x - b.x[-1] + a.x[-1], b.tau)
    r1 = interfering_pair(a, b, spec).residual_phase
    r2 = interfering_pair(b, a, spec).residual_phase
    assume(abs(abs(r1) - np.pi) > 1e-9)
    assert abs(r1 + r2) < 1e-9


@given(st.integers(-50, 50), st.floats(0.1, 10), st.floats(0, 0.99))
def test_eigenvalue_identities(n, m, frac):
    e = frac * m
    assert riemann_eigenvalue(n, m, 0.0) == kg_eigenvalue(n, m)
    assert kk_mass_squared(n, 0, m, 0.0, 0.0) == kg_eigenvalue(n, m)
    base = kk_mass_squared(n, 0, m, e, 0.0)
    assert np.isclose(kk_mass_squared(n, 1, m, e, 0.0) - base, e * e, rtol=1e-9, atol=1e-9)
