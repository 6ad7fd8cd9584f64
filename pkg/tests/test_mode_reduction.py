import numpy as np
import pytest

from gaugepaths.action import NonUniformFieldError, Potential
from gaugepaths.geometry import Metric
from gaugepaths.lattice import Grid
from gaugepaths.mode_reduction import (KKSpectrum, UnitConstants, field_invariant,
                                       kg_eigenvalue, kg_residual, kk_mass_squared,
                                       kk_project, kk_residual, omega, project_tau_modes,
                                       riemann_eigenvalue, riemann_residual,
                                       synthesize_trajectory, to_standard_units)
from gaugepaths.propagator import KernelConfig, WaveState, evolve_period

TWO_PI = 2 * np.pi
M2 = Metric.minkowski(2)


def box(n):
    return Grid.centered((n, n), TWO_PI / n)


def wave(g, k):
    return np.exp(1j * g.points() @ np.asarray(k, dtype=float))


def test_omega_antiperiodic():
    for n in range(-5, 6):
        for m in (0.5, 1.0, 3.0):
            assert abs(omega(n, m, TWO_PI / m) + omega(n, m, 0.0)) < 1e-12


def test_discrete_orthonormality():
    m, steps = 1.5, 64
    taus = np.arange(steps) * TWO_PI / m / steps
    for a in range(-15, 16):
        for b in range(-15, 16):
            ip = np.sum(omega(a, m, taus) * np.conj(omega(b, m, taus))) * taus[1]
            assert abs(ip - (a == b)) < 1e-12


def test_project_single_mode():
    g = box(16)
    psi0 = wave(g, [4, 0])
    traj = synthesize_trajectory(g, {0: psi0}, 4.0, 32)
    spec = project_tau_modes(traj)
    assert np.abs(spec[0] - psi0).max() < 1e-10
    for n, f in spec.modes.items():
        if n != 0:
            assert np.abs(f).max() < 1e-10
    assert spec.leakage < 1e-10


def test_project_two_modes():
    g = box(16)
    a, b = wave(g, [4, 0]), 0.3 * wave(g, [7, 1])
    spec = project_tau_modes(synthesize_trajectory(g, {0: a, 1: b}, 4.0, 32))
    assert np.abs(spec[0] - a).max() < 1e-10 and np.abs(spec[1] - b).max() < 1e-10


def test_reconstruction_roundtrip(rng):
    g = box(8)
    modes = {n: rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape) for n in (-2, 0, 3)}
    traj = synthesize_trajectory(g, modes, 2.0, 16)
    spec = project_tau_modes(traj, range(-4, 5))
    for s in traj.states[:-1]:
        assert g.norm(spec.reconstruct(s.tau) - s.amplitudes) < 1e-10


def test_leakage_reported():
    g = box(8)
    traj = synthesize_trajectory(g, {0: wave(g, [1, 0]), 6: wave(g, [0, 1])}, 1.0, 32)
    spec = project_tau_modes(traj, range(-2, 3))
    assert spec.leakage == pytest.approx(0.5, rel=1e-9)


def test_project_rejects_nonuniform():
    g = box(4)
    states = [WaveState(g, np.ones(g.shape), t, 1.0) for t in (0.0, 0.1, 0.3)]
    with pytest.raises(ValueError):
        project_tau_modes(states)


def test_eigenvalue_examples():
    assert kg_eigenvalue(0, 1) == 1 and kg_eigenvalue(1, 1) == 3 and kg_eigenvalue(-1, 1) == -1
    assert riemann_eigenvalue(0, 1, 3) == 2
    for n in range(-3, 4):
        assert riemann_eigenvalue(n, 1.3, 0.0) == kg_eigenvalue(n, 1.3)
        assert kk_mass_squared(n, 0, 1.3, 0.0, 0.0) == kg_eigenvalue(n, 1.3)
    assert kk_mass_squared(0, 1, 2.0, 0.5, 0) == 4.0
    assert kk_mass_squared(0, 1, 2.0, 0.5, 12) == pytest.approx(3.0)
    assert kk_mass_squared(0, 0, 2.0, 0.5, 0) == pytest.approx(4.0 - 0.25)
    with pytest.raises(ValueError):
        kk_mass_squared(0, 1, 1.0, 1.0, 0)


def _order(fn, sizes=(32, 64, 128)):
    return [fn(n) for n in sizes]


def test_kg_residual_on_and_off_shell():
    m = 4.0

    def rel(n, shell=0):
        g = box(n)
        f = wave(g, [5, 3])
        return kg_residual(f, g, shell, m, M2) / g.norm(f)
    r = _order(rel)
    assert r[0] / r[1] >= 3.5 and r[1] / r[2] >= 3.5
    assert rel(128, shell=1) > 10


def test_kg_residual_grid_mismatch():
    with pytest.raises(ValueError):
        kg_residual(np.ones((4, 4)), box(8), 0, 1.0, M2)


def test_riemann_residual():
    m, R = 4.0, 27.0
    # on shell: k0^2 - k1^2 = m^2 + R/3 = 25
    def rel(n):
        g = box(n)
        f = wave(g, [5, 0])
        return riemann_residual(f, g, 0, m, R, M2) / g.norm(f)
    r = _order(rel)
    assert r[0] / r[1] >= 3.5


def test_kk_project_examples():
    e = 2.0
    n5 = 16
    x5 = np.arange(n5) * (TWO_PI / e / n5) - 0.3
    f = np.linspace(1, 2, 5)
    const = np.repeat((f + 0j)[:, None], n5, axis=1)
    coeffs = kk_project(const, x5, e)
    assert np.abs(coeffs[0] - f).max() < 1e-12
    assert all(np.abs(c).max() < 1e-12 for k, c in coeffs.items() if k != 0)
    psi = f[:, None] * np.exp(1j * e * 2 * x5)[None, :]
    coeffs = kk_project(psi, x5, e)
    assert np.abs(coeffs[2] - f).max() < 1e-12
    assert all(np.abs(c).max() < 1e-12 for k, c in coeffs.items() if k != 2)


def test_kk_parseval(rng):
    e, n5 = 1.5, 32
    x5 = np.arange(n5) * (TWO_PI / e / n5)
    psi = rng.normal(size=(6, n5)) + 1j * rng.normal(size=(6, n5))
    coeffs = kk_project(psi, x5, e)
    lhs = sum(np.sum(np.abs(c) ** 2) for c in coeffs.values())
    period = TWO_PI / e
    rhs = np.sum(np.abs(psi) ** 2) * (period / n5) / period
    assert abs(lhs - rhs) < 1e-12 * max(1.0, rhs)


def test_kk_project_rejects_bad_grid():
    with pytest.raises(ValueError):
        kk_project(np.ones((2, 4)), np.array([0.0, 0.1, 0.3, 0.4]), 1.0)
    with pytest.raises(ValueError):
        kk_project(np.ones((2, 4)), np.arange(4) * 0.1, 1.0)


def test_kk_residual_on_shell_order():
    m, e, k, n = 5.0, 3.0, 1, 0
    # M^2 = (m^2 - e^2) + e^2 = 25: plane wave (5, 0)
    def rel(N):
        g = box(N)
        f = wave(g, [5, 0])
        return kk_residual(f, g, k, n, m, e, 0.0, M2) / g.norm(f)
    r = _order(rel)
    assert r[0] / r[1] >= 3.5 and r[1] / r[2] >= 3.5


def test_kk_reduces_to_kg_with_charge():
    g = box(32)
    f = wave(g, [5, 3])
    pot = Potential.uniform([0.5, 0.0])
    a = kk_residual(f, g, 1, 0, 4.0, 1.0, 0.0, M2, pot)
    b = kg_residual(f, g, 0, 4.0, M2, pot.scaled(1.0))
    assert a == pytest.approx(b, rel=1e-12)


def test_kk_residual_field_checks():
    g = box(16)
    f = wave(g, [1, 0])
    pot = Potential.uniform_magnetic(0.5, dim=2)
    f2 = field_invariant(pot, M2)
    kk_residual(f, g, 1, 0, 2.0, 1.0, f2, M2, pot)
    with pytest.raises(ValueError):
        kk_residual(f, g, 1, 0, 2.0, 1.0, f2 + 1.0, M2, pot)
    with pytest.raises(NonUniformFieldError):
        kk_residual(f, g, 1, 0, 2.0, 1.0, 0.0, M2, Potential.solenoid(1.0, (9.0, 9.0)))


def test_kk_spectrum_invariant():
    with pytest.raises(ValueError):
        KKSpectrum({}, 1.0, 1.0, 0.0)
    assert KKSpectrum({}, 2.0, 1.0, 0.0).mass_squared(1, 0) == 4.0


def test_units():
    assert to_standard_units(2.5, "mass2") == 2.5
    c = UnitConstants(c=3.0, hbar=2.0, G=0.5)
    assert to_standard_units(2.0, "mass2", c) == pytest.approx(2.0 * 81)
    assert to_standard_units(2.0, "curvature", c, R=6.0) == pytest.approx(162 + 4 * 6 / 3)
    assert to_standard_units(2.0, "kk", c, F2=3.0) == pytest.approx(162 - 0.5 * 4 * 3 / 6)
    with pytest.raises(ValueError):
        UnitConstants(c=0.0)
    with pytest.raises(ValueError):
        to_standard_units(1.0, "spin")


def test_pipeline_modes_satisfy_kg():
    m = 4.0

    def rel(n):
        g = box(n)
        s0 = WaveState(g, wave(g, [5, 3]), 0.0, m)
        traj = evolve_period(s0, KernelConfig(TWO_PI / m / 32, M2))
        spec = project_tau_modes(traj)
        f = spec[0]
        return kg_residual(f, g, 0, m, M2) / g.norm(f)
    r = _order(rel)
    assert r[0] / r[1] >= 3.5 and r[1] / r[2] >= 3.5
