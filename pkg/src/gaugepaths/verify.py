"""Self-contained invariant checks run by the ``verify`` command."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import action as act
from . import experiments as ex
from .geometry import FrameBoost, Metric, Polyline, boost_path, inner
from .lattice import Grid
from .mode_reduction import (kg_eigenvalue, kk_mass_squared, omega, project_tau_modes,
                             riemann_eigenvalue, synthesize_trajectory)
from .physical_paths import de_broglie, find_equivalent_points
from .propagator import (KernelConfig, gaussian_packet, kernel_step, plane_wave,
                         q_norm)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark} {self.name}: {self.value:.3e} (threshold {self.threshold:.1e})"


def _lt(name, value, thr):
    return CheckResult(name, bool(value < thr), float(value), thr)


def _gt(name, value, thr):
    return CheckResult(name, bool(value > thr), float(value), thr)


def check_inner() -> CheckResult:
    m = Metric.minkowski(4)
    return _lt("metric contraction", abs(inner([2, 1, 0, 0], m) - 3.0), 1e-15)


def check_boost_roundtrip() -> CheckResult:
    m = Metric.minkowski(4)
    p = Polyline(np.array([[0.0, 0, 0, 0], [1, 0.2, -0.1, 0.3]]), np.array([0.0, 1.0]))
    b = FrameBoost((0.3, -0.2, 0.1))
    back = boost_path(boost_path(p, b, m), b.inverse(), m)
    return _lt("boost round trip", np.abs(back.x - p.x).max(), 1e-12)


def check_de_broglie() -> CheckResult:
    spec = act.LagrangianSpec(1.0, kinematics="nonrelativistic")
    path = Polyline.straight((0.0, 0.0), (40 * np.pi, 0.0), 0.0, 80 * np.pi, n=17)
    eq = find_equivalent_points(path, spec)
    err = np.abs(eq.spacings() - de_broglie(1.0, 0.5)).max()
    return _lt("equivalent-point spacing", err, 1e-9)


def check_gauge_loop() -> CheckResult:
    rng = np.random.default_rng(3)
    pot = act.Potential.uniform([0.7, -1.3])
    loop = rng.normal(size=(9, 2))
    loop[-1] = loop[0]
    return _lt("uniform potential around a loop", abs(pot.line_integral(loop)), 1e-15)


def check_lorentz_loop() -> CheckResult:
    pot = act.Potential.uniform_magnetic(0.7)
    spec = act.LagrangianSpec(1.0, pot, kinematics="nonrelativistic")
    taus = np.linspace(0, 2, 2001)
    base = act.classical_trajectory([0, 0], [1, 0.3], taus, spec)
    bump = np.sin(np.pi * taus / 2)[:, None] * np.array([0.3, 1.0])
    errs = []
    for a in (0.2, 0.1):
        lhs, rhs = act.lorentz_loop_check(base, act.perturbed(base, a * bump), spec)
        errs.append(abs(lhs - rhs))
    return _gt("loop error ratio under area halving", errs[0] / errs[1], 3.5)


def check_unitarity(quick: bool) -> CheckResult:
    n = 256 if quick else 1024
    g = Grid.centered(n, 40.0 / n)
    s = gaussian_packet(g, 1.0, width=1.5, k0=[1.0])
    out = kernel_step(s, KernelConfig(0.1, Metric.spatial(1)))
    return _lt("free step norm drift", abs(out.norm() - s.norm()), 1e-10)


def check_plane_wave() -> CheckResult:
    g = Grid.centered(128, 40.0 / 128)
    k = 2 * np.pi * 7 / 40.0
    s = plane_wave(g, 1.3, [k])
    out = kernel_step(s, KernelConfig(0.2, Metric.spatial(1)))
    ref = s.amplitudes * np.exp(-0.2j * k * k / (2 * 1.3))
    return _lt("plane-wave multiplier", np.abs(out.amplitudes - ref).max(), 1e-12)


def check_direct_quadrature(quick: bool) -> CheckResult:
    n = 512 if quick else 1024
    g = Grid.centered(n, 40.0 / n)
    s = gaussian_packet(g, 1.0, width=1.5, k0=[1.0])
    eps = 0.2 if quick else 0.1
    a = kernel_step(s, KernelConfig(eps, Metric.spatial(1)))
    b = kernel_step(s, KernelConfig(eps, Metric.spatial(1), mode="direct"))
    return _lt("spectral vs direct quadrature", g.norm(a.amplitudes - b.amplitudes), 1e-3)


def check_q_modulus() -> CheckResult:
    return _lt("normaliser modulus", abs(abs(q_norm(0.1, 1.0, 4)) - (0.2 * np.pi) ** 2), 1e-14)


def check_mode_orthogonality() -> CheckResult:
    m, steps = 2.0, 64
    taus = np.arange(steps) * (2 * np.pi / m / steps)
    ns = range(-15, 16)
    gram = np.array([[np.sum(omega(a, m, taus) * np.conj(omega(b, m, taus))) * taus[1]
                      for b in ns] for a in ns])
    return _lt("discrete mode orthonormality", np.abs(gram - np.eye(len(ns))).max(), 1e-12)


def check_antiperiodic_synthesis() -> CheckResult:
    g = Grid.centered((16, 16), 2 * np.pi / 16)
    x = g.points()
    modes = {0: np.exp(1j * (x @ [4.0, 0.0])), 1: 0.5 * np.exp(1j * (x @ [7.0, 1.0]))}
    traj = synthesize_trajectory(g, modes, 4.0, 32)
    spec = project_tau_modes(traj, range(-2, 3))
    leak = max(g.norm(spec[n]) for n in (-2, -1, 2))
    return _lt("mode synthesis defect and cross leakage", max(traj.defect, leak), 1e-10)


def check_eigen_tables() -> CheckResult:
    err = (abs(kg_eigenvalue(-1, 1) + 1) + abs(kg_eigenvalue(0, 1) - 1)
           + abs(kg_eigenvalue(1, 1) - 3) + abs(kk_mass_squared(0, 1, 2.0, 0.5, 0) - 4)
           + abs(riemann_eigenvalue(0, 1, 3) - 2))
    return CheckResult("eigenvalue tables exact", err == 0, err, 0.0)


def check_seed_determinism() -> CheckResult:
    cfg = ex.SlitConfig.standard(samples=40_000, seed=11)
    a = ex.double_slit_intensity(cfg, threads=1)
    b = ex.double_slit_intensity(cfg, threads=3)
    diff = float(np.abs(a.intensity - b.intensity).max())
    return CheckResult("seed determinism across threads", a.intensity.tobytes()
                       == b.intensity.tobytes(), diff, 0.0)


def check_gauge_profile() -> CheckResult:
    cfg = ex.SlitConfig.standard(samples=20_000, seed=2)
    a = ex.double_slit_intensity(cfg)
    b = ex.double_slit_intensity(replace(cfg, potential=act.Potential.uniform([0.37, -2.1])))
    return CheckResult("uniform potential leaves profile unchanged",
                       a.intensity.tobytes() == b.intensity.tobytes(),
                       float(np.abs(a.intensity - b.intensity).max()), 0.0)


def check_ab_period() -> CheckResult:
    cfg = ex.ABConfig.standard(samples=20_000, seed=5, flux=1.1)
    a = ex.ab_intensity(cfg)
    b = ex.ab_intensity(replace(cfg, flux=1.1 + 2 * np.pi))
    return CheckResult("flux period 2 pi bit-identical", a.intensity.tobytes()
                       == b.intensity.tobytes(), float(np.abs(a.intensity - b.intensity).max()), 0.0)


def suite(quick: bool = True) -> list[Callable[[], CheckResult]]:
    return [check_inner, check_boost_roundtrip, check_de_broglie, check_gauge_loop,
            check_lorentz_loop, lambda: check_unitarity(quick), check_plane_wave,
            lambda: check_direct_quadrature(quick), check_q_modulus,
            check_mode_orthogonality, check_antiperiodic_synthesis, check_eigen_tables,
            check_seed_determinism, check_gauge_profile, check_ab_period]


def run_suite(quick: bool = True) -> list[CheckResult]:
    return [f() for f in suite(quick)]
