"""Anti-periodic tau-mode decomposition and the reduced eigenvalue families."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .action import NonUniformFieldError, Potential
from .geometry import Metric
from .lattice import Grid, pi_squared_fd
from .propagator import Trajectory, WaveState, antiperiodicity_defect

TWO_PI = 2.0 * np.pi
DEFAULT_N_RANGE = range(-8, 9)


def omega(n: int, m: float, tau) -> np.ndarray | complex:
    """Half-integer mode ``sqrt(m / 2 pi) exp(i (n + 1/2) m tau)``."""
    tau = np.asarray(tau, dtype=float)
    val = np.sqrt(m / TWO_PI) * np.exp(1j * (n + 0.5) * m * tau)
    return complex(val) if val.ndim == 0 else val


def omega_antiperiodic(n: int) -> bool:
    """``omega_n(2 pi / m) = -omega_n(0)`` since ``exp(i pi (2n + 1)) = -1`` for integer ``n``."""
    return isinstance(n, (int, np.integer))


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    modes: dict[int, np.ndarray]
    m: float
    grid: Grid
    leakage: float = 0.0
    tau0: float = 0.0

    def __getitem__(self, n: int) -> np.ndarray:
        return self.modes[n]

    def norms(self) -> dict[int, float]:
        return {n: self.grid.norm(f) for n, f in self.modes.items()}

    def reconstruct(self, tau: float) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=complex)
        for n, f in self.modes.items():
            out += f * omega(n, self.m, tau - self.tau0)
        return out


def _period_samples(traj: Sequence[WaveState]) -> tuple[list[WaveState], float]:
    if len(traj) < 2:
        raise ValueError("trajectory needs at least two states")
    m = traj[0].m
    period = TWO_PI / m
    taus = np.array([s.tau for s in traj])
    dt = np.diff(taus)
    if np.any(dt <= 0) or np.ptp(dt) > 1e-9 * dt.mean():
        raise ValueError("tau sampling is not uniform")
    states = list(traj)
    # a closing sample at tau0 + period duplicates the first up to sign
    if abs(taus[-1] - taus[0] - period) < 1e-9 * period:
        states = states[:-1]
    span = len(states) * dt.mean()
    if abs(span - period) > 1e-9 * period:
        raise ValueError(f"trajectory spans {span}, not one period {period}")
    return states, float(dt.mean())


def project_tau_modes(traj: Sequence[WaveState],
                      n_range: Iterable[int] = DEFAULT_N_RANGE) -> ModeSpectrum:
    """``psi_n(x) = int psi(x, tau) conj(omega_n(tau)) dtau`` by the periodic trapezoid rule.

    ``leakage`` is the fraction of the trajectory's squared norm not carried
    by the retained modes.
    """
    states, dt = _period_samples(traj)
    grid, m, tau0 = states[0].grid, states[0].m, states[0].tau
    stack = np.stack([s.amplitudes for s in states])
    rel = np.array([s.tau for s in states]) - tau0
    modes = {}
    for n in n_range:
        w = np.conj(omega(n, m, rel)) * dt
        modes[int(n)] = np.tensordot(w, stack, axes=(0, 0))
    total = np.sum(np.abs(stack) ** 2) * dt * grid.cell_volume
    kept = sum(grid.norm(f) ** 2 for f in modes.values())
    leak = max(0.0, 1.0 - kept / total) if total > 0 else 0.0
    return ModeSpectrum(modes, m, grid, leak, tau0)


def synthesize_trajectory(grid: Grid, modes: Mapping[int, np.ndarray], m: float,
                          steps: int, tau0: float = 0.0) -> Trajectory:
    """States ``sum_n psi_n omega_n(tau)`` at ``steps + 1`` points spanning one period."""
    taus = tau0 + np.arange(steps + 1) * (TWO_PI / m / steps)
    spec = ModeSpectrum({int(n): np.asarray(f, dtype=complex) for n, f in modes.items()},
                        m, grid, tau0=tau0)
    states = tuple(WaveState(grid, spec.reconstruct(t), t, m) for t in taus)
    return Trajectory(states, antiperiodicity_defect(states[0], states[-1]))


# eigenvalue maps -------------------------------------------------------------

def kg_eigenvalue(n: int, m: float) -> float:
    if not m > 0:
        raise ValueError("m must be positive")
    return (2 * n + 1) * (m * m)


def riemann_eigenvalue(n: int, m: float, R: float) -> float:
    return kg_eigenvalue(n, m) + R / 3


def kk_mass_squared(n: int, k: int, m: float, e: float, F2: float) -> float:
    if not m * m > e * e:
        raise ValueError(f"need m^2 > e^2, got m={m}, e={e}")
    return (2 * n + 1) * (m * m - e * e) + e * e * k * k - F2 / 12


def reduced_mass(m: float, e: float) -> float:
    if not m * m > e * e:
        raise ValueError(f"need m^2 > e^2, got m={m}, e={e}")
    return float(np.sqrt(m * m - e * e))


def field_invariant(pot: Potential, metric: Metric) -> float:
    """``F_{mu nu} F^{mu nu}`` of a potential with constant field."""
    F = pot.uniform_field_tensor()
    s = np.asarray(metric.signature, dtype=float)
    return float(np.sum(np.outer(s, s) * F * F))


# residuals -----------------------------------------------------------------

def _field(psi, grid: Grid) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != grid.shape:
        raise ValueError(f"field shape {psi.shape} does not match grid {grid.shape}")
    return psi


def kg_residual(psi_n, grid: Grid, n: int, m: float, metric: Metric,
                pot: Potential | None = None) -> float:
    """L2 norm of ``Pi_mu Pi^mu psi_n - (2n + 1) m^2 psi_n`` by central differences."""
    psi = _field(psi_n, grid)
    r = pi_squared_fd(psi, grid, metric, pot) - kg_eigenvalue(n, m) * psi
    return grid.norm(r)


def riemann_residual(psi_n, grid: Grid, n: int, m: float, R: float,
                     metric: Metric) -> float:
    """L2 norm of ``-d_mu d^mu psi_n - [(2n+1) m^2 + R/3] psi_n`` at constant ``R``."""
    psi = _field(psi_n, grid)
    r = pi_squared_fd(psi, grid, metric) - riemann_eigenvalue(n, m, R) * psi
    return grid.norm(r)


@dataclass(frozen=True, eq=False)
class KKSpectrum:
    modes: dict[tuple[int, int], np.ndarray]
    m: float
    e: float
    F2: float
    grid: Grid | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        reduced_mass(self.m, self.e)

    def mass_squared(self, k: int, n: int) -> float:
        return kk_mass_squared(n, k, self.m, self.e, self.F2)


def kk_project(psi, x5, e: float, k_range: Iterable[int] | None = None) -> dict[int, np.ndarray]:
    """Fourier coefficients ``psi_k`` of ``psi = sum_k psi_k exp(i e k x5)``.

    ``psi`` carries the fifth coordinate on its last axis, sampled at ``x5``
    over one circle period ``2 pi / e`` (endpoint excluded).
    """
    if not e > 0:
        raise ValueError("e must be positive")
    psi = np.asarray(psi, dtype=complex)
    x5 = np.asarray(x5, dtype=float)
    n = x5.size
    if psi.shape[-1] != n:
        raise ValueError("last axis of psi must match the x5 grid")
    period = TWO_PI / e
    d = np.diff(x5)
    if n < 2 or np.any(d <= 0) or np.ptp(d) > 1e-9 * d.mean():
        raise ValueError("x5 grid is not uniform")
    if abs(n * d.mean() - period) > 1e-9 * period:
        raise ValueError("x5 grid does not cover one period 2 pi / e")
    ks = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(int)
    # e * spacing = 2 pi / n, so the fft kernel matches up to the x5[0] origin
    coeff = np.fft.fft(psi, axis=-1) / n * np.exp(-1j * e * ks * x5[0])
    wanted = set(ks.tolist()) if k_range is None else set(int(k) for k in k_range)
    return {int(k): coeff[..., i] for i, k in enumerate(ks) if k in wanted}


def kk_residual(psi_kn, grid: Grid, k: int, n: int, m: float, e: float, F2: float,
                metric: Metric, pot: Potential | None = None, f2_tol: float = 1e-9) -> float:
    """L2 norm of ``(i d + e k phi)^2 psi - M^2 psi`` with the Kaluza-Klein shell ``M^2``."""
    psi = _field(psi_kn, grid)
    coupled = None
    if pot is not None and pot.kind != "zero":
        try:
            f2 = field_invariant(pot, metric)
        except NonUniformFieldError as exc:
            raise NonUniformFieldError("F^2 must be constant for the reduced shell") from exc
        if abs(f2 - F2) > f2_tol * max(1.0, abs(F2)):
            raise ValueError(f"F2={F2} inconsistent with potential (F^2={f2})")
        coupled = pot.scaled(e * k)
    r = pi_squared_fd(psi, grid, metric, coupled) - kk_mass_squared(n, k, m, e, F2) * psi
    return grid.norm(r)


# units -----------------------------------------------------------------------

@dataclass(frozen=True)
class UnitConstants:
    c: float = 1.0
    hbar: float = 1.0
    G: float = 1.0

    def __post_init__(self):
        for name in ("c", "hbar", "G"):
            if not getattr(self, name) > 0:
                raise ValueError(f"constant {name} must be positive")


def to_standard_units(value: float, kind: str, constants: UnitConstants | None = None,
                      *, R: float = 0.0, F2: float = 0.0) -> float:
    """Restore ``c``, ``hbar`` and ``G`` in a natural-unit squared mass.

    ``mass2``: ``m^2 c^4``; ``curvature``: ``m^2 c^4 + hbar^2 R / 3``;
    ``kk``: ``m^2 c^4 - G hbar^2 F^2 / 6``.
    """
    k = constants or UnitConstants()
    base = value * k.c ** 4
    if kind in ("mass2", "mass²"):
        return base
    if kind == "curvature":
        return base + k.hbar ** 2 * R / 3
    if kind == "kk":
        return base - k.G * k.hbar ** 2 * F2 / 6
    raise ValueError(f"unknown unit kind {kind!r}")
