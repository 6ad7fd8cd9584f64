"""Discretised path-integral evolution in the evolution parameter tau.

One step maps ``psi(., tau)`` to

    psi(x, tau + eps) = Q^-1 int exp[-(i m / 2 eps) g xi xi] U(x, x - xi) psi(x - xi, tau) dxi

The spectral mode applies the free kernel exactly as the momentum multiplier
``exp(i eps g^{mu mu} k_mu^2 / 2m)`` and the potential through unit-modulus
line-integral phases; the direct mode sums the windowed kernel in real space.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Literal, Sequence

import numpy as np

from .action import Potential
from .geometry import Metric, inner
from .lattice import Grid, pi_squared_fd, pi_squared_spectral

TWO_PI = 2.0 * np.pi


class QuadratureWindowError(ValueError):
    """The real-space kernel window cannot resolve the step."""


@dataclass(frozen=True, eq=False)
class WaveState:
    grid: Grid
    amplitudes: np.ndarray
    tau: float
    m: float

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.shape != self.grid.shape:
            raise ValueError(f"amplitudes {a.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        if not self.grid.is_power_of_two():
            raise ValueError(f"grid shape {self.grid.shape} is not a power of two per axis")
        if not self.m > 0:
            raise ValueError("mass must be positive")
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "tau", float(self.tau))

    def norm(self) -> float:
        return self.grid.norm(self.amplitudes)

    def with_amplitudes(self, amplitudes, tau: float) -> "WaveState":
        return WaveState(self.grid, amplitudes, tau, self.m)


@dataclass(frozen=True)
class KernelConfig:
    epsilon: float
    metric: Metric
    potential: Potential | None = None
    mode: Literal["spectral", "direct"] = "spectral"
    window_fraction: float = 0.9
    window_flat: float = 0.5
    min_zones: float = 30.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.mode not in ("spectral", "direct"):
            raise ValueError(f"unknown kernel mode {self.mode!r}")
        if not 0 < self.window_fraction <= 1 or not 0 <= self.window_flat < 1:
            raise ValueError("window fractions out of range")


def short_time_action(x, y, eps: float, m: float, metric: Metric) -> float:
    """Free principal function ``-(m / 2 eps) g xi xi - m eps / 2`` with ``xi = x - y``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    xi = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return -(m / (2 * eps)) * inner(xi, metric) - 0.5 * m * eps


def u_short(x, xi, pot: Potential) -> complex:
    """Second-order expansion of the gauge element for the step from ``x - xi`` to ``x``."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    phi = pot.value(x)
    jac = pot.jacobian(x)
    first = phi @ xi
    second = xi @ (1j * jac + np.outer(phi, phi)) @ xi
    return complex(1 + 1j * first - 0.5 * second)


def q_norm(eps: float, m: float, spatial_dims: int,
           signature: Sequence[int] | None = None) -> complex:
    """Fresnel normaliser making the free step tend to the identity.

    Each axis contributes ``sqrt(2 pi eps / m) exp(-i s pi / 4)``; by default
    every axis is spacelike (``s = -1``).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    sig = tuple(signature) if signature is not None else (-1,) * spatial_dims
    if len(sig) != spatial_dims:
        raise ValueError("signature length does not match spatial_dims")
    mag = (TWO_PI * eps / m) ** (0.5 * spatial_dims)
    return complex(mag * np.exp(-0.25j * np.pi * sum(sig)))


# spectral stepping ----------------------------------------------------------

def _free_multiplier(grid: Grid, metric: Metric, m: float, eps: float) -> np.ndarray:
    total = np.zeros(grid.shape)
    for mu, s in enumerate(metric.signature):
        k = grid.broadcast_axis(grid.wavenumbers(mu), mu)
        total = total + s * k * k
    return np.exp(1j * eps * total / (2 * m))


def _axis_gauge(phi_mu: np.ndarray, grid: Grid, mu: int):
    """Split ``phi_mu`` on lines along ``mu`` into a mean and a periodic primitive.

    Returns ``(beta, chi)`` with ``d_mu chi = phi_mu - beta`` (spectrally) and
    ``beta`` the line average, so ``i d + phi = e^{i chi} (i d + beta) e^{-i chi}``.
    """
    beta = phi_mu.mean(axis=mu, keepdims=True)
    k = grid.broadcast_axis(grid.wavenumbers(mu), mu)
    f = np.fft.fft(phi_mu - beta, axis=mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(k == 0, 0.0, f / (1j * k))
    return beta, np.fft.ifft(f, axis=mu).real


def _axis_step(psi, grid: Grid, mu: int, s: int, m: float, dt: float, beta, chi):
    k = grid.broadcast_axis(grid.wavenumbers(mu), mu)
    phase = np.exp(1j * chi)
    f = np.fft.fft(psi * np.conj(phase), axis=mu)
    f *= np.exp(1j * dt * s * (beta - k) ** 2 / (2 * m))
    return np.fft.ifft(f, axis=mu) * phase


def _spectral_step(psi, grid: Grid, cfg: KernelConfig, m: float):
    pot = cfg.potential
    if pot is None or pot.kind == "zero":
        return np.fft.ifftn(_free_multiplier(grid, cfg.metric, m, cfg.epsilon)
                            * np.fft.fftn(psi))
    phi = pot.value(grid.points())
    parts = [(mu, s) + _axis_gauge(phi[..., mu], grid, mu)
             for mu, s in enumerate(cfg.metric.signature)]
    eps = cfg.epsilon
    # Strang splitting over axes; exact when the axis operators commute.
    for mu, s, beta, chi in parts[:-1]:
        psi = _axis_step(psi, grid, mu, s, m, 0.5 * eps, beta, chi)
    mu, s, beta, chi = parts[-1]
    psi = _axis_step(psi, grid, mu, s, m, eps, beta, chi)
    for mu, s, beta, chi in reversed(parts[:-1]):
        psi = _axis_step(psi, grid, mu, s, m, 0.5 * eps, beta, chi)
    return psi


# direct quadrature ----------------------------------------------------------

def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity transition from 1 at t <= 0 to 0 at t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    a = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    b = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    return a / (a + b)


def kernel_window(grid: Grid, cfg: KernelConfig, m: float):
    """Offsets (in cells) and window weights of the real-space kernel per axis."""
    eps = cfg.epsilon
    radius = cfg.window_fraction * np.pi * eps / (m * grid.h)
    zones = m * radius ** 2 / (TWO_PI * eps)
    if zones < cfg.min_zones:
        raise QuadratureWindowError(
            f"kernel window spans {zones:.1f} Fresnel zones (< {cfg.min_zones}); "
            "refine the grid or increase epsilon")
    if radius > 0.5 * min(grid.lengths):
        raise QuadratureWindowError("kernel window exceeds half the periodic box")
    n = int(radius / grid.h)
    cells = np.arange(-n, n + 1)
    w = _smooth_step((np.abs(cells * grid.h) / radius - cfg.window_flat)
                     / (1.0 - cfg.window_flat))
    return cells, w, radius


def _check_window_content(psi, grid: Grid, cfg: KernelConfig, m: float, radius: float):
    flat = cfg.window_flat * radius
    power = np.abs(np.fft.fftn(psi)) ** 2
    total = power.sum()
    for mu in range(grid.ndim):
        k = np.abs(grid.broadcast_axis(grid.wavenumbers(mu), mu)) * np.ones(grid.shape)
        outside = power[k * cfg.epsilon / m > flat].sum()
        if total > 0 and outside / total > 1e-10:
            raise QuadratureWindowError(
                "state has momentum content whose stationary point lies outside "
                "the flat part of the kernel window")


def _direct_step(psi, grid: Grid, cfg: KernelConfig, m: float):
    eps = cfg.epsilon
    cells, w, radius = kernel_window(grid, cfg, m)
    _check_window_content(psi, grid, cfg, m, radius)
    q = q_norm(eps, m, grid.ndim, cfg.metric.signature)
    pot = cfg.potential
    h = grid.h
    if pot is None or pot.kind == "zero":
        out = psi
        for mu, s in enumerate(cfg.metric.signature):
            xi = cells * h
            ker = np.exp(-1j * m * s * xi ** 2 / (2 * eps)) * w * h
            acc = np.zeros_like(out)
            for c, kc in zip(cells, ker):
                acc += kc * np.roll(out, c, axis=mu)
            out = acc
        return out / q
    pts = grid.points()
    ker1 = [np.exp(-1j * m * s * (cells * h) ** 2 / (2 * eps)) * w * h
            for s in cfg.metric.signature]
    out = np.zeros_like(psi)
    for idx in np.ndindex(*(len(cells),) * grid.ndim):
        offs = np.array([cells[i] for i in idx])
        kw = np.prod([ker1[a][i] for a, i in enumerate(idx)])
        if kw == 0:
            continue
        xi = offs * h
        link = np.exp(1j * pot.value(pts - 0.5 * xi) @ xi)
        out += kw * link * np.roll(psi, tuple(offs), axis=tuple(range(grid.ndim)))
    return out / q


def kernel_step(state: WaveState, cfg: KernelConfig) -> WaveState:
    """Advance ``state`` by one step ``cfg.epsilon``."""
    if cfg.metric.dim != state.grid.ndim:
        raise ValueError("metric dim does not match the grid")
    psi = state.amplitudes
    if cfg.mode == "spectral":
        new = _spectral_step(psi, state.grid, cfg, state.m)
    else:
        new = _direct_step(psi, state.grid, cfg, state.m)
    return state.with_amplitudes(new, state.tau + cfg.epsilon)


def evolve(state: WaveState, cfg: KernelConfig, steps: int) -> list[WaveState]:
    out = [state]
    for _ in range(steps):
        out.append(kernel_step(out[-1], cfg))
    return out


def apply_pi_squared(state: WaveState, cfg: KernelConfig,
                     method: Literal["fd", "spectral"] = "fd") -> np.ndarray:
    op = pi_squared_fd if method == "fd" else pi_squared_spectral
    return op(state.amplitudes, state.grid, cfg.metric, cfg.potential)


def tau_derivative(state: WaveState, cfg: KernelConfig,
                   method: Literal["fd", "spectral"] = "spectral") -> np.ndarray:
    """Right side of ``d psi / d tau = (i / 2m) Pi_mu Pi^mu psi``."""
    return 0.5j / state.m * apply_pi_squared(state, cfg, method)


def gs_residual(state_prev: WaveState, state: WaveState, state_next: WaveState,
                cfg: KernelConfig) -> float:
    """L2 norm of ``i (psi+ - psi-) / 2 eps + (1/2m) Pi_mu Pi^mu psi``."""
    for s in (state_prev, state_next):
        if not s.grid.same_as(state.grid):
            raise ValueError("mismatched grids")
    eps = cfg.epsilon
    for a, b in ((state_prev, state), (state, state_next)):
        if abs((b.tau - a.tau) - eps) > 1e-9 * max(1.0, eps):
            raise ValueError("states are not separated by epsilon")
    r = (1j * (state_next.amplitudes - state_prev.amplitudes) / (2 * eps)
         + apply_pi_squared(state, cfg, "fd") / (2 * state.m))
    return state.grid.norm(r)


@dataclass(frozen=True)
class Trajectory(Sequence):
    """States over one period ``[0, 2 pi / m]`` with the anti-periodicity defect."""

    states: tuple[WaveState, ...]
    defect: float = field(default=float("nan"))

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    def __iter__(self) -> Iterator[WaveState]:
        return iter(self.states)

    @property
    def taus(self) -> np.ndarray:
        return np.array([s.tau for s in self.states])


def antiperiodicity_defect(first: WaveState, last: WaveState) -> float:
    """Relative defect ``||psi(T) + psi(0)|| / ||psi(0)||``."""
    ref = first.norm()
    diff = first.grid.norm(last.amplitudes + first.amplitudes)
    return diff / ref if ref > 0 else diff


def period_steps(m: float, eps: float) -> int:
    n = TWO_PI / (m * eps)
    k = int(round(n))
    if k < 1 or abs(n - k) > 1e-9 * max(1.0, n):
        raise ValueError(f"2 pi / (m eps) = {n} is not an integer step count")
    return k


def evolve_period(state0: WaveState, cfg: KernelConfig) -> Trajectory:
    steps = period_steps(state0.m, cfg.epsilon)
    states = evolve(state0, cfg, steps)
    return Trajectory(tuple(states), antiperiodicity_defect(states[0], states[-1]))


def gaussian_packet(grid: Grid, m: float, center=None, width: float = 1.0,
                    k0=None, tau: float = 0.0) -> WaveState:
    """Normalised Gaussian ``exp(-|x - c|^2 / (2 w^2) + i k0.x)``."""
    pts = grid.points()
    c = np.zeros(grid.ndim) if center is None else np.asarray(center, dtype=float)
    k = np.zeros(grid.ndim) if k0 is None else np.asarray(k0, dtype=float)
    psi = np.exp(-np.sum((pts - c) ** 2, axis=-1) / (2 * width ** 2) + 1j * pts @ k)
    psi /= grid.norm(psi)
    return WaveState(grid, psi, tau, m)


def plane_wave(grid: Grid, m: float, k, tau: float = 0.0) -> WaveState:
    pts = grid.points()
    return WaveState(grid, np.exp(1j * pts @ np.asarray(k, dtype=float)), tau, m)


def state_with(state: WaveState, **changes) -> WaveState:
    return replace(state, **changes)
