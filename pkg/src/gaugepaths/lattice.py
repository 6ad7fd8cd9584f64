"""Uniform periodic lattices and the minimally coupled operator ``Pi_mu Pi^mu``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action import Potential
from .geometry import Metric


@dataclass(frozen=True)
class Grid:
    shape: tuple[int, ...]
    h: float
    origin: tuple[float, ...] = ()

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        if not 1 <= len(shape) <= 4:
            raise ValueError(f"grid must have 1..4 axes, got {len(shape)}")
        if not self.h > 0:
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        origin = tuple(float(o) for o in self.origin) if self.origin else (0.0,) * len(shape)
        if len(origin) != len(shape):
            raise ValueError("origin length does not match grid shape")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "origin", origin)

    @classmethod
    def centered(cls, shape: int | tuple[int, ...], h: float) -> "Grid":
        """Grid with spacing ``h`` covering ``[-n h / 2, n h / 2)`` on each axis."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        return cls(shape, h, tuple(-0.5 * n * h for n in shape))

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(n * self.h for n in self.shape)

    @property
    def cell_volume(self) -> float:
        return self.h ** self.ndim

    def is_power_of_two(self) -> bool:
        return all(n > 0 and n & (n - 1) == 0 for n in self.shape)

    def axis(self, i: int) -> np.ndarray:
        return self.origin[i] + self.h * np.arange(self.shape[i])

    def points(self) -> np.ndarray:
        """Coordinates of every site, shape ``shape + (ndim,)``."""
        return np.stack(np.meshgrid(*(self.axis(i) for i in range(self.ndim)),
                                    indexing="ij"), axis=-1)

    def wavenumbers(self, i: int) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.shape[i], d=self.h)

    def broadcast_axis(self, values: np.ndarray, i: int) -> np.ndarray:
        shape = [1] * self.ndim
        shape[i] = -1
        return values.reshape(shape)

    def norm(self, psi: np.ndarray) -> float:
        return float(np.sqrt(np.sum(np.abs(psi) ** 2) * self.cell_volume))

    def same_as(self, other: "Grid") -> bool:
        return (self.shape == other.shape and self.h == other.h
                and self.origin == other.origin)


def _check(psi: np.ndarray, grid: Grid, metric: Metric, pot: Potential | None):
    if psi.shape != grid.shape:
        raise ValueError(f"field shape {psi.shape} does not match grid {grid.shape}")
    if metric.dim != grid.ndim:
        raise ValueError(f"metric dim {metric.dim} != grid ndim {grid.ndim}")
    if pot is not None and pot.dim != grid.ndim:
        raise ValueError(f"potential dim {pot.dim} != grid ndim {grid.ndim}")


def pi_squared_fd(psi, grid: Grid, metric: Metric,
                  pot: Potential | None = None) -> np.ndarray:
    """``Pi_mu Pi^mu psi`` with ``Pi = i d + phi`` by periodic central differences.

    Expanded as ``sum_mu g^mu [-d^2 psi + i (d phi) psi + 2 i phi d psi + phi^2 psi]``;
    second order in ``h``.
    """
    psi = np.asarray(psi, dtype=complex)
    _check(psi, grid, metric, pot)
    h = grid.h
    out = np.zeros_like(psi)
    coupled = pot is not None and pot.kind != "zero"
    if coupled:
        pts = grid.points()
        phi = pot.value(pts)
        jac = pot.jacobian(pts)
    for mu, s in enumerate(metric.signature):
        up = np.roll(psi, -1, axis=mu)
        dn = np.roll(psi, 1, axis=mu)
        term = -(up - 2 * psi + dn) / (h * h)
        if coupled:
            d1 = (up - dn) / (2 * h)
            p = phi[..., mu]
            term = term + 1j * jac[..., mu, mu] * psi + 2j * p * d1 + p * p * psi
        out += s * term
    return out


def pi_squared_spectral(psi, grid: Grid, metric: Metric,
                        pot: Potential | None = None) -> np.ndarray:
    """``Pi_mu Pi^mu psi`` with Fourier derivatives; exact for band-limited fields."""
    psi = np.asarray(psi, dtype=complex)
    _check(psi, grid, metric, pot)
    coupled = pot is not None and pot.kind != "zero"
    phi = pot.value(grid.points()) if coupled else None
    out = np.zeros_like(psi)
    for mu, s in enumerate(metric.signature):
        k = grid.broadcast_axis(grid.wavenumbers(mu), mu)

        def pi(f):
            g = 1j * np.fft.ifft(1j * k * np.fft.fft(f, axis=mu), axis=mu)
            return g + phi[..., mu] * f if coupled else g

        out += s * pi(pi(psi))
    return out
