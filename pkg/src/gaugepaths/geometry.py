"""Points, polylines, metric contractions and the centre-of-momentum frame.

Coordinates are natural units (hbar = c = 1).  A path is a piecewise-linear
polyline through points ``(x, tau)`` where ``tau`` is the evolution parameter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Metric:
    """Diagonal metric with entries +1 (timelike) or -1 (spacelike)."""

    dim: int
    signature: tuple[int, ...] = ()

    def __post_init__(self):
        if not 1 <= self.dim <= 4:
            raise ValueError(f"metric dim must be in 1..4, got {self.dim}")
        sig = tuple(int(s) for s in self.signature) if self.signature else (
            (1,) + (-1,) * (self.dim - 1))
        if len(sig) != self.dim:
            raise ValueError(
                f"signature length {len(sig)} does not match dim {self.dim}")
        if any(s not in (1, -1) for s in sig):
            raise ValueError(f"signature entries must be +1 or -1: {sig}")
        if sig.count(1) > 1:
            raise ValueError(f"at most one timelike axis allowed: {sig}")
        object.__setattr__(self, "signature", sig)

    @classmethod
    def minkowski(cls, dim: int = 4) -> "Metric":
        return cls(dim)

    @classmethod
    def spatial(cls, dim: int) -> "Metric":
        """Purely spacelike metric, used for desk-scale propagation."""
        return cls(dim, (-1,) * dim)

    @property
    def diag(self) -> np.ndarray:
        return np.asarray(self.signature, dtype=float)

    @property
    def time_axis(self) -> int | None:
        return self.signature.index(1) if 1 in self.signature else None

    @property
    def space_axes(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.signature) if s == -1)


def inner(xi, metric: Metric) -> float:
    """Return ``g_{mu nu} xi^mu xi^nu`` for the diagonal metric."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != metric.dim:
        raise ValueError(
            f"vector of length {xi.shape[-1]} for metric of dim {metric.dim}")
    out = np.sum(metric.diag * xi * xi, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EvolvedPoint:
    x: tuple[float, ...]
    tau: float

    def __post_init__(self):
        x = tuple(float(v) for v in np.atleast_1d(self.x))
        if not all(np.isfinite(x)) or not np.isfinite(self.tau):
            raise ValueError("point components must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "tau", float(self.tau))


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered samples of a piecewise-linear path.

    ``x`` has shape ``(n, dim)`` and ``tau`` shape ``(n,)``; both arrays are
    stored read-only.
    """

    x: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        tau = np.array(self.tau, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[0] != tau.shape[0]:
            raise ValueError(
                f"x shape {x.shape} inconsistent with tau shape {tau.shape}")
        if x.shape[0] < 2:
            raise ValueError("a polyline needs at least 2 samples")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(tau))):
            raise ValueError("polyline samples must be finite")
        x.flags.writeable = False
        tau.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "tau", tau)

    @classmethod
    def from_points(cls, points: Sequence[EvolvedPoint]) -> "Polyline":
        return cls(np.array([p.x for p in points]),
                   np.array([p.tau for p in points]))

    @classmethod
    def straight(cls, start, end, tau0: float, tau1: float,
                 n: int = 2) -> "Polyline":
        t = np.linspace(0.0, 1.0, n)
        start = np.atleast_1d(np.asarray(start, dtype=float))
        end = np.atleast_1d(np.asarray(end, dtype=float))
        return cls(start[None, :] * (1 - t[:, None]) + end[None, :] * t[:, None],
                   tau0 + (tau1 - tau0) * t)

    @property
    def samples(self) -> list[EvolvedPoint]:
        return [EvolvedPoint(tuple(xi), ti) for xi, ti in zip(self.x, self.tau)]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    @property
    def monotonic(self) -> bool:
        return bool(np.all(np.diff(self.tau) > 0))

    @property
    def start(self) -> np.ndarray:
        return self.x[0]

    @property
    def end(self) -> np.ndarray:
        return self.x[-1]

    def __len__(self) -> int:
        return self.x.shape[0]

    def length(self) -> float:
        """Euclidean length of the spatial polyline."""
        return float(np.sum(np.linalg.norm(np.diff(self.x, axis=0), axis=1)))

    def mean_velocity(self) -> np.ndarray:
        dtau = self.tau[-1] - self.tau[0]
        if dtau == 0:
            raise ValueError("path has zero tau extent")
        return (self.x[-1] - self.x[0]) / dtau

    def concat(self, other: "Polyline") -> "Polyline":
        """Join ``self`` and ``other``; other's first sample must equal self's last."""
        if not (np.array_equal(self.x[-1], other.x[0])
                and self.tau[-1] == other.tau[0]):
            raise ValueError("paths do not share the junction sample")
        return Polyline(np.vstack([self.x, other.x[1:]]),
                        np.concatenate([self.tau, other.tau[1:]]))

    def reversed(self) -> "Polyline":
        return Polyline(self.x[::-1], self.tau[::-1])


def resample(path: Polyline, n: int) -> Polyline:
    """Piecewise-linear reparameterisation with ``n`` samples.

    For ``n >= len(path)`` every original vertex is kept and the extra samples
    are distributed over the segments in proportion to their chord length in
    (x, tau) space, so the geometry is unchanged.  For smaller ``n`` the path
    is sampled uniformly in that chord length, which cuts corners.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    pts = np.column_stack([path.x, path.tau])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    n0 = len(path)
    if n >= n0:
        extra = n - n0
        if extra == 0:
            return path
        total = seg.sum()
        share = seg / total * extra if total > 0 else np.full(seg.size, extra / seg.size)
        alloc = np.floor(share).astype(int)
        rest = extra - alloc.sum()
        if rest:
            order = np.argsort(-(share - alloc), kind="stable")
            alloc[order[:rest]] += 1
        out = [pts[:1]]
        for i, k in enumerate(alloc):
            t = np.arange(1, k + 2) / (k + 1)
            chunk = pts[i] * (1 - t[:, None]) + pts[i + 1] * t[:, None]
            chunk[-1] = pts[i + 1]
            out.append(chunk)
        new = np.vstack(out)
    else:
        s = np.concatenate([[0.0], np.cumsum(seg)])
        targets = np.linspace(0.0, s[-1], n)
        new = np.column_stack([np.interp(targets, s, pts[:, j])
                               for j in range(pts.shape[1])])
        new[0], new[-1] = pts[0], pts[-1]
    return Polyline(new[:, :-1], new[:, -1])


@dataclass(frozen=True)
class FrameBoost:
    velocity: tuple[float, ...] = field(default=())

    def __post_init__(self):
        v = tuple(float(c) for c in np.atleast_1d(self.velocity))
        if np.dot(v, v) >= 1.0:
            raise ValueError(f"boost speed must be < 1, got {np.linalg.norm(v)}")
        object.__setattr__(self, "velocity", v)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))

    def inverse(self) -> "FrameBoost":
        return FrameBoost(tuple(-c for c in self.velocity))


def _boost_matrix(b: FrameBoost, metric: Metric) -> np.ndarray:
    t = metric.time_axis
    if t is None:
        raise ValueError("boost needs a metric with one timelike axis")
    if metric.signature.count(1) != 1:
        raise ValueError("boost needs exactly one timelike axis")
    space = metric.space_axes
    v = np.zeros(len(space)) if not b.velocity else np.asarray(b.velocity)
    if v.size != len(space):
        raise ValueError(
            f"boost has {v.size} components, metric has {len(space)} spatial axes")
    lam = np.eye(metric.dim)
    v2 = float(v @ v)
    if v2 == 0.0:
        return lam
    gamma = 1.0 / np.sqrt(1.0 - v2)
    lam[t, t] = gamma
    for a, i in enumerate(space):
        lam[t, i] = lam[i, t] = -gamma * v[a]
        for c, j in enumerate(space):
            lam[i, j] += (gamma - 1.0) * v[a] * v[c] / v2
    return lam


def boost(point: EvolvedPoint, b: FrameBoost, metric: Metric) -> EvolvedPoint:
    """Lorentz-boost the spacetime components of ``point``; tau is unchanged."""
    x = _boost_matrix(b, metric) @ np.asarray(point.x)
    return EvolvedPoint(tuple(x), point.tau)


def boost_path(path: Polyline, b: FrameBoost, metric: Metric) -> Polyline:
    lam = _boost_matrix(b, metric)
    return Polyline(path.x @ lam.T, path.tau)


def com_frame(paths: Iterable[Polyline], metric: Metric | None = None) -> FrameBoost:
    """Boost into the frame where the summed spatial mean velocities vanish.

    Each path contributes its mean velocity ``(x_end - x_start) / dtau``.
    """
    paths = list(paths)
    if not paths:
        raise ValueError("need at least one path")
    metric = metric or Metric.minkowski(paths[0].dim)
    t = metric.time_axis
    if t is None:
        raise ValueError("centre-of-momentum frame needs a timelike axis")
    total = np.zeros(metric.dim)
    for p in paths:
        u = p.mean_velocity()
        if inner(u, metric) <= 0:
            raise ValueError("path mean velocity is not timelike")
        total += u
    if inner(total, metric) <= 0 or total[t] <= 0:
        raise ValueError("summed velocity is not future timelike")
    return FrameBoost(tuple(total[list(metric.space_axes)] / total[t]))
