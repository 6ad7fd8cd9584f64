"""Classification of paths by the condition ``exp(i S) = 1``.

Exact equality has measure zero under sampling, so verdicts use a phase
tolerance band around multiples of 2 pi.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action import LagrangianSpec, TWO_PI, cumulative_action, total_action
from .geometry import Polyline

DEFAULT_TOL = 1e-6


def wrap_phase(s):
    """Map phases to ``(-pi, pi]``."""
    out = np.pi - np.mod(np.pi - np.asarray(s, dtype=float), TWO_PI)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class EquivalentPoints:
    taus: tuple[float, ...]
    indices: tuple[int, ...]
    points: tuple[tuple[float, ...], ...]

    def __len__(self) -> int:
        return len(self.taus)

    def spacings(self) -> np.ndarray:
        """Euclidean distance between consecutive equivalent points."""
        p = np.asarray(self.points)
        if len(p) < 2:
            return np.empty(0)
        return np.linalg.norm(np.diff(p, axis=0), axis=1)


@dataclass(frozen=True)
class PathVerdict:
    physical: bool
    residual_phase: float
    tolerance: float


def _check_tol(tol: float) -> None:
    if not 0 < tol < np.pi:
        raise ValueError(f"phase tolerance must lie in (0, pi), got {tol}")


def verdict(phase: float, tol: float) -> PathVerdict:
    r = wrap_phase(phase)
    return PathVerdict(abs(r) <= tol, r, tol)


def find_equivalent_points(path: Polyline, spec: LagrangianSpec,
                           tol: float = DEFAULT_TOL) -> EquivalentPoints:
    """Points where the accumulated action crosses a nonzero multiple of 2 pi.

    Within a segment the action is taken as linear in tau, so crossings are
    located by exact linear inversion.  The start point itself (S = 0) is not
    listed.  ``tol`` merges a crossing that lands on a vertex with its twin.
    """
    _check_tol(tol)
    if not path.monotonic:
        raise ValueError("path must be monotonic in tau")
    s = cumulative_action(path, spec)
    taus, idx, pts = [], [], []
    for k in range(len(path) - 1):
        s0, s1 = s[k], s[k + 1]
        if s1 == s0:
            continue
        lo, hi = sorted((s0, s1))
        j_lo = int(np.ceil(lo / TWO_PI))
        j_hi = int(np.floor(hi / TWO_PI))
        steps = range(j_lo, j_hi + 1) if s1 > s0 else range(j_hi, j_lo - 1, -1)
        for j in steps:
            if j == 0:
                continue
            f = (j * TWO_PI - s0) / (s1 - s0)
            t = path.tau[k] + f * (path.tau[k + 1] - path.tau[k])
            if taus and idx[-1] == j and abs(t - taus[-1]) <= tol:
                continue
            taus.append(float(t))
            idx.append(j)
            pts.append(tuple(path.x[k] + f * (path.x[k + 1] - path.x[k])))
    return EquivalentPoints(tuple(taus), tuple(idx), tuple(pts))


def is_physical(path: Polyline, spec: LagrangianSpec,
                tol: float = DEFAULT_TOL) -> PathVerdict:
    _check_tol(tol)
    if not path.monotonic:
        raise ValueError("path must be monotonic in tau")
    return verdict(total_action(path, spec), tol)


def de_broglie(m: float, u_bar: float) -> float:
    if not (m > 0 and u_bar > 0):
        raise ValueError(f"need m > 0 and u_bar > 0, got m={m}, u_bar={u_bar}")
    return TWO_PI / (m * u_bar)


def interfering_pair(rho: Polyline, rho_prime: Polyline, spec: LagrangianSpec,
                     tol: float = DEFAULT_TOL,
                     endpoint_tol: float = 1e-9) -> PathVerdict:
    """Test ``exp(i (S(rho) - S(rho')))`` = 1 for two paths ending together.

    The endpoint gauge factor is common to both arms and cancels.
    """
    _check_tol(tol)
    if not (rho.monotonic and rho_prime.monotonic):
        raise ValueError("both paths must be monotonic in tau")
    if np.linalg.norm(rho.end - rho_prime.end) > endpoint_tol:
        raise ValueError("terminal points do not coincide")
    return verdict(total_action(rho, spec) - total_action(rho_prime, spec), tol)


def physical_mask(phases, tol: float) -> np.ndarray:
    """Vectorised hard-window verdict for an array of phases."""
    return np.abs(wrap_phase(phases)) <= tol
