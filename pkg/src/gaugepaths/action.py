"""Lagrangians, action integrals and Abelian gauge elements along polylines.

The free Lagrangian is ``L^P = m/2 (xdot.xdot + 1)`` (relativistic, contracted
with the metric) or ``m |xdot|^2`` (the non-relativistic reduced action
``m u.dx`` used for desk-scale beams).  The coupling is ``-phi_mu xdot^mu``
with unit charge, and the gauge constant ``alpha`` is fixed to ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import expm

from .geometry import Metric, Polyline

TWO_PI = 2.0 * np.pi

Kinematics = Literal["relativistic", "nonrelativistic"]


class NonUniformFieldError(ValueError):
    """Raised when an operation needs a constant field tensor."""


@dataclass(frozen=True, eq=False)
class Potential:
    """Abelian potential ``phi_mu(x)`` given by covariant components.

    Build instances with the class-method constructors: ``zero``, ``uniform``,
    ``linear`` (constant field tensor), ``solenoid`` (ideal flux line) and
    ``grid`` (sampled on a rectilinear lattice).
    """

    kind: str
    dim: int
    phi: np.ndarray | None = None
    gradient: np.ndarray | None = None
    flux: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)
    axes: tuple[int, int] = (0, 1)
    grid_coords: tuple[np.ndarray, ...] = ()
    grid_values: np.ndarray | None = None
    _interp: object = field(default=None, repr=False)

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "Potential":
        return cls("zero", dim)

    @classmethod
    def uniform(cls, phi) -> "Potential":
        phi = np.asarray(phi, dtype=float).reshape(-1)
        if not np.all(np.isfinite(phi)):
            raise ValueError("uniform potential must be finite")
        return cls("uniform", phi.size, phi=phi)

    @classmethod
    def linear(cls, phi0, gradient) -> "Potential":
        """``phi_mu(x) = phi0_mu + gradient[mu, nu] x^nu``."""
        phi0 = np.asarray(phi0, dtype=float).reshape(-1)
        g = np.asarray(gradient, dtype=float)
        if g.shape != (phi0.size, phi0.size):
            raise ValueError(f"gradient must have shape {(phi0.size,) * 2}")
        return cls("linear", phi0.size, phi=phi0, gradient=g)

    @classmethod
    def uniform_magnetic(cls, b: float, dim: int = 2,
                         axes: tuple[int, int] = (0, 1)) -> "Potential":
        """Symmetric gauge with ``F_{ij} = b`` on the given pair of axes."""
        g = np.zeros((dim, dim))
        i, j = axes
        # F_ij = d_i phi_j - d_j phi_i = g[j, i] - g[i, j]
        g[j, i] = 0.5 * b
        g[i, j] = -0.5 * b
        return cls.linear(np.zeros(dim), g)

    @classmethod
    def solenoid(cls, flux: float, center=(0.0, 0.0), dim: int = 2,
                 axes: tuple[int, int] = (0, 1)) -> "Potential":
        if dim < 2:
            raise ValueError("a solenoid needs at least 2 dimensions")
        if len(set(axes)) != 2 or max(axes) >= dim:
            raise ValueError(f"invalid solenoid axes {axes} for dim {dim}")
        c = tuple(float(v) for v in center)
        if len(c) != 2:
            raise ValueError("solenoid centre must be a 2-vector")
        return cls("solenoid", dim, flux=float(flux), center=c,
                   axes=tuple(int(a) for a in axes))

    @classmethod
    def grid(cls, coords, values) -> "Potential":
        coords = tuple(np.asarray(c, dtype=float) for c in coords)
        values = np.asarray(values, dtype=float)
        dim = len(coords)
        if values.shape != tuple(c.size for c in coords) + (dim,):
            raise ValueError(
                f"grid values shape {values.shape} does not match coords")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid potential values must be finite")
        interp = RegularGridInterpolator(coords, values, method="linear",
                                         bounds_error=True)
        return cls("grid", dim, grid_coords=coords, grid_values=values,
                   _interp=interp)

    def scaled(self, factor: float) -> "Potential":
        """The potential multiplied by ``factor`` (e.g. a charge)."""
        if self.kind == "zero":
            return self
        if self.kind == "uniform":
            return Potential.uniform(self.phi * factor)
        if self.kind == "linear":
            return Potential.linear(self.phi * factor, self.gradient * factor)
        if self.kind == "solenoid":
            return Potential.solenoid(self.flux * factor, self.center,
                                      self.dim, self.axes)
        return Potential.grid(self.grid_coords, self.grid_values * factor)

    def with_flux(self, flux: float) -> "Potential":
        if self.kind != "solenoid":
            raise ValueError("only solenoid potentials carry a flux")
        return Potential.solenoid(flux, self.center, self.dim, self.axes)

    # evaluation ---------------------------------------------------------
    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ValueError(
                f"points of dim {x.shape[-1]} for a {self.dim}-dim potential")
        return x

    def _grid_eval(self, x: np.ndarray, values=None) -> np.ndarray:
        flat = x.reshape(-1, self.dim)
        lo = np.array([c[0] for c in self.grid_coords])
        hi = np.array([c[-1] for c in self.grid_coords])
        if np.any(flat < lo) or np.any(flat > hi):
            raise ValueError("path exits the grid potential domain")
        interp = self._interp if values is None else RegularGridInterpolator(
            self.grid_coords, values, method="linear", bounds_error=True)
        return interp(flat).reshape(x.shape[:-1] + (-1,))

    def value(self, x) -> np.ndarray:
        """``phi_mu`` at points ``x`` of shape ``(..., dim)``."""
        x = self._check(x)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "uniform":
            return np.broadcast_to(self.phi, x.shape).copy()
        if self.kind == "linear":
            return self.phi + x @ self.gradient.T
        if self.kind == "solenoid":
            i, j = self.axes
            dx = x[..., i] - self.center[0]
            dy = x[..., j] - self.center[1]
            r2 = dx * dx + dy * dy
            out = np.zeros_like(x)
            scale = self.flux / TWO_PI
            out[..., i] = -scale * dy / r2
            out[..., j] = scale * dx / r2
            return out
        return self._grid_eval(x)

    def jacobian(self, x) -> np.ndarray:
        """``d_nu phi_mu`` with shape ``(..., dim, dim)`` indexed ``[mu, nu]``."""
        x = self._check(x)
        out = np.zeros(x.shape + (self.dim,))
        if self.kind in ("zero", "uniform"):
            return out
        if self.kind == "linear":
            return np.broadcast_to(self.gradient, out.shape).copy()
        if self.kind == "solenoid":
            i, j = self.axes
            dx = x[..., i] - self.center[0]
            dy = x[..., j] - self.center[1]
            r2 = dx * dx + dy * dy
            s = self.flux / TWO_PI / (r2 * r2)
            out[..., i, i] = s * 2 * dx * dy
            out[..., i, j] = s * (dy * dy - dx * dx)
            out[..., j, i] = s * (dy * dy - dx * dx)
            out[..., j, j] = -s * 2 * dx * dy
            return out
        grads = [np.gradient(self.grid_values[..., mu], *self.grid_coords)
                 for mu in range(self.dim)]
        for mu in range(self.dim):
            g = grads[mu] if self.dim > 1 else [grads[mu]]
            for nu in range(self.dim):
                out[..., mu, nu] = self._grid_eval(x, g[nu][..., None])[..., 0]
        return out

    def field_tensor(self, x) -> np.ndarray:
        """``F_{mu nu} = d_mu phi_nu - d_nu phi_mu`` at ``x``."""
        jac = self.jacobian(x)
        return np.swapaxes(jac, -1, -2) - jac

    def uniform_field_tensor(self) -> np.ndarray:
        if self.kind in ("zero", "uniform"):
            return np.zeros((self.dim, self.dim))
        if self.kind == "linear":
            return self.gradient.T - self.gradient
        if self.kind == "grid":
            nodes = np.stack(np.meshgrid(*self.grid_coords, indexing="ij"), -1)
            f = self.field_tensor(nodes).reshape(-1, self.dim, self.dim)
            ref = f.mean(axis=0)
            if np.max(np.abs(f - ref)) > 1e-9 * max(1.0, np.max(np.abs(ref))):
                raise NonUniformFieldError("grid potential has a non-uniform field")
            return ref
        raise NonUniformFieldError(f"{self.kind} potential has no uniform field tensor")

    # line integrals -----------------------------------------------------
    def winding_angles(self, x) -> np.ndarray:
        """Per-segment angle swept around the solenoid centre, shape ``(..., n-1)``."""
        i, j = self.axes
        px = x[..., i] - self.center[0]
        py = x[..., j] - self.center[1]
        cross = px[..., :-1] * py[..., 1:] - py[..., :-1] * px[..., 1:]
        dot = px[..., :-1] * px[..., 1:] + py[..., :-1] * py[..., 1:]
        return np.arctan2(cross, dot)

    def segment_integrals(self, x) -> np.ndarray:
        """``int phi_mu dx^mu`` over each segment of polylines ``(..., n, dim)``."""
        x = self._check(x)
        dx = np.diff(x, axis=-2)
        if self.kind == "zero":
            return np.zeros(dx.shape[:-1])
        if self.kind == "uniform":
            return dx @ self.phi
        if self.kind == "solenoid":
            return self.flux / TWO_PI * self.winding_angles(x)
        mid = 0.5 * (x[..., 1:, :] + x[..., :-1, :])
        return np.sum(self.value(mid) * dx, axis=-1)

    def line_integral(self, x) -> np.ndarray | float:
        """``int phi_mu dx^mu`` along polylines ``(..., n, dim)``.

        Exact for zero, uniform and linear kinds and for the solenoid (winding
        angle); midpoint rule for grids.  Uniform potentials use the endpoint
        difference, so closed loops give exactly zero.
        """
        x = self._check(x)
        if self.kind == "uniform":
            out = (x[..., -1, :] - x[..., 0, :]) @ self.phi
        else:
            out = np.sum(self.segment_integrals(x), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def interior_gradient(self, x) -> np.ndarray:
        """Gradient of ``line_integral`` with respect to each vertex of one polyline."""
        x = self._check(x)
        grad = np.zeros_like(x)
        if self.kind in ("zero", "uniform"):
            return grad
        if self.kind == "solenoid":
            i, j = self.axes
            px = x[:, i] - self.center[0]
            py = x[:, j] - self.center[1]
            r2 = px * px + py * py
            # vertex k enters segment k-1 as +theta(x_k) and segment k as -theta(x_k)
            w = np.zeros(len(x))
            w[0], w[-1] = -1.0, 1.0
            grad[:, i] = w * (-py / r2) * self.flux / TWO_PI
            grad[:, j] = w * (px / r2) * self.flux / TWO_PI
            return grad
        dx = np.diff(x, axis=0)
        mid = 0.5 * (x[1:] + x[:-1])
        val = self.value(mid)
        jt = np.einsum("kmn,km->kn", self.jacobian(mid), dx)
        grad[:-1] += -val + 0.5 * jt
        grad[1:] += val + 0.5 * jt
        return grad


@dataclass(frozen=True)
class LagrangianSpec:
    m: float
    potential: Potential | None = None
    metric: Metric | None = None
    kinematics: Kinematics = "relativistic"

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if self.kinematics not in ("relativistic", "nonrelativistic"):
            raise ValueError(f"unknown kinematics {self.kinematics!r}")

    def metric_for(self, dim: int) -> Metric:
        return self.metric or Metric.minkowski(dim)

    def potential_for(self, dim: int) -> Potential:
        return self.potential if self.potential is not None else Potential.zero(dim)


@dataclass(frozen=True)
class PhaseLedger:
    free_action: float
    potential_action: float

    @property
    def action(self) -> float:
        return self.free_action - self.potential_action

    @property
    def phase(self) -> complex:
        return complex(np.exp(1j * self.action))


@dataclass(frozen=True)
class StateGauge:
    """Endpoint gauge factors ``kappa`` keyed by endpoint label."""

    kappa: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.kappa.items():
            if abs(abs(v) - 1.0) > 1e-12:
                raise ValueError(f"kappa[{k!r}] is not unit modulus")

    def get(self, label) -> complex:
        return complex(self.kappa.get(label, 1.0))

    def kicked(self, label, delta_s: float) -> "StateGauge":
        new = dict(self.kappa)
        new[label] = self.get(label) * kappa_update(delta_s)
        return StateGauge(new)


# free part ------------------------------------------------------------------

def segment_free_actions(x, tau, spec: LagrangianSpec) -> np.ndarray:
    """Free action of each linear segment; exact for constant velocity."""
    x = np.asarray(x, dtype=float)
    tau = np.asarray(tau, dtype=float)
    dx = np.diff(x, axis=-2)
    dtau = np.diff(tau, axis=-1)
    if np.any(dtau == 0):
        raise ValueError("zero-length tau segment")
    if spec.kinematics == "nonrelativistic":
        return spec.m * np.sum(dx * dx, axis=-1) / dtau
    g = spec.metric_for(x.shape[-1]).diag
    return 0.5 * spec.m * (np.sum(g * dx * dx, axis=-1) / dtau + dtau)


def free_action(path: Polyline, spec: LagrangianSpec) -> float:
    return float(np.sum(segment_free_actions(path.x, path.tau, spec)))


def potential_action(path: Polyline, pot: Potential) -> float:
    return float(pot.line_integral(path.x))


def ledger(path: Polyline, spec: LagrangianSpec) -> PhaseLedger:
    return PhaseLedger(free_action(path, spec),
                       potential_action(path, spec.potential_for(path.dim)))


def total_action(path: Polyline, spec: LagrangianSpec) -> float:
    return ledger(path, spec).action


def cumulative_action(path: Polyline, spec: LagrangianSpec) -> np.ndarray:
    """Accumulated ``S(tau)`` at each vertex, starting from 0."""
    seg = (segment_free_actions(path.x, path.tau, spec)
           - spec.potential_for(path.dim).segment_integrals(path.x))
    return np.concatenate([[0.0], np.cumsum(seg)])


def group_element(path: Polyline, pot: Potential) -> complex:
    return complex(np.exp(1j * potential_action(path, pot)))


def rod_transport(phi_a: complex, path: Polyline, pot: Potential) -> complex:
    return group_element(path, pot) * complex(phi_a)


def v_element(path: Polyline, spec: LagrangianSpec) -> complex:
    """``exp(i (S^P - int phi dx))``; equal to 1 on physical paths."""
    return ledger(path, spec).phase


def kappa_update(delta_s: float) -> complex:
    return complex(np.exp(1j * delta_s))


# variations -----------------------------------------------------------------

def _free_gradient(path: Polyline, spec: LagrangianSpec) -> np.ndarray:
    dx = np.diff(path.x, axis=0)
    dtau = np.diff(path.tau)
    if np.any(dtau == 0):
        raise ValueError("zero-length tau segment")
    if spec.kinematics == "nonrelativistic":
        vel = 2.0 * spec.m * dx / dtau[:, None]
    else:
        vel = spec.m * spec.metric_for(path.dim).diag * dx / dtau[:, None]
    grad = np.zeros_like(path.x)
    grad[1:] += vel
    grad[:-1] -= vel
    return grad


def el_residual(path: Polyline, spec: LagrangianSpec, delta) -> float:
    """First variation of the discrete action along ``delta`` (tau held fixed).

    Vanishes for every admissible ``delta`` iff each interior vertex satisfies
    the discrete Euler-Lagrange equation.
    """
    delta = np.asarray(delta, dtype=float)
    if delta.shape != path.x.shape:
        raise ValueError(f"delta shape {delta.shape} != path shape {path.x.shape}")
    if np.any(delta[0] != 0) or np.any(delta[-1] != 0):
        raise ValueError("delta must vanish at the endpoints")
    grad = (_free_gradient(path, spec)
            - spec.potential_for(path.dim).interior_gradient(path.x))
    return float(np.sum(grad * delta))


def perturbed(path: Polyline, delta) -> Polyline:
    return Polyline(path.x + np.asarray(delta, dtype=float), path.tau)


def loop_bivector(base: Polyline, varied: Polyline) -> np.ndarray:
    """Oriented area ``sigma^{mu nu}`` of the loop along ``varied`` and back along ``base``."""
    loop = np.vstack([varied.x, base.x[-2::-1]])
    sigma = 0.5 * np.einsum("km,kn->mn", loop[:-1], loop[1:])
    return sigma - sigma.T


def lorentz_loop_check(base: Polyline, varied: Polyline,
                       spec: LagrangianSpec) -> tuple[complex, complex]:
    """Compare both sides of the infinitesimal-loop condition.

    The loop runs along ``varied`` and back along ``base`` (same tau samples,
    same endpoints).  Returns ``(lhs, rhs)`` with

    * lhs = ``exp(i oint phi dx)``, the gauge element around the loop, which
      for a constant field equals ``exp(i F_{mu nu} dsigma^{mu nu})``;
    * rhs = ``1 + i dS^P`` where ``dS^P = -sum pdot_mu delta x^mu dtau`` uses
      the momenta of ``base`` from finite differences.

    If ``base`` obeys the Lorentz equation the two agree up to O(area^2);
    otherwise the mismatch is first order in the area.
    """
    pot = spec.potential_for(base.dim)
    pot.uniform_field_tensor()
    if len(base) != len(varied) or not np.array_equal(base.tau, varied.tau):
        raise ValueError("base and varied paths must share tau samples")
    if not (np.allclose(base.x[0], varied.x[0], rtol=0, atol=1e-12)
            and np.allclose(base.x[-1], varied.x[-1], rtol=0, atol=1e-12)):
        raise ValueError("base and varied paths must share endpoints")
    loop = np.vstack([varied.x, base.x[-2::-1]])
    flux = float(pot.line_integral(loop))

    t = base.tau
    h = np.diff(t)
    x = base.x
    acc = 2.0 * (np.diff(x, axis=0)[1:] / h[1:, None]
                 - np.diff(x, axis=0)[:-1] / h[:-1, None]) / (h[1:] + h[:-1])[:, None]
    if spec.kinematics == "nonrelativistic":
        pdot = 2.0 * spec.m * acc
    else:
        pdot = spec.m * spec.metric_for(base.dim).diag * acc
    weights = 0.5 * (h[1:] + h[:-1])
    dx = (varied.x - base.x)[1:-1]
    ds_free = -float(np.sum(np.sum(pdot * dx, axis=1) * weights))
    return complex(np.exp(1j * flux)), 1.0 + 1j * ds_free


def classical_trajectory(x0, v0, taus, spec: LagrangianSpec) -> Polyline:
    """Exact trajectory in a constant field tensor, sampled at ``taus``.

    Solves ``M xddot = F^T xdot`` with ``M = m g`` (relativistic) or ``2m``
    (non-relativistic), starting at ``tau = taus[0]``.
    """
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    taus = np.asarray(taus, dtype=float)
    dim = x0.size
    fmn = spec.potential_for(dim).uniform_field_tensor()
    if spec.kinematics == "nonrelativistic":
        minv = np.eye(dim) / (2.0 * spec.m)
    else:
        minv = np.diag(1.0 / (spec.m * spec.metric_for(dim).diag))
    omega = minv @ fmn.T
    aug = np.zeros((2 * dim, 2 * dim))
    aug[:dim, :dim] = omega
    aug[dim:, :dim] = np.eye(dim)
    pts = np.empty((taus.size, dim))
    for k, s in enumerate(taus - taus[0]):
        e = expm(aug * s)
        pts[k] = x0 + e[dim:, :dim] @ v0
    return Polyline(pts, taus)
