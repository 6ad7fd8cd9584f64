"""Monte-Carlo intensity estimators built from sampled path alternatives.

Paths are piecewise linear with Gaussian jitter on interior knots and are
traversed at constant speed ``u_bar``, so the reduced free action of a path is
``m u_bar * length``.  Intensity in a screen bin is the number of phase-matching
pairs plus the number of single-arm physical paths, divided by the number of
pairs tested.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Literal, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from .action import LagrangianSpec, Potential, TWO_PI, segment_free_actions
from .geometry import Polyline
from .physical_paths import de_broglie, wrap_phase

CHUNK = 1 << 14
FLUX_BITS = 32
MAX_RESAMPLE = 64


class PeakTrackingError(RuntimeError):
    """A fringe could not be followed unambiguously."""


@dataclass(frozen=True)
class DetectorKick:
    mean: float = 0.0
    spread: float = 0.0

    def __post_init__(self):
        if self.spread < 0:
            raise ValueError("kick spread must be nonnegative")


@dataclass(frozen=True)
class SamplingConfig:
    m: float = 1.0
    u_bar: float = 1.0
    knots: int = 4
    jitter: float = 1.0
    samples: int = 100_000
    phase_tol: float = 0.3
    n_bins: int = 200
    seed: int = 0

    def __post_init__(self):
        if not (self.m > 0 and self.u_bar > 0):
            raise ValueError("m and u_bar must be positive")
        if self.samples <= 0 or self.n_bins <= 0:
            raise ValueError("samples and n_bins must be positive")
        if self.knots < 0 or self.jitter < 0:
            raise ValueError("knots and jitter must be nonnegative")
        if not 0 < self.phase_tol < np.pi:
            raise ValueError("phase_tol must lie in (0, pi)")

    @property
    def wavelength(self) -> float:
        return de_broglie(self.m, self.u_bar)

    @property
    def k(self) -> float:
        return self.m * self.u_bar


def _vec(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim != 1 or a.size < 2 or not np.all(np.isfinite(a)):
        raise ValueError(f"expected a finite point with >= 2 coordinates, got {v!r}")
    return a


@dataclass(frozen=True)
class BeamConfig(SamplingConfig):
    """Free beam from ``source`` along ``direction``; screen spans ``[start, stop]`` on the axis."""

    source: tuple[float, ...] = (0.0, 0.0)
    direction: tuple[float, ...] = (1.0, 0.0)
    start: float = 0.5 * TWO_PI
    stop: float = 10.5 * TWO_PI
    jitter: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        if _vec(self.source).size != _vec(self.direction).size:
            raise ValueError("source and direction dimensions differ")
        if not np.linalg.norm(self.direction) > 0:
            raise ValueError("direction must be nonzero")
        if not 0 < self.start < self.stop:
            raise ValueError("need 0 < start < stop")


@dataclass(frozen=True)
class SlitConfig(SamplingConfig):
    slit_a: tuple[float, ...] = (0.0, 4 * np.pi)
    slit_b: tuple[float, ...] = (0.0, -4 * np.pi)
    screen_start: tuple[float, ...] = (80 * np.pi, -50 * np.pi)
    screen_end: tuple[float, ...] = (80 * np.pi, 50 * np.pi)
    detector_kick: DetectorKick | None = None
    window: Literal["hard", "soft"] = "hard"
    blocked: Literal["a", "b"] | None = None
    random_kappa: bool = True
    estimator: Literal["count", "amplitude"] = "count"
    amplitude_norm: Literal["square", "abs"] = "square"
    potential: Potential | None = None

    def __post_init__(self):
        super().__post_init__()
        dims = {_vec(p).size for p in (self.slit_a, self.slit_b,
                                       self.screen_start, self.screen_end)}
        if len(dims) != 1:
            raise ValueError("slit and screen points have different dimensions")
        if np.allclose(self.screen_start, self.screen_end):
            raise ValueError("screen segment has zero length")
        if self.window not in ("hard", "soft"):
            raise ValueError(f"unknown window {self.window!r}")
        if self.blocked not in (None, "a", "b"):
            raise ValueError(f"blocked must be None, 'a' or 'b', got {self.blocked!r}")
        if self.estimator not in ("count", "amplitude"):
            raise ValueError(f"unknown estimator {self.estimator!r}")
        if self.amplitude_norm not in ("square", "abs"):
            raise ValueError(f"unknown amplitude_norm {self.amplitude_norm!r}")

    @classmethod
    def standard(cls, m: float = 1.0, u_bar: float = 1.0, separation: float = 4.0,
                 distance: float = 40.0, fringes: float = 2.5, **kw) -> "SlitConfig":
        """Symmetric slits ``separation`` wavelengths apart, screen ``distance`` away.

        The screen spans ``+-fringes`` small-angle fringe spacings.
        """
        lam = de_broglie(m, u_bar)
        d, L = separation * lam, distance * lam
        half = fringes * lam * L / d
        return cls(m=m, u_bar=u_bar, slit_a=(0.0, d / 2), slit_b=(0.0, -d / 2),
                   screen_start=(L, -half), screen_end=(L, half), **kw)

    @property
    def dim(self) -> int:
        return len(self.slit_a)


@dataclass(frozen=True)
class ABConfig(SamplingConfig):
    """Source ``a``, reflectors ``c`` and ``d``, screen segment, solenoid of flux ``flux``."""

    source: tuple[float, float] = (0.0, 0.0)
    reflector_c: tuple[float, float] = (80 * np.pi, 4 * np.pi)
    reflector_d: tuple[float, float] = (80 * np.pi, -4 * np.pi)
    screen_start: tuple[float, float] = (160 * np.pi, -50 * np.pi)
    screen_end: tuple[float, float] = (160 * np.pi, 50 * np.pi)
    solenoid: tuple[float, float] = (80 * np.pi, 0.0)
    flux: float = 0.0
    random_kappa: bool = True

    def __post_init__(self):
        super().__post_init__()
        for p in (self.source, self.reflector_c, self.reflector_d,
                  self.screen_start, self.screen_end, self.solenoid):
            if _vec(p).size != 2:
                raise ValueError("Aharonov-Bohm geometry is planar")
        if not np.isfinite(self.flux):
            raise ValueError("flux must be finite")
        for t in (0.0, 0.5, 1.0):
            b = _lerp(self.screen_start, self.screen_end, t)
            loop = np.array([self.source, self.reflector_c, b, self.reflector_d, self.source])
            if abs(_winding(loop, self.solenoid)) != 1:
                raise ValueError("solenoid centre is not strictly inside the beam loop")

    @classmethod
    def standard(cls, m: float = 1.0, u_bar: float = 1.0, separation: float = 4.0,
                 distance: float = 40.0, fringes: float = 2.5, **kw) -> "ABConfig":
        lam = de_broglie(m, u_bar)
        d, L = separation * lam, distance * lam
        half = fringes * lam * L / d
        return cls(m=m, u_bar=u_bar, source=(0.0, 0.0), reflector_c=(L, d / 2),
                   reflector_d=(L, -d / 2), screen_start=(2 * L, -half),
                   screen_end=(2 * L, half), solenoid=(L, 0.0), **kw)

    def equivalent_slits(self, **kw) -> SlitConfig:
        """Two-slit configuration with the reflectors acting as slits."""
        fields = {f: getattr(self, f) for f in SamplingConfig.__dataclass_fields__}
        fields.update(kw)
        return SlitConfig(slit_a=self.reflector_c, slit_b=self.reflector_d,
                          screen_start=self.screen_start, screen_end=self.screen_end,
                          random_kappa=self.random_kappa, **fields)

    @property
    def expected_winding(self) -> int:
        b = _lerp(self.screen_start, self.screen_end, 0.5)
        loop = np.array([self.source, self.reflector_c, b, self.reflector_d, self.source])
        return _winding(loop, self.solenoid)


@dataclass(frozen=True, eq=False)
class IntensityProfile:
    centers: np.ndarray
    intensity: np.ndarray
    pairs_tested: int
    edges: np.ndarray
    pair_weight: np.ndarray | None = None
    background: np.ndarray | None = None
    rejected: int = 0

    def __post_init__(self):
        if len(self.centers) != len(self.intensity):
            raise ValueError("bin centres and intensities differ in length")
        if np.any(np.asarray(self.intensity) < 0):
            raise ValueError("negative intensity")

    @property
    def bin_width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    def __len__(self) -> int:
        return len(self.centers)


# geometry helpers ------------------------------------------------------------

def _lerp(p, q, t):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    t = np.asarray(t, dtype=float)
    return p + t[..., None] * (q - p) if t.ndim else p + float(t) * (q - p)


def _winding(loop, center) -> int:
    pot = Potential.solenoid(TWO_PI, center)
    return int(np.rint(np.sum(pot.winding_angles(np.asarray(loop, dtype=float))) / TWO_PI))


def _screen_coordinate(p0, p1, t):
    """Signed distance from the screen midpoint for parameter ``t``."""
    length = float(np.linalg.norm(np.asarray(p1, float) - np.asarray(p0, float)))
    return (np.asarray(t, dtype=float) - 0.5) * length


def _screen_edges(p0, p1, n_bins):
    length = float(np.linalg.norm(np.asarray(p1, float) - np.asarray(p0, float)))
    return np.linspace(-0.5 * length, 0.5 * length, n_bins + 1)


def _sample_knots(start, end, knots: int, jitter: float, rng) -> np.ndarray:
    """Polylines ``(n, knots + 2, dim)`` from ``start`` to ``end`` with transverse jitter."""
    start = np.broadcast_to(np.asarray(start, dtype=float), np.shape(end))
    end = np.asarray(end, dtype=float)
    n, dim = end.shape
    t = np.linspace(0.0, 1.0, knots + 2)[None, :, None]
    pts = start[:, None, :] * (1 - t) + end[:, None, :] * t
    if knots and jitter > 0:
        axis = end - start
        axis /= np.linalg.norm(axis, axis=1, keepdims=True)
        z = rng.normal(0.0, jitter, (n, knots, dim))
        z -= np.sum(z * axis[:, None, :], axis=-1, keepdims=True) * axis[:, None, :]
        pts[:, 1:-1, :] += z
    return pts


def _arc_tau(x: np.ndarray, u_bar: float) -> np.ndarray:
    seg = np.linalg.norm(np.diff(x, axis=-2), axis=-1)
    return np.concatenate([np.zeros(seg.shape[:-1] + (1,)), np.cumsum(seg, axis=-1)],
                          axis=-1) / u_bar


def _free_actions(x: np.ndarray, cfg: SamplingConfig) -> np.ndarray:
    spec = LagrangianSpec(cfg.m, kinematics="nonrelativistic")
    tau = _arc_tau(x, cfg.u_bar)
    return np.sum(segment_free_actions(x, tau, spec), axis=-1)


def sample_paths(start, end, cfg: SamplingConfig, seed: int | None = None,
                 count: int | None = None) -> Iterator[Polyline]:
    """Stream of jittered polylines from ``start`` to ``end`` parameterised by arc length."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    start = _vec(start)
    end = _vec(end)
    total = cfg.samples if count is None else count
    done = 0
    while done < total:
        n = min(CHUNK, total - done)
        x = _sample_knots(start, np.tile(end, (n, 1)), cfg.knots, cfg.jitter, rng)
        tau = _arc_tau(x, cfg.u_bar)
        for i in range(n):
            yield Polyline(x[i], tau[i])
        done += n


# parallel chunk driver -------------------------------------------------------

def _run_chunks(fn: Callable, total: int, seed: int, threads: int | None):
    """Apply ``fn(start, count, rng)`` over fixed chunks; results in chunk order.

    Chunk boundaries and RNG substreams depend only on ``total`` and ``seed``.
    """
    starts = list(range(0, total, CHUNK))
    seqs = np.random.SeedSequence(seed).spawn(len(starts))
    jobs = [(s, min(CHUNK, total - s), np.random.default_rng(q)) for s, q in zip(starts, seqs)]
    workers = max(1, int(threads or 1))
    if workers == 1 or len(jobs) == 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: fn(*j), jobs))


def _stratified(start: int, count: int, n_bins: int, rng):
    idx = start + np.arange(count)
    b = idx % n_bins
    return b, (b + rng.random(count)) / n_bins


def _weight(dS, cfg, window: str = "hard") -> np.ndarray:
    r = wrap_phase(dS)
    if window == "soft":
        return np.cos(0.5 * r) ** 2
    return (np.abs(r) <= cfg.phase_tol).astype(float)


# free beam ---------------------------------------------------------------------

def free_beam_profile(cfg: BeamConfig, threads: int | None = None) -> IntensityProfile:
    """Histogram along the beam axis of endpoints of paths with ``S = 0 mod 2 pi``."""
    src = _vec(cfg.source)
    axis = _vec(cfg.direction) / np.linalg.norm(cfg.direction)
    edges = np.linspace(cfg.start, cfg.stop, cfg.n_bins + 1)

    def chunk(start, count, rng):
        b, t = _stratified(start, count, cfg.n_bins, rng)
        dist = cfg.start + t * (cfg.stop - cfg.start)
        ends = src + dist[:, None] * axis
        x = _sample_knots(src, ends, cfg.knots, cfg.jitter, rng)
        w = _weight(_free_actions(x, cfg), cfg)
        return np.bincount(b, w, cfg.n_bins)

    hits = np.zeros(cfg.n_bins)
    for h in _run_chunks(chunk, cfg.samples, cfg.seed, threads):
        hits += h
    centers = 0.5 * (edges[1:] + edges[:-1])
    return IntensityProfile(centers, hits / cfg.samples, cfg.samples, edges,
                            pair_weight=None, background=hits)


def profile_peaks(profile: IntensityProfile, min_distance: float,
                  rel_height: float = 0.5) -> np.ndarray:
    """Peak positions refined by the intensity centroid of each peak's upper part."""
    y = np.asarray(profile.intensity, dtype=float)
    dist = max(1, int(min_distance / profile.bin_width))
    idx, _ = find_peaks(np.concatenate([[0.0], y, [0.0]]), distance=dist,
                        prominence=rel_height * y.max())
    idx = idx - 1
    out = []
    half = dist // 2
    for i in idx:
        lo, hi = max(0, i - half), min(len(y), i + half + 1)
        seg = y[lo:hi]
        w = np.clip(seg - rel_height * y[i], 0, None)
        out.append(float(np.sum(w * profile.centers[lo:hi]) / np.sum(w)))
    return np.array(out)


# double slit ---------------------------------------------------------------------

def _closed(*parts: np.ndarray) -> np.ndarray:
    """Concatenate batched polylines, dropping duplicated junction vertices."""
    out = [parts[0]]
    for p in parts[1:]:
        out.append(p[:, 1:, :])
    return np.concatenate(out, axis=1)


def _segment(p, q, n):
    """Batch of ``n`` two-point polylines from ``p`` to ``q`` (points or ``(n, dim)``)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    dim = p.shape[-1]
    return np.stack([np.broadcast_to(p, (n, dim)), np.broadcast_to(q, (n, dim))], axis=1)


def _loop_phase(loop: np.ndarray, pot: Potential | None) -> np.ndarray:
    if pot is None or pot.kind == "zero":
        return np.zeros(loop.shape[0])
    return np.asarray(pot.line_integral(loop), dtype=float)


def double_slit_intensity(cfg: SlitConfig, threads: int | None = None) -> IntensityProfile:
    """Screen intensity from phase-matching pairs plus single-arm physical paths."""
    a = _vec(cfg.slit_a)
    b_ = _vec(cfg.slit_b)
    p0, p1 = _vec(cfg.screen_start), _vec(cfg.screen_end)
    nb = cfg.n_bins
    pot = cfg.potential
    open_a, open_b = cfg.blocked != "a", cfg.blocked != "b"

    def chunk(start, count, rng):
        bins, t = _stratified(start, count, nb, rng)
        ends = _lerp(p0, p1, t)
        xa = _sample_knots(a, ends, cfg.knots, cfg.jitter, rng)
        xb = _sample_knots(b_, ends, cfg.knots, cfg.jitter, rng)
        sa, sb = _free_actions(xa, cfg), _free_actions(xb, cfg)
        # potential along a minus along b, closed through the slit segment b -> a
        loop = _closed(xa, xb[:, ::-1, :], _segment(b_, a, count))
        ds = sa - sb - _loop_phase(loop, pot)
        if cfg.detector_kick is not None:
            k = cfg.detector_kick
            ds = ds + rng.normal(k.mean, k.spread, count) if k.spread > 0 else ds + k.mean
        kap = (rng.random((2, count)) * TWO_PI if cfg.random_kappa
               else np.zeros((2, count)))
        bg = np.zeros(count)
        for is_open, x, s, src, kp in ((open_a, xa, sa, a, kap[0]), (open_b, xb, sb, b_, kap[1])):
            if is_open:
                chord = _closed(x, _segment(x[:, -1, :], src, count))
                bg += _weight(s - _loop_phase(chord, pot) + kp, cfg)
        if cfg.estimator == "amplitude":
            phase_a = sa - _loop_phase(loop, pot)
            amp = open_a * np.exp(1j * phase_a) + open_b * np.exp(1j * sb)
            return (np.bincount(bins, amp.real, nb) + 1j * np.bincount(bins, amp.imag, nb),
                    np.bincount(bins, None, nb).astype(float))
        pw = (_weight(ds, cfg, cfg.window) if open_a and open_b else np.zeros(count))
        return np.bincount(bins, pw, nb), np.bincount(bins, bg, nb)

    parts = _run_chunks(chunk, cfg.samples, cfg.seed, threads)
    edges = _screen_edges(p0, p1, nb)
    centers = 0.5 * (edges[1:] + edges[:-1])
    if cfg.estimator == "amplitude":
        amp = np.zeros(nb, dtype=complex)
        cnt = np.zeros(nb)
        for s, c in parts:
            amp += s
            cnt += c
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(cnt > 0, np.abs(amp) / np.maximum(cnt, 1), 0.0)
        inten = mean ** 2 if cfg.amplitude_norm == "square" else mean
        return IntensityProfile(centers, inten, cfg.samples, edges)
    pw = np.zeros(nb)
    bg = np.zeros(nb)
    for p, g in parts:
        pw += p
        bg += g
    return IntensityProfile(centers, (pw + bg) / cfg.samples, cfg.samples, edges,
                            pair_weight=pw, background=bg)


def path_difference(cfg: SlitConfig, t) -> np.ndarray:
    """Exact ``|B - A| - |B - A'|`` for screen parameter ``t`` in ``[0, 1]``."""
    pts = _lerp(cfg.screen_start, cfg.screen_end, np.atleast_1d(t))
    return (np.linalg.norm(pts - np.asarray(cfg.slit_a), axis=-1)
            - np.linalg.norm(pts - np.asarray(cfg.slit_b), axis=-1))


def _roots(f: Callable[[float], float], n_scan: int = 4096) -> list[float]:
    """All sign changes of ``f`` on ``[0, 1]`` refined by Brent's method."""
    t = np.linspace(0.0, 1.0, n_scan + 1)
    v = np.array([f(x) for x in t])
    out = []
    for i in range(n_scan):
        if v[i] == 0:
            out.append(float(t[i]))
        elif v[i] * v[i + 1] < 0:
            out.append(brentq(f, t[i], t[i + 1], xtol=1e-15, rtol=1e-15))
    if v[-1] == 0:
        out.append(1.0)
    return out


def _orders(dr_min: float, dr_max: float, lam: float, offset: float) -> range:
    lo = int(np.ceil(dr_min / lam - offset))
    hi = int(np.floor(dr_max / lam - offset))
    return range(lo, hi + 1)


def _positions(dr: Callable, cfg, p0, p1, offset: float) -> dict[int, float]:
    lam = cfg.wavelength
    t = np.linspace(0, 1, 4097)
    vals = dr(t)
    out = {}
    for j in _orders(vals.min(), vals.max(), lam, offset):
        roots = _roots(lambda s: float(dr(s)[0]) - (j + offset) * lam)
        if len(roots) == 1:
            out[j] = float(_screen_coordinate(p0, p1, roots[0]))
    return out


def fringe_positions(cfg: SlitConfig, offset: float = 0.0) -> dict[int, float]:
    """Screen coordinates where ``Delta r = (j + offset) * lambda``, keyed by ``j``.

    ``offset=0`` gives intensity maxima, ``offset=0.5`` the minima.  Orders
    with no root on the screen are skipped.
    """
    return _positions(lambda t: path_difference(cfg, t), cfg,
                      cfg.screen_start, cfg.screen_end, offset)


def wave_prediction(cfg: SlitConfig, coords) -> np.ndarray:
    """Two-beam wave intensity ``cos^2(k Delta r / 2)`` at screen coordinates."""
    length = float(np.linalg.norm(np.subtract(cfg.screen_end, cfg.screen_start)))
    t = np.asarray(coords, dtype=float) / length + 0.5
    return np.cos(0.5 * cfg.k * path_difference(cfg, t)) ** 2


def local_spacing(positions: dict[int, float], j: int = 0) -> float:
    """Mean distance from order ``j`` to its neighbours."""
    nb = [abs(positions[i] - positions[j]) for i in (j - 1, j + 1) if i in positions]
    if not nb or j not in positions:
        raise ValueError(f"order {j} has no neighbouring fringe on the screen")
    return float(np.mean(nb))


# peak analysis --------------------------------------------------------------------

@dataclass(frozen=True)
class PeakFit:
    position: float
    amplitude: float
    offset: float
    stderr: float
    ambiguous: bool

    @property
    def visibility(self) -> float:
        return self.amplitude / self.offset if self.offset > 0 else 0.0


def fit_peak(profile: IntensityProfile, guess: float, period: float,
             iterations: int = 4, min_snr: float = 3.0, min_bins: int = 7) -> PeakFit:
    """Locate the fringe maximum nearest ``guess`` by a local cosine fit.

    The window is one period wide, shrunk symmetrically where the screen ends.
    The fit is ambiguous when the cosine amplitude is not resolved above
    ``min_snr`` standard errors or the maximum leaves the half-period window.
    """
    c = profile.centers
    y = np.asarray(profile.intensity, dtype=float)
    lo_edge, hi_edge = profile.edges[0], profile.edges[-1]
    pos = float(guess)
    amp = off = err = 0.0
    for _ in range(iterations):
        half = min(0.5 * period, pos - lo_edge, hi_edge - pos)
        sel = np.abs(c - pos) <= half
        if sel.sum() < min_bins:
            return PeakFit(float("nan"), 0.0, 0.0, float("inf"), True)
        u = TWO_PI * (c[sel] - pos) / period
        cols = [np.ones_like(u), np.cos(u), np.sin(u)]
        if half >= 0.4 * period and sel.sum() >= 12:
            # second harmonic absorbs the flat-topped fringe shape
            cols += [np.cos(2 * u), np.sin(2 * u)]
        design = np.stack(cols, axis=1)
        coef, *_ = np.linalg.lstsq(design, y[sel], rcond=None)
        resid = y[sel] - design @ coef
        dof = max(1, int(sel.sum()) - len(cols))
        cov = np.linalg.pinv(design.T @ design) * (np.sum(resid ** 2) / dof)
        off = float(coef[0])
        amp = float(np.hypot(coef[1], coef[2]))
        err = float(np.sqrt(0.5 * (cov[1, 1] + cov[2, 2])))
        pos = pos + float(np.arctan2(coef[2], coef[1])) * period / TWO_PI
    ambiguous = not (amp > min_snr * err) or abs(pos - guess) > 0.5 * period
    return PeakFit(pos, amp, off, err, bool(ambiguous))


def fringe_visibility(profile: IntensityProfile, center: float, period: float) -> float:
    """``(I_max - I_min) / (I_max + I_min)`` over one period centred at ``center``."""
    sel = np.abs(profile.centers - center) <= 0.5 * period
    y = np.asarray(profile.intensity)[sel]
    if y.size == 0 or y.max() + y.min() == 0:
        return 0.0
    return float((y.max() - y.min()) / (y.max() + y.min()))


def _bin_of(profile: IntensityProfile, coord: float) -> int:
    return int(np.clip(np.searchsorted(profile.edges, coord) - 1, 0, len(profile) - 1))


def minimum_bins(profile: IntensityProfile, minima: Sequence[float]) -> np.ndarray:
    return np.array([_bin_of(profile, x) for x in minima], dtype=int)


# Aharonov-Bohm -----------------------------------------------------------------------

def flux_units(flux: float) -> int:
    """Flux as an integer count of ``2 pi / 2^32``, reduced modulo one full turn."""
    q = int(round(float(flux) / TWO_PI * (1 << FLUX_BITS)))
    return q % (1 << FLUX_BITS)


def flux_phase(winding: np.ndarray, flux: float) -> np.ndarray:
    """``winding * flux`` reduced to ``[0, 2 pi)`` with exact integer arithmetic."""
    q = np.int64(flux_units(flux))
    w = np.asarray(winding, dtype=np.int64) % (1 << FLUX_BITS)
    frac = (w * q) % np.int64(1 << FLUX_BITS)
    return frac.astype(float) * (TWO_PI / (1 << FLUX_BITS))


@dataclass(frozen=True, eq=False)
class ABSamples:
    bins: np.ndarray
    free_delta: np.ndarray
    pair_winding: np.ndarray
    arm_free: np.ndarray
    arm_winding: np.ndarray
    kappa: np.ndarray
    rejected: int


def _ab_arms(cfg: ABConfig, ends, rng):
    n = len(ends)
    leg = lambda p, q: _sample_knots(p, q, cfg.knots, cfg.jitter, rng)
    a = np.asarray(cfg.source, float)
    c = np.tile(np.asarray(cfg.reflector_c, float), (n, 1))
    d = np.tile(np.asarray(cfg.reflector_d, float), (n, 1))
    xa = _closed(leg(a, c), leg(c, ends))
    xb = _closed(leg(a, d), leg(d, ends))
    return xa, xb


def _sample_ab(cfg: ABConfig, threads: int | None) -> ABSamples:
    nb = cfg.n_bins
    p0, p1 = _vec(cfg.screen_start), _vec(cfg.screen_end)
    src = np.asarray(cfg.source, float)
    w_exp = cfg.expected_winding
    center = np.asarray(cfg.solenoid, float)
    unit = Potential.solenoid(TWO_PI, tuple(center))

    def windings(x):
        return np.rint(np.sum(unit.winding_angles(x), axis=-1) / TWO_PI).astype(np.int64)

    def chunk(start, count, rng):
        bins, t = _stratified(start, count, nb, rng)
        ends = _lerp(p0, p1, t)
        xa, xb = _ab_arms(cfg, ends, rng)
        loop = _closed(xa, xb[:, ::-1, :])
        w = windings(loop)
        bad = w != w_exp
        rejected = 0
        for _ in range(MAX_RESAMPLE):
            if not bad.any():
                break
            rejected += int(bad.sum())
            na, nb_ = _ab_arms(cfg, ends[bad], rng)
            xa[bad], xb[bad] = na, nb_
            loop = _closed(xa, xb[:, ::-1, :])
            w = windings(loop)
            bad = w != w_exp
        if bad.any():
            raise RuntimeError("could not sample loops enclosing the solenoid; reduce jitter")
        sa, sb = _free_actions(xa, cfg), _free_actions(xb, cfg)
        arms = np.stack([sa, sb])
        arm_w = np.stack([windings(_closed(x, _segment(x[:, -1, :], src, count)))
                          for x in (xa, xb)])
        kap = (rng.random((2, count)) * TWO_PI if cfg.random_kappa
               else np.zeros((2, count)))
        return bins, sa - sb, w, arms, arm_w, kap, rejected

    parts = _run_chunks(chunk, cfg.samples, cfg.seed, threads)
    cat = lambda i, ax=0: np.concatenate([p[i] for p in parts], axis=ax)
    return ABSamples(cat(0), cat(1), cat(2), cat(3, 1), cat(4, 1), cat(5, 1),
                     sum(p[6] for p in parts))


def _ab_profile(cfg: ABConfig, s: ABSamples, flux: float) -> IntensityProfile:
    nb = cfg.n_bins
    ds = s.free_delta - flux_phase(s.pair_winding, flux)
    pw = np.zeros(nb)
    bg = np.zeros(nb)
    # accumulate per chunk so results match the chunked double-slit reduction
    for lo in range(0, len(ds), CHUNK):
        sl = slice(lo, lo + CHUNK)
        pw += np.bincount(s.bins[sl], _weight(ds[sl], cfg), nb)
        g = np.zeros(len(ds[sl]))
        for arm in range(2):
            g += _weight(s.arm_free[arm, sl] - flux_phase(s.arm_winding[arm, sl], flux)
                         + s.kappa[arm, sl], cfg)
        bg += np.bincount(s.bins[sl], g, nb)
    edges = _screen_edges(cfg.screen_start, cfg.screen_end, nb)
    centers = 0.5 * (edges[1:] + edges[:-1])
    return IntensityProfile(centers, (pw + bg) / cfg.samples, cfg.samples, edges,
                            pair_weight=pw, background=bg, rejected=s.rejected)


def ab_intensity(cfg: ABConfig, threads: int | None = None) -> IntensityProfile:
    """Interference profile around an enclosed flux line.

    Each closed pair contributes the flux phase ``winding * F`` computed on an
    integer lattice, so ``F`` and ``F + 2 pi`` give bit-identical profiles.
    """
    return _ab_profile(cfg, _sample_ab(cfg, threads), cfg.flux)


def ab_path_difference(cfg: ABConfig, t) -> np.ndarray:
    pts = _lerp(cfg.screen_start, cfg.screen_end, np.atleast_1d(t))
    a, c, d = (np.asarray(p, float) for p in (cfg.source, cfg.reflector_c, cfg.reflector_d))
    return (np.linalg.norm(c - a) + np.linalg.norm(pts - c, axis=-1)
            - np.linalg.norm(d - a) - np.linalg.norm(pts - d, axis=-1))


def ab_fringe_positions(cfg: ABConfig, offset: float = 0.0) -> dict[int, float]:
    """Maxima where ``k Delta r - w F = 2 pi (j + offset)`` with pair winding ``w``."""
    shift = cfg.expected_winding * cfg.flux / TWO_PI
    return _positions(lambda t: ab_path_difference(cfg, t), cfg,
                      cfg.screen_start, cfg.screen_end, offset + shift)


@dataclass(frozen=True)
class SweepPoint:
    flux: float
    position: float
    ambiguous: bool
    amplitude: float
    stderr: float


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    spacing: float
    profiles: tuple[IntensityProfile, ...] = field(default=(), repr=False)

    @property
    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.points])

    @property
    def ambiguous(self) -> bool:
        return any(p.ambiguous for p in self.points)

    @property
    def total_shift(self) -> float:
        return float(self.positions[-1] - self.positions[0])

    def monotone(self) -> bool:
        d = np.diff(self.positions)
        return bool(np.all(d > 0) or np.all(d < 0))


def fringe_shift_sweep(cfg: ABConfig, flux_grid: Sequence[float],
                       threads: int | None = None, keep_profiles: bool = False) -> SweepResult:
    """Track the central fringe as the enclosed flux varies.

    Each profile is fitted over one local fringe period starting from the
    previous position.  Ambiguous fits are flagged and tracking stops there.
    """
    grid = [float(f) for f in flux_grid]
    if not grid or min(grid) > 1e-12 or max(grid) < TWO_PI - 1e-12:
        raise ValueError("flux_grid must cover [0, 2 pi]")
    base = replace(cfg, flux=0.0)
    maxima = ab_fringe_positions(base)
    spacing = local_spacing(maxima, 0)
    samples = _sample_ab(base, threads)
    guess = maxima[0]
    points, profiles = [], []
    lost = False
    for f in grid:
        prof = _ab_profile(cfg, samples, f)
        if keep_profiles:
            profiles.append(prof)
        if lost:
            points.append(SweepPoint(f, float("nan"), True, 0.0, float("inf")))
            continue
        fit = fit_peak(prof, guess, spacing)
        if fit.ambiguous:
            lost = True
            points.append(SweepPoint(f, float("nan"), True, fit.amplitude, fit.stderr))
            continue
        points.append(SweepPoint(f, fit.position, False, fit.amplitude, fit.stderr))
        guess = fit.position
    return SweepResult(tuple(points), spacing, tuple(profiles))
