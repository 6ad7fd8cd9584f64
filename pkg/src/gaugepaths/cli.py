"""Command-line front end: ``gaugepaths <command> --config run.yaml``."""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import experiments as ex
from .action import LagrangianSpec, Potential
from .config import SECTION, ConfigError, RunConfig, parse_config, section_defaults, validate
from .geometry import Metric, Polyline
from .io import density_slice, sha256, write_checkpoint, write_csv, write_json
from .lattice import Grid
from .mode_reduction import kg_eigenvalue, kg_residual, project_tau_modes
from .physical_paths import de_broglie, find_equivalent_points
from .propagator import (KernelConfig, WaveState, evolve, evolve_period, gaussian_packet,
                         gs_residual, plane_wave)
from .verify import run_suite

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
ENV_OUT = "GAUGEPATHS_OUT"
ENV_THREADS = "GAUGEPATHS_THREADS"


class VerificationFailure(RuntimeError):
    """A numerical check did not meet its threshold."""


class Run:
    """Output directory bookkeeping: every file written is hashed into the summary."""

    def __init__(self, cfg: RunConfig, out: Path, threads: int):
        self.cfg = cfg
        self.out = out
        self.threads = threads
        self.files: list[str] = []
        self.metrics: dict = {}

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    def profile_csv(self, name: str, prof: ex.IntensityProfile) -> None:
        write_csv(self.path(name), ["bin_center", "intensity"], [prof.centers, prof.intensity])


# commands ---------------------------------------------------------------------

def _free_paths(run: Run) -> None:
    c = run.cfg.free_paths
    lam = de_broglie(c.m, c.u_bar)
    length = c.wavelengths * lam
    spec = LagrangianSpec(c.m, kinematics="nonrelativistic")
    path = Polyline.straight((0.0, 0.0), (length, 0.0), 0.0, length / c.u_bar,
                             n=c.segments + 1)
    eq = find_equivalent_points(path, spec)
    pts = np.asarray(eq.points)
    write_csv(run.path("equivalent_points.csv"), ["j", "tau", "x", "y"],
              [np.asarray(eq.indices), np.asarray(eq.taus), pts[:, 0], pts[:, 1]])
    beam = ex.BeamConfig(m=c.m, u_bar=c.u_bar, knots=c.knots, jitter=c.jitter,
                         samples=c.samples, phase_tol=c.phase_tol, n_bins=c.n_bins,
                         seed=run.cfg.seed, start=0.5 * lam, stop=(c.wavelengths + 0.5) * lam)
    prof = ex.free_beam_profile(beam, run.threads)
    run.profile_csv("beam_profile.csv", prof)
    peaks = ex.profile_peaks(prof, 0.5 * lam)
    sp = eq.spacings()
    run.metrics.update(de_broglie=lam, equivalent_points=len(eq),
                       spacing_max_error=float(np.abs(sp - lam).max()) if sp.size else None,
                       beam_peaks=peaks.tolist(),
                       beam_peak_spacing=float(np.mean(np.diff(peaks))) if peaks.size > 1 else None,
                       bin_width=prof.bin_width)


def _slit_config(run: Run) -> ex.SlitConfig:
    c = run.cfg.double_slit
    kick = (ex.DetectorKick(c.detector_kick.mean, c.detector_kick.spread)
            if c.detector_kick else None)
    pot = Potential.uniform(c.uniform_potential) if c.uniform_potential else None
    return ex.SlitConfig.standard(
        m=c.m, u_bar=c.u_bar, separation=c.separation, distance=c.distance,
        fringes=c.fringes, knots=c.knots, jitter=c.jitter, samples=c.samples,
        phase_tol=c.phase_tol, n_bins=c.n_bins, seed=run.cfg.seed, detector_kick=kick,
        window=c.window, blocked=c.blocked, random_kappa=c.random_kappa,
        estimator=c.estimator, amplitude_norm=c.amplitude_norm, potential=pot)


def _peak_metrics(prof: ex.IntensityProfile, maxima: dict[int, float]) -> dict:
    spacing = ex.local_spacing(maxima, 0)
    peaks = {}
    for j, x in sorted(maxima.items()):
        nbr = [abs(maxima[i] - x) for i in (j - 1, j + 1) if i in maxima]
        fit = ex.fit_peak(prof, x, float(np.mean(nbr)) if nbr else spacing)
        peaks[str(j)] = {"predicted": x, "measured": fit.position, "ambiguous": fit.ambiguous,
                         "amplitude": fit.amplitude}
    centre = ex.fit_peak(prof, maxima[0], spacing)
    return {"peaks": peaks, "fringe_spacing": spacing,
            "visibility": ex.fringe_visibility(prof, maxima[0], spacing),
            "fitted_visibility": centre.visibility, "bin_width": prof.bin_width,
            "pairs_tested": prof.pairs_tested, "min_intensity": float(prof.intensity.min())}


def _double_slit(run: Run) -> None:
    cfg = _slit_config(run)
    prof = ex.double_slit_intensity(cfg, run.threads)
    run.profile_csv("intensity.csv", prof)
    wave = ex.wave_prediction(cfg, prof.centers)
    write_csv(run.path("wave_prediction.csv"), ["bin_center", "intensity"], [prof.centers, wave])
    run.metrics.update(_peak_metrics(prof, ex.fringe_positions(cfg)))


def _ab_effect(run: Run) -> None:
    c = run.cfg.ab_effect
    cfg = ex.ABConfig.standard(m=c.m, u_bar=c.u_bar, separation=c.separation,
                               distance=c.distance, fringes=c.fringes, knots=c.knots,
                               jitter=c.jitter, samples=c.samples, phase_tol=c.phase_tol,
                               n_bins=c.n_bins, seed=run.cfg.seed, flux=c.flux,
                               random_kappa=c.random_kappa)
    if c.sweep is None:
        prof = ex.ab_intensity(cfg, run.threads)
        run.profile_csv("intensity.csv", prof)
        run.metrics.update(_peak_metrics(prof, ex.ab_fringe_positions(cfg)))
        run.metrics["rejected"] = prof.rejected
        return
    grid = np.linspace(0.0, 2 * np.pi, c.sweep.steps + 1)
    res = ex.fringe_shift_sweep(cfg, grid, run.threads, keep_profiles=True)
    for i, prof in enumerate(res.profiles):
        run.profile_csv(f"intensity_flux_{i:03d}.csv", prof)
    write_csv(run.path("shift_curve.csv"), ["flux", "peak_position"], [grid, res.positions])
    bw = res.profiles[0].bin_width
    run.metrics.update(fringe_spacing=res.spacing, total_shift=res.total_shift,
                       shift_error_bins=(abs(res.total_shift) - res.spacing) / bw,
                       monotone=res.monotone(), ambiguous=res.ambiguous, bin_width=bw,
                       rejected=res.profiles[0].rejected)


def _propagate(run: Run) -> None:
    c = run.cfg.propagate
    grid = Grid.centered((c.points,) * c.spatial_dims, c.spacing)
    metric = Metric.spatial(c.spatial_dims)
    pot = Potential.uniform(c.uniform_potential) if c.uniform_potential else None
    eps = 2 * np.pi / (c.m * c.period_steps) if c.period_steps else c.epsilon
    kcfg = KernelConfig(eps, metric, pot, c.mode)
    ini = c.initial
    if ini.kind == "gaussian":
        s0 = gaussian_packet(grid, c.m, ini.center, ini.width, ini.k)
    else:
        s0 = plane_wave(grid, c.m, ini.k or [0.0] * c.spatial_dims)
    if c.period_steps:
        traj = evolve_period(s0, kcfg)
        states = list(traj)
        run.metrics["antiperiodicity_defect"] = traj.defect
    else:
        states = evolve(s0, kcfg, c.steps)
    last = states[-1]
    write_checkpoint(run.path("final.gpws"), last, eps)
    x, dens = density_slice(last)
    write_csv(run.path("density.csv"), ["x", "density"], [x, dens])
    run.metrics.update(steps=len(states) - 1, tau_final=last.tau,
                       norm_drift=abs(last.norm() - s0.norm()))
    if len(states) >= 3:
        run.metrics["gs_residual"] = gs_residual(states[-3], states[-2], states[-1], kcfg)


def _modes(run: Run) -> None:
    c = run.cfg.modes
    metric = Metric.minkowski(2)
    grid = Grid.centered((c.points, c.points), 2 * np.pi / c.points)
    s0 = plane_wave(grid, c.m, c.wave)
    kcfg = KernelConfig(2 * np.pi / c.m / c.steps, metric)
    traj = evolve_period(s0, kcfg)
    spec = project_tau_modes(traj, range(c.n_min, c.n_max + 1))
    norms = spec.norms()
    ref = max(norms.values()) or 1.0
    table = {}
    for n, f in sorted(spec.modes.items()):
        entry = {"norm": norms[n], "eigenvalue": kg_eigenvalue(n, c.m)}
        if norms[n] > 1e-8 * ref:
            name = f"mode_{n:+d}.gpws"
            write_checkpoint(run.path(name), WaveState(grid, f, 0.0, c.m), kcfg.epsilon)
            entry.update(checkpoint=name,
                         kg_residual=kg_residual(f, grid, n, c.m, metric) / norms[n])
        table[str(n)] = entry
    write_json(run.path("spectrum.json"), table)
    run.metrics.update(leakage=spec.leakage, antiperiodicity_defect=traj.defect,
                       dominant_mode=int(max(norms, key=norms.get)))


def _verify(run: Run) -> None:
    results = run_suite(run.cfg.verify.quick)
    lines = [r.line() for r in results]
    run.path("verify.txt").write_text("\n".join(lines) + "\n")
    run.metrics["checks"] = {r.name: {"passed": r.passed, "value": r.value,
                                      "threshold": r.threshold} for r in results}
    failed = [r.name for r in results if not r.passed]
    run.metrics["failed"] = failed
    if failed:
        raise VerificationFailure("failed checks: " + ", ".join(failed))


COMMANDS = {"free-paths": _free_paths, "double-slit": _double_slit, "ab-effect": _ab_effect,
            "propagate": _propagate, "modes": _modes, "verify": _verify}


# driver -------------------------------------------------------------------------

def _summary(run: Run, wall: float, error: dict | None = None) -> None:
    cfg = run.cfg
    summary = {
        "command": cfg.command,
        "config": cfg.model_dump(mode="json", include={"command", "seed", "output_dir",
                                                       SECTION[cfg.command]}),
        "defaults": section_defaults(cfg),
        "seed": cfg.seed,
        "threads": run.threads,
        "versions": {"gaugepaths": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": wall,
        "metrics": run.metrics,
        "files": {name: sha256(run.out / name) for name in run.files},
        "status": "ok" if error is None else "error",
    }
    if error is not None:
        summary["error"] = error
    write_json(run.out / "summary.json", summary)


def execute(cfg: RunConfig, out: Path, threads: int) -> int:
    out.mkdir(parents=True, exist_ok=True)
    run = Run(cfg, out, threads)
    t0 = time.perf_counter()
    try:
        COMMANDS[cfg.command](run)
    except VerificationFailure as exc:
        err = {"type": "verification", "message": str(exc)}
        _summary(run, time.perf_counter() - t0, err)
        _report(err)
        return EXIT_NUMERIC
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        err = {"type": type(exc).__name__, "message": str(exc)}
        _summary(run, time.perf_counter() - t0, err)
        _report(err)
        return EXIT_NUMERIC
    _summary(run, time.perf_counter() - t0)
    return EXIT_OK


def _report(err: dict) -> None:
    sys.stderr.write(json.dumps({"error": err}, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gaugepaths", description=__doc__)
    p.add_argument("command", nargs="?", choices=sorted(COMMANDS),
                   help="overrides the command named in the config")
    p.add_argument("--config", required=True, help="YAML run configuration")
    p.add_argument("--out", help=f"output directory (env {ENV_OUT})")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--threads", type=int, help=f"worker threads (env {ENV_THREADS})")
    return p


def load(args, env=None) -> tuple[RunConfig, Path, int]:
    env = os.environ if env is None else env
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    cfg = parse_config(text)
    updates = {}
    if args.command:
        updates["command"] = args.command
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed: must be nonnegative")
        updates["seed"] = args.seed
    if updates:
        cfg = validate({**cfg.model_dump(exclude_unset=True), **updates})
    out = args.out or env.get(ENV_OUT) or cfg.output_dir
    threads = args.threads if args.threads is not None else env.get(ENV_THREADS)
    try:
        threads = int(threads) if threads is not None else cfg.threads
    except ValueError:
        raise ConfigError(f"{ENV_THREADS} must be an integer") from None
    if threads < 1:
        raise ConfigError("threads: must be at least 1")
    return cfg, Path(out), threads


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, out, threads = load(args)
    except ConfigError as exc:
        _report({"type": "config", "message": str(exc)})
        return EXIT_CONFIG
    return execute(cfg, out, threads)


if __name__ == "__main__":
    sys.exit(main())
