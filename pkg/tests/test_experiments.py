from dataclasses import replace

import numpy as np
import pytest

from gaugepaths import experiments as ex
from gaugepaths.action import Potential
from gaugepaths.physical_paths import de_broglie

TWO_PI = 2 * np.pi


def test_sample_paths_straight_without_jitter():
    cfg = ex.SamplingConfig(jitter=0.0, knots=3, samples=5)
    for p in ex.sample_paths((0.0, 0.0), (4.0, 3.0), cfg):
        assert np.allclose(p.x[:, 1] * 4, p.x[:, 0] * 3)
        assert p.monotonic
        assert p.tau[-1] == pytest.approx(5.0)


def test_sample_paths_unbiased_and_deterministic():
    cfg = ex.SamplingConfig(jitter=0.7, knots=4, samples=20_000, seed=4)
    disp = np.array([p.x[1:-1, 1] for p in ex.sample_paths((0.0, 0.0), (10.0, 0.0), cfg)])
    assert np.all(np.abs(disp.mean(axis=0)) < 3 * 0.7 / np.sqrt(len(disp)))
    assert disp.std() == pytest.approx(0.7, rel=0.03)
    a = [p.x for p in ex.sample_paths((0, 0), (1, 1), cfg, count=50)]
    b = [p.x for p in ex.sample_paths((0, 0), (1, 1), cfg, count=50)]
    assert all(np.array_equal(u, v) for u, v in zip(a, b))


def test_jitter_is_transverse():
    cfg = ex.SamplingConfig(jitter=1.0, knots=2, samples=100)
    for p in ex.sample_paths((0.0, 0.0, 0.0), (3.0, 0.0, 0.0), cfg):
        assert np.allclose(p.x[1:-1, 0], [1.0, 2.0])


def test_config_validation():
    with pytest.raises(ValueError):
        ex.SamplingConfig(samples=0)
    with pytest.raises(ValueError):
        ex.SamplingConfig(jitter=-1)
    with pytest.raises(ValueError):
        ex.SlitConfig(blocked="c")
    with pytest.raises(ValueError):
        ex.ABConfig(solenoid=(1000.0, 0.0))


def test_free_beam_peaks_at_wavelength_multiples():
    cfg = ex.BeamConfig(u_bar=0.5, start=2 * np.pi, stop=42 * np.pi, samples=100_000)
    prof = ex.free_beam_profile(cfg)
    lam = de_broglie(1.0, 0.5)
    peaks = ex.profile_peaks(prof, 0.5 * lam)
    assert len(peaks) == 10
    assert np.all(np.abs(peaks - lam * np.round(peaks / lam)) <= prof.bin_width)
    assert abs(np.mean(np.diff(peaks)) - lam) <= prof.bin_width


def test_free_beam_mass_halves_spacing():
    lam = de_broglie(1.0, 1.0)
    a = ex.free_beam_profile(ex.BeamConfig(m=1.0, start=0.5 * lam, stop=10.5 * lam))
    b = ex.free_beam_profile(ex.BeamConfig(m=2.0, start=0.5 * lam, stop=10.5 * lam))
    sa = np.mean(np.diff(ex.profile_peaks(a, 0.5 * lam)))
    sb = np.mean(np.diff(ex.profile_peaks(b, 0.25 * lam)))
    assert sb == pytest.approx(sa / 2, abs=a.bin_width)


def test_free_beam_jitter_broadens_peaks():
    lam = TWO_PI
    base = ex.BeamConfig(start=0.5 * lam, stop=10.5 * lam)
    sharp = ex.free_beam_profile(base)
    wide = ex.free_beam_profile(replace(base, jitter=1.0, knots=4))
    assert np.count_nonzero(wide.intensity) > np.count_nonzero(sharp.intensity)


def test_fringe_positions_symmetry_and_far_field():
    cfg = ex.SlitConfig.standard()
    pos = ex.fringe_positions(cfg)
    assert pos[0] == pytest.approx(0.0, abs=1e-9)
    for j in pos:
        if -j in pos:
            assert pos[j] == pytest.approx(-pos[-j], abs=1e-9)
    far = ex.SlitConfig.standard(separation=20.0, distance=4000.0, fringes=2)
    lam = far.wavelength
    d, L = 20 * lam, 4000 * lam
    assert ex.local_spacing(ex.fringe_positions(far)) == pytest.approx(lam * L / d, rel=0.01)


def test_fringe_roots_solve_exact_path_difference():
    cfg = ex.SlitConfig.standard()
    length = np.linalg.norm(np.subtract(cfg.screen_end, cfg.screen_start))
    for j, y in ex.fringe_positions(cfg).items():
        dr = ex.path_difference(cfg, y / length + 0.5)[0]
        assert dr == pytest.approx(j * cfg.wavelength, abs=1e-9)


def test_double_slit_maxima_and_background():
    cfg = ex.SlitConfig.standard()
    prof = ex.double_slit_intensity(cfg)
    maxima = ex.fringe_positions(cfg)
    for j, x in maxima.items():
        nb = [abs(maxima[i] - x) for i in (j - 1, j + 1) if i in maxima]
        fit = ex.fit_peak(prof, x, np.mean(nb))
        assert not fit.ambiguous
        assert abs(fit.position - x) <= prof.bin_width
    mins = ex.minimum_bins(prof, list(ex.fringe_positions(cfg, 0.5).values()))
    assert np.all(prof.intensity[mins] > 0)
    assert np.all(ex.wave_prediction(cfg, list(ex.fringe_positions(cfg, 0.5).values())) < 1e-20)


def test_detector_kick_destroys_fringes():
    cfg = ex.SlitConfig.standard(samples=1_000_000, seed=3)
    pos = ex.fringe_positions(cfg)
    sp = ex.local_spacing(pos)
    v0 = ex.fringe_visibility(ex.double_slit_intensity(cfg), pos[0], sp)
    kicked = ex.double_slit_intensity(replace(cfg, detector_kick=ex.DetectorKick(0.0, TWO_PI)))
    assert v0 > 0.5
    assert ex.fringe_visibility(kicked, pos[0], sp) < 0.1


def test_blocked_slit_has_no_fringes():
    cfg = ex.SlitConfig.standard()
    pos = ex.fringe_positions(cfg)
    sp = ex.local_spacing(pos)
    both = ex.fit_peak(ex.double_slit_intensity(cfg), pos[0], sp)
    one = ex.fit_peak(ex.double_slit_intensity(replace(cfg, blocked="b")), pos[0], sp)
    assert one.amplitude < 4 * one.stderr
    assert both.visibility > 5 * one.visibility


def test_soft_window_follows_wave_prediction():
    cfg = ex.SlitConfig.standard(jitter=0.0, window="soft", random_kappa=True)
    prof = ex.double_slit_intensity(cfg)
    expect = ex.wave_prediction(cfg, prof.centers)
    pairs = prof.pair_weight / np.bincount(np.arange(cfg.samples) % cfg.n_bins)
    assert np.corrcoef(pairs, expect)[0, 1] > 0.99


def test_amplitude_estimator():
    cfg = ex.SlitConfig.standard(jitter=0.0, estimator="amplitude")
    prof = ex.double_slit_intensity(cfg)
    expect = ex.wave_prediction(cfg, prof.centers)
    assert np.corrcoef(prof.intensity, expect)[0, 1] > 0.99
    absprof = ex.double_slit_intensity(replace(cfg, amplitude_norm="abs"))
    assert np.allclose(absprof.intensity ** 2, prof.intensity)


def test_gauge_shift_bit_identical():
    cfg = ex.SlitConfig.standard(samples=30_000)
    a = ex.double_slit_intensity(cfg)
    b = ex.double_slit_intensity(replace(cfg, potential=Potential.uniform([1.3, -0.4])))
    assert a.intensity.tobytes() == b.intensity.tobytes()


def test_seed_and_thread_determinism():
    cfg = ex.SlitConfig.standard(samples=50_000, seed=9)
    a = ex.double_slit_intensity(cfg, threads=1)
    b = ex.double_slit_intensity(cfg, threads=4)
    c = ex.double_slit_intensity(replace(cfg, seed=10))
    assert a.intensity.tobytes() == b.intensity.tobytes()
    assert a.intensity.tobytes() != c.intensity.tobytes()


def test_flux_phase_integer_lattice():
    w = np.array([-2, -1, 0, 1, 3])
    assert np.array_equal(ex.flux_phase(w, 0.7), ex.flux_phase(w, 0.7 + TWO_PI))
    assert np.allclose(ex.flux_phase(w, 0.7), np.mod(w * 0.7, TWO_PI), atol=1e-8)


def test_flux_independent_of_jitter():
    # winding-angle loop integral depends only on the winding number
    pot = Potential.solenoid(1.234, (0.0, 0.0))
    rng = np.random.default_rng(1)
    ref = None
    for _ in range(20):
        t = np.linspace(0, TWO_PI, 40)
        r = 2.0 + 0.5 * rng.normal(size=40)
        r[-1] = r[0]
        loop = np.column_stack([r * np.cos(t), r * np.sin(t)])
        val = pot.line_integral(loop)
        ref = val if ref is None else ref
        assert abs(val - ref) < 1e-10


@pytest.fixture(scope="module")
def ab_cfg():
    return ex.ABConfig.standard()


def test_ab_periodicity(ab_cfg):
    a = ex.ab_intensity(replace(ab_cfg, flux=0.9))
    b = ex.ab_intensity(replace(ab_cfg, flux=0.9 + TWO_PI))
    assert a.intensity.tobytes() == b.intensity.tobytes()


def test_ab_zero_flux_matches_double_slit(ab_cfg):
    ab = ex.ab_intensity(ab_cfg)
    ds = ex.double_slit_intensity(ab_cfg.equivalent_slits())
    sp = ex.local_spacing(ex.ab_fringe_positions(ab_cfg))
    fa, fd = ex.fit_peak(ab, 0.0, sp), ex.fit_peak(ds, 0.0, sp)
    assert abs(fa.position - fd.position) <= ab.bin_width
    assert fa.visibility == pytest.approx(fd.visibility, abs=0.1)


def test_ab_half_flux_swaps_fringes(ab_cfg):
    sp = ex.local_spacing(ex.ab_fringe_positions(ab_cfg))
    p0 = ex.ab_intensity(ab_cfg)
    pi = ex.ab_intensity(replace(ab_cfg, flux=np.pi))
    b0 = ex._bin_of(p0, 0.0)
    assert pi.intensity[b0 - 1:b0 + 2].mean() < 0.5 * p0.intensity[b0 - 1:b0 + 2].mean()
    fit = ex.fit_peak(pi, 0.5 * sp, sp)
    half = ex.ab_fringe_positions(replace(ab_cfg, flux=np.pi))
    nearest = min(half.values(), key=lambda v: abs(v - fit.position))
    assert abs(fit.position - nearest) <= pi.bin_width


def test_ab_sweep(ab_cfg):
    res = ex.fringe_shift_sweep(ab_cfg, np.linspace(0, TWO_PI, 17))
    bw = (ab_cfg.screen_end[1] - ab_cfg.screen_start[1]) / ab_cfg.n_bins
    assert not res.ambiguous and res.monotone()
    assert abs(abs(res.total_shift) - res.spacing) <= bw
    maxima_pi = ex.ab_fringe_positions(replace(ab_cfg, flux=np.pi))
    half = min(maxima_pi.values(), key=lambda v: abs(v - res.positions[8]))
    assert abs(res.positions[8] - half) <= bw


def test_sweep_requires_full_period(ab_cfg):
    with pytest.raises(ValueError):
        ex.fringe_shift_sweep(ab_cfg, np.linspace(0, np.pi, 5))


def test_sweep_reports_ambiguity():
    cfg = ex.ABConfig.standard(samples=400, jitter=30.0)
    res = ex.fringe_shift_sweep(cfg, np.linspace(0, TWO_PI, 5))
    assert res.ambiguous
    assert np.isnan(res.positions).any()


def test_ab_rejection_counted():
    cfg = ex.ABConfig.standard(samples=5_000, jitter=100.0, knots=2)
    prof = ex.ab_intensity(cfg)
    assert prof.rejected > 0
