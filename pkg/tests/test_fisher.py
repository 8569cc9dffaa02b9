import math
import types

import mpmath as mp
import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from wvafisher.beam import (
    BeamSpec,
    PixelGrid,
    conventional,
    pixel_mean_photons,
    pixel_mean_photons_deriv,
    wva_scheme_from_amplification,
)
from wvafisher.detector import DetectorConfig
from wvafisher.fisher import (
    ConfigError,
    fisher_fd_check,
    fisher_per_pixel,
    fisher_total,
    outcome_probs,
)
from wvafisher.poisson import TruncationPolicy, poisson_window, window_tail_mass

import oracles

POLICY = TruncationPolicy()
CAMERA = PixelGrid.symmetric(100, 3.0)
FIG1B = DetectorConfig(k_max=256, n_sat=500.0, sigma=12.8)
POISSON_ONLY = DetectorConfig(k_max=256, n_sat=500.0, sigma=0.0, digitize=False)
TINY = DetectorConfig(k_max=4, n_sat=2.0, sigma=1.0)


# -- Poisson window ---------------------------------------------------------


def test_window_empty_beam():
    assert poisson_window(0.0) == (0, 0)
    assert window_tail_mass(0.0, 0, 0) == 0.0


def test_window_covers_small_mean():
    lo, hi = poisson_window(4.0)
    assert lo == 0 and hi >= 20
    assert float(oracles.poisson_sf(hi, 4.0)) <= 1e-12


@pytest.mark.parametrize("lam", [0.5, 4.0, 60.0])
def test_tail_oracles_agree(lam):
    for N in (0, 3, 20, 90):
        a = oracles.poisson_sf(N, lam)
        b = oracles.poisson_sf_by_summation(N, lam)
        assert abs(a - b) <= mp.mpf(10) ** -25 * max(b, mp.mpf(10) ** -200)


@pytest.mark.parametrize("seed", range(4))
def test_window_mass_high_precision(seed):
    rng = np.random.default_rng(seed)
    for n in 10 ** rng.uniform(-1, 6, size=25):
        lo, hi = poisson_window(float(n))
        below = oracles.poisson_cdf(lo - 1, n)
        above = oracles.poisson_sf(hi, n)
        assert below + above <= 1e-12


def test_window_is_tight():
    # narrowing either end breaks the mass budget or the boundary-pmf budget
    q = mp.mpf(0.5e-12)
    for n in (0.01, 3.0, 250.0, 1e5):
        lo, hi = poisson_window(n)
        assert oracles.poisson_sf(hi - 1, n) > q or oracles.poisson_pmf(hi - 1, n) > q
        if lo > 0:
            assert oracles.poisson_cdf(lo, n) > q or oracles.poisson_pmf(lo, n) > q


@given(st.floats(1e-6, 1e6))
@settings(max_examples=200, deadline=None)
def test_window_bounds_derivative_leak(n):
    lo, hi = poisson_window(n)
    # d/dn of the dropped mass is pmf(lo - 1) - pmf(hi)
    leak = float(oracles.poisson_pmf(hi, n)) + (float(oracles.poisson_pmf(lo - 1, n)) if lo > 0 else 0.0)
    assert leak <= 1e-12


def test_window_very_bright():
    lo, hi = poisson_window(1e8)
    assert lo < 1e8 < hi
    assert hi - lo < 2e5


# -- outcome distribution ---------------------------------------------------


@given(st.floats(0.0, 3e4), st.floats(-50.0, 50.0), st.sampled_from([FIG1B, TINY, POISSON_ONLY]))
@example(0.0078125, 1.0, FIG1B)
@settings(max_examples=60, deadline=None)
def test_outcomes_normalized(n, dn, cfg):
    out = outcome_probs(n, dn, cfg, POLICY)
    assert abs(out.p.sum() - 1) < 1e-10
    assert abs(out.dp.sum()) < 1e-10 * max(1.0, abs(dn))
    assert np.all(out.p >= 0)


def test_no_sensitivity_no_derivative():
    out = outcome_probs(150.0, 0.0, FIG1B, POLICY)
    assert np.all(out.dp == 0)
    assert fisher_per_pixel(150.0, 0.0, FIG1B) == 0.0


def test_dark_pixel_derivative_limit():
    out = outcome_probs(0.0, 3.0, POISSON_ONLY, POLICY)
    assert out.p[0] == 1.0
    assert out.dp[0] == -3.0


def _tiny_oracle(n_bar, dn, N_max=60):
    def channel(N):
        mu = 4 * (1 - mp.exp(-mp.mpf(N) / 2))
        w = [mp.exp(-((k - mu) ** 2) / 2) for k in range(4)]
        Z = mp.fsum(w)
        return [x / Z for x in w]

    rows = [channel(N) for N in range(N_max + 1)]

    def p(lam):
        pois = [mp.exp(N * mp.log(lam) - lam - mp.loggamma(N + 1)) for N in range(N_max + 1)]
        return [mp.fsum(pois[N] * rows[N][k] for N in range(N_max + 1)) for k in range(4)]

    lam = mp.mpf(n_bar)
    p0 = p(lam)
    dp = [mp.diff(lambda x: p(x)[k], lam) * dn for k in range(4)]
    fi = mp.fsum(d**2 / q for d, q in zip(dp, p0))
    return [float(x) for x in p0], [float(x) for x in dp], float(fi)


def test_tiny_instance_brute_force():
    p_ref, dp_ref, fi_ref = _tiny_oracle(2.0, 0.7)
    out = outcome_probs(2.0, 0.7, TINY, POLICY)
    assert np.allclose(out.p, p_ref, rtol=1e-9, atol=0)
    assert np.allclose(out.dp, dp_ref, rtol=1e-9, atol=0)
    assert fisher_per_pixel(2.0, 0.7, TINY) == pytest.approx(fi_ref, rel=1e-9)


def test_tiny_camera_brute_force():
    grid = PixelGrid.symmetric(3, 1.5)
    beam = BeamSpec(1.0, 3.0, 0.05)
    ref, _ = oracles.brute_force_camera_fi(3.0, 1.0, 0.05, grid.edges, 4, 1.0, 2.0, N_max=40)
    res = fisher_total(beam, conventional(), grid, TINY)
    assert np.allclose(res.per_pixel, ref, rtol=1e-9, atol=0)


# -- per-pixel and total FI ---------------------------------------------------


@pytest.mark.parametrize("n_sat", [500.0, 1e5, None])
@pytest.mark.parametrize("n", [0.3, 12.0, 700.0, 4e4])
def test_pure_poisson_pixel(n_sat, n):
    cfg = DetectorConfig(k_max=256, n_sat=n_sat, n_ref=1e3, sigma=0.0, digitize=False)
    assert fisher_per_pixel(n, 2.5, cfg) == pytest.approx(2.5**2 / n, rel=1e-10)


def test_empty_beam_total_zero():
    res = fisher_total(BeamSpec(1.0, 0.0, 0.01), conventional(), CAMERA, FIG1B)
    assert res.total == 0.0
    assert np.all(res.per_pixel == 0)


IDEAL_GRID = PixelGrid.symmetric(400, 8.0)


def test_ideal_limit_conventional():
    res = fisher_total(BeamSpec(1.0, 1000.0, 0.01), conventional(), IDEAL_GRID, POISSON_ONLY)
    assert res.total == pytest.approx(1000.0, rel=0.01)
    # finite pixels lose a little information relative to the continuum
    assert res.total <= oracles.continuous_location_fi(1000.0, 1.0, -8.0, 8.0, 0.01) * (1 + 1e-12)


def test_ideal_limit_wva():
    s = wva_scheme_from_amplification(2.0)
    res = fisher_total(BeamSpec(1.0, 1000.0, 0.01), s, IDEAL_GRID, POISSON_ONLY)
    assert res.total == pytest.approx(800.0, rel=0.01)
    ref = 0.2 * 4 * oracles.continuous_location_fi(1000.0, 1.0, -8.0, 8.0, 0.02)
    assert res.total == pytest.approx(ref, rel=0.01)


@pytest.mark.parametrize("A_w", [1.5, 2.4, 3.2])
def test_ideal_ratio(A_w):
    beam = BeamSpec(1.0, 1000.0, 0.01)
    cm = fisher_total(beam, conventional(), IDEAL_GRID, POISSON_ONLY).total
    wva = fisher_total(beam, wva_scheme_from_amplification(A_w), IDEAL_GRID, POISSON_ONLY).total
    assert wva / cm == pytest.approx(A_w**2 / (1 + A_w**2), rel=0.01)


def test_additivity_over_pixel_partition():
    beam = BeamSpec(1.0, 2e4, 0.01)
    full = fisher_total(beam, conventional(), CAMERA, FIG1B)
    rng = np.random.default_rng(3)
    perm = rng.permutation(100)
    parts = [np.sort(perm[:37]), np.sort(perm[37:80]), np.sort(perm[80:])]
    pieces = [fisher_total(beam, conventional(), CAMERA, FIG1B, pixels=p) for p in parts]
    assert math.fsum(math.fsum(p.per_pixel) for p in pieces) == pytest.approx(full.total, rel=1e-15)
    for p, idx in zip(pieces, parts):
        assert np.array_equal(p.per_pixel, full.per_pixel[idx])


@pytest.mark.parametrize("n_bar", [300.0, 5e4, 2e6])
def test_saturation_alone_is_harmless(n_bar):
    beam = BeamSpec(1.0, n_bar, 0.01)
    totals = [
        fisher_total(
            beam, conventional(), CAMERA, DetectorConfig(n_sat=ns, n_ref=1e3, sigma=0.0, digitize=False)
        ).total
        for ns in (500.0, 1e5, None)
    ]
    assert totals[1] == pytest.approx(totals[0], rel=1e-10)
    assert totals[2] == pytest.approx(totals[0], rel=1e-10)


@given(
    st.floats(10.0, 3e5),
    st.sampled_from([1.0, 1.8, 3.2]),
    st.sampled_from([0.0, 2.56, 12.8]),
    st.sampled_from([500.0, 1e5]),
    st.booleans(),
)
@settings(max_examples=15, deadline=None)
def test_data_processing_bound(n_bar, A_w, sigma, n_sat, digitize):
    scheme = conventional() if A_w == 1.0 else wva_scheme_from_amplification(A_w)
    grid = PixelGrid.symmetric(20, 3.0)
    beam = BeamSpec(1.0, n_bar, 0.01)
    cfg = DetectorConfig(k_max=64, n_sat=n_sat, sigma=sigma, digitize=digitize, fine_factor=2)
    n = pixel_mean_photons(beam, scheme, grid)
    dn = pixel_mean_photons_deriv(beam, scheme, grid)
    poisson = sum(d * d / m for d, m in zip(dn, n) if m > 0)
    assert fisher_total(beam, scheme, grid, cfg).total <= poisson + 1e-9


@pytest.mark.parametrize("g", [0.01, 0.2])
def test_shift_symmetry(g):
    up = fisher_total(BeamSpec(1.0, 3e4, g), conventional(), CAMERA, FIG1B).total
    down = fisher_total(BeamSpec(1.0, 3e4, -g), conventional(), CAMERA, FIG1B).total
    assert up == pytest.approx(down, rel=1e-10)


def test_duck_typed_scheme():
    beam = BeamSpec(1.0, 5e3, 0.01)
    a = fisher_total(beam, conventional(), CAMERA, FIG1B).total
    b = fisher_total(beam, types.SimpleNamespace(A_w=1.0, p_ps=1.0), CAMERA, FIG1B).total
    assert a == b


def test_grid_mismatch_is_config_error():
    cfg = DetectorConfig(sigma=12.8, M=50)
    with pytest.raises(ConfigError):
        fisher_total(BeamSpec(1.0, 1e3, 0.01), conventional(), CAMERA, cfg)


def test_skipped_terms_negligible():
    res = fisher_total(BeamSpec(1.0, 1e5, 0.01), conventional(), CAMERA, FIG1B)
    assert res.skipped_fi < 1e-8 * res.total
    assert res.tail_ok(POLICY)


# -- finite-difference check -------------------------------------------------


@pytest.mark.parametrize("n_bar", [1e3, 1e5])
def test_fd_check_fig1b(n_bar):
    dev = fisher_fd_check(BeamSpec(1.0, n_bar, 0.01), conventional(), CAMERA, FIG1B, step=1e-5)
    assert dev <= 1e-4


def test_fd_check_far_beam():
    grid = PixelGrid(10, 40.0, 50.0)
    assert fisher_fd_check(BeamSpec(1.0, 1e4, 0.01), conventional(), grid, FIG1B) == 0.0
    assert fisher_total(BeamSpec(1.0, 1e4, 0.01), conventional(), grid, FIG1B).total == 0.0


def test_fd_check_coarse_step_warns():
    with pytest.warns(UserWarning):
        fisher_fd_check(BeamSpec(1.0, 1e4, 0.01), conventional(), CAMERA, FIG1B, step=2.0)
