"""Fisher information about the beam shift g for a pixelated camera.

Per pixel, the recorded-count distribution is the Poisson photon law pushed
through the detector channel,

    p(k) = sum_N p(k | N) Pois(N; n_j),
    dp(k)/dg = sum_N p(k | N) Pois(N; n_j) (N - n_j) / n_j * dn_j/dg,

and F_j = sum_k (dp(k)/dg)^2 / p(k).  Pixels are independent, so the camera
FI is the sum of the F_j.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from wvafisher.beam import BeamSpec, PixelGrid, pixel_mean_photons, pixel_mean_photons_deriv
from wvafisher.detector import DetectorConfig, channel_band, deterministic_levels
from wvafisher.poisson import (
    DEFAULT_POLICY,
    N_BAR_FLOOR,
    TruncationPolicy,
    poisson_pmf,
    poisson_window,
    window_tail_mass,
)

__all__ = [
    "ConfigError",
    "FIResult",
    "PixelOutcome",
    "TruncationPolicy",
    "fisher_fd_check",
    "fisher_per_pixel",
    "fisher_total",
    "outcome_probs",
    "poisson_window",
]

ROW_CHUNK = 2048


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PixelOutcome:
    """Recorded-count distribution of one pixel and its g-derivative.

    ``symbols`` are level indices, or photon numbers for the identity channel.
    """

    symbols: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    window: tuple[int, int]
    tail_mass: float


def outcome_probs(
    n_bar_j: float,
    dn_bar_j: float,
    cfg: DetectorConfig,
    policy: TruncationPolicy = DEFAULT_POLICY,
    window: Optional[tuple[int, int]] = None,
) -> PixelOutcome:
    if n_bar_j < 0:
        raise ValueError("mean photon number must be >= 0")
    if window is None:
        window = poisson_window(n_bar_j, policy)
    lo, hi = window
    if hi < 1 and dn_bar_j != 0:
        # d/dn Pois(1; n) -> 1 as n -> 0, so the one-photon row carries derivative mass
        hi = 1
    lam = max(n_bar_j, N_BAR_FLOOR)
    N = np.arange(lo, hi + 1, dtype=float)
    P = poisson_pmf(N, lam)
    W = P * ((N - lam) / lam) * dn_bar_j
    tail = window_tail_mass(n_bar_j, lo, hi)

    if cfg.identity:
        return PixelOutcome(N.astype(np.int64), P, W, (lo, hi), tail)

    L = cfg.n_levels
    if cfg.sigma == 0:
        idx = deterministic_levels(N, cfg)
        p = np.bincount(idx, weights=P, minlength=L)
        dp = np.bincount(idx, weights=W, minlength=L)
    else:
        p = np.zeros(L)
        dp = np.zeros(L)
        for start in range(0, N.size, ROW_CHUNK):
            sl = slice(start, start + ROW_CHUNK)
            klo, G = channel_band(N[sl], cfg)
            p[klo : klo + G.shape[1]] += P[sl] @ G
            dp[klo : klo + G.shape[1]] += W[sl] @ G
    return PixelOutcome(np.arange(L), p, dp, (lo, hi), tail)


def _fi_terms(out: PixelOutcome, policy: TruncationPolicy) -> tuple[float, int, float]:
    keep = out.p >= policy.prob_floor
    keep &= out.p > 0
    F = math.fsum(out.dp[keep] ** 2 / out.p[keep])
    dropped = ~keep & (out.p > 0)
    dropped_fi = float(np.sum(out.dp[dropped] ** 2 / out.p[dropped]))
    return F, int(np.count_nonzero(~keep & (out.dp != 0))), dropped_fi


def fisher_per_pixel(
    n_bar_j: float,
    dn_bar_j: float,
    cfg: DetectorConfig,
    policy: TruncationPolicy = DEFAULT_POLICY,
) -> float:
    if dn_bar_j == 0:
        return 0.0
    return _fi_terms(outcome_probs(n_bar_j, dn_bar_j, cfg, policy), policy)[0]


@dataclass
class FIResult:
    per_pixel: np.ndarray
    total: float
    windows: np.ndarray = field(repr=False)
    tail_mass: np.ndarray = field(repr=False)
    skipped_terms: int = 0
    skipped_fi: float = 0.0

    @property
    def max_tail_mass(self) -> float:
        return float(self.tail_mass.max()) if self.tail_mass.size else 0.0

    def tail_ok(self, policy: TruncationPolicy = DEFAULT_POLICY) -> bool:
        return self.max_tail_mass <= policy.tail_epsilon


def _check_grid(grid: PixelGrid, cfg: DetectorConfig):
    if cfg.M is not None and cfg.M != grid.M:
        raise ConfigError(f"detector expects {cfg.M} pixels but the grid has {grid.M}")


def fisher_total(
    beam: BeamSpec,
    scheme,
    grid: PixelGrid,
    cfg: DetectorConfig,
    policy: TruncationPolicy = DEFAULT_POLICY,
    pixels=None,
) -> FIResult:
    """Total FI of the camera; ``pixels`` restricts the sum to a subset."""
    _check_grid(grid, cfg)
    n = pixel_mean_photons(beam, scheme, grid)
    dn = pixel_mean_photons_deriv(beam, scheme, grid)
    idx = np.arange(grid.M) if pixels is None else np.asarray(pixels, dtype=int)
    F = np.zeros(idx.size)
    windows = np.zeros((idx.size, 2), dtype=np.int64)
    tails = np.zeros(idx.size)
    skipped, skipped_fi = 0, 0.0
    for i, j in enumerate(idx):
        if dn[j] == 0:
            continue
        out = outcome_probs(n[j], dn[j], cfg, policy)
        F[i], s, sf = _fi_terms(out, policy)
        windows[i] = out.window
        tails[i] = out.tail_mass
        skipped += s
        skipped_fi += sf
    return FIResult(F, math.fsum(F), windows, tails, skipped, skipped_fi)


def fisher_fd_check(
    beam: BeamSpec,
    scheme,
    grid: PixelGrid,
    cfg: DetectorConfig,
    policy: TruncationPolicy = DEFAULT_POLICY,
    step: float = 1e-5,
) -> float:
    """Relative deviation between the analytic-derivative FI and one built from
    central differences of p(k | g +- step).

    Each pixel uses a single photon window for g - step, g, g + step so that
    truncation does not leak into the difference quotient.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    _check_grid(grid, cfg)
    analytic = fisher_total(beam, scheme, grid, cfg, policy).total
    n0 = pixel_mean_photons(beam, scheme, grid)
    n_plus = pixel_mean_photons(replace(beam, g=beam.g + step), scheme, grid)
    n_minus = pixel_mean_photons(replace(beam, g=beam.g - step), scheme, grid)
    terms = []
    for j in range(grid.M):
        if n_plus[j] == n_minus[j]:
            continue
        wins = [poisson_window(v, policy) for v in (n_minus[j], n0[j], n_plus[j])]
        win = (min(w[0] for w in wins), max(w[1] for w in wins))
        p_plus = outcome_probs(n_plus[j], 0.0, cfg, policy, window=win).p
        p_minus = outcome_probs(n_minus[j], 0.0, cfg, policy, window=win).p
        p0 = outcome_probs(n0[j], 0.0, cfg, policy, window=win).p
        dp = (p_plus - p_minus) / (2 * step)
        keep = p0 >= max(policy.prob_floor, np.finfo(float).tiny)
        terms.append(math.fsum(dp[keep] ** 2 / p0[keep]))
    fd = math.fsum(terms)
    if analytic == 0 and fd == 0:
        return 0.0
    dev = abs(fd - analytic) / max(abs(analytic), abs(fd))
    if dev > 0.1:
        warnings.warn(f"finite-difference FI deviates by {dev:.3g}; step {step} may be too coarse")
    return dev
