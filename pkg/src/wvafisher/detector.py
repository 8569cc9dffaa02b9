"""Per-pixel photoelectron channel p(k | N).

A pixel hit by N photons responds with mean

    mu(N) = k_max * (1 - exp(-N / N_sat))          (saturating)
    mu(N) = k_max * N / N_ref                       (linear, saturation disabled)

and records one of the levels k = 0 .. k_max-1 with discrete Gaussian
weights exp(-(k - mu)^2 / 2 sigma^2), normalized over the levels.  With
sigma = 0 the record is round(mu) clamped to the level range.

Two idealized modes exist for isolating effects:

* ``digitize=False, sigma=0``: the record is mu(N) itself.  mu is strictly
  increasing, so this is a relabeling of N and loses no information.
* ``digitize=False, sigma>0``: the level spacing is refined by
  ``fine_factor`` so that quantization is negligible next to the noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from wvafisher.poisson import DEFAULT_POLICY, TruncationPolicy, poisson_pmf, poisson_window

GAUSS_CUTOFF = 10.0  # band half-width in units of sigma


@dataclass(frozen=True)
class DetectorConfig:
    k_max: int = 256
    n_sat: Optional[float] = 500.0
    sigma: float = 0.0
    digitize: bool = True
    n_ref: Optional[float] = None
    fine_factor: int = 16
    M: Optional[int] = None

    def __post_init__(self):
        if int(self.k_max) != self.k_max or self.k_max < 2:
            raise ValueError(f"k_max must be an integer >= 2, got {self.k_max}")
        object.__setattr__(self, "k_max", int(self.k_max))
        if self.n_sat is not None and not self.n_sat > 0:
            raise ValueError(f"N_sat must be positive when enabled, got {self.n_sat}")
        if self.n_ref is not None and not self.n_ref > 0:
            raise ValueError(f"N_ref must be positive, got {self.n_ref}")
        if not self.sigma >= 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.fine_factor < 1:
            raise ValueError("fine_factor must be >= 1")

    @property
    def saturating(self) -> bool:
        return self.n_sat is not None

    @property
    def identity(self) -> bool:
        """True when the record is an exact relabeling of the photon number."""
        return not self.digitize and self.sigma == 0

    @property
    def resolution(self) -> int:
        """Levels per count unit."""
        return 1 if self.digitize or self.sigma == 0 else self.fine_factor

    @property
    def n_levels(self) -> int:
        return self.k_max * self.resolution


@dataclass(frozen=True)
class ChannelSlice:
    N: int
    probs: np.ndarray
    mu: float
    levels: np.ndarray  # recorded values, in count units


def mean_response(N, cfg: DetectorConfig):
    """Mean photoelectron response mu(N) in count units."""
    N_arr = np.asarray(N, dtype=float)
    if np.any(N_arr < 0):
        raise ValueError("photon number must be >= 0")
    if cfg.saturating:
        mu = -cfg.k_max * np.expm1(-N_arr / cfg.n_sat)
    else:
        if cfg.n_ref is None:
            raise ValueError("linear response needs n_ref")
        mu = cfg.k_max * N_arr / cfg.n_ref
    return mu if mu.ndim else float(mu)


def deterministic_levels(N: np.ndarray, cfg: DetectorConfig) -> np.ndarray:
    """Recorded level index for each photon number of a noiseless digitized pixel."""
    mu = np.atleast_1d(mean_response(N, cfg)) * cfg.resolution
    return np.clip(np.rint(mu), 0, cfg.n_levels - 1).astype(np.int64)


def channel_band(N: np.ndarray, cfg: DetectorConfig) -> tuple[int, np.ndarray]:
    """Rows p(. | N) for an array of photon numbers, restricted to a level band.

    Returns ``(lo, G)`` with ``G[i, b] = p(lo + b | N[i])`` in level-index units.
    Levels further than GAUSS_CUTOFF sigma from every mu are omitted; their
    share of each row is below exp(-50).
    """
    if cfg.identity:
        raise ValueError("identity channel has no level band")
    L = cfg.n_levels
    if cfg.sigma == 0:
        idx = deterministic_levels(N, cfg)
        lo = int(idx.min())
        G = np.zeros((idx.size, int(idx.max()) - lo + 1))
        G[np.arange(idx.size), idx - lo] = 1.0
        return lo, G
    mu = np.atleast_1d(mean_response(N, cfg)) * cfg.resolution
    s = cfg.sigma * cfg.resolution
    lo = max(0, int(math.floor(mu.min() - GAUSS_CUTOFF * s)))
    hi = min(L - 1, int(math.ceil(mu.max() + GAUSS_CUTOFF * s)))
    if hi < lo:
        # every mu sits far outside the level range; the row collapses onto the nearest edge
        lo = hi = 0 if mu.max() < 0 else L - 1
    k = np.arange(lo, hi + 1, dtype=float)
    # shift each row by its max exponent so nothing underflows to an all-zero row
    nearest = np.clip(mu, lo, hi)
    expo = (-(k[None, :] - mu[:, None]) ** 2 + (nearest[:, None] - mu[:, None]) ** 2) / (2 * s * s)
    G = np.exp(expo)
    G /= G.sum(axis=1, keepdims=True)
    return lo, G


def channel_row(N: int, cfg: DetectorConfig) -> ChannelSlice:
    """Full probability row p(k | N) over all recorded levels."""
    if N < 0:
        raise ValueError("photon number must be >= 0")
    mu = float(mean_response(N, cfg))
    if cfg.identity:
        return ChannelSlice(int(N), np.ones(1), mu, np.array([mu]))
    lo, G = channel_band(np.array([N], dtype=float), cfg)
    probs = np.zeros(cfg.n_levels)
    probs[lo : lo + G.shape[1]] = G[0]
    levels = np.arange(cfg.n_levels) / cfg.resolution
    return ChannelSlice(int(N), probs, mu, levels)


def expected_counts(n_bar_j: float, cfg: DetectorConfig, policy: TruncationPolicy = DEFAULT_POLICY) -> float:
    """Mean recorded count of a pixel receiving Poisson(n_bar_j) photons."""
    if n_bar_j < 0:
        raise ValueError("mean photon number must be >= 0")
    lo, hi = poisson_window(n_bar_j, policy)
    N = np.arange(lo, hi + 1, dtype=float)
    P = poisson_pmf(N, n_bar_j)
    if cfg.identity:
        return float(P @ mean_response(N, cfg) / P.sum())
    klo, G = channel_band(N, cfg)
    levels = (klo + np.arange(G.shape[1])) / cfg.resolution
    return float(P @ (G @ levels) / P.sum())
