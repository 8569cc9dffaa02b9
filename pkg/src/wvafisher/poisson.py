"""Truncated Poisson photon statistics shared by the detector and FI code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

N_BAR_FLOOR = 1e-300


@dataclass(frozen=True)
class TruncationPolicy:
    """Numerical truncation knobs.

    tail_epsilon bounds the Poisson mass dropped per pixel; outcomes whose
    probability is below prob_floor are left out of the FI sum.
    """

    tail_epsilon: float = 1e-12
    prob_floor: float = 1e-15

    def __post_init__(self):
        if not 0 < self.tail_epsilon <= 1e-6:
            raise ValueError(f"tail_epsilon must lie in (0, 1e-6], got {self.tail_epsilon}")
        if not self.prob_floor >= 0:
            raise ValueError(f"prob_floor must be >= 0, got {self.prob_floor}")


DEFAULT_POLICY = TruncationPolicy()


def poisson_window(n_bar_j: float, policy: TruncationPolicy = DEFAULT_POLICY) -> tuple[int, int]:
    """Photon-number window [N_lo, N_hi] outside of which at most
    ``policy.tail_epsilon`` of the Poisson(n_bar_j) mass lies.

    The budget is split evenly between the two tails. Each tail is also
    widened until the pmf just outside it is below its share: d/dn of the
    dropped upper mass is Pois(N_hi; n), which for dim pixels can exceed the
    dropped mass itself and would otherwise leak into sum_k dp(k)/dg.
    """
    if n_bar_j < 0:
        raise ValueError(f"mean photon number must be >= 0, got {n_bar_j}")
    if n_bar_j == 0:
        return 0, 0
    q = 0.5 * policy.tail_epsilon
    lo = int(poisson.ppf(q, n_bar_j))
    hi = int(poisson.isf(q, n_bar_j))
    # boost's quantile search can land one step short on the far tails
    while lo > 0 and poisson.cdf(lo - 1, n_bar_j) > q:
        lo -= 1
    while poisson.sf(hi, n_bar_j) > q or poisson.pmf(hi, n_bar_j) > q:
        hi += 1
    while lo > 0 and poisson.pmf(lo - 1, n_bar_j) > q:
        lo -= 1
    return lo, hi


def window_tail_mass(n_bar_j: float, lo: int, hi: int) -> float:
    if n_bar_j == 0:
        return 0.0
    below = poisson.cdf(lo - 1, n_bar_j) if lo > 0 else 0.0
    return float(below + poisson.sf(hi, n_bar_j))


def poisson_log_pmf(N: np.ndarray, n_bar_j: float) -> np.ndarray:
    """log Poisson pmf via log-gamma; ``n_bar_j`` is floored at 1e-300."""
    lam = max(n_bar_j, N_BAR_FLOOR)
    N = np.asarray(N, dtype=float)
    return N * np.log(lam) - lam - gammaln(N + 1.0)


def poisson_pmf(N: np.ndarray, n_bar_j: float) -> np.ndarray:
    return np.exp(poisson_log_pmf(N, n_bar_j))
