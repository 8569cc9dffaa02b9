"""Beam, measurement scheme and camera geometry.

The beam is a unit-normalized Gaussian transverse profile of width ``w``
carrying ``n_bar`` photons on average.  A measurement scheme reduces to the
pair ``(A_w, p_ps)``: the profile is displaced by ``A_w * g`` and dimmed by
``p_ps``.  Conventional measurement is ``A_w = 1, p_ps = 1``.

For the pre-selected state (|H> + |V>)/sqrt(2) and a real post-selection
state the weak value and the post-selection probability are tied together by
``p_ps = 1 / (1 + A_w**2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.special import ndtr

SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class BeamSpec:
    w: float
    n_bar: float
    g: float
    center: float = 0.0

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError(f"beam width must be positive, got {self.w}")
        if not self.n_bar >= 0:
            raise ValueError(f"mean photon number must be >= 0, got {self.n_bar}")


@dataclass(frozen=True)
class MeasurementScheme:
    kind: Literal["CM", "WVA"]
    A_w: float = 1.0
    p_ps: float = 1.0

    def __post_init__(self):
        if self.kind == "CM":
            if self.A_w != 1.0 or self.p_ps != 1.0:
                raise ValueError("conventional measurement has A_w = 1 and p_ps = 1")
        elif self.kind == "WVA":
            expected = 1.0 / (1.0 + self.A_w**2)
            if not math.isclose(self.p_ps, expected, rel_tol=1e-15, abs_tol=0.0):
                raise ValueError(
                    f"WVA scheme needs p_ps = 1/(1+A_w^2) = {expected!r}, got {self.p_ps!r}"
                )
        else:
            raise ValueError(f"unknown scheme kind {self.kind!r}")

    @property
    def label(self) -> str:
        return "CM" if self.kind == "CM" else f"WVA({self.A_w:g})"


def conventional() -> MeasurementScheme:
    return MeasurementScheme("CM")


def wva_scheme_from_amplification(A_w: float) -> MeasurementScheme:
    """WVA scheme with weak value ``A_w`` and its coupled post-selection probability.

    Raises ValueError for ``|A_w| < 1``, which the (|H>+|V>)/sqrt(2) pre-selection
    with real post-selection cannot reach.
    """
    A_w = float(A_w)
    if not math.isfinite(A_w) or abs(A_w) < 1.0:
        raise ValueError(f"|A_w| must be >= 1, got {A_w}")
    return MeasurementScheme("WVA", A_w, 1.0 / (1.0 + A_w * A_w))


@dataclass(frozen=True)
class PixelGrid:
    M: int
    x_min: float
    x_max: float
    edges: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"pixel count must be a positive integer, got {self.M}")
        if not self.x_max > self.x_min:
            raise ValueError("camera span must satisfy x_min < x_max")
        edges = np.linspace(self.x_min, self.x_max, int(self.M) + 1)
        edges[0], edges[-1] = self.x_min, self.x_max
        edges.setflags(write=False)
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "edges", edges)

    @classmethod
    def symmetric(cls, M: int, half_width: float, center: float = 0.0) -> "PixelGrid":
        return cls(M, center - half_width, center + half_width)

    @property
    def width(self) -> float:
        return (self.x_max - self.x_min) / self.M

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def gaussian_density(x, w: float):
    """Normalized Gaussian exp(-x^2 / 2w^2) / (w sqrt(2 pi))."""
    if not w > 0:
        raise ValueError(f"beam width must be positive, got {w}")
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * (x / w) ** 2) / (w * SQRT_2PI)
    return out if out.ndim else float(out)


def gaussian_bin_mass(a, b, w: float) -> np.ndarray:
    """Mass of the centered Gaussian of width ``w`` on the intervals [a, b].

    Bins right of the mode are evaluated from upper tails so far-tail bins keep
    their relative accuracy.
    """
    za = np.asarray(a, dtype=float) / w
    zb = np.asarray(b, dtype=float) / w
    right = za >= 0
    return np.where(right, ndtr(-za) - ndtr(-zb), ndtr(zb) - ndtr(za))


def _shift(beam: BeamSpec, scheme) -> float:
    return scheme.A_w * beam.g + beam.center


def pixel_mean_photons(beam: BeamSpec, scheme, grid: PixelGrid) -> np.ndarray:
    """Mean photon number reaching each pixel, clipped by the finite camera."""
    s = _shift(beam, scheme)
    mass = gaussian_bin_mass(grid.edges[:-1] - s, grid.edges[1:] - s, beam.w)
    return beam.n_bar * scheme.p_ps * np.maximum(mass, 0.0)


def pixel_mean_photons_deriv(beam: BeamSpec, scheme, grid: PixelGrid) -> np.ndarray:
    """Analytic derivative of :func:`pixel_mean_photons` with respect to ``g``."""
    s = _shift(beam, scheme)
    dens = gaussian_density(grid.edges - s, beam.w)
    return beam.n_bar * scheme.p_ps * scheme.A_w * (dens[:-1] - dens[1:])
