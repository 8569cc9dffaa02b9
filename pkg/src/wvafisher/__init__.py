"""Fisher information of a saturable, digitized, noisy camera measuring a
small beam shift, for conventional measurement and weak-value amplification."""

from wvafisher.beam import (
    BeamSpec,
    MeasurementScheme,
    PixelGrid,
    conventional,
    gaussian_density,
    pixel_mean_photons,
    pixel_mean_photons_deriv,
    wva_scheme_from_amplification,
)
from wvafisher.detector import DetectorConfig, channel_row, expected_counts, mean_response
from wvafisher.fisher import (
    ConfigError,
    FIResult,
    TruncationPolicy,
    fisher_fd_check,
    fisher_per_pixel,
    fisher_total,
    outcome_probs,
    poisson_window,
)

__all__ = [
    "ConfigError",
    "BeamSpec",
    "MeasurementScheme",
    "PixelGrid",
    "conventional",
    "gaussian_density",
    "pixel_mean_photons",
    "pixel_mean_photons_deriv",
    "wva_scheme_from_amplification",
    "DetectorConfig",
    "channel_row",
    "expected_counts",
    "mean_response",
    "FIResult",
    "TruncationPolicy",
    "fisher_fd_check",
    "fisher_per_pixel",
    "fisher_total",
    "outcome_probs",
    "poisson_window",
]
