"""Monte-Carlo camera frames and estimators of the beam shift.

Frames are drawn from the same generative model the FI engine integrates
over: Poisson photon numbers per pixel, then a recorded level drawn from
the detector channel row by inverse CDF.  Every frame owns a Philox stream
keyed by the run seed with the frame index in the counter, so any frame can
be regenerated on its own and frames can be produced in any order.

The MLE evaluates the exact log-likelihood on a grid of g values and
refines the maximum with golden-section search on a cubic-spline
interpolant of that grid.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from wvafisher.beam import BeamSpec, PixelGrid, pixel_mean_photons
from wvafisher.detector import DetectorConfig, channel_band, expected_counts
from wvafisher.fisher import fisher_total, outcome_probs
from wvafisher.poisson import DEFAULT_POLICY, TruncationPolicy

LOG_FLOOR = math.log(1e-300)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class Setup(NamedTuple):
    beam: BeamSpec
    scheme: object
    grid: PixelGrid
    cfg: DetectorConfig
    policy: TruncationPolicy = DEFAULT_POLICY


@dataclass(frozen=True)
class Frame:
    counts: np.ndarray
    seed_tag: tuple[int, int]


def frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    seed = int(seed) % 2**64
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, int(frame_index)]))


def _draw_levels(N: np.ndarray, u: np.ndarray, cfg: DetectorConfig) -> np.ndarray:
    """Inverse-CDF draw of a recorded level for each photon number."""
    if cfg.identity:
        return N.astype(np.int64)
    out = np.empty(N.shape, dtype=np.int64)
    uniq, inv = np.unique(N, return_inverse=True)
    inv = inv.ravel()
    # group draws by photon number so each channel row is searched once
    order = np.argsort(inv, kind="stable")
    bounds = np.searchsorted(inv[order], np.arange(uniq.size + 1))
    for c0 in range(0, uniq.size, 256):
        c1 = min(c0 + 256, uniq.size)
        klo, G = channel_band(uniq[c0:c1].astype(float), cfg)
        cdf = np.cumsum(G, axis=1)
        cdf[:, -1] = 1.0
        for r in range(c0, c1):
            idx = order[bounds[r] : bounds[r + 1]]
            out[idx] = klo + np.searchsorted(cdf[r - c0], u[idx], side="right")
    return out


def sample_frames(setup: Setup, n_frames: int, seed: int, start: int = 0) -> np.ndarray:
    """Counts of frames ``start .. start + n_frames - 1``, shape (n_frames, M)."""
    n = pixel_mean_photons(setup.beam, setup.scheme, setup.grid)
    M = setup.grid.M
    N = np.empty((n_frames, M), dtype=np.int64)
    u = np.empty((n_frames, M))
    for i in range(n_frames):
        rng = frame_rng(seed, start + i)
        N[i] = rng.poisson(n)
        u[i] = rng.random(M)
    return _draw_levels(N.ravel(), u.ravel(), setup.cfg).reshape(n_frames, M)


def sample_frame(setup: Setup, seed: int, frame_index: int = 0) -> Frame:
    counts = sample_frames(setup, 1, seed, frame_index)[0]
    return Frame(counts, (int(seed), int(frame_index)))


class LikelihoodTable:
    """log p(k_j | g) for every pixel and level on a grid of g values."""

    def __init__(self, setup: Setup, g_nodes: np.ndarray):
        self.setup = setup
        self.g_nodes = np.asarray(g_nodes, dtype=float)
        cfg = setup.cfg
        tables = []
        for g in self.g_nodes:
            beam = replace(setup.beam, g=float(g))
            n = pixel_mean_photons(beam, setup.scheme, setup.grid)
            rows = []
            for j in range(setup.grid.M):
                out = outcome_probs(n[j], 0.0, cfg, setup.policy)
                if cfg.identity:
                    row = np.zeros(int(out.symbols[-1]) + 1)
                    row[out.symbols] = out.p
                else:
                    row = out.p
                rows.append(row)
            width = max(r.size for r in rows)
            P = np.zeros((setup.grid.M, width))
            for j, r in enumerate(rows):
                P[j, : r.size] = r
            with np.errstate(divide="ignore"):
                tables.append(np.maximum(np.log(P), LOG_FLOOR))
        # one spare column so out-of-table counts read as impossible
        width = max(t.shape[1] for t in tables) + 1
        self.logp = np.full((self.g_nodes.size, setup.grid.M, width), LOG_FLOOR)
        for i, t in enumerate(tables):
            self.logp[i, :, : t.shape[1]] = t

    def loglik(self, counts: np.ndarray) -> np.ndarray:
        """Log-likelihood at every node for each frame; counts shape (F, M)."""
        counts = np.atleast_2d(counts)
        k = np.clip(counts, 0, self.logp.shape[2] - 1)
        j = np.arange(counts.shape[1])
        return self.logp[:, j[None, :], k].sum(axis=2).T


def _golden_max(f, a: float, b: float, tol: float) -> float:
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


class MLEResult(NamedTuple):
    g_hat: float
    bracket_failure: bool


def mle_from_nodes(g_nodes: np.ndarray, ll: np.ndarray, tol: float, coarse: int = 64) -> MLEResult:
    """Maximize a log-likelihood known on ``g_nodes``: coarse scan, then golden
    section on the spline interpolant around the best coarse point."""
    spline = CubicSpline(g_nodes, ll)
    lo, hi = float(g_nodes[0]), float(g_nodes[-1])
    scan = np.linspace(lo, hi, coarse)
    vals = spline(scan)
    best = np.flatnonzero(vals == vals.max())
    mid = 0.5 * (lo + hi)
    i = int(best[np.argmin(np.abs(scan[best] - mid))])
    a, b = scan[max(i - 1, 0)], scan[min(i + 1, coarse - 1)]
    g_hat = _golden_max(lambda x: float(spline(x)), a, b, tol)
    edge = max(tol, 1e-9 * (hi - lo))
    return MLEResult(g_hat, g_hat - lo <= edge or hi - g_hat <= edge)


def mle_estimate(
    frame: Frame,
    setup: Setup,
    interval: tuple[float, float],
    nodes: int = 129,
    table: Optional[LikelihoodTable] = None,
) -> MLEResult:
    if table is None:
        table = LikelihoodTable(setup, np.linspace(interval[0], interval[1], nodes))
    ll = table.loglik(frame.counts)[0]
    return mle_from_nodes(table.g_nodes, ll, 1e-6 * setup.beam.w)


@dataclass(frozen=True)
class ComCalibration:
    offset: float
    scale: float


def raw_centroid(counts: np.ndarray, grid: PixelGrid) -> np.ndarray:
    counts = np.atleast_2d(counts).astype(float)
    tot = counts.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = counts @ grid.centers / tot
    return np.where(tot > 0, c, np.nan)


def calibrate_com(setup: Setup, half_span: Optional[float] = None, points: int = 11) -> ComCalibration:
    """Linear fit of the model centroid against g on a grid around g = 0.

    The default grid spans +-5 CRB standard deviations at the setup's g.
    """
    if half_span is None:
        F = fisher_total(setup.beam, setup.scheme, setup.grid, setup.cfg, setup.policy).total
        half_span = 5.0 / math.sqrt(F) if F > 0 else setup.beam.w
    gs = np.linspace(-half_span, half_span, points)
    cents = []
    for g in gs:
        n = pixel_mean_photons(replace(setup.beam, g=float(g)), setup.scheme, setup.grid)
        ek = np.array([expected_counts(v, setup.cfg, setup.policy) for v in n])
        cents.append(float(raw_centroid(ek, setup.grid)[0]))
    scale, offset = np.polyfit(gs, cents, 1)
    return ComCalibration(float(offset), float(scale))


def com_estimate(frame: Frame, grid: PixelGrid, calibration: ComCalibration) -> Optional[float]:
    c = raw_centroid(frame.counts, grid)[0]
    if not np.isfinite(c):
        return None
    return (c - calibration.offset) / calibration.scale


@dataclass
class EstimatorReport:
    estimator: str
    n_frames: int
    mean_estimate: float
    variance: float
    crb: float
    efficiency: float
    true_g: float
    failures: int = 0
    missing: int = 0
    unreliable: bool = False

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.variance / max(self.n_frames - self.missing, 1))

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = list(asdict(self))
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        row = {k: (f"{v:.17g}" if isinstance(v, float) else v) for k, v in asdict(self).items()}
        w.writerow(row)
        return buf.getvalue()


def benchmark(
    estimator: str,
    setup: Setup,
    n_frames: int,
    seed: int,
    interval: Optional[tuple[float, float]] = None,
    nodes: int = 129,
    chunk: int = 500,
) -> EstimatorReport:
    """Sample frames, estimate g on each, and compare the spread with 1/F."""
    if n_frames < 100:
        raise ValueError("benchmark needs at least 100 frames")
    if estimator not in ("MLE", "CoM"):
        raise ValueError(f"unknown estimator {estimator!r}")
    F = fisher_total(setup.beam, setup.scheme, setup.grid, setup.cfg, setup.policy).total
    if interval is None:
        half = 20.0 * abs(setup.beam.g) or 20.0 / math.sqrt(F)
        interval = (-half, half)

    if estimator == "MLE":
        table = LikelihoodTable(setup, np.linspace(interval[0], interval[1], nodes))
    else:
        calib = calibrate_com(setup)

    est = np.full(n_frames, np.nan)
    failures = 0
    for start in range(0, n_frames, chunk):
        m = min(chunk, n_frames - start)
        counts = sample_frames(setup, m, seed, start)
        if estimator == "MLE":
            ll = table.loglik(counts)
            for i in range(m):
                r = mle_from_nodes(table.g_nodes, ll[i], 1e-6 * setup.beam.w)
                est[start + i] = r.g_hat
                failures += r.bracket_failure
        else:
            c = raw_centroid(counts, setup.grid)
            est[start : start + m] = (c - calib.offset) / calib.scale

    ok = est[np.isfinite(est)]
    missing = n_frames - ok.size
    var = float(np.var(ok, ddof=1)) if ok.size > 1 else float("nan")
    return EstimatorReport(
        estimator=estimator,
        n_frames=n_frames,
        mean_estimate=float(np.mean(ok)) if ok.size else float("nan"),
        variance=var,
        crb=1.0 / F if F > 0 else float("inf"),
        efficiency=var * F,
        true_g=setup.beam.g,
        failures=int(failures),
        missing=int(missing),
        unreliable=bool(failures > 0.01 * n_frames),
    )
