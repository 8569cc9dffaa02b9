"""Sweeps, optimum search, effect matrix and beam profiles."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from wvafisher.beam import PixelGrid, conventional, pixel_mean_photons, wva_scheme_from_amplification
from wvafisher.detector import DetectorConfig, expected_counts
from wvafisher.experiments.config import ExperimentConfig, grid_points, range_matched_n_ref
from wvafisher.fisher import ConfigError, fisher_total

EFFECTS = ("saturation", "digitization", "pixel noise", "pixelation")


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(header, rows, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def _evaluate(task):
    beam, scheme, grid, cfg, policy = task
    r = fisher_total(beam, scheme, grid, cfg, policy)
    return r.total, r.max_tail_mass


def evaluate_many(tasks, threads: int = 1):
    """FI totals for a list of tasks, in task order whatever the worker count."""
    if threads <= 1 or len(tasks) < 2:
        return [_evaluate(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * threads))))


@dataclass
class SweepRow:
    n_bar: float
    scheme: str
    A_w: float
    p_ps: float
    fi_total: float
    max_tail_mass: float = field(default=0.0, repr=False)


@dataclass
class SweepResult:
    variable: str
    rows: list
    argmax: Optional[tuple[float, float]] = None
    header = ("n_bar", "scheme", "A_w", "p_ps", "fi_total")

    def table(self) -> list:
        return [(r.n_bar, r.scheme, r.A_w, r.p_ps, r.fi_total) for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_csv(self.header, self.table(), buf)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([dict(zip(self.header, r)) for r in self.table()], indent=1)

    def max_tail_mass(self) -> float:
        return max((r.max_tail_mass for r in self.rows), default=0.0)

    def series(self, scheme: str) -> tuple[np.ndarray, np.ndarray]:
        sel = [r for r in self.rows if r.scheme == scheme]
        x = np.array([r.n_bar if self.variable == "n_bar" else r.A_w for r in sel])
        return x, np.array([r.fi_total for r in sel])

    def wva_series(self) -> tuple[np.ndarray, np.ndarray]:
        """(A_w, FI) over every WVA row; the natural view of an A_w scan."""
        sel = [r for r in self.rows if r.scheme != "CM"]
        return np.array([r.A_w for r in sel]), np.array([r.fi_total for r in sel])

    def schemes(self) -> list:
        return list(dict.fromkeys(r.scheme for r in self.rows))


def _row(n_bar, scheme, res) -> SweepRow:
    return SweepRow(float(n_bar), scheme.label, float(scheme.A_w), float(scheme.p_ps), float(res[0]), float(res[1]))


def run_fi_sweep(config: ExperimentConfig, threads: int = 1) -> SweepResult:
    if config.sweep is None or config.sweep["variable"] != "n_bar":
        raise ConfigError("fi-sweep needs a sweep over n_bar")
    if not config.schemes:
        raise ConfigError("fi-sweep needs at least one scheme")
    values = config.sweep_values()
    keys, tasks = [], []
    for nb in values:
        cfg = config.detector_for(nb)
        for s in config.schemes:
            keys.append((nb, s))
            tasks.append((config.beam_at(nb), s, config.grid, cfg, config.policy))
    res = evaluate_many(tasks, threads)
    return SweepResult("n_bar", [_row(nb, s, r) for (nb, s), r in zip(keys, res)])


def _aw_grid_n_bar(config: ExperimentConfig) -> float:
    s = config.sweep
    if s is None or s["variable"] != "A_w" or "n_bar" not in s:
        raise ConfigError("A_w scans need a sweep over A_w with a fixed n_bar")
    return float(s["n_bar"])


def run_aw_scan(config: ExperimentConfig, threads: int = 1, values=None) -> SweepResult:
    """FI of WVA schemes across A_w at fixed brightness; CM rows are appended
    once when the configuration lists CM."""
    nb = _aw_grid_n_bar(config)
    values = config.sweep_values() if values is None else np.asarray(values, dtype=float)
    cfg = config.detector_for(nb)
    beam = config.beam_at(nb)
    try:
        schemes = [wva_scheme_from_amplification(a) for a in values]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if any(s.kind == "CM" for s in config.schemes):
        schemes.append(conventional())
    tasks = [(beam, s, config.grid, cfg, config.policy) for s in schemes]
    rows = [_row(nb, s, r) for s, r in zip(schemes, evaluate_many(tasks, threads))]
    wva = [r for r in rows if r.scheme != "CM"]
    best = max(wva, key=lambda r: r.fi_total, default=None)
    return SweepResult("A_w", rows, (best.A_w, best.fi_total) if best else None)


@dataclass
class Optimum:
    A_w: float
    fi: float
    flag: str  # "interior", "boundary" or "non-unimodal"


def _unimodal(vals: np.ndarray) -> bool:
    d = np.sign(np.diff(vals))
    d = d[d != 0]
    return np.count_nonzero(np.diff(d) != 0) <= 1 and (d.size == 0 or d[0] >= 0 or np.all(d < 0))


def find_optimal_aw(
    config: ExperimentConfig,
    interval: Optional[tuple[float, float]] = None,
    tol: float = 1e-3,
    fallback_points: int = 512,
) -> Optimum:
    """Golden-section maximization of FI over A_w.

    A 16-point scan guards the unimodality assumption; without it the result
    is the argmax of a ``fallback_points`` grid.
    """
    nb = _aw_grid_n_bar(config)
    if interval is None:
        interval = (config.sweep["min"], config.sweep["max"])
    a, b = map(float, interval)
    if b < a:
        raise ConfigError("optimum interval is reversed")
    cfg = config.detector_for(nb)
    beam = config.beam_at(nb)
    cache: dict[float, float] = {}

    def fi(A):
        if A not in cache:
            cache[A] = fisher_total(beam, wva_scheme_from_amplification(A), config.grid, cfg, config.policy).total
        return cache[A]

    if b == a:
        return Optimum(a, fi(a), "boundary")
    coarse = np.linspace(a, b, 16)
    vals = np.array([fi(float(x)) for x in coarse])
    if not _unimodal(vals):
        grid = np.linspace(a, b, fallback_points)
        fv = np.array([fi(float(x)) for x in grid])
        i = int(np.argmax(fv))
        return Optimum(float(grid[i]), float(fv[i]), "non-unimodal")
    i = int(np.argmax(vals))
    lo, hi = coarse[max(i - 1, 0)], coarse[min(i + 1, 15)]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    while hi - lo > tol:
        if fi(c) >= fi(d):
            hi, d = d, c
            c = hi - g * (hi - lo)
        else:
            lo, c = c, d
            d = lo + g * (hi - lo)
    best = max(((x, fi(x)) for x in (lo, hi, 0.5 * (lo + hi))), key=lambda t: t[1])
    for edge in (a, b):
        if abs(best[0] - edge) <= tol and fi(edge) >= best[1]:
            return Optimum(edge, fi(edge), "boundary")
    return Optimum(best[0], best[1], "interior")


@dataclass
class EffectCell:
    effects: tuple
    verdict: str  # "✓", "X" or "insufficient data"
    max_ratio: float = float("nan")
    n_bar: float = float("nan")
    A_w: float = float("nan")


@dataclass
class EffectMatrix:
    cells: dict

    def entry(self, a: str, b: str) -> EffectCell:
        return self.cells.get((a, b)) or self.cells[(b, a)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = []
        for (a, b), c in self.cells.items():
            rows.append((a, b, c.verdict, c.max_ratio, c.n_bar, c.A_w))
        write_csv(("effect_a", "effect_b", "verdict", "max_ratio", "n_bar", "A_w"), rows, buf)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([asdict(c) for c in self.cells.values()], indent=1)

    def render(self) -> str:
        width = max(len(e) for e in EFFECTS) + 2
        lines = ["".ljust(width) + "".join(e.ljust(width) for e in EFFECTS)]
        for a in EFFECTS:
            v = [self.entry(a, b).verdict for b in EFFECTS]
            lines.append(a.ljust(width) + "".join(x.ljust(width) for x in v))
        return "\n".join(lines)


def effect_detector(config: ExperimentConfig, active: set, n_bar: float, grid: PixelGrid) -> DetectorConfig:
    """Camera with only the ``active`` imperfections; the rest idealized."""
    base = config.detector
    if "saturation" in active:
        if base.n_sat is None:
            raise ConfigError("effect matrix needs a saturating base detector")
        n_sat, n_ref = base.n_sat, None
    else:
        peak = pixel_mean_photons(config.beam_at(n_bar), conventional(), grid).max()
        n_sat, n_ref = None, range_matched_n_ref(peak, base.k_max)
    return DetectorConfig(
        k_max=base.k_max,
        n_sat=n_sat,
        sigma=base.sigma if "pixel noise" in active else 0.0,
        digitize="digitization" in active,
        n_ref=n_ref,
        fine_factor=base.fine_factor,
    )


def run_effect_matrix(config: ExperimentConfig, threads: int = 1) -> EffectMatrix:
    spec = config.raw.get("effects")
    if spec is None:
        raise ConfigError("effect-matrix needs an effects section")
    r = spec.get("n_bar", {"min": 1e2, "max": 1e7, "points": 11})
    n_bars = grid_points(r.get("scale", "log"), r["min"], r["max"], r["points"])
    try:
        wvas = [wva_scheme_from_amplification(a) for a in spec.get("A_w", [1.8, 2.4, 3.2])]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    margin = spec.get("margin", 0.01)
    coarse = PixelGrid.symmetric(spec.get("coarse_M", 10), config.grid.x_max - config.beam.center, config.beam.center)

    combos = [(e, e) for e in EFFECTS] + list(itertools.combinations(EFFECTS, 2))
    cells = {}
    for a, b in combos:
        active = {a, b}
        if n_bars.size == 0 or not wvas:
            cells[(a, b)] = EffectCell((a, b), "insufficient data")
            continue
        grid = coarse if "pixelation" in active else config.grid
        tasks, keys = [], []
        for nb in n_bars:
            cfg = effect_detector(config, active, nb, grid)
            for s in [conventional()] + wvas:
                keys.append((nb, s))
                tasks.append((config.beam_at(nb), s, grid, cfg, config.policy))
        res = [t for t, _ in evaluate_many(tasks, threads)]
        best = (-math.inf, math.nan, math.nan)
        win = False
        per = len(wvas) + 1
        for i in range(n_bars.size):
            cm = res[i * per]
            for j, s in enumerate(wvas):
                fw = res[i * per + j + 1]
                if cm == 0 and fw == 0:
                    continue
                ratio = fw / cm if cm > 0 else math.inf
                if ratio > best[0]:
                    best = (ratio, float(n_bars[i]), s.A_w)
                win |= fw > cm * (1.0 + margin)
        if best[0] == -math.inf:
            cells[(a, b)] = EffectCell((a, b), "insufficient data")
        else:
            cells[(a, b)] = EffectCell((a, b), "✓" if win else "X", *best)
    return EffectMatrix(cells)


@dataclass
class Profiles:
    x_center: np.ndarray
    incident_cm: np.ndarray
    measured_cm: np.ndarray
    incident_wva: np.ndarray
    measured_wva: np.ndarray
    header = ("x_center", "incident_cm", "measured_cm", "incident_wva", "measured_wva")

    def table(self):
        return list(zip(*(getattr(self, h) for h in self.header)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_csv(self.header, self.table(), buf)
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([dict(zip(self.header, map(float, r))) for r in self.table()], indent=1)


def render_profiles(config: ExperimentConfig) -> Profiles:
    """Incident mean photons and expected recorded counts per pixel, CM and WVA."""
    spec = config.raw.get("profile")
    if spec is None:
        raise ConfigError("profiles need a profile section")
    nb = float(spec["n_bar"])
    try:
        wva = wva_scheme_from_amplification(spec["A_w"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    beam = config.beam_at(nb)
    cfg = config.detector_for(nb)
    inc_cm = pixel_mean_photons(beam, conventional(), config.grid)
    inc_wva = pixel_mean_photons(beam, wva, config.grid)
    meas = lambda inc: np.array([expected_counts(v, cfg, config.policy) for v in inc])
    return Profiles(config.grid.centers, inc_cm, meas(inc_cm), inc_wva, meas(inc_wva))
