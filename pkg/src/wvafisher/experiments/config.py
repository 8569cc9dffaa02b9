"""Experiment configuration: JSON schema, dataclasses and model builders."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema
import numpy as np

from wvafisher.beam import BeamSpec, PixelGrid, conventional, pixel_mean_photons, wva_scheme_from_amplification
from wvafisher.detector import DetectorConfig
from wvafisher.fisher import ConfigError
from wvafisher.poisson import TruncationPolicy

SCHEMA_VERSION = 1

_range = {
    "type": "object",
    "additionalProperties": False,
    "required": ["min", "max", "points"],
    "properties": {
        "scale": {"enum": ["log", "linear"]},
        "min": {"type": "number", "exclusiveMinimum": 0},
        "max": {"type": "number", "exclusiveMinimum": 0},
        "points": {"type": "integer", "minimum": 0},
    },
}

_scheme = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {"kind": {"enum": ["CM", "WVA"]}, "A_w": {"type": "number"}},
}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "beam", "grid", "detector", "schemes"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "beam": {
            "type": "object",
            "additionalProperties": False,
            "required": ["w", "g"],
            "properties": {
                "w": {"type": "number", "exclusiveMinimum": 0},
                "g": {"type": "number"},
                "center": {"type": "number"},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["M", "half_width"],
            "properties": {
                "M": {"type": "integer", "minimum": 1},
                "half_width": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "detector": {
            "type": "object",
            "additionalProperties": False,
            "required": ["k_max", "n_sat", "sigma"],
            "properties": {
                "k_max": {"type": "integer", "minimum": 2},
                "n_sat": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "sigma": {"type": "number", "minimum": 0},
                "digitize": {"type": "boolean"},
                "n_ref": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "fine_factor": {"type": "integer", "minimum": 1},
            },
        },
        "schemes": {"type": "array", "items": _scheme},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["variable", "min", "max", "points"],
            "properties": {
                "variable": {"enum": ["n_bar", "A_w"]},
                "scale": {"enum": ["log", "linear"]},
                "min": {"type": "number", "minimum": 0},
                "max": {"type": "number", "minimum": 0},
                "points": {"type": "integer", "minimum": 0},
                "n_bar": {"type": "number", "minimum": 0},
            },
        },
        "effects": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_bar": _range,
                "A_w": {"type": "array", "items": {"type": "number"}},
                "margin": {"type": "number", "minimum": 0},
                "coarse_M": {"type": "integer", "minimum": 1},
            },
        },
        "profile": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n_bar", "A_w"],
            "properties": {"n_bar": {"type": "number", "minimum": 0}, "A_w": {"type": "number"}},
        },
        "estimate": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "estimator": {"enum": ["MLE", "CoM"]},
                "n_bar": {"type": "number", "minimum": 0},
                "scheme": _scheme,
                "n_frames": {"type": "integer", "minimum": 1},
                "interval_halfwidth": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "truncation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tail_epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-6},
                "prob_floor": {"type": "number", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"csv": {"type": ["string", "null"]}},
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    },
}


def make_scheme(spec: dict):
    if spec["kind"] == "CM":
        if spec.get("A_w", 1.0) != 1.0:
            raise ConfigError("a CM scheme cannot carry A_w != 1")
        return conventional()
    if "A_w" not in spec:
        raise ConfigError("a WVA scheme needs A_w")
    try:
        return wva_scheme_from_amplification(spec["A_w"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def scheme_dict(scheme) -> dict:
    return {"kind": "CM"} if scheme.kind == "CM" else {"kind": "WVA", "A_w": scheme.A_w}


def grid_points(scale: str, lo: float, hi: float, points: int) -> np.ndarray:
    if points == 0:
        return np.empty(0)
    if points == 1:
        return np.array([float(lo)])
    if scale == "log":
        if lo <= 0:
            raise ConfigError("log-spaced sweeps need a positive lower bound")
        return np.logspace(np.log10(lo), np.log10(hi), points)
    return np.linspace(lo, hi, points)


@dataclass
class ExperimentConfig:
    raw: dict = field(repr=False)
    name: str
    beam: BeamSpec  # n_bar is a placeholder, set per sweep point
    grid: PixelGrid
    detector: DetectorConfig
    auto_n_ref: bool
    schemes: list
    policy: TruncationPolicy
    seed: int
    csv: Optional[str]

    @property
    def sweep(self) -> Optional[dict]:
        return self.raw.get("sweep")

    def sweep_values(self) -> np.ndarray:
        s = self.sweep
        if s is None:
            raise ConfigError("configuration has no sweep section")
        return grid_points(s.get("scale", "linear"), s["min"], s["max"], s["points"])

    def beam_at(self, n_bar: float) -> BeamSpec:
        return BeamSpec(self.beam.w, float(n_bar), self.beam.g, self.beam.center)

    def detector_for(self, n_bar: float, grid: Optional[PixelGrid] = None) -> DetectorConfig:
        """Detector at one sweep point.

        With auto n_ref the linear camera is range-matched to the brightest
        pixel of the undimmed (CM) beam, so every scheme compared at this
        brightness is recorded by the same camera.
        """
        if not self.auto_n_ref:
            return self.detector
        grid = grid or self.grid
        peak = pixel_mean_photons(self.beam_at(n_bar), conventional(), grid).max()
        return DetectorConfig(
            k_max=self.detector.k_max,
            n_sat=None,
            sigma=self.detector.sigma,
            digitize=self.detector.digitize,
            n_ref=range_matched_n_ref(peak, self.detector.k_max),
            fine_factor=self.detector.fine_factor,
        )

    def to_json(self) -> str:
        return json.dumps(self.raw, indent=2, sort_keys=True)


def range_matched_n_ref(peak_n_bar: float, k_max: int) -> float:
    """Linear-camera full scale so the brightest pixel's photon window stays
    below the top level (no clipping)."""
    top = peak_n_bar + 8.0 * np.sqrt(peak_n_bar) + 8.0
    return float(top * k_max / (k_max - 1))


def validate(raw: dict) -> None:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def from_dict(raw: dict) -> ExperimentConfig:
    raw = copy.deepcopy(raw)
    validate(raw)
    b, gr, d = raw["beam"], raw["grid"], raw["detector"]
    try:
        beam = BeamSpec(b["w"], 0.0, b["g"], b.get("center", 0.0))
        grid = PixelGrid.symmetric(gr["M"], gr["half_width"], beam.center)
        auto = d["n_sat"] is None and d.get("n_ref") is None
        det = DetectorConfig(
            k_max=d["k_max"],
            n_sat=d["n_sat"],
            sigma=d["sigma"],
            digitize=d.get("digitize", True),
            n_ref=d.get("n_ref"),
            fine_factor=d.get("fine_factor", 4),
        )
        t = raw.get("truncation", {})
        policy = TruncationPolicy(t.get("tail_epsilon", 1e-12), t.get("prob_floor", 1e-15))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    s = raw.get("sweep")
    if s is not None and s["max"] < s["min"]:
        raise ConfigError("sweep max is below sweep min")
    schemes = [make_scheme(x) for x in raw["schemes"]]
    return ExperimentConfig(
        raw=raw,
        name=raw.get("name", "custom"),
        beam=beam,
        grid=grid,
        detector=det,
        auto_n_ref=auto,
        schemes=schemes,
        policy=policy,
        seed=raw.get("seed", 0),
        csv=raw.get("output", {}).get("csv"),
    )


def load(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_dict(raw)
