"""Figure presets, sweeps and the command line interface."""

from wvafisher.experiments.config import ExperimentConfig, from_dict, load
from wvafisher.experiments.presets import PRESETS, preset
from wvafisher.experiments.runner import (
    EffectMatrix,
    Optimum,
    SweepResult,
    find_optimal_aw,
    render_profiles,
    run_aw_scan,
    run_effect_matrix,
    run_fi_sweep,
)
