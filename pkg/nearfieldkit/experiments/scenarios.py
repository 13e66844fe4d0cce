#
# For licensing see accompanying LICENSE.md file.
#
""" Target scenarios, sweep geometry and per-trial random streams
"""
from typing import List, Optional, Tuple

import numpy as np
from argmaxtools.utils import get_logger

from nearfieldkit import _constants
from nearfieldkit.array_model import ArrayConfig, Target
from nearfieldkit.dictionary import PolarGrid, RingPolicy, angle_grid
from nearfieldkit.errors import ConfigError
from nearfieldkit.experiments.config import ExperimentConfig
from nearfieldkit.subspace import SearchAxes

logger = get_logger(__name__)

# Random off-grid targets keep this margin from the window edges and the field-of-view limit
_WINDOW_MARGIN = 1e-3
_FOV_MARGIN = 0.9


def trial_rng(seed: int, trial: int, distance_index: int = 0) -> np.random.Generator:
    """ Independent stream for (trial, distance_index), unaffected by how many trials are requested
    """
    return np.random.default_rng(np.random.SeedSequence(seed ^ trial, spawn_key=(distance_index,)))


def trial_seed(seed: int, trial: int, distance_index: int = 0) -> int:
    return int(trial_rng(seed, trial, distance_index).integers(2 ** 63))


def random_targets(array: ArrayConfig,
                   policy: RingPolicy,
                   count: int,
                   rng: np.random.Generator,
                   grid: Optional[PolarGrid] = None) -> Tuple[Target, ...]:
    """ `count` distinct targets, either drawn from the grid atoms or uniformly in range and
    directional cosine inside the radiative near-field window
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")

    if grid is not None:
        if count > len(grid):
            raise ValueError(f"Cannot draw {count} distinct atoms from a grid of {len(grid)}")
        indices = rng.choice(len(grid), size=count, replace=False)
        return tuple(Target(range=grid.atoms[q].range, angle=grid.atoms[q].theta) for q in indices)

    r_lo = max(policy.r_min, array.aperture) * (1 + _WINDOW_MARGIN)
    r_hi = min(policy.r_max, array.rayleigh_distance) * (1 - _WINDOW_MARGIN)
    ranges = rng.uniform(r_lo, r_hi, size=count)
    alphas = rng.uniform(-_FOV_MARGIN, _FOV_MARGIN, size=count) * _constants.FOV_ALPHA_LIMIT
    return tuple(Target(range=float(r), angle=float(np.arccos(a))) for r, a in zip(ranges, alphas))


def scenario_targets(cfg: ExperimentConfig,
                     rng: np.random.Generator,
                     grid: Optional[PolarGrid] = None) -> Tuple[Target, ...]:
    """ Explicit scenario targets, or random ones when `scenario.random.count` is set
    """
    scenario = cfg.scenario
    if scenario.targets:
        return scenario.targets
    if scenario.random.count > 0:
        if scenario.random.on_grid and grid is None:
            raise ConfigError("on-grid random targets need a dictionary grid", field="scenario.random.on_grid")
        return random_targets(cfg.array, cfg.policy, scenario.random.count, rng,
                              grid=grid if scenario.random.on_grid else None)
    raise ConfigError("this experiment needs scenario.targets or scenario.random.count", field="scenario")


def search_axes(cfg: ExperimentConfig) -> SearchAxes:
    search = cfg.search
    return SearchAxes.default(
        cfg.array,
        r_min=search.r_min_m,
        r_max=search.r_max_m,
        n_ranges=search.n_ranges,
        theta_min_deg=search.theta_min_deg,
        theta_max_deg=search.theta_max_deg,
        theta_step_deg=search.theta_step_deg,
    )


def sweep_angle(cfg: ExperimentConfig) -> float:
    """ Sweep angle in radians, defaulting to the directional-cosine grid point nearest broadside
    """
    if cfg.scenario.sweep.theta_deg is not None:
        return float(np.deg2rad(cfg.scenario.sweep.theta_deg))
    alphas = angle_grid(cfg.array)
    return float(np.arccos(alphas[int(np.argmin(np.abs(alphas)))]))


def sweep_distances(cfg: ExperimentConfig) -> List[float]:
    """ Configured distances, or log-spaced samples between 1.25 D and 0.9 R_r
    """
    if cfg.scenario.sweep.distances_m is not None:
        return [float(r) for r in cfg.scenario.sweep.distances_m]
    array = cfg.array
    return [float(r) for r in np.geomspace(1.25 * array.aperture, 0.9 * array.rayleigh_distance,
                                           cfg.scenario.sweep.n_distances)]
