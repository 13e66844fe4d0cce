#
# For licensing see accompanying LICENSE.md file.
#
import time
from dataclasses import dataclass
from functools import partial
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import tqdm
from argmaxtools.utils import get_logger

from nearfieldkit import _constants, pipelines
from nearfieldkit.array_model import ArrayConfig, Target, synthesize_snapshots
from nearfieldkit.boundaries import (BoundaryQuery, classify_regime, r_nbnf_boundary,
                                     r_wbff_boundary)
from nearfieldkit.coherence import coherence_curve, solve_zeta
from nearfieldkit.dictionary import (PolarGrid, build_grid, fresnel_grid_size,
                                     uniform_grid_size)
from nearfieldkit.errors import CapacityError, ConfigError, UnsatisfiableConstraintError
from nearfieldkit.experiments import artifacts
from nearfieldkit.experiments.config import ExperimentConfig
from nearfieldkit.experiments.scenarios import (scenario_targets, search_axes,
                                                sweep_angle, sweep_distances,
                                                trial_rng, trial_seed)
from nearfieldkit.recovery import EstimateSet, ScoreResult, match_and_score
from nearfieldkit.subspace import Spectrum, find_peak_cells

logger = get_logger(__name__)

ZETA_THRESHOLDS = (0.5, 0.1, 0.01)
COHERENCE_CURVE_ZETAS = np.linspace(0., 100., 2001)
MUSIC_VARIANTS = {"nbnf": "nbnf_music", "wbff": "wbff_music"}
BOUNDARY_SWEEPS = ("bandwidth", "aperture")
UNSATISFIABLE_SENTINEL = -1.
MIN_NMSE_TRIALS = 10
# Uniform baseline grid step as a fraction of the range resolution
UNIFORM_GRID_STEP_FRACTION = 0.1

SWEEP_COLUMNS = ["distance_m", "method", "nmse", "nmse_median", "trials", "regime"]


@dataclass(frozen=True, eq=False)
class SweepResult:
    rows: pd.DataFrame

    def __post_init__(self):
        assert list(self.rows.columns) == SWEEP_COLUMNS, list(self.rows.columns)
        assert (self.rows["nmse"] >= 0).all(), "NMSE must be non-negative"
        assert not self.rows.duplicated(["distance_m", "method"]).any(), \
            "Each (distance, method) pair must appear once"

    def to_frame(self) -> pd.DataFrame:
        return self.rows

    def lookup(self, distance_m: float, method: str, statistic: str = "nmse_median") -> float:
        mask = np.isclose(self.rows["distance_m"], distance_m) & (self.rows["method"] == method)
        assert mask.sum() == 1, f"No unique row for ({distance_m}, {method})"
        return float(self.rows.loc[mask, statistic].iloc[0])


def run_coherence_curve(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    n_elements = cfg.array.n_elements
    curve = coherence_curve(COHERENCE_CURVE_ZETAS, n_elements)
    thresholds = pd.DataFrame({
        "delta": list(ZETA_THRESHOLDS),
        "zeta": [solve_zeta(delta, n_elements) for delta in ZETA_THRESHOLDS],
    })
    artifacts.write_csv(curve, out_dir, "coherence_curve.csv", cfg)
    artifacts.write_csv(thresholds, out_dir, "zeta_thresholds.csv", cfg)
    artifacts.log_table(f"Curvature coherence thresholds (N={n_elements})", thresholds)
    return curve, thresholds


def grid_cardinality(cfg: ExperimentConfig, grid: PolarGrid) -> pd.DataFrame:
    policy = cfg.policy
    rings = grid.rings_per_angle()
    q_theta_u, q_r_u = uniform_grid_size(
        cfg.array, policy, UNIFORM_GRID_STEP_FRACTION * cfg.wb.distance_resolution)
    q_theta_f, q_r_f = fresnel_grid_size(cfg.array, policy)
    return pd.DataFrame({
        "method": ["hybrid", "uniform", "fresnel"],
        "q_theta": [len(rings), q_theta_u, q_theta_f],
        "q_r": [max(rings.values()), q_r_u, q_r_f],
        "q_total": [len(grid), q_theta_u * q_r_u, q_theta_f * q_r_f],
    })


def run_grid(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> PolarGrid:
    grid = build_grid(cfg.array, cfg.wb, cfg.policy)
    cardinality = grid_cardinality(cfg, grid)
    artifacts.write_csv(grid.to_frame(), out_dir, "grid.csv", cfg)
    artifacts.write_csv(cardinality, out_dir, "grid_cardinality.csv", cfg)
    artifacts.log_table("Grid cardinality", cardinality)
    return grid


def _estimates_frame(estimates: EstimateSet, truth: Sequence[Target], score: ScoreResult) -> pd.DataFrame:
    matched = [estimates[e] for e in score.assignment]
    return pd.DataFrame({
        "range_m": [e.range for e in matched],
        "theta_deg": [e.angle_deg for e in matched],
        "true_range_m": [t.range for t in truth],
        "true_theta_deg": [t.angle_deg for t in truth],
    })


def run_localize(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> Tuple[EstimateSet, ScoreResult]:
    """ Grid + dictionary, snapshot synthesis, SOMP and estimate extraction
    """
    begin = time.time()
    rng = trial_rng(cfg.seed, 0)
    n_targets = len(cfg.scenario.targets) or cfg.scenario.random.count
    if n_targets == 0:
        raise ConfigError("localize needs scenario.targets or scenario.random.count", field="scenario")

    method = pipelines.CompressedSensingLocalizer(
        cfg.array, cfg.wb, n_targets, policy=cfg.policy, norm=cfg.dictionary.somp_norm)
    truth = scenario_targets(cfg, rng, grid=method.grid)
    snapshots = synthesize_snapshots(truth, cfg.array, cfg.wb, cfg.snr_db, seed=trial_seed(cfg.seed, 0))

    estimates = method(snapshots)
    score = match_and_score(estimates, truth)

    artifacts.write_csv(method.last_result.to_frame(method.grid), out_dir, "coefficients.csv", cfg)
    artifacts.write_csv(_estimates_frame(estimates, truth, score), out_dir, "estimates.csv", cfg)

    logger.info(f"""\n
    =======================================================
    Localization Results
    =======================================================

    Targets:\t{n_targets}
    Dictionary:\t{method.dictionary.n_atoms} atoms
    SNR:\t{cfg.snr_db} dB
    -------------------------------------------------------
    NMSE:\t{score.nmse:.4g}
    Elapsed:\t{time.time() - begin:.3g} s
    =======================================================
    """)
    return estimates, score


def _check_wbff_capacity(cfg: ExperimentConfig) -> None:
    dimension = cfg.array.n_elements * cfg.wb.n_subcarriers
    if dimension > _constants.MAX_WBFF_DIMENSION:
        raise CapacityError(
            f"WB-FF MUSIC needs an NM x NM covariance with NM={dimension}, above the cap of "
            f"{_constants.MAX_WBFF_DIMENSION}. Use a desk-scale configuration such as configs/desk_wbff.json")


def run_music(cfg: ExperimentConfig, variant: str, out_dir: Optional[str] = None) -> Tuple[Spectrum, EstimateSet]:
    if variant not in MUSIC_VARIANTS:
        raise ValueError(f"Unknown MUSIC variant: {variant}. Options: {list(MUSIC_VARIANTS)}")
    if variant == "wbff":
        _check_wbff_capacity(cfg)

    truth = scenario_targets(cfg, trial_rng(cfg.seed, 0))
    snapshots = synthesize_snapshots(truth, cfg.array, cfg.wb, cfg.snr_db, seed=trial_seed(cfg.seed, 0))

    method = pipelines.get_method_cls(MUSIC_VARIANTS[variant])(
        cfg.array, cfg.wb, len(truth), search=search_axes(cfg))
    estimates = method(snapshots)
    spectrum = method.last_spectrum

    values_db = spectrum.to_db()
    cells = find_peak_cells(spectrum, len(truth))
    peaks = pd.DataFrame({
        "rank": np.arange(1, len(cells) + 1),
        "range_m": [spectrum.range_axis[j] for _, j in cells],
        "theta_deg": [spectrum.theta_axis[i] for i, _ in cells],
        "value_db": [values_db[i, j] for i, j in cells],
    })
    artifacts.write_csv(spectrum.to_frame(), out_dir, f"spectrum_{variant}.csv", cfg)
    artifacts.write_csv(peaks, out_dir, f"peaks_{variant}.csv", cfg)
    artifacts.log_table(f"{method.__class__.__name__} peaks", peaks)
    return spectrum, estimates


def _boundary_query(cfg: ExperimentConfig, array: ArrayConfig, rho: float) -> BoundaryQuery:
    boundary = cfg.boundary
    return BoundaryQuery.default(
        array,
        theta_deg=boundary.theta_deg,
        threshold=rho,
        r_lo=boundary.r_lo_m,
        r_hi=boundary.r_hi_m,
        scan_points=boundary.scan_points,
    )


def run_boundary_sweep(cfg: ExperimentConfig,
                       sweep: str,
                       rho_list: Optional[Sequence[float]] = None,
                       out_dir: Optional[str] = None) -> pd.DataFrame:
    """ r_NB-NF against bandwidth or r_WB-FF against aperture, one row per (sweep value, ρ)
    """
    if sweep not in BOUNDARY_SWEEPS:
        raise ValueError(f"Unknown boundary sweep: {sweep}. Options: {list(BOUNDARY_SWEEPS)}")
    rho_list = list(rho_list or cfg.boundary.rho)
    distances = cfg.boundary.distances

    if sweep == "bandwidth":
        sweep_var, values = "bandwidth_hz", cfg.boundary.bandwidths_hz
    else:
        sweep_var, values = "aperture_m", cfg.boundary.apertures_m

    rows = []
    for value in tqdm.tqdm(values, desc=f"{sweep} sweep"):
        for rho in rho_list:
            try:
                if sweep == "bandwidth":
                    boundary_m = r_nbnf_boundary(
                        _boundary_query(cfg, cfg.array, rho), cfg.array, cfg.wb.with_bandwidth(value), distances)
                else:
                    array = ArrayConfig.from_aperture(value, cfg.array.carrier_freq)
                    boundary_m = r_wbff_boundary(
                        _boundary_query(cfg, array, rho), array, cfg.wb, distances)
            except UnsatisfiableConstraintError as e:
                logger.warning(f"{sweep_var}={value:.6g}, rho={rho}: {e}. Recording {UNSATISFIABLE_SENTINEL}")
                boundary_m = UNSATISFIABLE_SENTINEL
            rows.append({"sweep_var": sweep_var, "value": float(value), "rho": float(rho),
                         "boundary_m": boundary_m})

    table = pd.DataFrame(rows, columns=["sweep_var", "value", "rho", "boundary_m"])
    artifacts.write_csv(table, out_dir, f"boundary_{sweep}.csv", cfg)
    artifacts.log_table(f"Boundary sweep over {sweep_var}", table)
    return table


def _nmse_trial(item: Tuple[int, int],
                cfg: ExperimentConfig,
                theta: float,
                distances: Sequence[float],
                methods: Sequence[pipelines.LocalizationMethod]) -> Dict:
    """ One Monte-Carlo trial at one distance, scored for every method
    """
    distance_index, trial = item
    truth = (Target(range=distances[distance_index], angle=theta),)
    snapshots = synthesize_snapshots(
        truth, cfg.array, cfg.wb, cfg.snr_db, seed=trial_seed(cfg.seed, trial, distance_index))

    result = {"distance_index": distance_index, "trial": trial}
    for method in methods:
        result[method.name] = match_and_score(method(snapshots), truth).nmse
    return result


def build_methods(cfg: ExperimentConfig,
                  names: Sequence[str] = pipelines.METHODS,
                  n_targets: int = 1) -> List[pipelines.LocalizationMethod]:
    methods = []
    search = search_axes(cfg)
    for name in names:
        method_cls = pipelines.get_method_cls(name)
        if method_cls is pipelines.CompressedSensingLocalizer:
            methods.append(method_cls(cfg.array, cfg.wb, n_targets, policy=cfg.policy,
                                      norm=cfg.dictionary.somp_norm))
        else:
            methods.append(method_cls(cfg.array, cfg.wb, n_targets, search=search))
    return methods


def run_nmse_sweep(cfg: ExperimentConfig,
                   out_dir: Optional[str] = None,
                   method_names: Sequence[str] = pipelines.METHODS) -> SweepResult:
    """ Monte-Carlo NMSE against distance for each localization method
    """
    if cfg.trials < MIN_NMSE_TRIALS:
        raise ConfigError(f"the NMSE sweep needs at least {MIN_NMSE_TRIALS} trials, got {cfg.trials}",
                          field="trials")
    if "wbff_music" in method_names:
        _check_wbff_capacity(cfg)

    theta = sweep_angle(cfg)
    distances = sweep_distances(cfg)
    methods = build_methods(cfg, method_names)
    items = [(i, t) for i in range(len(distances)) for t in range(cfg.trials)]

    logger.info(f"""\n
    =======================================================
    NMSE sweep: {len(distances)} distances x {cfg.trials} trials
    N={cfg.array.n_elements}, M={cfg.wb.n_subcarriers}, theta={np.rad2deg(theta):.4g} deg, SNR={cfg.snr_db} dB
    Methods: {', '.join(method_names)}
    =======================================================
    """)

    begin = time.time()
    run_trial = partial(_nmse_trial, cfg=cfg, theta=theta, distances=distances, methods=methods)
    num_proc = min(cfg.num_proc, len(items))
    if num_proc > 1:
        logger.info(f"Launching {num_proc} processes")
        with Pool(num_proc) as pool:
            results = list(tqdm.tqdm(pool.imap(run_trial, items), total=len(items)))
    else:
        results = [run_trial(item) for item in tqdm.tqdm(items)]

    trials = pd.DataFrame(results)
    rows = []
    for i, distance in enumerate(distances):
        regime = classify_regime(distance, theta, cfg.array, cfg.wb).value
        at_distance = trials[trials["distance_index"] == i]
        for name in method_names:
            rows.append({
                "distance_m": distance,
                "method": name,
                "nmse": float(at_distance[name].mean()),
                "nmse_median": float(at_distance[name].median()),
                "trials": int(len(at_distance)),
                "regime": regime,
            })

    result = SweepResult(pd.DataFrame(rows, columns=SWEEP_COLUMNS))
    artifacts.write_csv(result.to_frame(), out_dir, "nmse_sweep.csv", cfg)
    artifacts.log_table(f"NMSE sweep ({time.time() - begin:.3g} s)", result.to_frame())
    return result
