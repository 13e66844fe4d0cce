#
# For licensing see accompanying LICENSE.md file.
#
""" JSON experiment configuration

Every section and key is optional; missing values take the full-scale reference defaults.
Unknown keys, wrong types and invariant violations raise ConfigError naming the dotted field path.
"""
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from argmaxtools.utils import get_logger

from nearfieldkit import _constants
from nearfieldkit.array_model import ArrayConfig, Target, WidebandConfig
from nearfieldkit.dictionary import RingPolicy
from nearfieldkit.errors import ConfigError
from nearfieldkit.recovery import SOMP_NORMS

logger = get_logger(__name__)


@dataclass(frozen=True)
class DictionarySection:
    coherence_threshold: float = _constants.DEFAULT_COHERENCE_THRESHOLD
    r_min_m: Optional[float] = None
    r_max_m: Optional[float] = None
    lattice_fallback: bool = True
    somp_norm: str = "l1"


@dataclass(frozen=True)
class SearchSection:
    theta_min_deg: float = _constants.DEFAULT_THETA_MIN_DEG
    theta_max_deg: float = _constants.DEFAULT_THETA_MAX_DEG
    theta_step_deg: float = _constants.DEFAULT_THETA_STEP_DEG
    n_ranges: int = _constants.DEFAULT_N_SEARCH_RANGES
    r_min_m: Optional[float] = None
    r_max_m: Optional[float] = None


@dataclass(frozen=True)
class BoundarySection:
    theta_deg: float = _constants.DEFAULT_BOUNDARY_THETA_DEG
    rho: Tuple[float, ...] = (0.5, 0.7, 0.8, 0.9, 0.95)
    scan_points: int = _constants.DEFAULT_SCAN_POINTS
    r_lo_m: Optional[float] = None
    r_hi_m: Optional[float] = None
    bandwidths_hz: Tuple[float, ...] = (5e6, 10e6, 20e6, 40e6, 60e6, 80e6, 100e6)
    apertures_m: Tuple[float, ...] = (0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8)
    distances: str = "fresnel"


@dataclass(frozen=True)
class RandomTargetsSection:
    count: int = 0
    on_grid: bool = False


@dataclass(frozen=True)
class SweepSection:
    distances_m: Optional[Tuple[float, ...]] = None
    n_distances: int = 8
    # None selects the directional-cosine grid point nearest broadside
    theta_deg: Optional[float] = None
    n_targets: int = 1


@dataclass(frozen=True)
class ScenarioSection:
    targets: Tuple[Target, ...] = ()
    random: RandomTargetsSection = field(default_factory=RandomTargetsSection)
    sweep: SweepSection = field(default_factory=SweepSection)


@dataclass(frozen=True)
class ExperimentConfig:
    array: ArrayConfig = field(default_factory=ArrayConfig)
    wb: WidebandConfig = field(default_factory=WidebandConfig)
    dictionary: DictionarySection = field(default_factory=DictionarySection)
    search: SearchSection = field(default_factory=SearchSection)
    boundary: BoundarySection = field(default_factory=BoundarySection)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    snr_db: float = _constants.DEFAULT_SNR_DB
    seed: int = _constants.DEFAULT_SEED
    trials: int = _constants.DEFAULT_TRIALS
    num_proc: int = _constants.NUM_PROC

    @property
    def policy(self) -> RingPolicy:
        try:
            return RingPolicy.from_threshold(
                self.array,
                coherence_threshold=self.dictionary.coherence_threshold,
                r_min=self.dictionary.r_min_m,
                r_max=self.dictionary.r_max_m,
                lattice_fallback=self.dictionary.lattice_fallback,
            )
        except ValueError as e:
            raise ConfigError(str(e), field="dictionary") from e

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, seed=seed)

    def to_dict(self) -> Dict[str, Any]:
        """ Resolved configuration in the JSON schema layout
        """
        return {
            "array": {
                "n_elements": self.array.n_elements,
                "carrier_freq_hz": self.array.carrier_freq,
                "spacing_m": self.array.spacing,
            },
            "wideband": {
                "n_subcarriers": self.wb.n_subcarriers,
                "subcarrier_spacing_hz": self.wb.subcarrier_spacing,
                "n_symbols": self.wb.n_symbols,
            },
            "dictionary": dataclasses.asdict(self.dictionary),
            "search": dataclasses.asdict(self.search),
            "boundary": {k: list(v) if isinstance(v, tuple) else v
                         for k, v in dataclasses.asdict(self.boundary).items()},
            "scenario": {
                "targets": [{"range_m": t.range, "theta_deg": t.angle_deg,
                             **({"gain": [t.gain.real, t.gain.imag]} if t.gain is not None else {})}
                            for t in self.scenario.targets],
                "random": dataclasses.asdict(self.scenario.random),
                "sweep": {k: list(v) if isinstance(v, tuple) else v
                          for k, v in dataclasses.asdict(self.scenario.sweep).items()},
            },
            "snr_db": self.snr_db,
            "seed": self.seed,
            "trials": self.trials,
            "num_proc": self.num_proc,
        }

    def config_hash(self) -> str:
        """ Short digest of the resolved configuration without num_proc
        """
        resolved = self.to_dict()
        resolved.pop("num_proc")
        canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _expect_mapping(value: Any, path: str) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"expected an object, got {type(value).__name__}", field=path or "<root>")
    return value


def _check_keys(section: Dict[str, Any], allowed, path: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}, allowed: {sorted(allowed)}",
                          field=_join(path, unknown[0]))


def _as_float(value: Any, path: str, optional: bool = False) -> Optional[float]:
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", field=path)
    if not np.isfinite(value):
        raise ConfigError(f"expected a finite number, got {value!r}", field=path)
    return float(value)


def _as_int(value: Any, path: str, optional: bool = False) -> Optional[int]:
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", field=path)
    return int(value)


def _as_bool(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"expected true or false, got {value!r}", field=path)
    return value


def _as_float_list(value: Any, path: str, optional: bool = False) -> Optional[Tuple[float, ...]]:
    if value is None and optional:
        return None
    if not isinstance(value, list) or not value:
        raise ConfigError(f"expected a nonempty list of numbers, got {value!r}", field=path)
    return tuple(_as_float(v, f"{path}[{i}]") for i, v in enumerate(value))


def _parse_array(section: Dict[str, Any]) -> ArrayConfig:
    path = "array"
    keys = {"n_elements": "n_elements", "carrier_freq_hz": "carrier_freq", "spacing_m": "spacing"}
    _check_keys(section, keys, path)
    kwargs = {}
    if "n_elements" in section:
        kwargs["n_elements"] = _as_int(section["n_elements"], "array.n_elements")
    if "carrier_freq_hz" in section:
        kwargs["carrier_freq"] = _as_float(section["carrier_freq_hz"], "array.carrier_freq_hz")
    if "spacing_m" in section:
        kwargs["spacing"] = _as_float(section["spacing_m"], "array.spacing_m", optional=True)

    try:
        return ArrayConfig(**kwargs)
    except ValueError as e:
        attr = str(e).split()[0]
        json_key = {v: k for k, v in keys.items()}.get(attr)
        raise ConfigError(str(e), field=_join(path, json_key) if json_key else path) from e


def _parse_wideband(section: Dict[str, Any]) -> WidebandConfig:
    path = "wideband"
    _check_keys(section, ("n_subcarriers", "subcarrier_spacing_hz", "n_symbols"), path)
    kwargs = {}
    if "n_subcarriers" in section:
        kwargs["n_subcarriers"] = _as_int(section["n_subcarriers"], "wideband.n_subcarriers")
    if "subcarrier_spacing_hz" in section:
        kwargs["subcarrier_spacing"] = _as_float(
            section["subcarrier_spacing_hz"], "wideband.subcarrier_spacing_hz")
    if "n_symbols" in section:
        kwargs["n_symbols"] = _as_int(section["n_symbols"], "wideband.n_symbols")

    try:
        return WidebandConfig(**kwargs)
    except ValueError as e:
        attr = str(e).split()[0]
        json_key = {"subcarrier_spacing": "subcarrier_spacing_hz"}.get(attr, attr)
        raise ConfigError(str(e), field=_join(path, json_key)) from e


def _parse_dictionary(section: Dict[str, Any]) -> DictionarySection:
    path = "dictionary"
    _check_keys(section, [f.name for f in dataclasses.fields(DictionarySection)], path)
    kwargs = {}
    if "coherence_threshold" in section:
        value = _as_float(section["coherence_threshold"], "dictionary.coherence_threshold")
        if not 0 < value < 1:
            raise ConfigError(f"must lie in (0, 1), got {value}", field="dictionary.coherence_threshold")
        kwargs["coherence_threshold"] = value
    for key in ("r_min_m", "r_max_m"):
        if key in section:
            kwargs[key] = _as_float(section[key], _join(path, key), optional=True)
            if kwargs[key] is not None and kwargs[key] <= 0:
                raise ConfigError(f"must be positive, got {kwargs[key]}", field=_join(path, key))
    if "lattice_fallback" in section:
        kwargs["lattice_fallback"] = _as_bool(section["lattice_fallback"], "dictionary.lattice_fallback")
    if "somp_norm" in section:
        if section["somp_norm"] not in SOMP_NORMS:
            raise ConfigError(f"expected one of {list(SOMP_NORMS)}, got {section['somp_norm']!r}",
                              field="dictionary.somp_norm")
        kwargs["somp_norm"] = section["somp_norm"]
    return DictionarySection(**kwargs)


def _parse_search(section: Dict[str, Any]) -> SearchSection:
    path = "search"
    _check_keys(section, [f.name for f in dataclasses.fields(SearchSection)], path)
    kwargs = {}
    for key in ("theta_min_deg", "theta_max_deg", "theta_step_deg"):
        if key in section:
            kwargs[key] = _as_float(section[key], _join(path, key))
    if "n_ranges" in section:
        kwargs["n_ranges"] = _as_int(section["n_ranges"], "search.n_ranges")
    for key in ("r_min_m", "r_max_m"):
        if key in section:
            kwargs[key] = _as_float(section[key], _join(path, key), optional=True)

    search = SearchSection(**kwargs)
    if not 0 <= search.theta_min_deg < search.theta_max_deg <= 180:
        raise ConfigError("require 0 <= theta_min_deg < theta_max_deg <= 180", field="search.theta_min_deg")
    if not search.theta_step_deg > 0:
        raise ConfigError(f"must be positive, got {search.theta_step_deg}", field="search.theta_step_deg")
    if search.n_ranges < 2:
        raise ConfigError(f"must be >= 2, got {search.n_ranges}", field="search.n_ranges")
    if search.r_min_m is not None and search.r_max_m is not None and not 0 < search.r_min_m < search.r_max_m:
        raise ConfigError("require 0 < r_min_m < r_max_m", field="search.r_min_m")
    return search


def _parse_boundary(section: Dict[str, Any]) -> BoundarySection:
    path = "boundary"
    _check_keys(section, [f.name for f in dataclasses.fields(BoundarySection)], path)
    kwargs = {}
    if "theta_deg" in section:
        kwargs["theta_deg"] = _as_float(section["theta_deg"], "boundary.theta_deg")
    if "rho" in section:
        rho = section["rho"]
        kwargs["rho"] = _as_float_list(rho if isinstance(rho, list) else [rho], "boundary.rho")
        for i, value in enumerate(kwargs["rho"]):
            if not 0 < value < 1:
                raise ConfigError(f"must lie in (0, 1), got {value}", field=f"boundary.rho[{i}]")
    if "scan_points" in section:
        kwargs["scan_points"] = _as_int(section["scan_points"], "boundary.scan_points")
        if kwargs["scan_points"] < 64:
            raise ConfigError(f"must be >= 64, got {kwargs['scan_points']}", field="boundary.scan_points")
    for key in ("r_lo_m", "r_hi_m"):
        if key in section:
            kwargs[key] = _as_float(section[key], _join(path, key), optional=True)
    for key in ("bandwidths_hz", "apertures_m"):
        if key in section:
            kwargs[key] = _as_float_list(section[key], _join(path, key))
            if min(kwargs[key]) <= 0:
                raise ConfigError("values must be positive", field=_join(path, key))
    if "distances" in section:
        if section["distances"] not in ("fresnel", "exact"):
            raise ConfigError(f"expected 'fresnel' or 'exact', got {section['distances']!r}",
                              field="boundary.distances")
        kwargs["distances"] = section["distances"]
    return BoundarySection(**kwargs)


def _parse_target(entry: Any, path: str) -> Target:
    entry = _expect_mapping(entry, path)
    _check_keys(entry, ("range_m", "theta_deg", "gain"), path)
    for key in ("range_m", "theta_deg"):
        if key not in entry:
            raise ConfigError("missing required key", field=_join(path, key))
    gain = None
    if entry.get("gain") is not None:
        value = entry["gain"]
        if isinstance(value, list) and len(value) == 2:
            gain = complex(_as_float(value[0], f"{path}.gain[0]"), _as_float(value[1], f"{path}.gain[1]"))
        else:
            gain = complex(_as_float(value, f"{path}.gain"))
    try:
        return Target.from_degrees(_as_float(entry["range_m"], f"{path}.range_m"),
                                   _as_float(entry["theta_deg"], f"{path}.theta_deg"), gain)
    except ValueError as e:
        raise ConfigError(str(e), field=path) from e


def _parse_scenario(section: Dict[str, Any]) -> ScenarioSection:
    path = "scenario"
    _check_keys(section, ("targets", "random", "sweep"), path)
    kwargs = {}
    if "targets" in section:
        if not isinstance(section["targets"], list):
            raise ConfigError("expected a list of targets", field="scenario.targets")
        kwargs["targets"] = tuple(
            _parse_target(entry, f"scenario.targets[{i}]") for i, entry in enumerate(section["targets"]))

    if "random" in section:
        random = _expect_mapping(section["random"], "scenario.random")
        _check_keys(random, ("count", "on_grid"), "scenario.random")
        count = _as_int(random.get("count", 0), "scenario.random.count")
        if count < 0:
            raise ConfigError(f"must be >= 0, got {count}", field="scenario.random.count")
        on_grid = _as_bool(random.get("on_grid", False), "scenario.random.on_grid")
        kwargs["random"] = RandomTargetsSection(count=count, on_grid=on_grid)

    if "sweep" in section:
        sweep = _expect_mapping(section["sweep"], "scenario.sweep")
        _check_keys(sweep, [f.name for f in dataclasses.fields(SweepSection)], "scenario.sweep")
        sweep_kwargs = {}
        if "distances_m" in sweep:
            sweep_kwargs["distances_m"] = _as_float_list(
                sweep["distances_m"], "scenario.sweep.distances_m", optional=True)
        if "n_distances" in sweep:
            sweep_kwargs["n_distances"] = _as_int(sweep["n_distances"], "scenario.sweep.n_distances")
            if sweep_kwargs["n_distances"] < 1:
                raise ConfigError("must be >= 1", field="scenario.sweep.n_distances")
        if "theta_deg" in sweep:
            sweep_kwargs["theta_deg"] = _as_float(sweep["theta_deg"], "scenario.sweep.theta_deg", optional=True)
        if "n_targets" in sweep:
            sweep_kwargs["n_targets"] = _as_int(sweep["n_targets"], "scenario.sweep.n_targets")
            if sweep_kwargs["n_targets"] != 1:
                raise ConfigError("only single-target sweeps are supported", field="scenario.sweep.n_targets")
        kwargs["sweep"] = SweepSection(**sweep_kwargs)
    return ScenarioSection(**kwargs)


def parse_config(document: Dict[str, Any]) -> ExperimentConfig:
    document = _expect_mapping(document, "")
    _check_keys(document, ("array", "wideband", "dictionary", "search", "boundary", "scenario",
                           "snr_db", "seed", "trials", "num_proc"), "")

    parsers = {
        "array": _parse_array,
        "wideband": _parse_wideband,
        "dictionary": _parse_dictionary,
        "search": _parse_search,
        "boundary": _parse_boundary,
        "scenario": _parse_scenario,
    }
    attributes = {"wideband": "wb"}
    kwargs = {}
    for key, parser in parsers.items():
        if key in document:
            kwargs[attributes.get(key, key)] = parser(_expect_mapping(document[key], key))

    if "snr_db" in document:
        kwargs["snr_db"] = _as_float(document["snr_db"], "snr_db")
    if "seed" in document:
        kwargs["seed"] = _as_int(document["seed"], "seed")
        if not 0 <= kwargs["seed"] < 2 ** 64:
            raise ConfigError(f"must be an unsigned 64-bit integer, got {kwargs['seed']}", field="seed")
    if "trials" in document:
        kwargs["trials"] = _as_int(document["trials"], "trials")
        if kwargs["trials"] < 1:
            raise ConfigError(f"must be >= 1, got {kwargs['trials']}", field="trials")
    if "num_proc" in document:
        kwargs["num_proc"] = _as_int(document["num_proc"], "num_proc")
        if kwargs["num_proc"] < 1:
            raise ConfigError(f"must be >= 1, got {kwargs['num_proc']}", field="num_proc")

    cfg = ExperimentConfig(**kwargs)
    _check_scenario_geometry(cfg)
    return cfg


def _check_scenario_geometry(cfg: ExperimentConfig) -> None:
    """ Scenario targets and sweep points must be synthesizable with the configured array
    """
    array = cfg.array
    targets = cfg.scenario.targets
    for i, target in enumerate(targets):
        try:
            target.check_within(array)
        except ValueError as e:
            raise ConfigError(str(e), field=f"scenario.targets[{i}]") from e
    if len({(t.range, t.angle) for t in targets}) != len(targets):
        raise ConfigError("target positions must be pairwise distinct", field="scenario.targets")
    if len(targets) >= array.n_elements:
        raise ConfigError(f"{len(targets)} targets need more than {array.n_elements} elements",
                          field="scenario.targets")
    if cfg.scenario.random.count >= array.n_elements:
        raise ConfigError(f"must be below n_elements ({array.n_elements})", field="scenario.random.count")

    sweep = cfg.scenario.sweep
    theta_deg = 90. if sweep.theta_deg is None else sweep.theta_deg
    for i, distance in enumerate(sweep.distances_m or ()):
        try:
            Target.from_degrees(distance, theta_deg).check_within(array)
        except ValueError as e:
            raise ConfigError(str(e), field=f"scenario.sweep.distances_m[{i}]") from e
    if sweep.theta_deg is not None:
        try:
            Target.from_degrees(0.5 * (array.aperture + array.rayleigh_distance), theta_deg).check_within(array)
        except ValueError as e:
            raise ConfigError(str(e), field="scenario.sweep.theta_deg") from e


def loads_config(text: str) -> ExperimentConfig:
    """ Parses a JSON document, an empty or blank document yields the defaults
    """
    if not text.strip():
        return ExperimentConfig()
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    return parse_config(document)


def load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        logger.info("No configuration given, using the full-scale reference defaults")
        return ExperimentConfig()
    if not os.path.exists(path):
        raise ConfigError(f"configuration file not found: {path}")
    with open(path) as f:
        cfg = loads_config(f.read())
    logger.debug(f"Loaded configuration {path} (hash {cfg.config_hash()})")
    return cfg
