#
# For licensing see accompanying LICENSE.md file.
#
""" Uniform linear array geometry, wavefront models and multi-carrier snapshot synthesis

Steering vectors stack the per-subcarrier spatial responses subcarrier-major:
entry (m, n) lives at index m * N + n.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from argmaxtools.utils import get_logger

from nearfieldkit import _constants
from nearfieldkit._constants import SPEED_OF_LIGHT
from nearfieldkit.tensor_typing import (ElementOffsetsType, PilotSymbolsType,
                                        SnapshotDataType, SteeringEntriesType,
                                        SteeringMatrixType)

logger = get_logger(__name__)


class WavefrontModel(Enum):
    EXACT = "exact"
    FRESNEL = "fresnel"
    PLANAR = "planar"

    @classmethod
    def parse(cls, model: Union[str, "WavefrontModel"]) -> "WavefrontModel":
        if isinstance(model, cls):
            return model
        try:
            return cls(model)
        except ValueError:
            raise ValueError(
                f"Unknown wavefront model: {model}. Options: {[m.value for m in cls]}")


@dataclass(frozen=True)
class ArrayConfig:
    """ Uniform linear array with N = 2N' + 1 elements indexed symmetrically about the center
    """
    n_elements: int = _constants.DEFAULT_N_ELEMENTS
    carrier_freq: float = _constants.DEFAULT_CARRIER_FREQ
    spacing: Optional[float] = None

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 3:
            raise ValueError(f"n_elements must be an integer >= 3, got {self.n_elements}")
        if self.n_elements % 2 == 0:
            raise ValueError(f"n_elements must be odd for symmetric indexing, got {self.n_elements}")
        if not self.carrier_freq > 0:
            raise ValueError(f"carrier_freq must be positive, got {self.carrier_freq}")
        if self.spacing is None:
            object.__setattr__(self, "spacing", self.wavelength / 2)
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @classmethod
    def from_aperture(cls, aperture: float, carrier_freq: float = _constants.DEFAULT_CARRIER_FREQ):
        """ Half-wavelength array with the odd element count whose aperture is closest to `aperture`
        """
        spacing = SPEED_OF_LIGHT / carrier_freq / 2
        half_count = max(1, int(round(aperture / spacing / 2)))
        return cls(n_elements=2 * half_count + 1, carrier_freq=carrier_freq)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def half_count(self) -> int:
        return (self.n_elements - 1) // 2

    @property
    def aperture(self) -> float:
        return (self.n_elements - 1) * self.spacing

    @property
    def rayleigh_distance(self) -> float:
        return 2 * self.aperture ** 2 / self.wavelength


@dataclass(frozen=True)
class WidebandConfig:
    """ OFDM sensing frame: M subcarriers spaced by Δf above the carrier, K symbols
    """
    n_subcarriers: int = _constants.DEFAULT_N_SUBCARRIERS
    subcarrier_spacing: float = _constants.DEFAULT_SUBCARRIER_SPACING
    n_symbols: int = _constants.DEFAULT_N_SYMBOLS

    def __post_init__(self):
        if int(self.n_subcarriers) != self.n_subcarriers or self.n_subcarriers < 1:
            raise ValueError(f"n_subcarriers must be a positive integer, got {self.n_subcarriers}")
        if int(self.n_symbols) != self.n_symbols or self.n_symbols < 1:
            raise ValueError(f"n_symbols must be a positive integer, got {self.n_symbols}")
        if not self.subcarrier_spacing > 0:
            raise ValueError(f"subcarrier_spacing must be positive, got {self.subcarrier_spacing}")

    @property
    def bandwidth(self) -> float:
        return self.n_subcarriers * self.subcarrier_spacing

    @property
    def distance_resolution(self) -> float:
        return SPEED_OF_LIGHT / self.bandwidth

    @property
    def wavenumber_step(self) -> float:
        return 2 * np.pi * self.subcarrier_spacing / SPEED_OF_LIGHT

    def wavenumbers(self, carrier_freq: float) -> np.ndarray:
        """ k_m = 2π(f_c + mΔf)/c for m = 0..M-1
        """
        freqs = carrier_freq + np.arange(self.n_subcarriers) * self.subcarrier_spacing
        return 2 * np.pi * freqs / SPEED_OF_LIGHT

    def with_bandwidth(self, bandwidth: float) -> "WidebandConfig":
        return WidebandConfig(
            n_subcarriers=self.n_subcarriers,
            subcarrier_spacing=bandwidth / self.n_subcarriers,
            n_symbols=self.n_symbols,
        )


def default_path_gain(range_m: float, carrier_freq: float) -> float:
    """ Free-space amplitude c / (4π f_c r)
    """
    return SPEED_OF_LIGHT / (4 * np.pi * carrier_freq * range_m)


@dataclass(frozen=True)
class Target:
    """ Point target in polar coordinates (meters, radians) with an optional complex path gain
    """
    range: float
    angle: float
    gain: Optional[complex] = None

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError(f"Target range must be positive, got {self.range}")
        if not 0 < self.angle < np.pi:
            raise ValueError(f"Target angle must lie in (0, pi), got {self.angle}")

    @classmethod
    def from_degrees(cls, range_m: float, angle_deg: float, gain: Optional[complex] = None):
        return cls(range=float(range_m), angle=float(np.deg2rad(angle_deg)), gain=gain)

    @property
    def alpha(self) -> float:
        return float(np.cos(self.angle))

    @property
    def angle_deg(self) -> float:
        return float(np.rad2deg(self.angle))

    def path_gain(self, array: ArrayConfig) -> complex:
        if self.gain is not None:
            return complex(self.gain)
        return complex(default_path_gain(self.range, array.carrier_freq))

    def check_within(self, array: ArrayConfig) -> None:
        """ Radiative near-field window D < r < R_r and field of view |cos θ| < 1/2
        """
        if not array.aperture < self.range < array.rayleigh_distance:
            raise ValueError(
                f"Target range {self.range} m outside the radiative near-field window "
                f"({array.aperture:.6g}, {array.rayleigh_distance:.6g}) m")
        if not abs(self.alpha) < _constants.FOV_ALPHA_LIMIT:
            raise ValueError(
                f"Target angle {self.angle_deg:.6g} deg outside the field of view (60, 120) deg")


@dataclass(frozen=True, eq=False)
class SteeringVector:
    entries: SteeringEntriesType
    model: WavefrontModel
    normalized: bool


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    data: SnapshotDataType
    pilot_symbols: PilotSymbolsType
    noise_variance: float
    targets: tuple = field(default=())

    @property
    def n_symbols(self) -> int:
        return self.data.shape[1]

    def scaled(self, factor: complex) -> "SnapshotMatrix":
        return SnapshotMatrix(
            data=self.data * factor,
            pilot_symbols=self.pilot_symbols,
            noise_variance=self.noise_variance * abs(factor) ** 2,
            targets=self.targets,
        )


def element_offsets(array: ArrayConfig) -> ElementOffsetsType:
    """ δ_n = n - (N-1)/2 for n = 0..N-1
    """
    return np.arange(array.n_elements) - (array.n_elements - 1) / 2


def rayleigh_distance(array: ArrayConfig) -> float:
    return array.rayleigh_distance


def _check_element_index(n: int, array: ArrayConfig) -> None:
    if not 0 <= n < array.n_elements:
        raise IndexError(f"Element index {n} out of range for N={array.n_elements}")


def exact_distance(target: Target, n: int, array: ArrayConfig) -> float:
    _check_element_index(n, array)
    offset = element_offsets(array)[n] * array.spacing
    return float(np.sqrt(
        target.range ** 2 + offset ** 2 - 2 * target.range * offset * np.cos(target.angle)))


def fresnel_distance(r0: float, alpha: float, n: int, array: ArrayConfig) -> float:
    if not r0 > 0:
        raise ValueError(f"Reference distance must be positive, got {r0}")
    _check_element_index(n, array)
    offset = element_offsets(array)[n] * array.spacing
    return float(r0 - offset * alpha + offset ** 2 * (1 - alpha ** 2) / (2 * r0))


def propagation_distances(ranges: np.ndarray,
                          thetas: np.ndarray,
                          array: ArrayConfig,
                          model: Union[str, WavefrontModel] = WavefrontModel.EXACT) -> np.ndarray:
    """ Element-to-target distances, shape (N, Q) for Q (range, angle) pairs
    """
    model = WavefrontModel.parse(model)
    ranges = np.atleast_1d(np.asarray(ranges, dtype=np.float64))[None, :]
    alphas = np.cos(np.atleast_1d(np.asarray(thetas, dtype=np.float64)))[None, :]
    offsets = (element_offsets(array) * array.spacing)[:, None]

    if model is WavefrontModel.EXACT:
        return np.sqrt(ranges ** 2 + offsets ** 2 - 2 * ranges * offsets * alphas)
    if model is WavefrontModel.FRESNEL:
        return ranges - offsets * alphas + offsets ** 2 * (1 - alphas ** 2) / (2 * ranges)
    return ranges - offsets * alphas


def steering_matrix(ranges: Sequence[float],
                    thetas: Sequence[float],
                    array: ArrayConfig,
                    wb: WidebandConfig,
                    model: Union[str, WavefrontModel] = WavefrontModel.EXACT,
                    normalize: bool = True) -> SteeringMatrixType:
    """ Columns are steering vectors for each (range, angle) pair, NM x Q
    """
    ranges = np.atleast_1d(np.asarray(ranges, dtype=np.float64))
    thetas = np.atleast_1d(np.asarray(thetas, dtype=np.float64))
    assert ranges.shape == thetas.shape, (ranges.shape, thetas.shape)

    distances = propagation_distances(ranges, thetas, array, model)
    wavenumbers = wb.wavenumbers(array.carrier_freq)
    phases = wavenumbers[:, None, None] * distances[None, :, :]
    matrix = np.exp(-1j * phases).reshape(wb.n_subcarriers * array.n_elements, ranges.size)
    if normalize:
        matrix /= np.sqrt(wb.n_subcarriers * array.n_elements)
    return matrix


def steering_vector(r: float,
                    theta: float,
                    array: ArrayConfig,
                    wb: WidebandConfig,
                    model: Union[str, WavefrontModel] = WavefrontModel.EXACT,
                    normalize: bool = True) -> SteeringVector:
    model = WavefrontModel.parse(model)
    if not r > 0:
        raise ValueError(f"Steering range must be positive, got {r}")
    entries = steering_matrix([r], [theta], array, wb, model, normalize)[:, 0]
    return SteeringVector(entries=entries, model=model, normalized=normalize)


def synthesize_snapshots(targets: Sequence[Target],
                         array: ArrayConfig,
                         wb: WidebandConfig,
                         snr_db: float,
                         seed: int) -> SnapshotMatrix:
    """ Y = Σ_p β_p a(r_p, θ_p) s_pᵀ + W with exact (un-normalized) steering vectors,
    unit-modulus random-phase pilots and circular Gaussian noise at the requested per-entry SNR
    """
    targets = tuple(targets)
    if len(targets) == 0:
        raise ValueError("At least one target is required")
    if len(targets) >= array.n_elements:
        raise ValueError(
            f"Number of targets ({len(targets)}) must be below n_elements ({array.n_elements})")
    if not np.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db}")

    positions = {(t.range, t.angle) for t in targets}
    if len(positions) != len(targets):
        raise ValueError("Target positions must be pairwise distinct")
    for target in targets:
        target.check_within(array)

    rng = np.random.default_rng(seed)
    pilots = np.exp(2j * np.pi * rng.random((len(targets), wb.n_symbols)))

    atoms = steering_matrix(
        [t.range for t in targets], [t.angle for t in targets],
        array, wb, WavefrontModel.EXACT, normalize=False)
    gains = np.array([t.path_gain(array) for t in targets])
    signal = atoms @ (gains[:, None] * pilots)

    signal_power = np.mean(np.abs(signal) ** 2)
    noise_variance = float(signal_power / 10 ** (snr_db / 10))
    noise = np.sqrt(noise_variance / 2) * (
        rng.standard_normal(signal.shape) + 1j * rng.standard_normal(signal.shape))

    logger.debug(
        f"Synthesized {signal.shape[0]}x{signal.shape[1]} snapshots for {len(targets)} "
        f"target(s) at {snr_db} dB SNR (noise variance {noise_variance:.3g})")

    return SnapshotMatrix(
        data=signal + noise,
        pilot_symbols=pilots,
        noise_variance=noise_variance,
        targets=targets,
    )


def noiseless_signal(snapshots: SnapshotMatrix, array: ArrayConfig, wb: WidebandConfig) -> np.ndarray:
    """ Rebuilds the noise-free part of `snapshots` from its targets and pilots
    """
    targets = snapshots.targets
    atoms = steering_matrix(
        [t.range for t in targets], [t.angle for t in targets],
        array, wb, WavefrontModel.EXACT, normalize=False)
    gains = np.array([t.path_gain(array) for t in targets])
    return atoms @ (gains[:, None] * snapshots.pilot_symbols)


def empirical_snr_db(snapshots: SnapshotMatrix, array: ArrayConfig, wb: WidebandConfig) -> float:
    signal = noiseless_signal(snapshots, array, wb)
    noise = snapshots.data - signal
    return float(10 * np.log10(np.mean(np.abs(signal) ** 2) / np.mean(np.abs(noise) ** 2)))
