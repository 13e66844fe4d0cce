#
# For licensing see accompanying LICENSE.md file.
#
""" Decoupled MUSIC benchmarks

- Narrowband near-field: subcarrier-averaged N x N spatial covariance, exact spherical steering at f_c
- Wideband far-field: full NM x NM covariance, planar steering across all subcarriers
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from argmaxtools.utils import get_logger
from scipy.linalg import eigh

from nearfieldkit import _constants
from nearfieldkit.array_model import (ArrayConfig, SnapshotMatrix, WavefrontModel,
                                      WidebandConfig, element_offsets,
                                      propagation_distances)
from nearfieldkit.errors import CapacityError
from nearfieldkit.recovery import Estimate, EstimateSet
from nearfieldkit.tensor_typing import (CovarianceType, EigenvaluesType,
                                        SpectrumValuesType, SubspaceBasisType)

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    data: CovarianceType
    snapshot_count: int

    @property
    def n(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True, eq=False)
class NoiseSubspace:
    basis: SubspaceBasisType
    signal_basis: SubspaceBasisType
    # All eigenvalues, sorted descending
    eigenvalues: EigenvaluesType

    @property
    def n(self) -> int:
        return self.basis.shape[0]

    @property
    def n_sources(self) -> int:
        return self.signal_basis.shape[1]

    def reconstruct(self) -> np.ndarray:
        p = self.n_sources
        signal = (self.signal_basis * self.eigenvalues[:p]) @ self.signal_basis.conj().T
        noise = (self.basis * self.eigenvalues[p:]) @ self.basis.conj().T
        return signal + noise


@dataclass(frozen=True)
class SearchAxes:
    theta_deg: np.ndarray
    range_m: np.ndarray

    def __post_init__(self):
        for name in ("theta_deg", "range_m"):
            axis = np.asarray(getattr(self, name), dtype=np.float64)
            if axis.ndim != 1 or axis.size == 0:
                raise ValueError(f"{name} must be a nonempty 1-D axis")
            if np.any(np.diff(axis) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
            object.__setattr__(self, name, axis)
        if np.any(self.range_m <= 0):
            raise ValueError("range_m must be positive")

    @classmethod
    def default(cls,
                array: ArrayConfig,
                r_min: Optional[float] = None,
                r_max: Optional[float] = None,
                n_ranges: int = _constants.DEFAULT_N_SEARCH_RANGES,
                theta_min_deg: float = _constants.DEFAULT_THETA_MIN_DEG,
                theta_max_deg: float = _constants.DEFAULT_THETA_MAX_DEG,
                theta_step_deg: float = _constants.DEFAULT_THETA_STEP_DEG) -> "SearchAxes":
        """ Angles on a uniform degree grid, ranges log-spaced over [r_min, r_max]
        (defaults: the array aperture and the Rayleigh distance)
        """
        r_min = array.aperture if r_min is None else r_min
        r_max = array.rayleigh_distance if r_max is None else r_max
        n_thetas = int(round((theta_max_deg - theta_min_deg) / theta_step_deg)) + 1
        return cls(
            theta_deg=np.linspace(theta_min_deg, theta_max_deg, n_thetas),
            range_m=np.geomspace(r_min, r_max, n_ranges),
        )

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.theta_deg), len(self.range_m)


@dataclass(frozen=True, eq=False)
class Spectrum:
    theta_axis: np.ndarray
    range_axis: np.ndarray
    values: SpectrumValuesType

    def __post_init__(self):
        assert self.values.shape == (len(self.theta_axis), len(self.range_axis)), \
            f"Spectrum values {self.values.shape} do not match axes"

    def to_db(self, normalize: bool = True) -> np.ndarray:
        reference = self.values.max() if normalize else 1.
        return 10 * np.log10(self.values / reference)

    def to_frame(self, normalize: bool = True) -> pd.DataFrame:
        n_theta, n_range = self.values.shape
        return pd.DataFrame({
            "theta_deg": np.repeat(self.theta_axis, n_range),
            "range_m": np.tile(self.range_axis, n_theta),
            "value_db": self.to_db(normalize).ravel(),
        })


def _subcarrier_blocks(y: Union[SnapshotMatrix, np.ndarray], n_elements: int, n_subcarriers: int) -> np.ndarray:
    data = y.data if isinstance(y, SnapshotMatrix) else np.asarray(y)
    if data.shape[0] != n_elements * n_subcarriers:
        raise ValueError(
            f"Snapshot rows ({data.shape[0]}) do not match NM = {n_elements} x {n_subcarriers}")
    return data.reshape(n_subcarriers, n_elements, data.shape[1])


def spatial_covariance_nb(y: Union[SnapshotMatrix, np.ndarray],
                          array: ArrayConfig,
                          wb: WidebandConfig) -> CovarianceMatrix:
    """ R_nb = (1/(MK)) Σ_m Y_m Y_mᴴ over the N x K per-subcarrier blocks
    """
    blocks = _subcarrier_blocks(y, array.n_elements, wb.n_subcarriers)
    n_symbols = blocks.shape[2]
    data = np.einsum("mnk,mpk->np", blocks, blocks.conj()) / (wb.n_subcarriers * n_symbols)
    data = (data + data.conj().T) / 2
    return CovarianceMatrix(data=data, snapshot_count=n_symbols)


def full_covariance_wb(y: Union[SnapshotMatrix, np.ndarray]) -> CovarianceMatrix:
    """ R_wb = (1/K) Y Yᴴ, refused above the NEARFIELDKIT_MAX_WBFF_DIMENSION cap
    """
    data = y.data if isinstance(y, SnapshotMatrix) else np.asarray(y)
    if data.shape[0] > _constants.MAX_WBFF_DIMENSION:
        raise CapacityError(
            f"Wideband covariance dimension NM={data.shape[0]} exceeds the cap of "
            f"{_constants.MAX_WBFF_DIMENSION}. Use a desk-scale configuration (e.g. configs/desk_wbff.json) "
            f"or raise NEARFIELDKIT_MAX_WBFF_DIMENSION")
    n_symbols = data.shape[1]
    data = data @ data.conj().T / n_symbols
    data = (data + data.conj().T) / 2
    return CovarianceMatrix(data=data, snapshot_count=n_symbols)


def noise_subspace(r: CovarianceMatrix, p: int) -> NoiseSubspace:
    if not 1 <= p < r.n:
        raise ValueError(f"Source count must satisfy 1 <= p < n={r.n}, got {p}")

    eigenvalues, eigenvectors = eigh(r.data)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]

    if eigenvalues[p - 1] <= eigenvalues[p] * (1 + 1e-9):
        logger.warning(
            f"Eigenvalue {p} does not separate from eigenvalue {p + 1} "
            f"({eigenvalues[p - 1]:.4g} vs {eigenvalues[p]:.4g}), the signal/noise split is ambiguous")

    return NoiseSubspace(
        basis=eigenvectors[:, p:],
        signal_basis=eigenvectors[:, :p],
        eigenvalues=eigenvalues,
    )


def music_spectrum_nbnf(un: NoiseSubspace,
                        search: SearchAxes,
                        array: ArrayConfig,
                        wb: Optional[WidebandConfig] = None) -> Spectrum:
    """ S(r, θ) = 1 / max(ε, a_nbᴴ U_n U_nᴴ a_nb) with a_nb the unit-norm exact spherical
    steering vector at the carrier frequency
    """
    if un.n != array.n_elements:
        raise ValueError(f"Noise subspace dimension {un.n} does not match N={array.n_elements}")

    thetas = np.deg2rad(search.theta_deg)
    theta_grid, range_grid = np.meshgrid(thetas, search.range_m, indexing="ij")
    theta_cells, range_cells = theta_grid.ravel(), range_grid.ravel()

    denominators = np.empty(theta_cells.size)
    projector_rows = un.basis.conj().T
    for start in range(0, theta_cells.size, _constants.SPECTRUM_CHUNK_SIZE):
        stop = start + _constants.SPECTRUM_CHUNK_SIZE
        distances = propagation_distances(
            range_cells[start:stop], theta_cells[start:stop], array, WavefrontModel.EXACT)
        steering = np.exp(-1j * array.wavenumber * distances) / np.sqrt(array.n_elements)
        denominators[start:stop] = np.square(np.abs(projector_rows @ steering)).sum(axis=0)

    values = 1. / np.maximum(_constants.SPECTRUM_EPS, denominators)
    return Spectrum(theta_axis=search.theta_deg, range_axis=search.range_m,
                    values=values.reshape(search.shape))


def music_spectrum_wbff(un: NoiseSubspace,
                        search: SearchAxes,
                        array: ArrayConfig,
                        wb: WidebandConfig) -> Spectrum:
    """ S(r, θ) = 1 / max(ε, ãᴴ Ũ_n Ũ_nᴴ ã) with ã the unit-norm planar wideband steering vector
    ã[m, n] = exp(-j k_m r) exp(j k_m δ_n d α) / √(NM)

    Evaluated as 1 - ‖U_sᴴ ã‖² with the angular and range factors applied separately.
    """
    n_elements, n_subcarriers = array.n_elements, wb.n_subcarriers
    if un.n != n_elements * n_subcarriers:
        raise ValueError(f"Noise subspace dimension {un.n} does not match NM={n_elements * n_subcarriers}")

    wavenumbers = wb.wavenumbers(array.carrier_freq)
    alphas = np.cos(np.deg2rad(search.theta_deg))
    offsets = element_offsets(array) * array.spacing

    signal = un.signal_basis.reshape(n_subcarriers, n_elements, un.n_sources).conj()
    # (M, N, Θ) linear-phase factors
    angular = np.exp(1j * wavenumbers[:, None, None] * offsets[None, :, None] * alphas[None, None, :])
    angular_projection = np.einsum("mnp,mnt->pmt", signal, angular)
    # (M, R) range factors
    ranging = np.exp(-1j * wavenumbers[:, None] * search.range_m[None, :])
    projection = np.einsum("pmt,mr->ptr", angular_projection, ranging)

    signal_energy = np.square(np.abs(projection)).sum(axis=0) / (n_elements * n_subcarriers)
    values = 1. / np.maximum(_constants.SPECTRUM_EPS, 1. - signal_energy)
    return Spectrum(theta_axis=search.theta_deg, range_axis=search.range_m, values=values)


def find_peak_cells(spec: Spectrum, p: int) -> List[Tuple[int, int]]:
    """ (theta_index, range_index) of the p largest strict 8-neighborhood maxima, descending by value
    with ties broken by the lowest linear index; topped up from the largest remaining cells
    """
    values = spec.values
    if values.size == 0:
        raise ValueError("Cannot search an empty spectrum")
    if p < 1:
        raise ValueError(f"Peak count must be positive, got {p}")

    padded = np.pad(values, 1, constant_values=-np.inf)
    n_theta, n_range = values.shape
    is_peak = np.ones(values.shape, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            neighbor = padded[1 + di:1 + di + n_theta, 1 + dj:1 + dj + n_range]
            is_peak &= values > neighbor

    flat = values.ravel()
    linear = np.arange(flat.size)
    peaks = linear[is_peak.ravel()]
    peaks = peaks[np.lexsort((peaks, -flat[peaks]))]

    chosen = list(peaks[:p])
    if len(chosen) < p:
        rest = linear[~is_peak.ravel()]
        rest = rest[np.lexsort((rest, -flat[rest]))]
        chosen.extend(rest[:p - len(chosen)])

    return [tuple(int(i) for i in np.unravel_index(index, values.shape)) for index in chosen]


def find_peaks(spec: Spectrum, p: int) -> EstimateSet:
    cells = find_peak_cells(spec, p)
    return EstimateSet(tuple(
        Estimate(range=float(spec.range_axis[j]), angle=float(np.deg2rad(spec.theta_axis[i])))
        for i, j in cells
    ))


def spectrum_peak_near(spec: Spectrum,
                       r: float,
                       theta: float,
                       angle_window_deg: float = 5.,
                       range_window_frac: float = 0.5) -> float:
    """ Largest spectrum value within ±angle_window_deg and ±range_window_frac·r of (r, θ)
    """
    theta_deg = np.rad2deg(theta)
    theta_mask = np.abs(spec.theta_axis - theta_deg) <= angle_window_deg
    range_mask = np.abs(spec.range_axis - r) <= range_window_frac * r
    if not theta_mask.any() or not range_mask.any():
        raise ValueError(f"No spectrum cells within the window around ({r} m, {theta_deg} deg)")
    return float(spec.values[np.ix_(theta_mask, range_mask)].max())
