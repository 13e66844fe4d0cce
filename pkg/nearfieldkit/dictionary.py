#
# For licensing see accompanying LICENSE.md file.
#
""" Hybrid angle-distance sampling grid and the exact-wavefront overcomplete dictionary

Angles sit on the directional-cosine grid whose spacing matches the array-factor nulls.
Distance rings are generated outside-in from r_max: each ideal Fresnel ring is quantized onto the
bandwidth lattice r_max - kΔr, so every pair of rings is separated by an integer number of range bins.
"""
from dataclasses import dataclass, field
from typing import FrozenSet, List, NamedTuple, Optional, Tuple, Union

import numpy as np
import pandas as pd
from argmaxtools.utils import get_logger

from nearfieldkit import _constants
from nearfieldkit.array_model import (ArrayConfig, WavefrontModel, WidebandConfig,
                                      steering_matrix)
from nearfieldkit.coherence import curvature_coherence_from_zeta, solve_zeta
from nearfieldkit.errors import CapacityError, ConfigError
from nearfieldkit.tensor_typing import DictionaryMatrixType

logger = get_logger(__name__)

# Quantization ceilings tolerate this much floating point excess
_CEIL_TOL = 1e-9


@dataclass(frozen=True)
class RingPolicy:
    """ Distance-ring design parameters

    g_delta is the ring scale G_Δ = D² / (2 ζ_Δ² λ_c): consecutive ideal rings of an angle α
    satisfy 1/r̃_l - 1/r̃_(l-1) = 1 / (G_Δ (1 - α²)).
    """
    coherence_threshold: float
    zeta_delta: float
    g_delta: float
    r_min: float
    r_max: float
    lattice_fallback: bool = True

    def __post_init__(self):
        if not 0 < self.coherence_threshold < 1:
            raise ValueError(f"coherence_threshold must lie in (0, 1), got {self.coherence_threshold}")
        if not self.zeta_delta > 0:
            raise ValueError(f"zeta_delta must be positive, got {self.zeta_delta}")
        if not self.g_delta > 0:
            raise ValueError(f"g_delta must be positive, got {self.g_delta}")
        if not 0 < self.r_min < self.r_max:
            raise ValueError(f"Require 0 < r_min < r_max, got r_min={self.r_min}, r_max={self.r_max}")

    @staticmethod
    def _window(array: ArrayConfig, r_min: Optional[float], r_max: Optional[float]) -> Tuple[float, float]:
        return (array.aperture if r_min is None else r_min,
                array.rayleigh_distance if r_max is None else r_max)

    @classmethod
    def from_threshold(cls,
                       array: ArrayConfig,
                       coherence_threshold: float = _constants.DEFAULT_COHERENCE_THRESHOLD,
                       r_min: Optional[float] = None,
                       r_max: Optional[float] = None,
                       lattice_fallback: bool = True) -> "RingPolicy":
        zeta_delta = solve_zeta(coherence_threshold, array.n_elements)
        g_delta = array.aperture ** 2 / (2 * zeta_delta ** 2 * array.wavelength)
        r_min, r_max = cls._window(array, r_min, r_max)
        return cls(coherence_threshold=coherence_threshold, zeta_delta=zeta_delta, g_delta=g_delta,
                   r_min=r_min, r_max=r_max, lattice_fallback=lattice_fallback)

    @classmethod
    def from_ring_scale(cls,
                        array: ArrayConfig,
                        g_delta: float,
                        r_min: Optional[float] = None,
                        r_max: Optional[float] = None,
                        lattice_fallback: bool = True) -> "RingPolicy":
        """ Policy with an explicit ring scale, ζ_Δ and Δ are derived from it
        """
        if not g_delta > 0:
            raise ValueError(f"g_delta must be positive, got {g_delta}")
        zeta_delta = array.aperture / np.sqrt(2 * g_delta * array.wavelength)
        threshold = float(curvature_coherence_from_zeta(zeta_delta, array.n_elements))
        threshold = min(max(threshold, 1e-12), 1 - 1e-12)
        r_min, r_max = cls._window(array, r_min, r_max)
        return cls(coherence_threshold=threshold, zeta_delta=float(zeta_delta), g_delta=g_delta,
                   r_min=r_min, r_max=r_max, lattice_fallback=lattice_fallback)

    def ring_scale(self, alpha: float) -> float:
        return self.g_delta * (1 - alpha ** 2)


class PolarAtom(NamedTuple):
    alpha: float
    range: float
    ring_index: int
    angle_index: int

    @property
    def theta(self) -> float:
        return float(np.arccos(self.alpha))


@dataclass(frozen=True, eq=False)
class PolarGrid:
    atoms: Tuple[PolarAtom, ...]
    n_elements: int
    distance_resolution: float
    # Angles whose rings come from the bandwidth lattice instead of the Fresnel recursion
    fallback_angles: FrozenSet[int] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def alphas(self) -> np.ndarray:
        return np.array([atom.alpha for atom in self.atoms])

    @property
    def ranges(self) -> np.ndarray:
        return np.array([atom.range for atom in self.atoms])

    @property
    def thetas(self) -> np.ndarray:
        return np.arccos(self.alphas)

    def rings_per_angle(self) -> dict:
        counts = {}
        for atom in self.atoms:
            counts[atom.angle_index] = counts.get(atom.angle_index, 0) + 1
        return counts

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "angle_index": [atom.angle_index for atom in self.atoms],
            "ring_index": [atom.ring_index for atom in self.atoms],
            "alpha": self.alphas,
            "theta_deg": np.rad2deg(self.thetas),
            "range_m": self.ranges,
        })


@dataclass(frozen=True, eq=False)
class Dictionary:
    matrix: DictionaryMatrixType
    grid: PolarGrid

    def __post_init__(self):
        assert self.matrix.shape[1] == len(self.grid), \
            f"Dictionary has {self.matrix.shape[1]} columns for {len(self.grid)} grid atoms"

    @property
    def n_atoms(self) -> int:
        return self.matrix.shape[1]

    def gram_coherence(self) -> float:
        """ μ(B): largest off-diagonal magnitude of the Gram matrix
        """
        gram = np.abs(self.matrix.conj().T @ self.matrix)
        np.fill_diagonal(gram, 0.)
        return float(gram.max()) if gram.size else 0.


def angle_grid(array: Union[ArrayConfig, int]) -> np.ndarray:
    """ α_n' = -1/2 + (2n' + 1)/N for n' = 0..⌊N/2⌋ - 1, spaced by the array-factor null width 2/N
    """
    n_elements = array.n_elements if isinstance(array, ArrayConfig) else int(array)
    return -0.5 + (2 * np.arange(n_elements // 2) + 1) / n_elements


def _recursive_rings(alpha: float, policy: RingPolicy, wb: WidebandConfig) -> List[Tuple[int, float]]:
    scale = policy.ring_scale(alpha)
    step = wb.distance_resolution

    rings = []
    r_prev = policy.r_max
    ring_index = max(1, int(np.ceil(scale / policy.r_max - _CEIL_TOL)))
    while True:
        r_ideal = scale / ring_index
        k = max(1, int(np.ceil((r_prev - r_ideal) / step - _CEIL_TOL)))
        r_next = policy.r_max - (round((policy.r_max - r_prev) / step) + k) * step

        if rings:
            # Keep the inverse-distance gap at least that of consecutive ideal rings
            while r_next >= policy.r_min and 1 / r_next - 1 / r_prev < 1 / scale - _CEIL_TOL:
                k += 1
                r_next -= step

        if r_next < policy.r_min or r_next <= 0:
            break

        rings.append((ring_index, r_next))
        r_prev = r_next
        ring_index += 1
    return rings


def _lattice_rings(policy: RingPolicy, wb: WidebandConfig) -> List[Tuple[int, float]]:
    step = wb.distance_resolution
    n_rings = int(np.floor((policy.r_max - policy.r_min) / step + _CEIL_TOL))
    return [(k, policy.r_max - k * step) for k in range(1, n_rings + 1)
            if policy.r_max - k * step >= policy.r_min]


def _distance_rings(alpha: float, policy: RingPolicy, wb: WidebandConfig) -> Tuple[List[Tuple[int, float]], bool]:
    if not abs(alpha) < 1:
        raise ValueError(f"Directional cosine must satisfy |alpha| < 1, got {alpha}")

    rings = _recursive_rings(alpha, policy, wb)
    if rings or not policy.lattice_fallback:
        return rings, False
    return _lattice_rings(policy, wb), True


def distance_rings(alpha: float, policy: RingPolicy, wb: WidebandConfig) -> List[Tuple[int, float]]:
    """ Outside-in distance rings (ring_index, range) for one angle, strictly decreasing in range
    """
    return _distance_rings(alpha, policy, wb)[0]


def build_grid(array: ArrayConfig, wb: WidebandConfig, policy: RingPolicy) -> PolarGrid:
    atoms = []
    fallback_angles = set()
    for angle_index, alpha in enumerate(angle_grid(array)):
        rings, used_fallback = _distance_rings(alpha, policy, wb)
        if used_fallback:
            fallback_angles.add(angle_index)
        atoms.extend(
            PolarAtom(alpha=float(alpha), range=float(r), ring_index=ring_index, angle_index=angle_index)
            for ring_index, r in rings
        )

    if not atoms:
        raise ConfigError(
            f"Empty sampling grid: no distance ring fits in [{policy.r_min:.6g}, {policy.r_max:.6g}] m "
            f"with range resolution {wb.distance_resolution:.6g} m", field="dictionary")

    n_angles = len(angle_grid(array))
    if fallback_angles:
        logger.warning(
            f"Ring scale G_Δ={policy.g_delta:.4g} m puts the Fresnel rings below r_min for "
            f"{len(fallback_angles)}/{n_angles} angles, using the range-resolution lattice there")

    logger.debug(f"Built polar grid: {len(atoms)} atoms over {n_angles} angles")
    return PolarGrid(
        atoms=tuple(atoms),
        n_elements=array.n_elements,
        distance_resolution=wb.distance_resolution,
        fallback_angles=frozenset(fallback_angles),
    )


def build_dictionary(grid: PolarGrid, array: ArrayConfig, wb: WidebandConfig) -> Dictionary:
    """ Columns are unit-norm exact spherical-wavefront steering vectors at the grid atoms
    """
    if len(grid) == 0:
        raise ValueError("Cannot build a dictionary from an empty grid")

    n_entries = array.n_elements * wb.n_subcarriers * len(grid)
    if n_entries > _constants.MAX_DICTIONARY_ENTRIES:
        raise CapacityError(
            f"Dictionary would hold {n_entries} complex entries (NM={array.n_elements * wb.n_subcarriers}, "
            f"Q={len(grid)}), above the cap of {_constants.MAX_DICTIONARY_ENTRIES}. "
            f"Raise NEARFIELDKIT_MAX_DICTIONARY_ENTRIES or use a smaller configuration")

    logger.info(f"""\n
        =======================================================
        Building dictionary: NM={array.n_elements * wb.n_subcarriers}, Q={len(grid)}
        (N={array.n_elements}, M={wb.n_subcarriers}, Δr={wb.distance_resolution:.4g} m)
        =======================================================
        """)
    matrix = steering_matrix(grid.ranges, grid.thetas, array, wb, WavefrontModel.EXACT, normalize=True)
    return Dictionary(matrix=matrix, grid=grid)


def grid_nearest(grid: PolarGrid, r: float, theta: float) -> int:
    """ Atom minimizing (Δα / (2/N))² + (Δr / range resolution)², lowest index on ties
    """
    if len(grid) == 0:
        raise ValueError("Cannot search an empty grid")
    alpha_pitch = 2 / grid.n_elements
    metric = np.square((grid.alphas - np.cos(theta)) / alpha_pitch) + \
        np.square((grid.ranges - r) / grid.distance_resolution)
    best = metric.min()
    return int(np.flatnonzero(metric <= best + _CEIL_TOL * max(1., best))[0])


def uniform_grid_size(array: ArrayConfig, policy: RingPolicy, step: float) -> Tuple[int, int]:
    """ (Q_θ, Q_r) of a uniform distance grid with a fixed fine step over [r_min, r_max]
    """
    q_r = int(np.floor((policy.r_max - policy.r_min) / step + _CEIL_TOL)) + 1
    return len(angle_grid(array)), q_r


def fresnel_grid_size(array: ArrayConfig, policy: RingPolicy) -> Tuple[int, int]:
    """ (Q_θ, max rings per angle) of the pure Fresnel grid r̃_l = G_Δ(1-α²)/l restricted to [r_min, r_max]
    """
    q_r = 0
    for alpha in angle_grid(array):
        scale = policy.ring_scale(alpha)
        l_lo = max(1, int(np.ceil(scale / policy.r_max - _CEIL_TOL)))
        l_hi = int(np.floor(scale / policy.r_min + _CEIL_TOL))
        q_r = max(q_r, max(0, l_hi - l_lo + 1))
    return len(angle_grid(array)), q_r
