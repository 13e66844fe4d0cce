#
# For licensing see accompanying LICENSE.md file.
#
""" Regime boundaries of the unified wideband near-field model

- NB-NF: correlation between the wideband spherical steering vector and its carrier-frequency
  replica. Holds close to the array; r_NB-NF is the outermost distance where it stays above ρ0.
- WB-FF: correlation between the wideband spherical and wideband planar steering vectors.
  Holds far from the array; r_WB-FF is the innermost distance beyond which it stays above ρ1.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from argmaxtools.utils import get_logger
from scipy import optimize

from nearfieldkit import _constants
from nearfieldkit._constants import SPEED_OF_LIGHT
from nearfieldkit.array_model import (ArrayConfig, WavefrontModel, WidebandConfig,
                                      element_offsets, propagation_distances)
from nearfieldkit.coherence import dirichlet_kernel
from nearfieldkit.errors import UnsatisfiableConstraintError
from nearfieldkit.tensor_typing import ScanGridType, SufficientBoundsType

logger = get_logger(__name__)

DISTANCE_MODELS = ("fresnel", "exact")

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class BoundaryQuery:
    theta: float
    threshold: float
    r_lo: float
    r_hi: float
    scan_points: int = _constants.DEFAULT_SCAN_POINTS

    def __post_init__(self):
        if not 0 < self.threshold < 1:
            raise ValueError(f"Boundary threshold must lie in (0, 1), got {self.threshold}")
        if not 0 < self.r_lo < self.r_hi:
            raise ValueError(f"Require 0 < r_lo < r_hi, got r_lo={self.r_lo}, r_hi={self.r_hi}")
        if self.scan_points < 64:
            raise ValueError(f"scan_points must be >= 64, got {self.scan_points}")

    @classmethod
    def default(cls,
                array: ArrayConfig,
                theta_deg: float = _constants.DEFAULT_BOUNDARY_THETA_DEG,
                threshold: float = _constants.DEFAULT_BOUNDARY_RHO,
                r_lo: Optional[float] = None,
                r_hi: Optional[float] = None,
                scan_points: int = _constants.DEFAULT_SCAN_POINTS) -> "BoundaryQuery":
        """ Scan window [1 cm, 10 R_r] unless given
        """
        return cls(
            theta=float(np.deg2rad(theta_deg)),
            threshold=threshold,
            r_lo=_constants.DEFAULT_SCAN_R_LO if r_lo is None else r_lo,
            r_hi=_constants.DEFAULT_SCAN_R_HI_RAYLEIGH_MULTIPLE * array.rayleigh_distance if r_hi is None else r_hi,
            scan_points=scan_points,
        )

    def scan_grid(self, r_hi: Optional[float] = None) -> ScanGridType:
        return np.geomspace(self.r_lo, self.r_hi if r_hi is None else r_hi, self.scan_points)


def _check_distance_model(distances: str) -> None:
    if distances not in DISTANCE_MODELS:
        raise ValueError(f"Unknown distance model: {distances}. Options: {list(DISTANCE_MODELS)}")


def _maybe_scalar(value: np.ndarray, like) -> ArrayLike:
    return float(value[0]) if np.ndim(like) == 0 else value


def _phase_sum(delays: np.ndarray, wb: WidebandConfig, carrier_wavenumber: float = 0.) -> np.ndarray:
    """ (1/(NM))|Σ_n' D_M(Δk δ) exp(j(M-1)Δk δ/2) exp(j k δ)| over element delays δ of shape (N, S)
    """
    gamma = wb.wavenumber_step * delays
    kernel = np.asarray(dirichlet_kernel(gamma, wb.n_subcarriers))
    phase = (wb.n_subcarriers - 1) * gamma / 2 + carrier_wavenumber * delays
    total = np.abs((kernel * np.exp(1j * phase)).sum(axis=0))
    return np.clip(total / (delays.shape[0] * wb.n_subcarriers), 0., 1.)


def corr_nbnf(r: ArrayLike,
              theta: float,
              array: ArrayConfig,
              wb: WidebandConfig,
              distances: str = "fresnel") -> ArrayLike:
    """ g̃1(r, θ): correlation of the wideband spherical steering vector with its carrier-frequency replica
    """
    _check_distance_model(distances)
    ranges = np.atleast_1d(np.asarray(r, dtype=np.float64))
    if np.any(ranges <= 0):
        raise ValueError("Correlation range must be positive")

    psi = propagation_distances(ranges, np.full(ranges.shape, theta), array, WavefrontModel(distances))
    return _maybe_scalar(_phase_sum(psi, wb), r)


def corr_wbff(r: ArrayLike,
              theta: float,
              array: ArrayConfig,
              wb: WidebandConfig,
              distances: str = "fresnel") -> ArrayLike:
    """ g̃2(r, θ): correlation of the wideband spherical and wideband planar steering vectors

    With Fresnel distances the spherical-minus-planar offset is χ²η, χ = n'd, η = (1-α²)/(2r).
    """
    _check_distance_model(distances)
    ranges = np.atleast_1d(np.asarray(r, dtype=np.float64))
    if np.any(ranges <= 0):
        raise ValueError("Correlation range must be positive")

    alpha = np.cos(theta)
    if distances == "fresnel":
        chi = element_offsets(array) * array.spacing
        offsets = np.square(chi)[:, None] * ((1 - alpha ** 2) / (2 * ranges))[None, :]
    else:
        thetas = np.full(ranges.shape, theta)
        offsets = propagation_distances(ranges, thetas, array, WavefrontModel.EXACT) - \
            propagation_distances(ranges, thetas, array, WavefrontModel.PLANAR)
    return _maybe_scalar(_phase_sum(offsets, wb, carrier_wavenumber=array.wavenumber), r)


def _refine(fn, lo: float, hi: float, threshold: float) -> float:
    return float(optimize.bisect(lambda r: fn(r) - threshold, lo, hi, rtol=_constants.BOUNDARY_RTOL))


def r_nbnf_boundary(q: BoundaryQuery,
                    array: ArrayConfig,
                    wb: WidebandConfig,
                    distances: str = "fresnel") -> float:
    """ Largest r on the scan with g̃1(r, θ0) ≥ ρ0, refined by bisection

    The correlation repeats with period c/Δf in r, so the scan stops at c/(2Δf).
    """
    r_top = min(q.r_hi, SPEED_OF_LIGHT / (2 * wb.subcarrier_spacing))
    if r_top <= q.r_lo:
        r_top = q.r_hi
    scan = q.scan_grid(r_top)
    values = corr_nbnf(scan, q.theta, array, wb, distances)

    holding = np.flatnonzero(values >= q.threshold)
    if len(holding) == 0:
        raise UnsatisfiableConstraintError(
            f"NB-NF correlation never reaches {q.threshold} on [{q.r_lo:.4g}, {r_top:.4g}] m "
            f"(B={wb.bandwidth:.6g} Hz, N={array.n_elements})")

    i = holding[-1]
    if i == len(scan) - 1:
        return float(scan[-1])
    return _refine(lambda r: corr_nbnf(r, q.theta, array, wb, distances), scan[i], scan[i + 1], q.threshold)


def r_wbff_boundary(q: BoundaryQuery,
                    array: ArrayConfig,
                    wb: WidebandConfig,
                    distances: str = "fresnel") -> float:
    """ Smallest r on the scan beyond which g̃2(r, θ0) ≥ ρ1 holds at every scanned distance,
    refined by bisection
    """
    scan = q.scan_grid()
    values = corr_wbff(scan, q.theta, array, wb, distances)

    failing = np.flatnonzero(values < q.threshold)
    if len(failing) == 0:
        return float(scan[0])
    j = failing[-1]
    if j == len(scan) - 1:
        raise UnsatisfiableConstraintError(
            f"WB-FF correlation is below {q.threshold} at r_hi={q.r_hi:.4g} m "
            f"(D={array.aperture:.4g} m, B={wb.bandwidth:.6g} Hz)")
    return _refine(lambda r: corr_wbff(r, q.theta, array, wb, distances), scan[j], scan[j + 1], q.threshold)


def sufficient_bounds_wbff(theta: float, array: ArrayConfig, wb: WidebandConfig) -> SufficientBoundsType:
    """ (r_dirichlet, r_fresnel): beyond the first every element stays in the Dirichlet mainlobe,
    beyond the second the carrier-frequency curvature phase stays below π at the aperture edge
    """
    curvature = 1 - np.cos(theta) ** 2
    half_aperture = array.half_count * array.spacing
    r_dirichlet = wb.n_subcarriers * wb.wavenumber_step * curvature * half_aperture ** 2 / (4 * np.pi)
    r_fresnel = curvature * array.aperture ** 2 / (4 * array.wavelength)
    return float(r_dirichlet), float(r_fresnel)


class Regime(Enum):
    NB_NF = "NB-NF"
    WB_NF = "WB-NF"
    WB_FF = "WB-FF"


def classify_regime(r: float,
                    theta: float,
                    array: ArrayConfig,
                    wb: WidebandConfig,
                    rho_nb: float = _constants.DEFAULT_BOUNDARY_RHO,
                    rho_wb: float = _constants.DEFAULT_BOUNDARY_RHO) -> Regime:
    """ NB-NF when g̃1 ≥ ρ0 (checked first), WB-FF when g̃2 ≥ ρ1, WB-NF otherwise
    """
    if corr_nbnf(r, theta, array, wb) >= rho_nb:
        return Regime.NB_NF
    if corr_wbff(r, theta, array, wb) >= rho_wb:
        return Regime.WB_FF
    return Regime.WB_NF


def gray_zone(array: ArrayConfig,
              wb: WidebandConfig,
              theta: float,
              rho: float = _constants.DEFAULT_BOUNDARY_RHO) -> Optional[Tuple[float, float]]:
    """ [2 r_NB-NF, r_WB-FF / 2], or None when the interval is empty
    """
    query = BoundaryQuery.default(array, theta_deg=float(np.rad2deg(theta)), threshold=rho)
    lo = 2 * r_nbnf_boundary(query, array, wb)
    hi = 0.5 * r_wbff_boundary(query, array, wb)
    if lo >= hi:
        logger.warning(f"Gray zone is empty: 2 r_NB-NF = {lo:.4g} m >= r_WB-FF / 2 = {hi:.4g} m")
        return None
    return lo, hi
