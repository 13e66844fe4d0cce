#
# For licensing see accompanying LICENSE.md file.
#
""" Analytic coherence kernels: Dirichlet factors in frequency and space, Fresnel integrals
and the curvature coherence |F| that sets the distance-ring spacing
"""
from typing import NamedTuple, Sequence, Union

import numpy as np
import pandas as pd
from argmaxtools.utils import get_logger
from scipy import integrate, optimize, special

from nearfieldkit import _constants
from nearfieldkit.array_model import SteeringVector, WidebandConfig
from nearfieldkit.errors import UnsatisfiableConstraintError

logger = get_logger(__name__)

ArrayLike = Union[float, np.ndarray]


class FresnelPair(NamedTuple):
    u: ArrayLike
    v: ArrayLike


def _maybe_scalar(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def dirichlet_kernel(gamma: ArrayLike, count: int) -> ArrayLike:
    """ Signed kernel sin(count·γ/2) / sin(γ/2), evaluated by its limit count·(-1)^(k(count-1))
    at the singular points γ = 2πk
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    denom = np.sin(gamma / 2)
    singular = np.abs(denom) < _constants.DIRICHLET_SINGULARITY_TOL

    safe_denom = np.where(singular, 1., denom)
    value = np.sin(count * gamma / 2) / safe_denom

    k = np.round(gamma / (2 * np.pi))
    limit = count * np.where((k * (count - 1)) % 2 == 0, 1., -1.)
    return _maybe_scalar(np.where(singular, limit, value))


def dirichlet_ratio(gamma: ArrayLike, count: int) -> ArrayLike:
    """ |dirichlet_kernel(γ, count)| / count, in [0, 1]
    """
    value = np.abs(np.asarray(dirichlet_kernel(gamma, count))) / count
    return _maybe_scalar(np.clip(value, 0., 1.))


def mutual_coherence(a: Union[SteeringVector, np.ndarray], b: Union[SteeringVector, np.ndarray]) -> float:
    """ |aᴴb| of two unit-norm steering vectors, clamped to [0, 1]
    """
    if isinstance(a, SteeringVector):
        if not a.normalized:
            raise ValueError("mutual_coherence expects normalized steering vectors")
        a = a.entries
    if isinstance(b, SteeringVector):
        if not b.normalized:
            raise ValueError("mutual_coherence expects normalized steering vectors")
        b = b.entries

    if a.shape != b.shape:
        raise ValueError(f"Steering vector length mismatch: {a.shape} vs {b.shape}")
    return float(min(1., abs(np.vdot(a, b))))


def s_freq(delta_r: ArrayLike, wb: WidebandConfig) -> ArrayLike:
    """ Frequency factor (1/M)|sin(MΔkδr/2) / sin(Δkδr/2)|, zero at nonzero multiples of c/B
    """
    gamma = wb.wavenumber_step * np.asarray(delta_r, dtype=np.float64)
    return dirichlet_ratio(gamma, wb.n_subcarriers)


def s_space_linear(delta_alpha: ArrayLike, n_elements: int) -> ArrayLike:
    """ Half-wavelength array factor (1/N)|sin(Nπδα/2) / sin(πδα/2)|
    """
    gamma = np.pi * np.asarray(delta_alpha, dtype=np.float64)
    return dirichlet_ratio(gamma, n_elements)


def fresnel_integrals(zeta: ArrayLike) -> FresnelPair:
    """ U(ζ) = ∫₀^ζ cos(πκ²/2)dκ and V(ζ) = ∫₀^ζ sin(πκ²/2)dκ
    """
    s, c = special.fresnel(np.asarray(zeta, dtype=np.float64))
    return FresnelPair(u=_maybe_scalar(c), v=_maybe_scalar(s))


def fresnel_integrals_quad(zeta: float) -> FresnelPair:
    """ Adaptive quadrature evaluation of the Fresnel integrals, independent of the special-function path
    """
    if zeta == 0:
        return FresnelPair(u=0., v=0.)
    limit = max(200, int(10 * zeta ** 2))
    u, _ = integrate.quad(lambda k: np.cos(np.pi * k ** 2 / 2), 0., zeta,
                          epsabs=_constants.FRESNEL_QUAD_TOL / 10, epsrel=0., limit=limit)
    v, _ = integrate.quad(lambda k: np.sin(np.pi * k ** 2 / 2), 0., zeta,
                          epsabs=_constants.FRESNEL_QUAD_TOL / 10, epsrel=0., limit=limit)
    return FresnelPair(u=float(u), v=float(v))


def curvature_coherence_from_zeta(zeta: ArrayLike, n_elements: int) -> ArrayLike:
    """ |F| as a function of ζ = N'√(2|x|): (2N'/(Nζ))·√(U²(ζ) + V²(ζ)), equal to 1 at ζ = 0
    """
    zeta = np.abs(np.asarray(zeta, dtype=np.float64))
    half_count = (n_elements - 1) // 2
    u, v = fresnel_integrals(zeta)

    safe_zeta = np.where(zeta > 0, zeta, 1.)
    value = 2 * half_count / (n_elements * safe_zeta) * np.sqrt(np.square(u) + np.square(v))
    value = np.where(zeta > 0, value, 1.)
    return _maybe_scalar(np.clip(value, 0., 1.))


def curvature_coherence(x: ArrayLike, n_elements: int) -> ArrayLike:
    """ Integral approximation of the quadratic-phase coherence between two atoms
    whose Fresnel curvature terms differ by x
    """
    half_count = (n_elements - 1) // 2
    zeta = half_count * np.sqrt(2 * np.abs(np.asarray(x, dtype=np.float64)))
    return curvature_coherence_from_zeta(zeta, n_elements)


def curvature_coherence_sum(x: ArrayLike, n_elements: int) -> ArrayLike:
    """ Discrete form (1/N)|Σ_n' exp(jπ n'² x)| over n' = -N'..N'
    """
    half_count = (n_elements - 1) // 2
    indices = np.arange(-half_count, half_count + 1)
    x = np.asarray(x, dtype=np.float64)
    phases = np.exp(1j * np.pi * np.multiply.outer(x, indices ** 2))
    value = np.abs(phases.sum(axis=-1)) / n_elements
    return _maybe_scalar(np.clip(value, 0., 1.))


def coherence_curve(zetas: Sequence[float], n_elements: int) -> pd.DataFrame:
    """ Table of |F| against ζ in its integral and discrete forms
    """
    zetas = np.asarray(zetas, dtype=np.float64)
    half_count = (n_elements - 1) // 2
    x = np.square(zetas / half_count) / 2
    return pd.DataFrame({
        "zeta": zetas,
        "coherence_integral": np.atleast_1d(curvature_coherence_from_zeta(zetas, n_elements)),
        "coherence_sum": np.atleast_1d(curvature_coherence_sum(x, n_elements)),
    })


def solve_zeta(delta: float,
               n_elements: int,
               zeta_max: float = _constants.DEFAULT_ZETA_MAX,
               crossing: str = "first") -> float:
    """ ζ_Δ such that |F(ζ_Δ)| = Δ

    `crossing="first"` returns the smallest ζ where |F| drops below Δ,
    `crossing="largest"` returns the largest ζ on [0, zeta_max] with |F(ζ)| ≥ Δ.
    Both are located on a fine scan and refined by bisection. The default is "first",
    not the largest crossing: |F| oscillates past its main lobe, so "largest" can land
    on a sidelobe and yields a larger ζ_Δ (denser rings).
    """
    if not 0 < delta < 1:
        raise ValueError(f"Coherence threshold must lie in (0, 1), got {delta}")
    if crossing not in ("first", "largest"):
        raise ValueError(f"Unknown crossing rule: {crossing}. Options: ['first', 'largest']")

    grid = np.arange(0., zeta_max + _constants.ZETA_SCAN_STEP / 2, _constants.ZETA_SCAN_STEP)
    values = curvature_coherence_from_zeta(grid, n_elements)
    below = np.flatnonzero(values < delta)

    if len(below) == 0:
        raise UnsatisfiableConstraintError(
            f"|F| stays above {delta} on [0, {zeta_max}] for N={n_elements}")

    if crossing == "first":
        hi = below[0]
        lo = hi - 1
    else:
        above = np.flatnonzero(values >= delta)
        lo = above[-1]
        if lo == len(grid) - 1:
            logger.warning(f"|F| is still above {delta} at zeta_max={zeta_max}")
            return float(grid[-1])
        hi = lo + 1

    def _residual(zeta):
        return curvature_coherence_from_zeta(zeta, n_elements) - delta

    zeta = optimize.bisect(_residual, grid[lo], grid[hi], xtol=_constants.ZETA_XTOL)
    logger.debug(f"solve_zeta(delta={delta}, N={n_elements}, crossing={crossing}) = {zeta:.5f}")
    return float(zeta)
