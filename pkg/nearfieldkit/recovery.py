#
# For licensing see accompanying LICENSE.md file.
#
""" Simultaneous orthogonal matching pursuit over multi-snapshot observations,
mapping of the recovered support to (range, angle) estimates and position scoring
"""
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from argmaxtools.utils import get_logger
from scipy.linalg import solve_triangular

from nearfieldkit import _constants
from nearfieldkit.array_model import SnapshotMatrix, Target
from nearfieldkit.dictionary import Dictionary, PolarGrid
from nearfieldkit.errors import RankDeficiencyError
from nearfieldkit.tensor_typing import CoefficientsType, ResidualNormsType, SupportType

logger = get_logger(__name__)

SOMP_NORMS = ("l1", "l2")


class Estimate(NamedTuple):
    range: float
    angle: float

    @property
    def angle_deg(self) -> float:
        return float(np.rad2deg(self.angle))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.range * np.cos(self.angle), self.range * np.sin(self.angle)])


@dataclass(frozen=True)
class EstimateSet:
    estimates: Tuple[Estimate, ...] = ()

    def __len__(self) -> int:
        return len(self.estimates)

    def __iter__(self) -> Iterator[Estimate]:
        return iter(self.estimates)

    def __getitem__(self, index: int) -> Estimate:
        return self.estimates[index]


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    support: SupportType
    coefficients: CoefficientsType
    residual_norm: ResidualNormsType

    def to_frame(self, grid: PolarGrid) -> pd.DataFrame:
        atoms = [grid.atoms[q] for q in self.support]
        return pd.DataFrame({
            "atom_index": np.asarray(self.support, dtype=np.int64),
            "alpha": [atom.alpha for atom in atoms],
            "range_m": [atom.range for atom in atoms],
            "mean_coeff_magnitude": np.abs(self.coefficients).mean(axis=1) if len(atoms) else [],
        })


def _selection_scores(correlations: np.ndarray, norm: str) -> np.ndarray:
    if norm == "l1":
        return np.abs(correlations).sum(axis=1)
    return np.sqrt(np.square(np.abs(correlations)).sum(axis=1))


def somp(y: Union[SnapshotMatrix, np.ndarray],
         dictionary: Dictionary,
         sparsity: int,
         norm: str = "l1") -> RecoveryResult:
    """ Greedy shared-support recovery of Y ≈ B_S C with |S| = sparsity

    Each iteration picks the unselected atom maximizing Σ_k |b_qᴴ r_k| (`norm="l1"`) or
    (Σ_k |b_qᴴ r_k|²)^(1/2) (`norm="l2"`), lowest index on ties. The selected atoms are kept
    as an incrementally orthonormalized basis so the residual is always Y minus its projection.
    """
    data = y.data if isinstance(y, SnapshotMatrix) else np.asarray(y)
    matrix = dictionary.matrix
    n_rows, n_atoms = matrix.shape

    if norm not in SOMP_NORMS:
        raise ValueError(f"Unknown SOMP aggregation norm: {norm}. Options: {list(SOMP_NORMS)}")
    if data.ndim != 2 or data.shape[0] != n_rows:
        raise ValueError(f"Snapshot rows {data.shape} do not match dictionary rows ({n_rows})")
    if not 1 <= sparsity < min(n_atoms, n_rows):
        raise ValueError(f"sparsity must satisfy 1 <= P < min(Q={n_atoms}, NM={n_rows}), got {sparsity}")

    basis = np.zeros((n_rows, sparsity), dtype=np.complex128)
    triangular = np.zeros((sparsity, sparsity), dtype=np.complex128)
    residual = data.astype(np.complex128, copy=True)
    selected = np.zeros(n_atoms, dtype=bool)
    support: List[int] = []
    residual_norms = []

    for i in range(sparsity):
        scores = _selection_scores(matrix.conj().T @ residual, norm)
        scores[selected] = -np.inf
        q = int(np.argmax(scores))

        atom = matrix[:, q]
        previous = basis[:, :i]
        projection = previous.conj().T @ atom
        orthogonal = atom - previous @ projection
        # Second Gram-Schmidt pass
        correction = previous.conj().T @ orthogonal
        orthogonal -= previous @ correction
        projection += correction

        orthogonal_norm = np.linalg.norm(orthogonal)
        if orthogonal_norm < _constants.SOMP_RANK_TOL * np.linalg.norm(atom):
            raise RankDeficiencyError(
                f"Atom {q} selected at iteration {i} is linearly dependent on the current support {support}")

        basis[:, i] = orthogonal / orthogonal_norm
        triangular[:i, i] = projection
        triangular[i, i] = orthogonal_norm

        residual -= np.outer(basis[:, i], basis[:, i].conj() @ residual)
        selected[q] = True
        support.append(q)
        residual_norms.append(np.linalg.norm(residual))
        logger.debug(f"SOMP iteration {i}: atom {q}, residual norm {residual_norms[-1]:.4g}")

    coefficients = solve_triangular(triangular, basis.conj().T @ data)
    return RecoveryResult(
        support=np.array(support, dtype=np.int64),
        coefficients=coefficients,
        residual_norm=np.array(residual_norms),
    )


def extract_estimates(result: RecoveryResult, grid: PolarGrid) -> EstimateSet:
    estimates = []
    for q in result.support:
        if not 0 <= q < len(grid):
            raise IndexError(f"Support index {q} out of range for a grid of {len(grid)} atoms")
        atom = grid.atoms[q]
        estimates.append(Estimate(range=atom.range, angle=float(np.arccos(atom.alpha))))
    return EstimateSet(tuple(estimates))


@dataclass(frozen=True, eq=False)
class ScoreResult:
    squared_errors: np.ndarray
    nmse: float
    # assignment[p] is the estimate matched to truth target p
    assignment: Tuple[int, ...]


def _positions(points: Sequence[Union[Estimate, Target]]) -> np.ndarray:
    return np.array([[p.range * np.cos(p.angle), p.range * np.sin(p.angle)] for p in points]).reshape(-1, 2)


def match_and_score(estimates: Union[EstimateSet, Sequence[Estimate]],
                    truth: Sequence[Target]) -> ScoreResult:
    """ Greedy nearest-pair assignment in Cartesian coordinates, then
    NMSE = Σ_p ‖p̂_p - p_p‖² / Σ_p ‖p_p‖²
    """
    estimates = list(estimates)
    truth = list(truth)
    if len(estimates) != len(truth):
        raise ValueError(f"Cardinality mismatch: {len(estimates)} estimates for {len(truth)} targets")
    if not truth:
        return ScoreResult(squared_errors=np.zeros(0), nmse=0., assignment=())

    truth_xy = _positions(truth)
    estimate_xy = _positions(estimates)
    distances = np.square(truth_xy[:, None, :] - estimate_xy[None, :, :]).sum(axis=-1)

    assignment: List[Optional[int]] = [None] * len(truth)
    squared_errors = np.zeros(len(truth))
    remaining = distances.copy()
    for _ in range(len(truth)):
        p, e = np.unravel_index(int(np.argmin(remaining)), remaining.shape)
        assignment[p] = int(e)
        squared_errors[p] = distances[p, e]
        remaining[p, :] = np.inf
        remaining[:, e] = np.inf

    nmse = float(squared_errors.sum() / np.square(truth_xy).sum())
    return ScoreResult(squared_errors=squared_errors, nmse=nmse, assignment=tuple(assignment))
