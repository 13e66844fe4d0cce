#
# For licensing see accompanying LICENSE.md file.
#

import time
from abc import ABC, abstractmethod
from typing import Optional

from argmaxtools.utils import get_logger

from nearfieldkit import dictionary as dictionary_lib
from nearfieldkit import recovery, subspace
from nearfieldkit.array_model import ArrayConfig, SnapshotMatrix, WidebandConfig
from nearfieldkit.recovery import EstimateSet

logger = get_logger(__name__)


class LocalizationMethod(ABC):
    """ Abstract base class for methods mapping multi-carrier snapshots to P (range, angle) estimates """
    name: str = None

    def __init__(self,
                 array: ArrayConfig,
                 wb: WidebandConfig,
                 n_targets: int) -> None:
        if n_targets < 1:
            raise ValueError(f"n_targets must be positive, got {n_targets}")
        self.array = array
        self.wb = wb
        self.n_targets = n_targets
        self.last_elapsed: Optional[float] = None

    @abstractmethod
    def localize(self, snapshots: SnapshotMatrix) -> EstimateSet:
        pass

    def __call__(self, snapshots: SnapshotMatrix) -> EstimateSet:
        expected_rows = self.array.n_elements * self.wb.n_subcarriers
        if snapshots.data.shape[0] != expected_rows:
            raise ValueError(
                f"{self.__class__.__name__} expects {expected_rows} snapshot rows, "
                f"got {snapshots.data.shape[0]}")

        begin = time.time()
        estimates = self.localize(snapshots)
        self.last_elapsed = time.time() - begin
        positions = ", ".join(f"({e.range:.4g} m, {e.angle_deg:.4g} deg)" for e in estimates)
        logger.debug(f"{self.name} ({self.last_elapsed:.3g} s): {positions}")
        return estimates


class CompressedSensingLocalizer(LocalizationMethod):
    """ SOMP over the hybrid angle-distance dictionary built with exact spherical atoms
    """
    name = "cs"

    def __init__(self,
                 array: ArrayConfig,
                 wb: WidebandConfig,
                 n_targets: int,
                 policy: Optional[dictionary_lib.RingPolicy] = None,
                 norm: str = "l1",
                 dictionary: Optional[dictionary_lib.Dictionary] = None) -> None:
        super().__init__(array, wb, n_targets)
        self.norm = norm
        if dictionary is None:
            policy = policy or dictionary_lib.RingPolicy.from_threshold(array)
            grid = dictionary_lib.build_grid(array, wb, policy)
            dictionary = dictionary_lib.build_dictionary(grid, array, wb)
        self.dictionary = dictionary
        self.last_result: Optional[recovery.RecoveryResult] = None

    @property
    def grid(self) -> dictionary_lib.PolarGrid:
        return self.dictionary.grid

    def localize(self, snapshots: SnapshotMatrix) -> EstimateSet:
        self.last_result = recovery.somp(snapshots, self.dictionary, self.n_targets, norm=self.norm)
        return recovery.extract_estimates(self.last_result, self.grid)


class _MusicMethod(LocalizationMethod):
    def __init__(self,
                 array: ArrayConfig,
                 wb: WidebandConfig,
                 n_targets: int,
                 search: Optional[subspace.SearchAxes] = None) -> None:
        super().__init__(array, wb, n_targets)
        self.search = search or subspace.SearchAxes.default(array)
        self.last_spectrum: Optional[subspace.Spectrum] = None

    @abstractmethod
    def covariance(self, snapshots: SnapshotMatrix) -> subspace.CovarianceMatrix:
        pass

    @abstractmethod
    def spectrum(self, un: subspace.NoiseSubspace) -> subspace.Spectrum:
        pass

    def localize(self, snapshots: SnapshotMatrix) -> EstimateSet:
        un = subspace.noise_subspace(self.covariance(snapshots), self.n_targets)
        self.last_spectrum = self.spectrum(un)
        return subspace.find_peaks(self.last_spectrum, self.n_targets)


class NearFieldMusic(_MusicMethod):
    """ Narrowband near-field MUSIC on the subcarrier-averaged spatial covariance
    """
    name = "nbnf_music"

    def covariance(self, snapshots: SnapshotMatrix) -> subspace.CovarianceMatrix:
        return subspace.spatial_covariance_nb(snapshots, self.array, self.wb)

    def spectrum(self, un: subspace.NoiseSubspace) -> subspace.Spectrum:
        return subspace.music_spectrum_nbnf(un, self.search, self.array, self.wb)


class FarFieldMusic(_MusicMethod):
    """ Wideband far-field MUSIC on the full space-frequency covariance
    """
    name = "wbff_music"

    def covariance(self, snapshots: SnapshotMatrix) -> subspace.CovarianceMatrix:
        return subspace.full_covariance_wb(snapshots)

    def spectrum(self, un: subspace.NoiseSubspace) -> subspace.Spectrum:
        return subspace.music_spectrum_wbff(un, self.search, self.array, self.wb)


METHODS = ("cs", "nbnf_music", "wbff_music")


def get_method_cls(name: str):
    if name == "cs":
        return CompressedSensingLocalizer
    elif name == "nbnf_music":
        return NearFieldMusic
    elif name == "wbff_music":
        return FarFieldMusic
    else:
        raise ValueError(f"Unknown localization method: {name}. Options: {list(METHODS)}")
