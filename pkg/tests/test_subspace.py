#
# For licensing see accompanying LICENSE.md file.
#

import os
import unittest
from unittest import mock

import numpy as np
from argmaxtools.utils import get_logger

from nearfieldkit import _constants, subspace
from nearfieldkit.array_model import (ArrayConfig, Target, WidebandConfig,
                                      synthesize_snapshots)
from nearfieldkit.boundaries import BoundaryQuery, r_wbff_boundary
from nearfieldkit.errors import CapacityError
from nearfieldkit.pipelines import FarFieldMusic, NearFieldMusic
from nearfieldkit.subspace import CovarianceMatrix, SearchAxes, Spectrum
from nearfieldkit.test_utils import (_prepare_test_localize_config,
                                     _prepare_test_wbff_config,
                                     classical_music_nbnf,
                                     exhaustive_peak_cells)

logger = get_logger(__name__)

# Test configuration
TEST_SEED = int(os.getenv("TEST_SEED", None) or 5)
TEST_SNR_DB = float(os.getenv("TEST_SNR_DB", None) or 0.)
NBNF_ANGLE_TOL_DEG = 0.5
NBNF_RANGE_TOL = 0.15
WBFF_NEAR_DEGRADATION_DB = 3.
NOISELESS_SNR_DB = 300.


class TestCovariance(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.array, cls.wb = _prepare_test_localize_config()
        cls.snapshots = synthesize_snapshots(
            (Target.from_degrees(1.5, 100.),), cls.array, cls.wb, TEST_SNR_DB, TEST_SEED)

    def test_spatial_covariance_matches_loop(self):
        r = subspace.spatial_covariance_nb(self.snapshots, self.array, self.wb)
        n, m, k = self.array.n_elements, self.wb.n_subcarriers, self.wb.n_symbols
        expected = np.zeros((n, n), dtype=np.complex128)
        for sub in range(m):
            block = self.snapshots.data[sub * n:(sub + 1) * n]
            expected += block @ block.conj().T
        expected /= m * k
        np.testing.assert_allclose(r.data, expected, atol=1e-12 * np.abs(expected).max())
        np.testing.assert_allclose(r.data, r.data.conj().T)
        self.assertEqual(r.snapshot_count, k)

    def test_full_covariance(self):
        r = subspace.full_covariance_wb(self.snapshots)
        self.assertEqual(r.n, self.array.n_elements * self.wb.n_subcarriers)
        self.assertEqual(r.snapshot_count, self.wb.n_symbols)
        np.testing.assert_allclose(r.data, r.data.conj().T)

    def test_full_covariance_rank_noiseless(self):
        array, wb = _prepare_test_wbff_config()
        truth = (Target.from_degrees(3., 84.7), Target.from_degrees(0.33, 107.2))
        snapshots = synthesize_snapshots(truth, array, wb, NOISELESS_SNR_DB, TEST_SEED)
        eigenvalues = np.linalg.eigvalsh(subspace.full_covariance_wb(snapshots).data)
        self.assertEqual(int(np.sum(eigenvalues > 1e-8 * eigenvalues.max())), 2)

    def test_full_covariance_capacity(self):
        with mock.patch.object(_constants, "MAX_WBFF_DIMENSION", 100):
            with self.assertRaises(CapacityError):
                subspace.full_covariance_wb(self.snapshots)

    def test_row_mismatch(self):
        with self.assertRaises(ValueError):
            subspace.spatial_covariance_nb(self.snapshots.data[:-1], self.array, self.wb)


class TestNoiseSubspace(unittest.TestCase):
    def test_orthonormal_split(self):
        rng = np.random.default_rng(TEST_SEED)
        x = rng.standard_normal((9, 40)) + 1j * rng.standard_normal((9, 40))
        r = CovarianceMatrix(data=x @ x.conj().T / 40, snapshot_count=40)
        un = subspace.noise_subspace(r, 3)
        self.assertEqual(un.basis.shape, (9, 6))
        self.assertEqual(un.n_sources, 3)
        full = np.hstack([un.signal_basis, un.basis])
        np.testing.assert_allclose(full.conj().T @ full, np.eye(9), atol=1e-10)
        self.assertTrue(np.all(np.diff(un.eigenvalues) <= 0))
        np.testing.assert_allclose(un.reconstruct(), r.data, atol=1e-10)

    def test_source_count_range(self):
        r = CovarianceMatrix(data=np.eye(4, dtype=np.complex128), snapshot_count=1)
        with self.assertRaises(ValueError):
            subspace.noise_subspace(r, 0)
        with self.assertRaises(ValueError):
            subspace.noise_subspace(r, 4)

    def test_white_covariance_gives_flat_spectrum(self):
        array, wb = _prepare_test_localize_config()
        r = CovarianceMatrix(data=0.3 * np.eye(array.n_elements, dtype=np.complex128), snapshot_count=10)
        un = subspace.noise_subspace(r, 1)
        search = SearchAxes.default(array, n_ranges=8, theta_step_deg=5.)
        spec = subspace.music_spectrum_nbnf(un, search, array, wb)
        np.testing.assert_allclose(spec.values, 1 / (1 - 1 / array.n_elements), rtol=1e-9)


class TestSearchAxes(unittest.TestCase):
    def test_default(self):
        axes = SearchAxes.default(ArrayConfig())
        self.assertEqual(axes.shape, (601, 64))
        self.assertAlmostEqual(axes.theta_deg[0], 60.)
        self.assertAlmostEqual(axes.theta_deg[-1], 120.)
        self.assertAlmostEqual(axes.range_m[0], ArrayConfig().aperture)

    def test_validation(self):
        with self.assertRaises(ValueError):
            SearchAxes(theta_deg=np.array([1., 1.]), range_m=np.array([1.]))
        with self.assertRaises(ValueError):
            SearchAxes(theta_deg=np.array([1.]), range_m=np.array([-1., 2.]))


class TestPeaks(unittest.TestCase):
    @staticmethod
    def _spectrum(values: np.ndarray) -> Spectrum:
        n_theta, n_range = values.shape
        return Spectrum(theta_axis=np.linspace(60., 120., n_theta),
                        range_axis=np.geomspace(1., 10., n_range), values=values)

    def test_matches_exhaustive(self):
        rng = np.random.default_rng(TEST_SEED)
        spec = self._spectrum(rng.random((17, 13)))
        expected = exhaustive_peak_cells(spec)
        self.assertEqual(subspace.find_peak_cells(spec, len(expected)), expected)

    def test_ties_by_linear_index(self):
        values = np.zeros((5, 5))
        values[3, 3] = values[1, 1] = 1.
        self.assertEqual(subspace.find_peak_cells(self._spectrum(values), 2), [(1, 1), (3, 3)])

    def test_top_up_when_few_peaks(self):
        values = np.add.outer(np.arange(4.), np.arange(3.))
        cells = subspace.find_peak_cells(self._spectrum(values), 3)
        self.assertEqual(cells[0], (3, 2))
        self.assertEqual(len(set(cells)), 3)
        self.assertEqual(cells[1:], [(2, 2), (3, 1)])

    def test_estimates_in_axis_units(self):
        values = np.zeros((5, 4))
        values[2, 1] = 1.
        spec = self._spectrum(values)
        estimate = subspace.find_peaks(spec, 1)[0]
        self.assertAlmostEqual(estimate.angle_deg, 90.)
        self.assertAlmostEqual(estimate.range, spec.range_axis[1])

    def test_frame_and_db(self):
        spec = self._spectrum(np.arange(1., 7.).reshape(2, 3))
        frame = spec.to_frame()
        self.assertEqual(list(frame.columns), ["theta_deg", "range_m", "value_db"])
        self.assertAlmostEqual(frame["value_db"].max(), 0.)
        self.assertAlmostEqual(frame["value_db"].iloc[1], 10 * np.log10(2. / 6.))

    def test_window_outside_axes(self):
        spec = self._spectrum(np.ones((3, 3)))
        with self.assertRaises(ValueError):
            subspace.spectrum_peak_near(spec, 100., np.deg2rad(90.), range_window_frac=0.1)


class TestNearFieldMusic(unittest.TestCase):
    def test_matches_classical_music(self):
        array, wb = _prepare_test_localize_config()
        snapshots = synthesize_snapshots(
            (Target.from_degrees(1.2, 95.), Target.from_degrees(2.6, 81.)), array, wb, 10., TEST_SEED)
        r = subspace.spatial_covariance_nb(snapshots, array, wb)
        search = SearchAxes.default(array, r_min=0.5, r_max=4., n_ranges=12, theta_step_deg=2.)
        spec = subspace.music_spectrum_nbnf(subspace.noise_subspace(r, 2), search, array, wb)
        np.testing.assert_allclose(spec.values, classical_music_nbnf(r.data, 2, search, array), rtol=1e-6)

    def test_single_carrier_exact_peak(self):
        array = ArrayConfig(n_elements=33)
        wb = WidebandConfig(n_subcarriers=1, subcarrier_spacing=1e6, n_symbols=100)
        search = SearchAxes(theta_deg=np.linspace(90., 110., 201), range_m=np.geomspace(0.5, 4., 64))
        truth = Target.from_degrees(float(search.range_m[30]), 100.)
        snapshots = synthesize_snapshots((truth,), array, wb, 30., TEST_SEED)

        method = NearFieldMusic(array, wb, 1, search=search)
        estimate = method(snapshots)[0]
        self.assertAlmostEqual(estimate.angle_deg, 100., delta=0.05)
        self.assertEqual(estimate.range, search.range_m[30])

    def test_scale_invariance(self):
        array, wb = _prepare_test_localize_config()
        snapshots = synthesize_snapshots(
            (Target.from_degrees(1.2, 95.), Target.from_degrees(2.6, 81.)), array, wb, 10., TEST_SEED)
        search = SearchAxes.default(array, r_min=0.5, r_max=4., n_ranges=24, theta_step_deg=1.)
        method = NearFieldMusic(array, wb, 2, search=search)
        reference = method(snapshots)
        reference_values = method.last_spectrum.values
        for scale in (1e-3, 0.4 + 2.2j, 1e4):
            self.assertEqual(tuple(method(snapshots.scaled(scale))), tuple(reference), f"scale={scale}")
            np.testing.assert_allclose(method.last_spectrum.values, reference_values, rtol=1e-6)

    def test_reference_dual_target(self):
        array, wb = ArrayConfig(), WidebandConfig()
        truth = (Target.from_degrees(1.1, 112.2), Target.from_degrees(2.5, 102.))
        snapshots = synthesize_snapshots(truth, array, wb, TEST_SNR_DB, TEST_SEED)
        method = NearFieldMusic(array, wb, 2)
        estimates = sorted(method(snapshots), key=lambda e: e.range)
        for estimate, target in zip(estimates, truth):
            logger.info(f"NB-NF MUSIC: ({estimate.range:.3f} m, {estimate.angle_deg:.2f} deg) "
                        f"for ({target.range} m, {target.angle_deg:.2f} deg)")
            self.assertAlmostEqual(estimate.angle_deg, target.angle_deg, delta=NBNF_ANGLE_TOL_DEG)
            self.assertAlmostEqual(estimate.range, target.range, delta=NBNF_RANGE_TOL * target.range)


class TestFarFieldMusic(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.array, cls.wb = _prepare_test_wbff_config()
        cls.far = Target.from_degrees(1.0, 84.7)
        cls.near = Target.from_degrees(0.33, 107.2)
        cls.search = SearchAxes.default(cls.array, r_min=0.2, r_max=4., n_ranges=128)
        snapshots = synthesize_snapshots((cls.far, cls.near), cls.array, cls.wb, TEST_SNR_DB, TEST_SEED)
        cls.method = FarFieldMusic(cls.array, cls.wb, 2, search=cls.search)
        cls.estimates = cls.method(snapshots)
        cls.spectrum = cls.method.last_spectrum

    def test_near_target_defocused(self):
        far_peak = subspace.spectrum_peak_near(self.spectrum, self.far.range, self.far.angle)
        near_peak = subspace.spectrum_peak_near(self.spectrum, self.near.range, self.near.angle)
        degradation_db = 10 * np.log10(far_peak / near_peak)
        logger.info(f"WB-FF MUSIC near-target degradation: {degradation_db:.2f} dB")
        self.assertGreaterEqual(degradation_db, WBFF_NEAR_DEGRADATION_DB)

    def test_spectrum_positive(self):
        self.assertEqual(self.spectrum.values.shape, self.search.shape)
        self.assertTrue(np.all(self.spectrum.values >= 1.))
        self.assertEqual(len(self.estimates), 2)

    def test_noiseless_peak_beyond_boundary(self):
        theta_index = int(np.argmin(np.abs(self.search.theta_deg - self.far.angle_deg)))
        theta_deg = float(self.search.theta_deg[theta_index])
        query = BoundaryQuery.default(self.array, theta_deg=theta_deg)
        boundary = r_wbff_boundary(query, self.array, self.wb)
        range_index = int(np.flatnonzero(self.search.range_m >= max(2 * boundary, 3.))[0])
        r = float(self.search.range_m[range_index])
        self.assertLess(r, self.array.rayleigh_distance)

        snapshots = synthesize_snapshots(
            (Target.from_degrees(r, theta_deg),), self.array, self.wb, NOISELESS_SNR_DB, TEST_SEED)
        estimate = FarFieldMusic(self.array, self.wb, 1, search=self.search)(snapshots)[0]
        self.assertAlmostEqual(estimate.angle_deg, theta_deg, places=9)
        self.assertEqual(estimate.range, r)

    def test_dimension_mismatch(self):
        r = CovarianceMatrix(data=np.eye(self.array.n_elements, dtype=np.complex128), snapshot_count=1)
        with self.assertRaises(ValueError):
            subspace.music_spectrum_wbff(subspace.noise_subspace(r, 1), self.search, self.array, self.wb)


if __name__ == "__main__":
    unittest.main()
