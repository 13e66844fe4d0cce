#
# For licensing see accompanying LICENSE.md file.
#

import os
import unittest

import numpy as np
from argmaxtools.utils import get_logger

from nearfieldkit import _constants, boundaries
from nearfieldkit.array_model import ArrayConfig, WidebandConfig
from nearfieldkit.boundaries import BoundaryQuery, Regime
from nearfieldkit.errors import UnsatisfiableConstraintError
from nearfieldkit.test_utils import corr_nbnf_double_sum, corr_wbff_double_sum

logger = get_logger(__name__)

# Test configuration
TEST_THETA_DEG = float(os.getenv("TEST_THETA_DEG", None) or 60.)

# Reference boundary values and their tolerances
NBNF_REFERENCE_M = 0.53
WBFF_REFERENCE_M = 17.302
NBNF_5MHZ_REFERENCE_M = 15.
LARGE_APERTURE_REFERENCE_M = {0.95: 168.3, 0.85: 95.1}


class TestCorrelations(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.array = ArrayConfig()
        cls.wb = WidebandConfig()
        cls.theta = np.deg2rad(TEST_THETA_DEG)

    def test_nbnf_matches_double_sum(self):
        for r in (0.4, 1.3, 7.):
            for model in boundaries.DISTANCE_MODELS:
                self.assertAlmostEqual(
                    boundaries.corr_nbnf(r, self.theta, self.array, self.wb, model),
                    corr_nbnf_double_sum(r, self.theta, self.array, self.wb, model), places=9)

    def test_wbff_matches_double_sum(self):
        for r in (1., 8., 40.):
            self.assertAlmostEqual(
                boundaries.corr_wbff(r, self.theta, self.array, self.wb),
                corr_wbff_double_sum(r, self.theta, self.array, self.wb), places=9)

    def test_single_subcarrier_is_narrowband(self):
        wb = WidebandConfig(n_subcarriers=1)
        self.assertAlmostEqual(boundaries.corr_nbnf(3., self.theta, self.array, wb), 1.)

    def test_nbnf_tends_to_one_as_bandwidth_vanishes(self):
        for r in (0.5, 3., 20.):
            self.assertGreaterEqual(
                boundaries.corr_nbnf(r, self.theta, self.array, self.wb.with_bandwidth(1e3)), 1 - 1e-6)
            values = [boundaries.corr_nbnf(r, self.theta, self.array, self.wb.with_bandwidth(bandwidth))
                      for bandwidth in (20e6, 5e6, 1e6, 1e5, 1e4, 1e3)]
            self.assertTrue(np.all(np.diff(values) >= -1e-12), f"r={r}: {values}")

    def test_vectorized(self):
        ranges = np.array([0.5, 1., 2.])
        values = boundaries.corr_nbnf(ranges, self.theta, self.array, self.wb)
        self.assertEqual(values.shape, (3,))
        self.assertIsInstance(boundaries.corr_wbff(2., self.theta, self.array, self.wb), float)
        self.assertTrue(np.all((values >= 0) & (values <= 1)))

    def test_rejections(self):
        with self.assertRaises(ValueError):
            boundaries.corr_nbnf(-1., self.theta, self.array, self.wb)
        with self.assertRaises(ValueError):
            boundaries.corr_wbff(1., self.theta, self.array, self.wb, distances="planar")


class TestBoundaryDistances(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.array = ArrayConfig()
        cls.wb = WidebandConfig()
        cls.query = BoundaryQuery.default(cls.array, theta_deg=TEST_THETA_DEG, threshold=0.9)

    def test_nbnf_reference(self):
        r = boundaries.r_nbnf_boundary(self.query, self.array, self.wb)
        logger.info(f"r_NB-NF = {r:.4f} m")
        self.assertAlmostEqual(r, NBNF_REFERENCE_M, delta=0.1 * NBNF_REFERENCE_M)
        self.assertAlmostEqual(boundaries.corr_nbnf(r, self.query.theta, self.array, self.wb), 0.9, delta=1e-3)

    def test_wbff_reference(self):
        r = boundaries.r_wbff_boundary(self.query, self.array, self.wb)
        logger.info(f"r_WB-FF = {r:.4f} m")
        self.assertAlmostEqual(r, WBFF_REFERENCE_M, delta=0.1 * WBFF_REFERENCE_M)

    def test_nbnf_narrow_bandwidth(self):
        r = boundaries.r_nbnf_boundary(self.query, self.array, self.wb.with_bandwidth(5e6))
        logger.info(f"r_NB-NF(5 MHz) = {r:.3f} m")
        self.assertAlmostEqual(r, NBNF_5MHZ_REFERENCE_M, delta=0.15 * NBNF_5MHZ_REFERENCE_M)

    def test_nbnf_inverse_in_bandwidth(self):
        for bandwidth in (5e6, 10e6, 20e6):
            r1 = boundaries.r_nbnf_boundary(self.query, self.array, self.wb.with_bandwidth(bandwidth))
            r2 = boundaries.r_nbnf_boundary(self.query, self.array, self.wb.with_bandwidth(2 * bandwidth))
            self.assertGreaterEqual(r2 / r1, 0.4)
            self.assertLessEqual(r2 / r1, 0.6)

    def test_wbff_holds_beyond_boundary(self):
        for theta_deg in (60., 75., 90., 110.):
            for rho in (0.8, 0.9, 0.95):
                query = BoundaryQuery.default(self.array, theta_deg=theta_deg, threshold=rho)
                r = boundaries.r_wbff_boundary(query, self.array, self.wb)
                scan = query.scan_grid()
                beyond = scan[scan > r]
                self.assertGreater(len(beyond), 0)
                values = boundaries.corr_wbff(beyond, query.theta, self.array, self.wb)
                self.assertTrue(np.all(values >= rho), f"theta={theta_deg}, rho={rho}")

    def test_wbff_non_decreasing_in_threshold(self):
        for theta_deg in (60., 90., 110.):
            previous = 0.
            for rho in (0.5, 0.7, 0.8, 0.9, 0.95, 0.99):
                query = BoundaryQuery.default(self.array, theta_deg=theta_deg, threshold=rho)
                r = boundaries.r_wbff_boundary(query, self.array, self.wb)
                self.assertGreaterEqual(r, previous * (1 - 2 * _constants.BOUNDARY_RTOL),
                                        f"theta={theta_deg}, rho={rho}")
                previous = r

    def test_wbff_large_aperture(self):
        array = ArrayConfig.from_aperture(1.8)
        self.assertEqual(array.n_elements, 337)
        for rho, reference in LARGE_APERTURE_REFERENCE_M.items():
            query = BoundaryQuery.default(array, theta_deg=TEST_THETA_DEG, threshold=rho)
            r = boundaries.r_wbff_boundary(query, array, self.wb)
            logger.info(f"r_WB-FF(D=1.8 m, rho={rho}) = {r:.2f} m")
            self.assertAlmostEqual(r, reference, delta=0.05 * reference)

    def test_wbff_quadratic_in_aperture(self):
        small, large = ArrayConfig(n_elements=63), ArrayConfig(n_elements=125)
        r_small = boundaries.r_wbff_boundary(
            BoundaryQuery.default(small, theta_deg=TEST_THETA_DEG), small, self.wb)
        r_large = boundaries.r_wbff_boundary(
            BoundaryQuery.default(large, theta_deg=TEST_THETA_DEG), large, self.wb)
        self.assertAlmostEqual(r_large / r_small, 4., delta=0.5)

    def test_sufficient_bound_holds(self):
        r_dirichlet, r_fresnel = boundaries.sufficient_bounds_wbff(self.query.theta, self.array, self.wb)
        r = max(r_dirichlet, r_fresnel)
        self.assertGreaterEqual(boundaries.corr_wbff(r, self.query.theta, self.array, self.wb), 0.5)

    def test_sufficient_bounds_vanish_at_endfire(self):
        self.assertEqual(boundaries.sufficient_bounds_wbff(0., self.array, self.wb), (0., 0.))

    def test_unsatisfiable(self):
        near_window = BoundaryQuery(theta=self.query.theta, threshold=0.9, r_lo=0.1, r_hi=5.)
        with self.assertRaises(UnsatisfiableConstraintError):
            boundaries.r_wbff_boundary(near_window, self.array, self.wb)
        far_window = BoundaryQuery(theta=self.query.theta, threshold=0.9, r_lo=5., r_hi=50.)
        with self.assertRaises(UnsatisfiableConstraintError):
            boundaries.r_nbnf_boundary(far_window, self.array, self.wb)

    def test_query_validation(self):
        with self.assertRaises(ValueError):
            BoundaryQuery(theta=1., threshold=0.9, r_lo=1., r_hi=2., scan_points=10)
        with self.assertRaises(ValueError):
            BoundaryQuery(theta=1., threshold=1.2, r_lo=1., r_hi=2.)
        with self.assertRaises(ValueError):
            BoundaryQuery(theta=1., threshold=0.9, r_lo=2., r_hi=1.)


class TestRegimes(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.array = ArrayConfig()
        cls.wb = WidebandConfig()
        cls.theta = np.deg2rad(TEST_THETA_DEG)

    def test_classify(self):
        self.assertIs(boundaries.classify_regime(0.3, self.theta, self.array, self.wb), Regime.NB_NF)
        self.assertIs(boundaries.classify_regime(3., self.theta, self.array, self.wb), Regime.WB_NF)
        self.assertIs(boundaries.classify_regime(60., self.theta, self.array, self.wb), Regime.WB_FF)
        self.assertEqual(Regime.WB_NF.value, "WB-NF")

    def test_gray_zone(self):
        zone = boundaries.gray_zone(self.array, self.wb, self.theta)
        self.assertIsNotNone(zone)
        lo, hi = zone
        self.assertLess(lo, hi)
        self.assertAlmostEqual(lo, 2 * NBNF_REFERENCE_M, delta=0.2 * NBNF_REFERENCE_M)


if __name__ == "__main__":
    unittest.main()
