#
# For licensing see accompanying LICENSE.md file.
#

import unittest

import numpy as np
from argmaxtools.utils import get_logger

from nearfieldkit import coherence
from nearfieldkit._constants import SPEED_OF_LIGHT
from nearfieldkit.array_model import ArrayConfig, WidebandConfig, steering_vector
from nearfieldkit.errors import UnsatisfiableConstraintError
from nearfieldkit.test_utils import (_prepare_test_localize_config,
                                     s_freq_sum, s_space_sum)

logger = get_logger(__name__)

# Discrete and integral coherence agree where the quadratic phase stays small across the aperture
SUM_AGREEMENT_TOL = 0.02


class TestDirichlet(unittest.TestCase):
    def test_singular_limit(self):
        self.assertAlmostEqual(coherence.dirichlet_kernel(0., 8), 8.)
        self.assertAlmostEqual(coherence.dirichlet_kernel(2 * np.pi, 8), -8.)
        self.assertAlmostEqual(coherence.dirichlet_kernel(2 * np.pi, 7), 7.)
        self.assertAlmostEqual(coherence.dirichlet_ratio(4 * np.pi, 8), 1.)

    def test_s_freq_matches_sum(self):
        wb = WidebandConfig()
        for delta_r in (0., 0.3, 1.7, 5.2, 11.):
            self.assertAlmostEqual(coherence.s_freq(delta_r, wb), s_freq_sum(delta_r, wb), places=9)

    def test_s_freq_nulls(self):
        wb = WidebandConfig()
        for k in (1, 2, 5):
            self.assertLess(coherence.s_freq(k * wb.distance_resolution, wb), 1e-9)
        self.assertAlmostEqual(coherence.s_freq(0., wb), 1.)

    def test_s_freq_periodic_and_even(self):
        wb = WidebandConfig()
        period = SPEED_OF_LIGHT / wb.subcarrier_spacing
        rng = np.random.default_rng(5)
        for delta_r in rng.uniform(0., period, size=20):
            value = coherence.s_freq(delta_r, wb)
            self.assertAlmostEqual(coherence.s_freq(delta_r + period, wb), value, places=9)
            self.assertAlmostEqual(coherence.s_freq(delta_r - 3 * period, wb), value, places=9)
            self.assertAlmostEqual(coherence.s_freq(-delta_r, wb), value, places=12)

    def test_s_space_matches_sum(self):
        for delta_alpha in (0.0, 0.01, 0.05, 0.3):
            self.assertAlmostEqual(
                coherence.s_space_linear(delta_alpha, 127), s_space_sum(delta_alpha, 127), places=9)
        self.assertLess(coherence.s_space_linear(2 / 127, 127), 1e-9)

    def test_vectorized(self):
        values = coherence.s_space_linear(np.array([0., 2 / 33, 4 / 33]), 33)
        self.assertEqual(values.shape, (3,))
        np.testing.assert_allclose(values, [1., 0., 0.], atol=1e-9)


class TestMutualCoherence(unittest.TestCase):
    @classmethod
    def setUpClass(cls) -> None:
        cls.array, cls.wb = _prepare_test_localize_config()

    def test_self_coherence(self):
        a = steering_vector(1.5, 1.4, self.array, self.wb)
        self.assertAlmostEqual(coherence.mutual_coherence(a, a), 1.)

    def test_symmetric_and_bounded(self):
        a = steering_vector(1.5, 1.4, self.array, self.wb)
        b = steering_vector(2.1, 1.6, self.array, self.wb)
        ab = coherence.mutual_coherence(a, b)
        self.assertAlmostEqual(ab, coherence.mutual_coherence(b, a), places=12)
        self.assertGreaterEqual(ab, 0.)
        self.assertLessEqual(ab, 1.)

    def test_rejects_unnormalized(self):
        a = steering_vector(1.5, 1.4, self.array, self.wb, normalize=False)
        with self.assertRaises(ValueError):
            coherence.mutual_coherence(a, a)

    def test_rejects_length_mismatch(self):
        a = steering_vector(1.5, 1.4, self.array, self.wb)
        b = steering_vector(1.5, 1.4, ArrayConfig(n_elements=31), self.wb)
        with self.assertRaises(ValueError):
            coherence.mutual_coherence(a, b)


class TestFresnel(unittest.TestCase):
    def test_known_values(self):
        u, v = coherence.fresnel_integrals(1.5)
        self.assertAlmostEqual(u, 0.44526, delta=1e-4)
        self.assertAlmostEqual(v, 0.6975, delta=1e-4)
        u, v = coherence.fresnel_integrals(2.)
        self.assertAlmostEqual(u, 0.4883, delta=1e-4)
        self.assertAlmostEqual(v, 0.3434, delta=1e-4)

    def test_quadrature_agrees(self):
        for zeta in (0.3, 1.55, 1.8, 4.):
            special = coherence.fresnel_integrals(zeta)
            quad = coherence.fresnel_integrals_quad(zeta)
            self.assertAlmostEqual(special.u, quad.u, delta=1e-7)
            self.assertAlmostEqual(special.v, quad.v, delta=1e-7)
        self.assertEqual(coherence.fresnel_integrals_quad(0.), (0., 0.))


class TestCurvatureCoherence(unittest.TestCase):
    def test_unit_at_zero(self):
        self.assertEqual(coherence.curvature_coherence(0., 127), 1.)
        self.assertEqual(coherence.curvature_coherence_from_zeta(0., 127), 1.)

    def test_decays_like_inverse_zeta(self):
        self.assertAlmostEqual(coherence.curvature_coherence_from_zeta(6.62, 127), 0.0995, delta=2e-3)

    def test_integral_tracks_sum(self):
        n_elements = 127
        half = (n_elements - 1) // 2
        # 2 N' |x| <= 0.5
        xs = np.linspace(0., 0.25 / half, 40)
        integral = coherence.curvature_coherence(xs, n_elements)
        discrete = coherence.curvature_coherence_sum(xs, n_elements)
        np.testing.assert_allclose(integral, discrete, atol=SUM_AGREEMENT_TOL)

    def test_curve_frame(self):
        frame = coherence.coherence_curve(np.linspace(0., 10., 11), 127)
        self.assertEqual(list(frame.columns), ["zeta", "coherence_integral", "coherence_sum"])
        self.assertEqual(len(frame), 11)
        self.assertTrue(((frame["coherence_integral"] >= 0) & (frame["coherence_integral"] <= 1)).all())


class TestSolveZeta(unittest.TestCase):
    def test_thresholds(self):
        expected = {0.5: 1.552, 0.1: 6.57, 0.01: 69.70}
        for delta, zeta in expected.items():
            solved = coherence.solve_zeta(delta, 127)
            logger.info(f"zeta({delta}) = {solved:.4f}")
            self.assertAlmostEqual(solved, zeta, delta=0.02 * zeta)
            self.assertAlmostEqual(coherence.curvature_coherence_from_zeta(solved, 127), delta, delta=1e-3)

    def test_first_crossing_precedes_largest(self):
        first = coherence.solve_zeta(0.1, 127)
        largest = coherence.solve_zeta(0.1, 127, crossing="largest")
        self.assertLess(first, largest)
        self.assertAlmostEqual(largest, 7.4, delta=0.2)

    def test_monotone_in_delta(self):
        zetas = [coherence.solve_zeta(delta, 127) for delta in (0.5, 0.3, 0.1, 0.05)]
        self.assertTrue(all(a < b for a, b in zip(zetas, zetas[1:])))

    def test_rejections(self):
        with self.assertRaises(ValueError):
            coherence.solve_zeta(1., 127)
        with self.assertRaises(ValueError):
            coherence.solve_zeta(0.1, 127, crossing="last")
        with self.assertRaises(UnsatisfiableConstraintError):
            coherence.solve_zeta(0.01, 127, zeta_max=5.)


if __name__ == "__main__":
    unittest.main()
