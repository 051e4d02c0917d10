import unittest
from dataclasses import replace

import numpy as np
import numpy.testing as npt

from cavitylink.simulate import SystemParams, make_frame, build_common, build_local, steady_state, rate_rhs, \
    rate_steady_state, recommend_model_cutoff, symmetric_steady, moment_rhs, moment_steady_state, \
    rate_state_from_moments, single_rate_rhs, single_rate_steady, evolve_rates, RateState, MomentState
from cavitylink.compare.validation_tools import common_mode_operators
from cavitylink.utils import DomainError, adjoint, expectation


class SevenVariables(unittest.TestCase):

    def setUp(self) -> None:
        self.params = SystemParams(kappa1=1.0, kappa2=0.5, kappa_m=6.0, omega1=1.0, omega2=1.0,
                                   xi1=1.0, xi2=np.exp(0.8j))
        self.frame = make_frame(self.params)

    def test_steady_state_is_stationary(self):
        steady = rate_steady_state(self.frame)
        npt.assert_allclose(rate_rhs(steady, self.frame), np.zeros(7), atol=1e-12)

    def test_steady_matches_moments(self):
        steady = rate_steady_state(self.frame)
        converted = rate_state_from_moments(moment_steady_state(self.frame), self.frame)
        npt.assert_allclose(steady, converted, atol=1e-12)

    def test_populations_match_coherent_amplitudes(self):
        alpha = build_common(self.params, 1).steady_amplitudes()
        steady = rate_steady_state(self.frame)
        self.assertAlmostEqual(steady.n_a, abs(alpha[0]) ** 2, places=12)
        self.assertAlmostEqual(steady.n_b, abs(alpha[1]) ** 2, places=12)

    def test_evolution_bases_agree(self):
        times = np.linspace(0, 4, 9)
        rates = evolve_rates(self.frame, times, basis='rates')
        moments = evolve_rates(self.frame, times, basis='moments')
        self.assertEqual(list(rates.columns), ['t', 'n_a', 'n_b', 'k_a', 'k_b', 'm', 'l_a', 'l_b'])
        npt.assert_allclose(rates.values, moments.values, atol=1e-6)

    def test_evolution_relaxes(self):
        table = evolve_rates(self.frame, np.linspace(0, 60, 4))
        final = table.iloc[-1]
        steady = rate_steady_state(self.frame)
        self.assertAlmostEqual(final['n_a'], steady.n_a, places=6)
        self.assertAlmostEqual(final['n_b'], steady.n_b, places=6)

    def test_bad_times(self):
        with self.assertRaises(ValueError):
            evolve_rates(self.frame, [0.0])
        with self.assertRaises(ValueError):
            evolve_rates(self.frame, [0.0, 1.0], basis='quadratures')


class DegenerateDrive(unittest.TestCase):

    def setUp(self) -> None:
        xi2 = np.exp(0.3j)
        self.params = SystemParams(kappa1=1.0, kappa2=1.0, kappa_m=5.0, omega1=-np.conj(xi2), omega2=1.0,
                                   xi1=1.0, xi2=xi2)
        self.frame = make_frame(self.params)

    def test_rhs_rejects_vanishing_normaliser(self):
        with self.assertRaises(DomainError):
            rate_rhs(RateState(*np.zeros(7)), self.frame)

    def test_steady_state_falls_back(self):
        steady = rate_steady_state(self.frame)
        self.assertAlmostEqual(steady.n_b, 0.0, places=14)
        self.assertAlmostEqual(steady.n_a, abs(self.frame.omega_a) ** 2 / self.frame.kappa_a ** 2, places=12)

    def test_evolution_uses_moments(self):
        table = evolve_rates(self.frame, np.linspace(0, 2, 5))
        npt.assert_allclose(table['n_b'], 0, atol=1e-14)

    def test_moment_rhs_at_rest(self):
        derivative = moment_rhs(moment_steady_state(self.frame), self.frame)
        npt.assert_allclose(derivative, np.zeros(len(MomentState._fields)), atol=1e-12)

    def test_undamped(self):
        frame = make_frame(replace(self.params, kappa1=0.0, kappa2=0.0))
        with self.assertRaises(DomainError):
            rate_steady_state(frame)


class ClosedForms(unittest.TestCase):

    def test_quarter_turn(self):
        steady = symmetric_steady(1.0, 1.0, 8.0, np.pi / 2)
        self.assertAlmostEqual(steady.ratio, 1 / 81)
        self.assertAlmostEqual(steady.n_a, 1.0)
        self.assertIsNone(steady.flag)

    def test_nearly_opposite(self):
        steady = symmetric_steady(1.0, 1.0, 8.0, 0.9 * np.pi)
        self.assertAlmostEqual(steady.ratio, 3.097e-4, delta=1e-6)

    def test_in_phase(self):
        with self.assertLogs('cavitylink.simulate.rate_equations', level='WARNING'):
            steady = symmetric_steady(1.0, 1.0, 8.0, 0.0)
        self.assertEqual(steady.ratio, np.inf)
        self.assertEqual(steady.flag, 'sole driving of the c_b mode')

    def test_matches_rate_equations(self):
        for phi in (0.5, np.pi / 2, 2.5):
            for kappa_m in (0.0, 3.0, 20.0):
                params = SystemParams.symmetric(omega=0.7, kappa=1.3, kappa_m=kappa_m, phi=phi)
                steady = rate_steady_state(make_frame(params))
                closed = symmetric_steady(0.7, 1.3, kappa_m, phi)
                self.assertAlmostEqual(steady.n_a, closed.n_a, places=12)
                self.assertAlmostEqual(steady.n_b, closed.n_b, places=12)

    def test_monotone_in_fiber_rate(self):
        ratios = [symmetric_steady(1.0, 1.0, kappa_m, 2.0).ratio for kappa_m in np.linspace(0, 20, 21)]
        self.assertTrue(np.all(np.diff(ratios) < 0))

    def test_single_cavity(self):
        steady = single_rate_steady(1.5, 0.5)
        self.assertAlmostEqual(steady.n, 9.0)
        npt.assert_allclose(single_rate_rhs(steady, 1.5, 0.5), [0, 0], atol=1e-12)
        with self.assertRaises(DomainError):
            single_rate_steady(1.0, 0.0)


class PopulationCurves(unittest.TestCase):
    """Unequal leakage rates with equal drives Omega_1 = Omega_2 = kappa_1 and phi = pi/2."""

    kappa_m_values = (1.0, 2.0, 5.0, 10.0, 20.0)

    def params(self, kappa2, kappa_m):
        return SystemParams(kappa1=1.0, kappa2=kappa2, kappa_m=kappa_m, omega1=1.0, omega2=1.0, xi1=1.0, xi2=1j)

    def full_populations(self, params):
        model = build_local(params, recommend_model_cutoff(params))
        state = steady_state(model)
        c_a, c_b = common_mode_operators(model.space, make_frame(params))
        return expectation(adjoint(c_a) @ c_a, state).real, expectation(adjoint(c_b) @ c_b, state).real

    def test_rates_match_full_model(self):
        for kappa2 in (0.5, 1.5):
            ratios = []
            for kappa_m in self.kappa_m_values:
                params = self.params(kappa2, kappa_m)
                n_a, n_b = self.full_populations(params)
                rates = rate_steady_state(make_frame(params))
                self.assertLess(abs(n_a - rates.n_a), 1e-5, (kappa2, kappa_m))
                self.assertLess(abs(n_b - rates.n_b), 1e-5, (kappa2, kappa_m))
                ratios.append(n_b / n_a)
            self.assertTrue(np.all(np.diff(ratios) < 0), kappa2)

    def test_ratio_decreases(self):
        for kappa2 in (0.5, 1.5):
            steady = [rate_steady_state(make_frame(self.params(kappa2, kappa_m)))
                      for kappa_m in np.arange(1.0, 20.25, 0.25)]
            ratios = np.array([state.n_b / state.n_a for state in steady])
            self.assertTrue(np.all(np.diff(ratios) < 0), kappa2)


if __name__ == '__main__':
    unittest.main()
