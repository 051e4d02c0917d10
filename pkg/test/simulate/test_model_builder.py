import unittest
from dataclasses import replace

import numpy as np
import numpy.testing as npt

from cavitylink.simulate import SystemParams, make_frame, build_single_cavity, build_local, build_common, \
    build_effective, build_model, validate_regime, adiabatic_cb_amplitude, recommend_model_cutoff, \
    recommend_single_cutoff, steady_state
from cavitylink.compare.validation_tools import check_effective_accuracy
from cavitylink.utils import DomainError, expectation, number


def asymmetric_params():
    return SystemParams(kappa1=1.0, kappa2=0.5, kappa_m=12.0, omega1=0.4 + 0.1j, omega2=-0.3j,
                        xi1=0.8, xi2=0.6 * np.exp(0.7j))


class Params(unittest.TestCase):

    def test_negative_rate_named(self):
        with self.assertRaisesRegex(ValueError, 'kappa1'):
            SystemParams(kappa1=-1.0)
        with self.assertRaisesRegex(ValueError, 'kappa_m'):
            SystemParams(kappa_m=np.inf)

    def test_zero_coupling(self):
        with self.assertRaises(ValueError):
            SystemParams(xi1=0, xi2=0)

    def test_symmetric(self):
        params = SystemParams.symmetric(omega=1.0, kappa=2.0, kappa_m=8.0, phi=np.pi / 2)
        self.assertEqual(params.kappa1, params.kappa2)
        self.assertAlmostEqual(make_frame(params).phi, np.pi / 2)

    def test_with_phase(self):
        params = asymmetric_params().with_phase(-2.0)
        self.assertAlmostEqual(make_frame(params).phi, -2.0)
        self.assertAlmostEqual(abs(params.xi2), 0.6)

    def test_with_drive_ratio(self):
        params = asymmetric_params()
        power = abs(params.omega1) ** 2 + abs(params.omega2) ** 2
        changed = params.with_drive_ratio(0.5 - 1.5j)
        self.assertAlmostEqual(changed.omega1 / changed.omega2, 0.5 - 1.5j)
        self.assertAlmostEqual(abs(changed.omega1) ** 2 + abs(changed.omega2) ** 2, power)


class Frame(unittest.TestCase):

    def setUp(self) -> None:
        self.params = asymmetric_params()
        self.frame = make_frame(self.params)

    def test_transform_unitary(self):
        m = self.frame.transform
        npt.assert_allclose(m @ m.conj().T, np.eye(2), atol=1e-14)

    def test_drive_power_preserved(self):
        p = self.params
        self.assertAlmostEqual(abs(self.frame.omega_a) ** 2 + abs(self.frame.omega_b) ** 2,
                               abs(p.omega1) ** 2 + abs(p.omega2) ** 2)

    def test_trace_identity(self):
        self.assertAlmostEqual(self.frame.kappa_a + self.frame.kappa_b, self.params.kappa1 + self.params.kappa2)

    def test_round_trips(self):
        moments = np.array([0.3 - 0.2j, 1.1j])
        npt.assert_allclose(self.frame.to_local(self.frame.to_common(moments)), moments)
        correlations = np.outer(moments.conj(), moments)
        npt.assert_allclose(self.frame.correlations_to_common(correlations),
                            np.outer(self.frame.to_common(moments).conj(), self.frame.to_common(moments)))
        npt.assert_allclose(self.frame.correlations_to_local(self.frame.correlations_to_common(correlations)),
                            correlations)

    def test_alignment_drives_only_ca(self):
        params = replace(self.params, kappa2=self.params.kappa1,
                         omega1=-np.conj(self.params.xi2) / np.conj(self.params.xi1) * 0.5, omega2=0.5)
        frame = make_frame(params)
        self.assertAlmostEqual(abs(frame.omega_b), 0)
        self.assertGreater(abs(frame.omega_a), 0)

    def test_effective_quantities(self):
        self.assertLessEqual(self.frame.kappa_eff, self.frame.kappa_a)
        symmetric = make_frame(SystemParams.symmetric(1.0, 1.0, 5.0, 0.3))
        self.assertAlmostEqual(symmetric.omega_eff, symmetric.omega_a)
        self.assertAlmostEqual(symmetric.kappa_eff, symmetric.kappa_a)
        self.assertAlmostEqual(symmetric.ideal_emission_rate, abs(symmetric.omega_a) ** 2 / symmetric.kappa_a)

    def test_effective_needs_fiber(self):
        frame = make_frame(replace(self.params, kappa_m=0.0))
        with self.assertRaises(DomainError):
            frame.omega_eff
        with self.assertRaises(DomainError):
            frame.kappa_eff

    def test_make_frame_type(self):
        with self.assertRaises(ValueError):
            make_frame({'kappa1': 1})


class Builders(unittest.TestCase):

    def setUp(self) -> None:
        self.params = asymmetric_params()
        self.frame = make_frame(self.params)

    def test_invariants(self):
        for representation in ('local', 'common', 'effective'):
            model = build_model(self.params, 3, representation)
            self.assertEqual(model.invariant_violations(), [], representation)
        self.assertEqual(build_single_cavity(1 + 1j, 2.0, 4).invariant_violations(), [])

    def test_labels(self):
        local = build_local(self.params, 2)
        self.assertEqual(local.jump_labels, ['1', '2', 'm'])
        self.assertEqual(local.mode_labels, ('c1', 'c2'))
        self.assertEqual(build_common(self.params, 2).mode_labels, ('ca', 'cb'))
        self.assertEqual(build_effective(self.params, 2).mode_labels, ('ca',))
        self.assertEqual(build_single_cavity(1.0, 1.0, 2).jump_labels, ['kappa'])

    def test_damping_matrices_agree(self):
        local = build_local(self.params, 2)
        common = build_common(self.params, 2)
        m = self.frame.transform
        npt.assert_allclose(m @ local.damping_matrix @ m.conj().T, common.damping_matrix, atol=1e-13)
        npt.assert_allclose(common.damping_matrix, self.frame.damping_matrix, atol=1e-13)
        npt.assert_allclose(common.drive_vector, self.frame.drive_vector)

    def test_fiber_acts_on_cb_only(self):
        common = build_common(self.params, 2)
        npt.assert_allclose(common.jump_vectors[2][1], [0, np.sqrt(self.params.kappa_m)])

    def test_effective_total_rate(self):
        model = build_effective(self.params, 3)
        npt.assert_allclose(model.damping_matrix, [[self.frame.kappa_eff]], rtol=1e-12)
        npt.assert_allclose(model.drive_vector, [self.frame.omega_eff])

    def test_effective_domain(self):
        with self.assertRaises(DomainError):
            build_effective(replace(self.params, kappa_m=0.0), 3)
        with self.assertRaises(DomainError):
            build_effective(replace(self.params, kappa1=4.0, kappa2=0.0, kappa_m=0.1), 3)

    def test_steady_amplitudes_agree(self):
        local = build_local(self.params, 2).steady_amplitudes()
        common = build_common(self.params, 2).steady_amplitudes()
        npt.assert_allclose(self.frame.to_common(local), common, atol=1e-13)

    def test_single_cavity_checks(self):
        with self.assertRaises(ValueError):
            build_single_cavity(1.0, -1.0, 3)
        with self.assertRaises(ValueError):
            build_single_cavity(1.0, 0.0, 3)
        self.assertTrue(build_single_cavity(0.0, 0.0, 3).h_cond.is_zero())

    def test_unknown_representation(self):
        with self.assertRaises(ValueError):
            build_model(self.params, 2, 'single')

    def test_adiabatic_amplitude(self):
        alpha = build_common(self.params, 2).steady_amplitudes()
        predicted = adiabatic_cb_amplitude(self.frame, alpha[0])
        kappa_m = self.params.kappa_m
        npt.assert_allclose(predicted * kappa_m / (kappa_m + self.frame.kappa_b), alpha[1], rtol=1e-10)

    def test_cutoffs(self):
        self.assertGreaterEqual(recommend_model_cutoff(self.params), 2)
        self.assertGreater(recommend_single_cutoff(3.0, 1.0), recommend_single_cutoff(0.3, 1.0))
        with self.assertRaises(DomainError):
            recommend_single_cutoff(1.0, 0.0)


class Regime(unittest.TestCase):

    def test_default_passes(self):
        report = validate_regime(SystemParams(kappa_m=20.0))
        self.assertTrue(report.passed)
        self.assertEqual(report.failures(), [])
        self.assertEqual(report['fiber_markov'].ratio, np.inf)

    def test_weak_fiber(self):
        with self.assertLogs('cavitylink.simulate.model_builder', level='WARNING'):
            report = validate_regime(SystemParams(kappa_m=2.0))
        self.assertFalse(report['fiber_dominates'].passed)
        self.assertAlmostEqual(report['fiber_dominates'].ratio, 2.0)

    def test_long_fiber(self):
        report = validate_regime(SystemParams(kappa_m=20.0), fiber_length_m=100.0, reference_rate_per_s=1e6)
        self.assertFalse(report['fiber_markov'].passed)
        self.assertTrue(report['fiber_dominates'].passed)
        self.assertEqual(set(report.to_dict()), {'fiber_dominates', 'fiber_markov', 'fiber_faster_than_cavities'})

    def test_bad_arguments(self):
        with self.assertRaises(ValueError):
            validate_regime(SystemParams(), fiber_length_m=-1.0)


class EffectiveReduction(unittest.TestCase):

    def test_equal_couplings_give_single_cavity(self):
        xi = 0.6 * np.exp(0.3j)
        params = SystemParams(kappa1=0.8, kappa2=0.8, kappa_m=5.0, omega1=0.7, omega2=0.2j, xi1=xi, xi2=xi)
        frame = make_frame(params)
        effective = build_effective(params, 6)
        single = build_single_cavity(frame.omega_a, 0.8, 6)
        npt.assert_allclose(effective.drive_vector, single.drive_vector, atol=1e-14)
        npt.assert_allclose(effective.damping_matrix, single.damping_matrix, atol=1e-14)
        npt.assert_allclose(effective.h_cond.toarray(), single.h_cond.toarray(), atol=1e-14)
        npt.assert_allclose(steady_state(effective).data, steady_state(single).data, atol=1e-10)

    def test_matches_full_model(self):
        params = asymmetric_params()
        errors = []
        for factor in (100, 200):
            kappa_m = factor * max(params.kappa1, params.kappa2, abs(params.omega1), abs(params.omega2))
            scaled = replace(params, kappa_m=kappa_m)
            full = build_common(scaled, recommend_model_cutoff(scaled, 'common', tail=1e-14))
            effective = build_effective(scaled, recommend_model_cutoff(scaled, 'effective', tail=1e-14))
            n_full = expectation(number(full.space, 0), steady_state(full)).real
            n_effective = expectation(number(effective.space), steady_state(effective)).real
            errors.append(abs(n_effective - n_full) / n_full)
        self.assertLess(errors[0], 0.02)
        self.assertGreater(errors[0] / errors[1], 1.8)

    def test_random_draws(self):
        with self.assertLogs('cavitylink.compare.validation_tools', level='INFO') as logs:
            result = check_effective_accuracy(np.random.default_rng(3), 5)
        self.assertTrue(result.passed, result.detail)
        self.assertLess(result.max_error, 0.02)
        self.assertIn('rejected', result.detail)
        self.assertTrue(any('rejected outside the adiabatic regime' in line for line in logs.output))


if __name__ == '__main__':
    unittest.main()
