import unittest
from dataclasses import replace

import numpy as np
import numpy.testing as npt

from cavitylink.simulate import SystemParams, make_frame, build_single_cavity, build_local, build_common, \
    liouvillian, master_rhs, evolve_master, steady_state, evolve_rates, recommend_model_cutoff, \
    recommend_single_cutoff
from cavitylink.compare.validation_tools import common_mode_operators
from cavitylink.utils import DomainError, FockSpace, adjoint, expectation, number, vacuum, fock_state, \
    coherent_state, annihilation


class Generator(unittest.TestCase):

    def test_trace_preserving(self):
        params = SystemParams(kappa1=1.0, kappa2=0.4, kappa_m=5.0, omega1=0.5, omega2=0.2j, xi2=np.exp(1.1j))
        model = build_local(params, 2)
        generator = liouvillian(model)
        dim = model.space.dim
        trace_row = np.zeros(dim * dim)
        trace_row[np.arange(dim) * (dim + 1)] = 1
        self.assertLess(np.max(np.abs(generator.T @ trace_row)), 1e-12)

    def test_dimension(self):
        model = build_single_cavity(1.0, 1.0, 4)
        self.assertEqual(liouvillian(model).shape, (25, 25))

    def test_rhs_is_hermitian(self):
        params = SystemParams(kappa1=1.0, kappa2=0.4, kappa_m=5.0, omega1=0.5, omega2=0.2j, xi2=np.exp(1.1j))
        model = build_local(params, 2)
        generator = liouvillian(model)
        dim = model.space.dim
        rhs = master_rhs(generator, dim)
        rng = np.random.default_rng(5)
        skewed = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        drho = rhs(0.0, skewed.reshape(-1)).reshape(dim, dim)
        npt.assert_allclose(drho, drho.conj().T, atol=1e-14)
        hermitian = skewed + skewed.conj().T
        npt.assert_allclose(rhs(0.0, hermitian.reshape(-1)), generator @ hermitian.reshape(-1), atol=1e-12)


class SingleCavity(unittest.TestCase):

    def test_steady_population(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            kappa = rng.uniform(0.5, 2.0)
            omega = rng.uniform(0.1, 2.0) * kappa * np.exp(1j * rng.uniform(-np.pi, np.pi))
            model = build_single_cavity(omega, kappa, recommend_single_cutoff(omega, kappa))
            state = steady_state(model)
            n = expectation(number(model.space), state).real
            self.assertLess(abs(n / (abs(omega) ** 2 / kappa ** 2) - 1), 1e-6)

    def test_coherent_amplitude(self):
        omega, kappa = 0.8 - 0.3j, 1.5
        model = build_single_cavity(omega, kappa, 12)
        state = steady_state(model)
        a = annihilation(model.space)
        self.assertAlmostEqual(expectation(a, state), -1j * np.conj(omega) / kappa, places=8)

    def test_fock_decay(self):
        model = build_single_cavity(0.0, 1.0, 3)
        result = evolve_master(model, fock_state(model.space, 2), 2.0, n_samples=5)
        table = result.expectations({'n': number(model.space)})
        npt.assert_allclose(np.real(table['n']), 2 * np.exp(-table['t']), atol=1e-7)
        self.assertLess(result.metadata['trace_error'], 1e-8)
        self.assertGreater(result.metadata['min_eigenvalue'], -1e-8)
        self.assertFalse(result.truncation_warning)

    def test_undriven_undamped(self):
        with self.assertRaises(DomainError):
            steady_state(build_single_cavity(0.0, 0.0, 3))


class TwoCavities(unittest.TestCase):

    def setUp(self) -> None:
        self.params = SystemParams(kappa1=1.0, kappa2=0.5, kappa_m=4.0, omega1=0.4, omega2=0.3j,
                                   xi1=1.0, xi2=np.exp(0.5j))
        self.frame = make_frame(self.params)

    def test_symmetric_ratio(self):
        params = SystemParams.symmetric(omega=1.0, kappa=1.0, kappa_m=8.0, phi=np.pi / 2)
        model = build_local(params, 6)
        state = steady_state(model)
        c_a, c_b = common_mode_operators(model.space, make_frame(params))
        n_a = expectation(adjoint(c_a) @ c_a, state).real
        n_b = expectation(adjoint(c_b) @ c_b, state).real
        self.assertAlmostEqual(n_b / n_a, 1 / 81, delta=1e-4)

    def test_evolution_matches_rates(self):
        model = build_local(self.params, recommend_model_cutoff(self.params, tail=1e-10))
        result = evolve_master(model, vacuum(model.space), 3.0, n_samples=7)
        c_a, c_b = common_mode_operators(model.space, self.frame)
        table = result.expectations({'n_a': adjoint(c_a) @ c_a, 'n_b': adjoint(c_b) @ c_b})
        rates = evolve_rates(self.frame, result.times)
        npt.assert_allclose(np.real(table['n_a']), rates['n_a'], atol=1e-6)
        npt.assert_allclose(np.real(table['n_b']), rates['n_b'], atol=1e-6)
        self.assertLess(result.metadata['trace_error'], 1e-8)
        self.assertGreater(result.metadata['min_eigenvalue'], -1e-8)
        self.assertEqual(len(result), 7)

    def test_representations_agree(self):
        cutoff = max(recommend_model_cutoff(self.params, 'local', tail=1e-10),
                     recommend_model_cutoff(self.params, 'common', tail=1e-10))
        local = build_local(self.params, cutoff)
        common = build_common(self.params, cutoff)
        rho_local = steady_state(local)
        rho_common = steady_state(common)
        c_a, c_b = common_mode_operators(local.space, self.frame)
        self.assertAlmostEqual(expectation(adjoint(c_b) @ c_b, rho_local).real,
                               expectation(number(common.space, 1), rho_common).real, places=7)
        self.assertAlmostEqual(expectation(c_a, rho_local), expectation(annihilation(common.space, 0), rho_common),
                               places=7)

    def test_steady_state_is_coherent(self):
        model = build_common(self.params, recommend_model_cutoff(self.params, 'common', tail=1e-10))
        state = steady_state(model)
        alpha = model.steady_amplitudes()
        expected = coherent_state(model.space, *alpha)
        fidelity = np.real(np.vdot(expected.data, state.data @ expected.data))
        self.assertGreater(fidelity, 1 - 1e-7)
        self.assertEqual(state.invariant_violations(1e-8), [])

    def test_relaxes_to_steady_state(self):
        model = build_common(self.params, 6)
        final = evolve_master(model, vacuum(model.space), 60.0, n_samples=2).final_state
        npt.assert_allclose(final.data, steady_state(model).data, atol=1e-6)

    def test_undamped_common_mode(self):
        params = replace(self.params, kappa1=0.0, kappa2=0.0)
        with self.assertRaises(DomainError):
            steady_state(build_local(params, 2))

    def test_bad_inputs(self):
        model = build_local(self.params, 2)
        with self.assertRaises(ValueError):
            evolve_master(model, vacuum(FockSpace(2, 3)), 1.0)
        with self.assertRaises(ValueError):
            evolve_master(model, vacuum(model.space), 1.0, times=[0.0, 0.5, 0.5])
        with self.assertRaises(ValueError):
            evolve_master(model, vacuum(model.space), 0.0)


if __name__ == '__main__':
    unittest.main()
