import unittest

import numpy as np
import numpy.testing as npt

from cavitylink.utils import FockSpace, Operator, QuantumState, DataError, annihilation, creation, number, \
    total_number, identity, zero, adjoint, commutator, combine_modes, expectation, fock_state, vacuum, \
    coherent_state


class Space(unittest.TestCase):

    def test_dimensions(self):
        space = FockSpace(2, 3)
        self.assertEqual(space.local_dim, 4)
        self.assertEqual(space.dim, 16)
        self.assertEqual(FockSpace(1, 5).dim, 6)

    def test_index_is_row_major(self):
        space = FockSpace(2, 3)
        self.assertEqual(space.index(0, 0), 0)
        self.assertEqual(space.index(0, 1), 1)
        self.assertEqual(space.index(1, 2), 6)
        npt.assert_array_equal(space.occupations()[6], [1, 2])
        for idx, occupation in enumerate(space.occupations()):
            self.assertEqual(space.index(*occupation), idx)

    def test_invalid(self):
        with self.assertRaises(ValueError):
            FockSpace(3, 2)
        with self.assertRaises(ValueError):
            FockSpace(1, 0)
        with self.assertRaises(ValueError):
            FockSpace(2, 3).index(4, 0)
        with self.assertRaises(ValueError):
            FockSpace(2, 3).index(1)


class Ladder(unittest.TestCase):

    def setUp(self) -> None:
        self.single = FockSpace(1, 5)
        self.pair = FockSpace(2, 4)

    def test_annihilation_lowers(self):
        a = annihilation(self.single)
        for n in range(1, 6):
            lowered = a.apply(fock_state(self.single, n).data)
            npt.assert_allclose(lowered, np.sqrt(n) * fock_state(self.single, n - 1).data)
        npt.assert_array_equal(a.apply(vacuum(self.single).data), 0)

    def test_creation_is_adjoint(self):
        npt.assert_allclose(creation(self.pair, 1).toarray(), annihilation(self.pair, 1).toarray().conj().T)

    def test_canonical_commutator_below_cutoff(self):
        a = annihilation(self.single)
        diagonal = np.real(np.diag(commutator(a, adjoint(a)).toarray()))
        npt.assert_allclose(diagonal[:-1], 1)
        self.assertAlmostEqual(diagonal[-1], -self.single.cutoff)
        off_diagonal = commutator(a, adjoint(a)).toarray() - np.diag(diagonal)
        npt.assert_array_equal(off_diagonal, 0)

    def test_modes_commute(self):
        a1, a2 = annihilation(self.pair, 0), annihilation(self.pair, 1)
        self.assertTrue(commutator(a1, a2).is_zero())
        self.assertTrue(commutator(a1, adjoint(a2)).is_zero())

    def test_number_counts_photons(self):
        occupations = self.pair.occupations()
        npt.assert_allclose(np.diag(number(self.pair, 0).toarray()), occupations[:, 0])
        npt.assert_allclose(np.diag(number(self.pair, 1).toarray()), occupations[:, 1])
        npt.assert_allclose(np.diag(total_number(self.pair).toarray()), occupations.sum(axis=1))

    def test_combine_modes(self):
        npt.assert_allclose(combine_modes(self.pair, [1, 0]).toarray(), annihilation(self.pair, 0).toarray())
        mixed = combine_modes(self.pair, [0.6, 0.8j])
        expected = 0.6 * annihilation(self.pair, 0).toarray() + 0.8j * annihilation(self.pair, 1).toarray()
        npt.assert_allclose(mixed.toarray(), expected)
        with self.assertRaises(ValueError):
            combine_modes(self.pair, [1])

    def test_bad_mode_index(self):
        with self.assertRaises(ValueError):
            annihilation(self.single, 1)


class Arithmetic(unittest.TestCase):

    def setUp(self) -> None:
        self.space = FockSpace(2, 2)
        self.a = annihilation(self.space, 0)

    def test_scalar_products(self):
        npt.assert_allclose((np.float64(2.0) * self.a).toarray(), 2 * self.a.toarray())
        npt.assert_allclose((self.a * 0.5j).toarray(), 0.5j * self.a.toarray())
        npt.assert_allclose((self.a / 2).toarray(), 0.5 * self.a.toarray())
        self.assertIsInstance(np.complex128(1j) * self.a, Operator)

    def test_sum_and_difference(self):
        self.assertTrue((self.a - self.a).is_zero())
        npt.assert_allclose((self.a + identity(self.space)).toarray(), self.a.toarray() + np.eye(self.space.dim))
        npt.assert_allclose((-self.a).toarray(), -self.a.toarray())
        self.assertTrue(zero(self.space).is_zero())

    def test_space_mismatch(self):
        other = annihilation(FockSpace(2, 3), 0)
        with self.assertRaises(ValueError):
            self.a @ other
        with self.assertRaises(ValueError):
            self.a + other

    def test_shape_mismatch(self):
        with self.assertRaises(ValueError):
            Operator(self.space, np.eye(3))


class States(unittest.TestCase):

    def setUp(self) -> None:
        self.space = FockSpace(1, 15)

    def test_coherent_expectations(self):
        state = coherent_state(self.space, 0.5 - 0.2j)
        a = annihilation(self.space)
        self.assertAlmostEqual(expectation(a, state), 0.5 - 0.2j, places=10)
        self.assertAlmostEqual(expectation(number(self.space), state).real, 0.29, places=10)

    def test_truncated_coherent_norm(self):
        state = coherent_state(FockSpace(1, 2), 1.5, normalize=False)
        self.assertLess(state.norm(), 1)
        self.assertAlmostEqual(coherent_state(FockSpace(1, 2), 1.5).norm(), 1)

    def test_product_coherent_state(self):
        pair = FockSpace(2, 12)
        state = coherent_state(pair, 0.3, -0.4j)
        self.assertAlmostEqual(expectation(annihilation(pair, 0), state), 0.3, places=10)
        self.assertAlmostEqual(expectation(annihilation(pair, 1), state), -0.4j, places=10)

    def test_density_matrix_matches_vector(self):
        state = coherent_state(self.space, 0.7j)
        rho = state.to_density_matrix()
        self.assertEqual(rho.kind, 'mixed')
        op = number(self.space)
        self.assertAlmostEqual(expectation(op, rho), expectation(op, state), places=12)
        npt.assert_allclose(rho.populations(), state.populations(), atol=1e-15)
        self.assertEqual(rho.invariant_violations(), [])

    def test_validate(self):
        space = FockSpace(1, 1)
        self.assertIs(vacuum(space).validate().space, space)
        with self.assertRaises(DataError):
            QuantumState(space, [[0.5, 0.3], [0.1, 0.5]]).validate()
        with self.assertRaises(DataError):
            QuantumState(space, [[1.2, 0], [0, -0.2]]).validate()
        with self.assertRaises(DataError):
            QuantumState(space, [1, 1]).validate()

    def test_unnormalised_trace_warns(self):
        space = FockSpace(1, 1)
        rho = QuantumState(space, [[0.5, 0], [0, 0.2]])
        with self.assertLogs('cavitylink.utils.fock_algebra', level='WARNING'):
            value = expectation(number(space), rho)
        self.assertAlmostEqual(value, 0.2)

    def test_bad_shape(self):
        with self.assertRaises(ValueError):
            QuantumState(self.space, np.zeros(3))
        with self.assertRaises(ValueError):
            QuantumState(self.space, np.zeros((2, 2, 2)))


if __name__ == '__main__':
    unittest.main()
