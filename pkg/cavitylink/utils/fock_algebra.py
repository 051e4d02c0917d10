"""Truncated Fock space operator algebra for one and two bosonic modes.

Basis ordering is row-major over the mode occupations: for two modes the state |i,j> sits at index
``i * (cutoff + 1) + j``, i.e. mode 0 is the left tensor factor.
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from cavitylink.utils.errors import DataError

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8


@dataclass(frozen=True)
class FockSpace:
    """Truncated Fock space of ``n_modes`` bosonic modes with at most ``cutoff`` photons per mode."""
    n_modes: int
    cutoff: int

    def __post_init__(self):
        if self.n_modes not in (1, 2):
            raise ValueError(f'n_modes must be 1 or 2, not {self.n_modes}')
        if int(self.cutoff) != self.cutoff or self.cutoff < 1:
            raise ValueError(f'cutoff must be an integer >= 1, not {self.cutoff}')

    @property
    def local_dim(self):
        return self.cutoff + 1

    @property
    def dim(self):
        return self.local_dim ** self.n_modes

    def index(self, *occupations):
        """Return the basis index of the Fock state with the given per-mode occupations."""
        if len(occupations) != self.n_modes:
            raise ValueError(f'Expected {self.n_modes} occupation numbers, got {len(occupations)}')
        idx = 0
        for n in occupations:
            if not 0 <= n <= self.cutoff:
                raise ValueError(f'Occupation {n} outside [0, {self.cutoff}]')
            idx = idx * self.local_dim + int(n)
        return idx

    def occupations(self):
        """Occupation numbers of every basis state, as an integer array of shape (dim, n_modes)."""
        grids = np.meshgrid(*[np.arange(self.local_dim)] * self.n_modes, indexing='ij')
        return np.stack([g.ravel() for g in grids], axis=1)


def _as_csr(matrix):
    csr = sp.csr_matrix(matrix, dtype=np.complex128, copy=True)
    csr.sum_duplicates()
    csr.eliminate_zeros()
    csr.sort_indices()
    return csr


class Operator:
    """Sparse complex operator on a FockSpace. Treated as immutable after construction."""

    __slots__ = ('space', 'matrix')
    __array_ufunc__ = None

    def __init__(self, space, matrix):
        matrix = _as_csr(matrix)
        if matrix.shape != (space.dim, space.dim):
            raise ValueError(f'Operator shape {matrix.shape} does not match space dimension {space.dim}')
        self.space = space
        self.matrix = matrix

    def __repr__(self):
        return f'Operator(n_modes={self.space.n_modes}, cutoff={self.space.cutoff}, nnz={self.matrix.nnz})'

    def __matmul__(self, other):
        return compose(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1))

    def __neg__(self):
        return scale(self, -1)

    def __mul__(self, factor):
        return scale(self, factor)

    __rmul__ = __mul__

    def __truediv__(self, factor):
        return scale(self, 1 / factor)

    def dag(self):
        return adjoint(self)

    def toarray(self):
        return self.matrix.toarray()

    def is_zero(self):
        return self.matrix.nnz == 0

    def apply(self, vector):
        """Apply to a state vector (or a (dim, k) block of column vectors)."""
        return self.matrix @ vector


def _check_same_space(a, b):
    if a.space != b.space:
        raise ValueError(f'Operators live on different spaces: {a.space} vs. {b.space}')


def compose(a, b):
    """Operator product ``a @ b``."""
    _check_same_space(a, b)
    return Operator(a.space, a.matrix @ b.matrix)


def add(a, b):
    _check_same_space(a, b)
    return Operator(a.space, a.matrix + b.matrix)


def scale(op, factor):
    return Operator(op.space, op.matrix * complex(factor))


def adjoint(op):
    return Operator(op.space, op.matrix.conj().T)


def commutator(a, b):
    return compose(a, b) - compose(b, a)


def identity(space):
    return Operator(space, sp.identity(space.dim, dtype=np.complex128, format='csr'))


def zero(space):
    return Operator(space, sp.csr_matrix((space.dim, space.dim), dtype=np.complex128))


def _single_mode_annihilation(local_dim):
    return sp.diags(np.sqrt(np.arange(1, local_dim, dtype=float)), offsets=1,
                    shape=(local_dim, local_dim), format='csr')


def annihilation(space, mode_index=0):
    """Ladder operator a with a|n> = sqrt(n)|n-1> on ``mode_index``, identity on the other mode.

    :param space: FockSpace
    :param mode_index: 0 or (for two-mode spaces) 1
    :return: Operator
    """
    if not 0 <= mode_index < space.n_modes:
        raise ValueError(f'mode_index {mode_index} out of range for {space.n_modes}-mode space')
    a = _single_mode_annihilation(space.local_dim)
    if space.n_modes == 1:
        return Operator(space, a)
    eye = sp.identity(space.local_dim, format='csr')
    factors = [a, eye] if mode_index == 0 else [eye, a]
    return Operator(space, sp.kron(factors[0], factors[1], format='csr'))


def creation(space, mode_index=0):
    return adjoint(annihilation(space, mode_index))


def number(space, mode_index=0):
    a = annihilation(space, mode_index)
    return compose(adjoint(a), a)


def total_number(space):
    total = number(space, 0)
    for mode in range(1, space.n_modes):
        total = total + number(space, mode)
    return total


def combine_modes(space, coefficients):
    """Linear combination sum_i coefficients[i] * a_i of the annihilation operators of ``space``."""
    if len(coefficients) != space.n_modes:
        raise ValueError(f'Expected {space.n_modes} coefficients, got {len(coefficients)}')
    op = zero(space)
    for mode, coefficient in enumerate(coefficients):
        if coefficient != 0:
            op = op + complex(coefficient) * annihilation(space, mode)
    return op


class QuantumState:
    """Pure state vector (1-d) or density matrix (2-d) on a FockSpace."""

    __slots__ = ('space', 'data')

    def __init__(self, space, data):
        data = np.array(data, dtype=np.complex128)
        if data.ndim == 1:
            expected = (space.dim,)
        elif data.ndim == 2:
            expected = (space.dim, space.dim)
        else:
            raise ValueError(f'State data must be a vector or a matrix, got {data.ndim} dimensions')
        if data.shape != expected:
            raise ValueError(f'State shape {data.shape} does not match space dimension {space.dim}')
        self.space = space
        self.data = data

    def __repr__(self):
        return f'QuantumState(kind={self.kind}, n_modes={self.space.n_modes}, cutoff={self.space.cutoff})'

    @property
    def kind(self):
        return 'pure' if self.data.ndim == 1 else 'mixed'

    def norm(self):
        if self.kind == 'pure':
            return float(np.linalg.norm(self.data))
        return float(np.real(np.trace(self.data)))

    def trace(self):
        if self.kind == 'pure':
            return float(np.vdot(self.data, self.data).real)
        return complex(np.trace(self.data))

    def to_density_matrix(self):
        if self.kind == 'mixed':
            return self
        return QuantumState(self.space, np.outer(self.data, self.data.conj()))

    def normalized(self):
        if self.kind == 'pure':
            return QuantumState(self.space, self.data / np.linalg.norm(self.data))
        return QuantumState(self.space, self.data / np.trace(self.data))

    def populations(self):
        """Diagonal of the density matrix in the Fock basis."""
        if self.kind == 'pure':
            return np.abs(self.data) ** 2
        return np.real(np.diag(self.data))

    def invariant_violations(self, tolerance=DEFAULT_TOLERANCE):
        """List the state invariants that do not hold within ``tolerance`` (empty list if valid)."""
        problems = []
        if self.kind == 'pure':
            if abs(self.norm() - 1) >= tolerance:
                problems.append(f'norm {self.norm():.3e} differs from 1')
            return problems
        rho = self.data
        hermiticity = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
        if hermiticity >= tolerance:
            problems.append(f'not Hermitian (max deviation {hermiticity:.3e})')
        if abs(np.trace(rho) - 1) >= tolerance:
            problems.append(f'trace {np.trace(rho):.6g} differs from 1')
        min_eig = np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)))
        if min_eig < -tolerance:
            problems.append(f'negative eigenvalue {min_eig:.3e}')
        return problems

    def validate(self, tolerance=DEFAULT_TOLERANCE):
        problems = self.invariant_violations(tolerance)
        if problems:
            raise DataError('Invalid quantum state: ' + '; '.join(problems))
        return self


def fock_state(space, *occupations):
    vector = np.zeros(space.dim, dtype=np.complex128)
    vector[space.index(*occupations)] = 1
    return QuantumState(space, vector)


def vacuum(space):
    return fock_state(space, *([0] * space.n_modes))


def coherent_amplitudes(alpha, local_dim):
    """Poisson amplitudes e^{-|alpha|^2/2} alpha^n / sqrt(n!) for n < local_dim (not renormalised)."""
    amplitudes = np.zeros(local_dim, dtype=np.complex128)
    amplitudes[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, local_dim):
        amplitudes[n] = amplitudes[n - 1] * alpha / np.sqrt(n)
    return amplitudes


def coherent_state(space, *alphas, normalize=True):
    """Product coherent state with one amplitude per mode, built from explicit Poisson amplitudes.

    The truncated vector is renormalised unless ``normalize=False``.
    """
    if len(alphas) != space.n_modes:
        raise ValueError(f'Expected {space.n_modes} amplitudes, got {len(alphas)}')
    vector = coherent_amplitudes(alphas[0], space.local_dim)
    for alpha in alphas[1:]:
        vector = np.kron(vector, coherent_amplitudes(alpha, space.local_dim))
    if normalize:
        vector = vector / np.linalg.norm(vector)
    return QuantumState(space, vector)


def expectation(op, state, tolerance=DEFAULT_TOLERANCE):
    """Expectation value <psi|op|psi> (pure) or trace(op rho) (mixed), as a complex number."""
    if op.space != state.space:
        raise ValueError(f'Operator space {op.space} does not match state space {state.space}')
    if state.kind == 'pure':
        return complex(np.vdot(state.data, op.matrix @ state.data))
    trace = np.trace(state.data)
    if abs(trace - 1) > tolerance:
        logger.warning(f'Density matrix trace is {trace:.6g}, expectation values are not normalised')
    return complex(np.trace(op.matrix @ state.data))


def anti_hermitian_part(op):
    return 0.5 * (op - adjoint(op))


def max_abs(op):
    """Largest absolute matrix element (0 for the zero operator)."""
    return float(np.max(np.abs(op.matrix.data))) if op.matrix.nnz else 0.0
