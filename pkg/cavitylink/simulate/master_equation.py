"""Master-equation dynamics and steady states on the vectorised density matrix.

The density matrix is vectorised row-major, vec(rho)[i * dim + j] = rho[i, j], so that
vec(A rho B) = kron(A, B^T) vec(rho).
"""
import logging
import warnings

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import spsolve, MatrixRankWarning

from cavitylink.utils import DomainError, SolverError, QuantumState, expectation, truncation_leakage, \
    vacuum
from cavitylink.utils.cutoff_utils import LEAKAGE_WARNING_LEVEL

logger = logging.getLogger(__name__)


def liouvillian(model):
    """Sparse generator L with d vec(rho)/dt = L vec(rho).

    rho' = -i (H_cond rho - rho H_cond^dag) + sum_x R_x rho R_x^dag
    """
    h = model.h_cond.matrix
    eye = sp.identity(model.space.dim, dtype=np.complex128, format='csr')
    generator = -1j * (sp.kron(h, eye, format='csr') - sp.kron(eye, h.conj(), format='csr'))
    for _, jump in model.active_jumps():
        generator = generator + sp.kron(jump.matrix, jump.matrix.conj(), format='csr')
    generator = generator.tocsr()
    generator.eliminate_zeros()
    return generator


def _vec(rho):
    return np.ascontiguousarray(rho).reshape(-1)


def _unvec(vector, dim):
    rho = vector.reshape(dim, dim)
    return 0.5 * (rho + rho.conj().T)


def master_rhs(generator, dim):
    """Right-hand side f(t, y) = vec of the Hermitian part of unvec(L y), for solve_ivp.

    L maps Hermitian matrices to Hermitian matrices, so on a Hermitian state this equals L y; the
    projection keeps every intermediate RK stage Hermitian as well.
    """
    def rhs(t, vector):
        return _vec(_unvec(generator @ vector, dim))
    return rhs


class EvolutionResult:
    """Sampled density matrices with solver metadata.

    :ivar times: strictly increasing sample times
    :ivar states: QuantumState (mixed) per sample time
    :ivar metadata: dict with rtol, atol, max_step, nfev, trace_error, min_eigenvalue, max_leakage
    :ivar truncation_warning: True if any sample has more than 1e-6 population on a cutoff level
    """

    def __init__(self, times, states, metadata, truncation_warning=False):
        self.times = np.asarray(times)
        self.states = states
        self.metadata = metadata
        self.truncation_warning = truncation_warning

    def __len__(self):
        return len(self.times)

    @property
    def final_state(self):
        return self.states[-1]

    def expectations(self, operators):
        """Table of expectation values over time.

        :param operators: dict of column name -> Operator
        :return: pandas.DataFrame with a ``t`` column and one complex column per operator
        """
        table = pd.DataFrame({'t': self.times})
        for name, op in operators.items():
            table[name] = [expectation(op, state) for state in self.states]
        return table


def _default_max_step(model):
    return 0.05 / model.rate_scale


def evolve_master(model, rho0, t_final, dt_max=None, n_samples=101, times=None, rtol=1e-8, atol=1e-10,
                  check_positivity=True):
    """Integrate the master equation of ``model`` from ``rho0``.

    Integration runs with the adaptive RK45 scheme between consecutive sample times. The right-hand
    side is symmetrized at every evaluation (see master_rhs), so each step keeps rho Hermitian up to
    round-off, and each sample is made exactly Hermitian before continuing.

    :param model: OpenSystemModel
    :param rho0: QuantumState (a pure state is converted to a density matrix)
    :param t_final: end time, > 0
    :param dt_max: largest integrator step (default 0.05 / largest model rate)
    :param n_samples: number of equally spaced samples in [0, t_final] when ``times`` is not given
    :param times: explicit strictly increasing sample times starting at 0
    :return: EvolutionResult
    """
    if rho0.space != model.space:
        raise ValueError(f'Initial state space {rho0.space} does not match model space {model.space}')
    rho0 = rho0.to_density_matrix()
    if abs(rho0.trace() - 1) > 1e-8:
        raise ValueError(f'Initial density matrix has trace {rho0.trace():.6g}, expected 1')
    if times is None:
        if t_final <= 0:
            raise ValueError(f't_final must be positive, got {t_final}')
        times = np.linspace(0, t_final, n_samples)
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 1 or np.any(np.diff(times) <= 0):
        raise ValueError('Sample times must be strictly increasing')
    max_step = _default_max_step(model) if dt_max is None else dt_max

    dim = model.space.dim
    generator = liouvillian(model)
    trace_indices = np.arange(dim) * (dim + 1)

    states = [QuantumState(model.space, _unvec(_vec(rho0.data), dim))]
    vector = _vec(states[0].data)
    rhs = master_rhs(generator, dim)
    nfev = 0
    for t_start, t_stop in zip(times[:-1], times[1:]):
        solution = solve_ivp(rhs, (t_start, t_stop), vector, method='RK45',
                             t_eval=[t_stop], rtol=rtol, atol=atol, max_step=max_step)
        if solution.status < 0:
            raise SolverError(f'Master equation integration failed between t = {t_start:.6g} and {t_stop:.6g}: '
                              f'{solution.message}')
        nfev += solution.nfev
        rho = _unvec(solution.y[:, -1], dim)
        states.append(QuantumState(model.space, rho))
        vector = _vec(rho)

    trace_error = max(abs(np.sum(_vec(state.data)[trace_indices]) - 1) for state in states)
    min_eigenvalue = min(float(np.min(np.linalg.eigvalsh(state.data)))
                         for state in states) if check_positivity else None
    max_leakage = max(truncation_leakage(state) for state in states)
    truncation_warning = max_leakage > LEAKAGE_WARNING_LEVEL
    if truncation_warning:
        logger.warning(f'Truncation leakage {max_leakage:.2e} at cutoff {model.space.cutoff} exceeds '
                       f'{LEAKAGE_WARNING_LEVEL:.0e}; increase the cutoff')
    logger.debug(f'evolve_master: {len(times)} samples, {nfev} RHS evaluations, trace error {trace_error:.2e}')
    metadata = {'rtol': rtol, 'atol': atol, 'max_step': max_step, 'nfev': nfev, 'trace_error': float(trace_error),
                'min_eigenvalue': min_eigenvalue, 'max_leakage': max_leakage}
    return EvolutionResult(times, states, metadata, truncation_warning)


def _check_unique_steady_state(model):
    if not model.active_jumps():
        raise DomainError(f'All jump operators of the {model.representation} model vanish (zero-rate channels: '
                          f'{", ".join(model.jump_labels) or "none defined"}); the steady state is not unique')
    damping = model.damping_matrix
    eigenvalues = np.linalg.eigvalsh(damping)
    if eigenvalues[0] <= 1e-14 * max(eigenvalues[-1], 1.0):
        zero_channels = [label for label, jump in model.jumps if jump.is_zero()]
        raise DomainError(f'Damping matrix of the {model.representation} model is singular, some mode is undamped '
                          f'(zero-rate channels: {", ".join(zero_channels) or "none, rates cancel"})')


def _relaxation_time(model):
    return 1 / float(np.min(np.linalg.eigvalsh(model.damping_matrix)))


def steady_state(model, tolerance=1e-10):
    """Stationary density matrix of ``model``.

    Solves L vec(rho) = 0 with the first (redundant) equation replaced by the trace condition. If the
    sparse solve fails the state is obtained by long-time integration instead.

    :param model: OpenSystemModel with at least one nonzero, damping jump operator
    :param tolerance: residual norm above which a warning is logged
    :return: QuantumState (mixed)
    """
    _check_unique_steady_state(model)
    dim = model.space.dim
    generator = liouvillian(model)
    weight = float(np.max(np.abs(generator.data))) if generator.nnz else 1.0

    trace_indices = np.arange(dim) * (dim + 1)
    trace_row = sp.csr_matrix((np.full(dim, weight, dtype=np.complex128), (np.zeros(dim, dtype=int), trace_indices)),
                              shape=(1, dim * dim))
    system = sp.vstack([trace_row, generator[1:]], format='csc')
    rhs = np.zeros(dim * dim, dtype=np.complex128)
    rhs[0] = weight

    with warnings.catch_warnings():
        warnings.simplefilter('error', MatrixRankWarning)
        try:
            vector = spsolve(system, rhs)
        except (RuntimeError, MatrixRankWarning) as error:
            logger.warning(f'Sparse steady-state solve failed ({error}); falling back to long-time integration')
            vector = None
    if vector is None or not np.all(np.isfinite(vector)):
        vector = _long_time_state(model)

    rho = _unvec(vector, dim)
    rho = rho / np.trace(rho)
    residual = float(np.linalg.norm(generator @ _vec(rho)))
    if residual > tolerance:
        logger.warning(f'Steady-state residual {residual:.2e} exceeds {tolerance:.0e}')
    state = QuantumState(model.space, rho)
    leakage = truncation_leakage(state)
    if leakage > LEAKAGE_WARNING_LEVEL:
        logger.warning(f'Steady state has truncation leakage {leakage:.2e} at cutoff {model.space.cutoff}')
    logger.debug(f'steady_state: dim {dim}, residual {residual:.2e}, leakage {leakage:.2e}')
    return state


def _long_time_state(model):
    t_final = 50 * _relaxation_time(model)
    result = evolve_master(model, vacuum(model.space), t_final, n_samples=2, check_positivity=False)
    return _vec(result.final_state.data)
