"""Expectation-value rate equations for the driven cavities.

The models are linear, so the first and second moments obey a closed set of linear equations and
the rate equations are exact. Two parametrisations are provided:

- the seven real variables (n_a, n_b, k_a, k_b, m, l_a, l_b), where the k and l variables are
  normalised by |omega_a| and |omega_b| and only exist while both are nonzero;
- the quadrature basis: complex first moments <c_a>, <c_b> and the correlations <c_j^dag c_k>,
  which is always defined and is used automatically when a normaliser vanishes.
"""
import logging
from collections import namedtuple

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from cavitylink.utils import DomainError, SolverError

logger = logging.getLogger(__name__)

RATE_FIELDS = ['n_a', 'n_b', 'k_a', 'k_b', 'm', 'l_a', 'l_b']
MOMENT_FIELDS = ['n_a', 'n_b', 're_alpha_a', 'im_alpha_a', 're_alpha_b', 'im_alpha_b', 're_n_ba', 'im_n_ba']

RateState = namedtuple('RateState', RATE_FIELDS)
MomentState = namedtuple('MomentState', MOMENT_FIELDS)
SingleRateState = namedtuple('SingleRateState', ['n', 'k'])


class SymmetricSteady(namedtuple('SymmetricSteady', ['n_a', 'n_b', 'ratio'])):
    """Closed-form steady populations for equal drives and equal leakage rates."""

    @property
    def flag(self):
        return 'sole driving of the c_b mode' if np.isinf(self.ratio) else None


def _unit_phase(value):
    """value/|value|, taken as 1 when value = 0."""
    return value / abs(value) if value != 0 else 1.0


def _check_normalisers(frame):
    for name, value in (('omega_a', frame.omega_a), ('omega_b', frame.omega_b)):
        if abs(value) == 0:
            raise DomainError(f'|{name}| = 0: the k/l variables are undefined, use the quadrature basis '
                              f'(moment_rhs / moment_steady_state)')


def rate_rhs(state, frame, params=None):
    """Time derivative of the seven rate variables.

    :param state: RateState (or a length-7 sequence in RATE_FIELDS order)
    :param frame: CommonModeFrame
    :param params: SystemParams, defaults to ``frame.params``
    :return: RateState holding the derivatives
    """
    _check_normalisers(frame)
    params = frame.params if params is None else params
    n_a, n_b, k_a, k_b, m, l_a, l_b = state
    abs_a, abs_b = abs(frame.omega_a), abs(frame.omega_b)
    kappa_a = frame.kappa_a
    kappa_bm = frame.kappa_b + params.kappa_m
    dk = frame.delta_kappa
    g2 = abs(frame.g) ** 2
    cross_drive = np.real(frame.g * frame.omega_b * np.conj(frame.omega_a))

    return RateState(
        n_a=abs_a / 2 * k_a - dk / 2 * m - kappa_a * n_a,
        n_b=abs_b / 2 * k_b - dk / 2 * m - kappa_bm * n_b,
        k_a=abs_a - dk / 2 * l_b - kappa_a / 2 * k_a,
        k_b=abs_b - dk / 2 * l_a - kappa_bm / 2 * k_b,
        m=abs_b / 2 * l_a + abs_a / 2 * l_b - g2 * dk * (n_a + n_b)
          - (params.kappa1 + params.kappa2 + params.kappa_m) / 2 * m,
        l_a=cross_drive / abs_b - g2 * dk / 2 * k_b - kappa_a / 2 * l_a,
        l_b=cross_drive / abs_a - g2 * dk / 2 * k_a - kappa_bm / 2 * l_b,
    )


def _affine_system(rhs, size):
    """Return (A, b) with rhs(x) = A x + b for an affine right-hand side."""
    b = np.asarray(rhs(np.zeros(size)), dtype=float)
    columns = [np.asarray(rhs(unit), dtype=float) - b for unit in np.eye(size)]
    return np.column_stack(columns), b


def _check_damping(frame):
    if frame.kappa_a <= 0:
        raise DomainError('kappa_a vanishes: the c_a mode is undamped and has no steady state')
    if frame.kappa_b + frame.params.kappa_m <= 0:
        raise DomainError('kappa_b + kappa_m vanishes: the c_b mode is undamped and has no steady state')


def rate_steady_state(frame, params=None):
    """Steady state of the rate equations, solved as a linear system.

    When |omega_a| or |omega_b| vanishes the quadrature-basis steady state is converted instead,
    with omega/|omega| taken as 1 for the vanishing drive.

    :return: RateState
    """
    _check_damping(frame)
    if abs(frame.omega_a) == 0 or abs(frame.omega_b) == 0:
        logger.debug('Degenerate normaliser, steady rate variables taken from the quadrature basis')
        return rate_state_from_moments(moment_steady_state(frame), frame)
    matrix, offset = _affine_system(lambda x: rate_rhs(x, frame, params), len(RATE_FIELDS))
    try:
        solution = np.linalg.solve(matrix, -offset)
    except np.linalg.LinAlgError:
        raise DomainError(f'Rate equations are singular (kappa_a = {frame.kappa_a:.3g}, '
                          f'kappa_b + kappa_m = {frame.kappa_b + frame.params.kappa_m:.3g})')
    return RateState(*solution)


def _split_moments(state):
    s = MomentState(*state)
    alpha = np.array([s.re_alpha_a + 1j * s.im_alpha_a, s.re_alpha_b + 1j * s.im_alpha_b])
    n_ba = s.re_n_ba + 1j * s.im_n_ba
    correlations = np.array([[s.n_a, np.conj(n_ba)], [n_ba, s.n_b]], dtype=np.complex128)
    return alpha, correlations


def _join_moments(alpha, correlations):
    return MomentState(n_a=float(np.real(correlations[0, 0])), n_b=float(np.real(correlations[1, 1])),
                       re_alpha_a=float(alpha[0].real), im_alpha_a=float(alpha[0].imag),
                       re_alpha_b=float(alpha[1].real), im_alpha_b=float(alpha[1].imag),
                       re_n_ba=float(correlations[1, 0].real), im_n_ba=float(correlations[1, 0].imag))


def moment_derivatives(alpha, correlations, drive, damping):
    """Linear moment equations of a quadratic model.

    d<c_k>/dt = -(i/2) conj(omega_k) - 1/2 sum_l G_kl <c_l>
    dP/dt = (i/2)(omega alpha^T - conj(alpha) omega^H) - 1/2 (P G^T + conj(G) P), with P_jk = <c_j^dag c_k>

    :param alpha: complex first moments, one per mode
    :param correlations: matrix P
    :param drive: complex Rabi frequencies
    :param damping: matrix G from sum_x R_x^dag R_x = sum_jk G_jk c_j^dag c_k
    :return: (d alpha/dt, dP/dt)
    """
    alpha, correlations = np.asarray(alpha), np.asarray(correlations)
    drive, damping = np.asarray(drive), np.asarray(damping)
    d_alpha = -0.5j * drive.conj() - 0.5 * damping @ alpha
    d_corr = 0.5j * (np.outer(drive, alpha) - np.outer(alpha.conj(), drive.conj())) \
        - 0.5 * (correlations @ damping.T + damping.conj() @ correlations)
    return d_alpha, d_corr


def moment_rhs(state, frame):
    """Quadrature-basis derivative in the common-mode frame.

    :param state: MomentState (or a length-8 sequence in MOMENT_FIELDS order)
    :param frame: CommonModeFrame
    :return: MomentState holding the derivatives
    """
    alpha, correlations = _split_moments(state)
    d_alpha, d_corr = moment_derivatives(alpha, correlations, frame.drive_vector, frame.damping_matrix)
    return _join_moments(d_alpha, d_corr)


def steady_moments(drive, damping):
    """Steady first moments and correlations; the steady state is a product coherent state."""
    try:
        alpha = -1j * np.linalg.solve(damping, np.conj(drive))
    except np.linalg.LinAlgError:
        raise DomainError('Damping matrix is singular, the moment equations have no unique steady state')
    return alpha, np.outer(alpha.conj(), alpha)


def moment_steady_state(frame):
    _check_damping(frame)
    return _join_moments(*steady_moments(frame.drive_vector, frame.damping_matrix))


def rate_state_from_moments(state, frame):
    """Seven-variable view of a quadrature-basis state (omega/|omega| = 1 when a drive vanishes)."""
    alpha, correlations = _split_moments(state)
    u_a, u_b = _unit_phase(frame.omega_a), _unit_phase(frame.omega_b)
    g = frame.g
    return RateState(
        n_a=float(np.real(correlations[0, 0])),
        n_b=float(np.real(correlations[1, 1])),
        k_a=float(-2 * np.imag(u_a * alpha[0])),
        k_b=float(-2 * np.imag(u_b * alpha[1])),
        m=float(2 * np.real(g * correlations[1, 0])),
        l_a=float(-2 * np.imag(g * u_b * alpha[0])),
        l_b=float(-2 * np.imag(np.conj(g) * u_a * alpha[1])),
    )


def single_rate_rhs(state, omega, kappa):
    """n' = |omega| k / 2 - kappa n, k' = |omega| - kappa k / 2 for one driven cavity."""
    n, k = state
    return SingleRateState(n=abs(omega) / 2 * k - kappa * n, k=abs(omega) - kappa / 2 * k)


def single_rate_steady(omega, kappa):
    if kappa <= 0:
        raise DomainError('Single cavity steady state requires kappa > 0')
    return SingleRateState(n=abs(omega) ** 2 / kappa ** 2, k=2 * abs(omega) / kappa)


def symmetric_steady(omega, kappa, kappa_m, phi):
    """Closed-form steady populations for omega1 = omega2 = omega, kappa1 = kappa2 = kappa, xi2 = e^{i phi} xi1.

    :return: SymmetricSteady(n_a, n_b, ratio); ratio is inf (flagged) when cos(phi) = 1
    """
    if kappa <= 0:
        raise DomainError(f'kappa must be positive, got {kappa}')
    if kappa + kappa_m <= 0:
        raise DomainError(f'kappa + kappa_m must be positive, got {kappa + kappa_m}')
    cos_phi = np.cos(phi)
    intensity = abs(omega) ** 2
    n_a = (1 - cos_phi) * intensity / kappa ** 2
    n_b = (1 + cos_phi) * intensity / (kappa + kappa_m) ** 2
    if 1 - cos_phi <= 1e-15:
        logger.warning('cos(phi) = 1: only the c_b mode is driven, decoupling ratio is infinite')
        return SymmetricSteady(0.0, float(n_b), np.inf)
    ratio = (1 + cos_phi) / (1 - cos_phi) * kappa ** 2 / (kappa + kappa_m) ** 2
    return SymmetricSteady(float(n_a), float(n_b), float(ratio))


def _integrate(rhs, y0, times, rtol, atol, max_step):
    solution = solve_ivp(lambda t, y: np.asarray(rhs(y), dtype=float), (times[0], times[-1]), y0,
                         method='RK45', t_eval=times, rtol=rtol, atol=atol, max_step=max_step)
    if solution.status < 0:
        raise SolverError(f'Rate equation integration failed: {solution.message}')
    return solution.y.T


def evolve_rates(frame, times, initial=None, basis='auto', rtol=1e-8, atol=1e-10):
    """Integrate the rate equations and return a table of the seven variables over time.

    :param frame: CommonModeFrame
    :param times: increasing sample times, starting at the initial time
    :param initial: RateState or MomentState to start from (default: empty cavities)
    :param basis: ``rates`` (seven variables), ``moments`` (quadrature basis) or ``auto``
    :return: pandas.DataFrame with column ``t`` followed by RATE_FIELDS
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0):
        raise ValueError('times must be a strictly increasing array with at least two entries')
    if basis == 'auto':
        degenerate = abs(frame.omega_a) == 0 or abs(frame.omega_b) == 0
        basis = 'moments' if degenerate or isinstance(initial, MomentState) else 'rates'
    rate_scale = max(np.max(np.abs(frame.damping_matrix)), abs(frame.omega_a), abs(frame.omega_b), 1e-12)
    max_step = 0.05 / rate_scale

    if basis == 'rates':
        y0 = np.zeros(len(RATE_FIELDS)) if initial is None else np.asarray(initial, dtype=float)
        rows = _integrate(lambda y: rate_rhs(y, frame), y0, times, rtol, atol, max_step)
    elif basis == 'moments':
        y0 = np.zeros(len(MOMENT_FIELDS)) if initial is None else np.asarray(initial, dtype=float)
        moments = _integrate(lambda y: moment_rhs(y, frame), y0, times, rtol, atol, max_step)
        rows = [rate_state_from_moments(row, frame) for row in moments]
    else:
        raise ValueError(f'Unknown basis {basis}; expected rates, moments or auto')
    table = pd.DataFrame(np.asarray(rows, dtype=float), columns=RATE_FIELDS)
    table.insert(0, 't', times)
    return table
