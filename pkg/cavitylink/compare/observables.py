"""Measurable quantities: mode populations, emission rates per channel and the decoupling figure of merit."""
import logging
from collections import namedtuple

import numpy as np
import pandas as pd

from cavitylink.simulate import make_frame, build_local, steady_state, recommend_model_cutoff
from cavitylink.simulate.rate_equations import steady_moments
from cavitylink.utils import DataError, DomainError, adjoint, expectation, apply_rows
from cavitylink.utils.cutoff_utils import DEFAULT_TAIL

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-8

Decoupling = namedtuple('Decoupling', ['ratio', 'flag'])
CalibrationScan = namedtuple('CalibrationScan', ['table', 'argmin', 'argmax', 'predicted_min', 'predicted_max'])


class EmissionReport:
    """Per-channel emission rates and mode populations of one state.

    :ivar rates: dict jump label -> <R_x^dag R_x>
    :ivar n_a, n_b: common-mode populations (n_b is None for single-mode models)
    :ivar n_1, n_2: local-mode populations (None for single-mode models)
    """

    def __init__(self, rates, n_a, n_b=None, n_1=None, n_2=None):
        self.rates = rates
        self.n_a = n_a
        self.n_b = n_b
        self.n_1 = n_1
        self.n_2 = n_2

    def __repr__(self):
        rates = ', '.join(f'I_{label}={rate:.6g}' for label, rate in self.rates.items())
        return f'EmissionReport({rates}, I={self.total:.6g}, n_a={self.n_a}, n_b={self.n_b})'

    @property
    def total(self):
        return sum(self.rates.values())

    @property
    def I_1(self):
        return self.rates.get('1', 0.0)

    @property
    def I_2(self):
        return self.rates.get('2', 0.0)

    @property
    def I_m(self):
        return self.rates.get('m', 0.0)

    def as_row(self):
        """Flat dict for tables: n_a, n_b, n_1, n_2, I_<label>..., I."""
        row = {'n_a': self.n_a, 'n_b': self.n_b, 'n_1': self.n_1, 'n_2': self.n_2}
        row.update({f'I_{label}': rate for label, rate in self.rates.items()})
        row['I'] = self.total
        return row


def _clip(value, name, tolerance):
    if value < -tolerance:
        raise DataError(f'{name} = {value:.3e} is negative beyond tolerance {tolerance:.0e}')
    return max(float(value), 0.0)


def correlation_matrix(state, model):
    """P_jk = <c_j^dag c_k> over the modes of ``model``."""
    modes = model.modes
    return np.array([[expectation(adjoint(cj) @ ck, state) for ck in modes] for cj in modes])


def first_moments(state, model):
    return np.array([expectation(mode, state) for mode in model.modes])


def emission_report(state, model, frame=None, tolerance=DEFAULT_TOLERANCE):
    """Emission rates I_x = <R_x^dag R_x> and populations of ``state``.

    :param state: QuantumState on ``model.space``
    :param model: OpenSystemModel
    :param frame: CommonModeFrame of the model's parameters (built from ``model.params`` if omitted)
    :return: EmissionReport
    """
    if state.space != model.space:
        raise ValueError(f'State space {state.space} does not match model space {model.space}')
    if model.representation == 'single':
        if frame is not None:
            raise ValueError('A single cavity model has no common-mode frame')
    else:
        frame = make_frame(model.params) if frame is None else frame
        if frame.params != model.params:
            raise ValueError('Frame and model were built from different parameters')

    rates = {label: _clip(np.real(expectation(adjoint(jump) @ jump, state)), f'I_{label}', tolerance)
             for label, jump in model.jumps}
    correlations = correlation_matrix(state, model)
    if model.space.n_modes == 1:
        return EmissionReport(rates, _clip(np.real(correlations[0, 0]), 'n_a', tolerance))

    if model.representation == 'local':
        local, common = correlations, frame.correlations_to_common(correlations)
    else:
        local, common = frame.correlations_to_local(correlations), correlations
    populations = {name: _clip(np.real(value), name, tolerance) for name, value in
                   (('n_a', common[0, 0]), ('n_b', common[1, 1]), ('n_1', local[0, 0]), ('n_2', local[1, 1]))}
    return EmissionReport(rates, **populations)


def decoupling_ratio(report, tolerance=DEFAULT_TOLERANCE):
    """n_b / n_a of a report.

    :return: Decoupling(ratio, flag); ratio is inf when only c_b is populated and 0 when both are empty,
        both cases carry a flag
    """
    if report.n_b is None:
        raise ValueError('Decoupling ratio needs a two-mode report')
    n_a = _clip(report.n_a, 'n_a', tolerance)
    n_b = _clip(report.n_b, 'n_b', tolerance)
    if n_a <= tolerance:
        if n_b <= tolerance:
            logger.warning('Both modes are empty, decoupling ratio set to 0')
            return Decoupling(0.0, 'both modes empty')
        logger.warning('n_a vanishes while n_b > 0: sole driving of the c_b mode')
        return Decoupling(np.inf, 'sole driving of the c_b mode')
    return Decoupling(n_b / n_a, None)


def injection_rate(state, model):
    """Photon injection rate by the lasers, J = -sum_j Im(omega_j <c_j>). Equals the total emission at steady state."""
    return float(-np.sum(np.imag(model.drive_vector * first_moments(state, model))))


def _fiber_emission(params, route, cutoff, tail):
    frame = make_frame(params)
    if route == 'rates':
        _, correlations = steady_moments(frame.drive_vector, frame.damping_matrix)
        n_a, n_b = np.real(correlations[0, 0]), np.real(correlations[1, 1])
        return params.kappa_m * n_b, n_a, n_b
    if route == 'master':
        n = cutoff if cutoff is not None else recommend_model_cutoff(params, tail=tail)
        model = build_local(params, n)
        report = emission_report(steady_state(model), model, frame)
        return report.I_m, report.n_a, report.n_b
    raise ValueError(f'Unknown calibration route {route}; expected rates or master')


def calibration_scan(params_template, omega_ratio_grid, route='rates', cutoff=None, tail=DEFAULT_TAIL, workers=1):
    """Steady fiber emission I_m over drive ratios omega1/omega2 at fixed total drive power.

    The minimum of I_m sits at omega1/omega2 = -conj(xi2)/conj(xi1) (only c_a driven), the maximum at
    omega1/omega2 = xi1/xi2 (only c_b driven).

    :param params_template: SystemParams providing rates, coupling coefficients and |omega1|^2 + |omega2|^2
    :param omega_ratio_grid: complex drive ratios
    :param route: ``rates`` (exact moment equations) or ``master`` (Liouvillian steady state)
    :return: CalibrationScan(table, argmin, argmax, predicted_min, predicted_max)
    """
    ratios = np.atleast_1d(np.asarray(omega_ratio_grid, dtype=np.complex128))
    if ratios.size == 0:
        raise ValueError('omega_ratio_grid is empty')
    if params_template.kappa_m <= 0:
        raise DomainError('Calibration scan needs kappa_m > 0')

    grid = pd.DataFrame({'ratio_re': ratios.real, 'ratio_im': ratios.imag})

    def evaluate(row):
        params = params_template.with_drive_ratio(complex(row['ratio_re'], row['ratio_im']))
        i_m, n_a, n_b = _fiber_emission(params, route, cutoff, tail)
        return pd.Series({'I_m': i_m, 'n_a': n_a, 'n_b': n_b})

    values = apply_rows(grid, evaluate, workers)
    table = pd.concat([grid, values], axis=1)
    table.insert(2, 'ratio_abs', np.abs(ratios))
    table.insert(3, 'ratio_phase', np.angle(ratios))
    table['route'] = route

    frame = make_frame(params_template)
    predicted_min = -np.conj(frame.xi2) / np.conj(frame.xi1) if frame.xi1 != 0 else np.inf
    predicted_max = frame.xi1 / frame.xi2 if frame.xi2 != 0 else np.inf
    argmin = ratios[int(table['I_m'].values.argmin())]
    argmax = ratios[int(table['I_m'].values.argmax())]
    logger.info(f'Calibration scan: I_m minimal at {argmin:.4g} (predicted {predicted_min:.4g}), '
                f'maximal at {argmax:.4g} (predicted {predicted_max:.4g})')
    return CalibrationScan(table, complex(argmin), complex(argmax), complex(predicted_min), complex(predicted_max))


def estimate_coupling_ratio(scan_or_ratio):
    """xi1/xi2 from the drive ratio minimising fiber emission, r_min = -conj(xi2)/conj(xi1).

    Only the ratio is observable; the overall scale and phase of (xi1, xi2) drop out.

    :param scan_or_ratio: CalibrationScan or the complex argmin ratio
    :return: complex xi1/xi2
    """
    r_min = scan_or_ratio.argmin if isinstance(scan_or_ratio, CalibrationScan) else complex(scan_or_ratio)
    if r_min == 0:
        raise DomainError('A vanishing minimising ratio corresponds to xi2 = 0; xi1/xi2 is undefined')
    return -1 / np.conj(r_min)


def phase_grid(n_points=64, modulus=1.0):
    """Drive ratios modulus * e^{i theta} with theta equally spaced over (-pi, pi]."""
    if n_points < 1:
        raise ValueError('phase grid needs at least one point')
    thetas = -np.pi + 2 * np.pi * np.arange(1, n_points + 1) / n_points
    return modulus * np.exp(1j * thetas)
