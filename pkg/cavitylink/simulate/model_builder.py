"""Open-system models of one laser-driven cavity and of two cavities coupled through a lossy fiber.

Rates and Rabi frequencies are in units of a reference rate kappa_0 with hbar = 1. All models are
quadratic: drives are linear in the mode operators and every reset operator is a linear combination
of annihilation operators, so a model is fully described by a drive vector and a list of jump
coefficient vectors. The sparse operators are assembled from those.
"""
import logging
from collections import namedtuple
from dataclasses import dataclass, replace

import numpy as np

from cavitylink.utils import DomainError, FockSpace, Operator, annihilation, adjoint, combine_modes, zero, \
    anti_hermitian_part, max_abs, recommend_cutoff
from cavitylink.utils.cutoff_utils import DEFAULT_TAIL

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 2.998e8  # m/s
REPRESENTATIONS = ('single', 'local', 'common', 'effective')
MODE_LABELS = {'single': ('c',), 'local': ('c1', 'c2'), 'common': ('ca', 'cb'), 'effective': ('ca',)}

RegimeCheck = namedtuple('RegimeCheck', ['name', 'passed', 'ratio', 'description'])


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the two-cavity setup.

    :param kappa1: spontaneous leakage rate of cavity 1
    :param kappa2: spontaneous leakage rate of cavity 2
    :param kappa_m: decay rate of the fiber-coupled common mode
    :param omega1: complex Rabi frequency of the laser driving cavity 1
    :param omega2: complex Rabi frequency of the laser driving cavity 2
    :param xi1: complex fiber coupling coefficient of cavity 1
    :param xi2: complex fiber coupling coefficient of cavity 2
    :param omega_cav: cavity frequency, informational only (dynamics are in the rotating frame)
    """
    kappa1: float = 1.0
    kappa2: float = 1.0
    kappa_m: float = 10.0
    omega1: complex = 1.0
    omega2: complex = 1.0
    xi1: complex = 1.0
    xi2: complex = 1.0
    omega_cav: float = None

    def __post_init__(self):
        for name in ('kappa1', 'kappa2', 'kappa_m'):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f'{name}: rate must be non-negative and finite, got {value}')
        for name in ('omega1', 'omega2', 'xi1', 'xi2'):
            if not np.isfinite(complex(getattr(self, name))):
                raise ValueError(f'{name}: must be finite, got {getattr(self, name)}')
        if abs(self.xi1) ** 2 + abs(self.xi2) ** 2 == 0:
            raise ValueError('xi1 and xi2 cannot both be zero')
        if self.omega_cav is not None and self.omega_cav <= 0:
            raise ValueError(f'omega_cav: must be positive, got {self.omega_cav}')

    @classmethod
    def symmetric(cls, omega, kappa, kappa_m, phi):
        """Equal drives and equal leakage rates, with xi2 = e^{i phi} xi1 and xi1 = 1."""
        return cls(kappa1=kappa, kappa2=kappa, kappa_m=kappa_m, omega1=omega, omega2=omega,
                   xi1=1.0, xi2=complex(np.exp(1j * phi)))

    def with_phase(self, phi):
        """Copy with xi2 rotated so that arg(xi2) - arg(xi1) = phi, keeping |xi2|."""
        return replace(self, xi2=complex(abs(self.xi2) * np.exp(1j * (np.angle(self.xi1) + phi))))

    def with_drive_ratio(self, ratio):
        """Copy with omega1/omega2 = ratio at fixed |omega1|^2 + |omega2|^2."""
        power = abs(self.omega1) ** 2 + abs(self.omega2) ** 2
        omega2 = np.sqrt(power / (1 + abs(ratio) ** 2))
        return replace(self, omega1=complex(ratio * omega2), omega2=complex(omega2))


class CommonModeFrame:
    """Common-mode quantities derived from SystemParams.

    c_a = (xi2* c1 - xi1* c2)/xi is decoupled from the fiber, c_b = (xi1 c1 + xi2 c2)/xi couples to it.
    """

    def __init__(self, params):
        self.params = params
        self.xi1 = complex(params.xi1)
        self.xi2 = complex(params.xi2)

    def __repr__(self):
        return f'CommonModeFrame(xi={self.xi:.6g}, phi={self.phi:.6g}, omega_a={self.omega_a:.6g}, ' \
               f'omega_b={self.omega_b:.6g})'

    @property
    def xi(self):
        return float(np.sqrt(abs(self.xi1) ** 2 + abs(self.xi2) ** 2))

    @property
    def phi(self):
        """Relative phase arg(xi2) - arg(xi1) in (-pi, pi]."""
        phi = float(np.angle(self.xi2 * np.conj(self.xi1)))
        return phi + 2 * np.pi if phi <= -np.pi else phi

    @property
    def g(self):
        return self.xi1 * self.xi2 / self.xi ** 2

    @property
    def transform(self):
        """Unitary matrix M with (c_a, c_b) = M (c1, c2)."""
        return np.array([[np.conj(self.xi2), -np.conj(self.xi1)],
                         [self.xi1, self.xi2]]) / self.xi

    @property
    def omega_a(self):
        return (self.params.omega1 * self.xi2 - self.params.omega2 * self.xi1) / self.xi

    @property
    def omega_b(self):
        return (self.params.omega1 * np.conj(self.xi1) + self.params.omega2 * np.conj(self.xi2)) / self.xi

    @property
    def delta_kappa(self):
        return self.params.kappa1 - self.params.kappa2

    @property
    def kappa_a(self):
        return (self.params.kappa1 * abs(self.xi2) ** 2 + self.params.kappa2 * abs(self.xi1) ** 2) / self.xi ** 2

    @property
    def kappa_b(self):
        return (self.params.kappa1 * abs(self.xi1) ** 2 + self.params.kappa2 * abs(self.xi2) ** 2) / self.xi ** 2

    def _require_fiber_rate(self, quantity):
        if self.params.kappa_m <= 0:
            raise DomainError(f'{quantity} requires kappa_m > 0 (adiabatic elimination of c_b)')

    @property
    def omega_eff(self):
        self._require_fiber_rate('omega_eff')
        return self.omega_a - self.g * self.delta_kappa * self.omega_b / self.params.kappa_m

    @property
    def kappa_eff(self):
        self._require_fiber_rate('kappa_eff')
        return self.kappa_a - abs(self.g) ** 2 * self.delta_kappa ** 2 / self.params.kappa_m

    @property
    def ideal_emission_rate(self):
        """Steady emission rate |omega_eff|^2 / kappa_eff of the effective single mode."""
        kappa_eff = self.kappa_eff
        if kappa_eff <= 0:
            raise DomainError(f'kappa_eff = {kappa_eff:.6g} is not positive')
        return abs(self.omega_eff) ** 2 / kappa_eff

    @property
    def drive_vector(self):
        return np.array([self.omega_a, self.omega_b], dtype=np.complex128)

    @property
    def damping_matrix(self):
        """Matrix G with sum_x R_x^dag R_x = sum_jk G_jk c_j^dag c_k over (c_a, c_b)."""
        cross = self.delta_kappa * self.g
        return np.array([[self.kappa_a, np.conj(cross)],
                         [cross, self.kappa_b + self.params.kappa_m]], dtype=np.complex128)

    def to_common(self, first_moments):
        """Map local first moments (<c1>, <c2>) to (<c_a>, <c_b>)."""
        return self.transform @ np.asarray(first_moments)

    def to_local(self, first_moments):
        return self.transform.conj().T @ np.asarray(first_moments)

    def correlations_to_common(self, correlations):
        """Map the local matrix P_jk = <c_j^dag c_k> to the common-mode basis."""
        m = self.transform
        return m.conj() @ np.asarray(correlations) @ m.T

    def correlations_to_local(self, correlations):
        m = self.transform.conj().T
        return m.conj() @ np.asarray(correlations) @ m.T


def make_frame(params):
    """Build the CommonModeFrame of ``params``.

    :param params: SystemParams
    :return: CommonModeFrame
    """
    if not isinstance(params, SystemParams):
        raise ValueError(f'Expected SystemParams, got {type(params).__name__}')
    return CommonModeFrame(params)


class OpenSystemModel:
    """Conditional Hamiltonian and reset operators of a quadratic open system.

    :param space: FockSpace
    :param drive_vector: complex Rabi frequency per mode; the drive is sum_j (omega_j/2) c_j + h.c.
    :param jump_vectors: list of (label, coefficients) with R_x = sum_j coefficients[j] c_j
    :param representation: one of single, local, common, effective
    :param params: SystemParams for the two-cavity representations, None for a single cavity
    """

    def __init__(self, space, drive_vector, jump_vectors, representation, params=None):
        if representation not in REPRESENTATIONS:
            raise ValueError(f'Unknown representation {representation}; expected one of {REPRESENTATIONS}')
        self.space = space
        self.representation = representation
        self.params = params
        self.drive_vector = np.asarray(drive_vector, dtype=np.complex128)
        self.jump_vectors = [(label, np.asarray(coefficients, dtype=np.complex128))
                             for label, coefficients in jump_vectors]
        if self.drive_vector.shape != (space.n_modes,):
            raise ValueError(f'drive vector must have one entry per mode ({space.n_modes})')

        self.modes = [annihilation(space, mode) for mode in range(space.n_modes)]
        self.jumps = [(label, combine_modes(space, coefficients)) for label, coefficients in self.jump_vectors]
        self.h_drive = self._drive_operator()
        self.h_cond = self.h_drive + (-0.5j) * self.damping_operator()

    def __repr__(self):
        return f'OpenSystemModel(representation={self.representation}, n_modes={self.space.n_modes}, ' \
               f'cutoff={self.space.cutoff}, jumps={self.jump_labels})'

    def _drive_operator(self):
        drive = zero(self.space)
        for omega, mode in zip(self.drive_vector, self.modes):
            if omega != 0:
                drive = drive + mode * (omega / 2) + adjoint(mode) * (np.conj(omega) / 2)
        return drive

    @property
    def jump_labels(self):
        return [label for label, _ in self.jumps]

    @property
    def mode_labels(self):
        return MODE_LABELS[self.representation]

    @property
    def damping_matrix(self):
        """Matrix G_jk = sum_x conj(p_xj) p_xk, so that sum_x R_x^dag R_x = sum_jk G_jk c_j^dag c_k."""
        n = self.space.n_modes
        damping = np.zeros((n, n), dtype=np.complex128)
        for _, coefficients in self.jump_vectors:
            damping += np.outer(coefficients.conj(), coefficients)
        return damping

    def damping_operator(self):
        total = zero(self.space)
        for _, jump in self.jumps:
            total = total + adjoint(jump) @ jump
        return total

    @property
    def max_jump_rate(self):
        """Largest single-photon total decay rate: top eigenvalue of the damping matrix."""
        return float(np.max(np.linalg.eigvalsh(self.damping_matrix))) if self.jump_vectors else 0.0

    @property
    def rate_scale(self):
        """Largest rate in the model, used to bound integrator and trajectory steps."""
        return max(self.max_jump_rate, float(np.max(np.abs(self.drive_vector), initial=0.0)), 1e-12)

    def active_jumps(self):
        return [(label, jump) for label, jump in self.jumps if not jump.is_zero()]

    def steady_amplitudes(self):
        """Steady coherent amplitudes alpha = -i G^{-1} conj(omega) of the first-moment equations."""
        if not np.any(self.drive_vector):
            return np.zeros(self.space.n_modes, dtype=np.complex128)
        try:
            return -1j * np.linalg.solve(self.damping_matrix, self.drive_vector.conj())
        except np.linalg.LinAlgError:
            raise DomainError(f'Damping matrix of the {self.representation} model is singular; '
                              f'a driven undamped mode has no steady state')

    def invariant_violations(self, tolerance=1e-12):
        problems = []
        hermitian_rest = self.h_cond + 0.5j * self.damping_operator()
        deviation = max_abs(anti_hermitian_part(hermitian_rest))
        if deviation > tolerance:
            problems.append(f'h_cond + i/2 sum R^dag R is not Hermitian (deviation {deviation:.3e})')
        vacuum_index = 0
        for label, jump in self.jumps:
            if np.any(jump.matrix[:, vacuum_index].toarray()):
                problems.append(f'jump {label} does not annihilate the vacuum')
        return problems


def build_single_cavity(omega, kappa, cutoff):
    """One driven cavity: H_cond = (omega/2) c + (omega*/2) c^dag - (i/2) kappa c^dag c, R = sqrt(kappa) c.

    :param omega: complex Rabi frequency
    :param kappa: leakage rate
    :param cutoff: Fock cutoff N
    :return: OpenSystemModel with representation ``single``
    """
    if kappa < 0:
        raise ValueError(f'kappa: rate must be non-negative, got {kappa}')
    if kappa == 0 and omega != 0:
        raise ValueError('A driven cavity needs kappa > 0')
    space = FockSpace(1, cutoff)
    return OpenSystemModel(space, [omega], [('kappa', [np.sqrt(kappa)])], 'single')


def build_local(params, cutoff):
    """Two cavities in the local mode basis (c1, c2) with jumps 1, 2 (cavity leakage) and m (fiber).

    The fiber reset operator is (sqrt(kappa_m)/xi)(xi1 c1 + xi2 c2).
    """
    xi = make_frame(params).xi
    space = FockSpace(2, cutoff)
    jumps = [('1', [np.sqrt(params.kappa1), 0]),
             ('2', [0, np.sqrt(params.kappa2)]),
             ('m', np.sqrt(params.kappa_m) / xi * np.array([params.xi1, params.xi2]))]
    return OpenSystemModel(space, [params.omega1, params.omega2], jumps, 'local', params)


def build_common(params, cutoff):
    """Two cavities in the common mode basis (c_a, c_b); R_m = sqrt(kappa_m) c_b acts on c_b only."""
    frame = make_frame(params)
    xi, xi1, xi2 = frame.xi, frame.xi1, frame.xi2
    space = FockSpace(2, cutoff)
    jumps = [('1', np.sqrt(params.kappa1) / xi * np.array([xi2, np.conj(xi1)])),
             ('2', -np.sqrt(params.kappa2) / xi * np.array([xi1, -np.conj(xi2)])),
             ('m', [0, np.sqrt(params.kappa_m)])]
    return OpenSystemModel(space, frame.drive_vector, jumps, 'common', params)


def effective_jump_coefficients(frame):
    """First-order reset prefactors of the eliminated model, rescaled so their rates sum to kappa_eff."""
    p = frame.params
    xi, xi1, xi2, kappa_m, dk = frame.xi, frame.xi1, frame.xi2, p.kappa_m, frame.delta_kappa
    prefactors = {
        '1': np.sqrt(p.kappa1) * xi2 / xi * (1 - abs(xi1) ** 2 * dk / (xi ** 2 * kappa_m)),
        '2': -np.sqrt(p.kappa2) * xi1 / xi * (1 + abs(xi2) ** 2 * dk / (xi ** 2 * kappa_m)),
        'm': -np.sqrt(kappa_m) * frame.g * dk / kappa_m,
    }
    total = sum(abs(value) ** 2 for value in prefactors.values())
    if total > 0:
        rescale = np.sqrt(frame.kappa_eff / total)
        prefactors = {label: value * rescale for label, value in prefactors.items()}
    return prefactors


def build_effective(params, cutoff):
    """Single mode c_a after adiabatic elimination of c_b.

    H_cond = (omega_eff/2) c_a + h.c. - (i/2) kappa_eff c_a^dag c_a, with reset operators 1, 2, m
    proportional to c_a.
    """
    frame = make_frame(params)
    kappa_eff = frame.kappa_eff
    if kappa_eff <= 0:
        raise DomainError(f'kappa_eff = {kappa_eff:.6g} is not positive; kappa_m = {params.kappa_m} is '
                          f'too small for adiabatic elimination')
    prefactors = effective_jump_coefficients(frame)
    space = FockSpace(1, cutoff)
    jumps = [(label, [value]) for label, value in prefactors.items()]
    return OpenSystemModel(space, [frame.omega_eff], jumps, 'effective', params)


BUILDERS = {'local': build_local, 'common': build_common, 'effective': build_effective}


def build_model(params, cutoff, representation='local'):
    if representation not in BUILDERS:
        raise ValueError(f'Unknown two-cavity representation {representation}; expected one of {list(BUILDERS)}')
    return BUILDERS[representation](params, cutoff)


def adiabatic_cb_amplitude(frame, amplitude_a):
    """Predicted <c_b> from <c_a> when c_b follows c_a adiabatically: -(i conj(omega_b) + g dk <c_a>)/kappa_m."""
    frame._require_fiber_rate('adiabatic_cb_amplitude')
    return -(1j * np.conj(frame.omega_b) + frame.g * frame.delta_kappa * amplitude_a) / frame.params.kappa_m


def recommend_model_cutoff(params, representation='local', tail=DEFAULT_TAIL, minimum=2, maximum=60):
    """Cutoff recommendation for a two-cavity model, from its steady coherent amplitudes."""
    probe = build_model(params, 1, representation)
    return recommend_cutoff(probe.steady_amplitudes(), tail=tail, minimum=minimum, maximum=maximum)


def recommend_single_cutoff(omega, kappa, tail=DEFAULT_TAIL, minimum=2, maximum=60):
    if kappa <= 0:
        raise DomainError('Single cavity cutoff recommendation requires kappa > 0')
    return recommend_cutoff(abs(omega) / kappa, tail=tail, minimum=minimum, maximum=maximum)


class RegimeReport:
    """Outcome of the parameter-regime checks, one RegimeCheck per condition."""

    def __init__(self, checks):
        self.checks = {check.name: check for check in checks}

    def __getitem__(self, name):
        return self.checks[name]

    @property
    def passed(self):
        return all(check.passed for check in self.checks.values())

    def failures(self):
        return [check for check in self.checks.values() if not check.passed]

    def to_dict(self):
        return {name: {'passed': check.passed, 'ratio': check.ratio} for name, check in self.checks.items()}


def _ratio(numerator, denominator):
    return np.inf if denominator == 0 else numerator / denominator


def validate_regime(params, fiber_length_m=0.0, margin=10.0, reference_rate_per_s=1.0):
    """Check the assumptions behind the fiber model.

    Ratios are reported so that a check passes when ratio >= margin:

    - ``fiber_dominates``: kappa_m against max(kappa1, kappa2, |omega1|, |omega2|)
    - ``fiber_markov``: fiber response time 1/kappa_m against the light travel time R/c
    - ``fiber_faster_than_cavities``: cavity response times min(1/kappa_i) against 1/kappa_m

    :param params: SystemParams
    :param fiber_length_m: fiber length R in meters
    :param margin: factor standing in for "much larger than"
    :param reference_rate_per_s: value of the unit rate kappa_0 in 1/s
    :return: RegimeReport
    """
    if fiber_length_m < 0:
        raise ValueError(f'fiber_length_m must be non-negative, got {fiber_length_m}')
    if reference_rate_per_s <= 0:
        raise ValueError(f'reference_rate_per_s must be positive, got {reference_rate_per_s}')
    largest = max(params.kappa1, params.kappa2, abs(params.omega1), abs(params.omega2))
    kappa_m_per_s = params.kappa_m * reference_rate_per_s
    travel_time = fiber_length_m / SPEED_OF_LIGHT
    response_time = np.inf if kappa_m_per_s == 0 else 1 / kappa_m_per_s

    ratios = [('fiber_dominates', _ratio(params.kappa_m, largest),
               'kappa_m >> kappa_i, |omega_i|'),
              ('fiber_markov', _ratio(response_time, travel_time),
               '1/kappa_m >> R/c'),
              ('fiber_faster_than_cavities', _ratio(params.kappa_m, max(params.kappa1, params.kappa2)),
               '1/kappa_m << 1/kappa_i')]
    checks = [RegimeCheck(name, bool(ratio >= margin), float(ratio), description)
              for name, ratio, description in ratios]
    for check in checks:
        if not check.passed:
            logger.warning(f'Regime check {check.name} ({check.description}) fails: ratio {check.ratio:.3g} < {margin}')
    return RegimeReport(checks)
