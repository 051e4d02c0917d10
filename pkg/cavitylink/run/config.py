"""Run configuration: TOML files validated into a RunConfig.

Complex values may be given as a number, ``[re, im]``, a string such as ``"1+0.5j"`` or a polar table
``{abs = r, arg = theta}``. Angles and grid bounds accept ``pi`` (``"pi/2"``, ``"0.75pi"``, ``"-pi"``).
Grids are either explicit arrays or ``"start:stop:step"`` strings, inclusive of both ends.
"""
import logging
import re
from typing import Annotated, Any, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, field_validator, \
    model_validator

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from cavitylink.simulate import SystemParams
from cavitylink.utils import ConfigError
from cavitylink.utils.cutoff_utils import DEFAULT_TAIL

logger = logging.getLogger(__name__)

SCENARIOS = ('single', 'local', 'common', 'effective', 'rates', 'sweep', 'calibrate', 'validate')
SWEEP_SYMBOLS = ('kappa_m', 'phi', 'omega_ratio')
SWEEP_ROUTES = ('closed_form', 'rates', 'master', 'effective')
OUTPUT_FORMATS = ('csv', 'csv+svg', 'csv+html')

_PI_MULTIPLE = re.compile(r'^(?P<coef>[+-]?(?:\d+(?:\.\d*)?|\.\d+)?(?:[eE][+-]?\d+)?)\s*\*?\s*pi'
                          r'(?:\s*/\s*(?P<den>\d+(?:\.\d*)?))?$')
_TOML_LOCATION = re.compile(r'line (\d+), column (\d+)')


def parse_angle(value):
    """Real number from a number or a string that may contain a multiple of pi."""
    if isinstance(value, bool):
        raise ValueError(f'expected a number, got {value}')
    if isinstance(value, (int, float)):
        result = float(value)
    elif isinstance(value, str):
        text = value.strip().replace(' ', '')
        match = _PI_MULTIPLE.match(text)
        if match:
            coefficient = {'': 1.0, '+': 1.0, '-': -1.0}.get(match['coef'])
            coefficient = float(match['coef']) if coefficient is None else coefficient
            result = coefficient * np.pi / (float(match['den']) if match['den'] else 1.0)
        else:
            try:
                result = float(text)
            except ValueError:
                raise ValueError(f'cannot read {value!r} as a number or multiple of pi')
    else:
        raise ValueError(f'expected a number, got {value!r}')
    if not np.isfinite(result):
        raise ValueError(f'must be finite, got {value!r}')
    return result


def parse_complex(value):
    if isinstance(value, bool):
        raise ValueError(f'expected a complex number, got {value}')
    if isinstance(value, (int, float, complex)):
        result = complex(value)
    elif isinstance(value, str):
        try:
            result = complex(value.strip().replace(' ', ''))
        except ValueError:
            raise ValueError(f'cannot read {value!r} as a complex number')
    elif isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f'a complex number given as an array needs [re, im], got {value!r}')
        result = complex(parse_angle(value[0]), parse_angle(value[1]))
    elif isinstance(value, dict):
        if set(value) != {'abs', 'arg'}:
            raise ValueError(f'a polar complex number needs exactly the keys abs and arg, got {sorted(value)}')
        result = complex(parse_angle(value['abs']) * np.exp(1j * parse_angle(value['arg'])))
    else:
        raise ValueError(f'expected a complex number, got {value!r}')
    if not np.isfinite(result):
        raise ValueError(f'must be finite, got {value!r}')
    return result


def parse_grid(value):
    """Grid points from ``"start:stop:step"`` (both ends included) or an array of values.

    ``"0:20:0.5"`` gives 41 points.
    """
    if isinstance(value, str):
        parts = value.split(':')
        if len(parts) != 3:
            raise ValueError(f'grid string must look like "start:stop:step", got {value!r}')
        start, stop, step = (parse_angle(part) for part in parts)
        if step == 0:
            raise ValueError('grid step must be nonzero')
        intervals = (stop - start) / step
        if intervals < -1e-9:
            raise ValueError(f'grid step {step} does not lead from {start} to {stop}')
        points = start + step * np.arange(int(round(intervals)) + 1)
    elif isinstance(value, (list, tuple)):
        points = np.array([parse_angle(item) for item in value], dtype=float)
    else:
        points = np.array([parse_angle(value)])
    if len(points) == 0:
        raise ValueError('grid is empty')
    return [float(point) for point in points]


def _angle_list(value):
    values = value if isinstance(value, (list, tuple)) else [value]
    return [parse_angle(item) for item in values]


ComplexValue = Annotated[Any, BeforeValidator(parse_complex)]
Angle = Annotated[float, BeforeValidator(parse_angle)]
Grid = Annotated[List[float], BeforeValidator(parse_grid)]
AngleList = Annotated[List[float], BeforeValidator(_angle_list)]


class _Section(BaseModel):
    model_config = ConfigDict(extra='forbid', validate_default=True, frozen=True)


class ParamsSection(_Section):
    kappa1: float = 1.0
    kappa2: float = 1.0
    kappa_m: float = 10.0
    omega1: ComplexValue = 1.0
    omega2: ComplexValue = 1.0
    xi1: ComplexValue = 1.0
    xi2: ComplexValue = 1.0
    omega_cav: Optional[float] = None
    # single cavity
    omega: ComplexValue = 1.0
    kappa: float = 1.0

    @field_validator('kappa1', 'kappa2', 'kappa_m', 'kappa')
    @classmethod
    def check_rate(cls, value):
        if not np.isfinite(value) or value < 0:
            raise ValueError(f'rate must be non-negative and finite, got {value}')
        return value

    @model_validator(mode='after')
    def check_coupling(self):
        if abs(self.xi1) == 0 and abs(self.xi2) == 0:
            raise ValueError('xi1 and xi2 cannot both be zero')
        return self

    def system_params(self):
        return SystemParams(kappa1=self.kappa1, kappa2=self.kappa2, kappa_m=self.kappa_m, omega1=self.omega1,
                            omega2=self.omega2, xi1=self.xi1, xi2=self.xi2, omega_cav=self.omega_cav)


class NumericsSection(_Section):
    cutoff: Optional[int] = Field(None, ge=1)
    tail: float = Field(DEFAULT_TAIL, gt=0, lt=1)
    dt_max: Optional[float] = Field(None, gt=0)
    t_final: float = Field(0.0, ge=0)
    n_samples: int = Field(101, ge=2)
    dt: Optional[float] = Field(None, gt=0)
    n_traj: int = Field(0, ge=0)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    rtol: float = Field(1e-8, gt=0)
    atol: float = Field(1e-10, gt=0)
    tolerance: float = Field(1e-8, gt=0)
    workers: int = Field(1, ge=1)
    representation: Literal['local', 'common'] = 'local'
    fiber_length_m: float = Field(0.0, ge=0)
    reference_rate_per_s: float = Field(1.0, gt=0)
    margin: float = Field(10.0, gt=0)


class SweepSection(_Section):
    symbol: Literal['kappa_m', 'phi', 'omega_ratio'] = 'kappa_m'
    grid: Grid = '0:20:0.25'
    phi: AngleList = ['pi/2', '0.75pi', '0.9pi']
    routes: List[Literal['closed_form', 'rates', 'master', 'effective']] = ['closed_form', 'rates']

    @field_validator('routes')
    @classmethod
    def check_routes(cls, routes):
        if not routes:
            raise ValueError('at least one route is needed')
        if len(set(routes)) != len(routes):
            raise ValueError(f'routes must be distinct, got {routes}')
        return routes

    @field_validator('phi')
    @classmethod
    def check_phi(cls, phis):
        if not phis:
            raise ValueError('at least one phi value is needed')
        return phis

    @model_validator(mode='after')
    def check_grid_domain(self):
        if self.symbol == 'kappa_m' and min(self.grid) < 0:
            raise ValueError(f'kappa_m grid must be non-negative, got minimum {min(self.grid)}')
        return self


class CalibrationSection(_Section):
    phase_grid: Optional[Grid] = None
    n_points: int = Field(64, ge=1)
    moduli: List[float] = [1.0]
    route: Literal['rates', 'master'] = 'rates'

    @field_validator('moduli')
    @classmethod
    def check_moduli(cls, moduli):
        if not moduli or any(not np.isfinite(modulus) or modulus <= 0 for modulus in moduli):
            raise ValueError(f'moduli must be a non-empty list of positive numbers, got {moduli}')
        return moduli


class ValidationSection(_Section):
    quick: bool = False
    trajectories: bool = True


class OutputSection(_Section):
    dir: str = '.'
    name: Optional[str] = None
    format: Literal['csv', 'csv+svg', 'csv+html'] = 'csv'


class RunConfig(_Section):
    """Validated configuration of one run. Every section is optional and takes its defaults when absent."""
    scenario: Literal['single', 'local', 'common', 'effective', 'rates', 'sweep', 'calibrate', 'validate']
    params: ParamsSection = Field(default_factory=ParamsSection)
    numerics: NumericsSection = Field(default_factory=NumericsSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    calibration: CalibrationSection = Field(default_factory=CalibrationSection)
    validation: ValidationSection = Field(default_factory=ValidationSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @property
    def name(self):
        return self.output.name or self.scenario

    def with_overrides(self, out=None, seed=None, output_format=None):
        """Copy with command-line overrides applied."""
        if seed is not None and not 0 <= seed < 2 ** 64:
            raise ConfigError(f'seed must be an unsigned 64-bit integer, got {seed}', 'numerics.seed')
        if output_format is not None and output_format not in OUTPUT_FORMATS:
            raise ConfigError(f'unknown format {output_format}; expected one of {list(OUTPUT_FORMATS)}',
                              'output.format')
        numerics = self.numerics if seed is None else self.numerics.model_copy(update={'seed': seed})
        output = self.output.model_copy(update={key: value for key, value in
                                                (('dir', out), ('format', output_format)) if value is not None})
        return self.model_copy(update={'numerics': numerics, 'output': output})


def _to_plain(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, dict):
        return {key: _to_plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_plain(item) for item in value]
    return value


def resolved_config(config):
    """All values of ``config``, defaults included, with complex numbers as [re, im]."""
    return _to_plain(config.model_dump())


# settings that change where or how fast a run executes, never its numbers
EXECUTION_ONLY = (('numerics', 'workers'), ('output', 'dir'))


def echoed_config(config):
    """resolved_config without the execution-only settings, as written into artifact headers."""
    resolved = resolved_config(config)
    for section, key in EXECUTION_ONLY:
        resolved[section].pop(key, None)
    return resolved


def _error_location(error):
    return '.'.join(str(part) for part in error['loc']) or None


def _error_message(error):
    message = error['msg']
    return message[len('Value error, '):] if message.startswith('Value error, ') else message


def config_from_dict(data, scenario=None):
    """Validate a configuration mapping.

    :param data: dict as read from TOML
    :param scenario: scenario given on the command line; must agree with ``data['scenario']`` if both are set
    :return: RunConfig
    """
    data = dict(data)
    if scenario is not None:
        if 'scenario' in data and data['scenario'] != scenario:
            raise ConfigError(f'command line asks for {scenario} but the file sets {data["scenario"]}', 'scenario')
        data['scenario'] = scenario
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as error:
        errors = error.errors()
        first = errors[0]
        message = _error_message(first)
        if len(errors) > 1:
            others = '; '.join(f'{_error_location(other)}: {_error_message(other)}' for other in errors[1:])
            message = f'{message} (also {others})'
        raise ConfigError(message, _error_location(first)) from None
    try:
        config.params.system_params()
    except ValueError as error:
        field = str(error).split(':')[0]
        raise ConfigError(str(error), f'params.{field}' if field in ParamsSection.model_fields else 'params')
    return config


def parse_config(path, scenario=None):
    """Read and validate a TOML configuration file.

    :param path: path to the file
    :param scenario: optional scenario override from the command line
    :return: RunConfig
    :raises ConfigError: unreadable file, TOML syntax error (with line and column) or invalid values
        (with the dotted field path)
    """
    try:
        with open(path, 'rb') as handle:
            data = tomllib.load(handle)
    except OSError as error:
        raise ConfigError(f'cannot read configuration: {error.strerror}', str(path))
    except tomllib.TOMLDecodeError as error:
        match = _TOML_LOCATION.search(str(error))
        location = f'{path}, line {match[1]}, column {match[2]}' if match else str(path)
        raise ConfigError(f'syntax error: {error}', location)
    config = config_from_dict(data, scenario)
    logger.debug(f'Loaded {config.scenario} configuration from {path}')
    return config
