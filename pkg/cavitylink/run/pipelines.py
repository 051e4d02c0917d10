"""Scenario pipelines: build models from a RunConfig, run the solvers and write CSV tables and figures."""
import json
import logging
import os
from collections import namedtuple
from dataclasses import replace

import numpy as np
import pandas as pd

from cavitylink import __version__
from cavitylink.compare import EmissionReport, emission_report, decoupling_ratio, calibration_scan, \
    estimate_coupling_ratio, phase_grid, first_moments, run_validation_suite
from cavitylink.compare.validation_tools import common_mode_operators
from cavitylink.simulate import make_frame, build_single_cavity, build_model, build_effective, steady_state, \
    evolve_master, mcwf_trajectories, rate_steady_state, symmetric_steady, single_rate_steady, evolve_rates, \
    validate_regime, adiabatic_cb_amplitude, recommend_model_cutoff, recommend_single_cutoff
from cavitylink.simulate.rate_equations import steady_moments
from cavitylink.utils import ConfigError, DomainError, adjoint, number, vacuum, truncation_leakage, apply_rows
from cavitylink.visualize import plot_decoupling_static, plot_decoupling_interactive, save_static_plot, \
    save_interactive_plot
from .config import echoed_config

logger = logging.getLogger(__name__)

UNITS_NOTE = 'rates and Rabi frequencies in units of the reference rate kappa_0'
FLOAT_FORMAT = '%.12g'
SWEEP_VALUES = ['n_a', 'n_b', 'ratio', 'I_1', 'I_2', 'I_m', 'I', 'cutoff', 'flag']

RunResult = namedtuple('RunResult', ['exit_code', 'artifacts'])
Outcome = namedtuple('Outcome', ['tables', 'plots', 'metadata', 'exit_code'], defaults=(0,))


def write_table(table, path, metadata):
    """CSV with ``# key: value`` metadata lines before the header row."""
    with open(path, 'w', encoding='utf-8', newline='') as handle:
        for key, value in metadata.items():
            handle.write(f'# {key}: {value}\n')
        table.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f'Wrote {len(table)} rows to {path}')


def _json(value):
    return json.dumps(value, sort_keys=True)


def _report_row(report, tolerance):
    row = report.as_row()
    if report.n_b is not None:
        decoupling = decoupling_ratio(report, tolerance)
        row.update(ratio=decoupling.ratio, flag=decoupling.flag)
    return row


def moment_report(frame):
    """EmissionReport of the exact steady moments (product coherent state) of a two-cavity frame."""
    params = frame.params
    _, correlations = steady_moments(frame.drive_vector, frame.damping_matrix)
    local = frame.correlations_to_local(correlations)
    n_a, n_b = float(np.real(correlations[0, 0])), float(np.real(correlations[1, 1]))
    n_1, n_2 = float(np.real(local[0, 0])), float(np.real(local[1, 1]))
    rates = {'1': params.kappa1 * n_1, '2': params.kappa2 * n_2, 'm': params.kappa_m * n_b}
    return EmissionReport(rates, n_a, n_b, n_1, n_2)


def symmetric_phase(params):
    """Phase between xi2 and xi1 when the closed-form symmetric solution applies, otherwise None."""
    if np.isclose(params.kappa1, params.kappa2) and np.isclose(params.omega1, params.omega2) \
            and np.isclose(abs(params.xi1), abs(params.xi2)):
        return make_frame(params).phi
    return None


def population_operators(model, frame=None):
    """Photon number operators of the common modes (or of the single mode) of ``model``."""
    space = model.space
    if model.representation == 'single':
        return {'n': number(space, 0)}
    if model.representation == 'effective':
        return {'n_a': number(space, 0)}
    if model.representation == 'common':
        modes = model.modes
    else:
        modes = common_mode_operators(space, frame)
    return {name: adjoint(mode) @ mode for name, mode in zip(('n_a', 'n_b'), modes)}


def _regime_metadata(params, numerics):
    report = validate_regime(params, numerics.fiber_length_m, numerics.margin, numerics.reference_rate_per_s)
    return _json(report.to_dict())


def _build_scenario_model(config):
    numerics, section = config.numerics, config.params
    if config.scenario == 'single':
        if section.kappa <= 0:
            raise ConfigError('a single driven cavity needs kappa > 0', 'params.kappa')
        cutoff = numerics.cutoff or recommend_single_cutoff(section.omega, section.kappa, tail=numerics.tail)
        return build_single_cavity(section.omega, section.kappa, cutoff), None
    params = section.system_params()
    cutoff = numerics.cutoff or recommend_model_cutoff(params, config.scenario, tail=numerics.tail)
    return build_model(params, cutoff, config.scenario), make_frame(params)


def _analytic_row(model, frame, config):
    if model.representation == 'single':
        section = config.params
        n = single_rate_steady(section.omega, section.kappa).n
        return {'solver': 'rates', 'n_a': n, 'I_kappa': section.kappa * n, 'I': section.kappa * n}
    if model.representation == 'effective':
        n = abs(frame.omega_eff) ** 2 / frame.kappa_eff ** 2
        return {'solver': 'closed_form', 'n_a': n, 'I': frame.ideal_emission_rate}
    row = {'solver': 'rates'}
    row.update(_report_row(moment_report(frame), config.numerics.tolerance))
    return row


def _time_series(model, frame, config):
    numerics = config.numerics
    operators = population_operators(model, frame)
    start = vacuum(model.space)
    times = np.linspace(0, numerics.t_final, numerics.n_samples)
    result = evolve_master(model, start, numerics.t_final, dt_max=numerics.dt_max, times=times,
                           rtol=numerics.rtol, atol=numerics.atol)
    table = result.expectations(operators)
    for name in operators:
        table[name] = np.real(table[name])
    table['solver'] = 'master'
    tables = [table]

    if numerics.n_traj > 0:
        dt = numerics.dt or 0.05 / model.rate_scale
        ensemble = mcwf_trajectories(model, start, numerics.t_final, dt, numerics.n_traj, seed=numerics.seed,
                                     n_samples=numerics.n_samples, observables=operators, workers=numerics.workers)
        mean, error = ensemble.mean(), ensemble.standard_error()
        for name in operators:
            mean[f'se_{name}'] = error[name]
        mean['solver'] = 'mcwf'
        tables.append(mean)
    if model.representation in ('local', 'common'):
        rates = evolve_rates(frame, times, rtol=numerics.rtol, atol=numerics.atol)[['t', 'n_a', 'n_b']]
        rates['solver'] = 'rates'
        tables.append(rates)
    table = pd.concat(tables, ignore_index=True)
    return table.sort_values(['solver', 't'], kind='mergesort').reset_index(drop=True)


def run_model_scenario(config):
    """single, local, common and effective: steady state of the full model next to its analytic counterpart."""
    numerics = config.numerics
    model, frame = _build_scenario_model(config)
    logger.info(f'Built {model}')
    state = steady_state(model)
    row = {'solver': 'master'}
    row.update(_report_row(emission_report(state, model, frame, numerics.tolerance), numerics.tolerance))
    row['leakage'] = truncation_leakage(state)
    steady = pd.DataFrame([row, _analytic_row(model, frame, config)])
    steady.insert(1, 'representation', model.representation)
    steady.insert(2, 'cutoff', model.space.cutoff)
    steady = steady.dropna(axis=1, how='all')

    metadata = {'cutoff': model.space.cutoff}
    if frame is not None:
        metadata['regime'] = _regime_metadata(frame.params, numerics)
    tables, plots = {'': steady}, {}
    if numerics.t_final > 0:
        y = 'n' if model.representation == 'single' else 'n_a'
        metadata['dt_max'] = numerics.dt_max or 0.05 / model.rate_scale
        if numerics.n_traj > 0:
            metadata['dt'] = numerics.dt or 0.05 / model.rate_scale
        tables['_evolution'] = _time_series(model, frame, config)
        plots['_evolution'] = dict(x='t', y=y, group_columns=('solver',), log_y=False, title='Time evolution')
    return Outcome(tables, plots, metadata)


def run_rates_scenario(config):
    """Steady state (and optional time evolution) of the seven-variable rate equations."""
    numerics = config.numerics
    params = config.params.system_params()
    frame = make_frame(params)
    steady = rate_steady_state(frame)
    rows = [dict(solver='rates', ratio=steady.n_b / steady.n_a if steady.n_a > 0 else np.inf, **steady._asdict())]
    phi = symmetric_phase(params)
    if phi is not None:
        closed = symmetric_steady(params.omega1, params.kappa1, params.kappa_m, phi)
        rows.append(dict(solver='closed_form', n_a=closed.n_a, n_b=closed.n_b, ratio=closed.ratio, flag=closed.flag))
    tables = {'': pd.DataFrame(rows)}
    plots = {}
    if numerics.t_final > 0:
        times = np.linspace(0, numerics.t_final, numerics.n_samples)
        tables['_evolution'] = evolve_rates(frame, times, rtol=numerics.rtol, atol=numerics.atol)
        plots['_evolution'] = dict(x='t', y='n_a', group_columns=(), log_y=False, title='Rate equation evolution')
    return Outcome(tables, plots, {'regime': _regime_metadata(params, numerics)})


def sweep_params(template, symbol, phi, value):
    """Parameters of one sweep point: the template at phase ``phi`` with the swept symbol set to ``value``."""
    if symbol == 'phi':
        return template.with_phase(value)
    params = template.with_phase(phi)
    if symbol == 'kappa_m':
        return replace(params, kappa_m=value)
    modulus = abs(template.omega1 / template.omega2)
    return params.with_drive_ratio(modulus * np.exp(1j * value))


def _nan_values(flag):
    values = dict.fromkeys(SWEEP_VALUES, np.nan)
    values['flag'] = flag
    return values


def route_values(params, route, numerics):
    """n_a, n_b, ratio, emission rates and cutoff of one sweep point along one solver route."""
    frame = make_frame(params)
    values = _nan_values(None)
    if route == 'closed_form':
        closed = symmetric_steady(params.omega1, params.kappa1, params.kappa_m, frame.phi)
        values.update(n_a=closed.n_a, n_b=closed.n_b, ratio=closed.ratio, flag=closed.flag)
    elif route == 'rates':
        values.update(_report_row(moment_report(frame), numerics.tolerance))
    elif route == 'master':
        cutoff = numerics.cutoff or recommend_model_cutoff(params, numerics.representation, tail=numerics.tail)
        model = build_model(params, cutoff, numerics.representation)
        values.update(_report_row(emission_report(steady_state(model), model, frame, numerics.tolerance),
                                  numerics.tolerance), cutoff=cutoff)
    elif route == 'effective':
        try:
            cutoff = numerics.cutoff or recommend_model_cutoff(params, 'effective', tail=numerics.tail)
            model = build_effective(params, cutoff)
        except DomainError as error:
            logger.warning(f'No effective model at kappa_m = {params.kappa_m:g}: {error}')
            return _nan_values('no adiabatic elimination')
        state = steady_state(model)
        report = emission_report(state, model, frame, numerics.tolerance)
        n_b = abs(adiabatic_cb_amplitude(frame, first_moments(state, model)[0])) ** 2
        report.n_b = n_b
        values.update(_report_row(report, numerics.tolerance), cutoff=cutoff)
    values = {key: values[key] for key in SWEEP_VALUES}
    return values


def _sweep_grid(sweep):
    phis = sweep.grid if sweep.symbol == 'phi' else sweep.phi
    rows = []
    for phi in phis:
        values = [phi] if sweep.symbol == 'phi' else sweep.grid
        for value in values:
            for route in sweep.routes:
                row = {'phi': phi, 'solver': route}
                if sweep.symbol != 'phi':
                    row[sweep.symbol] = value
                rows.append(row)
    columns = ['phi', 'solver'] if sweep.symbol == 'phi' else [sweep.symbol, 'phi', 'solver']
    return pd.DataFrame(rows, columns=columns)


def run_sweep_scenario(config):
    """Steady decoupling over a grid of kappa_m, phi or drive-ratio phase, one row per point and route."""
    numerics, sweep = config.numerics, config.sweep
    template = config.params.system_params()
    if 'closed_form' in sweep.routes and (sweep.symbol == 'omega_ratio' or symmetric_phase(template) is None):
        raise ConfigError('the closed_form route needs kappa1 == kappa2, omega1 == omega2 and |xi1| == |xi2| at '
                          'every grid point', 'sweep.routes')
    if sweep.symbol == 'omega_ratio' and template.omega2 == 0:
        raise ConfigError('an omega_ratio sweep needs omega2 != 0', 'params.omega2')

    grid = _sweep_grid(sweep)
    logger.info(f'Sweep over {sweep.symbol}: {len(grid)} evaluations on {numerics.workers} workers')

    def evaluate(row):
        value = row['phi'] if sweep.symbol == 'phi' else row[sweep.symbol]
        params = sweep_params(template, sweep.symbol, row['phi'], value)
        return pd.Series(route_values(params, row['solver'], numerics), index=SWEEP_VALUES, dtype=object)

    values = apply_rows(grid, evaluate, numerics.workers)
    table = pd.concat([grid, values], axis=1)
    for column in SWEEP_VALUES[:-1]:
        table[column] = pd.to_numeric(table[column])
    keys = ['phi', 'solver'] if sweep.symbol == 'phi' else ['phi', sweep.symbol, 'solver']
    table = table.sort_values(keys, kind='mergesort').reset_index(drop=True)

    x = sweep.symbol
    groups = ('solver',) if sweep.symbol == 'phi' else ('phi', 'solver')
    plots = {'': dict(x=x, y='ratio', group_columns=groups, log_y=True, title=f'Decoupling ratio against {x}')}
    return Outcome({'': table}, plots, {'regime': _regime_metadata(template, numerics)})


def run_calibration_scenario(config):
    """Fiber emission over drive-ratio phases at each modulus, with the estimated coupling ratio xi1/xi2."""
    numerics, calibration = config.numerics, config.calibration
    template = config.params.system_params()
    tables, estimates = [], {}
    for modulus in calibration.moduli:
        if calibration.phase_grid is not None:
            ratios = modulus * np.exp(1j * np.asarray(calibration.phase_grid))
        else:
            ratios = phase_grid(calibration.n_points, modulus)
        scan = calibration_scan(template, ratios, route=calibration.route, cutoff=numerics.cutoff,
                                tail=numerics.tail, workers=numerics.workers)
        tables.append(scan.table)
        xi_ratio = estimate_coupling_ratio(scan)
        estimates[f'{modulus:g}'] = {'argmin': [scan.argmin.real, scan.argmin.imag],
                                     'argmax': [scan.argmax.real, scan.argmax.imag],
                                     'predicted_min': [scan.predicted_min.real, scan.predicted_min.imag],
                                     'predicted_max': [scan.predicted_max.real, scan.predicted_max.imag],
                                     'xi1_over_xi2': [xi_ratio.real, xi_ratio.imag]}
    table = pd.concat(tables, ignore_index=True)
    table = table.sort_values(['ratio_abs', 'ratio_phase'], kind='mergesort').reset_index(drop=True)
    plots = {'': dict(x='ratio_phase', y='I_m', group_columns=('ratio_abs',), log_y=False,
                      title='Fiber emission calibration scan')}
    return Outcome({'': table}, plots, {'calibration': _json(estimates)})


def run_validation_scenario(config):
    """Cross-solver invariant suite; exit code 0 only if every check passes."""
    table = run_validation_suite(seed=config.numerics.seed, quick=config.validation.quick,
                                 include_trajectories=config.validation.trajectories)
    failed = table.loc[~table['passed'], 'name'].tolist()
    for name in failed:
        logger.error(f'Validation check failed: {name}')
    return Outcome({'': table}, {}, {'failed': _json(failed)}, 0 if not failed else 1)


PIPELINES = {'single': run_model_scenario, 'local': run_model_scenario, 'common': run_model_scenario,
             'effective': run_model_scenario, 'rates': run_rates_scenario, 'sweep': run_sweep_scenario,
             'calibrate': run_calibration_scenario, 'validate': run_validation_scenario}


def run(config, out=None, seed=None, output_format=None):
    """Run one configured scenario and write its artifacts.

    :param config: RunConfig
    :param out: output directory (overrides ``output.dir``)
    :param seed: seed (overrides ``numerics.seed``)
    :param output_format: csv, csv+svg or csv+html (overrides ``output.format``)
    :return: RunResult(exit_code, artifacts) with artifacts a dict of file name -> path
    :raises DomainError, SolverError: the model or a solver failed
    """
    config = config.with_overrides(out, seed, output_format)
    os.makedirs(config.output.dir, exist_ok=True)
    outcome = PIPELINES[config.scenario](config)

    metadata = {'tool': f'cavitylink {__version__}', 'scenario': config.scenario, 'seed': config.numerics.seed,
                'units': UNITS_NOTE, 'config': _json(echoed_config(config))}
    metadata.update(outcome.metadata)
    artifacts = {}
    for suffix, table in outcome.tables.items():
        file_name = f'{config.name}{suffix}.csv'
        path = os.path.join(config.output.dir, file_name)
        write_table(table, path, metadata)
        artifacts[file_name] = path

        plot = outcome.plots.get(suffix)
        if plot is None or config.output.format == 'csv':
            continue
        if config.output.format == 'csv+svg':
            fig, _ = plot_decoupling_static(table, **plot)
            file_name = f'{config.name}{suffix}.svg'
            save_static_plot(fig, os.path.join(config.output.dir, file_name))
        else:
            fig = plot_decoupling_interactive(table, **plot)
            file_name = f'{config.name}{suffix}.html'
            save_interactive_plot(fig, os.path.join(config.output.dir, file_name))
        artifacts[file_name] = os.path.join(config.output.dir, file_name)
    return RunResult(outcome.exit_code, artifacts)
