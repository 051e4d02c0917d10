"""Monte Carlo wave-function (quantum jump) unraveling of the master equation.

Each trajectory owns a counter-based random stream seeded from (seed, trajectory index), and
trajectories are processed in fixed chunks keyed by index, so an ensemble is bit-identical for any
number of workers.
"""
import logging

import numpy as np
import pandas as pd
import scipy.sparse as sp
from joblib import Parallel, delayed
from scipy.linalg import expm

from cavitylink.utils import number

logger = logging.getLogger(__name__)

CHUNK_SIZE = 64
MAX_STEP_PROBABILITY = 0.1


class TrajectoryEnsemble:
    """Result of mcwf_trajectories.

    :ivar n_traj: number of trajectories
    :ivar seed: root seed of the per-trajectory streams
    :ivar dt: time step actually used
    :ivar times: sample times
    :ivar samples: dict observable name -> array (n_traj, n_samples) of per-trajectory expectation values
    :ivar jumps: DataFrame with columns trajectory, time, channel
    """

    def __init__(self, n_traj, seed, dt, t_final, times, samples, jumps, channels):
        self.n_traj = n_traj
        self.seed = seed
        self.dt = dt
        self.t_final = t_final
        self.times = times
        self.samples = samples
        self.jumps = jumps
        self.channels = channels

    def __repr__(self):
        return f'TrajectoryEnsemble(n_traj={self.n_traj}, seed={self.seed}, dt={self.dt:.4g}, ' \
               f'jumps={len(self.jumps)})'

    def mean(self):
        table = pd.DataFrame({name: values.mean(axis=0) for name, values in self.samples.items()})
        table.insert(0, 't', self.times)
        return table

    def standard_error(self):
        """Sample standard deviation over trajectories divided by sqrt(n_traj)."""
        ddof = 1 if self.n_traj > 1 else 0
        table = pd.DataFrame({name: values.std(axis=0, ddof=ddof) / np.sqrt(self.n_traj)
                              for name, values in self.samples.items()})
        table.insert(0, 't', self.times)
        return table

    def jump_counts(self):
        """Number of jumps per trajectory (rows) and channel (columns)."""
        counts = pd.crosstab(self.jumps['trajectory'], self.jumps['channel']) if len(self.jumps) else pd.DataFrame()
        return counts.reindex(index=range(self.n_traj), columns=self.channels, fill_value=0)

    def emission_rates(self, t_start=0.0):
        """Per-channel jump rate after ``t_start``, with standard errors.

        :return: DataFrame indexed by channel with columns rate, standard_error
        """
        duration = self.t_final - t_start
        if duration <= 0:
            raise ValueError(f't_start must lie before t_final = {self.t_final}')
        late = self.jumps[self.jumps['time'] >= t_start]
        counts = pd.crosstab(late['trajectory'], late['channel']) if len(late) else pd.DataFrame()
        counts = counts.reindex(index=range(self.n_traj), columns=self.channels, fill_value=0) / duration
        ddof = 1 if self.n_traj > 1 else 0
        return pd.DataFrame({'rate': counts.mean(axis=0),
                             'standard_error': counts.std(axis=0, ddof=ddof) / np.sqrt(self.n_traj)})


def trajectory_rng(seed, index):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def _expectations(operators, psi):
    return {name: np.real(np.sum(psi.conj() * (op @ psi), axis=0)) for name, op in operators.items()}


def _jump(jumps, phi, channel_draw):
    """Apply the channel chosen with probability proportional to ||R_x phi||^2; None if all vanish."""
    weights = np.array([np.sum(np.abs(jump @ phi) ** 2) for _, jump in jumps])
    total = weights.sum()
    if total <= 0:
        return None, None
    choice = int(np.searchsorted(np.cumsum(weights), channel_draw * total, side='right'))
    choice = min(choice, len(jumps) - 1)
    label, jump = jumps[choice]
    return label, jump @ phi


def _run_chunk(indices, seed, psi0, propagator, half_propagator, jumps, operators, n_steps, stride, dt):
    """Evolve the trajectories ``indices`` side by side; returns (samples, jump records)."""
    n = len(indices)
    draws = np.stack([trajectory_rng(seed, index).random((n_steps, 3)) for index in indices])
    psi = np.repeat(psi0[:, None], n, axis=1)
    samples = {name: np.empty((n, n_steps // stride + 1)) for name in operators}
    for name, values in _expectations(operators, psi).items():
        samples[name][:, 0] = values
    records = []

    for step in range(n_steps):
        t = step * dt
        full = propagator @ psi
        p_jump = 1 - np.sum(np.abs(full) ** 2, axis=0)
        jumped = np.flatnonzero(draws[:, step, 0] < p_jump)
        if len(jumped):
            half = half_propagator @ psi[:, jumped]
            p_first = 1 - np.sum(np.abs(half) ** 2, axis=0)
            for k, column in enumerate(jumped):
                _, bisect_draw, channel_draw = draws[column, step]
                if bisect_draw * p_jump[column] < p_first[k]:
                    label, phi = _jump(jumps, half[:, k], channel_draw)
                    if phi is not None:
                        phi = half_propagator @ phi
                    jump_time = t + dt / 4
                else:
                    label, phi = _jump(jumps, full[:, column], channel_draw)
                    jump_time = t + 3 * dt / 4
                if phi is not None:
                    full[:, column] = phi
                    records.append((indices[column], jump_time, label))
        psi = full / np.linalg.norm(full, axis=0)

        if (step + 1) % stride == 0:
            for name, values in _expectations(operators, psi).items():
                samples[name][:, (step + 1) // stride] = values
    return samples, records


def _step_grid(t_final, dt, n_samples):
    """Number of steps and sampling stride such that samples fall on the step grid with step <= dt."""
    intervals = n_samples - 1
    stride = int(np.ceil(t_final / (intervals * dt) - 1e-9))
    n_steps = stride * intervals
    return n_steps, stride, t_final / n_steps


def mcwf_trajectories(model, psi0, t_final, dt, n_traj, seed=0, n_samples=11, observables=None, workers=1,
                      chunk_size=CHUNK_SIZE):
    """Quantum jump trajectories of ``model``.

    Each step propagates with exp(-i H_cond dt). A jump occurs with probability 1 - ||psi(t + dt)||^2;
    one bisection decides whether it falls in the first or the second half of the step, and the channel
    is drawn with probability proportional to ||R_x psi||^2. States are renormalised after every step.

    At most one jump is applied per step, so a second jump inside the same step is dropped, and the
    recorded jump time is the centre of the half step it fell in, t + dt/4 or t + 3 dt/4. Both are O(dt)
    effects: waiting times and emission rates built from ``ensemble.jumps`` carry this resolution.

    :param model: OpenSystemModel
    :param psi0: normalised pure QuantumState
    :param t_final: end time
    :param dt: largest time step; dt * (max jump rate) must stay below 0.1
    :param n_traj: number of trajectories, > 0
    :param seed: root seed
    :param n_samples: number of equally spaced sample times in [0, t_final]
    :param observables: dict name -> Operator (default: photon number of every mode, ``n_<mode>``)
    :param workers: joblib worker processes
    :param chunk_size: trajectories per chunk
    :return: TrajectoryEnsemble
    """
    if psi0.kind != 'pure':
        raise ValueError('MCWF trajectories need a pure initial state')
    if psi0.space != model.space:
        raise ValueError(f'Initial state space {psi0.space} does not match model space {model.space}')
    if abs(psi0.norm() - 1) > 1e-8:
        raise ValueError(f'Initial state must be normalised, norm is {psi0.norm():.6g}')
    if n_traj <= 0:
        raise ValueError(f'n_traj must be positive, got {n_traj}')
    if t_final <= 0 or dt <= 0:
        raise ValueError(f't_final and dt must be positive, got t_final={t_final}, dt={dt}')
    if n_samples < 2:
        raise ValueError(f'n_samples must be at least 2, got {n_samples}')
    if dt * model.max_jump_rate >= MAX_STEP_PROBABILITY:
        raise ValueError(f'dt = {dt} too large: dt * max jump rate = {dt * model.max_jump_rate:.3g} must be '
                         f'below {MAX_STEP_PROBABILITY}')

    n_steps, stride, dt = _step_grid(t_final, dt, n_samples)
    h_cond = model.h_cond.toarray()
    propagator = sp.csr_matrix(expm(-1j * h_cond * dt))
    half_propagator = sp.csr_matrix(expm(-0.5j * h_cond * dt))
    jumps = [(label, jump.matrix) for label, jump in model.active_jumps()]
    if observables is None:
        observables = {f'n_{label}': number(model.space, mode) for mode, label in enumerate(model.mode_labels)}
    operators = {name: op.matrix for name, op in observables.items()}

    chunks = [list(range(start, min(start + chunk_size, n_traj))) for start in range(0, n_traj, chunk_size)]
    logger.info(f'MCWF: {n_traj} trajectories, {n_steps} steps of {dt:.4g}, {len(chunks)} chunks on {workers} workers')
    results = Parallel(n_jobs=workers)(
        delayed(_run_chunk)(chunk, seed, psi0.data, propagator, half_propagator, jumps, operators, n_steps, stride, dt)
        for chunk in chunks)

    samples = {name: np.concatenate([chunk_samples[name] for chunk_samples, _ in results]) for name in operators}
    records = [record for _, chunk_records in results for record in chunk_records]
    jump_table = pd.DataFrame(records, columns=['trajectory', 'time', 'channel'])
    jump_table = jump_table.sort_values(['trajectory', 'time'], kind='mergesort').reset_index(drop=True)
    times = np.arange(n_samples) * stride * dt
    return TrajectoryEnsemble(n_traj, seed, dt, t_final, times, samples, jump_table, model.jump_labels)
