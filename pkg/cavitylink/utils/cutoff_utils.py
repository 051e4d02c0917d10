"""Truncation helpers: choosing a per-mode Fock cutoff and measuring population lost at the cutoff."""
import logging

import numpy as np
from scipy.stats import poisson

logger = logging.getLogger(__name__)

DEFAULT_TAIL = 1e-10
LEAKAGE_WARNING_LEVEL = 1e-6


def recommend_cutoff(amplitude, tail=DEFAULT_TAIL, minimum=2, maximum=60):
    """Smallest cutoff N >= minimum such that a coherent state of the given amplitude puts less than
    ``tail`` probability above N.

    Steady states of the driven cavities are coherent states, so the photon number is Poissonian with mean
    |amplitude|^2 and the tail is P(n > N) = poisson.sf(N, |amplitude|^2).

    :param amplitude: complex (or real) coherent amplitude, or a sequence of amplitudes (largest is used)
    :param tail: allowed probability mass beyond the cutoff
    :param minimum: smallest cutoff returned
    :param maximum: cutoff is capped here (with a warning) to keep the Hilbert space tractable
    :return: int cutoff N
    """
    if not 0 < tail < 1:
        raise ValueError(f'tail must lie in (0, 1), not {tail}')
    mean = float(np.max(np.abs(np.atleast_1d(amplitude)))) ** 2
    n = int(minimum)
    while poisson.sf(n, mean) >= tail:
        if n >= maximum:
            logger.warning(f'Cutoff capped at {maximum}: tail probability {poisson.sf(n, mean):.2e} exceeds {tail:.0e}')
            return int(maximum)
        n += 1
    logger.debug(f'Recommended cutoff {n} for mean photon number {mean:.4g}')
    return n


def truncation_leakage(state):
    """Largest population sitting on the cutoff level of any mode.

    :param state: QuantumState (pure or mixed)
    :return: float, max over modes of P(n_mode = cutoff)
    """
    populations = state.populations()
    occupations = state.space.occupations()
    at_cutoff = occupations == state.space.cutoff
    return float(max(populations[at_cutoff[:, mode]].sum() for mode in range(state.space.n_modes)))
