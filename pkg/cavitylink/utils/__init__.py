from .errors import DomainError, SolverError, DataError, ConfigError
from .fock_algebra import FockSpace, Operator, QuantumState, annihilation, creation, number, total_number, \
    identity, zero, compose, add, scale, adjoint, commutator, combine_modes, expectation, fock_state, vacuum, \
    coherent_state, coherent_amplitudes, anti_hermitian_part, max_abs
from .cutoff_utils import recommend_cutoff, truncation_leakage
from .grid_utils import apply_rows
