from .model_builder import SystemParams, CommonModeFrame, OpenSystemModel, RegimeReport, RegimeCheck, make_frame, \
    build_single_cavity, build_local, build_common, build_effective, build_model, validate_regime, \
    adiabatic_cb_amplitude, recommend_model_cutoff, recommend_single_cutoff
from .master_equation import liouvillian, master_rhs, evolve_master, steady_state, EvolutionResult
from .trajectories import mcwf_trajectories, TrajectoryEnsemble
from .rate_equations import RateState, MomentState, SingleRateState, SymmetricSteady, rate_rhs, rate_steady_state, \
    symmetric_steady, moment_rhs, moment_steady_state, rate_state_from_moments, single_rate_rhs, \
    single_rate_steady, evolve_rates
