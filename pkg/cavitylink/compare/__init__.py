from .observables import EmissionReport, Decoupling, CalibrationScan, emission_report, decoupling_ratio, \
    injection_rate, calibration_scan, estimate_coupling_ratio, phase_grid, correlation_matrix, first_moments
from .validation_tools import CheckResult, run_validation_suite
