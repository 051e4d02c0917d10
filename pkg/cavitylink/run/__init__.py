from .config import RunConfig, parse_config, config_from_dict, parse_grid, parse_complex, parse_angle, \
    resolved_config, echoed_config
from .pipelines import run, RunResult, write_table
