"""Thermodynamic quantities on irregular sets of mixing shifts of finite type."""

from .ergopt import irregularity_test, mean_cycle_extremum, spectrum_endpoints
from .errors import *  # noqa: F401,F403
from .orbit import Potential, birkhoff_sum, bowen_distance, separated_set, spanning_set
from .pressure import MarkovMeasure, katok_estimate, pp_pressure_upper, pressure_estimate, transfer_pressure
from .suspension import RoofFunction, abramov_entropy, ratio_extremum
from .systems import SymbolicSystem, full_shift, golden_mean, validate_system

__version__ = "0.1.0"
