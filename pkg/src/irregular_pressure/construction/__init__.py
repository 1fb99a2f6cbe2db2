"""Gluing construction of heavy subsets of the irregular set."""

from .certify import (
    OscillationReport,
    SamplePlan,
    certified_lower_bound,
    counting_check,
    emitted_point,
    level_budget,
    verify_divergence,
)
from .fractal import (
    FractalCoding,
    all_addresses,
    ancestry_bound,
    ball_mass,
    brute_ball_mass,
    glue_point,
    log_ball_mass,
    log_counting,
    log_L,
    materialize_C,
    random_address,
)
from .levels import (
    LevelData,
    extract_levels,
    extract_Sk,
    extract_words,
    level_from_words,
    two_measure_level,
)
from .schedule import GluingSchedule, build_schedule, level_deltas, make_schedule, rho, typical_length
