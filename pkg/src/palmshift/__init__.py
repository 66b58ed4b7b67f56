"""Point-shift dynamics on stationary point processes.

Simulation of translation-compatible point-shifts, iteration on Palm
samples, empirical and exact construction of the re-centered iterate
laws, and regeneration-based cycle averages, with a config-driven
experiment runner.
"""

from .dynamics import (
    OrbitRecord,
    PreimageTable,
    iterate_orbit,
    nth_image,
    preimage_orders,
    survivor_fraction,
)
from .generators import ProcessSpec, quadrivoid_state_of, sample_palm, sample_stationary
from .geometry import (
    PointPattern,
    Window,
    count_in_ball,
    nearest_satisfying,
    restrict,
    translate,
)
from .palm import (
    EmpiricalLaw,
    SummaryVector,
    collect_law,
    law_distance,
    mecke_invariance_gap,
    sample_cesaro,
    sample_gn_palm_direct,
    sample_gn_palm_mass_transport,
    summarize,
    tightness_profile,
)
from .rng import RngStream
from .shifts import PointShiftSpec, apply, image_pattern, point_map

__all__ = [
    "EmpiricalLaw",
    "OrbitRecord",
    "PointPattern",
    "PointShiftSpec",
    "PreimageTable",
    "ProcessSpec",
    "RngStream",
    "SummaryVector",
    "Window",
    "apply",
    "collect_law",
    "count_in_ball",
    "image_pattern",
    "iterate_orbit",
    "law_distance",
    "mecke_invariance_gap",
    "nearest_satisfying",
    "nth_image",
    "point_map",
    "preimage_orders",
    "quadrivoid_state_of",
    "restrict",
    "sample_cesaro",
    "sample_gn_palm_direct",
    "sample_gn_palm_mass_transport",
    "sample_palm",
    "sample_stationary",
    "summarize",
    "survivor_fraction",
    "tightness_profile",
    "translate",
]

__version__ = "0.1.0"
