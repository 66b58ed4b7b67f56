"""Exact finite-state analysis of the quadri-void gap pattern.

The pattern of integers that are not multiples of 4 has three origin
states (indexed 1, 2, 3 after the translation producing them).  The
point-map moves the origin by +2, +1, -2 respectively, which acts on
states deterministically: 1 -> 3, 2 -> 3, 3 -> 1.  Everything here is
exact rational arithmetic; this module is the golden oracle for the
Monte Carlo samplers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

STATES = (1, 2, 3)
TRANSITION = {1: 3, 2: 3, 3: 1}
POINT_MAP_STEP = {1: 2, 2: 1, 3: -2}


@dataclass(frozen=True)
class StateDistribution:
    """Exact probability vector over the three origin states."""

    p1: Fraction
    p2: Fraction
    p3: Fraction

    def __post_init__(self):
        probs = (self.p1, self.p2, self.p3)
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be nonnegative")
        if sum(probs) != 1:
            raise ValueError("probabilities must sum to 1 exactly")

    def __getitem__(self, state: int) -> Fraction:
        return (self.p1, self.p2, self.p3)[state - 1]

    def as_floats(self) -> tuple:
        return (float(self.p1), float(self.p2), float(self.p3))

    def to_json_dict(self) -> dict:
        return {
            f"state_{s}": {"num": self[s].numerator, "den": self[s].denominator}
            for s in STATES
        }


PALM_START = StateDistribution(Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))


def step(dist: StateDistribution) -> StateDistribution:
    """Pushforward of a state distribution along one point-map step."""
    out = {1: Fraction(0), 2: Fraction(0), 3: Fraction(0)}
    for s in STATES:
        out[TRANSITION[s]] += dist[s]
    return StateDistribution(out[1], out[2], out[3])


def nth_distribution(n: int) -> StateDistribution:
    """State distribution after n steps from the uniform origin start."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    dist = PALM_START
    for _ in range(n):
        dist = step(dist)
    return dist


def cesaro_distribution(n: int) -> StateDistribution:
    """Exact average of the first n iterate distributions (indices 0..n-1)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    totals = {s: Fraction(0) for s in STATES}
    dist = PALM_START
    for _ in range(n):
        for s in STATES:
            totals[s] += dist[s]
        dist = step(dist)
    return StateDistribution(*(totals[s] / n for s in STATES))


def export_distributions(n_list, path) -> None:
    """JSON export of the exact iterate distributions for a grid of n."""
    payload = {str(n): nth_distribution(n).to_json_dict() for n in n_list}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
