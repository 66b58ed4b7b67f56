"""Samplers for stationary processes and their Palm versions."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PointPattern, Window
from .rng import RngStream

#: hard cap on expected atom count per sample (resource guard)
DEFAULT_ATOM_BUDGET = 2_000_000

# quadri-void grid: integers that are not multiples of 4.  The three Palm
# states are theta_j psi = psi - j for j in {1, 2, 3}; state j is missing
# the residue class (4 - j) mod 4... concretely theta_1 lacks residue 3,
# theta_2 lacks residue 2, theta_3 lacks residue 1.
_MISSING_TO_STATE = {3: 1, 2: 2, 1: 3}
_STATE_TO_MISSING = {1: 3, 2: 2, 3: 1}


@dataclass(frozen=True)
class ProcessSpec:
    """Stationary process family: poisson(lambda), lattice(spacing), quadrivoid."""

    kind: str
    dim: int = 2
    intensity: float = 1.0
    spacing: float = 1.0

    def __post_init__(self):
        if self.kind not in ("poisson", "lattice", "quadrivoid"):
            raise ValueError(f"unknown process kind {self.kind!r}")
        if self.kind == "poisson":
            if self.dim not in (1, 2):
                raise ValueError("poisson requires dim in {1, 2}")
            if self.intensity <= 0:
                raise ValueError("intensity must be positive")
        else:
            if self.dim != 1:
                raise ValueError(f"{self.kind} requires dim = 1")
            if self.kind == "lattice" and self.spacing <= 0:
                raise ValueError("spacing must be positive")


def _grid_in(lo: float, hi: float, spacing: float, offset: float) -> np.ndarray:
    """Points offset + spacing*Z inside [lo, hi]."""
    k_lo = int(np.ceil((lo - offset) / spacing))
    k_hi = int(np.floor((hi - offset) / spacing))
    return offset + spacing * np.arange(k_lo, k_hi + 1, dtype=float)


def _quadrivoid_points(u: float, lo: float, hi: float) -> np.ndarray:
    """Atoms of (Z \\ 4Z) + u inside [lo, hi]."""
    m = np.arange(int(np.ceil(lo - u)), int(np.floor(hi - u)) + 1)
    m = m[m % 4 != 0]
    return m + u


def sample_stationary(
    spec: ProcessSpec,
    window: Window,
    rng: RngStream,
    max_atoms: int = DEFAULT_ATOM_BUDGET,
) -> PointPattern:
    """One stationary sample restricted to the window."""
    if window.dim != spec.dim:
        raise ValueError("window dimension does not match process dimension")
    gen = rng.generator()
    lo, hi = window.lo, window.hi
    if spec.kind == "poisson":
        mean = spec.intensity * window.volume
        if mean > max_atoms:
            raise ValueError(f"expected atom count {mean:.3g} exceeds budget {max_atoms}")
        n = int(gen.poisson(mean))
        pts = gen.uniform(lo, hi, size=(n, spec.dim))
    elif spec.kind == "lattice":
        u = float(gen.uniform(0.0, spec.spacing))
        pts = _grid_in(lo[0], hi[0], spec.spacing, u).reshape(-1, 1)
    else:  # quadrivoid
        u = float(gen.uniform(0.0, 4.0))
        pts = _quadrivoid_points(u, lo[0], hi[0]).reshape(-1, 1)
    return PointPattern(window, pts)


def sample_palm(
    spec: ProcessSpec,
    window: Window,
    rng: RngStream,
    max_atoms: int = DEFAULT_ATOM_BUDGET,
) -> PointPattern:
    """One Palm sample: the stationary law conditioned on an atom at 0.

    Poisson uses the Slivnyak reduction (stationary sample plus an
    independent atom at the origin); the lattice goes through the origin;
    the quadri-void grid picks one of its three Palm states uniformly.
    """
    if window.dim != spec.dim:
        raise ValueError("window dimension does not match process dimension")
    origin = np.zeros(spec.dim)
    if not window.contains_points(origin[None, :], margin=window.safe_margin)[0]:
        raise ValueError("window safe region must contain the origin")
    gen = rng.generator()
    lo, hi = window.lo, window.hi
    if spec.kind == "poisson":
        base = sample_stationary(spec, window, rng, max_atoms=max_atoms)
        coords = np.vstack([origin[None, :], base.coords])
        return PointPattern(window, coords)
    if spec.kind == "lattice":
        pts = _grid_in(lo[0], hi[0], spec.spacing, 0.0).reshape(-1, 1)
        return PointPattern(window, pts).require_origin()
    # quadrivoid: theta_j psi with probability 1/3 each
    j = int(gen.integers(1, 4))
    m = np.arange(int(np.ceil(lo[0])), int(np.floor(hi[0])) + 1)
    m = m[(m + j) % 4 != 0]
    return PointPattern(window, m.astype(float).reshape(-1, 1)).require_origin()


def quadrivoid_state_of(pattern: PointPattern) -> int:
    """Which Palm state a quadri-void origin pattern is in (1, 2 or 3).

    State j corresponds to theta_j psi.  Identified from the missing
    positive offset in {1, 2, 3} next to the origin atom.
    """
    pattern.require_origin()
    x = pattern.coords[:, 0]
    if not np.all(np.abs(x - np.round(x)) < 1e-9):
        raise ValueError("quadri-void pattern must be integer-supported")
    present = {int(o) for o in (1, 2, 3) if np.any(np.abs(x - o) < 1e-9)}
    missing = {1, 2, 3} - present
    if len(missing) != 1:
        raise ValueError(f"expected exactly one missing offset in {{1,2,3}}, got {missing}")
    return _MISSING_TO_STATE[missing.pop()]
