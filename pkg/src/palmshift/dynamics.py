"""Orbit iteration, n-th images, and pre-image order tables."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import PointPattern
from .shifts import BoundShift, PointShiftSpec, aggregate_image


@dataclass
class OrbitRecord:
    """Trajectory of one atom under repeated application of a shift.

    ``points`` holds X_0..X_k as a (k+1, d) array.  ``status`` is one of
    "active" (budget exhausted), "fixed" (self-image at ``event_step``),
    "periodic" (cycle entered; ``preperiod`` and ``period`` describe it),
    or "escaped" (the query region at ``event_step`` left the window).
    """

    points: np.ndarray
    atom_indices: list
    status: str
    event_step: int = -1
    preperiod: int = -1
    period: int = -1

    @property
    def steps_computed(self) -> int:
        return len(self.points) - 1

    def point_at(self, n: int) -> np.ndarray:
        """X_n, extending past the computed range for fixed/periodic orbits."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        if n <= self.steps_computed:
            return self.points[n]
        if self.status == "fixed":
            return self.points[-1]
        if self.status == "periodic":
            k = self.preperiod + (n - self.preperiod) % self.period
            return self.points[k]
        raise ValueError(f"orbit is {self.status}; X_{n} was not computed")


def iterate_orbit(
    spec: PointShiftSpec, pattern: PointPattern, start, n_max: int
) -> OrbitRecord:
    """Follow the orbit of the atom at ``start`` for up to n_max steps.

    Stops early on a self-image (fixed), a revisit of an already seen
    atom (periodic), or a step whose query region does not fit in the
    window (escaped; the offending step is not recorded).
    """
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    bound = BoundShift(spec, pattern)
    i = pattern.index_of(start)
    indices = [i]
    first_seen = {i: 0}
    for step in range(n_max):
        j, found, ok = bound.image_checked(i)
        if not ok:
            return _record(pattern, indices, "escaped", event_step=step)
        if j == i:
            return _record(pattern, indices, "fixed", event_step=step)
        if j in first_seen:
            indices.append(j)
            return _record(
                pattern, indices, "periodic",
                preperiod=first_seen[j], period=step + 1 - first_seen[j],
            )
        indices.append(j)
        first_seen[j] = step + 1
        i = j
    return _record(pattern, indices, "active")


def _record(pattern, indices, status, event_step=-1, preperiod=-1, period=-1):
    return OrbitRecord(
        points=pattern.coords[indices].copy(),
        atom_indices=indices,
        status=status,
        event_step=event_step,
        preperiod=preperiod,
        period=period,
    )


def compose_index_map(idx: np.ndarray, n: int) -> np.ndarray:
    """n-fold composition of an atom-index map with itself."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = np.arange(len(idx))
    for _ in range(n):
        out = idx[out]
    return out


def nth_index_map(spec: PointShiftSpec, pattern: PointPattern, n: int) -> np.ndarray:
    """Index map of the n-th image: the one-step map composed n times.

    The one-step map is computed once on the input pattern and reused, so
    each atom follows its orbit within the original pattern.
    """
    idx, _ = BoundShift(spec, pattern).image_all()
    return compose_index_map(idx, n)


def nth_image(spec: PointShiftSpec, pattern: PointPattern, n: int) -> PointPattern:
    """n-th image pattern with multiplicities summed over pre-images."""
    if n == 0:
        return pattern
    return aggregate_image(pattern, nth_index_map(spec, pattern, n))


@dataclass
class PreimageTable:
    """Truncated pre-image depth of every atom of one pattern.

    ``safe`` marks atoms in the window's safe region; only those
    participate in the reversed-graph search.  ``max_order[i]`` is the
    largest k <= k_max such that atom i has an order-k pre-image chain
    inside the safe region (k_max when the chain survives to the
    truncation depth; -1 for atoms outside the safe region).
    """

    safe: np.ndarray
    max_order: np.ndarray
    k_max: int
    image_index: np.ndarray = field(repr=False, default=None)

    def survivor_fraction(self, k: int) -> float:
        """Fraction of safe atoms still having order-k pre-images."""
        if k < 0:
            raise ValueError("k must be nonnegative")
        n_safe = int(self.safe.sum())
        if n_safe == 0:
            raise ValueError("no atoms in the safe region")
        return float((self.max_order[self.safe] >= k).sum() / n_safe)


def preimage_orders(
    spec: PointShiftSpec, pattern: PointPattern, k_max: int = 64
) -> PreimageTable:
    """Pre-image depths via backward reachability on the step graph.

    S_0 is the set of safe atoms; S_k keeps the atoms with a predecessor
    in S_{k-1} along trusted steps between safe atoms.  The sets are
    nested, and the iteration stops at a fixpoint (those atoms then hold
    pre-images of every order up to k_max).
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    bound = BoundShift(spec, pattern)
    idx, found = bound.image_all()
    n = pattern.n_atoms
    w = pattern.window
    safe = w.contains_points(pattern.coords, margin=w.safe_margin)
    trusted = np.fromiter(
        (bound.step_ok(i, idx[i], found[i]) for i in range(n)), dtype=bool, count=n
    )
    valid_src = safe & trusted & safe[idx]
    max_order = np.where(safe, 0, -1)
    current = safe.copy()
    for k in range(1, k_max + 1):
        new = np.zeros(n, dtype=bool)
        new[idx[valid_src & current]] = True
        if np.array_equal(new, current):
            max_order[new] = k_max
            break
        max_order[new] = k
        current = new
        if not new.any():
            break
    return PreimageTable(safe=safe, max_order=max_order, k_max=k_max, image_index=idx)


def survivor_fraction(
    spec: PointShiftSpec, pattern: PointPattern, k: int, k_max: int = None
) -> float:
    """Fraction of safe atoms with pre-images of order at least k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    table = preimage_orders(spec, pattern, k_max=k if k_max is None else k_max)
    return table.survivor_fraction(k)
