"""Finite point patterns with multiplicities in rectangular windows.

A pattern stores a simple support (pairwise distinct locations) together
with positive integer multiplicities.  All ball queries use open balls
(strict inequality), and every argmin-style query breaks ties
lexicographically by coordinates, so results are fully deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Window:
    """Axis-aligned observation window with a safety margin.

    The safe region is the window shrunk by ``safe_margin`` on every side;
    geometric queries started there are expected to stay inside the window.
    """

    center: tuple
    half_extent: tuple
    safe_margin: float = 0.0

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        half = tuple(float(h) for h in np.atleast_1d(self.half_extent))
        if len(center) != len(half):
            raise ValueError("center and half_extent must have equal length")
        if len(center) not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are supported")
        if not all(np.isfinite(center)) or not all(np.isfinite(half)):
            raise ValueError("window parameters must be finite")
        if any(h <= 0 for h in half):
            raise ValueError("half_extent must be positive")
        margin = float(self.safe_margin)
        if not 0.0 <= margin < min(half):
            raise ValueError("safe_margin must satisfy 0 <= margin < min(half_extent)")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "half_extent", half)
        object.__setattr__(self, "safe_margin", margin)

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.center) - np.asarray(self.half_extent)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.center) + np.asarray(self.half_extent)

    @property
    def volume(self) -> float:
        return float(np.prod(2.0 * np.asarray(self.half_extent)))

    def translated(self, t) -> "Window":
        t = np.asarray(t, dtype=float)
        return Window(tuple(np.asarray(self.center) + t), self.half_extent, self.safe_margin)

    def contains_points(self, pts, margin: float = 0.0) -> np.ndarray:
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        lo = self.lo + margin
        hi = self.hi - margin
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def contains_box(self, lo, hi) -> bool:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        return bool(np.all(lo >= self.lo) and np.all(hi <= self.hi))

    def contains_ball(self, center, radius: float) -> bool:
        c = np.asarray(center, dtype=float)
        return self.contains_box(c - radius, c + radius)


class PointPattern:
    """Counting measure with multiplicities on a window.

    ``coords`` is an (N, d) float array of pairwise distinct locations and
    ``mults`` the matching (N,) array of positive integer multiplicities.
    Instances are immutable values; operations return new patterns.
    """

    __slots__ = ("window", "coords", "mults", "_index")

    def __init__(self, window: Window, coords, mults=None, check: bool = True):
        coords = np.array(coords, dtype=float).reshape(-1, window.dim)
        if mults is None:
            mults = np.ones(len(coords), dtype=np.int64)
        else:
            mults = np.array(mults, dtype=np.int64).reshape(-1)
        if check:
            if len(mults) != len(coords):
                raise ValueError("coords and mults lengths differ")
            if coords.size and not np.all(np.isfinite(coords)):
                raise ValueError("atom coordinates must be finite")
            if np.any(mults < 1):
                raise ValueError("multiplicities must be positive integers")
            if coords.size and not np.all(window.contains_points(coords)):
                raise ValueError("all atoms must lie inside the window")
            if len(coords) > 1:
                uniq = np.unique(coords, axis=0)
                if len(uniq) != len(coords):
                    raise ValueError("atom locations must be pairwise distinct")
        coords.setflags(write=False)
        mults.setflags(write=False)
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "mults", mults)
        object.__setattr__(self, "_index", None)

    def __setattr__(self, name, value):
        raise AttributeError("PointPattern is immutable")

    @property
    def dim(self) -> int:
        return self.window.dim

    @property
    def n_atoms(self) -> int:
        return len(self.coords)

    @property
    def total_mass(self) -> int:
        return int(self.mults.sum())

    def _atom_index(self) -> dict:
        if self._index is None:
            object.__setattr__(
                self, "_index", {tuple(row): i for i, row in enumerate(self.coords)}
            )
        return self._index

    def index_of(self, x) -> int:
        """Index of the atom at exactly ``x``; KeyError if absent."""
        key = tuple(float(v) for v in np.atleast_1d(x))
        return self._atom_index()[key]

    def has_atom(self, x) -> bool:
        key = tuple(float(v) for v in np.atleast_1d(x))
        return key in self._atom_index()

    def multiplicity_at(self, x) -> int:
        return int(self.mults[self.index_of(x)])

    @property
    def has_origin_atom(self) -> bool:
        return self.has_atom(np.zeros(self.dim))

    def require_origin(self) -> "PointPattern":
        """Validate the origin-pattern invariant (atom exactly at 0)."""
        if not self.has_origin_atom:
            raise ValueError("pattern has no atom at the origin")
        return self

    def __eq__(self, other):
        if not isinstance(other, PointPattern):
            return NotImplemented
        return (
            self.window == other.window
            and self.coords.shape == other.coords.shape
            and np.array_equal(self.coords, other.coords)
            and np.array_equal(self.mults, other.mults)
        )

    def __repr__(self):
        return f"PointPattern(dim={self.dim}, atoms={self.n_atoms}, mass={self.total_mass})"


def translate(pattern: PointPattern, t) -> PointPattern:
    """Shift pattern by -t: atom x becomes x - t, window center moves by -t."""
    t = np.asarray(t, dtype=float).reshape(pattern.dim)
    if not np.all(np.isfinite(t)):
        raise ValueError("translation vector must be finite")
    return PointPattern(
        pattern.window.translated(-t), pattern.coords - t, pattern.mults, check=False
    )


def restrict(pattern: PointPattern, radius: float) -> PointPattern:
    """Keep atoms with ||x|| < radius; window becomes the ball's bounding box."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    d2 = np.sum(pattern.coords ** 2, axis=1)
    keep = d2 < radius * radius
    window = Window((0.0,) * pattern.dim, (radius,) * pattern.dim, 0.0)
    return PointPattern(window, pattern.coords[keep], pattern.mults[keep], check=False)


def count_in_ball(pattern: PointPattern, center, radius: float) -> int:
    """Total multiplicity in the open ball of given radius around center."""
    c = np.asarray(center, dtype=float).reshape(pattern.dim)
    d2 = np.sum((pattern.coords - c) ** 2, axis=1)
    return int(pattern.mults[d2 < radius * radius].sum())


def lex_argmin(candidates: np.ndarray, *keys) -> int:
    """Index of the candidate minimizing keys lexicographically.

    ``candidates`` is a boolean mask; keys are equal-length arrays ordered
    by priority.  Raises ValueError when no candidate is set.
    """
    idx = np.flatnonzero(candidates)
    if len(idx) == 0:
        raise ValueError("no candidate")
    sub = [np.asarray(k)[idx] for k in keys]
    order = np.lexsort(tuple(reversed(sub)))
    return int(idx[order[0]])


def nearest_satisfying(pattern: PointPattern, from_point, predicate, include_self=False):
    """Atom location nearest to ``from_point`` among atoms passing ``predicate``.

    ``predicate`` receives the (N, d) coordinate array and returns a boolean
    mask.  The atom at exactly ``from_point`` is excluded unless
    ``include_self``.  Ties break lexicographically by coordinates.  Returns
    None when no atom qualifies.
    """
    c = np.asarray(from_point, dtype=float).reshape(pattern.dim)
    mask = np.asarray(predicate(pattern.coords), dtype=bool).reshape(-1)
    if not include_self:
        mask = mask & np.any(pattern.coords != c, axis=1)
    if not mask.any():
        return None
    d2 = np.sum((pattern.coords - c) ** 2, axis=1)
    keys = (d2,) + tuple(pattern.coords[:, k] for k in range(pattern.dim))
    return pattern.coords[lex_argmin(mask, *keys)].copy()
