"""Regeneration detection and long-orbit cycle-average estimators.

Long orbits of the strip and directional shifts drift through fresh
territory, so instead of a fixed window the pattern is realized lazily:
the plane is tiled by unit cells whose Poisson contents are generated on
demand from a cell-indexed random stream.  Pruning visited cells is a
pure memory optimization; regenerating a cell reproduces its points
bit-for-bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import iterate_orbit
from .generators import ProcessSpec, sample_palm
from .geometry import translate
from .palm import summarize
from .rng import RngStream
from .shifts import PointShiftSpec

# added to cell indices before seeding so stream indices stay nonnegative
_CELL_KEY_OFFSET = 1 << 20


class LazyPoissonField:
    """Homogeneous planar Poisson process realized cell by cell.

    Cell (i, j) covers [i, i+1) x [j, j+1); its points depend only on the
    base stream and the cell index, never on query order.
    """

    def __init__(self, intensity: float, rng: RngStream):
        if intensity <= 0:
            raise ValueError("intensity must be positive")
        self.intensity = intensity
        self.rng = rng
        self._cells = {}

    def cell_points(self, i: int, j: int) -> np.ndarray:
        pts = self._cells.get((i, j))
        if pts is None:
            gen = self.rng.child(i + _CELL_KEY_OFFSET, j + _CELL_KEY_OFFSET).generator()
            n = int(gen.poisson(self.intensity))
            pts = gen.uniform((i, j), (i + 1, j + 1), size=(n, 2))
            self._cells[(i, j)] = pts
        return pts

    def prune(self, min_x: float) -> None:
        """Drop cached cells entirely left of min_x (re-derivable later)."""
        stale = [key for key in self._cells if key[0] + 1 < min_x]
        for key in stale:
            del self._cells[key]

    def _gather_box(self, center, radius: float) -> np.ndarray:
        i_lo = math.floor(center[0] - radius)
        i_hi = math.floor(center[0] + radius)
        j_lo = math.floor(center[1] - radius)
        j_hi = math.floor(center[1] + radius)
        blocks = [
            self.cell_points(i, j)
            for i in range(i_lo, i_hi + 1)
            for j in range(j_lo, j_hi + 1)
        ]
        return np.vstack(blocks) if blocks else np.empty((0, 2))

    def count_in_ball(self, center, radius: float) -> int:
        pts = self._gather_box(center, radius)
        d2 = np.sum((pts - np.asarray(center)) ** 2, axis=1)
        return int(np.count_nonzero(d2 < radius * radius))

    def strip_next(self, x, half_width: float = 1.0, max_columns: int = 10000):
        """Leftmost process point of the half-strip to the right of x."""
        x0, x1 = float(x[0]), float(x[1])
        j_lo = math.floor(x1 - half_width)
        j_hi = math.floor(x1 + half_width)
        start = math.floor(x0)
        for i in range(start, start + max_columns):
            best = None
            for j in range(j_lo, j_hi + 1):
                pts = self.cell_points(i, j)
                if not len(pts):
                    continue
                keep = (pts[:, 0] > x0) & (np.abs(pts[:, 1] - x1) <= half_width)
                if keep.any():
                    cand = pts[keep]
                    top = cand[np.lexsort((cand[:, 1], cand[:, 0]))[0]]
                    if best is None or (top[0], top[1]) < (best[0], best[1]):
                        best = top
            if best is not None:
                return best.copy()
        raise RuntimeError("no strip successor within the column budget")

    def directional_next(self, x, u, alpha: float, max_radius: float = 4096.0):
        """Nearest process point in the cone of half-angle alpha around u."""
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        cos_a = math.cos(alpha)
        radius = 2.0
        while radius <= max_radius:
            pts = self._gather_box(x, radius)
            diffs = pts - x
            d2 = np.einsum("ij,ij->i", diffs, diffs)
            d = np.sqrt(d2)
            cand = (d2 > 0) & (diffs @ u > cos_a * d) & (d < radius)
            if cand.any():
                sub = pts[cand]
                order = np.lexsort((sub[:, 1], sub[:, 0], d2[cand]))
                return sub[order[0]].copy()
            radius *= 2.0
        raise RuntimeError("no cone point within the radius budget")


@dataclass
class LongOrbit:
    """Orbit of the origin atom over a lazily realized Poisson plane.

    ``payloads[n]`` is the ball count around X_n at ``payload_radius``
    (the moving atom itself included, as is the origin atom when in
    range).
    """

    positions: np.ndarray
    payloads: np.ndarray
    payload_radius: float

    @property
    def n_steps(self) -> int:
        return len(self.positions) - 1

    @property
    def gaps(self) -> np.ndarray:
        """First-coordinate increments p_n between successive points."""
        return np.diff(self.positions[:, 0])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.positions, axis=0)


def _payload(field, x, radius):
    extra = 1 if float(x[0]) ** 2 + float(x[1]) ** 2 < radius * radius else 0
    return field.count_in_ball(x, radius) + extra


def simulate_strip_orbit(
    intensity: float, n_steps: int, rng: RngStream,
    half_width: float = 1.0, payload_radius: float = 1.0,
    prune_margin: float = 16.0,
) -> LongOrbit:
    """Strip-shift orbit of the origin under the Palm version of Poisson.

    The origin atom sits at 0 on top of the lazy field; every further
    point comes from the field itself.
    """
    field = LazyPoissonField(intensity, rng)
    x = np.zeros(2)
    positions = [x]
    payloads = [_payload(field, x, payload_radius)]
    for step in range(n_steps):
        x = field.strip_next(x, half_width=half_width)
        positions.append(x)
        payloads.append(_payload(field, x, payload_radius))
        if step % 64 == 63:
            field.prune(x[0] - prune_margin)
    return LongOrbit(np.array(positions), np.array(payloads, dtype=float),
                     payload_radius)


def simulate_directional_orbit(
    intensity: float, n_steps: int, rng: RngStream,
    u=(1.0, 0.0), alpha: float = math.pi / 8, payload_radius: float = 1.0,
    prune_margin: float = 32.0,
) -> LongOrbit:
    """Directional-shift orbit of the origin over the lazy field."""
    u = np.asarray(u, dtype=float)
    field = LazyPoissonField(intensity, rng)
    x = np.zeros(2)
    positions = [x]
    payloads = [_payload(field, x, payload_radius)]
    prune_along_x = u[0] > 0.9
    for step in range(n_steps):
        x = field.directional_next(x, u, alpha)
        positions.append(x)
        payloads.append(_payload(field, x, payload_radius))
        if prune_along_x and step % 64 == 63:
            field.prune(x[0] - prune_margin)
    return LongOrbit(np.array(positions), np.array(payloads, dtype=float),
                     payload_radius)


@dataclass
class RegenerationSummary:
    """Cycle decomposition of one long orbit.

    ``eta`` holds the regeneration step indices; cycle i spans steps
    eta[i]+1 .. eta[i+1] and ``cycle_payload_sums[i]`` is the payload
    total over those steps.
    """

    eta: np.ndarray
    cycle_lengths: np.ndarray
    cycle_payload_sums: np.ndarray
    too_few: bool

    @property
    def n_cycles(self) -> int:
        return len(self.cycle_lengths)


def _cycles_from_eta(eta: np.ndarray, payloads: np.ndarray,
                     min_cycles: int = 30) -> RegenerationSummary:
    lengths = np.diff(eta)
    cp = np.concatenate([[0.0], np.cumsum(payloads)])
    sums = cp[eta[1:] + 1] - cp[eta[:-1] + 1]
    return RegenerationSummary(eta, lengths, sums, too_few=len(lengths) < min_cycles)


def strip_regen_times(orbit: LongOrbit, r: float,
                      payloads=None) -> RegenerationSummary:
    """Regeneration times of a strip orbit: steps whose gap exceeds 2r.

    When the horizontal gap p_n is larger than 2r, the ball of radius r
    around every later orbit point lies in territory unexplored at step
    n, so the cycles are independent.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    payloads = orbit.payloads if payloads is None else np.asarray(payloads, float)
    eta = np.flatnonzero(orbit.gaps > 2.0 * r)
    if len(eta) < 2:
        raise ValueError("fewer than two regeneration times detected")
    return _cycles_from_eta(eta, payloads)


def directional_regen_event_mask(orbit: LongOrbit, r: float, alpha: float,
                                 u=(1.0, 0.0)) -> np.ndarray:
    """Steps whose displacement lands deep in the complementary cone.

    The complementary cone has half-angle beta = pi/2 - alpha around u;
    "deep" means farther than 2r from both cone edges.
    """
    if not 0.0 < alpha < math.pi / 2:
        raise ValueError("alpha must lie in (0, pi/2)")
    u = np.asarray(u, dtype=float)
    beta = math.pi / 2 - alpha
    v = orbit.steps
    norms = np.linalg.norm(v, axis=1)
    cos_t = np.clip((v @ u) / np.where(norms > 0, norms, 1.0), -1.0, 1.0)
    theta = np.arccos(cos_t)
    inside = (norms > 0) & (theta < beta)
    deep = norms * np.sin(np.maximum(beta - theta, 0.0)) > 2.0 * r
    return inside & deep


def directional_regen_times(orbit: LongOrbit, r: float, alpha: float,
                            u=(1.0, 0.0), payloads=None) -> RegenerationSummary:
    """Regeneration times of a directional orbit (deep cone landings)."""
    if r <= 0:
        raise ValueError("r must be positive")
    payloads = orbit.payloads if payloads is None else np.asarray(payloads, float)
    eta = np.flatnonzero(directional_regen_event_mask(orbit, r, alpha, u))
    if len(eta) < 2:
        raise ValueError("fewer than two regeneration times detected")
    return _cycles_from_eta(eta, payloads)


@dataclass
class CycleAverage:
    estimate: float
    ci_lo: float
    ci_hi: float
    n_cycles: int


def cycle_average_estimate(
    summary: RegenerationSummary, rng: RngStream,
    resamples: int = 1000, level: float = 0.95,
) -> CycleAverage:
    """Ratio-of-sums estimator with a cycle-level percentile bootstrap."""
    if summary.n_cycles < 1:
        raise ValueError("no complete cycles")
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie strictly between 0 and 1")
    sums = summary.cycle_payload_sums
    lengths = summary.cycle_lengths.astype(float)
    estimate = float(sums.sum() / lengths.sum())
    gen = rng.generator()
    m = summary.n_cycles
    picks = gen.integers(0, m, size=(resamples, m))
    ratios = sums[picks].sum(axis=1) / lengths[picks].sum(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(ratios, [alpha, 1.0 - alpha])
    return CycleAverage(estimate, float(lo), float(hi), m)


def strip_ergodic_average(
    intensity: float, k_steps: int, rng: RngStream,
    payload_radius: float = 1.0, half_width: float = 1.0,
) -> float:
    """Time average of the payload over the first k steps of one orbit."""
    if k_steps < 1:
        raise ValueError("k_steps must be at least 1")
    orbit = simulate_strip_orbit(
        intensity, k_steps - 1, rng,
        half_width=half_width, payload_radius=payload_radius,
    )
    return float(orbit.payloads[:k_steps].mean())


def ergodic_average(
    spec: PointShiftSpec, proc: ProcessSpec, h, k_steps: int,
    window, rng: RngStream, max_restarts: int = 50,
) -> float:
    """Windowed time average of h along the origin's orbit.

    ``h`` maps a SummaryVector to a real.  Orbits that escape the window
    are restarted on a fresh Palm sample; the restart count is bounded.
    """
    if k_steps < 1:
        raise ValueError("k_steps must be at least 1")
    total = 0.0
    done = 0
    attempts = 0
    while done < k_steps:
        if attempts > max_restarts:
            raise RuntimeError("too many escape restarts in ergodic_average")
        pattern = sample_palm(proc, window, rng.child(attempts))
        attempts += 1
        needed = k_steps - done
        orbit = iterate_orbit(spec, pattern, np.zeros(proc.dim), needed)
        if orbit.status == "escaped":
            usable = orbit.steps_computed + 1
        else:
            usable = needed
        for n in range(usable):
            total += h(summarize(translate(pattern, orbit.point_at(n))))
        done += usable
    return total / k_steps
