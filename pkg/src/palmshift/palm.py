"""Monte Carlo estimation of re-centered Palm iterates.

The law of a Palm pattern re-centered at the n-th orbit point of the
origin is estimated two ways: directly (iterate the orbit on a Palm
sample, then translate) and through its mass-transport dual (sample a
stationary pattern, pick a point of the n-th image in a ball around the
origin with probability proportional to image multiplicity, translate to
it).  Laws are compared through fixed finite summary vectors.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import iterate_orbit, nth_index_map
from .generators import ProcessSpec, sample_palm, sample_stationary
from .geometry import PointPattern, Window, count_in_ball, translate
from .rng import RngStream
from .shifts import PointShiftSpec
from .stats import ks_two_sample

SUMMARY_RADII = (0.5, 1.0, 2.0, 4.0)
SUMMARY_NN_K = 5

#: column names matching SummaryVector.as_array order
SUMMARY_COLUMNS = tuple(
    [f"count_r{r:g}" for r in SUMMARY_RADII]
    + [f"nn_dist_{k}" for k in range(1, SUMMARY_NN_K + 1)]
    + ["origin_mult"]
)


@dataclass(frozen=True)
class SummaryVector:
    """Finite-dimensional proxy for a pattern seen from the origin.

    Ball counts are multiplicity-weighted over open balls; nn_dists are
    the sorted distances from the origin to its nearest distinct atoms,
    padded with +inf when fewer than SUMMARY_NN_K atoms are in view.
    """

    counts: tuple
    nn_dists: tuple
    origin_mult: int

    def as_array(self) -> np.ndarray:
        return np.array(
            list(self.counts) + list(self.nn_dists) + [self.origin_mult],
            dtype=float,
        )


def summarize(pattern: PointPattern) -> SummaryVector:
    """Summary of a pattern around the origin of its window frame."""
    origin = np.zeros(pattern.dim)
    counts = tuple(count_in_ball(pattern, origin, r) for r in SUMMARY_RADII)
    d = np.sqrt(np.sum(pattern.coords ** 2, axis=1))
    at_origin = d == 0.0
    origin_mult = int(pattern.mults[at_origin].sum())
    others = np.sort(d[~at_origin])
    nn = np.full(SUMMARY_NN_K, np.inf)
    k = min(SUMMARY_NN_K, len(others))
    nn[:k] = others[:k]
    return SummaryVector(counts, tuple(nn), origin_mult)


@dataclass
class EmpiricalLaw:
    """Collection of per-sample summaries under one sampling recipe."""

    samples: list
    meta: dict = field(default_factory=dict)
    n_dropped: int = 0

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def drop_rate(self) -> float:
        total = self.n_samples + self.n_dropped
        return self.n_dropped / total if total else 0.0

    def matrix(self) -> np.ndarray:
        return np.array([s.as_array() for s in self.samples])

    def coordinate(self, k: int) -> np.ndarray:
        return self.matrix()[:, k]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SUMMARY_COLUMNS)
            for s in self.samples:
                writer.writerow([repr(float(v)) for v in s.as_array()])
        sidecar = str(path) + ".meta.json"
        with open(sidecar, "w") as fh:
            json.dump(
                {"meta": self.meta, "n_samples": self.n_samples,
                 "n_dropped": self.n_dropped},
                fh, indent=2, sort_keys=True,
            )


def collect_law(sample_fn, reps: int, rng: RngStream, workers: int = 1,
                meta: dict = None) -> EmpiricalLaw:
    """Run a per-replication sampler and fold results in index order.

    ``sample_fn(stream)`` returns a SummaryVector or None (dropped
    sample).  Each replication gets its own child stream, so the result
    is independent of the worker count.
    """
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if workers <= 1:
        results = [sample_fn(rng.child(i)) for i in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: sample_fn(rng.child(i)), range(reps)))
    samples = [r for r in results if r is not None]
    return EmpiricalLaw(samples, meta or {}, n_dropped=reps - len(samples))


def law_distance(a: EmpiricalLaw, b: EmpiricalLaw) -> float:
    """Max over summary coordinates of the two-sample KS statistic."""
    ma, mb = a.matrix(), b.matrix()
    return max(
        ks_two_sample(ma[:, k], mb[:, k]).statistic
        for k in range(ma.shape[1])
    )


def sample_gn_palm_direct(
    spec: PointShiftSpec, proc: ProcessSpec, n: int,
    window: Window, rng: RngStream,
):
    """Summary of one Palm sample re-centered at its n-th orbit point.

    Returns None when the orbit escapes the window before step n.
    """
    pattern = sample_palm(proc, window, rng.child(0))
    orbit = iterate_orbit(spec, pattern, np.zeros(proc.dim), n)
    try:
        x = orbit.point_at(n)
    except ValueError:
        return None
    return summarize(translate(pattern, x))


def sample_cesaro(
    spec: PointShiftSpec, proc: ProcessSpec, n: int,
    window: Window, rng: RngStream,
):
    """One draw from the uniform mixture of the iterates 0..n-1."""
    if n < 1:
        raise ValueError("n must be at least 1")
    i = int(rng.child(0).generator().integers(0, n))
    return sample_gn_palm_direct(spec, proc, i, window, rng.child(1))


def sample_gn_palm_mass_transport(
    spec: PointShiftSpec, proc: ProcessSpec, n: int, ball_radius: float,
    window: Window, rng: RngStream,
):
    """Mass-transport dual of the direct sampler.

    Stationary sample, n-th image by index composition, one image point
    in the open ball around the origin picked proportionally to image
    multiplicity, pattern translated to it.  Returns None when the ball
    holds no image mass (rejected sample).
    """
    if ball_radius <= 0:
        raise ValueError("ball_radius must be positive")
    pattern = sample_stationary(proc, window, rng.child(0))
    if pattern.n_atoms == 0:
        return None
    idx = nth_index_map(spec, pattern, n)
    mass = np.zeros(pattern.n_atoms, dtype=np.int64)
    np.add.at(mass, idx, pattern.mults)
    d2 = np.sum(pattern.coords ** 2, axis=1)
    weights = np.where(d2 < ball_radius * ball_radius, mass, 0)
    total = weights.sum()
    if total == 0:
        return None
    gen = rng.child(1).generator()
    pick = int(gen.choice(pattern.n_atoms, p=weights / total))
    return summarize(translate(pattern, pattern.coords[pick]))


def mass_transport_laws(
    spec: PointShiftSpec, proc: ProcessSpec, n_list, ball_radius: float,
    window: Window, reps: int, rng: RngStream,
) -> dict:
    """Pooled mass-transport estimates of the laws for a grid of iterates.

    Every atom of the n-th image inside the open ball contributes one
    summary per unit of image multiplicity, so the pooled collection is
    the ratio-of-expectations reading of the mass-transport relation.
    The per-sample single-pick variant (sample_gn_palm_mass_transport)
    under-weights samples with heavy ball mass and is measurably biased;
    use this one for distributional comparisons.
    """
    if ball_radius <= 0:
        raise ValueError("ball_radius must be positive")
    n_list = tuple(int(n) for n in n_list)
    pooled = {n: [] for n in n_list}
    empty = {n: 0 for n in n_list}
    for i in range(reps):
        pattern = sample_stationary(proc, window, rng.child(i))
        if pattern.n_atoms == 0:
            for n in n_list:
                empty[n] += 1
            continue
        from .shifts import BoundShift
        from .dynamics import compose_index_map

        idx = BoundShift(spec, pattern).image_all()[0]
        d2 = np.sum(pattern.coords ** 2, axis=1)
        in_ball = d2 < ball_radius * ball_radius
        for n in n_list:
            mass = np.zeros(pattern.n_atoms, dtype=np.int64)
            np.add.at(mass, compose_index_map(idx, n), pattern.mults)
            targets = np.flatnonzero(in_ball & (mass > 0))
            if not len(targets):
                empty[n] += 1
                continue
            for t in targets:
                s = summarize(translate(pattern, pattern.coords[t]))
                pooled[n].extend([s] * int(mass[t]))
    return {
        n: EmpiricalLaw(pooled[n], {"estimator": "mass-transport", "n": n},
                        n_dropped=empty[n])
        for n in n_list
    }


def mecke_invariance_gap(
    spec: PointShiftSpec, proc: ProcessSpec, n: int,
    window: Window, samples: int, rng: RngStream, workers: int = 1,
) -> float:
    """KS gap between the laws of iterate n and iterate n+1.

    A small gap indicates the n-th re-centered law is approximately
    invariant under one more application of the point-map.
    """
    law_n = collect_law(
        lambda s: sample_gn_palm_direct(spec, proc, n, window, s),
        samples, rng.child(0), workers=workers,
    )
    law_next = collect_law(
        lambda s: sample_gn_palm_direct(spec, proc, n + 1, window, s),
        samples, rng.child(1), workers=workers,
    )
    return law_distance(law_n, law_next)


@dataclass
class TightnessProfile:
    """Tail estimates P[ball count > r] over a grid of iterates."""

    n_list: tuple
    r_list: tuple
    ball_radius: float
    tails: np.ndarray
    valid: np.ndarray
    suspect: bool


def tightness_profile(
    spec: PointShiftSpec, proc: ProcessSpec, ball_radius: float,
    n_list, r_list, samples: int, window: Window, rng: RngStream,
) -> TightnessProfile:
    """Estimate ball-count tails of the re-centered laws on a grid.

    The profile is flagged suspect when even the largest tested count
    threshold keeps tail mass at least 0.1 somewhere over the later half
    of the iterate grid, i.e. the counts fail to stay uniformly tight.
    """
    n_list = tuple(int(v) for v in n_list)
    r_list = tuple(int(v) for v in r_list)
    if not n_list or not r_list:
        raise ValueError("n_list and r_list must be nonempty")
    n_max = max(n_list)
    r_arr = np.asarray(r_list)
    hits = np.zeros((len(n_list), len(r_list)))
    valid = np.zeros(len(n_list))
    for s in range(samples):
        pattern = sample_palm(proc, window, rng.child(s))
        orbit = iterate_orbit(spec, pattern, np.zeros(proc.dim), n_max)
        for a, n in enumerate(n_list):
            try:
                x = orbit.point_at(n)
            except ValueError:
                continue
            valid[a] += 1
            count = count_in_ball(pattern, x, ball_radius)
            hits[a] += count > r_arr
    if np.any(valid == 0):
        raise RuntimeError("some iterates had no surviving samples")
    tails = hits / valid[:, None]
    late = tails[len(n_list) // 2:]
    suspect = bool(late.max(axis=0).min() >= 0.1)
    return TightnessProfile(n_list, r_list, ball_radius, tails, valid, suspect)
