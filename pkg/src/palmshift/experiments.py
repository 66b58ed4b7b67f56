"""Named, config-driven experiments with pass/fail gates and artifacts.

Each experiment is a deterministic function of (params, seed): it draws
everything from a single splittable stream, evaluates its gates, and
returns an ExperimentReport.  Reports serialize to JSON with stable key
order, so identical configs produce bit-identical report files (wall
time is kept out of the serialized report for that reason).
"""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from . import quadrivoid_exact as qx
from .dynamics import iterate_orbit, preimage_orders
from .generators import ProcessSpec, quadrivoid_state_of, sample_palm, sample_stationary
from .geometry import Window, count_in_ball, translate
from .palm import (
    EmpiricalLaw,
    law_distance,
    mass_transport_laws,
    mecke_invariance_gap,
    summarize,
    tightness_profile,
)
from .regen import (
    cycle_average_estimate,
    directional_regen_event_mask,
    directional_regen_times,
    simulate_directional_orbit,
    simulate_strip_orbit,
    strip_ergodic_average,
    strip_regen_times,
)
from .rng import RngStream
from .shifts import BoundShift, PointShiftSpec
from .stats import bootstrap_ci, ks_exponential_fit

EXPERIMENT_NAMES = (
    "quadrivoid-exact",
    "mecke-lattice",
    "strip-gaps",
    "strip-regen",
    "directional-regen",
    "mass-transport",
    "evaporation-marks",
    "condenser-tightness",
    "expander-delta",
    "hardcore-rn",
    "cesaro-invariance",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run: name, seed, and parameter overrides."""

    experiment: str
    seed: int = 0
    workers: int = 1
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_NAMES:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; "
                f"valid names: {', '.join(EXPERIMENT_NAMES)}"
            )
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        known = {"experiment", "seed", "workers", "params"}
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in doc:
            raise ValueError("config must name an experiment")
        return ExperimentConfig(
            experiment=doc["experiment"],
            seed=int(doc.get("seed", 0)),
            workers=int(doc.get("workers", 1)),
            params=dict(doc.get("params", {})),
        )


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    metrics: dict
    gates: dict
    diagnostics: dict
    wall_time_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(g["passed"] for g in self.gates.values())

    def to_json_dict(self) -> dict:
        return _jsonable({
            "experiment": self.experiment,
            "config": self.config,
            "metrics": self.metrics,
            "gates": self.gates,
            "diagnostics": self.diagnostics,
            "passed": self.passed,
        })

    def write(self, out_dir) -> None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "report.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Fraction):
        return {"num": value.numerator, "den": value.denominator}
    return value


def _gate(passed, **detail):
    entry = {"passed": bool(passed)}
    entry.update(detail)
    return entry


def _write_csv(out_dir, name, header, rows):
    if out_dir is None:
        return
    import os

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def run_experiment(config: ExperimentConfig, out_dir=None) -> ExperimentReport:
    """Execute one named experiment and optionally write its artifacts."""
    fn = _REGISTRY[config.experiment]
    params = dict(_DEFAULTS[config.experiment])
    unknown = set(config.params) - set(params)
    if unknown:
        raise ValueError(
            f"unknown params for {config.experiment}: {sorted(unknown)}"
        )
    params.update(config.params)
    rng = RngStream(config.seed)
    start = time.perf_counter()
    metrics, gates, diagnostics = fn(params, config.workers, rng, out_dir)
    wall = time.perf_counter() - start
    report = ExperimentReport(
        experiment=config.experiment,
        config={"experiment": config.experiment, "seed": config.seed,
                "workers": config.workers, "params": params},
        metrics=metrics, gates=gates, diagnostics=diagnostics,
        wall_time_s=wall,
    )
    if out_dir is not None:
        report.write(out_dir)
    return report


# ---------------------------------------------------------------------------
# quadrivoid-exact


def _exp_quadrivoid_exact(p, workers, rng, out_dir):
    third, two_thirds = Fraction(1, 3), Fraction(2, 3)
    odd_ok = all(
        qx.nth_distribution(n) == qx.StateDistribution(third, Fraction(0), two_thirds)
        for n in range(1, p["n_max"] + 1, 2)
    )
    even_ok = all(
        qx.nth_distribution(n) == qx.StateDistribution(two_thirds, Fraction(0), third)
        for n in range(2, p["n_max"] + 1, 2)
    )
    ces = qx.cesaro_distribution(p["cesaro_n"])
    tol = Fraction(1, 1000)
    ces_ok = (
        abs(ces.p1 - Fraction(1, 2)) <= tol
        and ces.p2 <= tol
        and abs(ces.p3 - Fraction(1, 2)) <= tol
    )
    if out_dir is not None:
        import os

        os.makedirs(out_dir, exist_ok=True)
        qx.export_distributions(
            range(p["n_max"] + 1), os.path.join(out_dir, "distributions.json")
        )
    metrics = {
        "iterates": {str(n): qx.nth_distribution(n).as_floats()
                     for n in range(p["n_max"] + 1)},
        "cesaro": ces.as_floats(),
    }
    gates = {
        "odd_iterates_exact": _gate(odd_ok),
        "even_iterates_exact": _gate(even_ok),
        "cesaro_near_half": _gate(ces_ok, value=ces.as_floats()),
    }
    return metrics, gates, {}


# ---------------------------------------------------------------------------
# cesaro-invariance


def _quadrivoid_setup(p):
    proc = ProcessSpec("quadrivoid", 1)
    shift = PointShiftSpec("quadrivoid")
    window = Window((0.0,), (p["half_extent"],), p["safe_margin"])
    return proc, shift, window


def _exp_cesaro_invariance(p, workers, rng, out_dir):
    proc, shift, window = _quadrivoid_setup(p)
    reps = p["replications"]
    n_list = (1, 2, 3)
    counts = {n: {1: 0, 2: 0, 3: 0} for n in n_list}
    for i in range(reps):
        pattern = sample_palm(proc, window, rng.child(0, i))
        orbit = iterate_orbit(shift, pattern, np.zeros(1), max(n_list))
        for n in n_list:
            state = quadrivoid_state_of(translate(pattern, orbit.point_at(n)))
            counts[n][state] += 1
    gates = {}
    metrics = {"iterate_freqs": {}}
    for n in n_list:
        exact = qx.nth_distribution(n)
        freqs = {s: counts[n][s] / reps for s in qx.STATES}
        metrics["iterate_freqs"][str(n)] = [freqs[s] for s in qx.STATES]
        ok = all(
            abs(freqs[s] - float(exact[s]))
            <= 3.0 * math.sqrt(float(exact[s]) * (1 - float(exact[s])) / reps)
            for s in qx.STATES
        )
        gates[f"iterate_{n}_matches_exact"] = _gate(
            ok, freqs=[freqs[s] for s in qx.STATES], exact=exact.as_floats()
        )
    # Cesaro mixture sampler: uniform iterate index, then the direct chain
    ces_n = p["cesaro_n"]
    ces_counts = {1: 0, 2: 0, 3: 0}
    for i in range(reps):
        stream = rng.child(1, i)
        idx = int(stream.child(0).generator().integers(0, ces_n))
        pattern = sample_palm(proc, window, stream.child(1))
        orbit = iterate_orbit(shift, pattern, np.zeros(1), idx)
        state = quadrivoid_state_of(translate(pattern, orbit.point_at(idx)))
        ces_counts[state] += 1
    exact_ces = qx.cesaro_distribution(ces_n)
    ces_freqs = [ces_counts[s] / reps for s in qx.STATES]
    ces_ok = all(
        abs(ces_freqs[s - 1] - float(exact_ces[s]))
        <= 3.0 * math.sqrt(
            max(float(exact_ces[s]) * (1 - float(exact_ces[s])), 1e-12) / reps
        ) + 1e-9
        for s in qx.STATES
    )
    metrics["cesaro_freqs"] = ces_freqs
    metrics["cesaro_exact"] = exact_ces.as_floats()
    gates["cesaro_matches_exact"] = _gate(ces_ok, freqs=ces_freqs)
    # the Cesaro limit solves the invariance equation exactly
    limit = qx.StateDistribution(Fraction(1, 2), Fraction(0), Fraction(1, 2))
    gates["cesaro_limit_invariant"] = _gate(qx.step(limit) == limit)
    return metrics, gates, {}


# ---------------------------------------------------------------------------
# mecke-lattice


def _quadrivoid_state_tv_gap(n, window, samples, rng):
    """TV distance between the state laws of iterates n and n+1.

    The two non-trivial origin states are spatial mirror images, so the
    symmetric summary coordinates cannot see the period-2 oscillation;
    the discrete state itself can.
    """
    proc = ProcessSpec("quadrivoid", 1)
    shift = PointShiftSpec("quadrivoid")
    freq = np.zeros((2, 3))
    for i in range(samples):
        pattern = sample_palm(proc, window, rng.child(i))
        orbit = iterate_orbit(shift, pattern, np.zeros(1), n + 1)
        for a, m in enumerate((n, n + 1)):
            state = quadrivoid_state_of(translate(pattern, orbit.point_at(m)))
            freq[a, state - 1] += 1
    freq /= samples
    return float(0.5 * np.abs(freq[0] - freq[1]).sum())


def _exp_mecke_lattice(p, workers, rng, out_dir):
    lattice = ProcessSpec("lattice", 1, spacing=p["spacing"])
    successor = PointShiftSpec("strip")
    w_lat = Window((0.0,), (p["lattice_half"],), p["lattice_margin"])
    gap0 = mecke_invariance_gap(
        successor, lattice, 0, w_lat, p["samples"], rng.child(0), workers=workers
    )
    _, _, w_q = _quadrivoid_setup(p)
    gap5 = _quadrivoid_state_tv_gap(5, w_q, p["samples"], rng.child(1))
    gap6 = _quadrivoid_state_tv_gap(6, w_q, p["samples"], rng.child(2))
    metrics = {"lattice_gap_n0": gap0, "quadrivoid_gap_n5": gap5,
               "quadrivoid_gap_n6": gap6}
    gates = {
        "lattice_successor_invariant": _gate(gap0 < 0.02, gap=gap0),
        "quadrivoid_gap_n5_large": _gate(gap5 > 0.2, gap=gap5),
        "quadrivoid_gap_n6_large": _gate(gap6 > 0.2, gap=gap6),
    }
    return metrics, gates, {}


# ---------------------------------------------------------------------------
# strip-gaps


def _exp_strip_gaps(p, workers, rng, out_dir):
    lam = p["intensity"]
    orbit = simulate_strip_orbit(lam, p["n_gaps"], rng.child(0))
    gaps = orbit.gaps
    mean = float(gaps.mean())
    ks = ks_exponential_fit(gaps, 2.0 * lam)
    lag1 = float(np.corrcoef(gaps[:-1], gaps[1:])[0, 1])
    _write_csv(out_dir, "gaps.csv", ["step", "gap"],
               [(n, repr(float(g))) for n, g in enumerate(gaps)])
    metrics = {"gap_mean": mean, "ks_statistic": ks.statistic,
               "lag1_autocorr": lag1}
    gates = {
        "gap_mean_near_half": _gate(
            p["mean_lo"] <= mean <= p["mean_hi"], mean=mean
        ),
        "gaps_exponential_ks": _gate(not ks.reject_at_1pct,
                                     statistic=ks.statistic),
        "gaps_uncorrelated": _gate(abs(lag1) <= 0.04, lag1=lag1),
    }
    return metrics, gates, {}


# ---------------------------------------------------------------------------
# strip-regen


def _exp_strip_regen(p, workers, rng, out_dir):
    lam = p["intensity"]
    orbit = simulate_strip_orbit(lam, p["orbit_steps"], rng.child(0),
                                 payload_radius=p["payload_radius"])
    summary = strip_regen_times(orbit, r=p["r"])
    ca = cycle_average_estimate(summary, rng.child(1))
    means = [
        strip_ergodic_average(lam, p["ergodic_steps"], rng.child(2, i),
                              payload_radius=p["payload_radius"])
        for i in range(p["ergodic_orbits"])
    ]
    erg_lo, erg_hi = bootstrap_ci(means, rng.child(3))
    erg_mean = float(np.mean(means))
    overlap = ca.ci_lo <= erg_hi and erg_lo <= ca.ci_hi
    _write_csv(out_dir, "cycles.csv", ["cycle", "length", "payload_sum"],
               [(i, int(l), repr(float(s))) for i, (l, s) in
                enumerate(zip(summary.cycle_lengths,
                              summary.cycle_payload_sums))])
    metrics = {
        "cycle_average": ca.estimate, "cycle_ci": [ca.ci_lo, ca.ci_hi],
        "n_cycles": ca.n_cycles, "mean_cycle_length":
            float(summary.cycle_lengths.mean()),
        "ergodic_average": erg_mean, "ergodic_ci": [erg_lo, erg_hi],
    }
    gates = {
        "enough_cycles": _gate(ca.n_cycles >= p["min_cycles"],
                               n_cycles=ca.n_cycles),
        "averages_ci_overlap": _gate(
            overlap, cycle_ci=[ca.ci_lo, ca.ci_hi],
            ergodic_ci=[erg_lo, erg_hi],
        ),
    }
    return metrics, gates, {"cycle_too_few_flag": summary.too_few}


# ---------------------------------------------------------------------------
# directional-regen


def _exp_directional_regen(p, workers, rng, out_dir):
    alpha = p["alpha"]
    u = (1.0, 0.0)
    orbit = simulate_directional_orbit(
        p["intensity"], p["orbit_steps"], rng.child(0), u=u, alpha=alpha
    )
    beta = math.pi / 2 - alpha
    v = orbit.steps
    norms = np.linalg.norm(v, axis=1)
    cos_t = np.clip((v @ np.asarray(u)) / norms, -1.0, 1.0)
    cone_freq = float(np.mean(np.arccos(cos_t) < beta))
    mask = directional_regen_event_mask(orbit, p["r"], alpha, u)
    event_freq = float(mask.mean())
    summary = directional_regen_times(orbit, p["r"], alpha, u)
    ca = cycle_average_estimate(summary, rng.child(1))
    bound = min(1.0, beta / alpha)
    _write_csv(out_dir, "cycles.csv", ["cycle", "length", "payload_sum"],
               [(i, int(l), repr(float(s))) for i, (l, s) in
                enumerate(zip(summary.cycle_lengths,
                              summary.cycle_payload_sums))])
    metrics = {
        "cone_frequency": cone_freq, "deep_event_frequency": event_freq,
        "n_cycles": summary.n_cycles,
        "mean_cycle_length": float(summary.cycle_lengths.mean()),
        "cycle_average": ca.estimate, "cycle_ci": [ca.ci_lo, ca.ci_hi],
    }
    gates = {
        "cone_frequency_bound": _gate(
            cone_freq >= min(1.0, bound) - p["mc_slack"],
            frequency=cone_freq, bound=bound,
        ),
        "enough_cycles": _gate(summary.n_cycles >= p["min_cycles"],
                               n_cycles=summary.n_cycles),
        "cycles_short": _gate(
            float(summary.cycle_lengths.mean()) <= p["max_mean_cycle"],
            mean_cycle=float(summary.cycle_lengths.mean()),
        ),
    }
    return metrics, gates, {}


# ---------------------------------------------------------------------------
# mass-transport


def _exp_mass_transport(p, workers, rng, out_dir):
    proc = ProcessSpec("poisson", 2, p["intensity"])
    window = Window((0.0, 0.0), (p["half_extent"],) * 2, p["safe_margin"])
    shifts = {
        "strip": PointShiftSpec("strip"),
        "directional": PointShiftSpec("directional", u=(1.0, 0.0),
                                      alpha=p["alpha"]),
    }
    n_list = tuple(p["n_list"])
    reps = p["replications"]
    ball = p["ball_radius"]
    metrics = {"ks": {}}
    gates = {}
    diagnostics = {"drop_rates": {}}
    for si, (name, shift) in enumerate(shifts.items()):
        direct = {n: [] for n in n_list}
        n_drop_direct = {n: 0 for n in n_list}
        for i in range(reps):
            pattern = sample_palm(proc, window, rng.child(0, si, i))
            orbit = iterate_orbit(shift, pattern, np.zeros(2), max(n_list))
            for n in n_list:
                try:
                    x = orbit.point_at(n)
                except ValueError:
                    n_drop_direct[n] += 1
                    continue
                direct[n].append(summarize(translate(pattern, x)))
        dual = mass_transport_laws(
            shift, proc, n_list, ball, window, reps, rng.child(1, si)
        )
        for n in n_list:
            ks = law_distance(EmpiricalLaw(direct[n]), dual[n])
            metrics["ks"][f"{name}_n{n}"] = ks
            gates[f"{name}_n{n}_ks_small"] = _gate(ks < p["ks_limit"], ks=ks)
            diagnostics["drop_rates"][f"{name}_n{n}"] = {
                "direct": n_drop_direct[n] / reps,
                "dual_empty": dual[n].drop_rate,
            }
    return metrics, gates, diagnostics


# ---------------------------------------------------------------------------
# evaporation-marks


def _exp_evaporation_marks(p, workers, rng, out_dir):
    proc = ProcessSpec("poisson", 2, p["intensity"])
    window = Window((0.0, 0.0), (p["half_extent"],) * 2, p["safe_margin"])
    pattern = sample_stationary(proc, window, rng.child(0))
    k_max = p["k_max"]
    tables = {}
    for name in ("strip", "hardcore"):
        tables[name] = preimage_orders(PointShiftSpec(name), pattern, k_max)
        rows = [
            (repr(float(x)), repr(float(y)), int(mo), int(mo >= k_max))
            for (x, y), mo, safe in zip(
                pattern.coords, tables[name].max_order, tables[name].safe
            )
            if safe
        ]
        _write_csv(out_dir, f"marks_{name}.csv",
                   ["x", "y", "max_order", "survivor"], rows)
    curves = {
        name: [tables[name].survivor_fraction(k) for k in range(1, k_max + 1)]
        for name in tables
    }
    _write_csv(
        out_dir, "survivor_fractions.csv", ["k", "strip", "hardcore"],
        [(k + 1, repr(curves["strip"][k]), repr(curves["hardcore"][k]))
         for k in range(k_max)],
    )
    strip_1, strip_10 = curves["strip"][0], curves["strip"][9]
    hc_2, hc_10 = curves["hardcore"][1], curves["hardcore"][9]
    n_safe = int(tables["strip"].safe.sum())
    metrics = {"strip_fractions": curves["strip"],
               "hardcore_fractions": curves["hardcore"],
               "n_safe_atoms": n_safe}
    gates = {
        "strip_evaporates": _gate(strip_10 < strip_1 - 0.05,
                                  k1=strip_1, k10=strip_10),
        "hardcore_stable": _gate(hc_10 >= hc_2 - 0.02, k2=hc_2, k10=hc_10),
        "enough_safe_atoms": _gate(n_safe >= p["min_safe_atoms"],
                                   n_safe=n_safe),
    }
    return metrics, gates, {}


# ---------------------------------------------------------------------------
# condenser-tightness


def _exp_condenser_tightness(p, workers, rng, out_dir):
    proc = ProcessSpec("poisson", 2, p["intensity"])
    window = Window((0.0, 0.0), (p["half_extent"],) * 2, p["safe_margin"])
    shift = PointShiftSpec("condenser")
    n_max = p["n_max"]
    violations = 0
    genuine_steps = []
    for i in range(p["replications"]):
        pattern = sample_palm(proc, window, rng.child(0, i))
        orbit = iterate_orbit(shift, pattern, np.zeros(2), n_max)
        genuine_steps.append(orbit.steps_computed)
        for n in range(min(n_max, orbit.steps_computed) + 1):
            if count_in_ball(pattern, orbit.points[n], 1.0) < 2 ** n:
                violations += 1
    profile = tightness_profile(
        shift, proc, 1.0, tuple(range(n_max + 1)), p["r_list"],
        p["profile_samples"], window, rng.child(1),
    )
    steps_hist = np.bincount(genuine_steps, minlength=n_max + 1)
    metrics = {
        "doubling_violations": violations,
        "genuine_step_histogram": steps_hist,
        "tail_matrix": profile.tails,
        "tail_n_list": profile.n_list,
        "tail_r_list": profile.r_list,
    }
    gates = {
        "doubling_along_orbits": _gate(violations == 0,
                                       violations=violations),
        "tightness_suspect": _gate(profile.suspect),
    }
    return metrics, gates, {"profile_valid_counts": profile.valid}


# ---------------------------------------------------------------------------
# expander-delta


def _exp_expander_delta(p, workers, rng, out_dir):
    proc = ProcessSpec("poisson", 2, p["intensity"])
    window = Window((0.0, 0.0), (p["half_extent"],) * 2, p["safe_margin"])
    shift = PointShiftSpec("expander")
    n_list = tuple(p["n_list"])
    reps = p["replications"]
    radius = p["void_radius"]
    hits = np.zeros(len(n_list))
    valid = np.zeros(len(n_list))
    for i in range(reps):
        pattern = sample_palm(proc, window, rng.child(0, i))
        orbit = iterate_orbit(shift, pattern, np.zeros(2), max(n_list))
        for a, n in enumerate(n_list):
            try:
                x = orbit.point_at(n)
            except ValueError:
                continue
            valid[a] += 1
            hits[a] += count_in_ball(pattern, x, radius) == 1
    if np.any(valid == 0):
        raise RuntimeError("an expander iterate lost all samples")
    probs = hits / valid
    sigma = np.sqrt(np.maximum(probs * (1 - probs), 1e-12) / valid)
    monotone = all(
        probs[a + 1] >= probs[a] - 2.0 * sigma[a]
        for a in range(len(n_list) - 1)
    )
    gain = float(probs[-1] - probs[0])
    metrics = {"void_probs": probs, "n_list": n_list,
               "drop_rates": (reps - valid) / reps}
    gates = {
        "void_prob_nondecreasing": _gate(monotone, probs=probs),
        "void_prob_gain": _gate(gain >= p["min_gain"], gain=gain),
    }
    return metrics, gates, {}


# ---------------------------------------------------------------------------
# hardcore-rn


def _exp_hardcore_rn(p, workers, rng, out_dir):
    proc = ProcessSpec("poisson", 2, p["intensity"])
    window = Window((0.0, 0.0), (p["half_extent"],) * 2, p["safe_margin"])
    shift = PointShiftSpec("hardcore")
    reps = p["replications"]
    h_radius = p["h_radius"]
    # (a) direct: one hard-core step from the Palm origin
    direct_vals = []
    n_escaped = 0
    for i in range(reps):
        pattern = sample_palm(proc, window, rng.child(0, i))
        bound = BoundShift(shift, pattern)
        origin = pattern.index_of(np.zeros(2))
        j, found, ok = bound.image_checked(origin)
        if not ok:
            n_escaped += 1
            continue
        direct_vals.append(count_in_ball(pattern, pattern.coords[j], h_radius))
    est_direct = float(np.mean(direct_vals))
    # (b) hard-core Palm reweighted by points assigned to each center
    num = 0.0
    den = 0.0
    n_empty = 0
    sel2 = p["select_radius"] ** 2
    for i in range(reps):
        pattern = sample_stationary(proc, window, rng.child(1, i))
        if pattern.n_atoms == 0:
            n_empty += 1
            continue
        mc = BoundShift(shift, pattern).ball_counts()
        hc = np.flatnonzero(mc == 1)
        if len(hc) == 0:
            n_empty += 1
            continue
        tree = cKDTree(pattern.coords[hc])
        assign = tree.query(pattern.coords, k=1)[1]
        cell_counts = np.bincount(assign, weights=pattern.mults,
                                  minlength=len(hc))
        centers = pattern.coords[hc]
        near = np.sum(centers ** 2, axis=1) < sel2
        for k in np.flatnonzero(near):
            w = float(cell_counts[k])
            num += w * count_in_ball(pattern, centers[k], h_radius)
            den += w
    if den == 0:
        raise RuntimeError("no hard-core centers fell in the selection ball")
    est_weighted = num / den
    rel_err = abs(est_direct - est_weighted) / abs(est_weighted)
    metrics = {"direct_estimate": est_direct,
               "weighted_estimate": est_weighted,
               "relative_error": rel_err}
    gates = {
        "estimators_agree": _gate(rel_err <= p["max_rel_err"],
                                  relative_error=rel_err),
    }
    diagnostics = {"direct_escape_rate": n_escaped / reps,
                   "weighted_empty_rate": n_empty / reps}
    return metrics, gates, diagnostics


_REGISTRY = {
    "quadrivoid-exact": _exp_quadrivoid_exact,
    "cesaro-invariance": _exp_cesaro_invariance,
    "mecke-lattice": _exp_mecke_lattice,
    "strip-gaps": _exp_strip_gaps,
    "strip-regen": _exp_strip_regen,
    "directional-regen": _exp_directional_regen,
    "mass-transport": _exp_mass_transport,
    "evaporation-marks": _exp_evaporation_marks,
    "condenser-tightness": _exp_condenser_tightness,
    "expander-delta": _exp_expander_delta,
    "hardcore-rn": _exp_hardcore_rn,
}

_DEFAULTS = {
    "quadrivoid-exact": {"n_max": 8, "cesaro_n": 1000},
    "cesaro-invariance": {
        "half_extent": 20.0, "safe_margin": 8.0,
        "replications": 9000, "cesaro_n": 1000,
    },
    "mecke-lattice": {
        "spacing": 1.0, "lattice_half": 30.0, "lattice_margin": 10.0,
        "half_extent": 20.0, "safe_margin": 8.0, "samples": 10000,
    },
    "strip-gaps": {
        "intensity": 1.0, "n_gaps": 5000,
        "mean_lo": 0.479, "mean_hi": 0.521,
    },
    "strip-regen": {
        "intensity": 1.0, "orbit_steps": 120000, "r": 1.0,
        "payload_radius": 1.0, "min_cycles": 2000,
        "ergodic_orbits": 16, "ergodic_steps": 1200,
    },
    "directional-regen": {
        "intensity": 1.0, "alpha": math.pi / 8, "r": 0.25,
        "orbit_steps": 3000, "min_cycles": 30, "max_mean_cycle": 10.0,
        "mc_slack": 0.001,
    },
    "mass-transport": {
        "intensity": 1.0, "half_extent": 10.0, "safe_margin": 4.5,
        "alpha": math.pi / 4, "n_list": (1, 2, 3),
        "replications": 10000, "ball_radius": 1.0, "ks_limit": 0.03,
    },
    "evaporation-marks": {
        "intensity": 1.0, "half_extent": 56.0, "safe_margin": 5.0,
        "k_max": 10, "min_safe_atoms": 10000,
    },
    "condenser-tightness": {
        "intensity": 4.0, "half_extent": 18.0, "safe_margin": 6.0,
        "replications": 500, "n_max": 4, "r_list": (1, 3, 7, 15),
        "profile_samples": 300,
    },
    "expander-delta": {
        "intensity": 0.05, "half_extent": 60.0, "safe_margin": 6.0,
        "replications": 2000, "n_list": (0, 2, 4, 6, 8),
        "void_radius": 5.0, "min_gain": 0.3,
    },
    "hardcore-rn": {
        "intensity": 1.0, "half_extent": 12.0, "safe_margin": 5.0,
        "replications": 10000, "h_radius": 2.0, "select_radius": 3.0,
        "max_rel_err": 0.05,
    },
}
