"""Acceptance gate: one test and one printed pass/fail line per criterion.

Criteria 1 to 10 run the corresponding named experiment once at seed 1
and inspect its gates and metrics. Criterion 11 is a randomized property
suite over 100 instances per structural property.
"""
import math
import sys
from fractions import Fraction

import numpy as np
import pytest

from palmshift.dynamics import iterate_orbit, preimage_orders
from palmshift.experiments import ExperimentConfig, run_experiment
from palmshift.generators import ProcessSpec, sample_stationary
from palmshift.geometry import PointPattern, Window, translate
from palmshift.palm import SummaryVector, collect_law
from palmshift.quadrivoid_exact import cesaro_distribution, nth_distribution
from palmshift.rng import RngStream
from palmshift.shifts import BoundShift, PointShiftSpec, image_pattern

SEED = 1

_reports = {}


def report_for(name):
    if name not in _reports:
        _reports[name] = run_experiment(ExperimentConfig(name, seed=SEED))
    return _reports[name]


def announce(number, label, ok):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE criterion {number:02d} {label}: {status}",
          file=sys.stderr, flush=True)
    assert ok, f"criterion {number} ({label}) failed"


def gates_pass(report, names):
    return all(report.gates[n]["passed"] for n in names)


def test_criterion_01_quadrivoid_exact_values():
    report = report_for("quadrivoid-exact")
    odd = nth_distribution(3)
    even = nth_distribution(4)
    ces = cesaro_distribution(1000)
    exact_ok = (
        (odd[1], odd[3]) == (Fraction(1, 3), Fraction(2, 3))
        and (even[1], even[3]) == (Fraction(2, 3), Fraction(1, 3))
        and abs(ces[1] - Fraction(1, 2)) <= Fraction(1, 1000)
        and ces[2] <= Fraction(1, 1000)
        and abs(ces[3] - Fraction(1, 2)) <= Fraction(1, 1000)
    )
    ok = exact_ok and report.passed
    announce(1, "quadrivoid-exact-values", ok)


def test_criterion_02_quadrivoid_mc_vs_exact():
    report = report_for("cesaro-invariance")
    ok = gates_pass(report, [f"iterate_{n}_matches_exact" for n in (1, 2, 3)])
    announce(2, "quadrivoid-mc-vs-exact", ok)


def test_criterion_03_strip_gap_law():
    report = report_for("strip-gaps")
    mean = report.metrics["gap_mean"]
    ok = (
        0.479 <= mean <= 0.521
        and gates_pass(report, ["gap_mean_near_half", "gaps_exponential_ks"])
    )
    announce(3, "strip-gap-law", ok)


def test_criterion_04_regenerative_consistency():
    report = report_for("strip-regen")
    ok = (
        report.metrics["n_cycles"] >= 2000
        and gates_pass(report, ["enough_cycles", "averages_ci_overlap"])
    )
    announce(4, "regenerative-consistency", ok)


def test_criterion_05_mass_transport_equivalence():
    report = report_for("mass-transport")
    ks = report.metrics["ks"]
    ok = (
        all(v < 0.03 for v in ks.values())
        and len(ks) == 6
        and report.passed
    )
    announce(5, "mass-transport-equivalence", ok)


def test_criterion_06_mecke_invariance():
    report = report_for("mecke-lattice")
    ok = (
        report.metrics["lattice_gap_n0"] < 0.02
        and report.metrics["quadrivoid_gap_n5"] > 0.2
        and report.metrics["quadrivoid_gap_n6"] > 0.2
        and report.passed
    )
    announce(6, "mecke-invariance", ok)


def test_criterion_07_condenser_blowup():
    report = report_for("condenser-tightness")
    ok = (
        report.metrics["doubling_violations"] == 0
        and gates_pass(report, ["doubling_along_orbits", "tightness_suspect"])
    )
    announce(7, "condenser-blowup", ok)


def test_criterion_08_expander_concentration():
    report = report_for("expander-delta")
    probs = report.metrics["void_probs"]
    ok = (
        probs[-1] - probs[0] >= 0.3
        and gates_pass(report, ["void_prob_nondecreasing", "void_prob_gain"])
    )
    announce(8, "expander-concentration", ok)


def test_criterion_09_evaporation_vs_periodicity():
    report = report_for("evaporation-marks")
    strip = report.metrics["strip_fractions"]
    hc = report.metrics["hardcore_fractions"]
    ok = (
        report.metrics["n_safe_atoms"] >= 10000
        and strip[9] < strip[0] - 0.05
        and hc[9] >= hc[1] - 0.02
        and report.passed
    )
    announce(9, "evaporation-vs-periodicity", ok)


def test_criterion_10_hardcore_radon_nikodym():
    report = report_for("hardcore-rn")
    ok = report.metrics["relative_error"] <= 0.05 and report.passed
    announce(10, "hardcore-radon-nikodym", ok)


# ---------------------------------------------------------------------------
# criterion 11: structural property suite, 100 randomized instances each


N_INSTANCES = 100

PROPERTY_KINDS = ("strip", "directional", "condenser", "expander", "hardcore")


def random_pattern(stream, half=6.0, margin=2.0):
    proc = ProcessSpec("poisson", 2, 1.0)
    window = Window((0.0, 0.0), (half, half), margin)
    return sample_stationary(proc, window, stream)


def random_spec(stream):
    gen = stream.generator()
    kind = PROPERTY_KINDS[int(gen.integers(0, len(PROPERTY_KINDS)))]
    if kind == "directional":
        phi = gen.uniform(0.0, 2.0 * math.pi)
        return PointShiftSpec("directional", u=(math.cos(phi), math.sin(phi)),
                              alpha=gen.uniform(0.2, math.pi / 2))
    return PointShiftSpec(kind)


def check_compatibility(stream):
    """Shift images commute with translating the whole pattern."""
    pat = random_pattern(stream.child(0))
    if pat.n_atoms < 2:
        return True
    spec = random_spec(stream.child(1))
    gen = stream.child(2).generator()
    t = gen.uniform(-3.0, 3.0, size=2)
    moved = translate(pat, t)
    idx_a, found_a = BoundShift(spec, pat).image_all()
    idx_b, found_b = BoundShift(spec, moved).image_all()
    return np.array_equal(idx_a, idx_b) and np.array_equal(found_a, found_b)


def check_compatibility_quadrivoid(stream):
    """The d=1 local rule commutes with integer translations."""
    gen = stream.generator()
    window = Window((0.0,), (30.0,), 8.0)
    missing = int(gen.integers(1, 4))
    shift_by = float(gen.integers(-4, 5))
    pts = [float(m) for m in range(-30, 31) if (m - missing) % 4 != 0]
    pat = PointPattern(window, np.array(pts).reshape(-1, 1))
    moved = translate(pat, (shift_by,))
    spec = PointShiftSpec("quadrivoid")
    idx_a, _ = BoundShift(spec, pat).image_all()
    idx_b, _ = BoundShift(spec, moved).image_all()
    core = np.abs(pat.coords[:, 0]) <= 20.0  # away from both truncations
    return np.array_equal(idx_a[core], idx_b[core])


def check_semigroup(stream):
    """Restarting the orbit at X_m reproduces X_{m+n}."""
    pat = random_pattern(stream.child(0), half=10.0)
    if pat.n_atoms < 3:
        return True
    spec = random_spec(stream.child(1))
    gen = stream.child(2).generator()
    i = int(gen.integers(0, pat.n_atoms))
    orbit = iterate_orbit(spec, pat, pat.coords[i], 5)
    m = min(2, orbit.steps_computed)
    n = min(2, orbit.steps_computed - m)
    restart = iterate_orbit(spec, pat, orbit.point_at(m), n)
    return np.allclose(restart.point_at(n), orbit.point_at(m + n))


def check_mass_conservation(stream):
    pat = random_pattern(stream.child(0))
    if pat.n_atoms == 0:
        return True
    spec = random_spec(stream.child(1))
    out = image_pattern(spec, pat)
    return out.total_mass == pat.total_mass and np.all(out.mults >= 1)


def check_preimage_monotonicity(stream):
    """Order-k survivor sets are nested in k."""
    pat = random_pattern(stream.child(0), half=8.0, margin=2.0)
    if pat.n_atoms < 3:
        return True
    spec = random_spec(stream.child(1))
    table = preimage_orders(spec, pat, k_max=6)
    fracs = [table.survivor_fraction(k) for k in range(7)]
    nested = all(a >= b for a, b in zip(fracs, fracs[1:]))
    bounded = np.all(table.max_order <= 6) and np.all(table.max_order >= -1)
    return nested and bounded


def check_parallel_determinism(stream):
    def sampler(s):
        gen = s.generator()
        return SummaryVector(tuple(gen.uniform(size=4)),
                             tuple(gen.uniform(size=5)), 1)

    a = collect_law(sampler, 12, stream, workers=1)
    b = collect_law(sampler, 12, stream, workers=4)
    return np.array_equal(a.matrix(), b.matrix())


def test_criterion_11_structural_properties():
    root = RngStream(SEED, (11,))
    checks = {
        "compatibility": check_compatibility,
        "compatibility_quadrivoid": check_compatibility_quadrivoid,
        "semigroup": check_semigroup,
        "mass_conservation": check_mass_conservation,
        "preimage_monotonicity": check_preimage_monotonicity,
        "parallel_determinism": check_parallel_determinism,
    }
    failures = {}
    for pi, (name, check) in enumerate(checks.items()):
        bad = [
            i for i in range(N_INSTANCES)
            if not check(root.child(pi, i))
        ]
        if bad:
            failures[name] = bad
    announce(11, "structural-properties", not failures)
    assert not failures, failures
