import math

import numpy as np
import pytest

from palmshift.generators import ProcessSpec, sample_palm, sample_stationary
from palmshift.geometry import PointPattern, Window
from palmshift.rng import RngStream
from palmshift.shifts import (
    BoundShift,
    PointShiftSpec,
    aggregate_image,
    apply,
    image_pattern,
    point_map,
)


def make_pattern(coords, mults=None, half=20.0, margin=0.0):
    coords = np.atleast_2d(np.asarray(coords, dtype=float))
    dim = coords.shape[1]
    window = Window((0.0,) * dim, (half,) * dim, margin)
    return PointPattern(window, coords, mults)


def brute_marks(pattern, core_radius=1.0):
    """Reference marks by direct double loops over the atom list."""
    c = pattern.coords
    m = pattern.mults
    n = len(c)
    mc = [
        sum(int(m[k]) for k in range(n)
            if np.linalg.norm(c[k] - c[j]) < core_radius)
        for j in range(n)
    ]
    me = [
        min(
            (np.linalg.norm(c[k] - c[j]) for k in range(n) if k != j),
            default=np.inf,
        )
        for j in range(n)
    ]
    return mc, me


def brute_image(spec, pattern, i, marks=None):
    """Reference one-atom image by direct enumeration of the definitions."""
    c = pattern.coords
    n = len(c)
    x = c[i]
    kind = spec.kind
    if kind == "identity":
        return i, True
    cands = []
    if kind == "strip":
        for j in range(n):
            if c[j, 0] <= x[0]:
                continue
            if pattern.dim == 2 and abs(c[j, 1] - x[1]) > spec.strip_half_width:
                continue
            cands.append((tuple(c[j]), j))
    elif kind == "directional":
        for j in range(n):
            v = c[j] - x
            d = np.linalg.norm(v)
            if d > 0 and v @ np.asarray(spec.u) > math.cos(spec.alpha) * d:
                cands.append((d * d, *c[j], j))
    else:
        mc, me = brute_marks(pattern, spec.core_radius) if marks is None else marks
        for j in range(n):
            d = np.linalg.norm(c[j] - x)
            if kind == "condenser":
                ok = j != i and mc[j] >= 2 * mc[i]
            elif kind == "expander":
                ok = j != i and me[j] >= 2.0 * me[i]
            elif kind == "hardcore":
                ok = mc[j] == 1
            else:
                raise ValueError(kind)
            if ok:
                cands.append((d * d, *c[j], j))
    if not cands:
        return i, False
    return min(cands)[-1], True


ALL_KINDS = ("strip", "directional", "condenser", "expander", "hardcore")


def test_spec_validation():
    with pytest.raises(ValueError):
        PointShiftSpec("mystery")
    with pytest.raises(ValueError):
        PointShiftSpec("directional", u=(2.0, 0.0))
    with pytest.raises(ValueError):
        PointShiftSpec("directional", alpha=0.0)
    with pytest.raises(ValueError):
        PointShiftSpec("strip", strip_half_width=0.0)


def test_spec_config_round_trip():
    for spec in (
        PointShiftSpec("strip"),
        PointShiftSpec("hardcore"),
        PointShiftSpec("directional", u=(0.6, 0.8), alpha=0.3),
    ):
        assert PointShiftSpec.from_config(spec.to_config()) == spec


def test_identity_maps_every_atom_to_itself():
    pat = make_pattern([(0.0, 0.0), (1.0, 1.0)])
    idx, found = BoundShift(PointShiftSpec("identity"), pat).image_all()
    assert np.array_equal(idx, [0, 1])
    assert found.all()


def test_strip_picks_leftmost_in_band():
    pat = make_pattern([(0.0, 0.0), (2.0, 0.5), (1.0, 0.9), (1.5, 3.0)])
    j, found = BoundShift(PointShiftSpec("strip"), pat).image_index(0)
    assert found and j == 2  # x=1.0 beats x=2.0; the y=3.0 atom is out of band


def test_strip_one_dimensional_successor():
    pat = make_pattern([(0.0,), (-1.0,), (0.7,), (2.0,)])
    j, found = BoundShift(PointShiftSpec("strip"), pat).image_index(0)
    assert found and j == 2


def test_strip_no_candidate_falls_back():
    pat = make_pattern([(0.0, 0.0), (-1.0, 0.0)])
    j, found = BoundShift(PointShiftSpec("strip"), pat).image_index(0)
    assert j == 0 and not found


def test_directional_strict_cone():
    spec = PointShiftSpec("directional", u=(1.0, 0.0), alpha=math.pi / 4)
    # the atom at exactly 45 degrees is outside the open cone
    pat = make_pattern([(0.0, 0.0), (1.0, 1.0), (3.0, 0.1)])
    j, found = BoundShift(spec, pat).image_index(0)
    assert found and j == 2


def test_condenser_needs_doubled_ball_count():
    pat = make_pattern(
        [(0.0, 0.0), (4.0, 0.0), (4.3, 0.0), (4.6, 0.0), (9.0, 0.0)]
    )
    bound = BoundShift(PointShiftSpec("condenser"), pat)
    assert np.array_equal(bound.ball_counts(), [1, 3, 3, 3, 1])
    j, found = bound.image_index(0)
    assert found and j == 1
    # atoms in the cluster have no doubled target anywhere
    j, found = bound.image_index(2)
    assert j == 2 and not found


def test_expander_needs_doubled_nn_distance():
    pat = make_pattern([(0.0,), (0.5,), (4.0,), (10.0,)])
    bound = BoundShift(PointShiftSpec("expander"), pat)
    assert np.allclose(bound.nn_dists(), [0.5, 0.5, 3.5, 6.0])
    j, found = bound.image_index(0)
    assert found and j == 2  # nearest atom with nn distance >= 1.0


def test_expander_sole_atom_mark_is_infinite():
    pat = make_pattern([(1.0, 2.0)])
    bound = BoundShift(PointShiftSpec("expander"), pat)
    assert np.isinf(bound.nn_dists()[0])


def test_hardcore_allows_self():
    pat = make_pattern([(0.0, 0.0), (5.0, 0.0), (5.3, 0.0)])
    bound = BoundShift(PointShiftSpec("hardcore"), pat)
    j, found = bound.image_index(0)
    assert found and j == 0
    j, found = bound.image_index(1)
    assert found and j == 0


def test_hardcore_no_isolated_atom():
    pat = make_pattern([(0.0, 0.0), (0.5, 0.0)])
    j, found = BoundShift(PointShiftSpec("hardcore"), pat).image_index(0)
    assert j == 0 and not found


def test_quadrivoid_rule():
    window = Window((0.0,), (12.0,), 1.0)
    spec = PointShiftSpec("quadrivoid")
    # missing offset 3 -> jump +2; missing 2 -> +1; missing 1 -> -2
    for missing, step in ((3, 2.0), (2, 1.0), (1, -2.0)):
        pts = [float(m) for m in range(-12, 13) if (m - missing) % 4 != 0]
        pat = PointPattern(window, np.array(pts).reshape(-1, 1))
        assert np.allclose(apply(spec, pat, (0.0,)), [step])


def test_quadrivoid_requires_dimension_one():
    pat = make_pattern([(0.0, 0.0)])
    with pytest.raises(ValueError):
        BoundShift(PointShiftSpec("quadrivoid"), pat)


def test_scalar_and_bulk_agree_with_brute_force():
    rng = RngStream(11)
    proc = ProcessSpec("poisson", 2, 1.0)
    window = Window((0.0, 0.0), (4.0, 4.0))
    for trial in range(10):
        pat = sample_stationary(proc, window, rng.child(trial))
        if pat.n_atoms < 2:
            continue
        marks = brute_marks(pat)
        for kind in ALL_KINDS:
            spec = PointShiftSpec(kind)
            bound = BoundShift(spec, pat)
            idx, found = bound.image_all()
            for i in range(pat.n_atoms):
                jb, fb = brute_image(spec, pat, i, marks=marks)
                js, fs = bound.image_index(i)
                assert (js, fs) == (jb, fb), (kind, trial, i)
                assert (idx[i], found[i]) == (jb, fb), (kind, trial, i)


def test_bulk_strip_scan_matches_pairwise():
    rng = RngStream(21)
    proc = ProcessSpec("poisson", 2, 1.0)
    window = Window((0.0, 0.0), (40.0, 40.0))
    pat = sample_stationary(proc, window, rng.child(0))
    assert pat.n_atoms > 3000  # forces the sorted-scan path
    bound = BoundShift(PointShiftSpec("strip"), pat)
    idx, found = bound._image_all_strip_scan()
    idx2, found2 = bound._image_all_pairwise()
    assert np.array_equal(idx, idx2)
    assert np.array_equal(found, found2)


def test_bulk_hardcore_tree_matches_pairwise():
    rng = RngStream(22)
    proc = ProcessSpec("poisson", 2, 1.0)
    window = Window((0.0, 0.0), (40.0, 40.0))
    pat = sample_stationary(proc, window, rng.child(0))
    bound = BoundShift(PointShiftSpec("hardcore"), pat)
    idx, found = bound._image_all_hardcore_tree()
    idx2, found2 = bound._image_all_pairwise()
    assert np.array_equal(idx, idx2)
    assert np.array_equal(found, found2)


def test_tree_marks_match_pairwise_marks():
    rng = RngStream(23)
    proc = ProcessSpec("poisson", 2, 2.0)
    window = Window((0.0, 0.0), (15.0, 15.0))
    pat = sample_stationary(proc, window, rng.child(0))
    assert pat.n_atoms > 600  # forces kd-tree mark computation
    spec = PointShiftSpec("condenser")
    tree_bound = BoundShift(spec, pat)
    mc_tree = tree_bound.ball_counts()
    me_tree = tree_bound.nn_dists()
    import palmshift.shifts as shifts_mod

    old = shifts_mod._PAIRWISE_MARK_LIMIT
    shifts_mod._PAIRWISE_MARK_LIMIT = 10 ** 9
    try:
        pw_bound = BoundShift(spec, pat)
        assert np.array_equal(mc_tree, pw_bound.ball_counts())
        assert np.allclose(me_tree, pw_bound.nn_dists())
    finally:
        shifts_mod._PAIRWISE_MARK_LIMIT = old


def test_point_map_requires_origin():
    pat = make_pattern([(1.0, 0.0)])
    with pytest.raises(ValueError):
        point_map(PointShiftSpec("strip"), pat)


def test_point_map_evaluates_at_origin():
    pat = make_pattern([(0.0, 0.0), (2.0, 0.3)])
    assert np.allclose(point_map(PointShiftSpec("strip"), pat), [2.0, 0.3])


def test_image_pattern_conserves_mass():
    rng = RngStream(14)
    proc = ProcessSpec("poisson", 2, 1.0)
    window = Window((0.0, 0.0), (8.0, 8.0))
    for trial in range(10):
        pat = sample_stationary(proc, window, rng.child(trial))
        if pat.n_atoms == 0:
            continue
        for kind in ALL_KINDS:
            out = image_pattern(PointShiftSpec(kind), pat)
            assert out.total_mass == pat.total_mass


def test_aggregate_image_sums_multiplicities():
    pat = make_pattern([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], mults=[1, 2, 4])
    out = aggregate_image(pat, np.array([2, 2, 0]))
    assert out.n_atoms == 2
    assert out.multiplicity_at((0.0, 0.0)) == 4
    assert out.multiplicity_at((2.0, 0.0)) == 3


def test_step_ok_strip_needs_searched_box_inside_window():
    window = Window((0.0, 0.0), (5.0, 5.0))
    pat = PointPattern(window, [(4.0, 0.0), (4.9, 0.0)])
    bound = BoundShift(PointShiftSpec("strip"), pat)
    j, found = bound.image_index(0)
    assert found and j == 1
    assert bound.step_ok(0, j, found)  # band [4, 4.9] x [-1, 1] fits
    pat2 = PointPattern(window, [(4.0, 4.5), (4.9, 4.5)])
    bound2 = BoundShift(PointShiftSpec("strip"), pat2)
    j2, found2 = bound2.image_index(0)
    assert not bound2.step_ok(0, j2, found2)  # band sticks out the top


def test_step_ok_fallback_policy_by_kind():
    window = Window((0.0, 0.0), (5.0, 5.0))
    pat = PointPattern(window, [(0.0, 0.0), (0.5, 0.0)])
    cases = {"strip": False, "directional": False, "hardcore": False,
             "condenser": True, "expander": True}
    for kind, trusted in cases.items():
        spec = (PointShiftSpec(kind, u=(0.0, 1.0))
                if kind == "directional" else PointShiftSpec(kind))
        bound = BoundShift(spec, pat)
        i = 1 if kind in ("strip", "condenser") else 0
        j, found = bound.image_index(i)
        assert not found, kind
        assert bound.step_ok(i, j, found) is trusted, kind


def test_step_ok_hardcore_pads_by_core_radius():
    window = Window((0.0, 0.0), (5.0, 5.0))
    pat = PointPattern(window, [(0.0, 0.0), (4.2, 0.0)])
    bound = BoundShift(PointShiftSpec("hardcore"), pat)
    j, found = bound.image_index(1)
    assert found and j == 1
    # ball of radius 0 + core radius 1 around (4.2, 0) leaves the window
    assert not bound.step_ok(1, j, found)


def test_lex_tie_break_matches_between_paths():
    # four isolated atoms at distance 2 from the clustered pair force a
    # tie on squared distance for the hard-core target
    pat = make_pattern(
        [(0.0, 0.0), (0.5, 0.0), (2.0, 0.0), (-2.0, 0.0), (0.0, 2.0),
         (0.0, -2.0)]
    )
    spec = PointShiftSpec("hardcore")
    bound = BoundShift(spec, pat)
    j, found = bound.image_index(0)
    idx, _ = bound._image_all_pairwise()
    assert found
    assert idx[0] == j == 3  # smallest x, then smallest y
