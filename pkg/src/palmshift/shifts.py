"""Point-shift families and their evaluation on finite patterns.

A point-shift maps every atom of a pattern to another atom of the same
pattern, falling back to the atom itself when no candidate exists.  The
families implemented here:

  identity     image = x
  strip        leftmost atom of the half-strip (x1, inf) x [x2 - w, x2 + w];
               in dimension 1 this degenerates to the successor map
  directional  nearest atom in the open cone of half-angle alpha around
               direction u (strict cosine comparison)
  condenser    nearest atom y with ball-count mark m_c(y) >= 2 m_c(x),
               where m_c(z) counts atoms in the open unit ball around z
               (z included)
  expander     nearest atom y with nearest-neighbor mark m_e(y) >= 2 m_e(x),
               where m_e(z) is the distance to the nearest other atom
               (+inf when z is the only atom)
  hardcore     nearest atom y, x itself allowed, with m_c(y) = 1
  quadrivoid   the local rule on integer-supported gap patterns in d=1,
               read off the missing offset among {x+1, x+2, x+3}

All argmins break ties lexicographically by coordinates, so scalar and
bulk evaluation agree exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .geometry import PointPattern, lex_argmin

_KINDS = ("identity", "strip", "directional", "condenser", "expander",
          "hardcore", "quadrivoid")

# O(N^2) pairwise kernels are used up to this atom count; larger patterns go
# through sorted-scan / kd-tree paths that return identical indices
_PAIRWISE_BULK_LIMIT = 3000
_PAIRWISE_MARK_LIMIT = 600

_QUADRIVOID_STEP = {3: 2.0, 2: 1.0, 1: -2.0}


@dataclass(frozen=True)
class PointShiftSpec:
    """Parameterization of one point-shift family.

    ``u`` and ``alpha`` are only meaningful for the directional kind;
    ``strip_half_width`` and ``core_radius`` default to the standard values
    1 and exist for sensitivity runs.
    """

    kind: str
    u: tuple = (1.0, 0.0)
    alpha: float = math.pi / 4
    strip_half_width: float = 1.0
    core_radius: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown point-shift kind {self.kind!r}")
        u = tuple(float(v) for v in self.u)
        object.__setattr__(self, "u", u)
        if self.kind == "directional":
            if abs(math.hypot(*u) - 1.0) > 1e-9:
                raise ValueError("direction u must be a unit vector")
            if not 0.0 < self.alpha <= math.pi / 2 + 1e-12:
                raise ValueError("alpha must lie in (0, pi/2]")
        if self.strip_half_width <= 0 or self.core_radius <= 0:
            raise ValueError("strip_half_width and core_radius must be positive")

    def to_config(self) -> str:
        if self.kind == "directional":
            u = ",".join(repr(v) for v in self.u)
            return f"directional:u={u}:alpha={self.alpha!r}"
        return self.kind

    @staticmethod
    def from_config(text: str) -> "PointShiftSpec":
        parts = text.strip().split(":")
        kind = parts[0]
        kwargs = {}
        for part in parts[1:]:
            key, _, value = part.partition("=")
            if key == "u":
                kwargs["u"] = tuple(float(v) for v in value.split(","))
            elif key == "alpha":
                kwargs["alpha"] = float(value)
            else:
                raise ValueError(f"unknown shift parameter {key!r}")
        return PointShiftSpec(kind, **kwargs)


class BoundShift:
    """A point-shift bound to one pattern, with cached per-pattern marks.

    Exposes atom-index arithmetic: ``image_index`` gives the image of one
    atom, ``image_all`` the whole index map, and ``step_ok`` reports
    whether the geometric query behind a step fit inside the window (the
    escape check used by orbit iteration).
    """

    def __init__(self, spec: PointShiftSpec, pattern: PointPattern):
        if spec.kind == "quadrivoid" and pattern.dim != 1:
            raise ValueError("quadrivoid shift requires dimension 1")
        if spec.kind == "directional":
            if len(spec.u) != pattern.dim:
                raise ValueError("direction u has wrong dimension")
        self.spec = spec
        self.pattern = pattern
        self._mc = None
        self._me = None

    # ---- per-pattern marks -------------------------------------------

    def ball_counts(self) -> np.ndarray:
        """m_c: total multiplicity in the open core ball around each atom."""
        if self._mc is None:
            r = self.spec.core_radius
            c, m = self.pattern.coords, self.pattern.mults
            n = len(c)
            if n <= _PAIRWISE_MARK_LIMIT:
                d2 = _pairwise_d2(c)
                mc = (d2 < r * r) @ m
            else:
                tree = cKDTree(c)
                pairs = tree.query_pairs(r, output_type="ndarray")
                if len(pairs):
                    diff = c[pairs[:, 0]] - c[pairs[:, 1]]
                    pairs = pairs[np.einsum("ij,ij->i", diff, diff) < r * r]
                mc = m.astype(np.int64).copy()
                np.add.at(mc, pairs[:, 0], m[pairs[:, 1]])
                np.add.at(mc, pairs[:, 1], m[pairs[:, 0]])
            self._mc = mc
        return self._mc

    def nn_dists(self) -> np.ndarray:
        """m_e: distance from each atom to its nearest distinct atom."""
        if self._me is None:
            c = self.pattern.coords
            n = len(c)
            if n <= 1:
                me = np.full(n, np.inf)
            elif n <= _PAIRWISE_MARK_LIMIT:
                d2 = _pairwise_d2(c)
                np.fill_diagonal(d2, np.inf)
                me = np.sqrt(d2.min(axis=1))
            else:
                me = cKDTree(c).query(c, k=2)[0][:, 1]
            self._me = me
        return self._me

    # ---- single-atom image -------------------------------------------

    def image_index(self, i: int):
        """(image index, found flag); not-found falls back to i itself."""
        kind = self.spec.kind
        if kind == "identity":
            return i, True
        if kind == "quadrivoid":
            return self._quadrivoid_image(i)
        c = self.pattern.coords
        x = c[i]
        if kind == "strip":
            if self.pattern.dim == 1:
                cand = c[:, 0] > x[0]
                keys = (c[:, 0],)
            else:
                hw = self.spec.strip_half_width
                cand = (c[:, 0] > x[0]) & (np.abs(c[:, 1] - x[1]) <= hw)
                keys = (c[:, 0], c[:, 1])
        else:
            d2 = np.einsum("ij,ij->i", c - x, c - x)
            if kind == "directional":
                proj = (c - x) @ np.asarray(self.spec.u)
                cand = (d2 > 0) & (proj > math.cos(self.spec.alpha) * np.sqrt(d2))
            elif kind == "condenser":
                mc = self.ball_counts()
                cand = mc >= 2 * mc[i]
                cand = cand.copy()
                cand[i] = False
            elif kind == "expander":
                me = self.nn_dists()
                cand = me >= 2.0 * me[i]
                cand = cand.copy()
                cand[i] = False
            else:  # hardcore; x itself is allowed
                cand = self.ball_counts() == 1
            keys = (d2,) + tuple(c[:, k] for k in range(self.pattern.dim))
        if not cand.any():
            return i, False
        return lex_argmin(cand, *keys), True

    def _quadrivoid_image(self, i: int):
        x = float(self.pattern.coords[i, 0])
        missing = [o for o in (1, 2, 3) if self._atom_near(x + o) < 0]
        if len(missing) != 1:
            return i, False
        j = self._atom_near(x + _QUADRIVOID_STEP[missing[0]])
        if j < 0:
            return i, False
        return j, True

    def _atom_near(self, value: float) -> int:
        """Index of the d=1 atom within 1e-9 of value, or -1."""
        xs = self.pattern.coords[:, 0]
        if len(xs) == 0:
            return -1
        j = int(np.argmin(np.abs(xs - value)))
        return j if abs(xs[j] - value) < 1e-9 else -1

    # ---- escape check ------------------------------------------------

    def step_ok(self, i: int, j: int, found: bool) -> bool:
        """Whether the query region behind step i -> j fit in the window.

        Strip and directional steps need the searched region up to the
        image inside the window; hard-core additionally distrusts the
        fallback (a hard-core point always exists in the infinite
        process).  Condenser and expander fallbacks are trusted: their
        doubling targets genuinely thin out, and a missed far-away
        candidate would require an unseen cluster right at the boundary.
        """
        spec = self.spec
        w = self.pattern.window
        kind = spec.kind
        x = self.pattern.coords[i]
        if kind == "identity":
            return True
        if kind == "quadrivoid":
            return w.contains_box((x[0] - 2.0,), (x[0] + 3.0,))
        if kind == "strip":
            if not found:
                return False
            y = self.pattern.coords[j]
            if self.pattern.dim == 1:
                return w.contains_box((x[0],), (y[0],))
            hw = spec.strip_half_width
            return w.contains_box(
                (x[0], x[1] - hw), (y[0], x[1] + hw)
            )
        if kind == "directional":
            if not found:
                return False
            d = float(np.linalg.norm(self.pattern.coords[j] - x))
            return w.contains_ball(x, d)
        if kind == "condenser":
            if not found:
                return True
            d = float(np.linalg.norm(self.pattern.coords[j] - x))
            return w.contains_ball(x, d + spec.core_radius)
        if kind == "expander":
            if not found:
                return True
            d = float(np.linalg.norm(self.pattern.coords[j] - x))
            me_x = float(self.nn_dists()[i])
            return w.contains_ball(x, max(d, me_x))
        # hardcore
        if not found:
            return False
        d = float(np.linalg.norm(self.pattern.coords[j] - x))
        return w.contains_ball(x, d + spec.core_radius)

    def image_checked(self, i: int):
        """(image index, found flag, escape-check flag) for atom i."""
        j, found = self.image_index(i)
        return j, found, self.step_ok(i, j, found)

    # ---- whole-pattern image -----------------------------------------

    def image_all(self):
        """Index map of the shift over all atoms: (indices, found flags)."""
        n = self.pattern.n_atoms
        kind = self.spec.kind
        if kind == "identity" or n == 0:
            return np.arange(n), np.ones(n, dtype=bool)
        if kind == "quadrivoid":
            return self._image_all_scalar()
        if n <= _PAIRWISE_BULK_LIMIT:
            return self._image_all_pairwise()
        if kind == "strip" and self.pattern.dim == 2:
            return self._image_all_strip_scan()
        if kind == "hardcore":
            return self._image_all_hardcore_tree()
        return self._image_all_scalar()

    def _image_all_scalar(self):
        n = self.pattern.n_atoms
        idx = np.arange(n)
        found = np.zeros(n, dtype=bool)
        for i in range(n):
            idx[i], found[i] = self.image_index(i)
        return idx, found

    def _image_all_pairwise(self):
        c = self.pattern.coords
        n = self.pattern.n_atoms
        kind = self.spec.kind
        if kind == "strip":
            xs = c[:, 0]
            cand = xs[None, :] > xs[:, None]
            if self.pattern.dim == 1:
                keys = (xs,)
            else:
                hw = self.spec.strip_half_width
                cand &= np.abs(c[:, 1][None, :] - c[:, 1][:, None]) <= hw
                keys = (xs, c[:, 1])
        else:
            diffs = c[None, :, :] - c[:, None, :]
            d2 = np.einsum("ijk,ijk->ij", diffs, diffs)
            if kind == "directional":
                proj = diffs @ np.asarray(self.spec.u)
                cand = (d2 > 0) & (proj > math.cos(self.spec.alpha) * np.sqrt(d2))
            elif kind == "condenser":
                mc = self.ball_counts()
                cand = mc[None, :] >= 2 * mc[:, None]
                np.fill_diagonal(cand, False)
            elif kind == "expander":
                me = self.nn_dists()
                cand = me[None, :] >= 2.0 * me[:, None]
                np.fill_diagonal(cand, False)
            else:  # hardcore
                cand = np.broadcast_to(self.ball_counts() == 1, (n, n)).copy()
            keys = (d2,) + tuple(c[:, k] for k in range(self.pattern.dim))
        return _masked_lex_argmin_rows(cand, keys)

    def _image_all_strip_scan(self):
        """Leftmost-in-strip via one pass over the x-sorted atom order."""
        c = self.pattern.coords
        n = self.pattern.n_atoms
        hw = self.spec.strip_half_width
        order = np.lexsort((c[:, 1], c[:, 0]))
        xs = c[order, 0]
        ys = c[order, 1]
        idx = np.arange(n)
        found = np.zeros(n, dtype=bool)
        for p in range(n):
            q = p + 1
            while q < n and xs[q] <= xs[p]:
                q += 1
            while q < n:
                if abs(ys[q] - ys[p]) <= hw:
                    idx[order[p]] = order[q]
                    found[order[p]] = True
                    break
                q += 1
        return idx, found

    def _image_all_hardcore_tree(self):
        c = self.pattern.coords
        n = self.pattern.n_atoms
        idx = np.arange(n)
        hc = np.flatnonzero(self.ball_counts() == 1)
        if len(hc) == 0:
            return idx, np.zeros(n, dtype=bool)
        tree = cKDTree(c[hc])
        dist = tree.query(c, k=1)[0]
        near = tree.query_ball_point(c, r=dist + 1e-9)
        for i in range(n):
            sub = hc[np.asarray(near[i], dtype=int)]
            d2 = np.einsum("ij,ij->i", c[sub] - c[i], c[sub] - c[i])
            keys = (d2,) + tuple(c[sub, k] for k in range(self.pattern.dim))
            idx[i] = sub[lex_argmin(np.ones(len(sub), dtype=bool), *keys)]
        return idx, np.ones(n, dtype=bool)


def _pairwise_d2(c: np.ndarray) -> np.ndarray:
    diffs = c[None, :, :] - c[:, None, :]
    return np.einsum("ijk,ijk->ij", diffs, diffs)


def _masked_lex_argmin_rows(cand: np.ndarray, keys):
    """Row-wise argmin under a candidate mask with lexicographic keys.

    Stage-by-stage refinement: keep the candidates minimizing the first
    key, break remaining ties with the next, and so on.  Rows without any
    candidate map to themselves with found = False.
    """
    alive = cand
    for k in keys:
        k = np.asarray(k, dtype=float)
        if k.ndim == 1:
            k = np.broadcast_to(k, alive.shape)
        vals = np.where(alive, k, np.inf)
        best = vals.min(axis=1)
        alive = alive & (vals == best[:, None])
    found = alive.any(axis=1)
    idx = np.argmax(alive, axis=1)
    idx[~found] = np.flatnonzero(~found)
    return idx, found


def apply(spec: PointShiftSpec, pattern: PointPattern, x) -> np.ndarray:
    """Image of the atom at x; x itself when no candidate exists."""
    i = pattern.index_of(x)
    j, _ = BoundShift(spec, pattern).image_index(i)
    return pattern.coords[j].copy()


def point_map(spec: PointShiftSpec, pattern: PointPattern) -> np.ndarray:
    """Image of the origin atom (the point-map g evaluated at the pattern)."""
    pattern.require_origin()
    return apply(spec, pattern, np.zeros(pattern.dim))


def aggregate_image(pattern: PointPattern, idx: np.ndarray) -> PointPattern:
    """Pattern supported on the image atoms with summed multiplicities."""
    mass = np.zeros(pattern.n_atoms, dtype=np.int64)
    np.add.at(mass, idx, pattern.mults)
    keep = mass > 0
    return PointPattern(
        pattern.window, pattern.coords[keep], mass[keep], check=False
    )


def image_pattern(spec: PointShiftSpec, pattern: PointPattern) -> PointPattern:
    """One application of the shift to every atom, multiplicities summed."""
    idx, _ = BoundShift(spec, pattern).image_all()
    return aggregate_image(pattern, idx)
