"""Discretized Ahlfors-regular sets as weighted atom clouds.

An atom cloud is produced from an equal-ratio iterated function system,
carries exact rational coordinates alongside the float view, and exposes
the sup-metric distance queries (both fast float and exact rational) that
the geometric constructions are built on.
"""

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import (
    DimensionError,
    GeometryError,
    OpenSetConditionError,
)
from .geometry import Cube

_BAND = 1e-9


def _frac(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(v)  # exact binary value of the float


@dataclass
class IfsSpec:
    """Equal-ratio contracting similarity system x -> ratio * x + t.

    maps is a list of (ratio, translation) pairs; all ratios must be equal
    and the first-generation images of the unit cube must have pairwise
    disjoint interiors.  The similarity dimension log(m)/log(1/ratio) must
    lie strictly between n-1 and n.
    """

    n: int
    maps: list
    depth: int

    def __post_init__(self):
        self.maps = [
            (_frac(r), tuple(_frac(c) for c in t)) for r, t in self.maps
        ]
        ratios = {r for r, _ in self.maps}
        if len(ratios) != 1:
            raise GeometryError("all similarity ratios must be equal")
        (self.ratio,) = ratios
        if not (0 < self.ratio < 1):
            raise GeometryError("ratio must lie in (0, 1)")
        if self.depth < 0:
            raise GeometryError("depth must be >= 0")
        self._check_open_set_condition()
        d = self.dimension
        if not (self.n - 1 < d < self.n):
            raise DimensionError(
                f"similarity dimension {d:.4f} outside ({self.n - 1}, {self.n})"
            )

    @property
    def m(self):
        return len(self.maps)

    @property
    def dimension(self):
        return math.log(self.m) / math.log(1.0 / float(self.ratio))

    def _check_open_set_condition(self):
        # first-generation images of the unit cube, exact interiors
        rho = self.ratio
        boxes = [tuple((t[i], t[i] + rho) for i in range(self.n)) for _, t in self.maps]
        for a in range(len(boxes)):
            for b in range(a + 1, len(boxes)):
                if all(
                    max(boxes[a][i][0], boxes[b][i][0]) < min(boxes[a][i][1], boxes[b][i][1])
                    for i in range(self.n)
                ):
                    raise OpenSetConditionError(
                        f"images of maps {a} and {b} overlap on an open set"
                    )

    @classmethod
    def equal_ratio(cls, n, ratio, translations, depth):
        ratio = _frac(ratio)
        return cls(n=n, maps=[(ratio, tuple(t)) for t in translations], depth=depth)


def four_corner_cantor(depth, ratio=Fraction(1, 3)):
    """Four-corner Cantor set in the plane; d = log 4 / log(1/ratio)."""
    rho = _frac(ratio)
    off = 1 - rho
    translations = [(0, 0), (off, 0), (0, off), (off, off)]
    return IfsSpec.equal_ratio(2, rho, translations, depth)


def vicsek_cross(depth):
    """Plus-shaped self-similar cloud, 5 maps of ratio 1/3; d = log 5 / log 3."""
    t = Fraction(1, 3)
    translations = [(t, t), (0, t), (2 * t, t), (t, 0), (t, 2 * t)]
    return IfsSpec.equal_ratio(2, t, translations, depth)


class DSet:
    """Weighted atom cloud standing in for an Ahlfors d-regular set.

    Atoms carry equal weights summing to one.  Exact rational coordinates
    back all zero-tolerance geometric predicates; a sup-metric kd-tree
    serves the float fast paths.
    """

    def __init__(self, exact_atoms, d, spec=None):
        self.exact_atoms = [tuple(_frac(c) for c in a) for a in exact_atoms]
        self.atoms = np.array(
            [[float(c) for c in a] for a in self.exact_atoms], dtype=float
        )
        if self.atoms.ndim != 2 or len(self.atoms) == 0:
            raise GeometryError("atom cloud must be a nonempty (m, n) array")
        self.n = self.atoms.shape[1]
        self.d = float(d)
        self.spec = spec
        self.weight = 1.0 / len(self.atoms)
        self.index = cKDTree(self.atoms)
        self._init_spacing()
        self._init_bounding()

    # -- construction helpers -------------------------------------------------

    def _init_spacing(self):
        m = len(self.atoms)
        if m == 1:
            self.spacing = 0.0
            self.spacing_exact = Fraction(0)
            return
        dists, idxs = self.index.query(self.atoms, k=2, p=np.inf)
        best = float(np.min(dists[:, 1]))
        # exact re-evaluation of all near-minimal candidate pairs
        cand = np.flatnonzero(dists[:, 1] <= best * (1 + 1e-9) + 1e-15)
        exact_best = None
        for i in cand:
            j = int(idxs[i, 1])
            d = max(abs(a - b) for a, b in zip(self.exact_atoms[i], self.exact_atoms[j]))
            if exact_best is None or d < exact_best:
                exact_best = d
        self.spacing_exact = exact_best
        self.spacing = float(exact_best)

    def _init_bounding(self):
        los = [min(a[i] for a in self.exact_atoms) for i in range(self.n)]
        his = [max(a[i] for a in self.exact_atoms) for i in range(self.n)]
        half = max(max((h - l) / 2 for l, h in zip(los, his)), Fraction(1, 2**20))
        center = tuple((l + h) / 2 for l, h in zip(los, his))
        self.bounding = Cube(
            [float(c) for c in center],
            float(half),
            center_exact=center,
            half_exact=half,
        )
        self.diameter = float(max(h - l for l, h in zip(los, his)))

    @property
    def weights(self):
        return np.full(len(self.atoms), self.weight)

    def __len__(self):
        return len(self.atoms)

    # -- float-path queries ---------------------------------------------------

    def dist(self, x):
        d, _ = self.index.query(np.asarray(x, dtype=float), p=np.inf)
        return float(d)

    def dist_many(self, xs):
        d, _ = self.index.query(np.asarray(xs, dtype=float), p=np.inf)
        return np.asarray(d, dtype=float)

    def nearest_atom(self, x):
        """(distance, atom index); sup-metric ties resolved to the lowest index."""
        x = np.asarray(x, dtype=float)
        d, i = self.index.query(x, p=np.inf)
        band = _BAND * max(1.0, d)
        cand = self.index.query_ball_point(x, d + band, p=np.inf)
        if len(cand) <= 1:
            return float(d), int(i)
        x_e = tuple(_frac(v) for v in x.tolist())
        best_d, best_i = None, None
        for j in sorted(cand):
            dj = max(abs(a - b) for a, b in zip(self.exact_atoms[j], x_e))
            if best_d is None or dj < best_d:
                best_d, best_i = dj, j
        return float(best_d), best_i

    def atom_index(self, x):
        """Index of the atom at x, or None when x is not an atom."""
        d, i = self.index.query(np.asarray(x, dtype=float), p=np.inf)
        tol = 0.25 * self.spacing if self.spacing > 0 else 1e-12
        return int(i) if d <= max(tol, 1e-12) else None

    # -- exact-path queries ---------------------------------------------------

    def _sup_exact(self, idx, point_exact):
        return max(abs(a - b) for a, b in zip(self.exact_atoms[idx], point_exact))

    def _candidates(self, center_float, radius_float):
        r = radius_float * (1 + _BAND) + 1e-15
        return self.index.query_ball_point(np.asarray(center_float, float), r, p=np.inf)

    def cube_dist_at_least(self, center_exact, half_exact, threshold_exact):
        """Exact: dist(Q(c, h), S) >= threshold in the sup metric."""
        if threshold_exact <= 0:
            return True
        thr = threshold_exact + half_exact
        cf = [float(c) for c in center_exact]
        for idx in self._candidates(cf, float(thr)):
            if self._sup_exact(idx, center_exact) < thr:
                return False
        return True

    def cube_dist_at_most(self, center_exact, half_exact, threshold_exact):
        """Exact: dist(Q(c, h), S) <= threshold."""
        if threshold_exact < 0:
            return False
        thr = threshold_exact + half_exact
        cf = [float(c) for c in center_exact]
        for idx in self._candidates(cf, float(thr)):
            if self._sup_exact(idx, center_exact) <= thr:
                return True
        return False

    def cube_farthest_at_most(self, center_exact, half_exact, threshold_exact):
        """Certificate that every point of Q(c, h) has dist to S <= threshold.

        Uses max_x dist(x, S) <= dist(c, S) + h; conservative but exact.
        """
        return self.point_dist_at_most(center_exact, threshold_exact - half_exact)

    def point_dist_at_most(self, point_exact, threshold_exact):
        if threshold_exact < 0:
            return False
        cf = [float(c) for c in point_exact]
        for idx in self._candidates(cf, float(threshold_exact)):
            if self._sup_exact(idx, point_exact) <= threshold_exact:
                return True
        return False

    def point_dist_at_least(self, point_exact, threshold_exact):
        if threshold_exact <= 0:
            return True
        cf = [float(c) for c in point_exact]
        for idx in self._candidates(cf, float(threshold_exact)):
            if self._sup_exact(idx, point_exact) < threshold_exact:
                return False
        return True

    # -- measure --------------------------------------------------------------

    def atoms_in_cube(self, cube, half_open=False):
        """Sorted indices of atoms in the cube; exact at the boundary.

        half_open uses [lo, hi) per axis, which makes dyadic partitions
        additive; the default closed convention matches the public measure.
        """
        h = cube.half_side
        cand = self.index.query_ball_point(cube.center, h * (1 + _BAND) + 1e-15, p=np.inf)
        if not cand:
            return np.array([], dtype=int)
        cand = np.array(sorted(cand), dtype=int)
        sup = np.max(np.abs(self.atoms[cand] - cube.center), axis=1)
        band = _BAND * max(1.0, h)
        if not half_open:
            sure = sup < h - band
            unsure = ~sure
        else:
            sure = np.zeros(len(cand), dtype=bool)
            unsure = np.ones(len(cand), dtype=bool)
        keep = list(cand[sure])
        if np.any(unsure):
            c_e, h_e = cube.center_exact, cube.half_exact
            for idx in cand[unsure]:
                a = self.exact_atoms[idx]
                if half_open:
                    ok = all(c - h_e <= ai < c + h_e for ai, c in zip(a, c_e))
                else:
                    ok = all(abs(ai - c) <= h_e for ai, c in zip(a, c_e))
                if ok:
                    keep.append(int(idx))
        return np.array(sorted(keep), dtype=int)

    def measure_of_cube(self, cube):
        """Exact weighted atom count of the closed cube."""
        return self.weight * len(self.atoms_in_cube(cube))

    def rescaled(self, t):
        """The cloud scaled by t about the origin (atoms t*a), same dimension."""
        return DSet(
            [tuple(_frac(t) * c for c in a) for a in self.exact_atoms],
            d=self.d,
            spec=None,
        )


def build_dset(spec):
    """Realize the IFS at its configured depth as an equal-weight atom cloud.

    Atoms are the images of the unit-cube center under all depth-L map
    compositions, computed in exact rational arithmetic.
    """
    base = tuple(Fraction(1, 2) for _ in range(spec.n))
    points = [base]
    for _ in range(spec.depth):
        nxt = []
        for rho, t in spec.maps:
            for p in points:
                nxt.append(tuple(rho * c + t[i] for i, c in enumerate(p)))
        points = nxt
    return DSet(points, d=spec.dimension, spec=spec)


def dist_to_set(S, x):
    """Sup-metric distance from a point to the atom cloud."""
    return S.dist(x)


# ---------------------------------------------------------------------------
# Regularity audit


@dataclass
class RegularityReport:
    """Empirical two-sided regularity constants mu(Q(w, r)) / r^d."""

    c1: float
    c2: float
    r_range: tuple
    samples: int
    witness_c1: tuple
    witness_c2: tuple
    regular: bool
    ratio_threshold: float


def _r_ladder(S, r_max=1.0):
    floor_r = max(4.0 * S.spacing, 2.0**-10)
    ladder = []
    r = r_max
    while r >= floor_r:
        ladder.append(r)
        r /= 2.0
    return ladder or [r_max]


def audit_regularity(S, samples, rng_seed, ratio_threshold=64.0):
    """Sampled audit of c1 r^d <= mu(Q(w, r)) <= c2 r^d over atoms w and a
    dyadic r-ladder in [4 * spacing, 1]; deterministic given the seed."""
    if samples < 1:
        raise GeometryError("samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    m = len(S.atoms)
    picks = sorted(set(int(i) for i in rng.integers(0, m, size=min(samples, m))))
    ladder = _r_ladder(S)
    c1, c2 = math.inf, -math.inf
    w1 = w2 = None
    for i in picks:
        w = S.atoms[i]
        w_e = S.exact_atoms[i]
        for r in ladder:
            q = Cube(w, r, center_exact=w_e, half_exact=_frac(r))
            val = S.measure_of_cube(q) / r**S.d
            if val < c1:
                c1, w1 = val, (i, r)
            if val > c2:
                c2, w2 = val, (i, r)
    return RegularityReport(
        c1=c1,
        c2=c2,
        r_range=(ladder[-1], ladder[0]),
        samples=len(picks),
        witness_c1=w1,
        witness_c2=w2,
        regular=(c2 / c1) <= ratio_threshold,
        ratio_threshold=ratio_threshold,
    )


# ---------------------------------------------------------------------------
# IO


def load_ifs_config(path):
    """Read an IFS spec from a JSON config with keys ratio, maps, depth, seed.

    Rational values may be given as numbers or "p/q" strings.
    """
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    return ifs_from_dict(cfg)


def ifs_from_dict(cfg):
    ratio = _frac(cfg["ratio"])
    translations = [tuple(_frac(c) for c in t) for t in cfg["maps"]]
    n = len(translations[0])
    return IfsSpec.equal_ratio(n, ratio, translations, cfg["depth"])


def export_atoms_csv(S, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*(f"x{i}" for i in range(S.n)), "weight"])
        for a in S.atoms:
            writer.writerow([*(repr(float(c)) for c in a), repr(S.weight)])
