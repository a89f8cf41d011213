"""Sup-metric cube arithmetic, dyadic families and the geometric machinery
built on top of them: Whitney decomposition of the complement of an atom
cloud, near-set cube families, porosity estimation and hole selection,
bounded-overlap covers and distance shells.

All cubes are closed and axis-aligned.  Distances, diameters and membership
tests use the supremum metric throughout, so the diameter of a cube equals
its side length.  Predicates that feed zero-tolerance certifications
(Whitney bounds, disjointness lemmas) are evaluated in exact rational
arithmetic; float fast paths are only used where they provably cannot flip
a comparison.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exceptions import GeometryError, PorosityError, ResolutionError, ResourceError

# Points within this relative band of a float comparison threshold are
# re-checked exactly; everything else is decided in floating point.
_FLOAT_BAND = 1e-9


def _as_fractions(values):
    return tuple(Fraction(v) if not isinstance(v, Fraction) else v for v in values)


class Cube:
    """Closed axis-aligned cube Q(center, half_side) in the sup metric.

    Side length is ``2 * half_side`` and equals the sup-metric diameter.
    Exact rational coordinates may be supplied for constructions that must
    be certified in exact arithmetic; otherwise the (exactly representable)
    binary values of the floats are used.
    """

    __slots__ = ("center", "half_side", "center_exact", "half_exact")

    def __init__(self, center, half_side, center_exact=None, half_exact=None):
        if half_side <= 0:
            raise GeometryError("cube half_side must be positive")
        self.center = np.asarray(center, dtype=float)
        self.half_side = float(half_side)
        self.center_exact = (
            _as_fractions(center_exact)
            if center_exact is not None
            else _as_fractions(self.center.tolist())
        )
        self.half_exact = (
            Fraction(half_exact) if half_exact is not None else Fraction(self.half_side)
        )

    @property
    def n(self):
        return self.center.shape[0]

    @property
    def side(self):
        return 2.0 * self.half_side

    @property
    def diam(self):
        # sup-metric diameter of a cube is its side length
        return 2.0 * self.half_side

    def scaled(self, t):
        """The cube tQ: same center, half_side multiplied by t."""
        return Cube(
            self.center,
            t * self.half_side,
            center_exact=self.center_exact,
            half_exact=self.half_exact * Fraction(t),
        )

    def contains(self, points):
        """Closed sup-metric membership for one point or an array of points."""
        pts = np.asarray(points, dtype=float)
        d = np.max(np.abs(pts - self.center), axis=-1)
        return d <= self.half_side

    def contains_exact(self, point_exact):
        return all(
            abs(p - c) <= self.half_exact
            for p, c in zip(point_exact, self.center_exact)
        )

    def contains_cube(self, other):
        """Exact closed containment other ⊆ self."""
        for c, h, oc, oh in zip(
            self.center_exact,
            (self.half_exact,) * self.n,
            other.center_exact,
            (other.half_exact,) * other.n,
        ):
            if oc - oh < c - h or oc + oh > c + h:
                return False
        return True

    def intersects_cube(self, other):
        """Exact closed intersection test against another cube."""
        for c, oc in zip(self.center_exact, other.center_exact):
            if abs(c - oc) > self.half_exact + other.half_exact:
                return False
        return True

    def volume(self):
        return self.side ** self.n

    def bounds(self):
        """(lows, highs) float arrays."""
        return self.center - self.half_side, self.center + self.half_side

    def __repr__(self):
        return f"Cube(center={self.center.tolist()}, half_side={self.half_side})"


@dataclass(frozen=True)
class DyadicCube:
    """Closed dyadic cube [coords * 2^-level, (coords + 1) * 2^-level]^n.

    Side length is 2^-level; level may be negative.  Equality and hashing
    are exact, so dyadic cubes can key dictionaries.
    """

    level: int
    coords: tuple

    @property
    def n(self):
        return len(self.coords)

    @property
    def side(self):
        return 2.0 ** (-self.level)

    @property
    def side_exact(self):
        return Fraction(1, 2**self.level) if self.level >= 0 else Fraction(2 ** (-self.level))

    @property
    def half_exact(self):
        return self.side_exact / 2

    @property
    def center(self):
        return (np.asarray(self.coords, dtype=float) + 0.5) * self.side

    @property
    def center_exact(self):
        s = self.side_exact
        return tuple((Fraction(c) + Fraction(1, 2)) * s for c in self.coords)

    def to_cube(self):
        return Cube(
            self.center,
            self.side / 2.0,
            center_exact=self.center_exact,
            half_exact=self.half_exact,
        )

    def parent(self):
        return DyadicCube(self.level - 1, tuple(c >> 1 for c in self.coords))

    def children(self):
        n = self.n
        out = []
        for mask in range(2**n):
            out.append(
                DyadicCube(
                    self.level + 1,
                    tuple(2 * self.coords[i] + ((mask >> i) & 1) for i in range(n)),
                )
            )
        return out

    def contains_point_exact(self, point_exact):
        s = self.side_exact
        for c, p in zip(self.coords, point_exact):
            if not (c * s <= p <= (c + 1) * s):
                return False
        return True

    def intersects(self, other):
        """Exact closed-cube intersection across (possibly unequal) levels."""
        j = max(self.level, other.level)
        for a, b in zip(self.coords, other.coords):
            lo_a, hi_a = a << (j - self.level), (a + 1) << (j - self.level)
            lo_b, hi_b = b << (j - other.level), (b + 1) << (j - other.level)
            if max(lo_a, lo_b) > min(hi_a, hi_b):
                return False
        return True

    def interior_contains_cube(self, other):
        """Exact test other ⊆ int(self)."""
        j = max(self.level, other.level)
        for a, b in zip(self.coords, other.coords):
            lo_a, hi_a = a << (j - self.level), (a + 1) << (j - self.level)
            lo_b, hi_b = b << (j - other.level), (b + 1) << (j - other.level)
            if not (lo_a < lo_b and hi_b < hi_a):
                return False
        return True

    def key(self):
        return (self.level,) + self.coords


def containing_dyadic(point_exact, level):
    """The dyadic cube of the given level containing the point.

    On shared faces the cube with the lexicographically smallest coords is
    chosen (canonical tie rule).
    """
    scaled = [p * 2**level if level >= 0 else p / 2 ** (-level) for p in point_exact]
    coords = []
    for s in scaled:
        if s.denominator == 1:
            # face point: pick the lower cube, which still contains it
            coords.append(int(s) - 1)
        else:
            coords.append(math.floor(s))
    return DyadicCube(level, tuple(coords))


def dyadic_hull(cube, margin=0.0, resolution=6):
    """Smallest cube with dyadic (multiple of 2^-resolution) center and
    half-side containing the given cube inflated by the margin."""
    unit = Fraction(1, 2**resolution)
    center = tuple(round(c / unit) * unit for c in cube.center_exact)
    need = max(
        abs(cr - c) + cube.half_exact + Fraction(margin)
        for cr, c in zip(center, cube.center_exact)
    )
    half = math.ceil(need / unit) * unit
    return Cube(
        [float(c) for c in center], float(half), center_exact=center, half_exact=half
    )


def dump_cubes(cubes, path):
    """Debug dump of a dyadic cube family as JSON lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for q in cubes:
            fh.write(json.dumps({"level": q.level, "coords": list(q.coords)}) + "\n")


def load_cubes(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            out.append(DyadicCube(rec["level"], tuple(rec["coords"])))
    return out


# ---------------------------------------------------------------------------
# Whitney decomposition


@dataclass
class WhitneyCover:
    """Whitney decomposition of region ∖ S by dyadic cubes.

    Every cube satisfies diam Q <= dist(Q, S) <= 4 diam Q in the sup metric.
    Cubes finer than ``min_level`` adjacent to S are dropped; their total
    volume is reported in ``residual_volume``.
    """

    cubes: list
    bounding_region: Cube
    overlap_bound: int
    min_level: int
    residual_volume: float = 0.0
    residual_count: int = 0

    def total_volume(self):
        return math.fsum(q.side ** q.n for q in self.cubes)


def _region_tiles(region):
    """Dyadic tiles exactly paving a dyadic-aligned region."""
    lows = [c - region.half_exact for c in region.center_exact]
    highs = [c + region.half_exact for c in region.center_exact]
    for j0 in range(-20, 40):
        scale = Fraction(2) ** j0
        if all((lo * scale).denominator == 1 for lo in lows) and all(
            (hi * scale).denominator == 1 for hi in highs
        ):
            ranges = [range(int(lo * scale), int(hi * scale)) for lo, hi in zip(lows, highs)]
            tiles = []

            def rec(prefix, rem):
                if not rem:
                    tiles.append(DyadicCube(j0, tuple(prefix)))
                    return
                for c in rem[0]:
                    rec(prefix + [c], rem[1:])

            rec([], ranges)
            if tiles:
                return tiles
    raise GeometryError("region corners are not dyadic rationals; cannot tile")


def _cube_dist_decision(S, cube, threshold_exact, threshold_float):
    """Exact-when-needed comparison: is dist(cube, S) >= threshold?"""
    d = S.dist(cube.center) - cube.half_side  # float dist(Q, S), can be < 0
    d = max(d, 0.0)
    if abs(d - threshold_float) > _FLOAT_BAND * max(1.0, threshold_float):
        return d >= threshold_float
    return S.cube_dist_at_least(cube.center_exact, cube.half_exact, threshold_exact)


def whitney_decompose(S, region, min_level, cube_budget=20_000_000):
    """Whitney decomposition of region ∖ S.

    Top-down dyadic subdivision: keep a cube when dist(Q, S) >= diam Q,
    subdivide when dist < diam, discard (with a residual-volume report)
    cubes at min_level that are still too close to S.  Each level is
    processed as one vectorized batch; borderline comparisons fall back to
    exact rational arithmetic.
    """
    blo, bhi = S.bounding.bounds()
    rlo, rhi = region.bounds()
    if np.any(blo < rlo - 1e-12) or np.any(bhi > rhi + 1e-12):
        raise GeometryError("region does not contain the atom cloud")

    tiles = _region_tiles(region)
    if tiles[0].level > min_level:
        raise GeometryError("min_level is coarser than the region tiling")

    kept = []
    residual_vol = Fraction(0)
    residual_count = 0
    visited = 0
    frontier = list(tiles)
    level = tiles[0].level
    while frontier:
        visited += len(frontier)
        if visited > cube_budget:
            raise ResourceError(f"whitney recursion exceeded budget of {cube_budget} cubes")
        side = 2.0**-level
        side_e = Fraction(2) ** (-level)
        coords = np.array([q.coords for q in frontier], dtype=np.int64)
        centers = (coords + 0.5) * side
        dists = np.maximum(S.dist_many(centers) - side / 2.0, 0.0)
        band = _FLOAT_BAND * max(1.0, side)
        keep_mask = dists >= side + band
        split_mask = dists < side - band
        unsure = ~(keep_mask | split_mask)
        for i in np.flatnonzero(unsure):
            q = frontier[i]
            if S.cube_dist_at_least(q.to_cube().center_exact, q.half_exact, side_e):
                keep_mask[i] = True
            else:
                split_mask[i] = True
        kept.extend(frontier[i] for i in np.flatnonzero(keep_mask))
        splitters = [frontier[i] for i in np.flatnonzero(split_mask)]
        if level >= min_level:
            residual_vol += side_e**S.n * len(splitters)
            residual_count += len(splitters)
            frontier = []
        else:
            frontier = [c for q in splitters for c in q.children()]
        level += 1
    kept.sort(key=lambda q: q.key())
    return WhitneyCover(
        cubes=kept,
        bounding_region=region,
        overlap_bound=2**S.n,
        min_level=min_level,
        residual_volume=float(residual_vol),
        residual_count=residual_count,
    )


def whitney_bounds_exact(S, cube):
    """Exact Whitney bound check diam Q <= dist(Q,S) <= 4 diam Q for one cube."""
    diam = cube.side_exact
    c = cube.to_cube()
    lower = S.cube_dist_at_least(c.center_exact, c.half_exact, diam)
    upper = S.cube_dist_at_most(c.center_exact, c.half_exact, 4 * diam)
    return lower and upper


def is_whitney_cube(S, cube):
    """Membership of a dyadic cube in the canonical Whitney decomposition.

    Q is kept iff dist(Q,S) >= diam Q while its parent was subdivided
    (dist(parent) < diam parent); the parent condition propagates to all
    ancestors automatically.
    """
    c = cube.to_cube()
    if not _cube_dist_decision(S, c, cube.side_exact, float(cube.side_exact)):
        return False
    p = cube.parent()
    return not _cube_dist_decision(S, p.to_cube(), p.side_exact, float(p.side_exact))


# ---------------------------------------------------------------------------
# Near-set families and porosity


@dataclass
class NearSetFamily:
    """Dyadic cubes relatively close to the set: dist(x_Q, S) <= gamma * l(Q) <= gamma."""

    gamma: float
    cubes: list
    region: Cube = None
    gamma_exact: Fraction = None

    def __post_init__(self):
        if self.gamma_exact is None:
            self.gamma_exact = Fraction(self.gamma)


def near_set_family(S, gamma, max_level, region=None):
    """All dyadic cubes of levels 0..max_level inside the region with
    gamma^{-1} dist(x_Q, S) <= l(Q)."""
    if gamma <= 0:
        raise GeometryError("gamma must be positive")
    if region is None:
        region = S.bounding
    gamma_e = Fraction(gamma)
    rlo = [c - region.half_exact for c in region.center_exact]
    rhi = [c + region.half_exact for c in region.center_exact]
    cubes = []
    for j in range(0, max_level + 1):
        side = Fraction(1, 2**j)
        axis_ranges = []
        for lo, hi in zip(rlo, rhi):
            cmin = math.ceil(lo / side)
            cmax = math.floor(hi / side) - 1
            axis_ranges.append(range(cmin, cmax + 1))
        if any(len(r) == 0 for r in axis_ranges):
            continue
        grids = np.meshgrid(*[np.asarray(r) for r in axis_ranges], indexing="ij")
        coords = np.stack([g.ravel() for g in grids], axis=-1)
        centers = (coords + 0.5) * float(side)
        dists = S.dist_many(centers)
        thr = float(gamma_e * side)
        sure_in = dists < thr - _FLOAT_BAND * max(1.0, thr)
        unsure = ~sure_in & (dists <= thr + _FLOAT_BAND * max(1.0, thr))
        for row in coords[sure_in]:
            cubes.append(DyadicCube(j, tuple(int(v) for v in row)))
        for row in coords[unsure]:
            q = DyadicCube(j, tuple(int(v) for v in row))
            if S.point_dist_at_most(q.center_exact, gamma_e * side):
                cubes.append(q)
    cubes.sort(key=lambda q: q.key())
    return NearSetFamily(gamma=float(gamma), cubes=cubes, region=region, gamma_exact=gamma_e)


_KAPPA_LADDER = [2**t for t in range(1, 17)]
_HOLE_GRID_CAP = 128


def _find_hole(S, center, r, kappa):
    """Search a subgrid of Q(center, r) for y with dist(y, S) > r/kappa + spacing/2.

    Returns the first such y in lexicographic subgrid order, or None.  The
    spacing/2 margin discards spurious holes that only exist between atoms
    of the discretization.
    """
    g = int(min(2 * kappa, _HOLE_GRID_CAP))
    ticks = np.arange(-g, g + 1) / g * r
    mesh = np.meshgrid(*([ticks] * S.n), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1) + np.asarray(center, dtype=float)
    dists = S.dist_many(pts)
    need = r / kappa + 0.5 * S.spacing
    hits = np.flatnonzero(dists > need * (1 + 1e-12))
    if hits.size == 0:
        return None
    return pts[hits[0]]


def estimate_porosity(S, trials, rng_seed):
    """Smallest kappa from the dyadic ladder {2, 4, ...} such that every
    sampled cube Q(x, r) contains a hole cube of half-side r/kappa free of
    atoms (with a spacing/2 safety margin).  Deterministic given the seed.
    """
    if trials < 1:
        raise GeometryError("trials must be >= 1")
    rng = np.random.default_rng(rng_seed)
    lo, hi = S.bounding.bounds()
    pad = 0.5 * max(S.diameter, S.spacing, 1e-6)
    r_min = max(8 * S.spacing, 2.0**-10)
    r_ladder = [2.0**-t for t in range(0, 11) if 2.0**-t >= r_min] or [1.0]

    # deterministic hard cases first: cubes centered on the cloud
    samples = [(S.bounding.center.copy(), r) for r in r_ladder]
    for t in range(trials):
        if t % 2 == 0 and len(S.atoms) > 0:
            x = S.atoms[rng.integers(0, len(S.atoms))]
        else:
            x = rng.uniform(lo - pad, hi + pad)
        r = r_ladder[rng.integers(0, len(r_ladder))]
        samples.append((np.array(x, dtype=float), r))

    for kappa in _KAPPA_LADDER:
        ok = True
        for x, r in samples:
            if _find_hole(S, x, r, kappa) is None:
                ok = False
                break
        if ok:
            return kappa
    raise PorosityError(
        f"no kappa <= {_KAPPA_LADDER[-1]} admits holes at this resolution "
        f"(spacing {S.spacing:.3g})"
    )


@dataclass
class PorousSelection:
    """Assignment Q -> r(Q) of interior hole cubes to a near-set family.

    sigma = (1 + gamma) * 16 * kappa; within each residue class of levels
    mod r0 (sigma^2 < 2^r0) the assigned cubes are pairwise disjoint.
    """

    kappa: float
    sigma: float
    r0: int
    assignment: dict
    sigma_exact: Fraction = None

    def residue_classes(self):
        classes = {}
        for q, rq in self.assignment.items():
            classes.setdefault(q.level % self.r0, []).append((q, rq))
        return classes


def porous_selection(family, S, kappa):
    """Assign to each family cube a dyadic hole cube r(Q) following the
    constructive recipe: hole point y in Q(x_Q, r_Q/2), then the dyadic cube
    containing y with r_Q/(8 kappa) < l <= r_Q/(4 kappa)."""
    kappa_e = Fraction(kappa)
    sigma_e = (1 + family.gamma_exact) * 16 * kappa_e
    r0 = 1
    while Fraction(2) ** r0 <= sigma_e * sigma_e:
        r0 += 1
    assignment = {}
    for q in family.cubes:
        r_q = q.half_exact  # r_Q = l(Q)/2
        y = _find_hole(S, [float(c) for c in q.center_exact], float(r_q) / 2.0, kappa)
        if y is None:
            raise PorosityError(f"hole search failed for cube {q}")
        # unique dyadic level with r_Q/8k < 2^-m <= r_Q/4k
        m = q.level + 1
        while Fraction(1, 2**max(m, 0)) * (2 ** max(-m, 0)) > r_q / (4 * kappa_e):
            m += 1
        side_m = Fraction(2) ** (-m)
        assert r_q / (8 * kappa_e) < side_m <= r_q / (4 * kappa_e)
        rq = containing_dyadic(_as_fractions(y.tolist()), m)
        if not q.interior_contains_cube(rq):
            raise PorosityError(f"selected hole cube escapes int(Q) for {q}")
        assignment[q] = rq
    return PorousSelection(
        kappa=float(kappa),
        sigma=float(sigma_e),
        r0=r0,
        assignment=assignment,
        sigma_exact=sigma_e,
    )


def selection_violations(selection, S=None):
    """Exact audit of a PorousSelection.

    Returns a list of human-readable violation strings: size comparability,
    interior containment, the distance band (when S is given) and all-pairs
    disjointness within residue classes.
    """
    bad = []
    sig = selection.sigma_exact
    for q, rq in selection.assignment.items():
        if q.side_exact > sig * rq.side_exact:
            bad.append(f"size: l(Q) > sigma l(r(Q)) for {q}")
        if not q.interior_contains_cube(rq):
            bad.append(f"containment: r(Q) not in int(Q) for {q}")
        if S is not None:
            lo_b = q.side_exact / sig
            hi_b = sig * q.side_exact
            c = rq.to_cube()
            far = S.cube_dist_at_least(c.center_exact, c.half_exact, lo_b)
            # farthest point of r(Q) from S must stay within sigma*l(Q)
            near = S.cube_farthest_at_most(c.center_exact, c.half_exact, hi_b)
            if not (far and near):
                bad.append(f"distance band violated for {q}")
    for res, members in selection.residue_classes().items():
        for i in range(len(members)):
            for k in range(i + 1, len(members)):
                if members[i][1].intersects(members[k][1]):
                    bad.append(
                        f"overlap in residue class {res}: {members[i][0]} vs {members[k][0]}"
                    )
    return bad


# ---------------------------------------------------------------------------
# Bounded-overlap covers and shells


@dataclass
class CoverFamily:
    """Greedy 5r-style cover of the atom cloud by cubes Q(x, 2^-level * delta).

    color_classes partitions the dilated cubes {2Q} into overlap_bound-many
    pairwise disjoint subfamilies.
    """

    level: int
    delta: float
    cubes: list
    overlap_bound: int
    color_classes: list
    centers_idx: list = field(default_factory=list)


def build_covers(S, level, delta):
    if level < -10:
        raise GeometryError("cover level must be >= -10")
    if delta <= 0:
        raise GeometryError("delta must be positive")
    r = (2.0**-level) * delta
    atoms = S.atoms
    picked = []
    fifth = r / 5.0
    for i in range(len(atoms)):
        x = atoms[i]
        ok = True
        for j in picked:
            if np.max(np.abs(x - atoms[j])) <= 2.0 * fifth:
                ok = False
                break
        if ok:
            picked.append(i)
    cubes = [
        Cube(atoms[i], r, center_exact=S.exact_atoms[i], half_exact=Fraction(2) ** (-level) * Fraction(delta))
        for i in picked
    ]
    # neighbour counts on the dilated cubes 2Q
    m = len(picked)
    adj = [[] for _ in range(m)]
    q0 = 1
    for a in range(m):
        cnt = 0
        for b in range(m):
            if np.max(np.abs(atoms[picked[a]] - atoms[picked[b]])) <= 4.0 * r:
                cnt += 1
                if b != a:
                    adj[a].append(b)
        q0 = max(q0, cnt)
    colors = [-1] * m
    for a in range(m):
        used = {colors[b] for b in adj[a] if colors[b] >= 0}
        c = 0
        while c in used:
            c += 1
        colors[a] = c
    n_colors = max(colors) + 1 if colors else 0
    classes = [[] for _ in range(n_colors)]
    for a, c in enumerate(colors):
        classes[c].append(a)
    return CoverFamily(
        level=level,
        delta=float(delta),
        cubes=cubes,
        overlap_bound=q0,
        color_classes=classes,
        centers_idx=picked,
    )


@dataclass
class Shell:
    """Distance band 80 * 2^-level <= dist(y, S) <= 16000 * 2^-level."""

    level: int

    @property
    def inner(self):
        return float(self.inner_exact)

    @property
    def outer(self):
        return float(self.outer_exact)

    @property
    def inner_exact(self):
        return Fraction(80) * Fraction(2) ** (-self.level)

    @property
    def outer_exact(self):
        return Fraction(16000) * Fraction(2) ** (-self.level)

    def contains_dist(self, dist):
        return self.inner <= dist <= self.outer


def shell_modulus():
    """Smallest m0 with 2^-m0 < 1/200 (assigning disjoint residue classes)."""
    m0 = 1
    while Fraction(1, 2**m0) >= Fraction(1, 200):
        m0 += 1
    return m0


def build_shells(i_min, i_max):
    if i_min > i_max:
        raise GeometryError("i_min must be <= i_max")
    return [Shell(i) for i in range(i_min, i_max + 1)]


def shell_disjointness_violations(shells):
    """Exact check that equal-residue (mod m0) shells are disjoint bands."""
    m0 = shell_modulus()
    bad = []
    for i, a in enumerate(shells):
        for b in shells[i + 1 :]:
            if a.level == b.level or (a.level - b.level) % m0 != 0:
                continue
            hi, lo = (a, b) if a.level > b.level else (b, a)
            # the finer shell must end strictly below where the coarser starts
            if not hi.outer_exact < lo.inner_exact:
                bad.append((a.level, b.level))
    return bad


def cop_check(S, x, i, cover, kappa):
    """Find a Whitney cube inside Q(x, 2^-i) with
    2^{-i-1}/(5 kappa) <= diam Q <= 2^{-i-1}; x must be an atom of S."""
    xi = S.atom_index(x)
    if xi is None:
        raise GeometryError("x is not an atom of S")
    x_exact = S.exact_atoms[xi]
    r = Fraction(2) ** (-i)
    lo_diam = Fraction(2) ** (-i - 1) / (5 * Fraction(kappa))
    hi_diam = Fraction(2) ** (-i - 1)
    for q in cover.cubes:
        d = q.side_exact
        if not (lo_diam <= d <= hi_diam):
            continue
        s = q.side_exact
        inside = all(
            x_exact[axis] - r <= q.coords[axis] * s
            and (q.coords[axis] + 1) * s <= x_exact[axis] + r
            for axis in range(q.n)
        )
        if inside:
            return q
    raise ResolutionError(
        f"no Whitney cube at scale 2^-{i + 1} inside Q(x, 2^-{i}); "
        f"cover min_level {cover.min_level}"
    )
