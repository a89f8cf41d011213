"""Whitney-type extension and trace operators.

The extension of an atom-sampled function is a bump-weighted sum of
polynomial projections: each Whitney cube Q of the complement carries a
smooth bump supported in (9/8)Q and the projection of f onto low-degree
polynomials over the reflected cube a(Q) = Q(a_Q, r_Q/2) centered at the
atom nearest to Q.  Cubes larger than the truncation parameter delta
contribute a zero polynomial but still enter the partition of unity.

Whitney cubes are located on demand by descending the global dyadic
lattice, so evaluation grids may come arbitrarily close to the atom cloud
without a precomputed cover.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .approx import build_projection, eval_poly
from .exceptions import (
    DegenerateGeometryError,
    GeometryError,
    ResolutionError,
)
from .geometry import Cube, DyadicCube, _cube_dist_decision, _region_tiles

MAX_LOCATE_LEVEL = 60
SUPPORT_FACTOR = 9.0 / 8.0


def bump_profile(s):
    """C-infinity profile exp(-1/(1-s^2)) on (-1, 1), zero outside."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(-1.0 / (1.0 - si * si))
    return out


def bump_on_cube(points, cube):
    """Tensor-product bump supported in the open cube (axis profiles multiply)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rel = (pts - cube.center) / cube.half_side
    vals = np.ones(len(pts))
    for axis in range(cube.n):
        vals = vals * bump_profile(rel[:, axis])
    return vals


# ---------------------------------------------------------------------------
# Partition of unity over an explicit cover


@dataclass
class PartitionOfUnity:
    """Normalized bump system subordinate to a Whitney cover on a grid.

    Each cube contributes the tensor bump supported in (9/8)Q; the raw
    bump sum over the grid is kept as the normalization field.
    """

    cover: object
    grid: object
    supports: list
    normalization: np.ndarray

    def phi(self, member, points):
        """phi_Q at the points for cover cube index `member` (normalized by
        the bump sum interpolated at the nearest grid point)."""
        support = self.supports[member]
        raw = bump_on_cube(points, support)
        pts = np.atleast_2d(points)
        idx = tuple(
            np.clip(
                np.floor((pts[:, a] - self.grid.lo[a]) / self.grid.step).astype(int),
                0,
                self.grid.shape[a] - 1,
            )
            for a in range(self.grid.n)
        )
        denom = self.normalization[idx]
        out = np.zeros(len(pts))
        ok = denom > 0
        out[ok] = raw[ok] / denom[ok]
        return out


def build_partition(cover, grid):
    """Evaluate the bump system of an explicit cover on a grid and certify
    full coverage: a grid point with zero bump sum raises, naming the point."""
    supports = [q.to_cube().scaled(SUPPORT_FACTOR) for q in cover.cubes]
    norm = np.zeros(grid.shape)
    for q, support in zip(cover.cubes, supports):
        slices = grid.index_slices_for_cube(support)
        if any(i0 > i1 for i0, i1 in slices):
            continue
        block = tuple(slice(i0, i1 + 1) for i0, i1 in slices)
        axes = [grid.axis_points(a)[block[a]] for a in range(grid.n)]
        psi = np.ones([len(ax) for ax in axes])
        for a, ax in enumerate(axes):
            shape = [1] * grid.n
            shape[a] = len(ax)
            psi = psi * bump_profile(
                (ax - support.center[a]) / support.half_side
            ).reshape(shape)
        norm[block] += psi
    zero = np.argwhere(norm == 0.0)
    if len(zero):
        pt = grid.point_at(zero[0])
        raise GeometryError(
            f"coverage gap: zero bump sum at grid point {pt.tolist()}"
        )
    return PartitionOfUnity(cover=cover, grid=grid, supports=supports, normalization=norm)


# ---------------------------------------------------------------------------
# Reflected cubes and the extension operator


@dataclass
class ReflectedCube:
    """Whitney cube with its reflected cube a(Q) on the atom cloud."""

    whitney: DyadicCube
    a_idx: int
    cube: Cube
    mass: float


@dataclass
class ExtensionField:
    """Extension samples on a grid with per-point provenance counts."""

    k: int
    delta: float
    grid: object
    provenance_count: np.ndarray
    degraded: np.ndarray
    atom_mask: np.ndarray

    @property
    def values(self):
        return self.grid.values


class WhitneyExtension:
    """The extension operator for a fixed atom cloud, order and truncation.

    Geometry (Whitney membership decisions, reflected-cube projections,
    per-grid bump layouts) is cached and shared across input functions.
    """

    def __init__(self, S, k, delta=16000.0):
        if k < 1:
            raise GeometryError("extension order k must be >= 1")
        if delta <= 0:
            raise GeometryError("delta must be positive")
        self.S = S
        self.k = k
        self.delta = float(delta)
        self._dist_ok = {}  # cube key -> dist(Q,S) >= diam Q
        self._proj = {}  # cube key -> (ReflectedCube, projection, degree)
        self._plans = {}

    # -- Whitney lattice ------------------------------------------------------

    def _kept(self, q):
        key = q.key()
        hit = self._dist_ok.get(key)
        if hit is None:
            hit = _cube_dist_decision(
                self.S, q.to_cube(), q.side_exact, float(q.side_exact)
            )
            self._dist_ok[key] = hit
        return hit

    def _kept_batch(self, cubes):
        """Vectorized keep-decision (dist >= diam) for same-level cubes."""
        missing = [q for q in cubes if q.key() not in self._dist_ok]
        if missing:
            level = missing[0].level
            side = 2.0**-level
            centers = np.array([q.center for q in missing])
            dists = np.maximum(self.S.dist_many(centers) - side / 2.0, 0.0)
            band = 1e-9 * max(1.0, side)
            for q, d in zip(missing, dists):
                if d >= side + band:
                    self._dist_ok[q.key()] = True
                elif d < side - band:
                    self._dist_ok[q.key()] = False
                else:
                    c = q.to_cube()
                    self._dist_ok[q.key()] = self.S.cube_dist_at_least(
                        c.center_exact, c.half_exact, q.side_exact
                    )
        return [self._dist_ok[q.key()] for q in cubes]

    def is_whitney(self, q):
        return self._kept(q) and not self._kept(q.parent())

    def locate(self, x):
        """The Whitney cube containing x (off the atom cloud)."""
        tile = DyadicCube(0, tuple(int(math.floor(v)) for v in np.asarray(x, float)))
        while not self._kept(tile):
            if tile.level >= MAX_LOCATE_LEVEL:
                raise GeometryError(f"point {x} is too close to the atom cloud")
            nxt = None
            for child in tile.children():
                if np.all(np.abs(np.asarray(x) - child.center) <= child.side / 2 + 1e-15):
                    nxt = child
                    break
            tile = nxt
        return tile

    def reflected(self, q):
        """Reflected cube and polynomial projection for a Whitney cube, with
        degree fallback on rank-deficient atom sets."""
        key = q.key()
        hit = self._proj.get(key)
        if hit is not None:
            return hit
        cube = q.to_cube()
        _, a_idx = self.S.nearest_atom(cube.center)
        r_q = cube.half_side
        a_cube = Cube(
            self.S.atoms[a_idx],
            r_q / 2.0,
            center_exact=self.S.exact_atoms[a_idx],
            half_exact=q.half_exact / 2,
        )
        degree = self.k - 1
        proj = None
        while degree >= 0:
            try:
                proj = build_projection(self.S, a_cube, degree)
                break
            except DegenerateGeometryError:
                degree -= 1
        if proj is None:
            raise GeometryError(f"no atoms in reflected cube of {q}")
        ref = ReflectedCube(
            whitney=q, a_idx=a_idx, cube=a_cube, mass=proj.mass
        )
        out = (ref, proj, degree)
        self._proj[key] = out
        return out

    # -- grid plans ------------------------------------------------------------

    def _relevant_cubes(self, grid):
        """All Whitney cubes whose (9/8)-support contains a grid point."""
        lo, hi = grid.region.bounds()
        blo, bhi = self.S.bounding.bounds()
        if np.any(blo < lo - 1e-12) or np.any(bhi > hi + 1e-12):
            raise GeometryError("grid region must contain the atom cloud")

        def support_hits(q):
            support = q.to_cube().scaled(SUPPORT_FACTOR)
            slices = grid.index_slices_for_cube(support)
            if any(i0 > i1 for i0, i1 in slices):
                return None
            return slices

        out = []
        frontier = []
        tiles = [t for t in _region_tiles(grid.region) if support_hits(t) is not None]
        for tile, kept in zip(tiles, self._kept_batch(tiles)):
            if kept:
                if not self._kept(tile.parent()):
                    out.append((tile, support_hits(tile)))
            else:
                frontier.append(tile)
        while frontier:
            if frontier[0].level > MAX_LOCATE_LEVEL:
                raise GeometryError("grid point pathologically close to the cloud")
            children = []
            hits = []
            for q in frontier:
                for child in q.children():
                    slices = support_hits(child)
                    if slices is not None:
                        children.append(child)
                        hits.append(slices)
            frontier = []
            for child, slices, kept in zip(children, hits, self._kept_batch(children)):
                if kept:
                    out.append((child, slices))
                else:
                    frontier.append(child)
        out.sort(key=lambda t: t[0].key())
        return out

    def prepare(self, grid):
        """Precompute the f-independent layout of the extension on a grid."""
        key = (id(grid), grid.shape)
        plan = self._plans.get(key)
        if plan is not None:
            return plan
        cubes = self._relevant_cubes(grid)
        den = np.zeros(grid.shape)
        count = np.zeros(grid.shape, dtype=np.int32)
        entries = []
        for q, slices in cubes:
            support = q.to_cube().scaled(SUPPORT_FACTOR)
            block = tuple(slice(i0, i1 + 1) for i0, i1 in slices)
            axes = [grid.axis_points(a)[block[a]] for a in range(grid.n)]
            psi = np.ones([len(ax) for ax in axes])
            for a, ax in enumerate(axes):
                shape = [1] * grid.n
                shape[a] = len(ax)
                psi = psi * bump_profile(
                    (ax - support.center[a]) / support.half_side
                ).reshape(shape)
            if not np.any(psi > 0):
                continue
            den[block] += psi
            count[block] += (psi > 0).astype(np.int32)
            truncated = q.side > self.delta  # sup-metric diam = side
            if truncated:
                entries.append((q, block, psi, None, None, False))
                continue
            ref, proj, degree = self.reflected(q)
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=-1)
            from .approx import design_matrix

            design = design_matrix(pts, ref.cube, proj.indices)
            entries.append((q, block, psi, proj, design, degree < self.k - 1))
        # atoms sitting exactly on grid points take their sample value
        atom_mask = np.zeros(grid.shape, dtype=bool)
        atom_cells = {}
        for i, a in enumerate(self.S.atoms):
            idx = grid.nearest_index(a)
            if np.max(np.abs(grid.point_at(idx) - a)) < 1e-13:
                atom_mask[idx] = True
                atom_cells[idx] = i
        uncovered = (den == 0.0) & ~atom_mask
        if np.any(uncovered):
            pt = grid.point_at(np.argwhere(uncovered)[0])
            raise GeometryError(f"coverage gap at grid point {pt.tolist()}")
        plan = {
            "entries": entries,
            "den": den,
            "count": count,
            "atom_mask": atom_mask,
            "atom_cells": atom_cells,
        }
        self._plans[key] = plan
        return plan

    # -- evaluation -------------------------------------------------------------

    def transform(self, f, grid):
        """Extension field of atom samples f on the grid."""
        from .grids import GridFunction

        f = np.asarray(f, dtype=float)
        if f.shape != (len(self.S.atoms),):
            raise GeometryError("f must sample every atom exactly once")
        plan = self.prepare(grid)
        num = np.zeros(grid.shape)
        degraded = np.zeros(grid.shape, dtype=bool)
        for q, block, psi, proj, design, was_degraded in plan["entries"]:
            if proj is None:
                continue
            coeffs = proj.coefficients(f, self.S)
            pvals = (design @ coeffs).reshape(psi.shape)
            num[block] += psi * pvals
            if was_degraded:
                degraded[block] |= psi > 0
        values = np.zeros(grid.shape)
        den = plan["den"]
        ok = den > 0
        values[ok] = num[ok] / den[ok]
        for idx, atom in plan["atom_cells"].items():
            values[idx] = f[atom]
        out_grid = GridFunction(grid.region, values)
        return ExtensionField(
            k=self.k,
            delta=self.delta,
            grid=out_grid,
            provenance_count=plan["count"],
            degraded=degraded,
            atom_mask=plan["atom_mask"],
        )

    def contributors(self, grid, point):
        """Whitney cubes whose bump support contains the point (provenance)."""
        plan = self.prepare(grid)
        out = []
        for q, _, _, _, _, _ in plan["entries"]:
            support = q.to_cube().scaled(SUPPORT_FACTOR)
            if bool(np.all(np.abs(np.asarray(point) - support.center) < support.half_side)):
                out.append(q)
        return out


def extend(f, S, k, delta, grid):
    """One-shot extension of atom samples to a grid (builds the operator)."""
    return WhitneyExtension(S, k, delta).transform(f, grid)


# ---------------------------------------------------------------------------
# Trace


@dataclass
class TraceResult:
    """Cube-average restrictions of a grid function to the atoms."""

    values: np.ndarray
    convergence: np.ndarray
    t_ladder: list
    per_scale: np.ndarray = None

    def __iter__(self):
        return iter(self.values)


def trace(field, S, t_ladder):
    """Average the grid function over Q(atom, t) for decreasing t; returns
    the finest-scale averages with the last-step convergence estimate."""
    grid = field.grid if isinstance(field, ExtensionField) else field
    ladder = sorted(set(float(t) for t in t_ladder), reverse=True)
    if not ladder:
        raise ResolutionError("empty trace ladder")
    if ladder[-1] < grid.step:
        raise ResolutionError(
            f"finest trace scale {ladder[-1]:.3g} is below the grid step {grid.step:.3g}"
        )
    per_scale = np.zeros((len(ladder), len(S.atoms)))
    for row, t in enumerate(ladder):
        for i, a in enumerate(S.atoms):
            cube = Cube(a, t)
            slices = grid.index_slices_for_cube(cube)
            if any(i0 > i1 for i0, i1 in slices):
                raise ResolutionError(f"no grid points in Q(atom {i}, {t:.3g})")
            block = tuple(slice(i0, i1 + 1) for i0, i1 in slices)
            per_scale[row, i] = float(np.mean(grid.values[block]))
    conv = (
        np.abs(per_scale[-1] - per_scale[-2])
        if len(ladder) > 1
        else np.full(len(S.atoms), np.nan)
    )
    return TraceResult(
        values=per_scale[-1], convergence=conv, t_ladder=ladder, per_scale=per_scale
    )


# ---------------------------------------------------------------------------
# Diagnostics: local transfer and far-field decay


def _grid_E_on_cube(grid, cube, k, u):
    """E_k of a grid function over an arbitrary cube, midpoint weights."""
    from .approx import weighted_best_approx

    slices = grid.index_slices_for_cube(cube)
    if any(i0 > i1 for i0, i1 in slices):
        return None
    block = tuple(slice(i0, i1 + 1) for i0, i1 in slices)
    axes = [grid.axis_points(a)[block[a]] for a in range(grid.n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = grid.values[block].ravel()
    res = weighted_best_approx(vals, pts, np.ones(len(pts)), cube, k, u)
    return res.value


def local_transfer_check(f, S, k, u, grid, j, extender=None, gamma=320.0, delta=16000.0):
    """Pointwise comparison of extension approximations on dyadic cubes of
    level j against set-side approximations on the matching covers.

    Near cubes (centers within gamma * side of the cloud) are compared with
    the level-j cover; far cubes with the shell-matched coarser covers and
    the k-dependent geometric damping.  Diagnostic: reports ratios, raises
    nothing about their size.
    """
    from .dset import DSet  # noqa: F401  (duck-typed, import for docs only)
    from .geometry import build_covers

    if extender is None:
        extender = WhitneyExtension(S, k, delta=delta)
    fld = extender.transform(np.asarray(f, dtype=float), grid).grid
    side = 2.0**-j
    lo, hi = grid.region.bounds()
    c0 = [int(math.ceil(lo[a] / side)) for a in range(grid.n)]
    c1 = [int(math.floor(hi[a] / side)) - 1 for a in range(grid.n)]
    near_lhs = {}
    far_lhs = {}
    e_center = {}
    import itertools

    for coords in itertools.product(*[range(a, b + 1) for a, b in zip(c0, c1)]):
        q = DyadicCube(j, coords)
        cube = q.to_cube()
        e4 = _grid_E_on_cube(fld, cube.scaled(4.0), k, u)
        if e4 is None:
            continue
        dist_c = S.dist(cube.center)
        if dist_c / gamma <= side <= 1.0:
            near_lhs[q] = e4
        else:
            far_lhs[q] = (e4, dist_c)
        ec = _grid_E_on_cube(
            fld, Cube(cube.center, side), k, u
        )  # E_k(f~, Q(x_Q, 2^-j))
        e_center[q] = ec
    # near side: cover at level j scaled by delta
    cover_j = build_covers(S, j, delta)
    f = np.asarray(f, dtype=float)

    def set_E(cube2k, kk):
        from .approx import weighted_best_approx

        idx = S.atoms_in_cube(cube2k)
        if len(idx) == 0:
            return None
        return weighted_best_approx(
            f[idx], S.atoms[idx], np.full(len(idx), S.weight), cube2k, kk, u
        ).value

    cover_E = {}
    for m, cube in enumerate(cover_j.cubes):
        cover_E[m] = set_E(cube.scaled(2.0), k)
    ratios_near = []
    for q, lhs in near_lhs.items():
        rhs_terms = [
            cover_E[m]
            for m, cube in enumerate(cover_j.cubes)
            if cover_E[m] is not None
            and np.max(np.abs(q.center - cube.center)) <= 2.0 * cube.half_side
        ]
        rhs = max(rhs_terms) if rhs_terms else 0.0
        if rhs > 1e-14:
            ratios_near.append((lhs / rhs, q))
        elif lhs > 1e-12:
            ratios_near.append((math.inf, q))
    # far side: shell-matched covers at levels i < j
    far_ratios = []
    cover_cache = {}
    for q, (lhs, dist_c) in far_lhs.items():
        if dist_c <= 320.0 * side:
            continue
        i = int(math.floor(math.log2(320.0 / dist_c))) if dist_c > 0 else j
        i = max(i, -10)
        if i >= j:
            continue
        kk = k if i >= 0 else 0
        if i not in cover_cache:
            cover_cache[i] = build_covers(S, i, delta)
        cov = cover_cache[i]
        rhs_terms = []
        for cube in cov.cubes:
            if np.max(np.abs(q.center - cube.center)) <= 2.0 * cube.half_side:
                e = set_E(cube.scaled(2.0), kk)
                if e is not None:
                    rhs_terms.append(e)
        rhs = 2.0 ** (k * (i - j)) * (max(rhs_terms) if rhs_terms else 0.0)
        if rhs > 1e-14:
            far_ratios.append((lhs / rhs, q))
        elif lhs > 1e-12:
            far_ratios.append((math.inf, q))
    # center transfer: E_k(f~, Q(x,2^-j)) <= c sum chi_Q E_k(f~, 4Q)
    center_ratios = []
    for q, ec in e_center.items():
        lhs4 = near_lhs.get(q, far_lhs.get(q, (None,))[0])
        if lhs4 is None or ec is None:
            continue
        if lhs4 > 1e-14:
            center_ratios.append(ec / lhs4)
    def _summary(pairs):
        finite = [r for r, _ in pairs if math.isfinite(r)]
        return {
            "max_ratio": max(finite) if finite else 0.0,
            "count": len(pairs),
            "infinite": sum(1 for r, _ in pairs if not math.isfinite(r)),
            "witness": max(pairs, key=lambda t: t[0])[1].key() if finite else None,
        }

    return {
        "near": _summary(ratios_near),
        "far": _summary(far_ratios),
        "cube_transfer_max": max(center_ratios) if center_ratios else 0.0,
    }


def decay_factor_check(f, S, k, u, grid, points, scales, extender=None, delta=16000.0):
    """Far-field damping of extension approximations: ratio of
    E_k(ext f, Q(x, t)) to the t^k/(t^k + dist^k)-damped set-side
    approximation over K^(x,t) = Q(a_x, 50 max(80 t, dist(x, S)))."""
    from .approx import weighted_best_approx

    if extender is None:
        extender = WhitneyExtension(S, k, delta=delta)
    f = np.asarray(f, dtype=float)
    fld = extender.transform(f, grid)
    out = []
    for x in points:
        x = np.asarray(x, dtype=float)
        dist_x = S.dist(x)
        _, a_idx = S.nearest_atom(x)
        for t in scales:
            lhs = _grid_E_on_cube(fld.grid, Cube(x, t), k, u)
            if lhs is None:
                continue
            r_xt = 50.0 * max(80.0 * t, dist_x)
            kcube = Cube(S.atoms[a_idx], r_xt, center_exact=S.exact_atoms[a_idx])
            idx = S.atoms_in_cube(kcube)
            if len(idx) == 0:
                continue
            kk = k if r_xt <= delta else 0
            rhs_e = weighted_best_approx(
                f[idx], S.atoms[idx], np.full(len(idx), S.weight), kcube, kk, u
            ).value
            damp = t**k / (t**k + dist_x**k)
            rhs = damp * rhs_e
            if rhs > 1e-14:
                out.append({"x": x.tolist(), "t": t, "ratio": lhs / rhs, "regime": "k" if r_xt <= delta else "0"})
            elif lhs <= 1e-12:
                out.append({"x": x.tolist(), "t": t, "ratio": 0.0, "regime": "vacuous"})
            else:
                out.append({"x": x.tolist(), "t": t, "ratio": math.inf, "regime": "violation"})
    return out
