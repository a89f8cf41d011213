"""Discretized Besov and Triebel-Lizorkin norms.

The scale integral of the smoothness seminorm is discretized over dyadic
scales t = 2^-j.  On an atom cloud, the local approximation error
E_k(f, Q(x, 2^-j))_{L^u(S)} is computed at every atom x; on a uniform grid
the Lebesgue analogue is computed at every interior grid point, with cube
windows realized as centered strided sub-lattices.  Aggregations use
compensated summation since per-scale terms span many orders of magnitude.
"""

import math
import weakref
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp, mpf

from .approx import (
    IRLS_CONT_FACTOR,
    IRLS_CONT_START,
    IRLS_EPS,
    IRLS_SMOOTH_TOL,
    l1_fit_exact,
    multi_indices,
)
from .exceptions import ParameterError, ResolutionError
from .geometry import Cube

IRLS_BATCH_TOL = IRLS_SMOOTH_TOL
IRLS_BATCH_MAXIT = 500  # then the exact LP takes over
IRLS_ACCEPT_TOL = 1e-9
GRID_SAMPLES_PER_SIDE = 12  # window sub-lattice target resolution


@dataclass
class NormParams:
    """Parameters of a discretized smoothness norm.

    alpha is the smoothness order, p/q the integrability exponents (both in
    (1, inf); q = inf is not supported), u in {1, 2} the local
    approximation exponent and k > alpha the polynomial order.  The scale
    window is j_min..j_max before the resolution cutoff.  trace_weight
    switches the per-scale weight from 2^(j alpha) to
    2^(j (alpha - (n - d)/p)) for norms on the set side of a trace pair.
    """

    alpha: float
    p: float
    q: float
    u: int
    k: int
    j_min: int = 0
    j_max: int = 8
    trace_weight: bool = False

    def __post_init__(self):
        if self.alpha <= 0:
            raise ParameterError("alpha must be positive")
        if not (1 < self.p < math.inf and 1 < self.q < math.inf):
            raise ParameterError("p and q must lie in (1, inf)")
        if self.u not in (1, 2):
            raise ParameterError("u must be 1 or 2")
        if self.u > self.p:
            raise ParameterError("u must satisfy u <= p")
        if self.k != int(self.k) or self.k <= self.alpha:
            raise ParameterError("k must be an integer with k > alpha")
        self.k = int(self.k)
        if self.j_min > self.j_max:
            raise ParameterError("empty scale window")

    def weight_exponent(self, n, d):
        if self.trace_weight:
            return self.alpha - (n - d) / self.p
        return self.alpha

    def scales(self, resolution):
        """Scales surviving the cutoff 2^-j >= 4 * resolution."""
        js = [
            j
            for j in range(self.j_min, self.j_max + 1)
            if 2.0**-j >= 4.0 * resolution - 1e-15
        ]
        if not js:
            raise ResolutionError(
                f"no scales in [{self.j_min}, {self.j_max}] survive the "
                f"resolution cutoff 4 * {resolution:.3g}"
            )
        return js


@dataclass
class NormReport:
    """Norm value with its per-scale breakdown."""

    total: float
    lp_part: float
    seminorm_part: float
    per_scale: list

    def to_dict(self):
        return {
            "total": self.total,
            "lp_part": self.lp_part,
            "seminorm_part": self.seminorm_part,
            "per_scale": [[j, v] for j, v in self.per_scale],
        }

    def save_per_scale_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("j,weighted_lp\n")
            for j, v in self.per_scale:
                fh.write(f"{j},{v!r}\n")


def _lq_aggregate(values, q):
    return math.fsum(abs(v) ** q for v in values) ** (1.0 / q)


# ---------------------------------------------------------------------------
# Batched local approximation solves


def _batched_design(points_rel, k):
    """Design tensor for relative coordinates (already divided by the side)."""
    indices = multi_indices(points_rel.shape[-1], k - 1)
    cols = []
    for nu in indices:
        col = np.ones(points_rel.shape[:-1])
        for axis, power in enumerate(nu):
            if power:
                col = col * points_rel[..., axis] ** power
        cols.append(col)
    return np.stack(cols, axis=-1) if cols else np.zeros(points_rel.shape[:-1] + (0,))


def _batched_E(values, A, weights, u):
    """Per-window normalized best approximation values.

    values, weights: (N, W); A: (N, W, D) or (W, D) shared across windows.
    Zero-weight entries are padding.  Returns (N,) array.
    """
    wsum = weights.sum(axis=1)
    wn = weights / wsum[:, None]
    D = A.shape[-1]
    if D == 0:
        return np.sum(wn * np.abs(values) ** u, axis=1) ** (1.0 / u)
    shared = A.ndim == 2
    if shared:
        pair = (A[:, :, None] * A[:, None, :]).reshape(A.shape[0], D * D)
    else:
        pair = (A[:, :, :, None] * A[:, :, None, :]).reshape(A.shape[0], A.shape[1], D * D)

    def solve(wts, vals, A_batch, pair_batch):
        if shared:
            G = (wts @ pair).reshape(-1, D, D)
            b = (wts * vals) @ A
        else:
            G = np.matmul(wts[:, None, :], pair_batch)[:, 0, :].reshape(-1, D, D)
            b = np.matmul((wts * vals)[:, None, :], A_batch)[:, 0, :]
        # pinv tolerates rank-deficient (under-resolved) windows
        try:
            return np.linalg.solve(G, b[..., None])[..., 0]
        except np.linalg.LinAlgError:
            return (np.linalg.pinv(G) @ b[..., None])[..., 0]

    def fitted(c, A_batch):
        if shared:
            return c @ A.T
        return np.matmul(A_batch, c[:, :, None])[:, :, 0]

    coef = solve(wn, values, A, pair)
    res = values - fitted(coef, A)
    if u == 2:
        return np.sqrt(np.maximum(np.sum(wn * res**2, axis=1), 0.0))
    # IRLS with smoothing continuation: the per-window smoothing shrinks
    # geometrically to the eps = 1e-12 floor, after which the reweighting is
    # a majorize-minimize scheme whose smoothed objective decreases
    # monotonically, giving a clean stopping rule.
    out = np.sum(wn * np.abs(res), axis=1)
    eps0 = np.maximum(IRLS_CONT_START * out, IRLS_EPS)
    smooth = np.full(len(values), np.inf)
    active = np.ones(len(values), dtype=bool)
    for t in range(IRLS_BATCH_MAXIT):
        ai = np.flatnonzero(active)
        if ai.size == 0:
            return out
        wn_a = wn[ai]
        val_a = values[ai]
        A_a = A if shared else A[ai]
        pair_a = pair if shared else pair[ai]
        eps_a = np.maximum(eps0[ai] * IRLS_CONT_FACTOR**t, IRLS_EPS)
        irw = wn_a / np.sqrt(res[ai] ** 2 + eps_a[:, None] ** 2)
        c = solve(irw, val_a, A_a, pair_a)
        res_a = val_a - fitted(c, A_a)
        res[ai] = res_a
        new_smooth = np.sum(wn_a * np.sqrt(res_a**2 + IRLS_EPS**2), axis=1)
        delta = smooth[ai] - new_smooth
        smooth[ai] = new_smooth
        out[ai] = np.sum(wn_a * np.abs(res_a), axis=1)
        floored = eps_a <= IRLS_EPS * (1 + 1e-12)
        active[ai] = ~floored | (delta > IRLS_BATCH_TOL * (1.0 + new_smooth))
    # stalled windows: fall back to the exact linear program
    for i in np.flatnonzero(active):
        A_i = A if shared else A[i]
        live = wn[i] > 0
        out[i], _ = l1_fit_exact(values[i, live], A_i[live], wn[i, live])
    return out


# ---------------------------------------------------------------------------
# Norms on the atom cloud


class _SetWorkspace:
    """Cached window structure of an atom cloud, shared across functions."""

    def __init__(self, S):
        self.S = S
        self._scales = {}
        self._designs = {}

    def scale(self, j):
        if j in self._scales:
            return self._scales[j]
        S = self.S
        r = 2.0**-j
        unique = {}
        inverse = np.empty(len(S.atoms), dtype=int)
        half_e = None
        from fractions import Fraction

        half_e = Fraction(2) ** (-j)
        for i in range(len(S.atoms)):
            cube = Cube(
                S.atoms[i], r, center_exact=S.exact_atoms[i], half_exact=half_e
            )
            idx = S.atoms_in_cube(cube)
            key = idx.tobytes()
            if key not in unique:
                unique[key] = (len(unique), idx, i)
            inverse[i] = unique[key][0]
        ordered = sorted(unique.values(), key=lambda t: t[0])
        windows = [idx for _, idx, _ in ordered]
        centers = np.array([S.atoms[i] for _, _, i in ordered])
        wmax = max(len(w) for w in windows)
        pts = np.zeros((len(windows), wmax, S.n))
        wts = np.zeros((len(windows), wmax))
        for row, w in enumerate(windows):
            pts[row, : len(w)] = S.atoms[w]
            wts[row, : len(w)] = S.weight
        rel = (pts - centers[:, None, :]) / (2.0 * r)
        entry = {
            "windows": windows,
            "inverse": inverse,
            "rel": rel,
            "weights": wts,
            "wmax": wmax,
        }
        self._scales[j] = entry
        return entry

    def design(self, j, k):
        key = (j, k)
        if key not in self._designs:
            self._designs[key] = _batched_design(self.scale(j)["rel"], k)
        return self._designs[key]


_set_workspaces = weakref.WeakKeyDictionary()


def _workspace(S):
    ws = _set_workspaces.get(S)
    if ws is None:
        ws = _SetWorkspace(S)
        _set_workspaces[S] = ws
    return ws


def set_scale_field(S, f, j, k, u):
    """E_k(f, Q(x, 2^-j))_{L^u(S)} at every atom x, as one array."""
    ws = _workspace(S)
    entry = ws.scale(j)
    A = ws.design(j, k)
    f = np.asarray(f, dtype=float)
    vals = np.zeros((len(entry["windows"]), entry["wmax"]))
    for row, w in enumerate(entry["windows"]):
        vals[row, : len(w)] = f[w]
    e_unique = _batched_E(vals, A, entry["weights"], u)
    return e_unique[entry["inverse"]]


def lp_on_set(values, S, p):
    return math.fsum(S.weight * abs(float(v)) ** p for v in values) ** (1.0 / p)


def besov_norm_on_set(f, S, params):
    """Discretized Besov norm of an atom-sampled function.

    Per scale: the L^p(S) norm of the local approximation field, weighted
    by 2^(j a) with a the (possibly trace-shifted) smoothness exponent,
    aggregated over scales in l^q; plus the L^p(S) norm of f itself.
    """
    f = np.asarray(f, dtype=float)
    js = params.scales(S.spacing)
    a = params.weight_exponent(S.n, S.d)
    per_scale = []
    for j in js:
        field_j = set_scale_field(S, f, j, params.k, params.u)
        per_scale.append((j, 2.0 ** (j * a) * lp_on_set(field_j, S, params.p)))
    semi = _lq_aggregate([v for _, v in per_scale], params.q)
    lp = lp_on_set(f, S, params.p)
    return NormReport(lp + semi, lp, semi, per_scale)


# ---------------------------------------------------------------------------
# Norms on a uniform grid


def _window_geometry(r, h, n_cells):
    """Stride and half-count of the centered sub-lattice window for a cube
    of half-side r on a grid of step h.  Ceiling keeps the per-side sample
    count bounded by GRID_SAMPLES_PER_SIDE."""
    stride = max(1, int(math.ceil(r / (GRID_SAMPLES_PER_SIDE * h) - 1e-12)))
    half_count = max(0, int(round(r / (stride * h) - 0.5)))
    return stride, half_count


def _extract_windows(values, eval_axes, stride, half_count):
    """Window tensor (N_eval, W) for every eval grid point."""
    offsets = stride * np.arange(-half_count, half_count + 1)
    out = values
    for axis, ax_idx in enumerate(eval_axes):
        take_idx = ax_idx[:, None] + offsets[None, :]
        out = np.take(out, take_idx, axis=2 * axis)
    n = len(eval_axes)
    # shape now (N0, W, N1, W, ...) -> (N0, N1, ..., W, W, ...)
    perm = [2 * a for a in range(n)] + [2 * a + 1 for a in range(n)]
    out = np.transpose(out, perm)
    n_eval = int(np.prod(out.shape[:n]))
    return out.reshape(n_eval, -1), offsets


def _grid_eval_axes(f, region, margin_cells):
    """Per-axis eval indices: midpoints inside the region with full margin."""
    axes = []
    for axis in range(f.n):
        pts = f.axis_points(axis)
        lo = region.center[axis] - region.half_side
        hi = region.center[axis] + region.half_side
        ok = np.flatnonzero(
            (pts >= lo - 1e-12)
            & (pts <= hi + 1e-12)
            & (np.arange(len(pts)) >= margin_cells)
            & (np.arange(len(pts)) <= len(pts) - 1 - margin_cells)
        )
        if ok.size == 0:
            raise ResolutionError("no grid points admit the largest scale window")
        axes.append(ok)
    return axes


def grid_scale_fields(f, region, params):
    """Local approximation fields E_k(f, Q(., 2^-j))_{L^u} on a common set
    of interior eval points, one array per surviving scale.

    Returns (fields dict j -> (N_eval,), cell volume of the eval lattice).
    """
    h = f.step
    js = params.scales(h)
    geoms = {j: _window_geometry(2.0**-j, h, f.shape[0]) for j in js}
    margin = max(s * m for s, m in geoms.values())
    eval_axes = _grid_eval_axes(f, region, margin)
    fields = {}
    for j in js:
        stride, half_count = geoms[j]
        win, offsets = _extract_windows(f.values, eval_axes, stride, half_count)
        rel = offsets * h / (2.0 ** (1 - j))
        mesh = np.meshgrid(*([rel] * f.n), indexing="ij")
        rel_pts = np.stack([m.ravel() for m in mesh], axis=-1)
        A = _batched_design(rel_pts, params.k)
        weights = np.ones_like(win)
        fields[j] = _batched_E(win, A, weights, params.u)
    return fields, h**f.n


def besov_norm_on_grid(f, region, params):
    """Discretized Besov norm of a grid function over the evaluation region.

    L^p integrals are midpoint sums; the f term uses the whole grid, the
    per-scale fields the interior eval points.
    """
    fields, cell = grid_scale_fields(f, region, params)
    per_scale = []
    for j, e in sorted(fields.items()):
        lp_j = (math.fsum((e**params.p).tolist()) * cell) ** (1.0 / params.p)
        per_scale.append((j, 2.0 ** (j * params.alpha) * lp_j))
    semi = _lq_aggregate([v for _, v in per_scale], params.q)
    lp = (math.fsum((np.abs(f.values.ravel()) ** params.p).tolist()) * cell) ** (
        1.0 / params.p
    )
    return NormReport(lp + semi, lp, semi, per_scale)


def tl_norm_on_grid(f, region, params):
    """Discretized Triebel-Lizorkin norm: scales aggregate pointwise into
    the g-function first, then in L^p.  Requires u = 1."""
    if params.u != 1:
        raise ParameterError("the Triebel-Lizorkin norm uses u = 1")
    fields, cell = grid_scale_fields(f, region, params)
    g_pow = None
    for j, e in sorted(fields.items()):
        term = (2.0 ** (j * params.alpha) * e) ** params.q
        g_pow = term if g_pow is None else g_pow + term
    g = g_pow ** (1.0 / params.q)
    semi = (math.fsum((g**params.p).tolist()) * cell) ** (1.0 / params.p)
    lp = (math.fsum((np.abs(f.values.ravel()) ** params.p).tolist()) * cell) ** (
        1.0 / params.p
    )
    per_scale = [
        (j, 2.0 ** (j * params.alpha) * (math.fsum((e**params.p).tolist()) * cell) ** (1.0 / params.p))
        for j, e in sorted(fields.items())
    ]
    return NormReport(lp + semi, lp, semi, per_scale)


def sharp_maximal(f, x, params):
    """Sharp maximal function sup_r r^-alpha E_k(f, Q(x, r))_{L^1} over the
    dyadic ladder, with k = floor(alpha) + 1."""
    k = int(math.floor(params.alpha)) + 1
    h = f.step
    js = params.scales(h)
    idx = f.nearest_index(x)
    best = 0.0
    for j in js:
        stride, half_count = _window_geometry(2.0**-j, h, f.shape[0])
        if any(
            idx[a] - stride * half_count < 0
            or idx[a] + stride * half_count > f.shape[a] - 1
            for a in range(f.n)
        ):
            continue
        eval_axes = [np.array([idx[a]]) for a in range(f.n)]
        win, offsets = _extract_windows(f.values, eval_axes, stride, half_count)
        rel = offsets * h / (2.0 ** (1 - j))
        mesh = np.meshgrid(*([rel] * f.n), indexing="ij")
        rel_pts = np.stack([m.ravel() for m in mesh], axis=-1)
        A = _batched_design(rel_pts, k)
        e = _batched_E(win, A, np.ones_like(win), 1)[0]
        best = max(best, 2.0 ** (j * params.alpha) * float(e))
    return best


# ---------------------------------------------------------------------------
# Hardy-type inequalities


def hardy_check(a, sigma, p, direction):
    """Both sides of the dyadically weighted Hardy inequality, in 50-digit
    arithmetic.  direction="prefix" needs sigma < 0 (inner sums over i <= j),
    direction="tail" needs sigma > 0 (inner sums over i >= j)."""
    if direction not in ("prefix", "tail"):
        raise ParameterError("direction must be 'prefix' or 'tail'")
    if direction == "prefix" and not sigma < 0:
        raise ParameterError("prefix direction requires sigma < 0")
    if direction == "tail" and not sigma > 0:
        raise ParameterError("tail direction requires sigma > 0")
    if any(x < 0 for x in a):
        raise ParameterError("sequence must be nonnegative")
    with mp.workdps(50):
        seq = [mpf(x) for x in a]
        n = len(seq)
        if direction == "prefix":
            cums, acc = [], mpf(0)
            for x in seq:
                acc += x
                cums.append(acc)
        else:
            cums, acc = [None] * n, mpf(0)
            for i in range(n - 1, -1, -1):
                acc += seq[i]
                cums[i] = acc
        w = [mpf(2) ** (mpf(sigma) * j) for j in range(n)]
        lhs = mp.fsum(w[j] * cums[j] ** p for j in range(n))
        rhs = mp.fsum(w[j] * seq[j] ** p for j in range(n))
        ratio = lhs / rhs if rhs > 0 else (mpf(0) if lhs == 0 else mp.inf)
        return float(lhs), float(rhs), float(ratio)


# ---------------------------------------------------------------------------
# Porous summation estimate


@dataclass
class PorousSummationResult:
    lhs: float
    rhs: float
    ratio: float
    separated_rhs: float = None
    separated_ratio: float = None
    vacuous: bool = False


def _rasterize(grid_region, per_axis, cubes_and_values, power):
    shape = (per_axis,) * grid_region.n
    acc = np.zeros(shape)
    from .grids import GridFunction

    gf = GridFunction(grid_region, acc)
    for cube, val in cubes_and_values:
        if val == 0:
            continue
        slices = gf.index_slices_for_cube(cube)
        if any(i0 > i1 for i0, i1 in slices):
            continue
        acc[tuple(slice(i0, i1 + 1) for i0, i1 in slices)] += val**power
    return acc, gf.step


def porous_summation_check(S, family, a, p, q, per_axis=512, selection=None):
    """Both sides of the bounded-overlap summation estimate
    ||sum chi_Q a_Q||_p <= c ||(sum (chi_Q a_Q)^q)^(1/q)||_p by grid
    quadrature over the family region.

    With a PorousSelection the intermediate hole-cube comparison
    ||sum chi_Q a_Q||_p <= c ||sum chi_r(Q) a_Q||_p is evaluated as well.
    """
    if not (1 < p < math.inf and 1 < q < math.inf):
        raise ParameterError("p and q must lie in (1, inf)")
    if not family.cubes:
        return PorousSummationResult(0.0, 0.0, 0.0, vacuous=True)
    fam = set(family.cubes)
    for cube in a:
        if cube not in fam:
            raise ParameterError(f"coefficient map not supported on the family: {cube}")
    if any(v < 0 for v in a.values()):
        raise ParameterError("coefficients must be nonnegative")
    region = family.region if family.region is not None else S.bounding
    pairs = [(cube.to_cube(), val) for cube, val in sorted(a.items(), key=lambda t: t[0].key())]
    lin, h = _rasterize(region, per_axis, pairs, 1.0)
    pow_q, _ = _rasterize(region, per_axis, pairs, q)
    cell = h**region.n
    lhs = (math.fsum((lin**p).ravel().tolist()) * cell) ** (1.0 / p)
    rhs = (math.fsum((pow_q ** (p / q)).ravel().tolist()) * cell) ** (1.0 / p)
    ratio = lhs / rhs if rhs > 0 else 0.0
    result = PorousSummationResult(lhs, rhs, ratio)
    if selection is not None:
        sel_pairs = [
            (selection.assignment[cube].to_cube(), val)
            for cube, val in sorted(a.items(), key=lambda t: t[0].key())
            if cube in selection.assignment
        ]
        sep, _ = _rasterize(region, per_axis, sel_pairs, 1.0)
        sep_rhs = (math.fsum((sep**p).ravel().tolist()) * cell) ** (1.0 / p)
        result.separated_rhs = sep_rhs
        result.separated_ratio = lhs / sep_rhs if sep_rhs > 0 else 0.0
    return result
