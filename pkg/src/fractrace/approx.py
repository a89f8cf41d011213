"""Local polynomial approximation machinery.

Normalized best approximation by polynomials of degree < k in L^u (u = 1, 2)
over atomic and Lebesgue-grid measures, orthonormal polynomial projections
with their moment representation formula, and the Remez / reverse-Holder /
Markov inequality certifiers.

Polynomials are always expressed in the anchored scaled monomial basis
(x - x_Q)^nu / l(Q)^{|nu|} of the cube they belong to, which keeps the
least-squares problems well conditioned at small scales.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ConvergenceError,
    DegenerateGeometryError,
    EmptySupportError,
    GeometryError,
    InconsistencyError,
)

IRLS_EPS = 1e-12
IRLS_TOL = 1e-9
IRLS_SMOOTH_TOL = 1e-11
IRLS_CONT_START = 1e-2
IRLS_CONT_FACTOR = 0.25
IRLS_MAXIT = 500
GRAM_TOL = 1e-10
RANK_TOL = 1e-8
QUAD_BASE = 32
QUAD_TOL = 1e-6
QUAD_MAX = 512


def multi_indices(n, max_degree):
    """All multi-indices with |nu| <= max_degree, graded lexicographic order."""
    if max_degree < 0:
        return []
    out = []
    for deg in range(max_degree + 1):
        for combo in itertools.product(range(deg + 1), repeat=n):
            if sum(combo) == deg:
                out.append(combo)
    return out


def space_dim(n, k):
    """Dimension of polynomials of degree <= k - 1 in n variables."""
    if k <= 0:
        return 0
    return math.comb(n + k - 1, n)


@dataclass
class PolySpace:
    """Polynomials of degree <= k - 1 anchored at a cube.

    Follows the E_k convention: k indexes the approximation order, the
    space itself has maximal degree k - 1 and P_{-1} = {0} for k = 0.
    Basis functions are (x - x_Q)^nu / l(Q)^{|nu|}.
    """

    n: int
    k: int
    cube: object
    indices: list = field(init=False)

    def __post_init__(self):
        self.indices = multi_indices(self.n, self.k - 1)

    @property
    def dim(self):
        return len(self.indices)

    def design_matrix(self, points):
        return design_matrix(points, self.cube, self.indices)

    def eval(self, coeffs, points):
        return eval_poly(coeffs, self.indices, self.cube, points)


def design_matrix(points, cube, indices):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rel = (pts - cube.center) / cube.side
    cols = []
    for nu in indices:
        col = np.ones(len(pts))
        for axis, power in enumerate(nu):
            if power:
                col = col * rel[:, axis] ** power
        cols.append(col)
    if not cols:
        return np.zeros((len(pts), 0))
    return np.stack(cols, axis=1)


def eval_poly(coeffs, indices, cube, points):
    A = design_matrix(points, cube, indices)
    return A @ np.asarray(coeffs, dtype=float)


def eval_poly_grad(coeffs, indices, cube, points):
    """Gradient of the anchored polynomial at the points, shape (m, n)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rel = (pts - cube.center) / cube.side
    n = pts.shape[1]
    grad = np.zeros_like(pts)
    for c, nu in zip(coeffs, indices):
        if c == 0:
            continue
        for axis in range(n):
            if nu[axis] == 0:
                continue
            term = np.full(len(pts), c * nu[axis] / cube.side)
            for a2, power in enumerate(nu):
                p = power - 1 if a2 == axis else power
                if p:
                    term = term * rel[:, a2] ** p
            grad[:, axis] += term
    return grad


@dataclass
class ApproxResult:
    """Value and minimizer of a normalized local best approximation."""

    value: float
    minimizer: np.ndarray
    u: int
    k: int
    cube: object
    residual_norm_history: list = field(default_factory=list)
    non_unique: bool = False


def _normalized_weights(weights):
    w = np.asarray(weights, dtype=float)
    total = math.fsum(w.tolist())
    if total <= 0:
        raise EmptySupportError("measure has no mass on the cube")
    return w / total


def l1_fit_exact(values, A, weights):
    """Exact weighted L^1 polynomial fit value via its linear program.

    min sum w (s+ + s-) subject to A c + s+ - s- = f, s+/- >= 0.  Used as a
    fallback when IRLS converges too slowly near a degenerate optimum.
    """
    from scipy.optimize import linprog
    from scipy.sparse import csc_matrix, eye, hstack

    m, d = A.shape
    c_obj = np.concatenate([np.zeros(d), weights, weights])
    A_eq = hstack([csc_matrix(A), eye(m, format="csc"), -eye(m, format="csc")], format="csc")
    bounds = [(None, None)] * d + [(0, None)] * (2 * m)
    res = linprog(c_obj, A_eq=A_eq, b_eq=values, bounds=bounds, method="highs")
    if not res.success:
        raise ConvergenceError(f"L1 linear program failed: {res.message}")
    coef = res.x[:d]
    return float(res.fun), coef


def weighted_best_approx(values, points, weights, cube, k, u):
    """Best approximation of sampled values by degree < k polynomials in the
    L^u norm of the normalized discrete measure.

    u = 2 is an exact weighted least-squares solve; u = 1 runs smoothed IRLS
    (eps = 1e-12) until the value changes by less than 1e-9.
    """
    if u not in (1, 2):
        raise GeometryError("u must be 1 or 2")
    values = np.asarray(values, dtype=float)
    w = _normalized_weights(weights)
    space = PolySpace(cube.n, k, cube)
    if space.dim == 0:
        val = float(np.sum(w * np.abs(values) ** u) ** (1.0 / u))
        return ApproxResult(val, np.zeros(0), u, k, cube)
    A = space.design_matrix(points)
    sw = np.sqrt(w)
    non_unique = len(values) < space.dim
    coef, *_ = np.linalg.lstsq(A * sw[:, None], values * sw, rcond=None)
    if u == 2:
        res = values - A @ coef
        val = float(np.sqrt(max(np.sum(w * res**2), 0.0)))
        return ApproxResult(val, coef, u, k, cube, [val], non_unique)
    # IRLS for u = 1 with smoothing continuation down to the eps floor;
    # at the floor the reweighting decreases the smoothed objective
    # sum w sqrt(res^2 + eps^2) monotonically, giving the stopping rule
    history = []
    res = values - A @ coef
    eps0 = max(IRLS_CONT_START * float(np.sum(w * np.abs(res))), IRLS_EPS)
    smooth = math.inf
    for t in range(IRLS_MAXIT):
        eps_t = max(eps0 * IRLS_CONT_FACTOR**t, IRLS_EPS)
        irw = w / np.sqrt(res**2 + eps_t**2)
        siw = np.sqrt(irw)
        coef, *_ = np.linalg.lstsq(A * siw[:, None], values * siw, rcond=None)
        res = values - A @ coef
        val = float(np.sum(w * np.abs(res)))
        history.append(val)
        new_smooth = float(np.sum(w * np.sqrt(res**2 + IRLS_EPS**2)))
        delta = smooth - new_smooth
        smooth = new_smooth
        if eps_t <= IRLS_EPS * (1 + 1e-12) and delta <= IRLS_SMOOTH_TOL * (
            1.0 + new_smooth
        ):
            return ApproxResult(val, coef, u, k, cube, history, non_unique)
    # stalled near a degenerate optimum: solve the linear program exactly
    val, coef = l1_fit_exact(values, A, w)
    history.append(val)
    return ApproxResult(val, coef, u, k, cube, history, non_unique)


def _midpoint_grid(cube, per_axis):
    axes = [
        cube.center[i] - cube.half_side + cube.side * (np.arange(per_axis) + 0.5) / per_axis
        for i in range(cube.n)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def lebesgue_best_approx(func, cube, k, u):
    """Best approximation of a callable on the cube w.r.t. (1/|Q|) * Lebesgue,
    by midpoint quadrature refined x2 until the value is stable to 1e-6."""
    per_axis = QUAD_BASE
    prev = None
    while True:
        pts = _midpoint_grid(cube, per_axis)
        vals = np.asarray(func(pts), dtype=float)
        res = weighted_best_approx(vals, pts, np.full(len(pts), 1.0), cube, k, u)
        if prev is not None and abs(res.value - prev) <= QUAD_TOL * max(1.0, abs(res.value)):
            return res
        prev = res.value
        per_axis *= 2
        if per_axis > QUAD_MAX:
            return res


def best_approx(f, Q, measure, k, u, S=None):
    """Normalized local best approximation E_k(f, Q) in L^u.

    measure = "dset-atoms": f is an array of values at the atoms of S (or a
    callable evaluated there); the measure is the atomic one restricted to
    the closed cube.  measure = "lebesgue-grid": f is a callable and the
    integral is a refined midpoint quadrature over Q.
    """
    if measure == "dset-atoms":
        if S is None:
            raise GeometryError("dset-atoms measure needs S")
        idx = S.atoms_in_cube(Q)
        if len(idx) == 0:
            raise EmptySupportError("no atoms in the cube")
        vals = f(S.atoms[idx]) if callable(f) else np.asarray(f, dtype=float)[idx]
        return weighted_best_approx(
            vals, S.atoms[idx], np.full(len(idx), S.weight), Q, k, u
        )
    if measure == "lebesgue-grid":
        if not callable(f):
            raise GeometryError("lebesgue-grid measure needs a callable")
        return lebesgue_best_approx(f, Q, k, u)
    raise GeometryError(f"unknown measure {measure!r}")


def monotonicity_factor(E1, E2, S, tol=1e-12):
    """Ratio E1 / ((r2/r1)^(d/u) E2) for nested cubes; 0/0 returns 0 (vacuous)."""
    if not E2.cube.contains_cube(E1.cube):
        raise GeometryError("Q1 must be contained in Q2")
    if E1.u != E2.u:
        raise GeometryError("results must share the exponent u")
    scale = (E2.cube.half_side / E1.cube.half_side) ** (S.d / E1.u)
    if E2.value <= tol:
        if E1.value > tol:
            raise InconsistencyError(
                f"nested approximation inconsistency: E1={E1.value}, E2={E2.value}"
            )
        return 0.0
    return E1.value / (scale * E2.value)


# ---------------------------------------------------------------------------
# Projections


@dataclass
class Projection:
    """Orthonormal-basis projection onto degree <= k polynomials over Q ∩ S.

    onb rows express the orthonormal polynomials P_beta in the anchored
    monomial basis; repr_h rows express the moment polynomials h_{Q, nu} of
    the representation formula in the same basis.
    """

    cube: object
    k: int
    indices: list
    onb: np.ndarray
    repr_h: np.ndarray
    h_sup_norms: np.ndarray
    atom_idx: np.ndarray
    mass: float
    gram_error: float
    design: np.ndarray = None
    weights: np.ndarray = None

    @property
    def dim(self):
        return len(self.indices)

    def _values_at_atoms(self, f, S):
        if callable(f):
            return np.asarray(f(S.atoms[self.atom_idx]), dtype=float)
        return np.asarray(f, dtype=float)[self.atom_idx]

    def coefficients(self, f, S):
        """Anchored-basis coefficients of P_{k,Q} f via the representation
        formula: coefficient of m_nu is the h_{Q,nu}-average of f."""
        vals = self._values_at_atoms(f, S)
        h_at_atoms = self.design @ self.repr_h.T
        return (self.weights[:, None] * h_at_atoms * vals[:, None]).sum(axis=0) / self.mass

    def coefficients_onb(self, f, S):
        """Anchored-basis coefficients via the direct ONB sum."""
        vals = self._values_at_atoms(f, S)
        p_at_atoms = self.design @ self.onb.T
        inner = (self.weights[:, None] * p_at_atoms * vals[:, None]).sum(axis=0)
        return inner @ self.onb

    def apply(self, f, S, points):
        return eval_poly(self.coefficients(f, S), self.indices, self.cube, points)


def build_projection(S, Q, k):
    """Orthonormalize the anchored monomials of degree <= k over Q ∩ S and
    assemble the representation polynomials h_{Q, nu}."""
    idx = S.atoms_in_cube(Q)
    if len(idx) == 0:
        raise EmptySupportError("no atoms in the cube")
    indices = multi_indices(S.n, k)
    A = design_matrix(S.atoms[idx], Q, indices)
    w = np.full(len(idx), S.weight)
    mass = float(w.sum())
    dim = len(indices)
    # modified Gram-Schmidt, two passes, on rows of the coefficient matrix
    R = np.eye(dim)
    cols = A.copy()
    for j in range(dim):
        for _ in range(2):
            for i in range(j):
                proj = float(np.sum(w * cols[:, j] * cols[:, i]))
                cols[:, j] -= proj * cols[:, i]
                R[j] -= proj * R[i]
        norm2 = float(np.sum(w * cols[:, j] ** 2))
        orig = float(np.sum(w * A[:, j] ** 2))
        if norm2 <= (RANK_TOL**2) * max(orig, 1e-300):
            raise DegenerateGeometryError(
                f"atoms in {Q!r} do not span degree-{k} polynomials "
                f"(pivot {j}, {len(idx)} atoms)"
            )
        s = 1.0 / math.sqrt(norm2)
        cols[:, j] *= s
        R[j] *= s
    gram = (w[:, None] * cols).T @ cols
    gram_error = float(np.max(np.abs(gram - np.eye(dim))))
    # h_{Q,nu} = mass * sum_beta R[beta, nu] P_beta, rows indexed by nu
    H = mass * (R.T @ R)
    grid = _midpoint_grid(Q, 64 if S.n <= 2 else 16)
    h_vals = design_matrix(grid, Q, indices) @ H.T
    h_sup = np.max(np.abs(h_vals), axis=0)
    return Projection(
        cube=Q,
        k=k,
        indices=indices,
        onb=R,
        repr_h=H,
        h_sup_norms=h_sup,
        atom_idx=idx,
        mass=mass,
        gram_error=gram_error,
        design=A,
        weights=w,
    )


def near_best_check(S, Q, k, u, f, tol=1e-10):
    """Ratio of the projection residual to the best approximation
    E_{k+1}(f, Q)_{L^u(S)}; 0/0 is a vacuous pass returning 0."""
    proj = build_projection(S, Q, k)
    vals = proj._values_at_atoms(f, S)
    fitted = proj.design @ proj.coefficients(f, S)
    wn = proj.weights / proj.mass
    num = float(np.sum(wn * np.abs(vals - fitted) ** u) ** (1.0 / u))
    denom = best_approx(f, Q, "dset-atoms", k + 1, u, S=S).value
    if denom <= tol:
        if num > 10 * tol + 1e-9:
            raise InconsistencyError(
                f"projection residual {num} exceeds zero best approximation"
            )
        return 0.0
    return num / denom


# ---------------------------------------------------------------------------
# Inequality certifiers


@dataclass
class RatioSweep:
    """Outcome of a random-polynomial inequality sweep."""

    max_ratio: float
    trials: int
    skipped: int
    witness: dict

    def __float__(self):
        return self.max_ratio


def _normalized_poly_norm(vals, weights, exponent):
    w = _normalized_weights(weights)
    if exponent == math.inf:
        return float(np.max(np.abs(vals)))
    return float(np.sum(w * np.abs(vals) ** exponent) ** (1.0 / exponent))


def monomial_gram(indices):
    """Exact Gram matrix of the anchored basis w.r.t. (1/|Q|) * Lebesgue on Q.

    In the rescaled coordinate s = (x - x_Q)/l(Q) each axis integral is
    int_{-1/2}^{1/2} s^m ds = 0 for odd m and (1/2)^m / (m + 1) otherwise.
    """
    dim = len(indices)
    G = np.zeros((dim, dim))
    for a in range(dim):
        for b in range(a, dim):
            val = 1.0
            for m in (p + q for p, q in zip(indices[a], indices[b])):
                if m % 2 == 1:
                    val = 0.0
                    break
                val *= 0.5**m / (m + 1)
            G[a, b] = G[b, a] = val
    return G


def _lebesgue_poly_norm(coeffs, indices, cube, exponent):
    per_axis = QUAD_BASE
    prev = None
    while True:
        pts = _midpoint_grid(cube, per_axis)
        vals = eval_poly(coeffs, indices, cube, pts)
        if exponent == math.inf:
            out = float(np.max(np.abs(vals)))
        else:
            out = float(np.mean(np.abs(vals) ** exponent) ** (1.0 / exponent))
        if prev is not None and abs(out - prev) <= QUAD_TOL * max(1.0, abs(out)):
            return out
        prev = out
        per_axis *= 2
        if per_axis > QUAD_MAX:
            return out


def polynomial_norm_ratio(S, Q, Qp, coeffs, u, r):
    """(lhs, rhs) of the Remez comparison for one polynomial: normalized
    Lebesgue L^r norm over Q against the normalized atomic L^u norm over
    Qp ∩ S.  coeffs live in the anchored basis of Q (degree inferred)."""
    dim = len(coeffs)
    deg = 0
    while space_dim(S.n, deg + 1) < dim:
        deg += 1
    indices = multi_indices(S.n, deg)
    lhs = _lebesgue_poly_norm(coeffs, indices, Q, r)
    idx = S.atoms_in_cube(Qp)
    if len(idx) == 0:
        raise EmptySupportError("no atoms in the inner cube")
    vals = eval_poly(coeffs, indices, Q, S.atoms[idx])
    rhs = _normalized_poly_norm(vals, np.full(len(idx), S.weight), u)
    return lhs, rhs


def remez_check(S, Q, Qp, k, u, r, trials, seed, rhs_floor=1e-12):
    """Max of lhs/rhs over random degree <= k polynomials with coefficients
    uniform in [-1, 1] in the anchored basis of Q; near-zero rhs trials are
    skipped and counted."""
    if not Q.contains_cube(Qp):
        raise GeometryError("Qp must be contained in Q")
    rng = np.random.default_rng(seed)
    indices = multi_indices(S.n, k)
    dim = len(indices)
    idx = S.atoms_in_cube(Qp)
    if len(idx) == 0:
        raise EmptySupportError("no atoms in the inner cube")
    A_atoms = design_matrix(S.atoms[idx], Q, indices)
    w = _normalized_weights(np.full(len(idx), S.weight))
    if r == 2:
        G = monomial_gram(indices)  # exact normalized integrals over Q

        def leb_norm(c):
            return float(math.sqrt(max(c @ G @ c, 0.0)))

    else:
        A_quad = design_matrix(_midpoint_grid(Q, 256 if S.n <= 2 else 24), Q, indices)

        def leb_norm(c):
            vals = A_quad @ c
            if r == math.inf:
                return float(np.max(np.abs(vals)))
            return float(np.mean(np.abs(vals) ** r) ** (1.0 / r))

    best, witness, skipped = -math.inf, None, 0
    for t in range(trials):
        coeffs = rng.uniform(-1.0, 1.0, size=dim)
        lhs = leb_norm(coeffs)
        vals = A_atoms @ coeffs
        if u == math.inf:
            rhs = float(np.max(np.abs(vals)))
        else:
            rhs = float(np.sum(w * np.abs(vals) ** u) ** (1.0 / u))
        if rhs <= rhs_floor:
            skipped += 1
            continue
        ratio = lhs / rhs
        if ratio > best:
            best, witness = ratio, {"trial": t, "lhs": lhs, "rhs": rhs}
    if witness is None:
        return RatioSweep(0.0, trials, skipped, {"all_skipped": True})
    return RatioSweep(best, trials, skipped, witness)


def markov_ratio(S, Q, coeffs, den_floor=1e-12):
    """l(Q) * max|grad p| / max|p| over the atoms of Q, or None when the
    denominator underflows."""
    dim = len(coeffs)
    deg = 0
    while space_dim(S.n, deg + 1) < dim:
        deg += 1
    indices = multi_indices(S.n, deg)
    idx = S.atoms_in_cube(Q)
    if len(idx) == 0:
        raise EmptySupportError("no atoms in the cube")
    pts = S.atoms[idx]
    vals = eval_poly(coeffs, indices, Q, pts)
    den = float(np.max(np.abs(vals)))
    if den <= den_floor:
        return None
    grads = eval_poly_grad(coeffs, indices, Q, pts)
    num = float(np.max(np.linalg.norm(grads, axis=1)))
    return Q.side * num / den


def markov_check(S, Q, k, trials, seed, den_floor=1e-12):
    """Max Markov ratio over random degree <= k polynomials on Q."""
    rng = np.random.default_rng(seed)
    indices = multi_indices(S.n, k)
    idx = S.atoms_in_cube(Q)
    if len(idx) == 0:
        raise EmptySupportError("no atoms in the cube")
    pts = S.atoms[idx]
    A = design_matrix(pts, Q, indices)
    # per-axis differentiation matrices in the anchored basis
    D = []
    for axis in range(S.n):
        mat = np.zeros((len(indices), len(indices)))
        for col, nu in enumerate(indices):
            if nu[axis] == 0:
                continue
            target = tuple(p - 1 if a == axis else p for a, p in enumerate(nu))
            mat[indices.index(target), col] = nu[axis] / Q.side
        D.append(mat)
    best, witness, skipped = -math.inf, None, 0
    for t in range(trials):
        coeffs = rng.uniform(-1.0, 1.0, size=len(indices))
        den = float(np.max(np.abs(A @ coeffs)))
        if den <= den_floor:
            skipped += 1
            continue
        grads = np.stack([A @ (mat @ coeffs) for mat in D], axis=1)
        num = float(np.max(np.linalg.norm(grads, axis=1)))
        ratio = Q.side * num / den
        if ratio > best:
            best, witness = ratio, {"trial": t}
    if witness is None:
        return RatioSweep(0.0, trials, skipped, {"all_skipped": True})
    return RatioSweep(best, trials, skipped, witness)
