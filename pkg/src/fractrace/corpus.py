"""Deterministic test-function corpora on atom clouds.

The corpus spans the regimes every inequality distinguishes: constants and
low-degree polynomials (vacuous cases), tents centered at atoms (generic
Lipschitz kinks) and random multiscale bump sums with prescribed per-scale
decay (generic smoothness-alpha candidates).
"""

import numpy as np


def _tent(points, center, width, lip):
    d = np.max(np.abs(points - center), axis=-1)
    return np.maximum(0.0, 1.0 - lip * d / max(width, 1e-12)) * width


def _poly_values(points, rng, max_degree):
    vals = np.zeros(len(points))
    for dx in range(max_degree + 1):
        for dy in range(max_degree + 1 - dx):
            c = rng.uniform(-1.0, 1.0)
            vals += c * points[:, 0] ** dx * points[:, 1] ** dy
    return vals


def _multiscale(points, rng, n_scales, decay):
    vals = np.zeros(len(points))
    for j in range(n_scales):
        width = 2.0**-j
        for _ in range(2):
            center = points[rng.integers(0, len(points))]
            amp = rng.uniform(0.5, 1.0) * 2.0 ** (-decay * j)
            d = np.max(np.abs(points - center), axis=-1)
            vals += amp * np.maximum(0.0, 1.0 - d / width)
    return vals


def atom_corpus(S, k, count=20, seed=0):
    """Named corpus of atom-sampled functions, deterministic given the seed."""
    rng = np.random.default_rng(seed)
    pts = S.atoms
    out = [("const", np.ones(len(pts)))]
    if k >= 2:
        out.append(("poly_deg<k", _poly_values(pts, rng, k - 1)))
    else:
        out.append(("const_scaled", np.full(len(pts), rng.uniform(0.5, 2.0))))
    n_scales = max(2, int(np.log2(max(4.0 / max(S.spacing, 1e-9), 2.0))) - 1)
    while len(out) < count:
        i = len(out)
        if i % 3 == 0:
            center = pts[rng.integers(0, len(pts))]
            out.append((f"tent_{i}", _tent(pts, center, rng.uniform(0.25, 1.0), 2.0)))
        else:
            decay = rng.uniform(0.5, 1.5)
            out.append((f"multiscale_{i}", _multiscale(pts, rng, n_scales, decay)))
    return out[:count]


def lipschitz_corpus(S, seed=0):
    """Small corpus of explicit Lipschitz functions (constant <= 2) for
    trace-identity experiments."""
    rng = np.random.default_rng(seed)
    pts = S.atoms
    center = pts[rng.integers(0, len(pts))]
    probe = rng.uniform(0.2, 0.8, size=S.n)
    return [
        ("affine", 0.3 + 0.8 * pts[:, 0] - 0.5 * pts[:, 1]),
        ("tent_L2", _tent(pts, center, 1.0, 2.0)),
        ("dist_to_point", np.max(np.abs(pts - probe), axis=-1)),
    ]
