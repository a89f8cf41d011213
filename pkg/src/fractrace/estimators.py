"""Scikit-learn compatible wrappers around the core operators.

The extension, trace and norm computations are fit/transform shaped: fit
binds the geometry (an atom cloud and an evaluation grid), transform maps
stacked function samples through the operator.  Parameters follow sklearn
conventions so the estimators clone and grid-search cleanly.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .dset import DSet
from .exceptions import ParameterError
from .extension import WhitneyExtension, trace
from .grids import GridFunction
from .norms import NormParams, besov_norm_on_set


def check_atom_samples(X, n_atoms):
    """Coerce X to shape (n_funcs, n_atoms); accepts a single sample row."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != n_atoms:
        raise ParameterError(
            f"expected samples of {n_atoms} atom values, got shape {X.shape}"
        )
    return X


def check_cloud(S):
    if not isinstance(S, DSet):
        raise ParameterError("fit expects a DSet atom cloud")
    return S


def default_region(S, margin=1.0):
    """Dyadic-aligned hull of the cloud's bounding cube plus a margin."""
    from .geometry import dyadic_hull

    return dyadic_hull(S.bounding, margin=margin)


class WhitneyExtender(BaseEstimator, TransformerMixin):
    """Extension operator from atom samples to a uniform grid.

    fit(S) binds the atom cloud and precomputes the grid layout; transform
    maps rows of atom samples to extension fields of shape
    (n_funcs, grid_size, ..., grid_size).
    """

    def __init__(self, k=1, delta=16000.0, grid_size=128, margin=1.0):
        self.k = k
        self.delta = delta
        self.grid_size = grid_size
        self.margin = margin

    def fit(self, S, y=None):
        S = check_cloud(S)
        self.cloud_ = S
        self.region_ = default_region(S, self.margin)
        self.grid_ = GridFunction.zeros(self.region_, self.grid_size)
        self.extension_ = WhitneyExtension(S, self.k, self.delta)
        self.extension_.prepare(self.grid_)
        return self

    def transform(self, X):
        X = check_atom_samples(X, len(self.cloud_.atoms))
        out = np.empty((len(X),) + self.grid_.shape)
        for i, row in enumerate(X):
            out[i] = self.extension_.transform(row, self.grid_).values
        return out

    def transform_field(self, x):
        """Single-sample transform returning the full ExtensionField."""
        x = check_atom_samples(x, len(self.cloud_.atoms))[0]
        return self.extension_.transform(x, self.grid_)


class CubeAverageTracer(BaseEstimator, TransformerMixin):
    """Trace operator: cube-average restriction of grid fields to the atoms.

    transform accepts fields shaped (n_funcs, n, ..., n) over the region
    configured at fit time and returns (n_funcs, n_atoms) atom samples.
    """

    def __init__(self, t_ladder=(0.25, 0.125, 0.0625), grid_size=128, margin=1.0):
        self.t_ladder = t_ladder
        self.grid_size = grid_size
        self.margin = margin

    def fit(self, S, y=None):
        S = check_cloud(S)
        self.cloud_ = S
        self.region_ = default_region(S, self.margin)
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == self.region_.n:
            X = X[None, ...]
        out = np.empty((len(X), len(self.cloud_.atoms)))
        for i, vals in enumerate(X):
            gf = GridFunction(self.region_, vals)
            out[i] = trace(gf, self.cloud_, list(self.t_ladder)).values
        return out


class BesovSetNorm(BaseEstimator, TransformerMixin):
    """Besov norm functional on atom samples.

    transform returns one norm value per sample row; norm_report exposes
    the per-scale breakdown of a single sample.
    """

    def __init__(self, alpha=0.9, p=2.0, q=2.0, u=1, k=1, j_min=0, j_max=8,
                 trace_weight=False):
        self.alpha = alpha
        self.p = p
        self.q = q
        self.u = u
        self.k = k
        self.j_min = j_min
        self.j_max = j_max
        self.trace_weight = trace_weight

    def _params(self):
        return NormParams(
            alpha=self.alpha,
            p=self.p,
            q=self.q,
            u=self.u,
            k=self.k,
            j_min=self.j_min,
            j_max=self.j_max,
            trace_weight=self.trace_weight,
        )

    def fit(self, S, y=None):
        self.cloud_ = check_cloud(S)
        self.params_ = self._params()
        return self

    def transform(self, X):
        X = check_atom_samples(X, len(self.cloud_.atoms))
        return np.array(
            [[besov_norm_on_set(row, self.cloud_, self.params_).total] for row in X]
        )

    def norm_report(self, x):
        x = check_atom_samples(x, len(self.cloud_.atoms))[0]
        return besov_norm_on_set(x, self.cloud_, self.params_)
