"""Uniform midpoint-sample grids over a cube region."""

import json

import numpy as np

from .exceptions import GeometryError
from .geometry import Cube


class GridFunction:
    """Function samples at the midpoints of a uniform grid over a cube.

    values has one axis per space dimension; entry (i0, ..., i_{n-1}) sits
    at lo + (i + 0.5) * step componentwise.
    """

    def __init__(self, region, values):
        self.region = region
        self.values = np.asarray(values, dtype=float)
        if self.values.ndim != region.n:
            raise GeometryError("grid dimensionality does not match the region")
        sides = set(self.values.shape)
        self.shape = self.values.shape
        self.step = region.side / self.values.shape[0]
        if len(sides) != 1:
            # anisotropic grids are supported but share the leading step
            steps = [region.side / s for s in self.values.shape]
            if max(steps) - min(steps) > 1e-12:
                raise GeometryError("grid must be isotropic over the cube region")

    @property
    def n(self):
        return self.region.n

    @property
    def lo(self):
        return self.region.center - self.region.half_side

    def axis_points(self, axis):
        return self.lo[axis] + (np.arange(self.shape[axis]) + 0.5) * self.step

    def points(self):
        axes = [self.axis_points(i) for i in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def point_at(self, idx):
        return self.lo + (np.asarray(idx, dtype=float) + 0.5) * self.step

    def nearest_index(self, x):
        idx = np.floor((np.asarray(x, dtype=float) - self.lo) / self.step).astype(int)
        return tuple(np.clip(idx, 0, np.asarray(self.shape) - 1))

    def index_slices_for_cube(self, cube):
        """Per-axis index ranges whose midpoints lie in the closed cube."""
        out = []
        for axis in range(self.n):
            lo_q = cube.center[axis] - cube.half_side
            hi_q = cube.center[axis] + cube.half_side
            i0 = int(np.ceil((lo_q - self.lo[axis]) / self.step - 0.5 - 1e-12))
            i1 = int(np.floor((hi_q - self.lo[axis]) / self.step - 0.5 + 1e-12))
            out.append((max(i0, 0), min(i1, self.shape[axis] - 1)))
        return out

    @classmethod
    def from_callable(cls, region, n_per_axis, func):
        axes = [
            region.center[i]
            - region.half_side
            + region.side * (np.arange(n_per_axis) + 0.5) / n_per_axis
            for i in range(region.n)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        vals = np.asarray(func(pts), dtype=float).reshape((n_per_axis,) * region.n)
        return cls(region, vals)

    @classmethod
    def zeros(cls, region, n_per_axis):
        return cls(region, np.zeros((n_per_axis,) * region.n))

    def save_binary(self, path, sidecar_path):
        """Flat float64 binary plus a JSON sidecar describing the grid."""
        self.values.astype("<f8").tofile(path)
        side = {
            "shape": list(self.shape),
            "origin": (self.region.center - self.region.half_side).tolist(),
            "step": self.step,
        }
        if self.n == 2:
            side.update({"nx": self.shape[0], "ny": self.shape[1]})
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(side, fh, sort_keys=True)

    @classmethod
    def load_binary(cls, path, sidecar_path):
        with open(sidecar_path, encoding="utf-8") as fh:
            side = json.load(fh)
        shape = tuple(side["shape"])
        vals = np.fromfile(path, dtype="<f8").reshape(shape)
        origin = np.asarray(side["origin"])
        half = side["step"] * shape[0] / 2.0
        region = Cube(origin + half, half)
        return cls(region, vals)

    def save_csv(self, path):
        pts = self.points()
        flat = self.values.ravel()
        header = ",".join([f"x{i}" for i in range(self.n)] + ["value"])
        data = np.column_stack([pts, flat])
        np.savetxt(path, data, delimiter=",", header=header, comments="")
