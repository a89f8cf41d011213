import math
from fractions import Fraction

import numpy as np
import pytest

from fractrace.dset import build_dset, four_corner_cantor
from fractrace.exceptions import GeometryError, ResolutionError
from fractrace.extension import (
    WhitneyExtension,
    build_partition,
    bump_on_cube,
    decay_factor_check,
    extend,
    local_transfer_check,
    trace,
)
from fractrace.geometry import Cube, dyadic_hull, whitney_decompose
from fractrace.grids import GridFunction


@pytest.fixture(scope="module")
def ext5(cantor5, region5):
    ext = WhitneyExtension(cantor5, k=1, delta=16000.0)
    grid = GridFunction.zeros(region5, 128)
    ext.prepare(grid)
    return ext, grid


@pytest.fixture(scope="module")
def ext5k2(cantor5, region5):
    ext = WhitneyExtension(cantor5, k=2, delta=16000.0)
    grid = GridFunction.zeros(region5, 128)
    ext.prepare(grid)
    return ext, grid


class TestPartition:
    def test_sum_is_one_off_the_cloud(self, cantor5, region5):
        grid = GridFunction.zeros(region5, 64)
        d_min = float(np.min(cantor5.dist_many(grid.points())))
        assert d_min > 0
        min_level = int(math.ceil(-math.log2(d_min / 5.0)))
        cover = whitney_decompose(cantor5, region5, min_level=min_level)
        pou = build_partition(cover, grid)
        assert np.all(pou.normalization > 0)
        # normalized bumps sum to one by construction at every grid point
        total = np.zeros(grid.shape)
        for m, support in enumerate(pou.supports):
            slices = grid.index_slices_for_cube(support)
            if any(i0 > i1 for i0, i1 in slices):
                continue
            block = tuple(slice(i0, i1 + 1) for i0, i1 in slices)
            axes = [grid.axis_points(a)[block[a]] for a in range(2)]
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m2.ravel() for m2 in mesh], axis=-1)
            total[block] += pou.phi(m, pts).reshape([len(a) for a in axes])
        assert np.max(np.abs(total - 1.0)) < 1e-12

    def test_support_containment(self, cantor5, region5):
        cover = whitney_decompose(cantor5, region5, min_level=7)
        q = cover.cubes[0]
        support = q.to_cube().scaled(9 / 8)
        outside = support.center + support.half_side * 1.0001
        assert bump_on_cube(outside, support)[0] == 0.0
        inside = support.center
        assert bump_on_cube(inside, support)[0] > 0

    def test_coverage_gap_raises(self, cantor5, region5):
        # a shallow cover leaves the residual zone near the cloud uncovered
        cover = whitney_decompose(cantor5, region5, min_level=4)
        grid = GridFunction.zeros(Cube([0.5, 0.5], 0.5), 64)
        with pytest.raises(GeometryError):
            build_partition(cover, grid)

    def test_overlap_bounded(self, cantor5, region5):
        grid = GridFunction.zeros(region5, 64)
        d_min = float(np.min(cantor5.dist_many(grid.points())))
        min_level = int(math.ceil(-math.log2(d_min / 5.0)))
        cover = whitney_decompose(cantor5, region5, min_level=min_level)
        counts = np.zeros(grid.shape, dtype=int)
        for q in cover.cubes:
            support = q.to_cube().scaled(9 / 8)
            slices = grid.index_slices_for_cube(support)
            if any(i0 > i1 for i0, i1 in slices):
                continue
            block = tuple(slice(i0, i1 + 1) for i0, i1 in slices)
            axes = [grid.axis_points(a)[block[a]] for a in range(2)]
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=-1)
            counts[block] += (bump_on_cube(pts, support) > 0).reshape(
                [len(a) for a in axes]
            )
        assert counts.max() <= cover.overlap_bound


class TestExtension:
    def test_constants_reproduced(self, cantor5, ext5):
        ext, grid = ext5
        fld = ext.transform(np.ones(1024), grid)
        np.testing.assert_allclose(fld.values, 1.0, atol=1e-12)

    def test_polynomial_reproduced_where_full_rank(self, cantor5, ext5k2):
        ext, grid = ext5k2
        f = 0.5 + 2.0 * cantor5.atoms[:, 0] - 1.25 * cantor5.atoms[:, 1]
        fld = ext.transform(f, grid)
        pts = grid.points()
        target = (0.5 + 2.0 * pts[:, 0] - 1.25 * pts[:, 1]).reshape(grid.shape)
        good = ~fld.degraded & ~fld.atom_mask
        assert good.mean() > 0.5
        assert np.max(np.abs(fld.values - target)[good]) < 1e-8

    def test_linearity(self, cantor5, ext5, rng):
        ext, grid = ext5
        f, g = rng.normal(size=1024), rng.normal(size=1024)
        a = ext.transform(2.0 * f - 3.0 * g, grid).values
        b = 2.0 * ext.transform(f, grid).values - 3.0 * ext.transform(g, grid).values
        assert np.max(np.abs(a - b)) < 1e-9

    def test_support_bound_with_tiny_delta(self, cantor5, region5):
        delta = 0.02
        ext = WhitneyExtension(cantor5, k=1, delta=delta)
        grid = GridFunction.zeros(region5, 128)
        fld = ext.transform(np.ones(1024), grid)
        dists = cantor5.dist_many(grid.points()).reshape(grid.shape)
        far = dists > 8.0 * delta
        assert np.max(np.abs(fld.values[far])) == 0.0
        near = dists < delta / 4.0
        assert np.max(np.abs(fld.values[near] - 1.0)) < 1e-9

    def test_locality(self, cantor5, ext5, rng):
        ext, grid = ext5
        f = rng.normal(size=1024)
        base = ext.transform(f, grid)
        # probe next to the lowest-left atom, far from the upper-right corner
        i0 = int(np.argmin(np.sum(cantor5.atoms, axis=1)))
        i1 = int(np.argmax(np.sum(cantor5.atoms, axis=1)))
        probe = grid.nearest_index(cantor5.atoms[i0] + 0.004)
        g = f.copy()
        g[i1] += 10.0
        pert = ext.transform(g, grid)
        assert pert.values[probe] == base.values[probe]

    def test_provenance_counts(self, cantor5, ext5):
        ext, grid = ext5
        fld = ext.transform(np.ones(1024), grid)
        off = ~fld.atom_mask
        assert np.all(fld.provenance_count[off] >= 1)
        idx = (5, 7)
        point = grid.point_at(idx)
        cubes = ext.contributors(grid, point)
        assert len(cubes) == fld.provenance_count[idx]

    def test_field_io_roundtrip(self, cantor5, ext5, tmp_path):
        ext, grid = ext5
        fld = ext.transform(np.ones(1024), grid)
        fld.grid.save_csv(tmp_path / "field.csv")
        fld.grid.save_binary(tmp_path / "field.f64", tmp_path / "field.json")
        back = GridFunction.load_binary(tmp_path / "field.f64", tmp_path / "field.json")
        np.testing.assert_array_equal(back.values, fld.values)
        first = (tmp_path / "field.csv").read_text().splitlines()
        assert first[0] == "x0,x1,value"

    def test_one_shot_helper(self, cantor4):
        region = dyadic_hull(cantor4.bounding, margin=0.5)
        grid = GridFunction.zeros(region, 64)
        fld = extend(np.ones(len(cantor4.atoms)), cantor4, 1, 16000.0, grid)
        np.testing.assert_allclose(fld.values, 1.0, atol=1e-12)

    def test_grid_must_contain_cloud(self, cantor5):
        ext = WhitneyExtension(cantor5, k=1)
        grid = GridFunction.zeros(Cube([0.0, 0.0], 0.25), 32)
        with pytest.raises(GeometryError):
            ext.transform(np.ones(1024), grid)


class TestTrace:
    def test_constant_field(self, cantor5, region5):
        grid = GridFunction.from_callable(region5, 128, lambda p: np.full(len(p), 3.0))
        tr = trace(grid, cantor5, [0.25, 0.125, 0.0625])
        np.testing.assert_allclose(tr.values, 3.0, atol=1e-13)
        np.testing.assert_allclose(tr.per_scale, 3.0, atol=1e-13)

    def test_smooth_function_agrees(self, cantor5, region5):
        g = GridFunction.from_callable(
            region5, 256, lambda p: np.sin(p[:, 0]) + np.cos(2 * p[:, 1])
        )
        truth = np.sin(cantor5.atoms[:, 0]) + np.cos(2 * cantor5.atoms[:, 1])
        tr = trace(g, cantor5, [4 * g.step, 2 * g.step])
        assert np.max(np.abs(tr.values - truth)) < 5e-4

    def test_lipschitz_ladder_slope(self, cantor5, ext5k2):
        ext, grid = ext5k2
        f = np.maximum(0.0, 1.0 - 2.0 * np.max(np.abs(cantor5.atoms - 0.5), axis=1))
        fld = ext.transform(f, grid)
        h = grid.step
        tr = trace(fld, cantor5, [16 * h, 8 * h, 4 * h, 2 * h])
        errs = [float(np.max(np.abs(row - f))) for row in tr.per_scale]
        assert errs[-1] <= 1.2 * 2.0 * 2 * h  # within C * t_finest
        # halving t should roughly halve the error on the ladder
        for a, b in zip(errs, errs[1:]):
            assert b <= a * 0.75

    def test_resolution_error(self, cantor5, region5):
        grid = GridFunction.zeros(region5, 32)
        with pytest.raises(ResolutionError):
            trace(grid, cantor5, [grid.step / 4])


class TestDiagnostics:
    def test_local_transfer_constant_vacuous(self, cantor4):
        region = dyadic_hull(cantor4.bounding, margin=1.0)
        grid = GridFunction.zeros(region, 64)
        res = local_transfer_check(np.ones(len(cantor4.atoms)), cantor4, 1, 1, grid, 2)
        assert res["near"]["max_ratio"] < 1e-6
        assert res["near"]["infinite"] == 0

    def test_local_transfer_random_finite(self, cantor4, rng):
        region = dyadic_hull(cantor4.bounding, margin=1.0)
        grid = GridFunction.zeros(region, 64)
        f = rng.normal(size=len(cantor4.atoms))
        res = local_transfer_check(f, cantor4, 1, 1, grid, 3)
        assert res["near"]["count"] > 0
        assert math.isfinite(res["near"]["max_ratio"])
        assert res["near"]["max_ratio"] > 0
        assert math.isfinite(res["cube_transfer_max"])

    def test_local_transfer_far_branch(self, cantor4, rng):
        region = dyadic_hull(cantor4.bounding, margin=1.0)
        grid = GridFunction.zeros(region, 64)
        f = rng.normal(size=len(cantor4.atoms))
        # a small gamma pushes boundary cubes into the far regime
        res = local_transfer_check(f, cantor4, 1, 1, grid, 3, gamma=0.5, delta=0.5)
        assert res["far"]["count"] > 0

    def test_decay_factor_runs(self, cantor4, rng):
        region = dyadic_hull(cantor4.bounding, margin=1.0)
        grid = GridFunction.zeros(region, 64)
        f = rng.normal(size=len(cantor4.atoms))
        pts = [np.array([1.4, 1.4]), np.array([-0.6, 0.5])]
        res = decay_factor_check(f, cantor4, 1, 1, grid, pts, [0.25, 0.125])
        assert len(res) > 0
        assert all(r["regime"] in ("k", "0", "vacuous", "violation") for r in res)
        finite = [r["ratio"] for r in res if math.isfinite(r["ratio"])]
        assert finite
