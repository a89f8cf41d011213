import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractrace.dset import DSet, build_dset, four_corner_cantor
from fractrace.exceptions import GeometryError, PorosityError, ResolutionError
from fractrace.geometry import (
    Cube,
    DyadicCube,
    build_covers,
    build_shells,
    containing_dyadic,
    cop_check,
    dump_cubes,
    dyadic_hull,
    estimate_porosity,
    load_cubes,
    near_set_family,
    porous_selection,
    selection_violations,
    shell_disjointness_violations,
    shell_modulus,
    whitney_bounds_exact,
    whitney_decompose,
)


def full_grid_cloud(n_per_axis=16):
    step = Fraction(1, n_per_axis)
    atoms = [
        (step / 2 + i * step, step / 2 + j * step)
        for i in range(n_per_axis)
        for j in range(n_per_axis)
    ]
    return DSet(atoms, d=1.5)


def single_atom_cloud(x=(0, 0)):
    return DSet([tuple(Fraction(v) for v in x)], d=1.5)


class TestCube:
    def test_scaling_keeps_center(self):
        q = Cube([0.25, -0.5], 0.75)
        tq = q.scaled(3.0)
        assert np.allclose(tq.center, q.center)
        assert tq.half_side == 2.25

    def test_membership_closed_boundary(self):
        q = Cube([0.0, 0.0], 1.0)
        assert q.contains([1.0, 1.0])
        assert q.contains([1.0, -0.25])
        assert not q.contains([1.0 + 1e-12, 0.0])

    def test_diam_is_side(self):
        q = Cube([0.0, 0.0], 0.5)
        assert q.diam == q.side == 1.0

    def test_positive_half_side_required(self):
        with pytest.raises(GeometryError):
            Cube([0.0, 0.0], 0.0)


class TestDyadicCube:
    def test_representation(self):
        q = DyadicCube(2, (1, -3))
        assert q.side == 0.25
        np.testing.assert_allclose(q.center, [0.375, -0.625])
        assert q.center_exact == (Fraction(3, 8), Fraction(-5, 8))

    def test_parent_child_roundtrip(self):
        q = DyadicCube(3, (5, -2))
        assert all(c.parent() == q for c in q.children())

    @given(
        st.integers(-2, 6),
        st.tuples(st.integers(-8, 8), st.integers(-8, 8)),
        st.tuples(st.integers(-8, 8), st.integers(-8, 8)),
    )
    @settings(max_examples=200, deadline=None)
    def test_equal_level_disjoint_interiors(self, level, c1, c2):
        a, b = DyadicCube(level, c1), DyadicCube(level, c2)
        if c1 == c2:
            assert a.intersects(b)
        else:
            # closed cubes may share faces, interiors never overlap
            assert not a.interior_contains_cube(b)
            touching = all(abs(x - y) <= 1 for x, y in zip(c1, c2))
            assert a.intersects(b) == touching

    def test_cross_level_intersection(self):
        big = DyadicCube(0, (0, 0))
        small = DyadicCube(3, (7, 7))
        assert big.intersects(small)
        assert big.interior_contains_cube(DyadicCube(3, (3, 3)))
        assert not big.interior_contains_cube(small)  # touches the face

    def test_containing_dyadic_tie_rule(self):
        # a face point belongs to two cubes; the lower-coords one is chosen
        q = containing_dyadic((Fraction(1, 2), Fraction(1, 4)), 1)
        assert q == DyadicCube(1, (0, 0))
        q2 = containing_dyadic((Fraction(3, 8), Fraction(1, 8)), 2)
        assert q2 == DyadicCube(2, (1, 0))

    def test_dump_load_roundtrip(self, tmp_path):
        cubes = [DyadicCube(1, (0, 1)), DyadicCube(3, (-4, 2))]
        path = tmp_path / "cubes.jsonl"
        dump_cubes(cubes, path)
        lines = path.read_text().strip().splitlines()
        assert json.loads(lines[0]) == {"level": 1, "coords": [0, 1]}
        assert load_cubes(path) == cubes


class TestWhitney:
    def test_single_atom_exhaustive_bounds(self):
        S = single_atom_cloud()
        cover = whitney_decompose(S, Cube([0.0, 0.0], 1.0), min_level=6)
        assert len(cover.cubes) > 0
        for q in cover.cubes:
            assert whitney_bounds_exact(S, q)

    def test_full_grid_empty_above_min_level(self):
        S = full_grid_cloud(16)
        cover = whitney_decompose(S, Cube([0.5, 0.5], 0.5), min_level=3)
        # every cube above min_level is close to some atom, so nothing is kept
        assert cover.cubes == []
        assert cover.residual_volume == pytest.approx(1.0)

    def test_volume_identity_cantor(self, cantor5):
        region = Cube([0.5, 0.5], 1.0)
        cover = whitney_decompose(cantor5, region, min_level=12)
        vol = cover.total_volume()
        assert vol + cover.residual_volume == pytest.approx(region.volume(), abs=1e-12)
        assert cover.residual_volume <= 1e-3

    def test_region_must_contain_cloud(self, cantor5):
        with pytest.raises(GeometryError):
            whitney_decompose(cantor5, Cube([0.25, 0.25], 0.25), min_level=6)

    def test_determinism(self, cantor4):
        region = Cube([0.5, 0.5], 1.0)
        a = whitney_decompose(cantor4, region, min_level=7)
        b = whitney_decompose(cantor4, region, min_level=7)
        assert a.cubes == b.cubes


class TestNearSetFamily:
    def test_zero_distance_cube_included(self, cantor4):
        fam = near_set_family(cantor4, 0.25, 2)
        # cubes whose center distance is zero satisfy the bound for any gamma;
        # here every returned cube obeys the defining inequality
        for q in fam.cubes:
            d = cantor4.dist(q.center)
            assert d <= 0.25 * q.side + 1e-9

    def test_bruteforce_oracle_gamma1(self, koch_like):
        fam = near_set_family(koch_like, 1.0, 3)
        got = {q.key() for q in fam.cubes}
        expect = set()
        region = koch_like.bounding
        lo, hi = region.bounds()
        for j in range(0, 4):
            side = 2.0**-j
            for cx in range(math.ceil(lo[0] / side - 1e-9), math.floor(hi[0] / side + 1e-9)):
                for cy in range(math.ceil(lo[1] / side - 1e-9), math.floor(hi[1] / side + 1e-9)):
                    center = np.array([(cx + 0.5) * side, (cy + 0.5) * side])
                    inside = np.all(center - side / 2 >= lo - 1e-12) and np.all(
                        center + side / 2 <= hi + 1e-12
                    )
                    d = float(np.min(np.max(np.abs(koch_like.atoms - center), axis=1)))
                    if inside and d <= 1.0 * side + 1e-12:
                        expect.add((j, cx, cy))
        assert got == expect

    def test_gamma320_second_pass(self, cantor6):
        fam = near_set_family(cantor6, 320.0, 6)
        # independent re-scan: enumerate all levels, pure numpy distance
        expect = set()
        lo, hi = cantor6.bounding.bounds()
        for j in range(0, 7):
            side = 2.0**-j
            xs = np.arange(math.ceil(lo[0] / side - 1e-9), math.floor(hi[0] / side + 1e-9))
            ys = np.arange(math.ceil(lo[1] / side - 1e-9), math.floor(hi[1] / side + 1e-9))
            for cx in xs:
                for cy in ys:
                    center = np.array([(cx + 0.5) * side, (cy + 0.5) * side])
                    if np.any(center - side / 2 < lo - 1e-12) or np.any(
                        center + side / 2 > hi + 1e-12
                    ):
                        continue
                    d = float(np.min(np.max(np.abs(cantor6.atoms - center), axis=1)))
                    if d <= 320.0 * side + 1e-12:
                        expect.add((j, int(cx), int(cy)))
        assert {q.key() for q in fam.cubes} == expect

    def test_gamma_positive_required(self, cantor4):
        with pytest.raises(GeometryError):
            near_set_family(cantor4, 0.0, 2)


class TestPorosity:
    def test_cantor_kappa_small(self, cantor5):
        kappa = estimate_porosity(cantor5, trials=60, rng_seed=7)
        assert kappa <= 8

    def test_full_grid_not_porous(self):
        S = full_grid_cloud(16)
        with pytest.raises(PorosityError):
            estimate_porosity(S, trials=30, rng_seed=0)

    def test_single_atom_ladder_minimum(self):
        S = single_atom_cloud((0, 0))
        assert estimate_porosity(S, trials=20, rng_seed=0) == 2

    def test_determinism(self, cantor4):
        a = estimate_porosity(cantor4, trials=40, rng_seed=3)
        b = estimate_porosity(cantor4, trials=40, rng_seed=3)
        assert a == b


class TestPorousSelection:
    def test_selection_invariants_exact(self, cantor5):
        kappa = estimate_porosity(cantor5, trials=40, rng_seed=0)
        fam = near_set_family(cantor5, 1.0, 3)
        sel = porous_selection(fam, cantor5, kappa)
        assert sel.sigma == pytest.approx((1 + 1.0) * 16 * kappa)
        assert 2.0**sel.r0 > sel.sigma**2 >= 2.0 ** (sel.r0 - 1)
        assert selection_violations(sel, cantor5) == []

    def test_allpairs_oracle(self, cantor4):
        kappa = estimate_porosity(cantor4, trials=40, rng_seed=0)
        fam = near_set_family(cantor4, 1.0, 3)
        sel = porous_selection(fam, cantor4, kappa)
        # independent all-pairs closed-interval sweep per residue class
        classes = {}
        for q, rq in sel.assignment.items():
            classes.setdefault(q.level % sel.r0, []).append(rq)
        for members in classes.values():
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    a, b = members[i], members[j]
                    sa, sb = Fraction(2) ** -a.level, Fraction(2) ** -b.level
                    overlap = all(
                        max(ca * sa, cb * sb) <= min((ca + 1) * sa, (cb + 1) * sb)
                        for ca, cb in zip(a.coords, b.coords)
                    )
                    assert not overlap

    def test_single_cube_family(self, cantor4):
        fam = near_set_family(cantor4, 1.0, 0, region=dyadic_hull(cantor4.bounding))
        assert len(fam.cubes) >= 1
        from dataclasses import replace

        small = replace(fam, cubes=fam.cubes[:1])
        sel = porous_selection(small, cantor4, 4)
        assert len(sel.assignment) == 1
        assert selection_violations(sel, cantor4) == []


class TestCovers:
    def test_single_atom(self):
        S = single_atom_cloud((0, 0))
        cov = build_covers(S, 3, 1.0)
        assert len(cov.cubes) == 1
        assert cov.overlap_bound == 1
        assert len(cov.color_classes) == 1

    def test_atom_coverage_scan(self, cantor5):
        cov = build_covers(cantor5, 3, 16000.0)
        covered = np.zeros(len(cantor5.atoms), dtype=bool)
        for q in cov.cubes:
            covered |= np.max(np.abs(cantor5.atoms - q.center), axis=1) <= q.half_side
        assert covered.all()

    def test_color_classes_disjoint(self, cantor5):
        cov = build_covers(cantor5, 5, 1.0)
        assert len(cov.cubes) > 1
        for cls in cov.color_classes:
            for i in range(len(cls)):
                for j in range(i + 1, len(cls)):
                    a = cov.cubes[cls[i]].scaled(2.0)
                    b = cov.cubes[cls[j]].scaled(2.0)
                    assert not a.intersects_cube(b)

    def test_overlap_bound_measured(self, cantor5):
        cov = build_covers(cantor5, 5, 1.0)
        for a in cov.cubes:
            cnt = sum(
                1 for b in cov.cubes if a.scaled(2.0).intersects_cube(b.scaled(2.0))
            )
            assert cnt <= cov.overlap_bound


class TestShells:
    def test_modulus_is_eight(self):
        assert shell_modulus() == 8
        assert Fraction(1, 2**8) < Fraction(1, 200) <= Fraction(1, 2**7)

    def test_endpoint_arithmetic(self):
        shells = build_shells(0, 16)
        s0, s8 = shells[0], shells[8]
        # 16000 * 2^-8 = 62.5 < 80, so the level-8 shell ends below level 0
        assert s8.outer_exact == Fraction(125, 2)
        assert s8.outer_exact < s0.inner_exact
        assert shell_disjointness_violations(shells) == []

    def test_single_shell_trivial(self):
        assert shell_disjointness_violations(build_shells(3, 3)) == []

    def test_bad_range(self):
        with pytest.raises(GeometryError):
            build_shells(2, 1)


class TestCop:
    def test_sampled_atoms_depth6(self, cantor6):
        region = dyadic_hull(cantor6.bounding, margin=1.0)
        cover = whitney_decompose(cantor6, region, min_level=9)
        kappa = 4
        rng = np.random.default_rng(0)
        picks = rng.integers(0, len(cantor6.atoms), size=20)
        for i in picks:
            x = cantor6.atoms[i]
            q = cop_check(cantor6, x, 2, cover, kappa)
            lo = Fraction(2) ** (-3) / (5 * kappa)
            assert lo <= q.side_exact <= Fraction(2) ** (-3)
            assert np.all(np.abs(q.center - x) + q.side / 2 <= 0.25 + 1e-12)

    def test_resolution_error(self, cantor4):
        region = dyadic_hull(cantor4.bounding, margin=1.0)
        cover = whitney_decompose(cantor4, region, min_level=6)
        with pytest.raises(ResolutionError):
            cop_check(cantor4, cantor4.atoms[0], 12, cover, 4)

    def test_single_atom(self):
        S = single_atom_cloud((0, 0))
        cover = whitney_decompose(S, Cube([0.0, 0.0], 1.0), min_level=8)
        q = cop_check(S, S.atoms[0], 0, cover, 2)
        assert Fraction(2) ** (-1) / 10 <= q.side_exact <= Fraction(1, 2)

    def test_non_atom_rejected(self, cantor4):
        region = dyadic_hull(cantor4.bounding, margin=1.0)
        cover = whitney_decompose(cantor4, region, min_level=6)
        with pytest.raises(GeometryError):
            cop_check(cantor4, np.array([10.0, 10.0]), 2, cover, 4)
