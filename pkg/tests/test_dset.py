import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractrace.dset import (
    DSet,
    IfsSpec,
    audit_regularity,
    build_dset,
    dist_to_set,
    export_atoms_csv,
    four_corner_cantor,
    ifs_from_dict,
    load_ifs_config,
)
from fractrace.exceptions import (
    DimensionError,
    GeometryError,
    OpenSetConditionError,
)
from fractrace.geometry import Cube


class TestBuild:
    def test_cantor_depth5(self, cantor5):
        assert len(cantor5.atoms) == 1024
        assert cantor5.d == pytest.approx(math.log(4) / math.log(3), abs=1e-12)
        assert cantor5.weight == pytest.approx(1 / 1024)
        assert cantor5.spacing_exact == Fraction(2, 243)

    def test_depth_zero_single_atom(self):
        S = build_dset(four_corner_cantor(0))
        assert len(S.atoms) == 1
        assert S.weight == 1.0
        assert S.spacing == 0.0

    def test_ratio_045_accepted(self):
        spec = four_corner_cantor(3, ratio=Fraction(9, 20))
        assert spec.dimension == pytest.approx(
            math.log(4) / math.log(20 / 9), abs=1e-12
        )
        S = build_dset(spec)
        assert len(S.atoms) == 64

    def test_dimension_error(self):
        # two maps of ratio 1/3 give d = log2/log3 < 1
        with pytest.raises(DimensionError):
            IfsSpec.equal_ratio(2, Fraction(1, 3), [(0, 0), (Fraction(2, 3), 0)], 2)

    def test_open_set_condition_error(self):
        with pytest.raises(OpenSetConditionError):
            IfsSpec.equal_ratio(
                2,
                Fraction(1, 2),
                [(0, 0), (Fraction(1, 4), 0), (0, Fraction(1, 2)), (Fraction(1, 2), Fraction(1, 2))],
                2,
            )

    def test_unequal_ratios_rejected(self):
        with pytest.raises(GeometryError):
            IfsSpec(2, [(Fraction(1, 3), (0, 0)), (Fraction(1, 4), (Fraction(2, 3), 0))], 2)


class TestMeasure:
    def test_total_mass(self, cantor5):
        big = Cube([0.5, 0.5], 2.0)
        assert cantor5.measure_of_cube(big) == pytest.approx(1.0)

    def test_first_generation_subsquare(self, cantor5):
        q = Cube(
            [1 / 6, 1 / 6],
            1 / 6,
            center_exact=(Fraction(1, 6), Fraction(1, 6)),
            half_exact=Fraction(1, 6),
        )
        assert cantor5.measure_of_cube(q) == pytest.approx(0.25)

    def test_empty_cube(self, cantor5):
        assert cantor5.measure_of_cube(Cube([0.5, 0.5], 0.05)) == 0.0

    def test_halfopen_partition_additivity(self, cantor4):
        total = 0.0
        for i in range(4):
            for j in range(4):
                q = Cube(
                    [(i + 0.5) / 4, (j + 0.5) / 4],
                    1 / 8,
                    center_exact=(Fraction(2 * i + 1, 8), Fraction(2 * j + 1, 8)),
                    half_exact=Fraction(1, 8),
                )
                total += cantor4.weight * len(cantor4.atoms_in_cube(q, half_open=True))
        assert total == pytest.approx(1.0, abs=1e-15)

    def test_self_similarity_matching_depth(self, cantor4, cantor5):
        spec = four_corner_cantor(5)
        rho, t0 = spec.maps[0]
        q = Cube(
            [0.25, 0.4],
            0.2,
            center_exact=(Fraction(1, 4), Fraction(2, 5)),
            half_exact=Fraction(1, 5),
        )
        mapped = Cube(
            [float(rho) * 0.25 + float(t0[0]), float(rho) * 0.4 + float(t0[1])],
            float(rho) * 0.2,
            center_exact=(rho * Fraction(1, 4) + t0[0], rho * Fraction(2, 5) + t0[1]),
            half_exact=rho * Fraction(1, 5),
        )
        assert cantor5.measure_of_cube(mapped) == pytest.approx(
            cantor4.measure_of_cube(q) / 4.0, abs=1e-15
        )

    def test_boundary_atom_counted_closed(self, cantor4):
        # cube face passing exactly through an atom coordinate
        a = cantor4.exact_atoms[0]
        q = Cube(
            [float(a[0]) + 0.125, float(a[1])],
            0.125,
            center_exact=(a[0] + Fraction(1, 8), a[1]),
            half_exact=Fraction(1, 8),
        )
        assert 0 in cantor4.atoms_in_cube(q)


class TestAudit:
    def test_cantor_constants(self, cantor5):
        rep = audit_regularity(cantor5, samples=len(cantor5.atoms), rng_seed=0)
        assert rep.c2 / rep.c1 <= 32.0
        assert rep.regular

    def test_exhaustive_oracle_depth4(self, cantor4):
        rep = audit_regularity(cantor4, samples=len(cantor4.atoms), rng_seed=0)
        # exhaustive recomputation over the same dyadic ladder
        ladder = []
        r = 1.0
        while r >= 4.0 * cantor4.spacing:
            ladder.append(r)
            r /= 2.0
        vals = []
        for i, w in enumerate(cantor4.atoms):
            for r in ladder:
                q = Cube(w, r, center_exact=cantor4.exact_atoms[i], half_exact=Fraction(r))
                vals.append(cantor4.measure_of_cube(q) / r**cantor4.d)
        assert rep.c1 == pytest.approx(min(vals))
        assert rep.c2 == pytest.approx(max(vals))

    def test_single_atom_flagged(self):
        S = DSet([(Fraction(0), Fraction(0))], d=1.5)
        rep = audit_regularity(S, samples=1, rng_seed=0)
        assert not rep.regular

    def test_depth_stability(self, cantor5, cantor6):
        r5 = audit_regularity(cantor5, samples=150, rng_seed=1)
        r6 = audit_regularity(cantor6, samples=150, rng_seed=1)
        assert 0.5 <= r6.c1 / r5.c1 <= 2.0
        assert 0.5 <= r6.c2 / r5.c2 <= 2.0


class TestDistance:
    def test_atom_distance_zero(self, cantor5):
        assert dist_to_set(cantor5, cantor5.atoms[17]) == 0.0

    def test_shifted_atom(self, cantor5):
        h = cantor5.spacing / 4
        x = cantor5.atoms[3] + np.array([h, 0.0])
        assert dist_to_set(cantor5, x) == pytest.approx(h, abs=1e-15)

    def test_linear_scan_oracle(self, cantor5, rng):
        pts = rng.uniform(-0.5, 1.5, size=(64, 2))
        fast = cantor5.dist_many(pts)
        slow = np.array(
            [np.min(np.max(np.abs(cantor5.atoms - p), axis=1)) for p in pts]
        )
        np.testing.assert_allclose(fast, slow, atol=1e-14)

    @given(st.floats(-2, 2), st.floats(-2, 2))
    @settings(max_examples=50, deadline=None)
    def test_distance_nonnegative_and_lipschitz(self, x, y):
        S = build_dset(four_corner_cantor(3))
        p = np.array([x, y])
        d = S.dist(p)
        assert d >= 0
        assert S.dist(p + [0.01, 0.0]) <= d + 0.01 + 1e-12


class TestIO:
    def test_csv_export(self, cantor4, tmp_path):
        path = tmp_path / "atoms.csv"
        export_atoms_csv(cantor4, path)
        rows = path.read_text().strip().splitlines()
        assert rows[0] == "x0,x1,weight"
        assert len(rows) == len(cantor4.atoms) + 1

    def test_config_roundtrip(self, tmp_path):
        cfg = {
            "ratio": "1/3",
            "maps": [[0, 0], ["2/3", 0], [0, "2/3"], ["2/3", "2/3"]],
            "depth": 3,
            "seed": 0,
        }
        path = tmp_path / "ifs.json"
        path.write_text(json.dumps(cfg))
        spec = load_ifs_config(path)
        assert spec.m == 4 and spec.depth == 3
        assert spec.ratio == Fraction(1, 3)
        assert build_dset(spec).atoms.shape == (64, 2)

    def test_ifs_from_dict_floats(self):
        spec = ifs_from_dict(
            {
                "ratio": 0.25,
                "maps": [[0, 0], [0.75, 0], [0, 0.75], [0.75, 0.75], [0.375, 0.375]],
                "depth": 1,
            }
        )
        assert spec.m == 5
        assert 1 < spec.dimension < 2
