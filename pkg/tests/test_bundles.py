"""Horofunction classes, sectors, special vertices, Geo₁, and Δ-scans."""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from relbundles.groups import SpecError, build_group, spec_from_dict
from relbundles.relgraph import RELATIVE, DistanceOracle, RelativeGraph
from relbundles.geodesics import direction_from_text, enumerate_geodesics
from relbundles.bundles import (
    DirectionPipeline,
    StabilizationError,
    geo1_trunc,
    horofunction_table,
    sector_trunc,
    special_vertices,
    symdiff_scan,
    xi_classes,
)

PROPERTY_SETTINGS = settings(
    max_examples=30,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)


def _cyclic_table(n: int, gen: str) -> dict:
    return {
        "size": n,
        "mul": [[(i + j) % n for j in range(n)] for i in range(n)],
        "generators": {gen: 1},
    }


F2 = build_group(spec_from_dict({"family": "free", "generators": ["a", "b"]}))
F2X = build_group(spec_from_dict({
    "family": "free", "generators": ["a", "b"],
    "redundant_generators": ["a b"],
}))
Z3Z2 = build_group(spec_from_dict({
    "family": "free-product",
    "factors": [{"family": "finite-table", "table": _cyclic_table(3, "a")},
                {"family": "finite-table", "table": _cyclic_table(2, "b")}],
    "parabolics": [0, 1],
}))

GR_F2 = RelativeGraph(F2)
OR_F2 = DistanceOracle(GR_F2)
GR_F2X = RelativeGraph(F2X)
OR_F2X = DistanceOracle(GR_F2X)
GR_Z3Z2 = RelativeGraph(Z3Z2)
OR_Z3Z2 = DistanceOracle(GR_Z3Z2)

DIR_A = direction_from_text(GR_F2, "a")
DIR_AB = direction_from_text(GR_Z3Z2, "a b")


def f2_words(max_len: int):
    letters = st.sampled_from([1, -1, 2, -2])
    return st.lists(letters, max_size=max_len).map(lambda w: F2.reduce(w))


# ---------------------------------------------------------------------------
# horofunction tables


class TestHorofunctionTable:
    def test_anchor_value_is_zero(self):
        pipe = DirectionPipeline(GR_F2, OR_F2, DIR_A, nu=0)
        table = pipe.table(F2.parse("a b a'"))
        assert table.value(()) == 0

    def test_z_equals_anchor_gives_distance_table(self):
        pipe = DirectionPipeline(GR_F2, OR_F2, DIR_A, nu=0)
        table = pipe.table(())
        for g in table.window:
            assert table.value(g) == OR_F2.distance((), g, RELATIVE)

    def test_axis_values(self):
        window = GR_F2.ball((), 2, RELATIVE)
        flat = tuple(w for layer in window.frontiers for w in layer)
        table = horofunction_table(OR_F2, F2.parse("a a a a a"), flat)
        assert table.value(F2.parse("a")) == -1
        assert table.value(F2.parse("a'")) == 1

    def test_busemann_stabilization_on_axis(self):
        window = GR_F2.ball((), 2, RELATIVE)
        flat = tuple(w for layer in window.frontiers for w in layer)
        near = horofunction_table(OR_F2, F2.parse("a a a a a"), flat)
        far = horofunction_table(OR_F2, tuple([1] * 9), flat)
        assert near.values == far.values

    @PROPERTY_SETTINGS
    @given(z=f2_words(5), g=f2_words(2), h=f2_words(2))
    def test_one_lipschitz(self, z, g, h):
        window = GR_F2.ball((), 2, RELATIVE)
        flat = tuple(w for layer in window.frontiers for w in layer)
        table = horofunction_table(OR_F2, z, flat)
        assert abs(table.value(g) - table.value(h)) <= OR_F2.distance(
            g, h, RELATIVE)


# ---------------------------------------------------------------------------
# horofunction classes


class TestXiClasses:
    def test_tree_single_class_many_directions(self):
        for text in ["a", "b", "a b", "b' a"]:
            d = direction_from_text(GR_F2, text)
            deco = xi_classes(GR_F2, OR_F2, (), d, 8)
            assert len(deco.classes) == 1
            assert deco.unstabilized == ()

    def test_z3z2_depth12_pinned(self):
        deco = xi_classes(GR_Z3Z2, OR_Z3Z2, (), DIR_AB, 12)
        assert len(deco.classes) == 1
        assert deco.unstabilized == ()
        assert deco.window_radius == 2
        assert deco.classes[0].signature == (0, -1, 0, 1, -2, 1, 2, 2)

    def test_signature_window_is_distance_layered(self):
        deco = xi_classes(GR_Z3Z2, OR_Z3Z2, (), DIR_AB, 12)
        window = deco.classes[0].window
        dists = [OR_Z3Z2.distance((), w, RELATIVE) for w in window]
        assert dists == sorted(dists)
        assert window[0] == ()

    def test_class_count_within_layer_bound(self):
        # ν̂ = 0 for both families pins bound_B to 1
        for graph, oracle, group, texts in [
            (GR_F2, OR_F2, F2, ["a", "b a", "a b'"]),
            (GR_Z3Z2, OR_Z3Z2, Z3Z2, ["a b", "a' b"]),
        ]:
            for text in texts:
                d = direction_from_text(graph, text)
                deco = xi_classes(graph, oracle, (), d, 8)
                assert len(deco.classes) <= 1

    def test_shallow_base_clips_window(self):
        pipe = DirectionPipeline(GR_F2, OR_F2, DIR_A, nu=0)
        deco = pipe.classes_from(F2.parse("b"), 4)
        assert deco.window_radius == 1
        assert any("clipped" in note for note in pipe.notes)
        assert pipe.flags == []

    def test_depth_below_two_rejected(self):
        pipe = DirectionPipeline(GR_F2, OR_F2, DIR_A, nu=0)
        with pytest.raises(SpecError):
            pipe.classes_from((), 1)

    def test_no_stable_ray_is_an_error(self):
        class Scrambled(DirectionPipeline):
            def signature(self, z, radius=None):
                return (OR_F2.distance((), z, RELATIVE),)

        pipe = Scrambled(GR_F2, OR_F2, DIR_A, nu=0)
        with pytest.raises(StabilizationError, match="larger depth"):
            pipe.classes_from((), 6)


# ---------------------------------------------------------------------------
# sectors


class TestSectors:
    def test_tree_sector_is_the_ray(self):
        deco = xi_classes(GR_F2, OR_F2, (), DIR_A, 8)
        sec = sector_trunc(GR_F2, OR_F2, (), deco.classes[0], DIR_A, 8)
        assert sec.vertices() == frozenset(
            tuple([1] * k) for k in range(9))
        assert [len(layer) for layer in sec.layers] == [1] * 9

    def test_sector_inside_bundle(self):
        pipe = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        deco = pipe.classes_from((), 8)
        for cls in deco.classes:
            sec = pipe.sector((), cls.signature, 8, cls.window_radius)
            assert sec.vertices() <= deco.bundle.dag.vertices()

    def test_unrealized_signature_reports_empty(self):
        pipe = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        sec = pipe.sector((), (99,) * 8, 8, 2)
        assert sec.empty
        assert sec.vertices() == frozenset()

    def test_sector_monotone_in_depth(self):
        pipe = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        d8 = pipe.classes_from((), 8)
        d10 = pipe.classes_from((), 10)
        s8 = pipe.sector((), d8.classes[0].signature, 8,
                         d8.classes[0].window_radius)
        s10 = pipe.sector((), d10.classes[0].signature, 10,
                          d10.classes[0].window_radius)
        for k in range(9):
            assert set(s8.layers[k]) <= set(s10.layers[k])

    def test_ray_vertex_sector_contains_later_representatives(self):
        pipe = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        x = Z3Z2.parse("a b a b")
        deco = pipe.classes_from(x, 8)
        sec = pipe.sector(x, deco.classes[0].signature, 8,
                          deco.classes[0].window_radius)
        for rep in deco.classes[0].terminals(8):
            assert rep in sec.vertices()


# ---------------------------------------------------------------------------
# special vertices


class TestSpecialVertices:
    def test_tree_everything_classifiable_is_special(self):
        report = special_vertices(GR_F2, OR_F2, (), DIR_A, 6)
        assert report.ambiguous == ()
        assert {v for v, _ in report.special} == {
            tuple([1] * k) for k in range(5)}
        assert {c for _, c in report.special} == {0}

    def test_special_set_inside_bundle(self):
        report = special_vertices(GR_Z3Z2, OR_Z3Z2, (), DIR_AB, 8)
        bundle = report.decomposition.bundle.dag.vertices()
        for v, _ in report.special:
            assert v in bundle

    def test_z3z2_specials_pinned_and_stable(self):
        pipe = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        r8 = pipe.special_vertices((), 8)
        r10 = pipe.special_vertices((), 10)
        ray = [Z3Z2.parse(" ".join(["a b"] * (k // 2)) + (" a" if k % 2 else ""))
               for k in range(7)]
        assert [v for v, _ in r8.special] == sorted(
            ray, key=lambda w: (len(w), w))

        def upto(report, cut):
            return {(v, c) for v, c in report.special
                    if OR_Z3Z2.distance((), v, RELATIVE) <= cut}

        assert upto(r8, 6) == upto(r10, 6)


# ---------------------------------------------------------------------------
# the modified bundle Geo₁


class TestGeo1:
    def test_tree_geo1_is_the_ray(self):
        g1 = geo1_trunc(GR_F2, OR_F2, (), DIR_A, 8)
        assert g1.vertices == frozenset(tuple([1] * k) for k in range(9))
        assert g1.chosen == ((0, ((),)),)
        assert g1.skipped_classes == ()

    def test_base_is_its_own_nearest_special(self):
        g1 = geo1_trunc(GR_Z3Z2, OR_Z3Z2, (), DIR_AB, 8)
        assert g1.chosen[0][1] == ((),)

    def test_geo1_equals_union_of_chosen_sectors(self):
        pipe = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        base = Z3Z2.parse("b")
        g1 = pipe.geo1(base, 8)
        deco = pipe.classes_from(base, 8)
        expected: set = set()
        for cid, ys in g1.chosen:
            cls = deco.classes[cid]
            for y in ys:
                dist = OR_Z3Z2.distance(base, y, RELATIVE)
                sec = pipe.sector(y, cls.signature, 8 - dist,
                                  cls.window_radius)
                expected |= sec.vertices()
        assert g1.vertices == frozenset(expected)

    def test_ray_capture_bound_does_not_grow(self):
        pipe = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        base = Z3Z2.parse("b")
        bounds = []
        for depth in (8, 10, 12):
            g1 = pipe.geo1(base, depth).vertices
            paths, truncated = enumerate_geodesics(
                GR_Z3Z2, pipe.bundle(base, depth).dag)
            assert not truncated
            worst = 0
            for path in paths:
                missing = [i for i, v in enumerate(path.vertices)
                           if v not in g1]
                if missing:
                    worst = max(worst, max(missing) + 1)
            bounds.append(worst)
        assert bounds == [0, 0, 0]

    def test_left_translation_equivariance(self):
        g = Z3Z2.parse("b a")
        plain = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        moved = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0, anchor=g)
        x = Z3Z2.parse("a")
        translated = frozenset(Z3Z2.multiply(g, v)
                               for v in plain.geo1(x, 8).vertices)
        assert moved.geo1(Z3Z2.multiply(g, x), 8).vertices == translated

    def test_table_values_translate_with_the_anchor(self):
        g = Z3Z2.parse("b a")
        plain = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        moved = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0, anchor=g)
        z = Z3Z2.parse("a b a b")
        te = plain.table(z)
        tg = moved.table(Z3Z2.multiply(g, z))
        for w in te.window:
            assert tg.value(Z3Z2.multiply(g, w)) == te.value(w)


# ---------------------------------------------------------------------------
# symmetric-difference scans


class TestSymDiffScan:
    def test_tree_median_row_pinned(self):
        scan = symdiff_scan(GR_F2, OR_F2, (), F2.parse("b"), DIR_A,
                            [2, 3, 4, 6, 8])
        assert scan.rows == ((2, 1), (3, 1), (4, 1), (6, 1), (8, 1))
        assert scan.verdict == "stabilized"

    def test_same_base_is_zero(self):
        x = F2.parse("b a")
        scan = symdiff_scan(GR_F2, OR_F2, x, x, DIR_A, [4, 6, 8])
        assert scan.rows == ((4, 0), (6, 0), (8, 0))
        assert scan.verdict == "stabilized"

    def test_z3z2_scans_pinned(self):
        pipe = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        ab = symdiff_scan(GR_Z3Z2, OR_Z3Z2, (), Z3Z2.parse("a b"), DIR_AB,
                          [8, 10, 12], pipeline=pipe)
        assert ab.rows == ((8, 2), (10, 2), (12, 2))
        assert ab.verdict == "stabilized"
        b = symdiff_scan(GR_Z3Z2, OR_Z3Z2, (), Z3Z2.parse("b"), DIR_AB,
                         [8, 10, 12], pipeline=pipe)
        assert b.rows == ((8, 1), (10, 1), (12, 1))

    def test_z3z2_difference_sits_below_layer_one(self):
        pipe = DirectionPipeline(GR_Z3Z2, OR_Z3Z2, DIR_AB, nu=0)
        x, y = (), Z3Z2.parse("b")
        gx = pipe.geo1(x, 10).vertices
        gy = pipe.geo1(y, 10).vertices
        horizon = 10 - pipe.margin
        vis = {v for v in gx ^ gy
               if OR_Z3Z2.distance(x, v, RELATIVE) <= horizon
               and OR_Z3Z2.distance(y, v, RELATIVE) <= horizon}
        assert vis == {Z3Z2.parse("b")}

    def test_short_scan_never_reports_stabilized(self):
        scan = symdiff_scan(GR_F2, OR_F2, (), F2.parse("b"), DIR_A, [4, 6])
        assert scan.verdict == "unstabilized"

    @PROPERTY_SETTINGS
    @given(x=f2_words(2), y=f2_words(2))
    def test_tree_scan_matches_median_formula(self, x, y):
        far = tuple([1] * 20)
        med_x = (OR_F2.distance(x, y, RELATIVE)
                 + OR_F2.distance(x, far, RELATIVE)
                 - OR_F2.distance(y, far, RELATIVE)) // 2
        med_y = OR_F2.distance(x, y, RELATIVE) - med_x
        scan = symdiff_scan(GR_F2, OR_F2, x, y, DIR_A, [6, 7, 8])
        assert scan.verdict == "stabilized"
        assert [n for _, n in scan.rows] == [med_x + med_y] * 3
