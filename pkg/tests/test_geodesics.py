"""Geodesic DAGs, exhaustive path enumeration, directions, and bundles."""

from __future__ import annotations

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from relbundles.groups import SpecError, build_group, spec_from_dict
from relbundles.relgraph import ABSOLUTE, RELATIVE, DistanceOracle, RelativeGraph
from relbundles.geodesics import (
    DirectionError,
    DirectionSpec,
    cgr_bundle_trunc,
    direction_from_text,
    enumerate_geodesics,
    geodesic_dag,
    layer_profile,
    path_elements,
    ray_vertex,
    shift_direction,
    validate_direction,
)

PROPERTY_SETTINGS = settings(
    max_examples=60,
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
GENUS2 = build_group(spec_from_dict({
    "family": "small-cancellation",
    "generators": ["a", "b", "c", "d"],
    "relators": ["a b a' b' c d c' d'"],
}))

GR_F2, OR_F2 = RelativeGraph(F2), None
OR_F2 = DistanceOracle(GR_F2)
GR_F2X = RelativeGraph(F2X)
OR_F2X = DistanceOracle(GR_F2X)
GR_Z3Z2 = RelativeGraph(Z3Z2)
OR_Z3Z2 = DistanceOracle(GR_Z3Z2)
GR_GENUS2 = RelativeGraph(GENUS2)
OR_GENUS2 = DistanceOracle(GR_GENUS2)


def words_of(group, max_len=4):
    n = len(group.gen_names)
    letters = [i for i in range(1, n + 1)] + [-i for i in range(1, n + 1)]
    return st.lists(st.sampled_from(letters), max_size=max_len).map(
        lambda ls: group.reduce(ls))


def brute_geodesics(graph, oracle, u, v, metric=RELATIVE):
    """Oracle-guided DFS over raw adjacency, independent of the DAG."""
    total = oracle.distance(u, v, metric)
    out = []

    def walk(w, path):
        if len(path) - 1 == total:
            if w == v:
                out.append(tuple(path))
            return
        remaining = total - (len(path) - 1)
        for x, _ in graph.neighbor_edges(w, metric):
            if oracle.distance(x, v, metric) == remaining - 1:
                path.append(x)
                walk(x, path)
                path.pop()

    walk(u, [u])
    return sorted(set(out))


# ---------------------------------------------------------------------------
# DAG pins

def test_free_chain_dag():
    dag = geodesic_dag(GR_F2, OR_F2, (), F2.parse("a b"))
    assert dag.length == 2
    assert dag.layers == (((),), ((1,),), ((1, 2),))
    paths, truncated = enumerate_geodesics(GR_F2, dag)
    assert len(paths) == 1 and not truncated
    assert [GR_F2.format_label(l) for l in paths[0].labels] == ["a", "b"]


def test_free_product_syllable_chain():
    w = Z3Z2.parse("a b a")
    dag = geodesic_dag(GR_Z3Z2, OR_Z3Z2, (), w)
    assert dag.layers == (((),), ((1,),), ((1, 2),), ((1, 2, 1),))
    paths, _ = enumerate_geodesics(GR_Z3Z2, dag)
    assert len(paths) == 1
    assert path_elements(GR_Z3Z2, paths[0]) == ((1,), (2,), (1,))


def test_adjoined_generator_single_step():
    dag = geodesic_dag(GR_F2X, OR_F2X, (), F2X.parse("a b"))
    assert dag.length == 1
    (path,), _ = enumerate_geodesics(GR_F2X, dag)
    assert [GR_F2X.format_label(l) for l in path.labels] == ["ab"]


def test_adjoined_generator_double_step():
    dag = geodesic_dag(GR_F2X, OR_F2X, (), F2X.parse("a b a b"))
    paths, _ = enumerate_geodesics(GR_F2X, dag)
    assert len(paths) == 1
    assert path_elements(GR_F2X, paths[0]) == ((1, 2), (1, 2))


def test_commutator_bigon_enumeration():
    """Both spellings of the genus-2 commutator, in label order."""
    dag = geodesic_dag(GR_GENUS2, OR_GENUS2, (), GENUS2.parse("a b a' b'"))
    assert dag.length == 4
    paths, truncated = enumerate_geodesics(GR_GENUS2, dag)
    assert not truncated
    spelled = [tuple(GR_GENUS2.format_label(l) for l in p.labels) for p in paths]
    assert spelled == [("a", "b", "a'", "b'"), ("d", "c", "d'", "c'")]


def test_enumeration_cap():
    dag = geodesic_dag(GR_GENUS2, OR_GENUS2, (), GENUS2.parse("a b a' b'"))
    paths, truncated = enumerate_geodesics(GR_GENUS2, dag, max_count=1)
    assert truncated and len(paths) == 1


def test_dag_source_not_identity():
    base = Z3Z2.parse("b")
    target = Z3Z2.parse("b a b")
    dag = geodesic_dag(GR_Z3Z2, OR_Z3Z2, base, target)
    assert dag.source == base and dag.target == target
    assert dag.length == 2


class TestDagInvariants:
    @PROPERTY_SETTINGS
    @given(u=words_of(Z3Z2), v=words_of(Z3Z2))
    def test_layers_are_exact_slices(self, u, v):
        dag = geodesic_dag(GR_Z3Z2, OR_Z3Z2, u, v)
        for k, layer in enumerate(dag.layers):
            for w in layer:
                assert OR_Z3Z2.distance(u, w) == k
                assert OR_Z3Z2.distance(w, v) == dag.length - k

    @PROPERTY_SETTINGS
    @given(u=words_of(F2X, 3), v=words_of(F2X, 3))
    def test_every_vertex_lies_on_a_path(self, u, v):
        dag = geodesic_dag(GR_F2X, OR_F2X, u, v)
        for k, layer in enumerate(dag.layers):
            for w in layer:
                if k > 0:
                    assert dag.predecessors(w, k)
                if k < dag.length:
                    assert dag.successors(w, k)

    @PROPERTY_SETTINGS
    @given(g=words_of(Z3Z2, 3), u=words_of(Z3Z2, 3), v=words_of(Z3Z2, 3))
    def test_equivariance(self, g, u, v):
        dag = geodesic_dag(GR_Z3Z2, OR_Z3Z2, u, v)
        moved = geodesic_dag(GR_Z3Z2, OR_Z3Z2,
                             Z3Z2.multiply(g, u), Z3Z2.multiply(g, v))
        assert moved.length == dag.length
        for ours, theirs in zip(dag.layers, moved.layers):
            assert sorted(Z3Z2.multiply(g, w) for w in ours) == sorted(theirs)


class TestAgainstBruteForce:
    """DAG enumeration must reproduce an independent oracle-guided DFS."""

    @PROPERTY_SETTINGS
    @given(u=words_of(Z3Z2, 3), v=words_of(Z3Z2, 3))
    def test_free_product(self, u, v):
        dag = geodesic_dag(GR_Z3Z2, OR_Z3Z2, u, v)
        paths, _ = enumerate_geodesics(GR_Z3Z2, dag, max_count=10_000)
        assert sorted(p.vertices for p in paths) == brute_geodesics(
            GR_Z3Z2, OR_Z3Z2, u, v)

    @PROPERTY_SETTINGS
    @given(u=words_of(F2X, 3), v=words_of(F2X, 3))
    def test_free_adjoined(self, u, v):
        dag = geodesic_dag(GR_F2X, OR_F2X, u, v)
        paths, _ = enumerate_geodesics(GR_F2X, dag, max_count=10_000)
        assert sorted(p.vertices for p in paths) == brute_geodesics(
            GR_F2X, OR_F2X, u, v)

    @settings(max_examples=12, deadline=None,
              suppress_health_check=[HealthCheck.too_slow])
    @given(v=words_of(GENUS2, 4))
    def test_small_cancellation(self, v):
        dag = geodesic_dag(GR_GENUS2, OR_GENUS2, (), v)
        paths, _ = enumerate_geodesics(GR_GENUS2, dag, max_count=10_000)
        assert sorted(p.vertices for p in paths) == brute_geodesics(
            GR_GENUS2, OR_GENUS2, (), v)


# ---------------------------------------------------------------------------
# directions

def test_direction_parsing():
    d = direction_from_text(GR_F2, "a b : a b")
    assert d.prefix == ((1,), (2,)) and d.period == ((1,), (2,))
    assert d.symbol(0) == (1,) and d.symbol(3) == (2,)


def test_direction_symbols_must_be_single_steps():
    with pytest.raises(SpecError):
        direction_from_text(GR_F2, "ab")  # two letters, not one step
    d = direction_from_text(GR_F2X, "ab")  # but a step once ab is adjoined
    assert d.period == ((1, 2),)
    with pytest.raises(SpecError):
        direction_from_text(GR_F2, "")


def test_direction_with_repeated_symbol_is_allowed():
    d = direction_from_text(GR_F2, "a a")
    assert d.period == ((1,), (1,))
    validate_direction(GR_F2, OR_F2, d, 6)


def test_parabolic_direction_symbol():
    d = direction_from_text(GR_Z3Z2, "a b")
    assert d.period == ((1,), (2,))
    assert ray_vertex(GR_Z3Z2, d, 4) == Z3Z2.parse("a b a b")


def test_validate_direction_accepts_geodesic_ray():
    validate_direction(GR_Z3Z2, OR_Z3Z2, direction_from_text(GR_Z3Z2, "a b"), 9)


def test_validate_direction_rejects_backtracking():
    bad = direction_from_text(GR_F2, "a a'")
    with pytest.raises(DirectionError) as info:
        validate_direction(GR_F2, OR_F2, bad, 5)
    assert info.value.prefix_length == 2


def test_validate_direction_rejects_torsion_loop():
    bad = direction_from_text(GR_Z3Z2, "b")
    with pytest.raises(DirectionError) as info:
        validate_direction(GR_Z3Z2, OR_Z3Z2, bad, 4)
    assert info.value.prefix_length == 2


def test_empty_period_rejected():
    with pytest.raises(SpecError):
        DirectionSpec(prefix=((1,),), period=())


def test_shift_direction():
    d = direction_from_text(GR_F2, "a : b a")
    s = shift_direction(d, 2)
    assert [s.symbol(i) for i in range(3)] == [d.symbol(i + 2) for i in range(3)]


# ---------------------------------------------------------------------------
# bundles

def test_bundle_along_periodic_ray():
    d = direction_from_text(GR_Z3Z2, "a b")
    bundle = cgr_bundle_trunc(GR_Z3Z2, OR_Z3Z2, (), d, depth=5, margin=1)
    assert layer_profile(bundle) == [1, 1, 1, 1, 1, 1]
    assert bundle.layer(3) == (Z3Z2.parse("a b a"),)
    assert bundle.full_length >= 6


def test_bundle_from_offset_base_passes_identity():
    d = direction_from_text(GR_F2, "a")
    bundle = cgr_bundle_trunc(GR_F2, OR_F2, F2.parse("b"), d, depth=3, margin=1)
    assert layer_profile(bundle) == [1, 1, 1, 1]
    assert bundle.layer(0) == (F2.parse("b"),)
    assert bundle.layer(1) == ((),)
    assert bundle.layer(2) == (F2.parse("a"),)


def test_bundle_margin_does_not_change_kept_layers():
    d = direction_from_text(GR_Z3Z2, "a b")
    small = cgr_bundle_trunc(GR_Z3Z2, OR_Z3Z2, Z3Z2.parse("b"), d, 4, margin=1)
    large = cgr_bundle_trunc(GR_Z3Z2, OR_Z3Z2, Z3Z2.parse("b"), d, 4, margin=3)
    assert small.dag.layers == large.dag.layers


def test_bundle_rejects_invalid_direction():
    bad = direction_from_text(GR_F2, "a a'")
    with pytest.raises(DirectionError):
        cgr_bundle_trunc(GR_F2, OR_F2, (), bad, depth=4, margin=1)


def test_bundle_parameter_validation():
    d = direction_from_text(GR_F2, "a")
    with pytest.raises(SpecError):
        cgr_bundle_trunc(GR_F2, OR_F2, (), d, depth=-1, margin=1)
    with pytest.raises(SpecError):
        cgr_bundle_trunc(GR_F2, OR_F2, (), d, depth=3, margin=0)


def test_bundle_layers_extend_to_full_depth():
    """Every kept vertex must reach the cut: successors exist below depth."""
    d = direction_from_text(GR_Z3Z2, "a b")
    bundle = cgr_bundle_trunc(GR_Z3Z2, OR_Z3Z2, Z3Z2.parse("b a'"), d, 4, margin=2)
    dag = bundle.dag
    for k in range(bundle.depth):
        for w in dag.layers[k]:
            assert dag.successors(w, k)
