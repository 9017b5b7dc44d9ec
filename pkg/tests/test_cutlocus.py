import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphgen import enumerate_regular_graphs, random_regular_graph
from stablesurf import cutlocus, surfaces
from stablesurf.cutlocus import (BIFURCATING, END, INITIAL, CutLocusGraph,
                                 LocusNode, LocusSegment, angle_term,
                                 extract_cut_locus, orient,
                                 region_decomposition_check, sum_inequality,
                                 validate_regular)
from stablesurf.errors import DomainError, IrregularLocus
from stablesurf.geodesics import SourceSet, distance_field
from stablesurf.report import FAIL, PASS

K = cutlocus.LOCUS_SUBDIVISIONS


def _node(i, kind, f=0.5, angles=None):
    return LocusNode(i, kind, f, angles or {})


def _graph(kinds, edges, f=0.5, angles=None):
    """Small literal graph; bifurcating angles split pi equally unless
    given explicitly as {node: {segment: alpha}}."""
    deg = {}
    inc = {}
    for e, (a, b) in enumerate(edges):
        for v in (a, b):
            deg[v] = deg.get(v, 0) + 1
            inc.setdefault(v, []).append(e)
    nodes = []
    for i, kind in enumerate(kinds):
        if kind == INITIAL:
            nodes.append(_node(i, kind, 0.0))
        elif kind == END:
            nodes.append(_node(i, kind, f, {inc[i][0]: math.pi}))
        else:
            if angles and i in angles:
                a = dict(angles[i])
            else:
                a = {e: math.pi / deg[i] for e in inc[i]}
            nodes.append(_node(i, kind, f, a))
    segs = [LocusSegment(e, a, b, length=1.0)
            for e, (a, b) in enumerate(edges)]
    return CutLocusGraph(nodes, segs)


# -- angle term ---------------------------------------------------------------

def test_angle_term_values():
    assert angle_term(0.0) == pytest.approx(0.0)
    assert angle_term(math.pi) == pytest.approx(math.pi)
    assert angle_term(math.pi / 2) == pytest.approx(1.0)


def test_angle_term_domain():
    with pytest.raises(DomainError):
        angle_term(-0.5)
    with pytest.raises(DomainError):
        angle_term(math.pi + 0.5)


@given(st.floats(0.0, math.pi))
def test_angle_term_nonnegative_increasing(a):
    assert angle_term(a) >= 0.0
    assert angle_term(a) <= math.pi


# -- validation ---------------------------------------------------------------

def test_validate_accepts_path():
    g = _graph([INITIAL, BIFURCATING, END], [(0, 1), (1, 2)])
    validate_regular(g)


def test_validate_rejects_closed_segment():
    g = CutLocusGraph([_node(0, BIFURCATING, angles={0: math.pi})],
                      [LocusSegment(0, 0, 0, 1.0)])
    with pytest.raises(IrregularLocus):
        validate_regular(g)


def test_validate_rejects_wrong_valence():
    g = _graph([END, BIFURCATING, END, END],
               [(0, 1), (1, 2), (1, 3), (0, 2)])
    with pytest.raises(IrregularLocus):
        validate_regular(g)


def test_validate_rejects_bad_angle_sum():
    g = _graph([END, BIFURCATING, END, END],
               [(0, 1), (1, 2), (1, 3)],
               angles={1: {0: 1.0, 1: 1.0, 2: 1.0}})
    with pytest.raises(IrregularLocus):
        validate_regular(g)


def test_validate_rejects_initial_with_f():
    g = _graph([INITIAL, BIFURCATING, END], [(0, 1), (1, 2)])
    g.nodes[0].f = 0.3
    with pytest.raises(IrregularLocus):
        validate_regular(g)


def test_validate_rejects_enclosed_chain():
    # theta graph: two distinct closed chains share a segment
    g = _graph([BIFURCATING, BIFURCATING], [(0, 1), (0, 1), (0, 1)])
    with pytest.raises(IrregularLocus):
        validate_regular(g)


def test_two_cycle_is_allowed():
    g = _graph([BIFURCATING, BIFURCATING], [(0, 1), (0, 1)])
    validate_regular(g)


# -- orientation --------------------------------------------------------------

def test_orient_path_toward_end():
    g = _graph([INITIAL, BIFURCATING, END], [(0, 1), (1, 2)])
    o = orient(g)
    assert o.direction == {0: (0, 1), 1: (1, 2)}
    assert not o.arbitrary


def test_orient_triangle_cycle_each_node_one_incoming():
    g = _graph([BIFURCATING] * 3, [(0, 1), (1, 2), (0, 2)])
    o = orient(g)
    for v in range(3):
        assert len(o.incoming(v)) == 1


def test_orient_two_cycle():
    g = _graph([BIFURCATING, BIFURCATING], [(0, 1), (0, 1)])
    o = orient(g)
    assert len(o.incoming(0)) == 1
    assert len(o.incoming(1)) == 1


def test_orient_star_with_mixed_leaves():
    g = _graph([BIFURCATING, END, END, INITIAL],
               [(0, 1), (0, 2), (0, 3)])
    o = orient(g)
    assert o.direction[0] == (0, 1)
    assert o.direction[1] == (0, 2)
    assert o.direction[2] == (3, 0)


def test_orient_isolated_segment_between_initials_is_arbitrary():
    g = _graph([INITIAL, BIFURCATING, BIFURCATING, INITIAL],
               [(0, 1), (1, 2), (2, 3)])
    o = orient(g)
    assert o.direction[0] == (0, 1)
    assert o.direction[2] == (3, 2)
    assert o.arbitrary == {1}
    assert o.direction[1] == (1, 2)      # lowest node first


def test_orient_keep_protocol():
    g = _graph([INITIAL, BIFURCATING, END], [(0, 1), (1, 2)])
    o = orient(g, keep={0: (1, 0)})
    assert o.direction[0] == (1, 0)
    assert o.direction[1] == (1, 2)


def test_orient_deterministic():
    rng = np.random.default_rng(7)
    g = random_regular_graph(rng, 9)
    a = orient(g)
    b = orient(g)
    assert a.direction == b.direction
    assert a.arbitrary == b.arbitrary


# -- certificate sum ----------------------------------------------------------

def test_sum_path_value():
    # single directed segment between a branch tail and an end head with
    # tail angle pi/2 contributes 2 (pi/2) f^2 at the tail and nothing at
    # the head
    g = _graph([BIFURCATING, END, END], [(0, 1), (0, 2)], f=0.5,
               angles={0: {0: math.pi / 2, 1: math.pi / 2}})
    o = orient(g)
    rep = sum_inequality(g, o)
    # both segments leave node 0: total 2 * (pi/2 + pi/2) * 0.25
    assert rep.lhs == pytest.approx(math.pi / 2)
    assert rep.verdict == FAIL


def test_sum_cycle_is_nonpositive():
    g = _graph([BIFURCATING] * 3, [(0, 1), (1, 2), (0, 2)], f=0.8)
    rep = sum_inequality(g, orient(g))
    # valence-2 nodes with one incoming each: the angle sums telescope
    assert rep.lhs == pytest.approx(0.0, abs=1e-12)
    assert rep.verdict == PASS


def test_sum_branching_node_strictly_negative():
    # two closed chains sharing a node: the shared node collects one
    # incoming direction per chain, total 2 f^2 pi (1 - 2) there
    g = _graph([BIFURCATING, BIFURCATING, BIFURCATING],
               [(0, 1), (0, 1), (0, 2), (0, 2)], f=0.8)
    rep = sum_inequality(g, orient(g))
    assert rep.lhs == pytest.approx(-2 * math.pi * 0.64)
    assert rep.verdict == PASS


def test_sum_initial_fed_path_is_nonpositive():
    g = _graph([INITIAL, BIFURCATING, END], [(0, 1), (1, 2)], f=0.9)
    rep = sum_inequality(g, orient(g))
    assert rep.lhs <= 1e-12
    assert rep.verdict == PASS


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 10 ** 9), st.integers(1, 14))
def test_random_graphs_certify(seed, n):
    rng = np.random.default_rng(seed)
    g = random_regular_graph(rng, n)
    o = orient(g)
    assert set(o.direction) == {s.index for s in g.segments}
    initial = {nd.index for nd in g.nodes if nd.kind == INITIAL}
    for nd in g.nodes:
        if nd.index not in initial:
            assert len(o.incoming(nd.index)) >= 1
    assert sum_inequality(g, o).lhs <= 1e-12


def test_exhaustive_small_graphs_certify():
    graphs = enumerate_regular_graphs(4)
    assert len(graphs) > 50
    for g in graphs:
        o = orient(g)
        initial = {nd.index for nd in g.nodes if nd.kind == INITIAL}
        for nd in g.nodes:
            if nd.index not in initial:
                assert len(o.incoming(nd.index)) >= 1, g
        assert sum_inequality(g, o).lhs <= 1e-12, g


# -- extraction ---------------------------------------------------------------

@pytest.fixture(scope="module")
def cylinder_locus(flat_cylinder):
    d = distance_field(flat_cylinder, SourceSet.from_loops(0, 1), k=K)
    return flat_cylinder, d, extract_cut_locus(flat_cylinder, d, 2.0)


def test_cylinder_medial_locus(cylinder_locus):
    mesh, d, g = cylinder_locus
    total = sum(s.length for s in g.segments)
    assert total == pytest.approx(2 * math.pi, rel=1e-3)
    assert all(n.kind == BIFURCATING for n in g.nodes)


def test_cylinder_medial_locus_coarse():
    m = surfaces.generate("flat_cylinder", 4, circumference=2 * math.pi,
                          height=3.0).mesh
    d = distance_field(m, SourceSet.from_loops(0, 1), k=K)
    g = extract_cut_locus(m, d, 2.0)
    total = sum(s.length for s in g.segments)
    assert total == pytest.approx(2 * math.pi, rel=1e-3)


def test_cylinder_locus_certificate(cylinder_locus):
    mesh, d, g = cylinder_locus
    o = orient(g)
    assert sum_inequality(g, o).verdict == PASS


def test_cylinder_region_decomposition(cylinder_locus):
    mesh, d, g = cylinder_locus
    rep = region_decomposition_check(mesh, d, 2.0, g)
    assert rep.verdict == PASS
    meta = rep.metadata
    assert meta["n_regions"] == 2
    assert meta["worst_identity_rel_err"] < 1e-9
    cancel = meta["locus_turning_cancellation"]
    sides = meta["locus_turning_sides"]
    assert abs(cancel) <= 0.01 * max(abs(sides[0]), abs(sides[1]), 1.0)


def test_one_loop_cylinder_locus_is_empty(flat_cylinder):
    d = distance_field(flat_cylinder, SourceSet.from_loops(0), k=K)
    g = extract_cut_locus(flat_cylinder, d, 2.0)
    assert not g.segments


def test_torus_point_locus(square_torus):
    d = distance_field(square_torus, SourceSet.from_vertex(0), k=K)
    g = extract_cut_locus(square_torus, d, 0.9)
    total = sum(s.length for s in g.segments)
    # opposite-edge crease of the unit square: two arcs of length 1
    assert total == pytest.approx(2.0, rel=1e-2)
    o = orient(g)
    rep = sum_inequality(g, o)
    assert rep.verdict == PASS
    assert rep.lhs < -1e-3


def test_sphere_point_locus(unit_sphere):
    d = distance_field(unit_sphere, SourceSet.from_vertex(0), k=K)
    g = extract_cut_locus(unit_sphere, d, 3.0)
    assert g.segments
    o = orient(g)
    assert sum_inequality(g, o).verdict == PASS


def test_extract_rejects_nonpositive_radius(square_torus):
    d = distance_field(square_torus, SourceSet.from_vertex(0), k=1)
    with pytest.raises(DomainError):
        extract_cut_locus(square_torus, d, 0.0)
