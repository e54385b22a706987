import numpy as np
import pytest

from flatpwa.miencoding import build_admissible_union
from flatpwa.polytope import (HPolytope, chebyshev_center, find_point, intersect,
                              is_empty, max_row_violation, min_enclosing_l1_ball,
                              vertices)


def unit_box(d=2):
    return HPolytope.box(-np.ones(d), np.ones(d))


def test_empty_contradictory():
    assert is_empty(HPolytope([[1.0], [-1.0]], [1.0, -2.0]))


def test_unit_box_nonempty_with_witness():
    P = unit_box()
    x = find_point(P)
    assert x is not None
    assert np.max(P.A @ x - P.b) <= 1e-8


def test_aircraft_pattern_census(aircraft_net, aircraft_plant):
    # all 8 candidate sign patterns over the workspace: exactly 3 non-empty
    from itertools import product
    from flatpwa.relupwa import pattern_halfspaces
    alive = 0
    for bits in product((-1, 1), repeat=3):
        cell = intersect(pattern_halfspaces(aircraft_net, np.array(bits)),
                         aircraft_plant.net_workspace)
        alive += not is_empty(cell)
    assert alive == 3


def test_intersect_box_halfplane():
    P = intersect(unit_box(), HPolytope([[1.0, 0.0]], [0.0]))
    assert not is_empty(P)
    assert P.contains([-0.5, 0.0]) and not P.contains([0.5, 0.0])


def test_intersect_idempotent_as_sets():
    P = unit_box()
    Q = intersect(P, P)
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1.5, 1.5, size=(200, 2))
    for x in pts:
        assert P.contains(x) == Q.contains(x)


def test_intersect_dimension_mismatch():
    with pytest.raises(ValueError):
        intersect(unit_box(2), unit_box(3))


def test_zero_row_negative_offset_flagged():
    with pytest.raises(ValueError):
        HPolytope([[0.0, 0.0]], [-1.0])


def test_vertices_unit_box():
    V = vertices(unit_box())
    assert len(V) == 4
    expect = {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    got = {tuple(np.round(v).astype(int)) for v in V.points}
    assert got == expect


def test_vertices_simplex():
    A = np.vstack([-np.eye(2), np.ones((1, 2))])
    b = np.array([0.0, 0.0, 1.0])
    V = vertices(HPolytope(A, b))
    assert len(V) == 3


def test_vertices_unbounded_rejected():
    with pytest.raises(ValueError):
        vertices(HPolytope([[1.0, 0.0]], [1.0]))


def test_vertices_dimension_guard():
    with pytest.raises(ValueError):
        vertices(HPolytope.box(-np.ones(7), np.ones(7)))


def test_vertices_paper_cell(paper_cell2):
    # every returned vertex satisfies the rows, with equality on >= 2 rows
    V = vertices(paper_cell2)
    assert len(V) >= 3
    for v in V.points:
        resid = paper_cell2.A @ v - paper_cell2.b
        assert resid.max() <= 1e-8
        assert np.sum(np.abs(resid) <= 1e-7) >= 2


def test_vertices_are_extreme():
    # perturbing along any active-set null direction must leave the polytope
    P = unit_box()
    V = vertices(P)
    for v, rows in zip(V.points, V.supports):
        act = P.A[list(rows)]
        null = np.linalg.svd(act)[2][np.linalg.matrix_rank(act):]
        for d in null:
            assert not (P.contains(v + 1e-5 * d) and P.contains(v - 1e-5 * d))


def test_l1_ball_single_point():
    from flatpwa.polytope import VertexSet
    c, r = min_enclosing_l1_ball(VertexSet(np.array([[2.0, -1.0]])))
    assert np.allclose(c, [2.0, -1.0]) and r == pytest.approx(0.0, abs=1e-9)


def test_l1_ball_unit_box():
    c, r = min_enclosing_l1_ball(vertices(unit_box()))
    assert np.allclose(c, [0.0, 0.0], atol=1e-7)
    assert r == pytest.approx(2.0, abs=1e-8)


def test_l1_ball_tightness():
    V = vertices(HPolytope.box([-1.0, -2.0], [3.0, 0.5]))
    c, r = min_enclosing_l1_ball(V)
    dists = np.abs(V.points - c).sum(axis=1)
    assert dists.max() <= r + 1e-8
    assert dists.max() >= r - 1e-6


def test_l1_ball_aircraft_cells_match_published_table(aircraft_cells):
    # the published per-cell analysis centers the ball at the vertex centroid
    # of the tightened cells (output bound 4, margin 0.1897)
    union = build_admissible_union(aircraft_cells, u_max=4.0, eps=0.1897)
    rows = []
    for cell in union.cells:
        V = vertices(cell.polytope)
        center = V.points.mean(axis=0)
        c, r = min_enclosing_l1_ball(V, center=center)
        rows.append((c, r))
    by_center_z = sorted(rows, key=lambda cr: cr[0][0])
    expect = [((-0.2732, 0.9732), 3.6495),
              ((-0.0019, -0.2092), 4.9177),
              ((0.2713, -1.3966), 3.6457)]
    for (c, r), (ce, re) in zip(by_center_z, expect):
        assert np.allclose(c, ce, atol=1e-2)
        assert r == pytest.approx(re, abs=1e-2)


def test_max_row_violation_own_box():
    Z = unit_box()
    assert max_row_violation(Z, Z) == pytest.approx(0.0, abs=1e-8)


def test_max_row_violation_halfline():
    P = HPolytope([[1.0]], [0.0])
    Z = HPolytope.box([-1.0], [1.0])
    assert max_row_violation(P, Z) == pytest.approx(1.0, abs=1e-8)


def test_max_row_violation_paper_cell(paper_cell2, aircraft_plant):
    M = max_row_violation(paper_cell2, aircraft_plant.net_workspace)
    assert M == pytest.approx(4.3247, abs=1e-2)


def test_max_row_violation_unbounded_region():
    with pytest.raises(ValueError):
        max_row_violation(unit_box(1), HPolytope([[1.0]], [1.0]))


def test_row_violation_bounds_sampled(paper_cell2, aircraft_plant):
    Z = aircraft_plant.net_workspace
    M = max_row_violation(paper_cell2, Z)
    rng = np.random.default_rng(1)
    lo = -Z.b[2:]
    hi = Z.b[:2]
    pts = rng.uniform(lo, hi, size=(2000, 2))
    worst = (pts @ paper_cell2.A.T - paper_cell2.b).max()
    assert worst <= M + 1e-9


def test_chebyshev_center_inside():
    P = unit_box()
    c, r = chebyshev_center(P)
    assert P.contains(c)
    assert r == pytest.approx(1.0, abs=1e-8)
