import itertools
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsekit.spaces import (GraphSpace, NormedSpace, PaperGrid, PaperGridSubspace, SampleSpec,
                              SpaceError, SubSpace, annulus_sample, build_fixture, build_space,
                              close_pairs, grid_graph, rooted_tree, sample_points, star_graph,
                              star_vertex)


def floyd_warshall(n, edges):
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0.0)
    for u, v, w in edges:
        d[u, v] = min(d[u, v], w)
        d[v, u] = min(d[v, u], w)
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


def bfs(n, edges, src):
    adj = [[] for _ in range(n)]
    for u, v, _ in edges:
        adj[u].append(v)
        adj[v].append(u)
    out = [None] * n
    out[src] = 0
    q = deque([src])
    while q:
        u = q.popleft()
        for v in adj[u]:
            if out[v] is None:
                out[v] = out[u] + 1
                q.append(v)
    return out


@st.composite
def connected_graphs(draw, integral=True):
    n = draw(st.integers(2, 14))
    weight = st.integers(1, 5) if integral else st.floats(0.1, 5.0)
    edges = [[draw(st.integers(0, i - 1)), i, draw(weight)] for i in range(1, n)]
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1), weight), max_size=12))
    edges += [[u, v, w] for u, v, w in extra if u != v]
    return n, edges


def test_paper_grid_examples():
    g = PaperGrid()
    assert g.distance((1, 3), (1, 7)) == 4
    assert g.distance((1, 3), (2, 7)) == 10
    z = build_fixture("paper-Z")
    assert z.distance((1, 2), (2, 4)) == 6
    assert len(z.ball(100)) == 98


def test_paper_subspace_membership():
    y = PaperGridSubspace("Y")
    z = PaperGridSubspace("Z")
    assert y.contains((3, 8)) and not y.contains((3, 16))
    assert z.contains((3, 16)) and not z.contains((3, 12))
    assert y.contains((0, 0)) and z.contains((0, 0))
    expected = {(0, 0)} | {(m, (2 ** m) * k) for m in range(1, 8) for k in range(1, 101)
                           if (2 ** m) * k <= 100}
    assert set(z.ball(100)) == expected


def test_paper_grid_ball_capped_by_columns():
    g = PaperGrid(columns=3)
    assert len(g.ball(5)) == 1 + 3 * 5
    assert g.contains((17, 4))


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_graph_distances_match_floyd_warshall(graph):
    n, edges = graph
    g = GraphSpace(n, edges)
    want = floyd_warshall(n, edges)
    got = g.distances(list(range(n)), list(range(n)))
    assert np.array_equal(got, want)


@settings(max_examples=40, deadline=None)
@given(connected_graphs(integral=False))
def test_float_weighted_graph_is_exactly_symmetric(graph):
    n, edges = graph
    g = GraphSpace(n, edges)
    d = g.distances(list(range(n)), list(range(n)))
    assert np.array_equal(d, d.T)
    assert np.allclose(d, floyd_warshall(n, edges), rtol=1e-12, atol=1e-12)


def test_unit_graph_matches_bfs():
    g = grid_graph(6, 7)
    edges = []
    for r, c in itertools.product(range(6), range(7)):
        v = r * 7 + c
        if c + 1 < 7:
            edges.append((v, v + 1, 1))
        if r + 1 < 6:
            edges.append((v, v + 7, 1))
    for src in (0, 17, 41):
        assert g.distances([src], list(range(42)))[0].tolist() == bfs(42, edges, src)


def test_duplicate_edges_keep_lightest():
    g = GraphSpace(2, [[0, 1, 5], [1, 0, 2], [0, 1, 3]])
    assert g.distance(0, 1) == 2


@pytest.mark.parametrize("edges,path", [
    ([[0, 1, -1]], "params.edges[0][2]"),
    ([[0, 1, 1], [1, 2, 0]], "params.edges[1][2]"),
    ([[0, 5, 1]], "params.edges[0][1]"),
])
def test_graph_rejects_bad_edges(edges, path):
    with pytest.raises(SpaceError) as e:
        GraphSpace(3 if path != "params.edges[0][1]" else 2, edges)
    assert e.value.path == path


def test_graph_rejects_disconnected():
    with pytest.raises(SpaceError):
        GraphSpace(3, [[0, 1, 1]])


def test_star_layout():
    s = star_graph(rays=3, depth=10)
    for ray in range(3):
        assert s.radii([star_vertex(s, ray, 7)])[0] == 7
    a, b = star_vertex(s, 0, 4), star_vertex(s, 2, 6)
    assert s.distance(a, b) == 10
    assert s.horizon == 10


def test_rooted_tree_complete_counts():
    t = rooted_tree(2, 5)
    assert len(t.ball(10)) == 2 ** 6 - 1
    assert t.extent == 5
    r = rooted_tree(3, vertices=200, shape="random", seed=4)
    assert len(r.ball(1e9)) == 200


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=3, max_size=3),
       st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_normed_metric_axioms(pts, p):
    s = NormedSpace(2, p)
    d = s.distances(pts, pts)
    assert np.all(np.diag(d) == 0)
    assert np.allclose(d, d.T)
    x, y, z = range(3)
    assert d[x, z] <= d[x, y] + d[y, z] + 1e-9


def test_normed_ball_is_lattice():
    s = NormedSpace(2, 2.0)
    pts = s.ball(3)
    assert len(pts) == sum(1 for a in range(-3, 4) for b in range(-3, 4) if a * a + b * b <= 9)
    assert NormedSpace(2, 1.0).ball(2) == sorted(NormedSpace(2, 1.0).ball(2))


def test_busemann_validity_flag():
    assert NormedSpace(2, 2.0).busemann_valid
    assert not NormedSpace(2, 1.0).busemann_valid
    assert not NormedSpace(2, float("inf")).busemann_valid


def test_ball_refuses_past_horizon():
    s = star_graph(3, 10)
    with pytest.raises(SpaceError):
        s.ball(11)


@settings(max_examples=30, deadline=None)
@given(connected_graphs(), st.integers(0, 2 ** 32))
def test_paired_matches_matrix(graph, seed):
    n, edges = graph
    g = GraphSpace(n, edges)
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, n, 30).tolist()
    ys = rng.integers(0, n, 30).tolist()
    assert np.array_equal(g.paired(xs, ys), np.diag(g.distances(xs, ys)))


def test_subspace_keeps_parent_metric():
    g = PaperGrid()
    sub = SubSpace(g, lambda p: p[0] <= 2, "left")
    assert sub.distance((1, 2), (2, 5)) == 7
    assert all(p[0] <= 2 for p in sub.ball(4))
    with pytest.raises(SpaceError):
        sub.distances([(3, 1)], [(1, 1)])


def test_sample_spec_validation():
    with pytest.raises(SpaceError):
        SampleSpec("nope")
    with pytest.raises(SpaceError):
        SampleSpec("seeded-random", 0, 10, None)
    with pytest.raises(SpaceError):
        SampleSpec("full-ball", 5, 2)


def test_seeded_sample_reproducible():
    s = NormedSpace()
    spec = SampleSpec("seeded-random", 10, 50, 200, None, 9)
    a = sample_points(s, spec)
    assert a == sample_points(s, spec)
    r = s.radii(a)
    assert r.min() >= 10 - 1e-9 and r.max() <= 50 + 1e-9
    assert a != sample_points(s, SampleSpec("seeded-random", 10, 50, 200, None, 10))


def test_annulus_full_ball():
    t = rooted_tree(2, 6)
    pts = annulus_sample(t, 2, 4)
    assert set(t.radii(pts)) == {2.0, 3.0, 4.0}
    assert len(pts) == 4 + 8 + 16


def test_sample_uses_extent_for_finite_graphs():
    t = rooted_tree(2, 4)
    assert len(sample_points(t, SampleSpec("full-ball"))) == 31


def test_close_pairs_match_brute_force():
    s = NormedSpace(2, 1.5)
    pts = sample_points(s, SampleSpec("seeded-random", 0, 10, 150, None, 2))
    i, j, d = close_pairs(s, pts, 1.3)
    full = s.distances(pts, pts)
    bi, bj = np.nonzero(np.triu(full <= 1.3, 1))
    assert set(zip(i.tolist(), j.tolist())) == set(zip(bi.tolist(), bj.tolist()))
    assert np.allclose(d, full[i, j])


def test_build_space_kinds_and_errors():
    assert build_space({"kind": "normed", "params": {"dimension": 3, "p": 1.5}}).params["dimension"] == 3
    g = build_space({"kind": "graph", "params": {"vertices": 3, "edges": [[0, 1, 1], [1, 2, 2]]},
                     "basepoint": 2})
    assert g.radii([0])[0] == 3
    with pytest.raises(SpaceError) as e:
        build_space({"kind": "fixture", "name": "star", "params": {"bogus": 1}})
    assert "bogus" in str(e.value)
    with pytest.raises(SpaceError):
        build_space({"kind": "fixture", "name": "unknown"})
