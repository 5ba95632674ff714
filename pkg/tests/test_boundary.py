import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsekit.axioms import extract_cp_envelopes
from coarsekit.boundary import (BoundaryError, UnionFind, composition_check, composition_threshold,
                                default_bands, refinement_profile, sequence_class_check,
                                shadow_cells, vn_matrix, vn_related)
from coarsekit.products import GromovProduct, TrivialProduct, build_product
from coarsekit.spaces import (NormedSpace, PaperGrid, SampleSpec, build_fixture, rooted_tree,
                              star_graph, star_vertex)


def brute_components(n, edges):
    adj = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    seen, out = set(), []
    for s in range(n):
        if s in seen:
            continue
        comp, stack = [], [s]
        seen.add(s)
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in adj[u] - seen:
                seen.add(v)
                stack.append(v)
        out.append(sorted(comp))
    return sorted(out)


@given(st.integers(1, 30).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                                             max_size=40))))
def test_union_find_matches_search(case):
    n, edges = case
    uf = UnionFind(n)
    for a, b in edges:
        uf.union(a, b)
    groups = uf.groups()
    assert sorted(groups) == brute_components(n, edges)
    assert all(uf.find(g[0]) == g[0] for g in groups)


def restricted(sub):
    return build_product({"construction": "restriction",
                          "params": {"base": {"construction": "gromov"}, "subspace": sub}}, PaperGrid())


def test_vn_relation_pointwise_agrees_with_matrix():
    s = star_graph(3, 12)
    p = GromovProduct(s)
    pts = s.ball(12)
    rel = vn_matrix(p, pts, 2)
    for i, j in itertools.product(range(0, len(pts), 5), repeat=2):
        assert rel[i, j] == vn_related(p, 2, pts[i], pts[j])
    with pytest.raises(BoundaryError):
        vn_related(p, 0.5, 0, 0)


def test_star_has_three_chains():
    s = star_graph(3, 64)
    prof = refinement_profile(s, GromovProduct(s), [10, 20, 40], [2])
    assert prof.chains[2.0] == 3
    assert prof.cell_counts(2.0) == [3, 3, 3]


def test_tree_chains_count_subtrees():
    t = rooted_tree(2, 9)
    for n in (1, 2, 3):
        prof = refinement_profile(t, GromovProduct(t), [5, 7, 9], [n])
        # (x|y) > n needs a common ancestor at depth floor(n)+1
        assert prof.chains[float(n)] == 2 ** (n + 1)


@pytest.mark.parametrize("name,radii", [("star", [10, 20, 40]), ("paper-grid", [10, 20, 40]),
                                        ("euclidean", [4, 8, 16])])
def test_trivial_product_single_chain(name, radii):
    s = build_fixture(name)
    prof = refinement_profile(s, TrivialProduct(s), radii, [1, 2, 3])
    for n in (1.0, 2.0, 3.0):
        assert prof.chains[n] == 1


def test_paper_y_has_no_chains():
    p = restricted("paper-Y")
    prof = refinement_profile(p.space, p, [10, 100, 1000], [1])
    assert prof.chains[1.0] == 0


def test_paper_z_cells():
    p = restricted("paper-Z")
    cells = shadow_cells(p.space, p, (50, 100), 1)
    assert len(cells) == 6
    assert sorted(c.representative[0] for c in cells) == [1, 2, 3, 4, 5, 6]


def test_empty_annulus_gives_no_cells():
    s = star_graph(3, 10)
    assert shadow_cells(s, GromovProduct(s), (3.5, 3.6), 1) == []


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 3), st.integers(4, 7), st.integers(0, 1000))
def test_cells_refine_as_n_grows(branching, depth, seed):
    t = rooted_tree(branching, vertices=min(120, branching ** depth), shape="random", seed=seed)
    p = GromovProduct(t)
    band = (1, t.extent)
    coarse = shadow_cells(t, p, band, 1)
    fine = shadow_cells(t, p, band, 2)
    owner = {m: i for i, c in enumerate(coarse) for m in c.members}
    for c in fine:
        assert len({owner[m] for m in c.members}) == 1
    assert len(fine) >= len(coarse)


def test_default_bands():
    assert default_bands([10, 20, 40]) == [(5.0, 10.0), (10.0, 20.0), (20.0, 40.0)]


def test_profile_rejects_bad_ladders():
    s = star_graph(3, 10)
    with pytest.raises(BoundaryError):
        refinement_profile(s, GromovProduct(s), [5], [1])
    with pytest.raises(BoundaryError):
        refinement_profile(s, GromovProduct(s), [5, 3], [1])
    with pytest.raises(BoundaryError):
        refinement_profile(s, GromovProduct(s), [3, 5], [0.5])


def test_composition_on_tree():
    t = rooted_tree(2, 6)
    pts = list(range(127))
    env = extract_cp_envelopes(t, GromovProduct(t), pts)
    assert composition_threshold(env, 2) == 4
    res = composition_check(t, GromovProduct(t), pts, 2, env)
    assert res.holds and res.m == 4


def test_composition_reports_violation_for_small_m():
    t = rooted_tree(2, 6)
    res = composition_check(t, GromovProduct(t), list(range(127)), 3, m=1)
    assert not res.holds
    x, y, z = res.witness
    p = GromovProduct(t)
    assert vn_related(p, 1, x, y) and vn_related(p, 1, y, z) and not vn_related(p, 3, x, z)


def test_sequence_on_star_ray():
    s = star_graph(3, 64)
    a = [star_vertex(s, 0, k) for k in range(1, 60)]
    b = [star_vertex(s, 0, k + 1) for k in range(1, 60)]
    c = [star_vertex(s, 1, k) for k in range(1, 60)]
    res = sequence_class_check(GromovProduct(s), a, b)
    assert res.in_s_infinity == (True, True) and res.equivalent
    res2 = sequence_class_check(GromovProduct(s), a, c)
    assert res2.equivalent is False
    bounded = [star_vertex(s, k % 3, 5) for k in range(30)]
    assert sequence_class_check(GromovProduct(s), bounded).in_s_infinity[0] is False


def test_sequence_horizon_check():
    s = star_graph(3, 10)
    with pytest.raises(BoundaryError):
        sequence_class_check(GromovProduct(s), [1, 2, 3], horizon=5)
