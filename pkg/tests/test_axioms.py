import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsekit.axioms import (BOUNDED, DIVERGING, INCONCLUSIVE, NO_WITNESS, SATISFIED, AxiomError,
                              RhoSet, bound_check, check_cp4, divergence_diagnostic,
                              extract_cp_envelopes, hyperbolicity_delta, rebase_bounds,
                              rho3_close_pairs, scan_triples)
from coarsekit.envelopes import MonotoneEnvelope1D, envelope_1d, envelope_2d
from coarsekit.products import (BusemannProduct, CompactificationProduct, GromovProduct,
                                TrivialProduct, build_product)
from coarsekit.spaces import (GraphSpace, NormedSpace, PaperGrid, SampleSpec, rooted_tree,
                              sample_points, star_graph)

R2 = NormedSpace(2, 2.0)


def brute_triples(m):
    n = len(m)
    pairs = []
    excess = 0.0
    for x, y, z in itertools.product(range(n), repeat=3):
        v = min(m[x, y], m[y, z])
        pairs.append((m[x, z], v))
        excess = max(excess, v - m[x, z])
    return envelope_1d(pairs), excess


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2 ** 31))
def test_triple_scan_matches_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 10, (n, n)).astype(float)
    m = np.triu(a) + np.triu(a, 1).T
    scan = scan_triples(m)
    env, ex = brute_triples(m)
    assert scan.exhaustive
    assert MonotoneEnvelope1D(scan.keys, scan.values) == env
    assert scan.excess == ex
    x, y, z = scan.witness
    assert min(m[x, y], m[y, z]) - m[x, z] == ex


def test_random_triples_seeded():
    m = GromovProduct(R2).matrix(sample_points(R2, SampleSpec("seeded-random", 0, 50, 200, None, 1)))
    a = scan_triples(m, cap=5000, seed=7)
    b = scan_triples(m, cap=5000, seed=7)
    c = scan_triples(m, cap=5000, seed=8)
    assert not a.exhaustive and a.triples == 5000
    assert np.array_equal(a.values, b.values) and a.excess == b.excess
    assert not np.array_equal(a.values, c.values)


def test_tree_delta_is_zero():
    t = rooted_tree(3, vertices=400, shape="random", seed=2)
    res = hyperbolicity_delta(t, t.ball(1e9), triple_cap=10 ** 9)
    assert res.exhaustive and res.delta == 0


def test_delta_brute_force_small_graph():
    g = GraphSpace(6, [[0, 1, 1], [1, 2, 1], [2, 3, 1], [3, 4, 1], [4, 5, 1], [5, 0, 1]])
    pts = list(range(6))
    res = hyperbolicity_delta(g, pts)
    m = GromovProduct(g).matrix(pts)
    want = max(min(m[x, y], m[y, z]) - m[x, z] for x, y, z in itertools.product(pts, repeat=3))
    assert res.delta == want > 0


def test_plane_delta_grows_with_radius():
    small = hyperbolicity_delta(R2, R2.ball(10))
    big = hyperbolicity_delta(R2, sample_points(R2, SampleSpec("seeded-random", 0, 50, 300, None, 0)))
    assert big.delta > small.delta > 1


def test_extracted_envelopes_match_brute_force():
    pts = sample_points(R2, SampleSpec("seeded-random", 0, 20, 25, None, 4))
    p = BusemannProduct(R2, 1.0)
    env = extract_cp_envelopes(R2, p, pts)
    m = p.matrix(pts)
    r = R2.radii(pts)
    d = R2.distances(pts, pts)
    rho2 = envelope_1d([(r[i], m[i, j]) for i in range(25) for j in range(25)])
    rho3 = envelope_2d([((m[i, j], d[i, j]), max(r[i], r[j])) for i in range(25) for j in range(25)])
    rho1, _ = brute_triples(m)
    assert env.rho2 == rho2
    assert env.rho3 == rho3
    assert env.rho1 == rho1


def test_close_pair_rho3_matches_dense():
    pts = R2.ball(12)
    for p in (GromovProduct(R2), CompactificationProduct(R2, "square")):
        dense = extract_cp_envelopes(R2, p, pts, max_pair_distance=1.5).rho3
        sparse, census = rho3_close_pairs(R2, p, pts, 1.5)
        assert sparse == dense
        assert census["points"] == len(pts)


def test_gromov_bounds_hold_on_plane():
    pts = sample_points(R2, SampleSpec("seeded-random", 0, 100, 600, None, 5))
    env = extract_cp_envelopes(R2, GromovProduct(R2), pts)
    delta = env.triple_excess
    assert bound_check(env.rho1, "gromov-cp1", {"delta": delta}, atol=1e-9).passed
    assert bound_check(env.rho2, "identity", atol=1e-9).passed
    assert bound_check(env.rho3, "gromov-cp3", atol=1e-9).passed


def test_bound_check_reports_worst():
    env = envelope_1d([(1.0, 1.0), (2.0, 5.0)])
    res = bound_check(env, "identity")
    assert not res.passed
    assert res.worst_key == 2.0 and res.worst_excess == 3.0
    assert bound_check(env, "affine", {"a": 1, "b": 3}).passed


def test_bound_check_errors():
    with pytest.raises(AxiomError):
        bound_check(envelope_1d([]), "made-up")
    with pytest.raises(AxiomError):
        bound_check(envelope_1d([]), "gromov-cp1")
    with pytest.raises(AxiomError):
        bound_check(envelope_1d([]), "gromov-cp3")


def test_rebased_bounds_dominate_shifted_base():
    # same product, radii measured from another vertex
    t = rooted_tree(2, 6)
    pts = list(range(127))
    p = GromovProduct(t)
    env = extract_cp_envelopes(t, p, pts)
    new_base = 9
    shift = float(t.radii([new_base])[0])
    edges = [[(i - 1) // 2, i, 1] for i in range(1, 127)]
    moved = GraphSpace(127, edges, basepoint=new_base)
    env2 = extract_cp_envelopes(moved, p, pts)
    rb = rebase_bounds(RhoSet(env.rho1, env.rho2, env.rho3), shift)
    for k, v in env2.rho2.breakpoints():
        assert v <= rb.rho2(k)
    for (s, u), v in env2.rho3.breakpoints():
        assert v <= rb.rho3(s, u)
    assert rebase_bounds(RhoSet(env.rho1, env.rho2, env.rho3), 0).rho2 == env.rho2
    with pytest.raises(AxiomError):
        rebase_bounds(RhoSet(env.rho1, env.rho2, env.rho3), -1)


def test_cp4_trivial_product_table():
    s = star_graph(3, 64)
    res = check_cp4(s, TrivialProduct(s), [1, 5, 10], cap=20, sample=s.ball(64))
    assert res.verdict == SATISFIED
    assert res.table() == {1.0: 1.0, 5.0: 5.0, 10.0: 10.0}


def test_cp4_restricted_no_witness():
    g = PaperGrid()
    for sub in ("paper-Y", "paper-Z"):
        p = build_product({"construction": "restriction",
                           "params": {"base": {"construction": "gromov"}, "subspace": sub}}, g)
        res = check_cp4(p.space, p, [1, 5], cap=40, sample=p.space.ball(500))
        assert res.verdict == NO_WITNESS
        assert all(r.offenders for r in res.rows)


def test_cp4_inconclusive_without_far_points():
    res = check_cp4(R2, GromovProduct(R2), [2], cap=5)
    assert res.verdict == INCONCLUSIVE


def test_cp4_rejects_cap_below_forced_radius():
    with pytest.raises(AxiomError, match="forced witness radius"):
        check_cp4(R2, GromovProduct(R2), [10], cap=5)


def test_divergence_diagnostic_verdicts():
    def e(v):
        return envelope_1d([(0.0, v)])
    assert divergence_diagnostic([e(1), e(50), e(100)], [1, 2, 3], 1.0, 40).verdict == DIVERGING
    assert divergence_diagnostic([e(1), e(3), e(3)], [1, 2, 3], 1.0, 40).verdict == BOUNDED
    assert divergence_diagnostic([e(1), e(3), e(7)], [1, 2, 3], 1.0, 40).verdict == INCONCLUSIVE
    with pytest.raises(AxiomError):
        divergence_diagnostic([e(1), e(2)], [1, 2], 1.0, 1)
    with pytest.raises(AxiomError):
        divergence_diagnostic([e(1), e(2), e(3)], [1, 3, 2], 1.0, 1)
