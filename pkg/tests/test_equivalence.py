import numpy as np
import pytest

from coarsekit.equivalence import (FAILS, HOLDS, ComparisonError, coarse_equivalence_check,
                                   preceq_check, sandwich_check)
from coarsekit.products import (BusemannProduct, CompactificationProduct, FamilyProduct,
                                GromovProduct, TrivialProduct, build_graph_family)
from coarsekit.spaces import NormedSpace, SampleSpec, rooted_tree, sample_points, star_graph

R2 = NormedSpace(2, 2.0)


def test_gromov_and_family_equivalent_on_tree():
    t = rooted_tree(2, 7)
    pts = list(range(255))
    g = GromovProduct(t)
    f = FamilyProduct(build_graph_family(t), 2.0)
    rep = coarse_equivalence_check(g, f, pts, radii=[3, 5, 7], keys=[1, 2, 3])
    assert rep.equivalent
    assert rep.verdict == "coarsely equivalent on sample"


def test_trivial_not_below_gromov_on_star():
    s = star_graph(3, 40)
    pts = s.ball(40)
    g, triv = GromovProduct(s), TrivialProduct(s)
    assert preceq_check(g, triv, pts, radii=[10, 20, 40], keys=[1, 2, 5]).verdict == HOLDS
    back = preceq_check(triv, g, pts, radii=[10, 20, 40], keys=[0, 1, 2])
    assert back.verdict == FAILS
    assert back.witnesses


def test_gromov_and_ball_model_differ_on_plane():
    pts = sample_points(R2, SampleSpec("seeded-random", 0, 200, 1500, None, 3))
    rep = coarse_equivalence_check(GromovProduct(R2), CompactificationProduct(R2, "ball"), pts,
                                   radii=[50, 100, 200])
    assert not rep.equivalent
    assert rep.forward.verdict == FAILS
    assert rep.backward.verdict == HOLDS


def test_preceq_transitive_on_tree():
    t = rooted_tree(3, 4)
    pts = list(range(121))
    prods = [GromovProduct(t), FamilyProduct(build_graph_family(t), 1.0),
             FamilyProduct(build_graph_family(t), 3.0)]
    kw = dict(radii=[2, 3, 4], keys=[1, 2])
    holds = {(a, b): preceq_check(prods[a], prods[b], pts, **kw).holds
             for a in range(3) for b in range(3)}
    for a in range(3):
        for b in range(3):
            for c in range(3):
                if holds[a, b] and holds[b, c]:
                    assert holds[a, c]


def test_reflexive_on_lattice():
    # (x|x) = |x| hits every integer key on a lattice ball, so S_R(k) = k once R >= k
    pts = R2.ball(32)
    b = BusemannProduct(R2, 1.0)
    rep = coarse_equivalence_check(b, b, pts, radii=[8, 16, 32], keys=[1, 2, 5, 10])
    assert rep.equivalent
    assert rep.forward.envelope(10) == 10


def test_busemann_scales_equivalent():
    # S_R(k) approaches 2k from below without attaining it, so "bounded" needs a relative tolerance
    pts = R2.ball(32)
    p1, p2 = BusemannProduct(R2, 1.0), BusemannProduct(R2, 2.0)
    rep = coarse_equivalence_check(p1, p2, pts, radii=[8, 16, 32], keys=[1, 2], rtol=1e-3)
    assert rep.equivalent
    strict = coarse_equivalence_check(p1, p2, pts, radii=[8, 16, 32], keys=[1, 2])
    assert strict.verdict == "inconclusive"
    assert max(d.values[-1] for d in rep.backward.diagnostics[:1]) < 2


def test_everything_below_trivial():
    pts = R2.ball(24)
    for p in (GromovProduct(R2), BusemannProduct(R2, 1.0), CompactificationProduct(R2, "ball")):
        assert preceq_check(p, TrivialProduct(R2), pts, radii=[6, 12, 24], keys=[1, 2, 5]).holds


def test_additive_sandwich_on_tree():
    t = rooted_tree(2, 7)
    pts = list(range(255))
    res = sandwich_check(GromovProduct(t), FamilyProduct(build_graph_family(t), 1.0), pts, shift=1)
    assert res.passed and res.mode == "additive"


def test_multiplicative_sandwich_busemann():
    pts = sample_points(R2, SampleSpec("seeded-random", 0, 200, 800, None, 2))
    p1, p2 = BusemannProduct(R2, 1.0), BusemannProduct(R2, 2.0)
    assert sandwich_check(p1, p2, pts, scale=2.0, atol=1e-9).passed
    assert sandwich_check(p2, p1, pts, scale=1.0).passed
    assert not sandwich_check(p1, p2, pts, scale=1.5).passed


def test_sandwich_argument_errors():
    b = BusemannProduct(R2, 1.0)
    with pytest.raises(ComparisonError):
        sandwich_check(b, b, [], shift=1, scale=2)
    with pytest.raises(ComparisonError):
        sandwich_check(b, b, [], scale=0.5)


def test_different_spaces_rejected():
    with pytest.raises(ComparisonError):
        coarse_equivalence_check(GromovProduct(R2), GromovProduct(NormedSpace(2, 3.0)), [(0.0, 0.0)])


def test_lower_trend_is_not_certified():
    t = rooted_tree(2, 5)
    rep = coarse_equivalence_check(GromovProduct(t), FamilyProduct(build_graph_family(t), 1.0),
                                   list(range(63)), radii=[3, 4, 5], keys=[1, 2])
    assert rep.rho_minus["certified"] is False
    assert np.isfinite(rep.rho_plus(3))
