"""Finite-scale shadows of the boundary at infinity.

Points of an annulus are grouped by the transitive closure of the relation
``(x|y) > n or d(x,y) < 1/n``; cells at successive radii are linked when
some pair across them has product above ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .axioms import CPEnvelopes, extract_cp_envelopes
from .products import ProductOracle
from .spaces import MetricSpace, SampleSpec, annulus_sample


class BoundaryError(ValueError):
    pass


class UnionFind:
    """Disjoint sets over ``0..n-1``; roots are always the least member."""

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True

    def groups(self) -> list[list[int]]:
        out: dict[int, list[int]] = {}
        for i in range(len(self.parent)):
            out.setdefault(self.find(i), []).append(i)
        return [out[k] for k in sorted(out)]


def vn_related(product: ProductOracle, n: float, x, y) -> bool:
    """``(x|y) > n`` or ``d(x,y) < 1/n``."""
    if n < 1:
        raise BoundaryError("n must be >= 1")
    return bool(product(x, y) > n or product.space.distance(x, y) < 1.0 / n)


def vn_matrix(product: ProductOracle, pts: Sequence, n: float, mats=None) -> np.ndarray:
    if n < 1:
        raise BoundaryError("n must be >= 1")
    if mats is None:
        m = product.matrix(pts)
        d = product.space.distances(pts, pts)
        d = np.triu(d) + np.triu(d, 1).T
    else:
        m, d = mats
    return (m > n) | (d < 1.0 / n)


def _components(rel: np.ndarray) -> list[list[int]]:
    """Connected components of a symmetric relation, each sorted, ordered by least member."""
    n = len(rel)
    if n == 0:
        return []
    _, lab = connected_components(csr_matrix(rel), directed=False)
    order = np.argsort(lab, kind="stable")
    cuts = np.nonzero(np.diff(lab[order]))[0] + 1
    groups = [g.tolist() for g in np.split(order, cuts)]
    groups.sort(key=lambda g: g[0])
    return groups


@dataclass
class ShadowCell:
    members: list
    representative: object
    band: tuple[float, float]
    n: float

    @property
    def size(self) -> int:
        return len(self.members)

    def to_dict(self, full: bool = False):
        out = {"representative": _plain(self.representative), "size": self.size,
               "band": list(self.band), "n": self.n}
        if full:
            out["members"] = [_plain(m) for m in self.members]
        return out


def _plain(p):
    return list(p) if isinstance(p, tuple) else p


def _key(p):
    return p


def cells_from_sample(product: ProductOracle, pts: list, n: float, band: tuple[float, float],
                      mats=None) -> list[ShadowCell]:
    rel = vn_matrix(product, pts, n, mats)
    cells = []
    for grp in _components(rel):
        members = sorted((pts[i] for i in grp), key=_key)
        cells.append(ShadowCell(members, members[0], (float(band[0]), float(band[1])), float(n)))
    cells.sort(key=lambda c: _key(c.representative))
    return cells


def shadow_cells(space: MetricSpace, product: ProductOracle, annulus: tuple[float, float], n: float,
                 spec: SampleSpec | None = None, sample: Sequence | None = None) -> list[ShadowCell]:
    """Cells of the transitive closure of the ``V_n`` relation on an annulus sample.

    An empty sample yields an empty list.
    """
    if n < 1:
        raise BoundaryError("n must be >= 1")
    r_in, r_out = annulus
    pts = list(sample) if sample is not None else annulus_sample(space, r_in, r_out, spec)
    if not pts:
        return []
    return cells_from_sample(product, pts, n, (r_in, r_out))


# ---------------------------------------------------------------------------
# profiles across radii


@dataclass
class BoundaryProfile:
    radii: list[float]
    ns: list[float]
    bands: list[tuple[float, float]]
    cells: dict  # (radius index, n) -> list[ShadowCell]
    links: dict  # n -> list of ((i, a), (i+1, b)) cell index links
    chains: dict  # n -> number of link components touching every radius
    census: dict

    def cell_counts(self, n) -> list[int]:
        return [len(self.cells[(i, n)]) for i in range(len(self.radii))]

    def to_dict(self):
        per_n = []
        for n in self.ns:
            per_n.append({
                "n": n,
                "cells": [[c.to_dict() for c in self.cells[(i, n)]] for i in range(len(self.radii))],
                "links": [[list(a), list(b)] for a, b in self.links[n]],
                "persistent_chains": self.chains[n],
            })
        return {"radii": self.radii, "bands": [list(b) for b in self.bands], "profiles": per_n,
                "census": self.census}


def default_bands(radii: Sequence[float]) -> list[tuple[float, float]]:
    """``[R_{i-1}, R_i]``; the first band reaches back by the first ratio."""
    bands = []
    for i, R in enumerate(radii):
        if i == 0:
            lo = R * R / radii[1] if len(radii) > 1 and radii[1] > 0 else 0.0
        else:
            lo = radii[i - 1]
        bands.append((float(lo), float(R)))
    return bands


def refinement_profile(space: MetricSpace, product: ProductOracle, radii: Sequence[float],
                       ns: Sequence[float], spec: SampleSpec | None = None,
                       bands: Sequence[tuple[float, float]] | None = None) -> BoundaryProfile:
    radii = [float(r) for r in radii]
    ns = [float(n) for n in ns]
    if len(radii) < 2:
        raise BoundaryError("radius ladder needs at least 2 radii")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise BoundaryError("radius ladder must be increasing")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise BoundaryError("n ladder must be increasing")
    if any(n < 1 for n in ns):
        raise BoundaryError("n must be >= 1")
    bands = list(bands) if bands is not None else default_bands(radii)
    samples = [annulus_sample(space, lo, hi, spec) for lo, hi in bands]
    mats = []
    for pts in samples:
        m = product.matrix(pts) if pts else np.zeros((0, 0))
        d = space.distances(pts, pts) if pts else np.zeros((0, 0))
        mats.append((m, np.triu(d) + np.triu(d, 1).T))
    cross = [product.cross(samples[i], samples[i + 1]) for i in range(len(radii) - 1)]
    cells, links, chains = {}, {}, {}
    for n in ns:
        index = []  # per radius: point index -> cell index
        for i, pts in enumerate(samples):
            cs = cells_from_sample(product, pts, n, bands[i], mats[i]) if pts else []
            cells[(i, n)] = cs
            pos = {}
            for ci, c in enumerate(cs):
                for mbr in c.members:
                    pos[mbr] = ci
            index.append(np.array([pos[p] for p in pts], dtype=np.int64))
        offsets = np.cumsum([0] + [len(cells[(i, n)]) for i in range(len(radii))])
        uf = UnionFind(int(offsets[-1]))
        lk = set()
        for i in range(len(radii) - 1):
            a, b = np.nonzero(cross[i] > n)
            width = max(1, len(cells[(i + 1, n)]))
            codes = np.unique(index[i][a] * width + index[i + 1][b])
            for ca, cb in zip((codes // width).tolist(), (codes % width).tolist()):
                lk.add(((i, ca), (i + 1, cb)))
                uf.union(int(offsets[i] + ca), int(offsets[i + 1] + cb))
        links[n] = sorted(lk)
        count = 0
        for grp in uf.groups():
            levels = {int(np.searchsorted(offsets, g, side="right") - 1) for g in grp}
            if len(levels) == len(radii):
                count += 1
        chains[n] = count
    census = {"band_sizes": [len(s) for s in samples],
              "sample": spec.to_dict() if spec else SampleSpec().to_dict()}
    return BoundaryProfile(radii, ns, [tuple(b) for b in bands], cells, links, chains, census)


# ---------------------------------------------------------------------------
# composition of entourages


def composition_threshold(env: CPEnvelopes, n: float) -> int:
    """Integer ``m`` with ``V_m o V_m`` inside ``V_n``, from extracted witnesses.

    ``m = max{rho3_bar(n, 1), rho1_bar(n), 2n}`` where
    ``rho1_bar(t) = rho1(t + 1)`` and
    ``rho3_bar(s, t) = max{rho1_bar(s), rho2(rho3(rho1_bar(s), t))}``.
    """
    r1 = float(env.rho1(n + 1.0))
    r3 = float(env.rho3(r1, 1.0))
    r3bar = max(r1, float(env.rho2(r3)))
    return int(math.ceil(max(r3bar, r1, 2.0 * n)))


@dataclass
class CompositionResult:
    n: float
    m: int
    holds: bool
    violations: int
    witness: tuple | None
    triples: int

    def to_dict(self):
        return {"n": self.n, "m": self.m, "holds": self.holds, "violations": self.violations,
                "witness": [_plain(p) for p in self.witness] if self.witness else None,
                "triples": self.triples}


def composition_check(space: MetricSpace, product: ProductOracle, sample: Sequence, n: float,
                      env: CPEnvelopes | None = None, m: float | None = None,
                      **extract) -> CompositionResult:
    """Verify ``V_m o V_m`` is contained in ``V_n`` on every sampled triple."""
    pts = list(sample)
    if env is None and m is None:
        env = extract_cp_envelopes(space, product, pts, **extract)
    if m is None:
        m = composition_threshold(env, n)
    mm = product.matrix(pts)
    d = space.distances(pts, pts)
    d = np.triu(d) + np.triu(d, 1).T
    vm = vn_matrix(product, pts, m, (mm, d)).astype(np.int64)
    vn = vn_matrix(product, pts, n, (mm, d))
    comp = (vm @ vm) > 0
    bad = comp & ~vn
    witness = None
    if bad.any():
        i, k = map(int, np.argwhere(bad)[0])
        j = int(np.nonzero(vm[i] & vm[:, k])[0][0])
        witness = (pts[i], pts[j], pts[k])
    return CompositionResult(float(n), int(m), not bad.any(), int(bad.sum()), witness, len(pts) ** 3)


# ---------------------------------------------------------------------------
# sequences


@dataclass
class SequenceResult:
    in_s_infinity: tuple[bool, bool | None]
    equivalent: bool | None
    thresholds: list[float]
    tail_starts: dict
    horizon: int
    label: str = "finite-horizon evidence"

    def to_dict(self):
        return {"in_s_infinity": list(self.in_s_infinity), "equivalent": self.equivalent,
                "thresholds": self.thresholds, "tail_starts": self.tail_starts,
                "horizon": self.horizon, "label": self.label}


def _tail_mins(m: np.ndarray) -> np.ndarray:
    # tau[h] = min over i, j >= h of m[i, j]
    L = len(m)
    out = np.empty(L)
    cur = np.inf
    for h in range(L - 1, -1, -1):
        cur = min(cur, m[h, h:].min(), m[h:, h].min())
        out[h] = cur
    return out


def _evidence(tau: np.ndarray, horizon: int, thresholds):
    starts = []
    for th in thresholds:
        hit = np.nonzero(tau[: horizon + 1] > th)[0]
        starts.append(int(hit[0]) if len(hit) else None)
    monotone = bool(np.all(np.diff(tau) >= 0))
    return monotone and all(s is not None for s in starts), starts


def sequence_class_check(product: ProductOracle, seq_a: Sequence, seq_b: Sequence | None = None,
                         horizon: int | None = None, thresholds: Sequence[float] = (1, 2, 5, 10)
                         ) -> SequenceResult:
    """Tail evidence that sequences diverge, and that two of them are equivalent.

    A sequence counts as divergent evidence when, for every threshold, some
    tail starting at index ``<= horizon`` has all pairwise products above it.
    """
    a = list(seq_a)
    if horizon is None:
        horizon = len(a) - 1
    if horizon >= len(a) or (seq_b is not None and horizon >= len(seq_b)):
        raise BoundaryError("horizon exceeds sequence length")
    thresholds = [float(t) for t in thresholds]
    ma = product.matrix(a)
    ok_a, st_a = _evidence(_tail_mins(ma), horizon, thresholds)
    starts = {"a": st_a}
    ok_b = eq = None
    if seq_b is not None:
        b = list(seq_b)
        ok_b, starts["b"] = _evidence(_tail_mins(product.matrix(b)), horizon, thresholds)
        L = min(len(a), len(b))
        diag = product.paired(a[:L], b[:L])
        tau = np.minimum.accumulate(diag[::-1])[::-1]
        eq, starts["ab"] = _evidence(tau, horizon, thresholds)
    return SequenceResult((ok_a, ok_b), eq, thresholds, starts, horizon)
