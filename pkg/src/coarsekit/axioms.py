"""Witness extraction and verification for the controlled-product axioms.

All verdicts are statements about the sample that was scanned; results
carry a census so they can be reproduced and falsified.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._scan import map_blocks, row_blocks
from .envelopes import MonotoneEnvelope1D, MonotoneEnvelope2D, pareto_prune
from .products import GromovProduct, ProductOracle
from .spaces import MetricSpace, NormedSpace, close_pairs

TRIPLE_CAP = 2_000_000
SATISFIED = "satisfied-on-sample"
NO_WITNESS = "no-witness-within-cap"
BLOWUP = "envelope-blowup"
INCONCLUSIVE = "inconclusive"


class AxiomError(ValueError):
    pass


def default_tolerance(space: MetricSpace) -> tuple[float, float]:
    """``(atol, rtol)``: exact for integer graph metrics, 1e-7 relative otherwise."""
    if getattr(space, "integral", False) or space.kind == "fixture":
        return 0.0, 0.0
    return 0.0, 1e-7


# ---------------------------------------------------------------------------
# pair and triple scans


@dataclass
class PairData:
    points: list
    radii: np.ndarray
    products: np.ndarray | None
    distances: np.ndarray | None


def pair_data(space: MetricSpace, product: ProductOracle, sample: Sequence, dense: bool = True) -> PairData:
    pts = list(sample)
    r = space.radii(pts) if pts else np.zeros(0)
    if not dense:
        return PairData(pts, r, None, None)
    m = product.matrix(pts) if pts else np.zeros((0, 0))
    d = space.distances(pts, pts) if pts else np.zeros((0, 0))
    d = np.triu(d) + np.triu(d, 1).T
    return PairData(pts, r, m, d)


def _maxmin_block(m: np.ndarray, lo: int, hi: int):
    # W[x, z] = max_y min(M[x, y], M[y, z]) for x in [lo, hi)
    t = np.minimum(m[lo:hi, :, None], m[None, :, :])
    arg = np.argmax(t, axis=1)
    w = np.take_along_axis(t, arg[:, None, :], axis=1)[:, 0, :]
    return w, arg


@dataclass
class TripleScan:
    """Triple constraints ``key (x|z), value min{(x|y), (y|z)}``."""

    keys: np.ndarray
    values: np.ndarray
    witness: tuple[int, int, int] | None
    excess: float
    exhaustive: bool
    triples: int
    seed: int


def scan_triples(m: np.ndarray, cap: int = TRIPLE_CAP, seed: int = 0) -> TripleScan:
    """Max-min scan over all ordered triples, or ``cap`` seeded random ones.

    ``excess`` is ``max(min{m_xy, m_yz} - m_xz)`` floored at 0 with an
    attaining ``witness`` index triple.
    """
    n = len(m)
    if n == 0:
        return TripleScan(np.zeros(0), np.zeros(0), None, 0.0, True, 0, seed)
    if n ** 3 <= cap:
        size = max(1, 4_000_000 // max(1, n * n))
        blocks = row_blocks(n, size)
        res = map_blocks(lambda b: _maxmin_block(m, *b), blocks)
        w = np.concatenate([r[0] for r in res])
        arg = np.concatenate([r[1] for r in res])
        gap = w - m
        flat = int(np.argmax(gap))
        x, z = divmod(flat, n)
        ex = float(gap[x, z])
        wit = (x, int(arg[x, z]), z)
        if ex <= 0:
            ex, wit = 0.0, (0, 0, 0)
        return TripleScan(m.ravel().copy(), w.ravel(), wit, ex, True, n ** 3, seed)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(cap, 3))
    x, y, z = idx[:, 0], idx[:, 1], idx[:, 2]
    key = m[x, z]
    val = np.minimum(m[x, y], m[y, z])
    gap = val - key
    k = int(np.argmax(gap))
    ex = float(gap[k])
    wit = (int(x[k]), int(y[k]), int(z[k]))
    if ex <= 0:
        ex, wit = 0.0, (wit[0], wit[0], wit[0])
    return TripleScan(key, val, wit, ex, False, cap, seed)


# ---------------------------------------------------------------------------
# envelopes for CP1-CP3


@dataclass
class CPEnvelopes:
    rho1: MonotoneEnvelope1D
    rho2: MonotoneEnvelope1D
    rho3: MonotoneEnvelope2D
    census: dict
    triple_excess: float = 0.0
    triple_witness: tuple | None = None

    def to_dict(self) -> dict:
        return {"rho1": self.rho1.to_dict(), "rho2": self.rho2.to_dict(),
                "rho3": self.rho3.to_dict(), "census": self.census}


def rho3_envelope(radii: np.ndarray, m: np.ndarray, d: np.ndarray, i=None, j=None) -> MonotoneEnvelope2D:
    """Envelope of ``key ((x|y), d(x,y)) -> value max{d(x0,x), d(x0,y)}`` over pairs."""
    n = len(radii)
    if i is None:
        i, j = np.triu_indices(n)
    parts = []
    step = 2_000_000
    for lo in range(0, len(i), step):
        a, b = i[lo:lo + step], j[lo:lo + step]
        parts.append(pareto_prune(m[a, b], d[a, b], np.maximum(radii[a], radii[b])))
    if not parts:
        return MonotoneEnvelope2D()
    return MonotoneEnvelope2D(np.concatenate([p[0] for p in parts]),
                              np.concatenate([p[1] for p in parts]),
                              np.concatenate([p[2] for p in parts]))


def extract_cp_envelopes(space: MetricSpace, product: ProductOracle, sample: Sequence, *,
                         max_pair_distance: float | None = None, triple_cap: int = TRIPLE_CAP,
                         seed: int = 0) -> CPEnvelopes:
    """Minimal non-decreasing witnesses for CP1, CP2 and CP3 on ``sample``.

    ``max_pair_distance`` limits CP3 constraints to close pairs; the result
    is then exact for keys ``t`` up to that distance.
    """
    data = pair_data(space, product, sample)
    r, m, d = data.radii, data.products, data.distances
    n = len(r)
    rho2 = MonotoneEnvelope1D(r, m.max(axis=1) if n else np.zeros(0))
    if max_pair_distance is None:
        rho3 = rho3_envelope(r, m, d)
        npairs = n * (n + 1) // 2
    else:
        i, j = np.nonzero(np.triu(d <= max_pair_distance))
        rho3 = rho3_envelope(r, m, d, i, j)
        npairs = len(i)
    tri = scan_triples(m, triple_cap, seed)
    rho1 = MonotoneEnvelope1D(tri.keys, tri.values)
    census = {"points": n, "pairs": npairs, "triples": tri.triples,
              "triples_exhaustive": tri.exhaustive, "triple_seed": seed,
              "max_pair_distance": max_pair_distance,
              "max_radius": float(r.max()) if n else 0.0}
    return CPEnvelopes(rho1, rho2, rho3, census, tri.excess, tri.witness)


def rho3_close_pairs(space: MetricSpace, product: ProductOracle, sample: Sequence,
                     max_pair_distance: float) -> tuple[MonotoneEnvelope2D, dict]:
    """CP3 envelope from pairs with ``d(x,y) <= max_pair_distance`` only.

    Never forms an ``n x n`` matrix on normed spaces, so it scales to full
    lattice balls.  Diagonal pairs are included, matching the dense route.
    """
    pts = space.check(list(sample))
    n = len(pts)
    if n == 0:
        return MonotoneEnvelope2D(), {"points": 0, "pairs": 0}
    r = space.radii(pts)
    i, j, d = close_pairs(space, pts, max_pair_distance)
    i = np.concatenate([np.arange(n), i])
    j = np.concatenate([np.arange(n), j])
    d = np.concatenate([np.zeros(n), d])
    m = np.empty(len(i))
    step = 500_000
    for lo in range(0, len(i), step):
        a, b = i[lo:lo + step], j[lo:lo + step]
        m[lo:lo + step] = product.paired([pts[k] for k in a], [pts[k] for k in b])
    s, t, v = pareto_prune(m, d, np.maximum(r[i], r[j]))
    census = {"points": n, "pairs": int(len(i)), "max_pair_distance": max_pair_distance,
              "max_radius": float(r.max())}
    return MonotoneEnvelope2D(s, t, v), census


@dataclass
class DeltaResult:
    delta: float
    witness: tuple | None
    exhaustive: bool
    triples: int
    seed: int

    def to_dict(self):
        return {"delta": self.delta, "witness": self.witness, "exhaustive": self.exhaustive,
                "triples": self.triples, "seed": self.seed}


def hyperbolicity_delta(space: MetricSpace, sample: Sequence, *, triple_cap: int = TRIPLE_CAP,
                        seed: int = 0) -> DeltaResult:
    """Least ``delta`` with ``min{(x|y),(y|z)} <= (x|z) + delta`` on sampled triples."""
    pts = list(sample)
    if len(pts) < 3:
        return DeltaResult(0.0, None, True, 0, seed)
    m = GromovProduct(space).matrix(pts)
    tri = scan_triples(m, triple_cap, seed)
    wit = tuple(pts[k] for k in tri.witness) if tri.witness is not None else None
    return DeltaResult(tri.excess, wit, tri.exhaustive, tri.triples, seed)


# ---------------------------------------------------------------------------
# CP4


@dataclass
class CP4Row:
    R: float
    S: float
    verdict: str
    offenders: list

    def to_dict(self):
        return {"R": self.R, "S": self.S, "verdict": self.verdict,
                "offenders": [list(o) if isinstance(o, tuple) else o for o in self.offenders]}


@dataclass
class CP4Result:
    rows: list[CP4Row]
    verdict: str
    cap: float
    census: dict
    rho4: MonotoneEnvelope1D = field(default_factory=MonotoneEnvelope1D)

    def table(self) -> dict[float, float]:
        return {row.R: row.S for row in self.rows}

    def to_dict(self):
        return {"verdict": self.verdict, "cap": self.cap, "census": self.census,
                "rows": [r.to_dict() for r in self.rows], "rho4": self.rho4.to_dict()}


def check_cp4(space: MetricSpace, product: ProductOracle, ladder: Sequence[float], cap: float,
              sample: Sequence | None = None, pool: Sequence | None = None, *,
              tol: float | None = None, max_offenders: int = 10) -> CP4Result:
    """Least ``S <= cap`` such that sampled points farther than ``S`` have a
    witness ``y`` with ``d(x0,y) <= S`` and ``(x|y) >= R``.

    Witnesses come from ``pool`` (default: the whole closed ball of radius
    ``cap``).  Points tested are ``sample`` (default: the pool).  Only
    sampled points beyond the cap can reveal a missing witness.
    """
    ladder = [float(R) for R in ladder]
    if not ladder:
        raise AxiomError("R ladder is empty")
    if cap < 0:
        raise AxiomError("cap must be non-negative")
    bound = product.radial_bound
    if bound is not None:
        a, b = bound
        forced = (max(ladder) - b) / a
        if cap < forced - 1e-9:
            raise AxiomError(f"cap {cap} is smaller than the forced witness radius {forced:g} "
                             f"for R={max(ladder):g}")
    pool = list(pool) if pool is not None else space.ball(cap)
    xs = list(sample) if sample is not None else list(pool)
    if tol is None:
        atol, rtol = default_tolerance(space)
    else:
        atol, rtol = tol, 0.0
    rpool = space.radii(pool)
    keep = rpool <= cap + 1e-9
    pool = [p for p, k in zip(pool, keep) if k]
    rpool = rpool[keep]
    order = np.argsort(rpool, kind="stable")
    pool = [pool[i] for i in order]
    rpool = rpool[order]
    rx = space.radii(xs) if xs else np.zeros(0)
    beyond = int(np.sum(rx > cap + 1e-9))

    # best[i, l] = least pool radius with product >= R_l - tol
    def block(b):
        lo, hi = b
        pm = product.cross(xs[lo:hi], pool)
        out = np.full((hi - lo, len(ladder)), np.inf)
        for li, R in enumerate(ladder):
            ok = pm >= R - (atol + rtol * abs(R))
            has = ok.any(axis=1)
            first = np.argmax(ok, axis=1)
            out[has, li] = rpool[first[has]]
        return out

    size = max(1, 2_000_000 // max(1, len(pool)))
    parts = map_blocks(block, row_blocks(len(xs), size))
    best = np.concatenate(parts) if parts else np.zeros((0, len(ladder)))
    rows = []
    for li, R in enumerate(ladder):
        need = np.minimum(rx, best[:, li])
        bad = np.nonzero(need > cap + 1e-9)[0]
        if len(bad):
            verdict = NO_WITNESS
            S = math.inf
        elif beyond == 0:
            verdict = INCONCLUSIVE
            S = float(need.max()) if len(need) else 0.0
        else:
            verdict = SATISFIED
            S = float(need.max()) if len(need) else 0.0
        offenders = [(R, xs[i]) for i in bad[:max_offenders]]
        rows.append(CP4Row(R, S, verdict, offenders))
    verdicts = {r.verdict for r in rows}
    overall = NO_WITNESS if NO_WITNESS in verdicts else (INCONCLUSIVE if INCONCLUSIVE in verdicts else SATISFIED)
    finite = [(r.R, r.S) for r in rows if math.isfinite(r.S)]
    rho4 = MonotoneEnvelope1D.from_pairs(finite)
    census = {"pool": len(pool), "tested": len(xs), "beyond_cap": beyond}
    return CP4Result(rows, overall, float(cap), census, rho4)


# ---------------------------------------------------------------------------
# closed-form bounds


@dataclass(frozen=True)
class Bound:
    name: str
    dims: int
    fn: Callable
    needs: tuple[str, ...]


def _theta(c, t):
    a, b = c.get("theta", (1.0, 0.0))
    return a * t + b


BOUNDS: dict[str, Bound] = {
    "identity": Bound("identity", 1, lambda t, c: t, ()),
    "affine": Bound("affine", 1, lambda t, c: c["a"] * t + c["b"], ("a", "b")),
    "gromov-cp1": Bound("gromov-cp1", 1, lambda t, c: t + c["delta"], ("delta",)),
    "busemann-cp1": Bound("busemann-cp1", 1, lambda t, c: 2.0 * t, ()),
    "family-cp1": Bound("family-cp1", 1, lambda t, c: 5.0 * c["E"] ** 2 * c["D"] * t, ("E", "D")),
    "family-cp2": Bound("family-cp2", 1, lambda t, c: c["lambda"] * t + c["lambda"] * c["k"],
                        ("lambda", "k")),
    "family-cp3": Bound("family-cp3", 2, lambda s, t, c: (
        c["lambda"] * c["E"] * s * (1.0 + c["lambda"] * _theta(c, t) + t + 2.0 * c["k"])
        + c["lambda"] * _theta(c, t) + c["k"]), ("lambda", "E", "k")),
    "gromov-cp3": Bound("gromov-cp3", 2, lambda s, t, c: 2.0 * s + t, ()),
    "busemann-cp3": Bound("busemann-cp3", 2, lambda s, t, c: s + (2.0 / c["D"]) * s * t + t, ("D",)),
}


@dataclass
class BoundResult:
    passed: bool
    bound: str
    constants: dict
    worst_key: tuple | float | None
    worst_value: float
    worst_bound: float
    worst_excess: float
    checked: int

    def to_dict(self):
        return {"passed": self.passed, "bound": self.bound, "constants": self.constants,
                "worst": {"key": self.worst_key, "value": self.worst_value,
                          "bound": self.worst_bound, "excess": self.worst_excess},
                "checked": self.checked}


def bound_check(envelope, name: str, constants: dict | None = None, *, atol: float = 0.0,
                rtol: float = 0.0) -> BoundResult:
    """Compare an envelope with a registered closed-form bound at every breakpoint."""
    if name not in BOUNDS:
        raise AxiomError(f"unregistered bound {name!r}; known: {sorted(BOUNDS)}")
    b = BOUNDS[name]
    c = dict(constants or {})
    missing = [k for k in b.needs if k not in c]
    if missing:
        raise AxiomError(f"bound {name!r} needs constants {missing}")
    if b.dims == 1:
        if not isinstance(envelope, MonotoneEnvelope1D):
            raise AxiomError(f"bound {name!r} applies to 1D envelopes")
        keys = envelope.keys
        vals = envelope.values
        lim = np.asarray(b.fn(keys, c), dtype=float) * np.ones_like(keys)
        keyfmt = lambda i: float(keys[i])
    else:
        if not isinstance(envelope, MonotoneEnvelope2D):
            raise AxiomError(f"bound {name!r} applies to 2D envelopes")
        vals = envelope.values
        lim = np.asarray(b.fn(envelope.s, envelope.t, c), dtype=float) * np.ones_like(vals)
        keyfmt = lambda i: (float(envelope.s[i]), float(envelope.t[i]))
    if len(vals) == 0:
        return BoundResult(True, name, c, None, 0.0, 0.0, 0.0, 0)
    excess = vals - lim - (atol + rtol * np.abs(lim))
    i = int(np.argmax(vals - lim))
    return BoundResult(bool(np.all(excess <= 0)), name, c, keyfmt(i), float(vals[i]), float(lim[i]),
                       float(vals[i] - lim[i]), len(vals))


# ---------------------------------------------------------------------------
# base point change


@dataclass
class RhoSet:
    rho1: MonotoneEnvelope1D
    rho2: MonotoneEnvelope1D
    rho3: MonotoneEnvelope2D
    rho4: MonotoneEnvelope1D | None = None


def rebase_bounds(rhos: RhoSet, shift: float) -> RhoSet:
    """Witnesses for the same product read from a base point ``shift`` away.

    ``rho2'(t) = rho2(shift + t)``, ``rho3' = rho3 + shift``,
    ``rho4' = rho4 + shift``; ``rho1`` is unchanged.
    """
    if shift < 0:
        raise AxiomError("shift must be non-negative")
    if shift == 0:
        return RhoSet(rhos.rho1, rhos.rho2, rhos.rho3, rhos.rho4)
    r2 = MonotoneEnvelope1D(np.maximum(rhos.rho2.keys - shift, 0.0), rhos.rho2.values)
    r3 = MonotoneEnvelope2D(np.concatenate([[0.0], rhos.rho3.s]), np.concatenate([[0.0], rhos.rho3.t]),
                            np.concatenate([[shift], rhos.rho3.values + shift]))
    r4 = None
    if rhos.rho4 is not None:
        r4 = MonotoneEnvelope1D(np.concatenate([[0.0], rhos.rho4.keys]),
                                np.concatenate([[shift], rhos.rho4.values + shift]))
    return RhoSet(rhos.rho1, r2, r3, r4)


# ---------------------------------------------------------------------------
# growth across truncation radii

BOUNDED = "bounded"
DIVERGING = "diverging"


@dataclass
class Diagnostic:
    verdict: str
    key: tuple | float
    radii: list
    values: list
    threshold: float

    def to_dict(self):
        return {"verdict": self.verdict, "key": self.key, "radii": self.radii,
                "values": self.values, "growth_threshold": self.threshold}


def divergence_diagnostic(envelopes: Sequence, radii: Sequence[float], key, growth_threshold: float,
                          *, atol: float = 1e-9, rtol: float = 1e-7) -> Diagnostic:
    """Classify the values ``envelope_i(key)`` across increasing truncation radii.

    ``diverging`` when every step grows by at least ``growth_threshold``;
    ``bounded`` when the last two values agree within tolerance.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 3 or len(envelopes) != len(radii):
        raise AxiomError("divergence diagnostic needs an envelope for each of >= 3 radii")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise AxiomError("truncation radii must be strictly increasing")
    vals = []
    for env in envelopes:
        if isinstance(env, MonotoneEnvelope2D):
            vals.append(float(env(key[0], key[1])))
        else:
            vals.append(float(env(key)))
    steps = np.diff(vals)
    if np.all(steps >= growth_threshold):
        verdict = DIVERGING
    elif abs(vals[-1] - vals[-2]) <= atol + rtol * abs(vals[-1]):
        verdict = BOUNDED
    else:
        verdict = INCONCLUSIVE
    k = tuple(float(c) for c in key) if isinstance(key, (tuple, list)) else float(key)
    return Diagnostic(verdict, k, radii, vals, float(growth_threshold))


# ---------------------------------------------------------------------------
# full report


@dataclass
class AxiomReport:
    envelopes: CPEnvelopes
    cp4: CP4Result | None
    bounds: list[BoundResult]
    verdicts: dict

    @property
    def ok(self) -> bool:
        return all(v in (SATISFIED, INCONCLUSIVE) for v in self.verdicts.values())

    def to_dict(self):
        return {"envelopes": self.envelopes.to_dict(),
                "cp4": self.cp4.to_dict() if self.cp4 else None,
                "bounds": [b.to_dict() for b in self.bounds], "verdicts": self.verdicts}
