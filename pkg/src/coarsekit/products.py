"""Product oracles ``(x|y)`` on a metric space.

Each oracle is immutable once built and evaluates whole blocks of pairs at
once through :meth:`ProductOracle.cross`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .spaces import (GraphSpace, MetricSpace, NormedSpace, SpaceError, build_fixture,
                     build_space)

NMAX = 1100  # beyond the float exponent range, so "infinite" n


class ProductError(ValueError):
    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ProductOracle:
    """Symmetric non-negative pairing on ``space``.

    ``radial_bound = (a, b)`` records a bound ``(x|y) <= a*min(|x|, |y|) + b``
    that holds for the construction; CP4 uses it to reject caps that are
    too small to contain any witness.
    """

    construction = "abstract"
    radial_bound: tuple[float, float] | None = (1.0, 0.0)

    def __init__(self, space: MetricSpace):
        self.space = space

    @property
    def basepoint(self):
        return self.space.basepoint

    def _cross(self, xs: list, ys: list) -> np.ndarray:
        raise NotImplementedError

    def cross(self, xs: Sequence, ys: Sequence) -> np.ndarray:
        """Matrix of ``(xs[i] | ys[j])``."""
        xs = self.space.check(xs)
        ys = self.space.check(ys)
        if not xs or not ys:
            return np.zeros((len(xs), len(ys)))
        return np.maximum(self._cross(xs, ys), 0.0)

    def _paired(self, xs: list, ys: list) -> np.ndarray:
        return np.array([self._cross([x], [y])[0, 0] for x, y in zip(xs, ys)])

    def paired(self, xs: Sequence, ys: Sequence) -> np.ndarray:
        """``(xs[i] | ys[i])`` for two aligned point lists."""
        xs = self.space.check(xs)
        ys = self.space.check(ys)
        if len(xs) != len(ys):
            raise ProductError("paired evaluation needs lists of equal length")
        if not xs:
            return np.zeros(0)
        return np.maximum(self._paired(xs, ys), 0.0)

    def matrix(self, xs: Sequence) -> np.ndarray:
        """Exactly symmetric Gram-style matrix over ``xs``."""
        m = self.cross(xs, xs)
        up = np.triu(m)
        return up + np.triu(m, 1).T

    def __call__(self, x, y) -> float:
        return float(self.cross([x], [y])[0, 0])

    def params(self) -> dict:
        return {}

    def descriptor(self) -> dict:
        return {"construction": self.construction, "params": self.params()}

    def __repr__(self):
        return f"{type(self).__name__}({self.space.name!r}, {self.params()!r})"


class GromovProduct(ProductOracle):
    construction = "gromov"

    def _cross(self, xs, ys):
        rx = self.space.radii(xs)
        ry = self.space.radii(ys)
        d = self.space.distances(xs, ys)
        return 0.5 * (rx[:, None] + ry[None, :] - d)

    def _paired(self, xs, ys):
        return 0.5 * (self.space.radii(xs) + self.space.radii(ys) - self.space.paired(xs, ys))


class TrivialProduct(ProductOracle):
    """``min{d(x0,x), d(x0,y)}``."""

    construction = "trivial"

    def _cross(self, xs, ys):
        rx = self.space.radii(xs)
        ry = self.space.radii(ys)
        return np.minimum(rx[:, None], ry[None, :])

    def _paired(self, xs, ys):
        return np.minimum(self.space.radii(xs), self.space.radii(ys))


class BusemannProduct(ProductOracle):
    """Last time two straight rays from the origin stay within ``D``.

    With unit directions ``u_x, u_y`` the separation at time ``t`` is
    ``t * |u_x - u_y|``, so the answer is ``min{|x|, |y|, D/|u_x - u_y|}``.
    """

    construction = "busemann"

    def __init__(self, space: MetricSpace, D: float = 1.0):
        if not isinstance(space, NormedSpace):
            raise ProductError("busemann product needs a normed space", "space")
        if not space.busemann_valid:
            raise ProductError(f"l_{space.p:g} norm is not strictly convex; geodesics are not unique",
                               "space.params.p")
        if not (D > 0 and math.isfinite(D)):
            raise ProductError(f"D must be positive, got {D}", "params.D")
        super().__init__(space)
        self.D = float(D)

    def params(self):
        return {"D": self.D}

    def units(self, xs):
        c = self.space.coords(xs)
        r = self.space.norms(c)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(r[:, None] > 0, c / np.where(r > 0, r, 1.0)[:, None], 0.0)
        return u, r

    def uncapped(self, xs, ys) -> np.ndarray:
        """``D / |u_x - u_y|`` (inf for equal directions or the origin)."""
        ux, rx = self.units(self.space.check(xs))
        uy, ry = self.units(self.space.check(ys))
        chord = self.space.norms(ux[:, None, :] - uy[None, :, :])
        zero = (rx[:, None] == 0) | (ry[None, :] == 0) | (chord == 0)
        with np.errstate(divide="ignore"):
            out = self.D / np.where(zero, 1.0, chord)
        return np.where(zero, np.inf, out)

    def _cross(self, xs, ys):
        rx = self.space.radii(xs)
        ry = self.space.radii(ys)
        return np.minimum(np.minimum(rx[:, None], ry[None, :]), self.uncapped(xs, ys))

    def _paired(self, xs, ys):
        ux, rx = self.units(xs)
        uy, ry = self.units(ys)
        chord = self.space.norms(ux - uy)
        zero = (rx == 0) | (ry == 0) | (chord == 0)
        with np.errstate(divide="ignore"):
            cap = np.where(zero, np.inf, self.D / np.where(zero, 1.0, chord))
        return np.minimum(np.minimum(rx, ry), cap)


# ---------------------------------------------------------------------------
# quasi-geodesic families on graphs


@dataclass
class QuasiGeodesicFamily:
    """One integer-parametrised path from the base point to each vertex.

    ``paths[v, t]`` is ``gamma_v(t)`` for ``t <= lengths[v]``; entries past the
    end repeat the endpoint.  ``theta`` is affine ``theta(t) = a*t + b``.
    """

    space: GraphSpace
    parent: np.ndarray
    lengths: np.ndarray
    paths: np.ndarray
    lam: float = 1.0
    k: float = 0.0
    E: float = 1.0
    C: float = 0.0
    theta: tuple[float, float] = (1.0, 0.0)
    meta: dict = field(default_factory=dict)

    def theta_at(self, t):
        a, b = self.theta
        return a * np.asarray(t, dtype=float) + b

    @property
    def threshold(self) -> float:
        """Least admissible ``D``: ``max{C + 1, lam*theta(0) + k}``."""
        return max(self.C + 1.0, self.lam * float(self.theta_at(0.0)) + self.k)

    def path(self, v: int) -> list[int]:
        return [int(p) for p in self.paths[v, : self.lengths[v] + 1]]

    def constants(self) -> dict:
        return {"lambda": self.lam, "k": self.k, "E": self.E, "C": self.C,
                "theta": list(self.theta)}


def build_graph_family(space: GraphSpace, E: float = 1.0, C: float = 0.0,
                       theta: tuple[float, float] = (1.0, 0.0)) -> QuasiGeodesicFamily:
    """Paths along the shortest-path tree from the base point.

    Each vertex's parent is the smallest-index neighbour on a shortest path.
    Weights must be integers so paths can be read at integer times; an edge
    of weight ``w`` is traversed in one jump, giving additive error ``w - 1``.
    """
    if not isinstance(space, GraphSpace):
        raise ProductError("graph family needs a graph space", "space")
    if not space.integral:
        raise ProductError("graph family needs integer edge weights", "space.params.edges")
    n = space.n
    x0 = space.basepoint
    dist = space.rows([x0])[0]
    if not np.all(np.isfinite(dist)):
        raise ProductError("graph is disconnected", "space")
    dist = dist.astype(np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    adj = space.adjacency
    maxw = 1
    for v in range(n):
        if v == x0:
            continue
        lo, hi = adj.indptr[v], adj.indptr[v + 1]
        nb = adj.indices[lo:hi]
        w = adj.data[lo:hi]
        ok = nb[dist[nb] + np.rint(w).astype(np.int64) == dist[v]]
        parent[v] = int(ok.min())
    if len(adj.data):
        maxw = int(np.rint(adj.data.max()))
    T = int(dist.max()) if n else 0
    paths = np.empty((n, T + 1), dtype=np.int64)
    order = np.argsort(dist, kind="stable")
    for v in order:
        v = int(v)
        if v == x0:
            paths[v, :] = x0
            continue
        p = int(parent[v])
        row = paths[p].copy()
        # gamma_v agrees with its parent's path up to d(x0, p), then sits at v
        row[dist[p] + 1:] = p
        row[dist[v]:] = v
        paths[v] = row
    return QuasiGeodesicFamily(space, parent, dist, paths, lam=1.0, k=float(maxw - 1),
                               E=float(E), C=float(C), theta=(float(theta[0]), float(theta[1])),
                               meta={"parent_rule": "smallest-index", "max_weight": maxw})


class FamilyProduct(ProductOracle):
    """``max{t <= min(t_x, t_y) : d(gamma_x(t), gamma_y(t)) <= D}``."""

    construction = "family"

    def __init__(self, family: QuasiGeodesicFamily, D: float):
        if not math.isfinite(D) or D < family.threshold:
            raise ProductError(
                f"D={D} is below the admissibility threshold {family.threshold:g} "
                f"(max of C+1 and lambda*theta(0)+k)", "params.D")
        super().__init__(family.space)
        self.family = family
        self.D = float(D)
        self.radial_bound = (family.lam, family.lam * family.k)

    def params(self):
        return {"D": self.D, **self.family.constants()}

    def _cross(self, xs, ys):
        f = self.family
        xi = np.asarray(xs, dtype=np.int64)
        yi = np.asarray(ys, dtype=np.int64)
        tx, ty = f.lengths[xi], f.lengths[yi]
        T = int(min(tx.max(), ty.max()))
        px = f.paths[xi, : T + 1]
        py = f.paths[yi, : T + 1]
        src, inv = np.unique(px, return_inverse=True)
        inv = inv.reshape(px.shape)
        rows = self.space.rows(src)
        out = np.zeros((len(xi), len(yi)))
        tmin = np.minimum(tx[:, None], ty[None, :])
        for t in range(T + 1):
            dt = rows[inv[:, t]][:, py[:, t]]
            ok = (dt <= self.D) & (t <= tmin)
            out[ok] = t
        return out

    def _paired(self, xs, ys):
        f = self.family
        xi = np.asarray(xs, dtype=np.int64)
        yi = np.asarray(ys, dtype=np.int64)
        tmin = np.minimum(f.lengths[xi], f.lengths[yi])
        out = np.zeros(len(xi))
        for t in range(int(tmin.max()) + 1):
            dt = self.space.paired(f.paths[xi, t].tolist(), f.paths[yi, t].tolist())
            ok = (dt <= self.D) & (t <= tmin)
            out[ok] = t
        return out


# ---------------------------------------------------------------------------
# products from compact models


@dataclass(frozen=True)
class CompactModelEmbedding:
    """Embedding of a normed space into a bounded region of ``R^n``.

    ``ball``: ``x / (1 + |x|)`` in the space's own norm, diameter 2.
    ``square``: coordinatewise ``x_i / (1 + |x_i|)``, Euclidean model metric,
    diameter ``2*sqrt(n)``.
    """

    name: str
    space: NormedSpace

    def __post_init__(self):
        if self.name not in ("ball", "square"):
            raise ProductError(f"unknown model {self.name!r}", "params.model")
        if not isinstance(self.space, NormedSpace):
            raise ProductError("compact models need a normed space", "space")

    @property
    def diam(self) -> float:
        return 2.0 if self.name == "ball" else 2.0 * math.sqrt(self.space.dim)

    def embed(self, xs) -> np.ndarray:
        c = self.space.coords(xs)
        if self.name == "ball":
            return c / (1.0 + self.space.norms(c))[:, None]
        return c / (1.0 + np.abs(c))

    def model_distance(self, ex: np.ndarray, ey: np.ndarray, paired: bool = False) -> np.ndarray:
        diff = ex - ey if paired else ex[:, None, :] - ey[None, :, :]
        if self.name == "ball":
            return self.space.norms(diff)
        return np.sqrt(np.sum(diff * diff, axis=-1))


def halving_depth(dc: np.ndarray, diam: float) -> np.ndarray:
    """Largest ``n >= 0`` with ``dc <= 2**-n * diam``; ``inf`` where ``dc == 0``.

    Uses exact power-of-two scaling so ties land on the larger ``n``.
    """
    dc = np.asarray(dc, dtype=float)
    pos = dc > 0
    safe = np.where(pos, dc, diam)
    n = np.floor(np.log2(diam / safe)).astype(np.int64)
    n = np.clip(n, 0, NMAX)
    for _ in range(3):
        up = (n < NMAX) & (safe <= np.ldexp(diam, -(n + 1)))
        n = np.where(up, n + 1, n)
        down = (n > 0) & (safe > np.ldexp(diam, -n))
        n = np.where(down, n - 1, n)
    out = n.astype(float)
    out[~pos] = np.inf
    return out


class CompactificationProduct(ProductOracle):
    """``min{d(x0,x), d(x0,y), n(x,y)}`` with ``n`` the halving depth of ``d_c``."""

    construction = "compactification"

    def __init__(self, space: NormedSpace, model: CompactModelEmbedding | str = "ball"):
        if isinstance(model, str):
            model = CompactModelEmbedding(model, space)
        if model.space is not space:
            raise ProductError("model embeds a different space", "params.model")
        super().__init__(space)
        self.model = model

    def params(self):
        return {"model": self.model.name, "dimension": self.space.dim}

    def depth(self, xs, ys, paired: bool = False) -> np.ndarray:
        ex = self.model.embed(self.space.check(xs))
        ey = self.model.embed(self.space.check(ys))
        dc = self.model.model_distance(ex, ey, paired)
        if np.any(dc > self.model.diam * (1 + 1e-12)):
            raise ProductError("model distance exceeds the model diameter")
        return halving_depth(dc, self.model.diam)

    def _cross(self, xs, ys):
        rx = self.space.radii(xs)
        ry = self.space.radii(ys)
        return np.minimum(np.minimum(rx[:, None], ry[None, :]), self.depth(xs, ys))

    def _paired(self, xs, ys):
        rx = self.space.radii(xs)
        ry = self.space.radii(ys)
        return np.minimum(np.minimum(rx, ry), self.depth(xs, ys, paired=True))


class RestrictedProduct(ProductOracle):
    """``base`` restricted to pairs from ``subspace``.

    ``subspace`` is a :class:`MetricSpace` whose points lie in the base space,
    or a predicate on base points.
    """

    construction = "restriction"

    def __init__(self, base: ProductOracle, subspace: MetricSpace | Callable, label: str | None = None):
        from .spaces import SubSpace
        if not isinstance(subspace, MetricSpace):
            subspace = SubSpace(base.space, subspace, name=label)
        if not subspace.contains(base.space.basepoint) or subspace.basepoint != base.space.basepoint:
            raise ProductError("subset must contain the base point", "params.subspace")
        if not base.space.contains(subspace.basepoint):
            raise ProductError("subset is not inside the base space", "params.subspace")
        super().__init__(subspace)
        self.base = base
        self.label = label or subspace.name
        self.radial_bound = base.radial_bound

    def params(self):
        return {"base": self.base.descriptor(), "subspace": self.label}

    def _cross(self, xs, ys):
        return self.base._cross(xs, ys)

    def _paired(self, xs, ys):
        return self.base._paired(xs, ys)


def restrict_product(product: ProductOracle, subset) -> ProductOracle:
    return RestrictedProduct(product, subset)


# ---------------------------------------------------------------------------
# functional forms


def gromov_product(space: MetricSpace, x, y) -> float:
    return GromovProduct(space)(x, y)


def trivial_product(space: MetricSpace, x, y) -> float:
    return TrivialProduct(space)(x, y)


def busemann_product_euclidean(space: NormedSpace, x, y, D: float) -> float:
    return BusemannProduct(space, D)(x, y)


def family_product(family: QuasiGeodesicFamily, x, y, D: float) -> float:
    return FamilyProduct(family, D)(x, y)


def compactification_product(space: NormedSpace, model, x, y) -> float:
    return CompactificationProduct(space, model)(x, y)


# ---------------------------------------------------------------------------
# descriptors


CONSTRUCTIONS = ("gromov", "trivial", "busemann", "family", "compactification", "restriction")


def _params(params: dict, allowed: dict, where: str) -> dict:
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise ProductError("unknown parameter", f"{where}.{unknown[0]}")
    out = dict(allowed)
    out.update(params)
    return out


def build_product(desc: dict, space: MetricSpace, where: str = "product") -> ProductOracle:
    """Product oracle from ``{"construction": ..., "params": {...}}``."""
    if not isinstance(desc, dict):
        raise ProductError("product descriptor must be an object", where)
    bad = sorted(set(desc) - {"construction", "params"})
    if bad:
        raise ProductError("unknown key", f"{where}.{bad[0]}")
    kind = desc.get("construction")
    p = desc.get("params", {}) or {}
    if not isinstance(p, dict):
        raise ProductError("params must be an object", f"{where}.params")
    wp = f"{where}.params"
    if kind == "gromov":
        _params(p, {}, wp)
        return GromovProduct(space)
    if kind == "trivial":
        _params(p, {}, wp)
        return TrivialProduct(space)
    if kind == "busemann":
        q = _params(p, {"D": 1.0}, wp)
        try:
            return BusemannProduct(space, float(q["D"]))
        except ProductError as e:
            raise ProductError(str(e).split(": ", 1)[-1], f"{wp}.D" if "D" in str(e) else where)
    if kind == "family":
        q = _params(p, {"D": None, "E": 1.0, "C": 0.0, "theta": [1.0, 0.0]}, wp)
        if q["D"] is None:
            raise ProductError("family product needs D", f"{wp}.D")
        theta = q["theta"]
        if not (isinstance(theta, (list, tuple)) and len(theta) == 2):
            raise ProductError("theta must be [slope, intercept]", f"{wp}.theta")
        if theta[0] < 0:
            raise ProductError("theta must be non-decreasing", f"{wp}.theta")
        if q["E"] < 1 or q["C"] < 0:
            raise ProductError("need E >= 1 and C >= 0", wp)
        try:
            fam = build_graph_family(space, q["E"], q["C"], tuple(theta))
        except ProductError as e:
            raise ProductError(str(e).split(": ", 1)[-1], "space")
        try:
            return FamilyProduct(fam, float(q["D"]))
        except ProductError as e:
            raise ProductError(str(e).split(": ", 1)[-1], f"{wp}.D")
    if kind == "compactification":
        q = _params(p, {"model": "ball", "dimension": None}, wp)
        if not isinstance(space, NormedSpace):
            raise ProductError("compactification product needs a normed space", where)
        if q["dimension"] is not None and q["dimension"] != space.dim:
            raise ProductError("model dimension differs from the space", f"{wp}.dimension")
        if q["model"] not in ("ball", "square"):
            raise ProductError(f"unknown model {q['model']!r}", f"{wp}.model")
        return CompactificationProduct(space, q["model"])
    if kind == "restriction":
        q = _params(p, {"base": None, "subspace": None}, wp)
        if q["base"] is None or q["subspace"] is None:
            raise ProductError("restriction needs base and subspace", wp)
        base = build_product(q["base"], space, f"{wp}.base")
        sub = q["subspace"]
        try:
            if isinstance(sub, str):
                subspace = build_fixture(sub)
            elif isinstance(sub, dict) and "ball" in sub:
                radius = float(sub["ball"])
                subspace = _ball_subspace(space, radius)
            else:
                subspace = build_space(sub)
        except SpaceError as e:
            raise ProductError(str(e), f"{wp}.subspace")
        for pt in subspace.ball(0):
            if not space.contains(pt):
                raise ProductError("subspace is not inside the space", f"{wp}.subspace")
        return RestrictedProduct(base, subspace, label=sub if isinstance(sub, str) else None)
    raise ProductError(f"unknown construction {kind!r}", f"{where}.construction")


def _ball_subspace(space: MetricSpace, radius: float) -> MetricSpace:
    from .spaces import SubSpace

    def inside(p):
        return float(space.radii([p])[0]) <= radius + 1e-9

    sub = SubSpace(space, inside, name=f"{space.name}|ball({radius:g})")
    sub.horizon = min(space.horizon, radius)
    return sub
