"""Enumerable metric spaces with a distinguished base point.

Every space exposes the same surface: membership, a vectorised distance
oracle, radii ``d(x0, .)`` and enumeration of closed balls around the base
point.  Infinite spaces are truncated lazily: points only exist once a ball
of some radius is requested.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

BALL_TOL = 1e-9
MAX_ENUMERATION = 2_000_000

PointId = Hashable


class SpaceError(ValueError):
    """Invalid space specification or a point outside the space.

    ``path`` names the offending field of a space-spec document, if any.
    """

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class MetricSpace:
    """Base class; subclasses implement ``_cross``, ``contains`` and ``_enumerate``."""

    kind = "abstract"

    def __init__(self, name: str, basepoint: PointId, params: dict | None = None,
                 horizon: float = math.inf):
        self.name = name
        self.basepoint = basepoint
        self.params = dict(params or {})
        # radius up to which enumeration reflects the true space
        self.horizon = horizon

    # -- membership -------------------------------------------------------
    def contains(self, p: PointId) -> bool:
        raise NotImplementedError

    def check(self, points: Iterable[PointId]) -> list:
        pts = list(points)
        for p in pts:
            if not self.contains(p):
                raise SpaceError(f"point {p!r} is not in space {self.name!r}")
        return pts

    # -- distances --------------------------------------------------------
    def _cross(self, xs: list, ys: list) -> np.ndarray:
        raise NotImplementedError

    def distances(self, xs: Sequence[PointId], ys: Sequence[PointId]) -> np.ndarray:
        """Matrix ``D[i, j] = d(xs[i], ys[j])``."""
        xs = self.check(xs)
        ys = self.check(ys)
        if not xs or not ys:
            return np.zeros((len(xs), len(ys)))
        return self._cross(xs, ys)

    def distance(self, x: PointId, y: PointId) -> float:
        return float(self.distances([x], [y])[0, 0])

    def _paired(self, xs: list, ys: list) -> np.ndarray:
        return np.array([self._cross([x], [y])[0, 0] for x, y in zip(xs, ys)])

    def paired(self, xs: Sequence[PointId], ys: Sequence[PointId]) -> np.ndarray:
        """``d(xs[i], ys[i])`` for two aligned point lists."""
        xs = self.check(xs)
        ys = self.check(ys)
        if len(xs) != len(ys):
            raise SpaceError("paired distances need lists of equal length")
        if not xs:
            return np.zeros(0)
        return self._paired(xs, ys)

    def radii(self, xs: Sequence[PointId]) -> np.ndarray:
        return self.distances(xs, [self.basepoint])[:, 0]

    # -- enumeration ------------------------------------------------------
    def _enumerate(self, radius: float) -> list:
        raise NotImplementedError

    def ball(self, radius: float) -> list:
        """All points with ``d(x0, p) <= radius`` in a deterministic order."""
        if radius < 0:
            raise SpaceError(f"negative radius {radius}")
        if radius > self.horizon + BALL_TOL:
            raise SpaceError(
                f"radius {radius} exceeds enumeration horizon {self.horizon} of {self.name!r}")
        return self._enumerate(radius)

    @property
    def extent(self) -> float:
        """Default sampling radius: the horizon, or the eccentricity of a finite space."""
        return self.horizon

    def spec(self) -> dict:
        return {"kind": self.kind, "name": self.name, "params": self.params,
                "basepoint": _jsonable(self.basepoint)}

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, {self.params!r})"


def _jsonable(p):
    if isinstance(p, tuple):
        return [_jsonable(c) for c in p]
    if isinstance(p, (np.integer,)):
        return int(p)
    if isinstance(p, (np.floating,)):
        return float(p)
    return p


# ---------------------------------------------------------------------------
# the non-proper grid and its two proper subspaces


def _is_posint(v) -> bool:
    return isinstance(v, (int, np.integer)) and not isinstance(v, bool) and v >= 1


class PaperGrid(MetricSpace):
    """``{(0,0)} ∪ N^2`` with columns ``m`` and depths ``n``.

    Two points in one column are ``|n1 - n2|`` apart, otherwise ``n1 + n2``.
    The space is not proper, so enumeration is capped at ``columns``
    columns; membership is not capped.
    """

    kind = "fixture"

    def __init__(self, columns: int = 4):
        if not _is_posint(columns):
            raise SpaceError("columns must be a positive integer", "params.columns")
        super().__init__("paper-grid", (0, 0), {"columns": int(columns)})
        self.columns = int(columns)

    def contains(self, p) -> bool:
        if not isinstance(p, tuple) or len(p) != 2:
            return False
        m, n = p
        return (m == 0 and n == 0 and isinstance(m, (int, np.integer))
                and isinstance(n, (int, np.integer))) or (_is_posint(m) and _is_posint(n))

    def _cross(self, xs, ys):
        a = np.asarray(xs, dtype=np.int64)
        b = np.asarray(ys, dtype=np.int64)
        m1, n1 = a[:, 0][:, None], a[:, 1][:, None]
        m2, n2 = b[:, 0][None, :], b[:, 1][None, :]
        same = m1 == m2
        return np.where(same, np.abs(n1 - n2), n1 + n2).astype(float)

    def _paired(self, xs, ys):
        a = np.asarray(xs, dtype=np.int64)
        b = np.asarray(ys, dtype=np.int64)
        same = a[:, 0] == b[:, 0]
        return np.where(same, np.abs(a[:, 1] - b[:, 1]), a[:, 1] + b[:, 1]).astype(float)

    def _enumerate(self, radius):
        top = int(math.floor(radius + BALL_TOL))
        pts = [(0, 0)]
        pts += [(m, n) for m in range(1, self.columns + 1) for n in range(1, top + 1)]
        return pts


class PaperGridSubspace(PaperGrid):
    """Proper subspaces Y = {x0} ∪ {(m, 2^m)} and Z = {x0} ∪ {(m, 2^m n)}."""

    def __init__(self, which: str):
        if which not in ("Y", "Z"):
            raise SpaceError(f"unknown subspace {which!r}")
        MetricSpace.__init__(self, f"paper-{which}", (0, 0), {})
        self.which = which

    def contains(self, p) -> bool:
        if not PaperGrid.contains(self, p):
            return False
        m, n = p
        if m == 0:
            return True
        step = 1 << int(m)
        if self.which == "Y":
            return n == step
        return n % step == 0

    def _enumerate(self, radius):
        top = int(math.floor(radius + BALL_TOL))
        pts = [(0, 0)]
        m = 1
        while (1 << m) <= top:
            step = 1 << m
            if self.which == "Y":
                pts.append((m, step))
            else:
                pts.extend((m, step * k) for k in range(1, top // step + 1))
            m += 1
        return pts


# ---------------------------------------------------------------------------
# graphs


class GraphSpace(MetricSpace):
    """Shortest-path metric on a connected graph with positive edge weights.

    Dijkstra rows are computed on demand from query endpoints and memoised.
    """

    kind = "graph"

    def __init__(self, vertices: int, edges: Sequence[Sequence[float]], basepoint: int = 0,
                 name: str = "weighted-graph", params: dict | None = None,
                 horizon: float = math.inf):
        if not _is_posint(vertices):
            raise SpaceError("vertex count must be a positive integer", "params.vertices")
        rows, cols, wts = [], [], []
        for i, e in enumerate(edges):
            if len(e) not in (2, 3):
                raise SpaceError("edge must be [u, v] or [u, v, w]", f"params.edges[{i}]")
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) == 3 else 1.0
            for k, x in enumerate((u, v)):
                if not 0 <= x < vertices:
                    raise SpaceError(f"endpoint out of range 0..{vertices - 1}", f"params.edges[{i}][{k}]")
            if not math.isfinite(w) or w <= 0:
                raise SpaceError(f"edge weight must be positive, got {w}", f"params.edges[{i}][2]")
            if u == v:
                continue
            rows += [u, v]
            cols += [v, u]
            wts += [w, w]
        if not (isinstance(basepoint, (int, np.integer)) and 0 <= basepoint < vertices):
            raise SpaceError("basepoint must be a vertex index", "basepoint")
        super().__init__(name, int(basepoint), params if params is not None else
                         {"vertices": vertices, "edges": [list(e) for e in edges]}, horizon)
        self.n = int(vertices)
        # duplicate edges: keep the lightest
        adj = _min_duplicates(rows, cols, wts, self.n)
        self.adjacency = adj
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise SpaceError(f"graph is disconnected ({ncomp} components)", "params.edges")
        self.integral = all(float(w).is_integer() for w in wts)
        self._rows: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def contains(self, p) -> bool:
        return isinstance(p, (int, np.integer)) and not isinstance(p, bool) and 0 <= p < self.n

    @property
    def extent(self) -> float:
        return min(self.horizon, float(self.rows([self.basepoint])[0].max()))

    def rows(self, sources: Iterable[int]) -> np.ndarray:
        """Distance rows for ``sources`` (memoised)."""
        src = [int(s) for s in sources]
        with self._lock:
            missing = sorted({s for s in src if s not in self._rows})
            if missing:
                block = dijkstra(self.adjacency, directed=False, indices=missing)
                for s, row in zip(missing, np.atleast_2d(block)):
                    row.setflags(write=False)
                    self._rows[s] = row
            return np.stack([self._rows[s] for s in src]) if src else np.zeros((0, self.n))

    def _cross(self, xs, ys):
        xi = np.asarray(xs, dtype=np.int64)
        yi = np.asarray(ys, dtype=np.int64)
        ux, inv = np.unique(xi, return_inverse=True)
        out = self.rows(ux)[inv][:, yi]
        if not self.integral:
            # float path sums depend on the source; symmetrise exactly
            uy, invy = np.unique(yi, return_inverse=True)
            back = self.rows(uy)[invy][:, xi].T
            out = np.minimum(out, back)
        return out

    def _paired(self, xs, ys):
        xi = np.asarray(xs, dtype=np.int64)
        yi = np.asarray(ys, dtype=np.int64)
        ux, inv = np.unique(xi, return_inverse=True)
        out = self.rows(ux)[inv, yi]
        if not self.integral:
            uy, invy = np.unique(yi, return_inverse=True)
            out = np.minimum(out, self.rows(uy)[invy, xi])
        return out

    def _enumerate(self, radius):
        row = self.rows([self.basepoint])[0]
        return [int(v) for v in np.nonzero(row <= radius + BALL_TOL)[0]]

    def neighbors(self, v: int):
        a = self.adjacency
        lo, hi = a.indptr[v], a.indptr[v + 1]
        return list(zip(a.indices[lo:hi].tolist(), a.data[lo:hi].tolist()))


def _min_duplicates(rows, cols, wts, n):
    best: dict[tuple[int, int], float] = {}
    for u, v, w in zip(rows, cols, wts):
        k = (u, v)
        if k not in best or w < best[k]:
            best[k] = w
    if not best:
        return csr_matrix((n, n))
    r, c = zip(*best.keys())
    return csr_matrix((list(best.values()), (r, c)), shape=(n, n))


def star_graph(rays: int = 3, depth: int = 64) -> GraphSpace:
    """``rays`` unit-length paths glued at the base point, truncated at ``depth``.

    Vertex ``1 + r*depth + (k-1)`` is the point at depth ``k`` on ray ``r``.
    """
    if not _is_posint(rays):
        raise SpaceError("rays must be a positive integer", "params.rays")
    if not _is_posint(depth):
        raise SpaceError("depth must be a positive integer", "params.depth")
    edges = []
    for r in range(rays):
        prev = 0
        for k in range(1, depth + 1):
            v = 1 + r * depth + (k - 1)
            edges.append((prev, v, 1))
            prev = v
    g = GraphSpace(1 + rays * depth, edges, 0, name="star",
                   params={"rays": rays, "depth": depth}, horizon=depth)
    return g


def star_vertex(space: GraphSpace, ray: int, depth: int) -> int:
    d = space.params["depth"]
    if not (0 <= ray < space.params["rays"] and 1 <= depth <= d):
        raise SpaceError(f"no vertex at ray {ray}, depth {depth}")
    return 1 + ray * d + (depth - 1)


def rooted_tree(branching: int = 2, depth: int | None = None, vertices: int | None = None,
                shape: str = "complete", seed: int = 0) -> GraphSpace:
    """Rooted tree with root 0.

    ``shape="complete"`` lists a complete ``branching``-ary tree in BFS order,
    keeping the first ``vertices`` vertices (or all vertices down to
    ``depth``).  ``shape="random"`` attaches vertex ``i`` to a uniformly
    random earlier vertex.
    """
    if shape not in ("complete", "random"):
        raise SpaceError(f"unknown tree shape {shape!r}", "params.shape")
    if vertices is None:
        if depth is None:
            raise SpaceError("rooted-tree needs depth or vertices", "params")
        if not _is_posint(branching):
            raise SpaceError("branching must be a positive integer", "params.branching")
        vertices = sum(branching ** k for k in range(depth + 1))
    if not _is_posint(vertices):
        raise SpaceError("vertices must be a positive integer", "params.vertices")
    if shape == "complete":
        if not _is_posint(branching):
            raise SpaceError("branching must be a positive integer", "params.branching")
        edges = [((i - 1) // branching, i, 1) for i in range(1, vertices)]
    else:
        rng = np.random.default_rng(seed)
        edges = [(int(rng.integers(0, i)), i, 1) for i in range(1, vertices)]
    params = {"branching": branching, "vertices": vertices, "shape": shape}
    if shape == "random":
        params["seed"] = seed
    if depth is not None:
        params["depth"] = depth
    return GraphSpace(vertices, edges, 0, name="rooted-tree", params=params)


def grid_graph(rows: int = 10, cols: int = 10, basepoint: int = 0) -> GraphSpace:
    """4-neighbour grid; vertex ``r*cols + c``."""
    if not (_is_posint(rows) and _is_posint(cols)):
        raise SpaceError("rows and cols must be positive integers", "params")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1, 1))
            if r + 1 < rows:
                edges.append((v, v + cols, 1))
    return GraphSpace(rows * cols, edges, basepoint, name="grid-graph",
                      params={"rows": rows, "cols": cols})


# ---------------------------------------------------------------------------
# normed spaces


class NormedSpace(MetricSpace):
    """``R^dim`` with an ``l_p`` norm, base point at the origin.

    Points are coordinate tuples.  Balls are enumerated on the lattice
    ``step * Z^dim``.
    """

    kind = "normed"

    def __init__(self, dimension: int = 2, p: float = 2.0, step: float = 1.0):
        if not _is_posint(dimension):
            raise SpaceError("dimension must be a positive integer", "params.dimension")
        p = float(p)
        if not (p >= 1.0):
            raise SpaceError(f"p must be >= 1, got {p}", "params.p")
        if not (step > 0 and math.isfinite(step)):
            raise SpaceError("step must be positive", "params.step")
        super().__init__("euclidean" if p == 2.0 else f"l{p:g}", (0.0,) * dimension,
                         {"dimension": dimension, "p": p, "step": step})
        self.dim = int(dimension)
        self.p = p
        self.step = float(step)

    @property
    def busemann_valid(self) -> bool:
        # strict convexity gives unique geodesics
        return 1.0 < self.p < math.inf

    def contains(self, p) -> bool:
        return (isinstance(p, tuple) and len(p) == self.dim
                and all(isinstance(c, (int, float, np.integer, np.floating)) and math.isfinite(c)
                        for c in p))

    def norms(self, arr: np.ndarray) -> np.ndarray:
        a = np.abs(arr)
        if self.p == 2.0:
            return np.sqrt(np.sum(a * a, axis=-1))
        if self.p == 1.0:
            return np.sum(a, axis=-1)
        if math.isinf(self.p):
            return np.max(a, axis=-1)
        return np.sum(a ** self.p, axis=-1) ** (1.0 / self.p)

    def coords(self, points: Sequence[PointId]) -> np.ndarray:
        return np.asarray(points, dtype=float).reshape(len(points), self.dim)

    def _cross(self, xs, ys):
        a = self.coords(xs)
        b = self.coords(ys)
        return self.norms(a[:, None, :] - b[None, :, :])

    def _paired(self, xs, ys):
        return self.norms(self.coords(xs) - self.coords(ys))

    def radii(self, xs):
        xs = self.check(xs)
        return self.norms(self.coords(xs)) if xs else np.zeros(0)

    def _enumerate(self, radius):
        k = int(math.floor(radius / self.step + BALL_TOL))
        side = 2 * k + 1
        if side ** self.dim > MAX_ENUMERATION * 4:
            raise SpaceError(f"ball of radius {radius} is too large to enumerate at step {self.step}")
        axis = np.arange(-k, k + 1, dtype=float) * self.step
        grid = np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)
        keep = self.norms(grid) <= radius + BALL_TOL
        grid = grid[keep]
        if len(grid) > MAX_ENUMERATION:
            raise SpaceError(f"ball of radius {radius} has {len(grid)} lattice points")
        grid = grid + 0.0  # normalise -0.0
        return [tuple(float(c) for c in row) for row in grid]


class SubSpace(MetricSpace):
    """Points of ``parent`` satisfying ``predicate``, with the restricted metric."""

    def __init__(self, parent: MetricSpace, predicate: Callable[[PointId], bool], name: str | None = None):
        super().__init__(name or f"{parent.name}|sub", parent.basepoint, dict(parent.params),
                         parent.horizon)
        self.kind = parent.kind
        self.parent = parent
        self.predicate = predicate

    def contains(self, p):
        return self.parent.contains(p) and bool(self.predicate(p))

    def _cross(self, xs, ys):
        return self.parent._cross(xs, ys)

    def _paired(self, xs, ys):
        return self.parent._paired(xs, ys)

    def radii(self, xs):
        return self.parent.radii(self.check(xs))

    def _enumerate(self, radius):
        return [p for p in self.parent._enumerate(radius) if self.predicate(p)]


# ---------------------------------------------------------------------------
# sampling


STRATEGIES = ("full-ball", "annulus-shells", "seeded-random")


@dataclass(frozen=True)
class SampleSpec:
    strategy: str = "full-ball"
    r_min: float = 0.0
    r_max: float | None = None
    budget: int | None = None
    shells: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise SpaceError(f"unknown sampling strategy {self.strategy!r}", "sample.strategy")
        if self.budget is not None and self.budget <= 0:
            raise SpaceError("sample budget must be positive", "sample.budget")
        if self.strategy != "full-ball" and self.budget is None:
            raise SpaceError(f"strategy {self.strategy!r} needs a budget", "sample.budget")
        if self.r_min < 0 or (self.r_max is not None and self.r_max < self.r_min):
            raise SpaceError("need 0 <= r_min <= r_max", "sample.r_min")
        if not (0 <= self.seed < 2 ** 64):
            raise SpaceError("seed must be an unsigned 64-bit integer", "sample.seed")

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "r_min": self.r_min, "r_max": self.r_max,
                "budget": self.budget, "shells": self.shells, "seed": self.seed}


def annulus_sample(space: MetricSpace, r_in: float, r_out: float,
                   spec: SampleSpec | None = None) -> list:
    """Points with ``r_in <= d(x0, p) <= r_out`` chosen per ``spec``."""
    spec = spec or SampleSpec()
    if not (0 <= r_in <= r_out):
        raise SpaceError(f"need 0 <= r_in <= r_out, got [{r_in}, {r_out}]")
    rng = np.random.default_rng(spec.seed)
    if spec.strategy == "seeded-random" and isinstance(space, NormedSpace):
        return _continuous_annulus(space, r_in, r_out, spec.budget, rng)
    pts = space.ball(r_out)
    if not pts:
        return []
    rad = space.radii(pts)
    keep = rad >= r_in - BALL_TOL
    pts = [p for p, k in zip(pts, keep) if k]
    rad = rad[keep]
    if spec.strategy == "full-ball":
        return pts
    if spec.strategy == "seeded-random":
        if len(pts) <= spec.budget:
            return pts
        idx = np.sort(rng.choice(len(pts), size=spec.budget, replace=False))
        return [pts[i] for i in idx]
    # annulus-shells: equal-width shells, up to `budget` points from each
    nshell = spec.shells or max(1, int(math.ceil(r_out - r_in)))
    width = (r_out - r_in) / nshell if r_out > r_in else 1.0
    shell = np.minimum(((rad - r_in) / width).astype(int), nshell - 1) if r_out > r_in \
        else np.zeros(len(pts), dtype=int)
    chosen = []
    for s in range(nshell):
        idx = np.nonzero(shell == s)[0]
        if len(idx) > spec.budget:
            idx = np.sort(rng.choice(idx, size=spec.budget, replace=False))
        chosen.extend(idx.tolist())
    chosen.sort()
    return [pts[i] for i in chosen]


def _continuous_annulus(space: NormedSpace, r_in, r_out, budget, rng) -> list:
    out: list[np.ndarray] = []
    have = 0
    while have < budget:
        cand = rng.uniform(-r_out, r_out, size=(max(64, 2 * (budget - have)), space.dim))
        r = space.norms(cand)
        cand = cand[(r >= r_in) & (r <= r_out)]
        out.append(cand)
        have += len(cand)
    pts = np.concatenate(out)[:budget]
    return [tuple(float(c) for c in row) for row in pts]


def sample_points(space: MetricSpace, spec: SampleSpec) -> list:
    r_max = spec.r_max if spec.r_max is not None else space.extent
    if not math.isfinite(r_max):
        raise SpaceError("sample needs r_max on a space with unbounded horizon", "sample.r_max")
    return annulus_sample(space, spec.r_min, r_max, spec)


# ---------------------------------------------------------------------------
# construction from names and spec documents


FIXTURES = ("paper-grid", "paper-Y", "paper-Z", "star", "rooted-tree", "grid-graph",
            "euclidean", "weighted-graph")


def _take(params: dict, allowed: dict[str, Any], where: str) -> dict:
    unknown = sorted(set(params) - set(allowed))
    if unknown:
        raise SpaceError(f"unknown parameter {unknown[0]!r}", f"{where}.{unknown[0]}")
    out = dict(allowed)
    out.update(params)
    return out


def build_fixture(name: str, params: dict | None = None) -> MetricSpace:
    """Construct one of the named fixture spaces."""
    params = dict(params or {})
    w = "params"
    if name == "paper-grid":
        return PaperGrid(**_take(params, {"columns": 4}, w))
    if name == "paper-Y":
        _take(params, {}, w)
        return PaperGridSubspace("Y")
    if name == "paper-Z":
        _take(params, {}, w)
        return PaperGridSubspace("Z")
    if name == "star":
        return star_graph(**_take(params, {"rays": 3, "depth": 64}, w))
    if name == "rooted-tree":
        q = _take(params, {"branching": 2, "depth": None, "vertices": None,
                           "shape": "complete", "seed": 0}, w)
        if q["depth"] is None and q["vertices"] is None:
            q["depth"] = 6
        return rooted_tree(**q)
    if name == "grid-graph":
        return grid_graph(**_take(params, {"rows": 10, "cols": 10, "basepoint": 0}, w))
    if name == "euclidean":
        return NormedSpace(**_take(params, {"dimension": 2, "p": 2.0, "step": 1.0}, w))
    if name == "weighted-graph":
        q = _take(params, {"vertices": None, "edges": None, "basepoint": 0}, w)
        if q["vertices"] is None or q["edges"] is None:
            raise SpaceError("weighted-graph needs vertices and edges", w)
        return GraphSpace(q["vertices"], q["edges"], q["basepoint"])
    raise SpaceError(f"unknown fixture {name!r}", "name")


def build_space(doc: dict) -> MetricSpace:
    """Build a space from a space-spec document.

    ``{"kind": "fixture"|"graph"|"normed", "name": ..., "params": {...}, "basepoint": ...}``
    """
    if not isinstance(doc, dict):
        raise SpaceError("space spec must be an object")
    unknown = sorted(set(doc) - {"kind", "name", "params", "basepoint"})
    if unknown:
        raise SpaceError("unknown key", unknown[0])
    kind = doc.get("kind", "fixture")
    params = doc.get("params", {}) or {}
    if not isinstance(params, dict):
        raise SpaceError("params must be an object", "params")
    if kind == "fixture":
        if "name" not in doc:
            raise SpaceError("fixture spec needs a name", "name")
        space = build_fixture(doc["name"], params)
    elif kind == "graph":
        q = _take(params, {"vertices": None, "edges": None}, "params")
        if q["vertices"] is None or q["edges"] is None:
            raise SpaceError("graph needs vertices and edges", "params")
        space = GraphSpace(q["vertices"], q["edges"], doc.get("basepoint", 0),
                           name=doc.get("name", "weighted-graph"))
    elif kind == "normed":
        space = NormedSpace(**_take(params, {"dimension": 2, "p": 2.0, "step": 1.0}, "params"))
    else:
        raise SpaceError(f"unknown kind {kind!r}", "kind")
    bp = doc.get("basepoint")
    if bp is not None and kind != "graph":
        bp = tuple(bp) if isinstance(bp, list) else bp
        if bp != space.basepoint:
            raise SpaceError(f"basepoint {bp!r} not supported; fixture uses {space.basepoint!r}",
                             "basepoint")
    return space


def parse_point(space: MetricSpace, raw) -> PointId:
    """Decode a JSON point (list -> tuple) and check membership."""
    if isinstance(raw, list):
        raw = tuple(float(c) if isinstance(space, NormedSpace) else c for c in raw)
    if not space.contains(raw):
        raise SpaceError(f"point {raw!r} is not in space {space.name!r}")
    return raw


def close_pairs(space: MetricSpace, pts: list, limit: float):
    """Index arrays ``(i, j, d)`` over pairs ``i < j`` with ``d(p_i, p_j) <= limit``."""
    while isinstance(space, SubSpace):
        space = space.parent
    if isinstance(space, NormedSpace) and len(pts):
        tree = cKDTree(space.coords(pts))
        pr = tree.query_pairs(limit * (1 + 1e-9) + 1e-12, p=space.p, output_type="ndarray")
        if len(pr) == 0:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
        pr = pr[np.lexsort((pr[:, 1], pr[:, 0]))]
        i, j = pr[:, 0], pr[:, 1]
        c = space.coords(pts)
        d = space.norms(c[i] - c[j])
        keep = d <= limit
        return i[keep], j[keep], d[keep]
    d = space.distances(pts, pts)
    d = np.triu(d) + np.triu(d, 1).T
    i, j = np.nonzero(np.triu(d <= limit, 1))
    return i, j, d[i, j]
