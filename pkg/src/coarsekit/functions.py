"""Oscillation profiles of bounded functions against a product and a metric."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ._scan import map_blocks, row_blocks
from .envelopes import MonotoneEnvelope2D
from .products import ProductOracle
from .spaces import MetricSpace, NormedSpace, close_pairs


class FunctionError(ValueError):
    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass
class SampledFunction:
    """``f`` evaluated on lists of points; ``bound`` caps ``|f|`` on samples."""

    name: str
    fn: Callable[[list], np.ndarray]
    bound: float = math.inf
    params: dict | None = None

    def __call__(self, pts: Sequence) -> np.ndarray:
        vals = np.asarray(self.fn(list(pts)))
        if np.any(~np.isfinite(vals)) or np.any(np.abs(vals) > self.bound * (1 + 1e-12)):
            raise FunctionError(f"function {self.name!r} exceeds its bound {self.bound:g} on the sample")
        return vals

    def spec(self) -> dict:
        return {"builtin": self.name, "params": self.params or {}}


def _coords(space: MetricSpace, pts) -> np.ndarray:
    if not isinstance(space, NormedSpace):
        raise FunctionError("coordinate functions need a normed space", "function.builtin")
    return space.coords(pts)


def builtin_function(name: str, space: MetricSpace, params: dict | None = None) -> SampledFunction:
    """Named bounded functions.

    ``constant(c)``, ``ball-coordinate(i)`` (``x_i / (1 + |x|)``),
    ``square-coordinate(i)`` (``x_i / (1 + |x_i|)``), ``radial``
    (``r / (1 + r)``), ``ball-complex`` (``(x_0 + i x_1) / (1 + |x|)``),
    ``angular(k)`` (``exp(i k angle) * r / (1 + r)``).
    """
    p = dict(params or {})
    allowed = {"constant": {"c"}, "ball-coordinate": {"i"}, "square-coordinate": {"i"}, "radial": set(),
               "ball-complex": set(), "angular": {"k"}}
    if name not in allowed:
        raise FunctionError(f"unknown builtin {name!r}", "function.builtin")
    extra = sorted(set(p) - allowed[name])
    if extra:
        raise FunctionError("unknown parameter", f"function.params.{extra[0]}")
    if name == "constant":
        c = float(p.get("c", 0.0))
        return SampledFunction(name, lambda pts: np.full(len(pts), c), abs(c), p)
    if name == "radial":
        def radial(pts):
            r = space.radii(pts)
            return r / (1.0 + r)
        return SampledFunction(name, radial, 1.0, p)
    i = int(p.get("i", 0))
    if name in ("ball-coordinate", "square-coordinate"):
        if not isinstance(space, NormedSpace):
            raise FunctionError("coordinate functions need a normed space", "function.builtin")
        if not 0 <= i < space.dim:
            raise FunctionError(f"coordinate index out of range 0..{space.dim - 1}", "function.params.i")
    if name == "ball-coordinate":
        def ball(pts):
            c = _coords(space, pts)
            return c[:, i] / (1.0 + space.norms(c))
        return SampledFunction(name, ball, 1.0, p)
    if name == "square-coordinate":
        def square(pts):
            c = _coords(space, pts)[:, i]
            return c / (1.0 + np.abs(c))
        return SampledFunction(name, square, 1.0, p)
    if not isinstance(space, NormedSpace) or space.dim < 2:
        raise FunctionError(f"{name} needs a normed space of dimension >= 2", "function.builtin")
    if name == "ball-complex":
        def bcx(pts):
            c = _coords(space, pts)
            return (c[:, 0] + 1j * c[:, 1]) / (1.0 + space.norms(c))
        return SampledFunction(name, bcx, 1.0, p)
    k = int(p.get("k", 1))

    def angular(pts):
        c = _coords(space, pts)
        r = space.norms(c)
        ang = np.arctan2(c[:, 1], c[:, 0])
        return np.exp(1j * k * ang) * r / (1.0 + r)
    return SampledFunction(name, angular, 1.0, p)


def table_function(path: str | Path, space: MetricSpace, bound: float = math.inf) -> SampledFunction:
    """Tabulated values.

    JSON: a list of ``[point, value]`` with ``value`` real or ``[re, im]``.
    CSV: point coordinates in leading columns, value in the last column.
    """
    path = Path(path)
    if not path.exists():
        raise FunctionError(f"table {str(path)!r} not found", "function.table")
    table = {}
    if path.suffix == ".json":
        rows = json.loads(path.read_text())
        for n, row in enumerate(rows):
            if not (isinstance(row, list) and len(row) == 2):
                raise FunctionError("entry must be [point, value]", f"function.table[{n}]")
            pt, v = row
            pt = _point_key(pt, space)
            table[pt] = complex(v[0], v[1]) if isinstance(v, list) else float(v)
    else:
        with path.open(newline="") as fh:
            for n, row in enumerate(csv.reader(fh)):
                if not row or row[0].startswith("#"):
                    continue
                try:
                    nums = [float(c) for c in row]
                except ValueError:
                    if n == 0:
                        continue  # header
                    raise FunctionError("non-numeric entry", f"function.table line {n + 1}")
                pt = _point_key(nums[:-1] if len(nums) > 2 else nums[0], space)
                table[pt] = nums[-1]

    def lookup(pts):
        try:
            return np.array([table[_point_key(p, space)] for p in pts])
        except KeyError as e:
            raise FunctionError(f"point {e.args[0]!r} missing from table", "function.table")
    return SampledFunction(f"table:{path.name}", lookup, bound, {"table": str(path)})


def _point_key(pt, space):
    if isinstance(space, NormedSpace):
        return tuple(float(c) for c in (pt if isinstance(pt, (list, tuple)) else [pt]))
    if isinstance(pt, list):
        return tuple(int(c) for c in pt)
    if isinstance(pt, float) and pt.is_integer():
        return int(pt)
    return pt


def build_function(doc: dict, space: MetricSpace) -> SampledFunction:
    if not isinstance(doc, dict):
        raise FunctionError("function spec must be an object", "function")
    bad = sorted(set(doc) - {"builtin", "params", "table", "bound"})
    if bad:
        raise FunctionError("unknown key", f"function.{bad[0]}")
    if ("builtin" in doc) == ("table" in doc):
        raise FunctionError("give exactly one of builtin or table", "function")
    if "table" in doc:
        return table_function(doc["table"], space, float(doc.get("bound", math.inf)))
    f = builtin_function(doc["builtin"], space, doc.get("params"))
    if "bound" in doc:
        f.bound = float(doc["bound"])
    return f


# ---------------------------------------------------------------------------
# profiles


@dataclass
class VariationProfile:
    Q: list[float]
    gromov: list[float]
    gromov_witness: list
    R: list[float]
    B: list[float]
    higson: np.ndarray  # shape (len(R), len(B))
    higson_witness: dict

    def V_g(self, Q: float) -> float:
        return self.gromov[self.Q.index(float(Q))]

    def V_h(self, R: float, B: float) -> float:
        return float(self.higson[self.R.index(float(R)), self.B.index(float(B))])

    def to_dict(self):
        return {"gromov": [{"Q": q, "value": v, "pair": w} for q, v, w in
                           zip(self.Q, self.gromov, self.gromov_witness)],
                "higson": [{"R": r, "B": b, "value": float(self.higson[i, j]),
                            "pair": self.higson_witness.get((i, j))}
                           for i, r in enumerate(self.R) for j, b in enumerate(self.B)]}


def _plain(p):
    if isinstance(p, tuple):
        return [float(c) if isinstance(c, (float, np.floating)) else c for c in p]
    return p


def gromov_variation(vals: np.ndarray, product: ProductOracle, pts: list, Qs: Sequence[float],
                     matrix: np.ndarray | None = None):
    """``Q -> max{|f(x) - f(y)| : (x|y) >= Q}`` with attaining pairs.

    ``matrix`` is an optional precomputed product matrix over ``pts``.
    """
    n = len(pts)
    Qs = [float(q) for q in Qs]

    def block(b):
        lo, hi = b
        m = matrix[lo:hi] if matrix is not None else product.cross(pts[lo:hi], pts)
        diff = np.abs(vals[lo:hi, None] - vals[None, :])
        out = []
        for q in Qs:
            masked = np.where(m >= q, diff, -1.0)
            k = int(np.argmax(masked))
            out.append((float(masked.flat[k]), lo + k // n, k % n))
        return out

    size = max(1, 2_000_000 // max(1, n))
    parts = map_blocks(block, row_blocks(n, size))
    values, witnesses = [], []
    for qi in range(len(Qs)):
        best = (-1.0, None, None)
        for part in parts:
            if part[qi][0] > best[0]:
                best = part[qi]
        if best[0] < 0:
            values.append(0.0)
            witnesses.append(None)
        else:
            values.append(best[0])
            witnesses.append([_plain(pts[best[1]]), _plain(pts[best[2]])])
    return values, witnesses


def higson_variation(vals: np.ndarray, space: MetricSpace, pts: list, Rs: Sequence[float],
                     Bs: Sequence[float], pairs=None):
    """``(R, B) -> max{|f(x) - f(y)| : d(x,y) <= R, d(x0,x) > B, d(x0,y) > B}``."""
    Rs = [float(r) for r in Rs]
    Bs = [float(b) for b in Bs]
    if pairs is None:
        pairs = close_pairs(space, pts, max(Rs))
    i, j, d = pairs
    r = space.radii(pts) if pts else np.zeros(0)
    inner = np.minimum(r[i], r[j])
    diff = np.abs(vals[i] - vals[j])
    out = np.zeros((len(Rs), len(Bs)))
    wit = {}
    for a, R in enumerate(Rs):
        for b, B in enumerate(Bs):
            mask = (d <= R) & (inner > B)
            if mask.any():
                sel = np.nonzero(mask)[0]
                k = sel[int(np.argmax(diff[sel]))]
                out[a, b] = diff[k]
                wit[(a, b)] = [_plain(pts[i[k]]), _plain(pts[j[k]])]
    return out, wit


def variation_profiles(f: SampledFunction, space: MetricSpace, product: ProductOracle, sample: Sequence,
                       Qs: Sequence[float], Rs: Sequence[float], Bs: Sequence[float],
                       matrix: np.ndarray | None = None) -> VariationProfile:
    if not Qs or not Rs or not Bs:
        raise FunctionError("ladders must be non-empty")
    pts = list(sample)
    vals = f(pts)
    gv, gw = gromov_variation(vals, product, pts, Qs, matrix)
    hv, hw = higson_variation(vals, space, pts, Rs, Bs)
    return VariationProfile([float(q) for q in Qs], gv, gw, [float(r) for r in Rs],
                            [float(b) for b in Bs], hv, hw)


@dataclass
class CouplingRow:
    eps: float
    Q: float | None
    R: float | None
    B: float | None
    V_g: float | None
    V_h: float | None
    verdict: str

    def to_dict(self):
        return dict(self.__dict__)


NOT_GROMOV = "not-Gromov-at-eps"


def gromov_implies_higson_check(f: SampledFunction, space: MetricSpace, product: ProductOracle,
                                rho3: MonotoneEnvelope2D, eps_ladder: Sequence[float],
                                R_ladder: Sequence[float], sample: Sequence,
                                Q_ladder: Sequence[float] = (1, 2, 5, 10, 20, 50),
                                matrix: np.ndarray | None = None) -> list[CouplingRow]:
    """For each ``eps`` take the least ladder ``Q`` with ``V_g(Q) < eps`` and test
    ``V_h(R, rho3(Q, R)) < eps`` for each ``R``.
    """
    pts = list(sample)
    vals = f(pts)
    Qs = sorted(float(q) for q in Q_ladder)
    gv, _ = gromov_variation(vals, product, pts, Qs, matrix)
    pairs = close_pairs(space, pts, max(R_ladder))
    rows = []
    for eps in eps_ladder:
        q = next((Q for Q, v in zip(Qs, gv) if v < eps), None)
        if q is None:
            rows.append(CouplingRow(float(eps), None, None, None, float(min(gv)), None, NOT_GROMOV))
            continue
        vg = gv[Qs.index(q)]
        for R in R_ladder:
            B = float(rho3(q, float(R)))
            hv, _ = higson_variation(vals, space, pts, [R], [B], pairs)
            vh = float(hv[0, 0])
            rows.append(CouplingRow(float(eps), q, float(R), B, vg, vh, "pass" if vh < eps else "fail"))
    return rows
