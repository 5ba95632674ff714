"""Least non-decreasing majorants of sampled (key, value) constraints."""
from __future__ import annotations

import numpy as np
from numba import njit


class EnvelopeError(ValueError):
    pass


def _as_arrays(*arrs):
    out = [np.asarray(a, dtype=float).ravel() for a in arrs]
    n = len(out[0])
    if any(len(a) != n for a in out):
        raise EnvelopeError("constraint arrays differ in length")
    for a in out:
        if np.any(np.isnan(a)):
            raise EnvelopeError("NaN in constraints")
        if np.any(a < 0):
            raise EnvelopeError("constraints must be non-negative")
    return out


class MonotoneEnvelope1D:
    """Right-continuous staircase ``t -> max{v : k <= t}`` (0 below all keys).

    Only breakpoints where the running maximum strictly increases are kept,
    so keys are strictly increasing and values strictly increasing.
    """

    def __init__(self, keys=(), values=()):
        k, v = _as_arrays(keys, values)
        if len(k):
            order = np.lexsort((-v, k))
            k, v = k[order], v[order]
            run = np.maximum.accumulate(v)
            prev = np.concatenate(([-np.inf], run[:-1]))
            keep = run > prev
            # among equal keys only the first (largest value) can survive
            first = np.concatenate(([True], k[1:] != k[:-1]))
            keep &= first
            k, v = k[keep], v[keep]
            # drop non-positive leading values: they never beat the 0 floor
            pos = v > 0
            k, v = k[pos], v[pos]
        self.keys = k
        self.values = v
        self.keys.setflags(write=False)
        self.values.setflags(write=False)

    @classmethod
    def from_pairs(cls, pairs):
        pairs = list(pairs)
        if not pairs:
            return cls()
        k, v = zip(*pairs)
        return cls(k, v)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.keys, t, side="right") - 1
        vals = np.where(idx >= 0, self.values[np.clip(idx, 0, None)] if len(self.values) else 0.0, 0.0)
        return vals if vals.ndim else float(vals)

    def __len__(self):
        return len(self.keys)

    def breakpoints(self) -> list[tuple[float, float]]:
        return list(zip(self.keys.tolist(), self.values.tolist()))

    def merge(self, other: "MonotoneEnvelope1D") -> "MonotoneEnvelope1D":
        return MonotoneEnvelope1D(np.concatenate([self.keys, other.keys]),
                                  np.concatenate([self.values, other.values]))

    def map_keys(self, fn) -> "MonotoneEnvelope1D":
        return MonotoneEnvelope1D(np.maximum(fn(self.keys), 0.0), self.values)

    def map_values(self, fn) -> "MonotoneEnvelope1D":
        return MonotoneEnvelope1D(self.keys, fn(self.values))

    def __eq__(self, other):
        return (isinstance(other, MonotoneEnvelope1D) and np.array_equal(self.keys, other.keys)
                and np.array_equal(self.values, other.values))

    def to_dict(self) -> dict:
        return {"keys": self.keys.tolist(), "values": self.values.tolist()}

    def __repr__(self):
        return f"MonotoneEnvelope1D({self.breakpoints()!r})"


def envelope_1d(constraints) -> MonotoneEnvelope1D:
    return MonotoneEnvelope1D.from_pairs(constraints)


@njit(cache=True)
def _pareto_sweep(trank, v, nrank):  # pragma: no cover - jitted
    # input sorted by s asc, t asc, v desc; Fenwick tree holds prefix max over t rank
    tree = np.full(nrank + 1, -np.inf)
    keep = np.zeros(len(v), dtype=np.bool_)
    for i in range(len(v)):
        r = trank[i] + 1
        best = -np.inf
        j = r
        while j > 0:
            if tree[j] > best:
                best = tree[j]
            j -= j & (-j)
        if best >= v[i]:
            continue
        keep[i] = True
        j = r
        while j <= nrank:
            if tree[j] < v[i]:
                tree[j] = v[i]
            j += j & (-j)
    return keep


def pareto_prune(s, t, v):
    """Return ``(s, t, v)`` restricted to the non-dominated constraints.

    A constraint is dominated when another has ``s' <= s``, ``t' <= t`` and
    ``v' >= v``.  Output is sorted by ``s`` then ``t``.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    v = np.asarray(v, dtype=float)
    if len(v) == 0:
        return s, t, v
    pos = v > 0
    s, t, v = s[pos], t[pos], v[pos]
    if len(v) == 0:
        return s, t, v
    order = np.lexsort((-v, t, s))
    s, t, v = s[order], t[order], v[order]
    ut, trank = np.unique(t, return_inverse=True)
    keep = _pareto_sweep(trank.astype(np.int64), v, len(ut))
    return s[keep], t[keep], v[keep]


class MonotoneEnvelope2D:
    """``(s, t) -> max{v : s_i <= s, t_i <= t}`` over Pareto-maximal constraints."""

    def __init__(self, s=(), t=(), values=()):
        s, t, v = _as_arrays(s, t, values)
        self.s, self.t, self.values = pareto_prune(s, t, v)
        for a in (self.s, self.t, self.values):
            a.setflags(write=False)

    @classmethod
    def from_pairs(cls, constraints):
        constraints = list(constraints)
        if not constraints:
            return cls()
        keys, v = zip(*constraints)
        s, t = zip(*keys)
        return cls(s, t, v)

    def __call__(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        shape = np.broadcast(s, t).shape
        sq = np.broadcast_to(s, shape).ravel()
        tq = np.broadcast_to(t, shape).ravel()
        out = np.zeros(len(sq))
        if len(self.values):
            step = max(1, 2_000_000 // len(self.values))
            for lo in range(0, len(sq), step):
                hi = lo + step
                ok = (self.s[None, :] <= sq[lo:hi, None]) & (self.t[None, :] <= tq[lo:hi, None])
                out[lo:hi] = np.max(np.where(ok, self.values[None, :], 0.0), axis=1)
        out = out.reshape(shape)
        return out if out.ndim else float(out)

    def __len__(self):
        return len(self.values)

    def breakpoints(self) -> list[tuple[tuple[float, float], float]]:
        return [((a, b), c) for a, b, c in zip(self.s.tolist(), self.t.tolist(), self.values.tolist())]

    def merge(self, other: "MonotoneEnvelope2D") -> "MonotoneEnvelope2D":
        return MonotoneEnvelope2D(np.concatenate([self.s, other.s]), np.concatenate([self.t, other.t]),
                                  np.concatenate([self.values, other.values]))

    def __eq__(self, other):
        return (isinstance(other, MonotoneEnvelope2D) and np.array_equal(self.s, other.s)
                and np.array_equal(self.t, other.t) and np.array_equal(self.values, other.values))

    def to_dict(self) -> dict:
        return {"s": self.s.tolist(), "t": self.t.tolist(), "values": self.values.tolist()}

    def __repr__(self):
        return f"MonotoneEnvelope2D({self.breakpoints()!r})"


def envelope_2d(constraints) -> MonotoneEnvelope2D:
    return MonotoneEnvelope2D.from_pairs(constraints)
