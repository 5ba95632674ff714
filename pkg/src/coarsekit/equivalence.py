"""Comparing two products on one space: the preorder, coarse equivalence, sandwiches."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .axioms import BOUNDED, DIVERGING, INCONCLUSIVE, Diagnostic, divergence_diagnostic
from .envelopes import MonotoneEnvelope1D
from .products import ProductOracle

DEFAULT_KEYS = (1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
HOLDS = "holds-on-sample"
FAILS = "fails-on-sample"


class ComparisonError(ValueError):
    pass


def _same_space(p: ProductOracle, q: ProductOracle) -> None:
    if p.space is q.space:
        return
    if p.space.spec() != q.space.spec():
        raise ComparisonError(
            f"products live on different spaces ({p.space.name!r} vs {q.space.name!r})")


def _upper(m: np.ndarray, sel: np.ndarray) -> np.ndarray:
    sub = m[np.ix_(sel, sel)]
    iu = np.triu_indices(len(sub))
    return sub[iu]


@dataclass
class DirectionReport:
    """Evidence for ``P <= P'``: ``P`` is bounded wherever ``P'`` is."""

    verdict: str
    envelope: MonotoneEnvelope1D
    envelopes: list[MonotoneEnvelope1D]
    radii: list[float]
    diagnostics: list[Diagnostic]
    witnesses: list[dict]

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_dict(self):
        return {"verdict": self.verdict, "envelope": self.envelope.to_dict(), "radii": self.radii,
                "diagnostics": [d.to_dict() for d in self.diagnostics],
                "witnesses": self.witnesses}


def default_radii(radii: np.ndarray) -> list[float]:
    top = float(radii.max()) if len(radii) else 0.0
    return [top / 4, top / 2, top]


def preceq_check(p: ProductOracle, q: ProductOracle, sample: Sequence, radii: Sequence[float] | None = None,
                 keys: Sequence[float] = DEFAULT_KEYS, growth_threshold: float = 1.0, *,
                 atol: float = 1e-9, rtol: float = 1e-7, _mats=None) -> DirectionReport:
    """Check ``p`` is bounded on pairs where ``q`` is bounded.

    For each truncation radius the envelope ``key (x|y)_q -> value (x|y)_p`` is
    the table ``R -> S_R``; the relation holds on the sample when every
    ladder key reads a bounded value across radii.
    """
    _same_space(p, q)
    pts = list(sample)
    r = p.space.radii(pts)
    if _mats is None:
        mp, mq = p.matrix(pts), q.matrix(pts)
    else:
        mp, mq = _mats
    radii = list(radii) if radii is not None else default_radii(r)
    envs = []
    for R in radii:
        sel = np.nonzero(r <= R + 1e-9)[0]
        envs.append(MonotoneEnvelope1D(_upper(mq, sel), _upper(mp, sel)))
    diags = [divergence_diagnostic(envs, radii, k, growth_threshold, atol=atol, rtol=rtol) for k in keys]
    verdicts = {d.verdict for d in diags}
    if verdicts == {BOUNDED}:
        verdict = HOLDS
    elif DIVERGING in verdicts:
        verdict = FAILS
    else:
        verdict = INCONCLUSIVE
    witnesses = []
    for k in keys:
        mask = mq <= k
        if not mask.any():
            witnesses.append({"key": float(k), "value": 0.0, "pair": None})
            continue
        vals = np.where(mask, mp, -np.inf)
        i, j = divmod(int(np.argmax(vals)), len(pts))
        witnesses.append({"key": float(k), "value": float(mp[i, j]), "pair": [pts[i], pts[j]],
                          "other": float(mq[i, j])})
    return DirectionReport(verdict, envs[-1], envs, [float(x) for x in radii], diags, witnesses)


def lower_trend(mp: np.ndarray, mq: np.ndarray, keys: Sequence[float]) -> dict:
    """``s -> min{(x|y)' : (x|y) >= s}`` at ladder keys, with a growth label.

    This is sample evidence for a lower reparametrisation tending to
    infinity; it cannot certify the limit.
    """
    vals = []
    for s in keys:
        mask = mp >= s
        vals.append(float(mq[mask].min()) if mask.any() else None)
    seen = [v for v in vals if v is not None]
    growing = len(seen) >= 2 and all(b > a for a, b in zip(seen, seen[1:]))
    return {"keys": [float(k) for k in keys], "values": vals,
            "trend": "increasing" if growing else "not-increasing", "certified": False}


@dataclass
class ComparisonReport:
    forward: DirectionReport
    backward: DirectionReport
    rho_plus: MonotoneEnvelope1D
    rho_minus: dict
    descriptors: tuple[dict, dict] = field(default=({}, {}))

    @property
    def equivalent(self) -> bool:
        return self.forward.holds and self.backward.holds

    @property
    def verdict(self) -> str:
        if self.equivalent:
            return "coarsely equivalent on sample"
        if FAILS in (self.forward.verdict, self.backward.verdict):
            return "not coarsely equivalent"
        return INCONCLUSIVE

    def to_dict(self):
        return {"verdict": self.verdict, "equivalent": self.equivalent,
                "P_preceq_Q": self.forward.to_dict(), "Q_preceq_P": self.backward.to_dict(),
                "rho_plus": self.rho_plus.to_dict(), "rho_minus": self.rho_minus,
                "products": list(self.descriptors)}


def coarse_equivalence_check(p: ProductOracle, q: ProductOracle, sample: Sequence,
                             radii: Sequence[float] | None = None, keys: Sequence[float] = DEFAULT_KEYS,
                             growth_threshold: float = 1.0, **tol) -> ComparisonReport:
    _same_space(p, q)
    pts = list(sample)
    mp, mq = p.matrix(pts), q.matrix(pts)
    fwd = preceq_check(p, q, pts, radii, keys, growth_threshold, _mats=(mp, mq), **tol)
    bwd = preceq_check(q, p, pts, radii, keys, growth_threshold, _mats=(mq, mp), **tol)
    return ComparisonReport(fwd, bwd, bwd.envelope, lower_trend(mp, mq, keys),
                            (p.descriptor(), q.descriptor()))


@dataclass
class SandwichResult:
    passed: bool
    mode: str
    worst_pair: list | None
    worst_excess: float
    pairs: int

    def to_dict(self):
        return {"passed": self.passed, "mode": self.mode, "worst_pair": self.worst_pair,
                "worst_excess": self.worst_excess, "pairs": self.pairs}


def sandwich_check(low: ProductOracle, p: ProductOracle, sample: Sequence, *, shift: float | None = None,
                   scale: float | None = None, atol: float = 0.0, rtol: float = 0.0) -> SandwichResult:
    """Additive mode (``shift``): ``low <= p <= low + shift``.
    Multiplicative mode (``scale``): ``p <= scale * low``.
    """
    if (shift is None) == (scale is None):
        raise ComparisonError("give exactly one of shift (additive) or scale (multiplicative)")
    if shift is not None and not (np.isfinite(shift) and shift >= 0):
        raise ComparisonError("additive sandwich needs a finite shift >= 0")
    if scale is not None and not (np.isfinite(scale) and scale >= 1):
        raise ComparisonError("multiplicative sandwich needs a finite scale >= 1")
    _same_space(low, p)
    pts = list(sample)
    ml, mp = low.matrix(pts), p.matrix(pts)
    if shift is not None:
        upper = ml + shift
        ex = np.maximum(ml - mp - (atol + rtol * np.abs(ml)),
                        mp - upper - (atol + rtol * np.abs(upper)))
        raw = np.maximum(ml - mp, mp - upper)
        mode = "additive"
    else:
        upper = scale * ml
        ex = mp - upper - (atol + rtol * np.abs(upper))
        raw = mp - upper
        mode = "multiplicative"
    n = len(pts)
    if n == 0:
        return SandwichResult(True, mode, None, 0.0, 0)
    i, j = divmod(int(np.argmax(raw)), n)
    return SandwichResult(bool(np.all(ex <= 0)), mode, [pts[i], pts[j]], float(raw[i, j]),
                          n * (n + 1) // 2)
