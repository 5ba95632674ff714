"""Command line front end.

Exit codes: 0 when every checked verdict passes, 2 when an analysis finds a
violation, 1 when the tool itself fails.  A JSON report is written in every
case where the output location is usable.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import report as rep
from ._scan import set_workers
from .axioms import (BLOWUP, DIVERGING, NO_WITNESS, SATISFIED, bound_check, check_cp4,
                     default_tolerance, divergence_diagnostic, extract_cp_envelopes,
                     hyperbolicity_delta, pair_data, rho3_close_pairs, rho3_envelope)
from .boundary import composition_check, refinement_profile
from .config import COMMANDS, ConfigError, RunConfig, parse_config
from .equivalence import coarse_equivalence_check, sandwich_check
from .functions import build_function, gromov_implies_higson_check, variation_profiles
from .products import ProductOracle, RestrictedProduct, build_product
from .spaces import FIXTURES, build_fixture, build_space, sample_points

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


def _auto_bounds(product: ProductOracle, delta: float) -> list[tuple[str, str, dict]]:
    base = product
    while isinstance(base, RestrictedProduct):
        base = base.base
    c = base.construction
    if c == "gromov":
        return [("rho1", "gromov-cp1", {"delta": delta}), ("rho2", "identity", {}),
                ("rho3", "gromov-cp3", {})]
    if c == "trivial":
        return [("rho1", "identity", {}), ("rho2", "identity", {})]
    if c == "busemann":
        return [("rho1", "busemann-cp1", {}), ("rho2", "identity", {}),
                ("rho3", "busemann-cp3", {"D": base.D})]
    if c == "family":
        k = base.family.constants()
        return [("rho1", "family-cp1", {"E": k["E"], "D": base.D}),
                ("rho2", "family-cp2", {"lambda": k["lambda"], "k": k["k"]}),
                ("rho3", "family-cp3", {"lambda": k["lambda"], "E": k["E"], "k": k["k"],
                                        "theta": k["theta"]})]
    return [("rho2", "identity", {})]


def _tolerance(cfg: RunConfig, space) -> tuple[float, float]:
    atol, rtol = default_tolerance(space)
    t = cfg.tolerances
    return (atol if t.get("atol") is None else float(t["atol"]),
            rtol if t.get("rtol") is None else float(t["rtol"]))


def _setup(cfg: RunConfig):
    space = build_space(cfg.space)
    prods = [build_product(p, space) for p in cfg.products]
    return space, prods


def run_check_axioms(cfg: RunConfig):
    _, (product,) = _setup(cfg)
    space = product.space
    spec = cfg.sample_spec()
    pts = sample_points(space, spec)
    env = extract_cp_envelopes(space, product, pts, max_pair_distance=cfg.max_pair_distance,
                               triple_cap=cfg.triple_cap, seed=spec.seed)
    atol, rtol = _tolerance(cfg, space)
    checks = _auto_bounds(product, env.triple_excess)
    checks += [(b["envelope"], b["name"], b.get("constants", {})) for b in cfg.bounds]
    envs = {"rho1": env.rho1, "rho2": env.rho2, "rho3": env.rho3}
    bounds = []
    verdicts = {"cp1": SATISFIED, "cp2": SATISFIED, "cp3": SATISFIED}
    for which, name, consts in checks:
        res = bound_check(envs[which], name, consts, atol=atol, rtol=rtol)
        bounds.append({"envelope": which, **res.to_dict()})
        if not res.passed:
            verdicts["cp" + which[-1]] = BLOWUP
    diagnostics = []
    radii = cfg.ladders["radii"]
    if len(radii) >= 3 and cfg.ladders["cp3_keys"]:
        per = []
        if cfg.max_pair_distance is not None:
            r = space.radii(pts)
            for R in radii:
                sub = [p for p, keep in zip(pts, r <= R + 1e-9) if keep]
                per.append(rho3_close_pairs(space, product, sub, cfg.max_pair_distance)[0])
        else:
            data = pair_data(space, product, pts)
            for R in radii:
                sel = np.nonzero(data.radii <= R + 1e-9)[0]
                sub = np.ix_(sel, sel)
                per.append(rho3_envelope(data.radii[sel], data.products[sub], data.distances[sub]))
        for key in cfg.ladders["cp3_keys"]:
            dg = divergence_diagnostic(per, radii, tuple(key), cfg.tolerances["growth_threshold"])
            diagnostics.append(dg.to_dict())
            if dg.verdict == DIVERGING:
                verdicts["cp3"] = BLOWUP
    cp4 = None
    if cfg.cp4.get("enabled", True):
        cap = cfg.cp4.get("cap")
        if cap is None:
            cap = float(max(space.radii(pts))) / 2 if pts else 0.0
        cp4 = check_cp4(space, product, cfg.ladders["R"], float(cap), sample=pts)
        verdicts["cp4"] = cp4.verdict
    result = {"envelopes": env.to_dict(), "bounds": bounds, "cp3_divergence": diagnostics,
              "cp4": cp4.to_dict() if cp4 else None, "verdicts": verdicts,
              "delta_sample": env.triple_excess}
    bad = any(v in (BLOWUP, NO_WITNESS) for v in verdicts.values())
    csvs = {
        "rho1": rep.csv_text(["key", "value"], rep.envelope_rows_1d(env.rho1)),
        "rho2": rep.csv_text(["key", "value"], rep.envelope_rows_1d(env.rho2)),
        "rho3": rep.csv_text(["s", "t", "value"], rep.envelope_rows_2d(env.rho3)),
    }
    if cp4:
        csvs["cp4"] = rep.csv_text(["R", "S", "verdict"], [(r.R, r.S, r.verdict) for r in cp4.rows])
    return result, bad, csvs, {}


def run_delta(cfg: RunConfig):
    _, (product,) = _setup(cfg)
    space = product.space
    spec = cfg.sample_spec()
    pts = sample_points(space, spec)
    res = hyperbolicity_delta(space, pts, triple_cap=cfg.triple_cap, seed=spec.seed)
    result = {**res.to_dict(), "points": len(pts)}
    return result, False, {"delta": rep.csv_text(["delta", "points"], [(res.delta, len(pts))])}, {}


def run_compare(cfg: RunConfig):
    _, (p, q) = _setup(cfg)
    space = p.space
    spec = cfg.sample_spec()
    pts = sample_points(space, spec)
    atol, rtol = _tolerance(cfg, space)
    radii = cfg.ladders["radii"] or None
    cmp = coarse_equivalence_check(p, q, pts, radii, cfg.ladders["keys"],
                                   cfg.tolerances["growth_threshold"])
    result = cmp.to_dict()
    bad = False
    if cfg.sandwich:
        sw = sandwich_check(p, q, pts, shift=cfg.sandwich.get("shift"), scale=cfg.sandwich.get("scale"),
                            atol=atol, rtol=rtol)
        result["sandwich"] = sw.to_dict()
        bad = not sw.passed
    csvs = {
        "forward": rep.csv_text(["key", "value"], rep.envelope_rows_1d(cmp.forward.envelope)),
        "backward": rep.csv_text(["key", "value"], rep.envelope_rows_1d(cmp.backward.envelope)),
    }
    return result, bad, csvs, {}


def run_boundary(cfg: RunConfig):
    _, (product,) = _setup(cfg)
    space = product.space
    spec = cfg.sample_spec()
    prof = refinement_profile(space, product, cfg.ladders["radii"], cfg.ladders["n"], spec)
    result = prof.to_dict()
    result["chains"] = {f"{n:g}": prof.chains[n] for n in prof.ns}
    bad = False
    if cfg.composition:
        pts = sample_points(space, spec)
        comps = []
        for n in prof.ns:
            c = composition_check(space, product, pts, n, triple_cap=cfg.triple_cap, seed=spec.seed)
            comps.append(c.to_dict())
            bad |= not c.holds
        result["composition"] = comps
    rows = []
    for n in prof.ns:
        for i, R in enumerate(prof.radii):
            for c in prof.cells[(i, n)]:
                rows.append((n, R, rep.plain(c.representative), c.size))
    csvs = {"cells": rep.csv_text(["n", "radius", "representative", "size"], rows)}
    dots = {"refinement": rep.profile_dot(prof)} if cfg.output.get("dot") else {}
    return result, bad, csvs, dots


def run_function(cfg: RunConfig):
    _, (product,) = _setup(cfg)
    space = product.space
    spec = cfg.sample_spec()
    pts = sample_points(space, spec)
    f = build_function(cfg.function, space)
    lad = cfg.ladders
    m = product.matrix(pts)
    prof = variation_profiles(f, space, product, pts, lad["Q"], lad["higson_R"], lad["B"], matrix=m)
    d = space.distances(pts, pts)
    d = np.triu(d) + np.triu(d, 1).T
    i, j = np.nonzero(np.triu(d <= max(lad["higson_R"])))
    rho3 = rho3_envelope(space.radii(pts), m, d, i, j)
    rows = gromov_implies_higson_check(f, space, product, rho3, lad["eps"], lad["higson_R"], pts,
                                       lad["Q"], matrix=m)
    result = {"profile": prof.to_dict(), "coupling": [r.to_dict() for r in rows],
              "rho3": rho3.to_dict(), "points": len(pts)}
    bad = any(r.verdict == "fail" for r in rows)
    csvs = {
        "gromov": rep.csv_text(["Q", "value", "pair"], [(q, v, w) for q, v, w in
                                                         zip(prof.Q, prof.gromov, prof.gromov_witness)]),
        "higson": rep.csv_text(["R", "B", "value", "pair"], [
            (R, B, prof.higson[a, b], prof.higson_witness.get((a, b)))
            for a, R in enumerate(prof.R) for b, B in enumerate(prof.B)]),
    }
    return result, bad, csvs, {}


def run_fixtures(cfg: RunConfig):
    out = []
    for name in FIXTURES:
        if name == "weighted-graph":
            out.append({"name": name, "kind": "graph", "params": {"vertices": "int", "edges": "[[u, v, w], ...]"}})
            continue
        s = build_fixture(name)
        out.append({"name": name, "kind": s.kind, "params": s.params,
                    "basepoint": rep.plain(s.basepoint)})
    return {"fixtures": out}, False, {}, {}


RUNNERS = {"check-axioms": run_check_axioms, "delta": run_delta, "compare": run_compare,
           "boundary-profile": run_boundary, "function-test": run_function, "fixtures": run_fixtures}


def run(cfg: RunConfig):
    """Dispatch ``cfg``; returns ``(exit code, result, csv tables, dot graphs)``."""
    result, bad, csvs, dots = RUNNERS[cfg.command](cfg)
    return (EXIT_VIOLATION if bad else EXIT_OK), result, csvs, dots


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coarsekit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        if name == "fixtures":
            sp.add_argument("action", choices=["list"])
            sp.add_argument("--config", type=Path)
        else:
            sp.add_argument("--config", type=Path, required=True)
        sp.add_argument("--out", type=Path, default=Path("."))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--csv", action="store_true")
        sp.add_argument("--dot", action="store_true")
        sp.add_argument("--overwrite", action="store_true")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    out = args.out
    report_path = out / f"{args.command}.json"
    if report_path.exists() and not args.overwrite:
        print(f"error: {report_path} exists; pass --overwrite to replace it", file=sys.stderr)
        return EXIT_ERROR
    config_doc = None
    try:
        if args.workers < 1:
            raise ConfigError("must be >= 1", "--workers")
        set_workers(args.workers)
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("must be an unsigned 64-bit integer", "--seed")
        if args.config is not None:
            try:
                text = args.config.read_text()
            except OSError as e:
                raise ConfigError(f"cannot read config ({e.strerror})", "--config")
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigError(f"malformed JSON ({e.msg} at line {e.lineno})", "--config")
        else:
            raw = {}
        if isinstance(raw, dict):
            raw.setdefault("command", args.command)
            if raw["command"] != args.command:
                raise ConfigError(f"config is for {raw['command']!r}, not {args.command!r}", "command")
            if args.seed is not None:
                raw["seed"] = args.seed
            if args.dot:
                raw.setdefault("output", {})["dot"] = True
            if args.csv:
                raw.setdefault("output", {})["csv"] = True
        cfg = parse_config(json.dumps(raw))
        config_doc = cfg.to_dict()
        code, result, csvs, dots = run(cfg)
        status = "pass" if code == EXIT_OK else "violation"
        doc = rep.build_report(args.command, config_doc, status, code, result)
    except (ValueError, KeyError, OSError, MemoryError) as e:
        code = EXIT_ERROR
        csvs, dots = {}, {}
        doc = rep.build_report(args.command, config_doc, "error", code, None, f"{type(e).__name__}: {e}")
    text = rep.dumps(doc)
    try:
        rep.write_new(report_path, text, args.overwrite)
        if args.csv or (config_doc and config_doc["output"].get("csv")):
            for name, body in csvs.items():
                rep.write_new(out / f"{args.command}-{name}.csv", body, args.overwrite)
        for name, body in dots.items():
            rep.write_new(out / f"{args.command}-{name}.dot", body, args.overwrite)
    except FileExistsError as e:
        print(f"error: {e.filename} exists; pass --overwrite to replace it", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"error: cannot write report: {e}", file=sys.stderr)
        return EXIT_ERROR
    if args.command == "fixtures" and code == EXIT_OK:
        print(json.dumps(rep.plain(doc["result"]), indent=2, sort_keys=True))
    elif doc["error"]:
        print(f"error: {doc['error']}", file=sys.stderr)
    else:
        print(f"{args.command}: {doc['status']} ({report_path})")
    return code


if __name__ == "__main__":
    sys.exit(main())
