"""Run configuration documents for the command line front end."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any

from .functions import FunctionError, build_function
from .products import ProductError, build_product
from .spaces import SampleSpec, SpaceError, build_space

COMMANDS = ("check-axioms", "delta", "compare", "boundary-profile", "function-test", "fixtures")


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


DEFAULT_LADDERS = {
    "R": [1, 5, 10],
    "keys": [1, 2, 5, 10, 20, 50],
    "cp3_keys": [],
    "radii": [],
    "n": [1, 2],
    "Q": [1, 2, 5, 10, 20, 50],
    "eps": [0.3, 0.2, 0.1],
    "higson_R": [1, 5],
    "B": [0, 10, 50],
}

DEFAULTS: dict[str, Any] = {
    "command": None,
    "space": None,
    "product": None,
    "products": None,
    "function": None,
    "sample": {"strategy": "full-ball", "r_min": 0.0, "r_max": None, "budget": None, "shells": None,
               "seed": None},
    "ladders": DEFAULT_LADDERS,
    "cp4": {"cap": None, "enabled": True},
    "bounds": [],
    "sandwich": None,
    "composition": False,
    "tolerances": {"atol": None, "rtol": None, "growth_threshold": 1.0},
    "triple_cap": 2_000_000,
    "max_pair_distance": None,
    "seed": 0,
    "output": {"csv": False, "dot": False},
}


def _merge(defaults: dict, doc: dict, path: str) -> dict:
    if not isinstance(doc, dict):
        raise ConfigError("expected an object", path or "<root>")
    out = copy.deepcopy(defaults)
    for k, v in doc.items():
        where = f"{path}.{k}" if path else k
        if k not in defaults:
            raise ConfigError("unknown key", where)
        if isinstance(defaults[k], dict) and k not in ("space",) and v is not None:
            out[k] = _merge(defaults[k], v, where)
        else:
            out[k] = v
    return out


def _numbers(v, where, positive=False, increasing=False) -> list[float]:
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigError("expected a list of numbers", where)
    if positive and any(x < 0 for x in v):
        raise ConfigError("values must be non-negative", where)
    if increasing and any(b <= a for a, b in zip(v, v[1:])):
        raise ConfigError("values must be strictly increasing", where)
    return [float(x) for x in v]


@dataclass
class RunConfig:
    command: str
    space: dict
    products: list[dict]
    function: dict | None
    sample: dict
    ladders: dict
    cp4: dict
    bounds: list
    sandwich: dict | None
    composition: bool
    tolerances: dict
    triple_cap: int
    max_pair_distance: float | None
    seed: int
    output: dict = field(default_factory=dict)

    def sample_spec(self) -> SampleSpec:
        s = self.sample
        return SampleSpec(s["strategy"], float(s["r_min"]), s["r_max"], s["budget"], s["shells"],
                          self.seed if s["seed"] is None else int(s["seed"]))

    def with_seed(self, seed: int) -> "RunConfig":
        c = copy.deepcopy(self)
        c.seed = int(seed)
        c.sample["seed"] = None
        return c

    def to_dict(self) -> dict:
        out = {"command": self.command, "space": self.space, "sample": self.sample,
               "ladders": self.ladders, "cp4": self.cp4, "bounds": self.bounds, "sandwich": self.sandwich,
               "composition": self.composition, "tolerances": self.tolerances,
               "triple_cap": self.triple_cap, "max_pair_distance": self.max_pair_distance,
               "seed": self.seed, "output": self.output, "function": self.function}
        if len(self.products) == 1:
            out["product"] = self.products[0]
        else:
            out["products"] = self.products
        return out


def parse_config(text: str) -> RunConfig:
    """Validate a JSON config and fill defaults.

    Space, product and function specs are built once here so that invalid
    parameters are reported with their field path before any work starts.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON ({e.msg} at line {e.lineno})")
    c = _merge(DEFAULTS, doc, "")
    cmd = c["command"]
    if cmd not in COMMANDS:
        raise ConfigError(f"expected one of {list(COMMANDS)}", "command")
    if not isinstance(c["seed"], int) or isinstance(c["seed"], bool) or not 0 <= c["seed"] < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer", "seed")
    lad = c["ladders"]
    for k in ("R", "keys", "radii", "n", "Q", "eps", "higson_R", "B"):
        lad[k] = _numbers(lad[k], f"ladders.{k}", positive=True,
                          increasing=k in ("radii", "n"))
    if any(n < 1 for n in lad["n"]):
        raise ConfigError("n must be >= 1", "ladders.n")
    if not isinstance(lad["cp3_keys"], list) or not all(
            isinstance(k, list) and len(k) == 2 for k in lad["cp3_keys"]):
        raise ConfigError("expected a list of [s, t] pairs", "ladders.cp3_keys")
    if not isinstance(c["triple_cap"], int) or c["triple_cap"] < 1:
        raise ConfigError("triple_cap must be a positive integer", "triple_cap")
    if cmd == "fixtures":
        return RunConfig(cmd, c["space"] or {}, [], None, c["sample"], lad, c["cp4"], c["bounds"],
                         c["sandwich"], bool(c["composition"]), c["tolerances"], c["triple_cap"],
                         c["max_pair_distance"], c["seed"], c["output"])
    if c["space"] is None:
        raise ConfigError("missing", "space")
    try:
        space = build_space(c["space"])
    except SpaceError as e:
        raise ConfigError(str(e).split(": ", 1)[-1] if e.path else str(e),
                          "space" + (f".{e.path}" if e.path else ""))
    if cmd == "compare":
        if c["products"] is None or not isinstance(c["products"], list) or len(c["products"]) != 2:
            raise ConfigError("compare needs exactly two products", "products")
        if c["product"] is not None:
            raise ConfigError("use products (not product) for compare", "product")
        prods = c["products"]
        paths = ["products[0]", "products[1]"]
    else:
        if c["products"] is not None:
            raise ConfigError(f"{cmd} takes a single product", "products")
        prods = [c["product"] if c["product"] is not None else {"construction": "gromov"}]
        paths = ["product"]
    for p, path in zip(prods, paths):
        try:
            build_product(p, space, path)
        except ProductError as e:
            raise ConfigError(str(e).split(": ", 1)[-1] if e.path else str(e), e.path or path)
    if cmd == "function-test":
        if c["function"] is None:
            raise ConfigError("missing", "function")
        try:
            build_function(c["function"], space)
        except FunctionError as e:
            raise ConfigError(str(e).split(": ", 1)[-1] if e.path else str(e), e.path or "function")
    s = c["sample"]
    try:
        SampleSpec(s["strategy"], float(s["r_min"]), s["r_max"], s["budget"], s["shells"],
                   c["seed"] if s["seed"] is None else s["seed"])
    except SpaceError as e:
        raise ConfigError(str(e).split(": ", 1)[-1], e.path or "sample")
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), "sample")
    needs_rmax = not (cmd == "boundary-profile" and not c["composition"])
    if needs_rmax and s["r_max"] is None and space.extent == float("inf"):
        raise ConfigError("r_max is required for spaces without a finite horizon", "sample.r_max")
    if cmd == "boundary-profile" and len(lad["radii"]) < 2:
        raise ConfigError("boundary-profile needs at least 2 radii", "ladders.radii")
    if c["sandwich"] is not None:
        sw = c["sandwich"]
        if not isinstance(sw, dict) or set(sw) - {"shift", "scale"} or len(sw) != 1:
            raise ConfigError("sandwich needs exactly one of shift or scale", "sandwich")
        if cmd != "compare":
            raise ConfigError("sandwich applies to compare", "sandwich")
    if not isinstance(c["bounds"], list):
        raise ConfigError("expected a list", "bounds")
    for i, b in enumerate(c["bounds"]):
        if not isinstance(b, dict) or set(b) - {"envelope", "name", "constants"}:
            raise ConfigError("bound needs envelope, name, constants", f"bounds[{i}]")
        if b.get("envelope") not in ("rho1", "rho2", "rho3"):
            raise ConfigError("envelope must be rho1, rho2 or rho3", f"bounds[{i}].envelope")
    return RunConfig(cmd, c["space"], prods, c["function"], c["sample"], lad, c["cp4"], c["bounds"],
                     c["sandwich"], bool(c["composition"]), c["tolerances"], c["triple_cap"],
                     c["max_pair_distance"], c["seed"], c["output"])
