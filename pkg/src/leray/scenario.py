"""Scenario files: JSON documents with an explicit schema version."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from .geometry import ConvexBody, EtaConvention, dual_margin_exact
from .polycore import MultiPoly, parse_poly
from .quadrature import DEFAULT_T_GRID
from .ratcalc import PoleElement, RationalSum
from .transforms import BVPScenario, QuadConfig

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario file."""


def parse_complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ScenarioError(f"complex number needs [re, im], got {x!r}")
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        return complex(x.replace("i", "j").replace(" ", ""))
    return complex(x)


def parse_point(p) -> np.ndarray:
    return np.array([parse_complex(x) for x in p])


def complex_record(z: complex) -> list:
    z = complex(z)
    return [z.real, z.imag]


def exp_truncation(linear: MultiPoly, terms: int) -> MultiPoly:
    out = MultiPoly.const(linear.nvars, 1.0)
    power = MultiPoly.const(linear.nvars, 1.0)
    for k in range(1, terms):
        power = power * linear
        out = out + power * (1.0 / math.factorial(k))
    return out


def parse_function(spec, n: int) -> MultiPoly:
    """A test function: polynomial string or {"exp": linear form, "terms": k}."""
    if isinstance(spec, str):
        return parse_poly(spec, n)
    if isinstance(spec, dict) and "exp" in spec:
        return exp_truncation(parse_poly(spec["exp"], n), int(spec.get("terms", 5)))
    raise ScenarioError(f"cannot parse test function {spec!r}")


def parse_rational(records, n: int) -> RationalSum:
    elems = []
    for rec in records:
        base = [parse_complex(b) for b in rec["base"]]
        if len(base) != n:
            raise ScenarioError("pole base has the wrong length")
        c = parse_complex(rec.get("coeff", 1.0))
        elems.append(PoleElement(c, tuple(base), int(rec.get("order", 1))))
    return RationalSum(n, elems)


def parse_quad(d: dict) -> QuadConfig:
    q = QuadConfig()
    kw = {}
    for key in ("sphere_res", "shell_points", "simplex_degree", "n_alpha", "base_r", "base_phi", "L",
                "chunk_nodes", "dual_samples"):
        if key in d:
            kw[key] = int(d[key])
    if "order" in d:
        kw["order"] = float(d["order"])
    if "t_grid" in d:
        kw["t_grid"] = tuple(float(t) for t in d["t_grid"])
    if "path" in d:
        kw["path"] = tuple(float(b) for b in d["path"])
    return replace(q, **kw)


def load(path) -> dict:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: {exc}") from exc
    return doc


def builtin(name: str) -> dict:
    """One of the scenarios shipped with the package."""
    text = resources.files("leray").joinpath("scenarios", f"{name}.json").read_text()
    return json.loads(text)


def builtin_names() -> list:
    d = resources.files("leray").joinpath("scenarios")
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".json"))


def digest(doc: dict) -> str:
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def check_schema(doc: dict):
    v = doc.get("schema_version")
    if v != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema_version {v!r} (expected {SCHEMA_VERSION})")
    if "n" not in doc:
        raise ScenarioError("scenario needs n")


def build(doc: dict, workers: int = 1, t_grid=None, dump_kernel=None) -> BVPScenario:
    check_schema(doc)
    n = int(doc["n"])
    polys = [parse_poly(p, n) for p in doc.get("polynomials", [])]
    body_d = doc.get("body", {"type": "ball", "center": [0] * n, "radii": [1.0] * n})
    body = ConvexBody.from_dict(body_d)
    if body.n != n:
        raise ScenarioError("body dimension differs from n")
    conv = EtaConvention(int(doc.get("convention", {}).get("eta_sign", -1)))
    quad = parse_quad(doc.get("quadrature", {}))
    if t_grid is not None:
        quad = replace(quad, t_grid=tuple(t_grid))
    g = parse_rational(doc["g"], n) if "g" in doc else None
    return BVPScenario(
        n=n,
        polys=polys,
        body=body,
        g=g,
        convention=conv,
        nu=float(doc.get("nu", 0.1)),
        delta=float(doc.get("delta", 0.1)),
        quad=quad,
        dual_tol=float(doc.get("dual_tol", 1e-6)),
        workers=workers,
        dump_kernel=dump_kernel,
    )


def random_dual_points(body: ConvexBody, rng: np.random.Generator, count: int, margin: float = 0.3,
                       scale: float = 0.5) -> np.ndarray:
    """xi = (1, xi') with exact dual margin above ``margin`` (rejection sampling)."""
    n = body.n
    out = []
    while len(out) < count:
        xp = scale * (rng.normal(size=n) + 1j * rng.normal(size=n)) / math.sqrt(2 * n)
        xi = np.concatenate([[1.0 + 0j], xp])
        if dual_margin_exact(body, xi) > margin:
            out.append(xi)
    return np.array(out)


def dual_points(doc: dict, body: ConvexBody, rng: np.random.Generator) -> np.ndarray:
    pts = [parse_point(p) for p in doc.get("xi", [])]
    spec = doc.get("xi_random")
    if spec:
        pts += list(random_dual_points(body, rng, int(spec.get("count", 5)), float(spec.get("margin", 0.3))))
    if not pts:
        raise ScenarioError("scenario lists no dual points")
    return np.array(pts)
