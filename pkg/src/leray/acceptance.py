"""The acceptance suite: criteria 1-9, shared by ``leray selftest`` and the test-suite."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import scenario as sc
from .commands import COMMANDS, Context, check
from .polycore import MultiPoly, homogenize, random_poly
from .ratcalc import (
    PoleElement,
    RationalSum,
    apply_D,
    apply_D_composed,
    apply_system,
    apply_system_iterated,
    eval_rat,
)
from .residues import batched_roots, fiber_coefficients, _eval_coeffs


@dataclass
class Criterion:
    ident: int
    title: str
    budget: float  # seconds
    scenarios: tuple = ()
    checks: list = field(default_factory=list)
    seconds: float = 0.0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(c["pass"] for c in self.checks)

    @property
    def in_budget(self) -> bool:
        return self.seconds <= self.budget

    def record(self) -> dict:
        d = {"id": self.ident, "title": self.title, "pass": self.passed,
             "scenarios": [{"name": s, "digest": sc.digest(sc.builtin(s))} for s in self.scenarios],
             "checks": self.checks}
        if self.error:
            d["error"] = self.error
        return d

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = max((c["error"] / c["tol"] for c in self.checks if c["tol"] > 0), default=0.0)
        if self.budget == float("inf"):
            budget = "no budget"
        else:
            budget = ("within" if self.in_budget else "OVER") + f" {self.budget:.0f}s budget"
        return (f"criterion {self.ident} [{status}] {self.title}: {sum(c['pass'] for c in self.checks)}/{len(self.checks)} checks,"
                f" worst error/tol {worst:.2e}, {self.seconds:.1f}s ({budget})")


SPECS = [
    (1, "Hefer decomposition identity", 5.0, ("hefer_random",)),
    (2, "operator calculus", 1.0, ()),
    (3, "m=0 Cauchy-Fantappie calibration", 30.0, ("m0_ball2",)),
    (4, "Martineau inversion and indicatrice", 120.0, ("martineau_n1", "martineau_n2")),
    (5, "residue engines", 120.0, ("residue_problems", "lemma_partial_tube")),
    (6, "interpolation on V", 120.0, ("interp_linear", "interp_circle", "interp_double_line")),
    (7, "boundary-value inversion", 600.0, ("circle", "line")),
    (8, "residual pairing and Radon coefficients", 300.0, ("corollary_circle",)),
]


def _points_on(P: MultiPoly, rng, count: int) -> list:
    """Points of {P = 0} over random base values (fiber z1)."""
    out = []
    coeffs = fiber_coefficients(P, 0)
    while len(out) < count:
        w = 0.5 * (rng.normal(size=(1, P.nvars - 1)) + 1j * rng.normal(size=(1, P.nvars - 1)))
        try:
            roots = batched_roots(_eval_coeffs(coeffs, w))
        except Exception:
            continue
        out.append(tuple([roots[0, 0]] + list(w[0])))
    return out


def operator_checks(ctx: Context) -> list:
    rng = ctx.rng(2)
    checks = []
    for i in range(5):
        n = int(rng.integers(1, 4))
        elems = [PoleElement(complex(*rng.normal(size=2)), tuple(rng.normal(size=n) + 1j * rng.normal(size=n)),
                             int(rng.integers(1, 4))) for _ in range(3)]
        f = RationalSum(n, elems)
        for j in range(1, n + 1):
            diff = apply_D(f, j).max_abs_diff(apply_D_composed(f, j))
            checks.append(check(f"D_{j} closed form = composition, sum {i}", diff, 0.0, 1e-12, rel=True))
    # D acting on 1/(xi_0 - xi'.u) multiplies by u_j
    for i in range(3):
        n = 2
        u = rng.normal(size=n) + 1j * rng.normal(size=n)
        f = RationalSum.single(tuple(-u))
        xi = np.concatenate([[2.0 + 0j], 0.1 * rng.normal(size=n)])
        for j in range(1, n + 1):
            checks.append(check(f"D_{j}(1/(xi0 - xi'.u)) = u_{j} * f, case {i}",
                                eval_rat(apply_D(f, j), xi), u[j - 1] * eval_rat(f, xi), 1e-12, rel=True))
    # apply_system vanishes iff every base lies on V, closed form = iterated derivatives
    for i in range(4):
        n = 2
        P = random_poly(rng, n, 3, 5) + MultiPoly.var(n, 0) ** 3
        Pt = homogenize(P)
        on = _points_on(P, rng, 2)
        g_on = RationalSum(n, [PoleElement(1.0, a) for a in on])
        off = RationalSum.single(tuple(np.array(on[0]) + 0.1))
        for lab, g in (("on V", g_on), ("off V", off)):
            closed = apply_system(Pt, g, zero_tol=0.0)
            ref = apply_system_iterated(Pt, g)
            checks.append(check(f"apply_system = iterated d_xi, poly {i} {lab}", closed.max_abs_diff(ref), 0.0,
                                1e-12, rel=True))
        vals = [abs(e.coeff) for e in apply_system(Pt, g_on, zero_tol=0.0)]
        scale = max(1.0, max(abs(c) for c in P.terms.values()))
        checks.append(check(f"apply_system vanishes on V, poly {i}", max(vals, default=0.0) / scale, 0.0, 1e-12))
        vo = apply_system(Pt, off)
        checks.append({"name": f"apply_system nonzero off V, poly {i}", "value": float(len(vo)), "oracle": 1.0,
                       "error": float(abs(len(vo) - 1)), "tol": 0.0, "pass": len(vo) == 1})
    return checks


def run_criterion(ident: int, ctx: Context) -> Criterion:
    spec = next(s for s in SPECS if s[0] == ident)
    crit = Criterion(*spec)
    t0 = time.perf_counter()
    try:
        if ident == 2:
            crit.checks = operator_checks(ctx)
        else:
            for name in crit.scenarios:
                doc = sc.builtin(name)
                out = COMMANDS[doc["command"]](doc, ctx)
                for c in out.checks:
                    crit.checks.append(dict(c, name=f"{name}: {c['name']}"))
    except Exception as exc:  # reported, never hidden
        crit.error = f"{type(exc).__name__}: {exc}"
    crit.seconds = time.perf_counter() - t0
    return crit


def suite_report(criteria, seed: int) -> dict:
    tolerances = {}
    for c in criteria:
        for chk in c.checks:
            tolerances[chk["name"]] = chk["tol"]
    return {
        "schema_version": sc.SCHEMA_VERSION,
        "command": "selftest",
        "seed": seed,
        "criteria": [c.record() for c in criteria],
        "checks": [chk for c in criteria for chk in c.checks],
        "tolerances": tolerances,
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=1, sort_keys=True) + "\n"


def run_suite(seed: int = 0, workers: int = 1, idents=range(1, 9)) -> tuple:
    ctx = Context(seed=seed, workers=workers)
    crits = [run_criterion(i, ctx) for i in idents]
    return crits, suite_report(crits, seed)


def reproducibility(first_text: str, seed: int, workers: int, idents=range(1, 9)) -> Criterion:
    """Criterion 9: rerun with another worker count and compare the report bytes."""
    crit = Criterion(9, "byte-identical reports across worker counts", float("inf"))
    other = 2 if workers == 1 else 1
    t0 = time.perf_counter()
    _, rep = run_suite(seed, other, idents)
    text = dumps(rep)
    crit.seconds = time.perf_counter() - t0
    same = text == first_text
    crit.checks.append({"name": "report bytes identical across worker counts", "value": float(same), "oracle": 1.0,
                        "error": 0.0 if same else 1.0, "tol": 0.0, "pass": same})
    return crit


def selftest(seed: int = 0, workers: int = 1, repro: bool = True, idents=range(1, 9)) -> tuple:
    """Run the suite; returns (criteria including 9, full report)."""
    crits, rep = run_suite(seed, workers, idents)
    if repro:
        c9 = reproducibility(dumps(rep), seed, workers, idents)
        crits = crits + [c9]
        rep = suite_report(crits, seed)
    return crits, rep
