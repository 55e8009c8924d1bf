"""Scenario-driven operations; each returns a list of checks plus data for the report."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import scenario as sc
from .polycore import MultiPoly, eval_poly_many, hefer, homogenize, parse_poly, random_poly
from .quadrature import AdmissiblePath
from .ratcalc import RationalSum, apply_system, apply_system_iterated, eval_rat, system_residual
from .residues import (
    FiberTestForm,
    TubeResolution,
    TubeSpec,
    disk_grid,
    fiber_limit,
    residue_limit,
)
from .transforms import (
    bvp_invert,
    fantappie_indicatrice,
    indicatrice_oracle,
    interpolate_many,
    martineau_invert,
    partial_tube_limit,
    radon_oracle,
    residual_pair_many,
    separating_H,
)


def _num(v):
    v = complex(v)
    return v.real if v.imag == 0 else [v.real, v.imag]


def check(name: str, value, oracle, tol: float, rel: bool = False) -> dict:
    """|value - oracle| <= tol (times max(1, |oracle|) when ``rel``)."""
    err = float(abs(complex(value) - complex(oracle)))
    scale = max(1.0, abs(complex(oracle))) if rel else 1.0
    return {"name": name, "value": _num(value), "oracle": _num(oracle), "error": err, "tol": tol,
            "pass": bool(err <= tol * scale)}


@dataclass
class Context:
    seed: int = 0
    workers: int = 1
    t_grid: tuple | None = None
    dump_kernel: str | None = None

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


@dataclass
class Outcome:
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)


def _points(doc, n, rng):
    pts = [sc.parse_point(p) for p in doc.get("points", [])]
    spec = doc.get("points_random")
    if spec:
        rad = float(spec.get("radius", 0.5))
        for _ in range(int(spec.get("count", 5))):
            v = rng.normal(size=n) + 1j * rng.normal(size=n)
            v /= np.linalg.norm(v)
            pts.append(v * rad * rng.uniform() ** (1.0 / (2 * n)))
    return np.array(pts)


def _fmt(z) -> str:
    return "(" + ", ".join(f"{complex(x).real:.4g}{complex(x).imag:+.4g}i" for x in z) + ")"


# --------------------------------------------------------------- commands

def cmd_hefer(doc, ctx: Context) -> Outcome:
    out = Outcome()
    rng = ctx.rng(1)
    tol = float(doc.get("tol", 1e-10))
    polys = [parse_poly(p, int(doc["n"])) for p in doc.get("polynomials", [])]
    spec = doc.get("polys_random")
    if spec:
        for _ in range(int(spec.get("count", 20))):
            n = int(rng.integers(1, int(spec.get("max_n", 3)) + 1))
            polys.append(random_poly(rng, n, int(spec.get("max_degree", 4)), int(spec.get("terms", 6))))
    pairs = int(doc.get("pairs", 1000))
    for i, P in enumerate(polys):
        H = hefer(P)
        n = P.nvars
        zeta = rng.normal(size=(pairs, n)) + 1j * rng.normal(size=(pairs, n))
        z = rng.normal(size=(pairs, n)) + 1j * rng.normal(size=(pairs, n))
        pts = np.concatenate([zeta, z], axis=1)
        lhs = eval_poly_many(P, zeta) - eval_poly_many(P, z)
        rhs = sum((zeta[:, j] - z[:, j]) * eval_poly_many(Q, pts) for j, Q in enumerate(H.components))
        scale = 1.0 + np.abs(lhs)
        err = float(np.max(np.abs(lhs - rhs) / scale))
        out.checks.append(check(f"hefer identity poly {i} (n={n}, deg={P.degree()})", err, 0.0, tol))
    return out


def cmd_verify_system(doc, ctx: Context) -> Outcome:
    out = Outcome()
    n = int(doc["n"])
    g = sc.parse_rational(doc["g"], n)
    tol = float(doc.get("tol", 1e-12))
    for i, p in enumerate(doc["polynomials"]):
        Pt = homogenize(parse_poly(p, n))
        closed = apply_system(Pt, g, zero_tol=0.0)
        ref = apply_system_iterated(Pt, g)
        out.checks.append(check(f"closed form = iterated d_xi, P{i + 1}", closed.max_abs_diff(ref), 0.0, tol, rel=True))
        out.checks.append(check(f"system residual P{i + 1}", system_residual(Pt, g), 0.0, tol))
    return out


def cmd_interpolate(doc, ctx: Context) -> Outcome:
    out = Outcome()
    scn = sc.build(doc, ctx.workers, ctx.t_grid, ctx.dump_kernel)
    tol = float(doc.get("tol", 1e-3))
    funcs = [sc.parse_function(f, scn.n) for f in doc["functions"]]
    pts = _points(doc, scn.n, ctx.rng(3))
    for z in pts:
        for P in scn.polys:
            if abs(eval_poly_many(P, z[None, :])[0]) > 1e-12:
                raise sc.ScenarioError(f"interpolation point {z} is not on V")
    vals, errs = interpolate_many(funcs, scn, pts)
    for i, z in enumerate(pts):
        for k, h in enumerate(funcs):
            oracle = eval_poly_many(h, z[None, :])[0]
            out.checks.append(check(f"interpolate h{k} at z{i} {_fmt(z)}", vals[i, k], oracle, tol))
    out.data["extrapolation_error"] = [float(e) for e in errs]
    if "h_points" in doc:
        xis = sc.dual_points(doc, scn.body, ctx.rng(4))
        for i, u in enumerate(sc.parse_point(p) for p in doc["h_points"]):
            H = np.atleast_1d(separating_H(scn, xis, u))
            for j, xi in enumerate(xis):
                oracle = 1.0 / (xi[0] + xi[1:] @ u)
                out.checks.append(check(f"H_V(xi{j}, u{i})", H[j], oracle, tol))
    return out


def cmd_martineau(doc, ctx: Context) -> Outcome:
    out = Outcome()
    scn = sc.build(doc, ctx.workers)
    tol = float(doc.get("tol", 1e-3))
    tol_i = float(doc.get("tol_indicatrice", 1e-3))
    xis = sc.dual_points(doc, scn.body, ctx.rng(5))
    res = scn.quad.sphere_res
    for gi, recs in enumerate(doc["g_list"]):
        g = sc.parse_rational(recs, scn.n)
        v = martineau_invert(g, scn.body, scn.convention, scn.nu, xis, res, scn.quad.dual_samples, scn.dual_tol)
        ref = eval_rat(g, xis)
        for j in range(len(xis)):
            out.checks.append(check(f"martineau g{gi} xi{j}", v[j], ref[j], tol))
        for j in range(min(2, len(xis))):
            fi = fantappie_indicatrice(g, scn.body, scn.convention, scn.nu, xis[j], res)
            oi = indicatrice_oracle(g, xis[j])
            for k in range(scn.n + 1):
                out.checks.append(check(f"indicatrice g{gi} xi{j} component {k}", fi[k], oi[k], tol_i))
    return out


def cmd_invert(doc, ctx: Context) -> Outcome:
    out = Outcome()
    scn = sc.build(doc, ctx.workers, ctx.t_grid, ctx.dump_kernel)
    tol = float(doc.get("tol", 1e-3))
    xis = sc.dual_points(doc, scn.body, ctx.rng(6))
    g = scn.g
    scn.validate_g(g)
    vg, eg = bvp_invert(scn, xis, g)
    ref = eval_rat(g, xis)
    for j in range(len(xis)):
        out.checks.append(check(f"invert g xi{j}", vg[j], ref[j], tol))
    mart = martineau_invert(g, scn.body, scn.convention, scn.nu, xis, scn.quad.sphere_res)
    for j in range(len(xis)):
        out.checks.append(check(f"martineau = invert xi{j}", vg[j], mart[j], tol + 1e-3))
    out.data["extrapolation_error"] = float(eg[0])
    for vi, recs in enumerate(doc.get("g_variants", [])):
        g2 = sc.parse_rational(recs, scn.n)
        v2, _ = bvp_invert(scn, xis, g2)
        ref2 = eval_rat(g2, xis)
        for j in range(len(xis)):
            out.checks.append(check(f"invert variant {vi} xi{j}", v2[j], ref2[j], tol))
        v12, _ = bvp_invert(scn, xis, g + g2.scale(2.0), validate=False)
        lin = float(np.max(np.abs(v12 - (vg + 2 * v2)) / np.maximum(np.abs(v12), 1e-300)))
        out.checks.append(check(f"linearity g + 2 variant {vi}", lin, 0.0, 1e-10))
    return out


def cmd_radon(doc, ctx: Context) -> Outcome:
    """Corollary suite: <phi*,1>, the pairing identity, ideal annihilation, closedness."""
    out = Outcome()
    scn = sc.build(doc, ctx.workers, ctx.t_grid, ctx.dump_kernel)
    n = scn.n
    tol = float(doc.get("tol", 1e-3))
    f0 = scn.g
    rng = ctx.rng(7)
    xis = sc.dual_points(doc, scn.body, ctx.rng(8))
    h = float(doc.get("fd_step", 1e-3))
    funcs = [lambda w: np.ones(len(w))]
    qs = []
    for P in scn.polys:
        for _ in range(int(doc.get("ideal_multiples", 10))):
            q = random_poly(rng, n, 2, 4)
            qs.append(P * q)
            funcs.append(lambda w, pq=P * q: eval_poly_many(pq, w))
    # radon kernels at xi and at xi +- h e_k
    stencil = []
    for xi in xis[:1]:
        stencil.append(xi)
        for k in range(n + 1):
            for s in (1, -1):
                x = xi.copy()
                x[k] += s * h
                stencil.append(x)
    scn.check_dual(np.array(stencil))
    base_idx = len(funcs)
    for x in stencil + list(xis[1:]):
        for j in range(n + 1):
            if j == 0:
                funcs.append(lambda w, x=x: 1.0 / (x[0] + w @ x[1:]))
            else:
                funcs.append(lambda w, x=x, j=j: w[:, j - 1] / (x[0] + w @ x[1:]))
    vals, err = residual_pair_many(f0, scn, funcs)
    out.checks.append(check("<phi*, 1>", vals[0], 0.0, tol))
    for i in range(len(qs)):
        out.checks.append(check(f"ideal annihilation multiple {i}", vals[1 + i], 0.0, tol))
    F = (vals[base_idx:] / (2j * math.pi)).reshape(-1, n + 1)
    f_xi = F[0]
    ref = radon_oracle(f0, stencil[0])
    for j in range(n + 1):
        out.checks.append(check(f"radon f{j}(xi0)", f_xi[j], ref[j], tol))
    # d f_j / d xi_k by central differences
    grad = np.empty((n + 1, n + 1), dtype=complex)
    for k in range(n + 1):
        grad[:, k] = (F[1 + 2 * k] - F[2 + 2 * k]) / (2 * h)
    curl = max(abs(grad[j, k] - grad[k, j]) for j in range(n + 1) for k in range(j + 1, n + 1))
    out.checks.append(check("discrete curl of radon coefficients", curl, 0.0, tol))
    euler = complex(np.sum(stencil[0] * f_xi))
    out.checks.append(check("Euler contraction sum xi_j f_j", euler, 0.0, tol))
    for i, xi in enumerate(xis[1:]):
        Fi = F[len(stencil) + i]
        refi = radon_oracle(f0, xi)
        out.checks.append(check(f"radon f(xi{i + 1}) max error", float(np.max(np.abs(Fi - refi))), 0.0, tol))
    if "pairing_g" in doc:
        fp = sc.parse_rational(doc["pairing_g"], n)
        kern = [lambda w, x=x: 1.0 / (x[0] + w @ x[1:]) for x in xis]
        pv, _ = residual_pair_many(fp, scn, kern)
        tp = float(doc.get("tol_pairing", 1e-2))
        for j, xi in enumerate(xis):
            out.checks.append(check(f"pairing identity xi{j}", pv[j], 2j * math.pi * eval_rat(fp, xi), tp))
    out.data["extrapolation_error"] = float(err)
    return out


def _bump(x):
    out = np.zeros_like(x)
    m = x < 1
    out[m] = np.exp(-1.0 / (1.0 - x[m]))
    return out


def residue_test_form(radius: float = 0.4, nonholomorphic: bool = False, z: complex = 0.0):
    """F(zeta) = e^{(1+z) zeta_1} (1 + zeta_2 + zeta_1^2 zeta_2) bump(|zeta_2|^2 / radius^2)."""

    def F(w):
        v = np.exp((1 + z) * w[:, 0]) * (1 + w[:, 1] + w[:, 0] ** 2 * w[:, 1]) * _bump(np.abs(w[:, 1]) ** 2 / radius ** 2)
        if nonholomorphic:
            v = v * (1 + np.abs(w[:, 0]) ** 2)
        return v

    return F


def cmd_residue(doc, ctx: Context) -> Outcome:
    if "active" in doc:
        return _partial_tubes(doc, ctx)
    out = Outcome()
    n = int(doc["n"])
    q = sc.parse_quad(doc.get("quadrature", {}))
    ts = tuple(ctx.t_grid or q.t_grid)
    res = TubeResolution(q.n_alpha, 8, q.chunk_nodes)
    R = float(doc.get("bump_radius", 0.4))
    base = disk_grid(n - 1, float(doc.get("base_radius", R)), int(doc.get("base_r", 32)), int(doc.get("base_phi", 32)))
    tol = float(doc.get("tol", 1e-6))
    paths = [AdmissiblePath(tuple(p)) for p in doc.get("paths", [[1.0], [0.5]])]
    form = FiberTestForm(residue_test_form(R), n)
    records = []
    for i, expr in enumerate(doc["problems"]):
        P = parse_poly(expr, n)
        spec = TubeSpec([P], [ts[0]])
        fl = fiber_limit(P, form, base)
        lim = residue_limit(spec, form.density, paths[0], base, ts, res, workers=ctx.workers)
        agree = max(tol, 1e-4 * abs(fl))
        out.checks.append(check(f"tube = fiber residue, P = {expr}", lim.limit, fl, agree))
        records.append({"P": expr, "fiber": _num(fl), "tube": lim.to_dict()})
        if i == 0:
            big = residue_limit(spec, form.scaled(10.0).density, paths[0], base, ts, res, workers=ctx.workers)
            out.checks.append(check(f"linearity x10, P = {expr}", big.limit / 10.0, lim.limit, 1e-10, rel=True))
    # path independence on integrands that are not holomorphic in the fiber
    nh = FiberTestForm(residue_test_form(R, nonholomorphic=True), n)
    for expr in doc.get("path_problems", doc["problems"][:2]):
        P = parse_poly(expr, n)
        spec = TubeSpec([P], [ts[0]])
        a = residue_limit(spec, nh.density, paths[0], base, ts, res, workers=ctx.workers)
        b = residue_limit(spec, nh.density, paths[1], base, ts, res, workers=ctx.workers)
        out.checks.append(check(f"path independence, P = {expr}", a.limit, b.limit, tol))
    # multiplicity: P -> P^2 with numerator times P
    P = parse_poly(doc.get("multiplicity_problem", "z1-z2^2"), n)
    FP = lambda w: residue_test_form(R)(w) * eval_poly_many(P, w)
    out.checks.append(check("multiplicity P^2 with numerator P", fiber_limit(P * P, FiberTestForm(FP, n), base),
                            fiber_limit(P, form, base), tol))
    # holomorphy in an external parameter
    z0, hz = 0.1 + 0.05j, 1e-3
    Rz = lambda z: fiber_limit(P, FiberTestForm(residue_test_form(R, z=z), n), base)
    dbar = 0.5 * ((Rz(z0 + hz) - Rz(z0 - hz)) / (2 * hz) + 1j * (Rz(z0 + 1j * hz) - Rz(z0 - 1j * hz)) / (2 * hz))
    out.checks.append(check("Cauchy-Riemann defect in external z", abs(dbar), 0.0, 1e-5))
    out.data["problems"] = records
    return out


def _partial_tubes(doc, ctx: Context) -> Outcome:
    out = Outcome()
    scn = sc.build(doc, ctx.workers, ctx.t_grid, ctx.dump_kernel)
    tol = float(doc.get("tol", 1e-4))
    h = sc.parse_function(doc["functions"][0], scn.n)
    for z in _points(doc, scn.n, ctx.rng(9)):
        for act in doc["active"]:
            lim, _ = partial_tube_limit(h, scn, z, act)
            out.checks.append(check(f"partial tube I = {[a + 1 for a in act]} at {_fmt(z)}", lim, 0.0, tol))
        full, _ = partial_tube_limit(h, scn, z, range(scn.m))
        out.checks.append(check(f"full tube (contrast) at {_fmt(z)}", full, eval_poly_many(h, z[None, :])[0], tol))
    return out


COMMANDS = {
    "hefer": cmd_hefer,
    "verify-system": cmd_verify_system,
    "interpolate": cmd_interpolate,
    "martineau": cmd_martineau,
    "invert": cmd_invert,
    "radon": cmd_radon,
    "residue": cmd_residue,
}
