"""Interpolation, Martineau inversion, the boundary-value inversion and residual pairings.

Orientation: integrals over real 2n-chains (and level hypersurfaces, with the
boundary orientation) use the orientation of C^n in which (i/2)^n dz ^ dzbar
is positive.  This differs from the interleaved real orientation
(x_1, y_1, ..., x_n, y_n) by ``split_sign(n) = (-1)^(n(n-1)/2)``.
The remaining conventions are recorded next to the prefactors below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .forms import ChartSample, dphi_row, dump_kernel_csv, eta_prime_jet, hefer_jet, omega_prime_eta
from .geometry import ConvexBody, EtaConvention, eta, in_dual, level_chart, rho, shell_chart
from .polycore import MultiPoly, eval_poly_many, hefer, homogenize
from .quadrature import (
    AdmissiblePath,
    DEFAULT_T_GRID,
    gauss_legendre,
    pairwise_sum,
    simplex_rule,
    sphere_rule,
)
from .ratcalc import PoleElement, RationalSum, apply_D, apply_system, eta0_deriv, eval_rat, system_residual
from .residues import (
    BaseGrid,
    EngineScopeError,
    TubeResolution,
    TubeSpec,
    batched_roots,
    extrapolate,
    fiber_coefficients,
    map_chunks,
    monomial_exponent,
    ordered_sum,
    tube_chunks,
    _eval_coeffs,
)


class DualViolation(ValueError):
    pass


class PoleOnBoundary(ValueError):
    pass


class ScenarioInvalid(ValueError):
    pass


def split_sign(n: int) -> int:
    return -1 if (n * (n - 1) // 2) % 2 else 1


# ------------------------------------------------------------------ scenario

@dataclass(frozen=True)
class QuadConfig:
    sphere_res: int = 32
    shell_points: int = 24
    simplex_degree: int | None = None  # default: n, exact for the mu-polynomial
    n_alpha: int = 16
    base_r: int = 48
    base_phi: int = 128
    t_grid: tuple = DEFAULT_T_GRID
    L: int | None = None
    path: tuple | None = None
    order: float | None = None
    chunk_nodes: int = 65536
    dual_samples: int = 1024


@dataclass
class BVPScenario:
    n: int
    polys: list
    body: ConvexBody
    g: RationalSum | None = None
    convention: EtaConvention = field(default_factory=EtaConvention)
    nu: float = 0.1
    delta: float = 0.1
    quad: QuadConfig = field(default_factory=QuadConfig)
    dual_tol: float = 1e-6
    pole_tol: float = 1e-9
    workers: int = 1
    dump_kernel: str | None = None

    @property
    def m(self) -> int:
        return len(self.polys)

    @property
    def r(self) -> int:
        return self.n - self.m - 1

    def hefers(self):
        return [hefer(P) for P in self.polys]

    def homogenized(self):
        return [homogenize(P) for P in self.polys]

    def degree_bound(self) -> int:
        if self.quad.L is not None:
            return self.quad.L
        return max([P.degree() for P in self.polys] + [1])

    def path(self) -> AdmissiblePath:
        if self.quad.path is not None:
            return AdmissiblePath(self.quad.path)
        return AdmissiblePath.for_degree_bound(self.m, self.degree_bound())

    def simplex(self):
        deg = self.quad.simplex_degree or max(self.n, 1)
        return simplex_rule(self.m, deg)

    def validate_g(self, g: RationalSum | None = None, require_order1: bool = True) -> list:
        """Check that g solves the system and its poles lie inside G; returns residuals."""
        g = self.g if g is None else g
        if g is None:
            raise ScenarioInvalid("scenario has no boundary datum g")
        if g.n != self.n:
            raise ScenarioInvalid("g has the wrong dimension")
        res = []
        for Pt in self.homogenized():
            res.append(system_residual(Pt, g))
            if not apply_system(Pt, g).is_zero:
                raise ScenarioInvalid(f"g does not solve the system: residual {res[-1]:.3e}")
        for e in g:
            if require_order1 and e.order != 1:
                raise ScenarioInvalid("boundary datum must be homogeneous of degree -1")
            if rho(self.body, np.array(e.base)) >= 0:
                raise ScenarioInvalid(f"pole base {e.base} is not interior to G")
        return res

    def check_dual(self, xis) -> list:
        out = []
        for xi in np.atleast_2d(np.asarray(xis, dtype=complex)):
            d = in_dual(self.body, xi, self.quad.dual_samples, self.dual_tol)
            if not d["member"]:
                raise DualViolation(f"xi = {xi} is not in the dual domain (margin {d['margin']:.3e})")
            out.append(d["margin"])
        return out


# ----------------------------------------------------------- Martineau side

def _check_poles_inside(g: RationalSum, body: ConvexBody, nu: float):
    if any(e.order != 1 for e in g):
        raise ScenarioInvalid("the inversion formula needs g homogeneous of degree -1")
    for e in g:
        if rho(body, np.array(e.base)) >= -nu:
            raise PoleOnBoundary(f"pole base {e.base} is not inside G_-nu")


def martineau_invert(g: RationalSum, body: ConvexBody, convention: EtaConvention, nu: float, xis,
                     sphere_res: int = 32, dual_samples: int = 1024, dual_tol: float = 1e-6):
    """g(xi) = (-1)/(2 pi i)^n int_{bG_-nu} d^(n-1)g/deta_0^(n-1)(eta(u)) omega'(eta) ^ du / (xi_0 + xi'.u).

    ``xis`` is one dual point or an array of them; returns complex or an array.
    """
    single = np.ndim(xis) == 1
    X = np.atleast_2d(np.asarray(xis, dtype=complex))
    n = body.n
    for xi in X:
        d = in_dual(body, xi, dual_samples, dual_tol)
        if not d["member"]:
            raise DualViolation(f"xi = {xi} is not in the dual domain")
    if g.is_zero:
        out = np.zeros(len(X), dtype=complex)
        return complex(out[0]) if single else out
    _check_poles_inside(g, body, nu)
    s = level_chart(body, nu, sphere_rule(n, sphere_res))
    G = eval_rat(eta0_deriv(g, n - 1), eta(body, convention, s.zeta))
    dens = omega_prime_eta(body, convention, s).density() * s.weights * G
    lin = X[:, 0][None, :] + s.zeta @ X[:, 1:].T  # (N, K)
    val = pairwise_sum(dens[:, None] / lin)
    out = -split_sign(n) * val / (2j * math.pi) ** n
    return complex(out[0]) if single else out


def fantappie_indicatrice(g: RationalSum, body: ConvexBody, convention: EtaConvention, nu: float, xi,
                          sphere_res: int = 32) -> np.ndarray:
    """Components mu^f(z_k / <xi . z>), k = 0..n, of the indicatrice.

    The datum is g = df/dxi_0 for a homogeneity-0 primitive f, so the
    eta_0-derivative of order n of f is that of order n - 1 of g.  The
    result equals (df/dxi_0, ..., df/dxi_n) = (g, -D_1 g, ..., -D_n g).
    """
    xi = np.asarray(xi, dtype=complex)
    n = body.n
    if not in_dual(body, xi)["member"]:
        raise DualViolation(f"xi = {xi} is not in the dual domain")
    if g.is_zero:
        return np.zeros(n + 1, dtype=complex)
    _check_poles_inside(g, body, nu)
    s = level_chart(body, nu, sphere_rule(n, sphere_res))
    G = eval_rat(eta0_deriv(g, n - 1), eta(body, convention, s.zeta))
    dens = omega_prime_eta(body, convention, s).density() * s.weights * G
    zk = np.concatenate([np.ones((s.size, 1)), s.zeta], axis=1)
    lin = xi[0] + s.zeta @ xi[1:]
    val = pairwise_sum(dens[:, None] * zk / lin[:, None])
    return -split_sign(n) * val / (2j * math.pi) ** n


def indicatrice_oracle(g: RationalSum, xi) -> np.ndarray:
    xi = np.asarray(xi, dtype=complex)
    comps = [eval_rat(g, xi)] + [eval_rat(apply_D(g, k), xi) * -1 for k in range(1, g.n + 1)]
    return np.array(comps)


# ----------------------------------------------------------- charts for dphi

def shell_chunks(body: ConvexBody, delta: float, quad: QuadConfig):
    """The shell {0 < rho < delta}, one radial node per chunk (m = 0)."""
    radial = gauss_legendre(quad.shell_points)
    sph = sphere_rule(body.n, quad.sphere_res)
    for i in range(radial.size):
        sub = type(radial)(radial.nodes[i:i + 1], radial.weights[i:i + 1])
        yield shell_chart(body, delta, sub, sph)


def detect_base_support(polys, body: ConvexBody, delta: float, n_coarse: int = 512, fiber: int = 0,
                        pad: float = 0.01) -> tuple:
    """Annulus per base coordinate containing the part of V in the shell {0 <= rho <= delta}.

    ``pad`` is the relative widening of each annulus.
    """
    n, m = polys[0].nvars, len(polys)
    k = n - m
    if k == 0:
        return ()
    R = float(np.max(np.abs(body.c) + body.r) * math.sqrt(1 + delta)) * 1.05
    r1 = (np.arange(n_coarse) + 0.5) * R / n_coarse
    nph = 64
    ph1 = 2 * math.pi * np.arange(nph) / nph
    w1 = (r1[:, None] * np.exp(1j * ph1)[None, :]).reshape(-1)
    if k == 1:
        W = w1[:, None]
    elif k == 2:
        sub = w1[:: max(1, len(w1) // 2000)]
        W = np.stack(np.meshgrid(sub, sub, indexing="ij"), axis=-1).reshape(-1, 2)
    else:
        raise EngineScopeError("base support detection supports at most 2 base coordinates")
    if all(monomial_exponent(P, j) is not None for j, P in enumerate(polys)):
        pts = np.concatenate([np.zeros((len(W), m), complex), W], axis=1)
        bidx = list(range(m, n))
    elif m == 1:
        coeffs = fiber_coefficients(polys[0], fiber)
        roots = batched_roots(_eval_coeffs(coeffs, W))
        d = roots.shape[1]
        bidx = [j for j in range(n) if j != fiber]
        pts = np.empty((len(W) * d, n), dtype=complex)
        pts[:, fiber] = roots.reshape(-1)
        for q, j in enumerate(bidx):
            pts[:, j] = np.repeat(W[:, q], d)
    else:
        raise EngineScopeError("tube engine supports m = 1 or coordinate-monomial systems")
    rv = rho(body, pts)
    mask = (rv > 0) & (rv < delta)
    if not np.any(mask):
        raise EngineScopeError("V does not reach the shell around bG")
    step = R / n_coarse
    ranges = []
    for j in bidx:
        a = np.abs(pts[mask, j])
        lo, hi = a.min() - step, a.max() + step
        width = hi - lo
        lo, hi = max(0.0, lo - pad * width), hi + pad * width
        if lo < 0.15 * hi:
            lo = 0.0
        ranges.append((float(lo), float(hi)))
    return tuple(ranges)


# ---------------------------------------------------------- the CF engine

@dataclass
class KernelJob:
    """One kernel point p with its right-hand sides.

    ``point`` is z (interpolation, normalized theta) or the substitution point
    of a pole element (unnormalized theta).  ``rhs(sample) -> (N, K)``
    supplies the scalar factors multiplying the form, excluding 1 / prod P.
    """

    point: np.ndarray
    rhs: Callable
    normalize: bool
    label: str = ""


class CFEngine:
    """Integrals of F dphi_delta ^ omega'_0(theta) ^ dzeta / prod P over T^eps x Lambda.

    ``active`` selects a partial tube T_I x Lambda_I (inactive P_k cut out by
    disks |P_k| <= eps_k, no simplex coordinate, no Hefer block, no 1/P_k).
    """

    def __init__(self, scn: BVPScenario, active: Sequence[int] | None = None):
        self.scn = scn
        self.active = tuple(range(scn.m)) if active is None else tuple(sorted(active))
        self.hefers = [H for k, H in enumerate(scn.hefers()) if k in self.active]
        self._base = None

    def base_grid(self) -> BaseGrid:
        if self._base is None:
            q = self.scn.quad
            ranges = detect_base_support(self.scn.polys, self.scn.body, self.scn.delta)
            self._base = BaseGrid(ranges, q.base_r, q.base_phi)
        return self._base

    def chunks(self, eps):
        scn = self.scn
        if scn.m == 0:
            return shell_chunks(scn.body, scn.delta, scn.quad)
        spec = TubeSpec(scn.polys, eps, self.active)
        res = TubeResolution(scn.quad.n_alpha, 8, scn.quad.chunk_nodes)
        return tube_chunks(spec, self.base_grid(), res)

    def _chunk_values(self, sample: ChartSample, jobs: Sequence[KernelJob]) -> list:
        scn = self.scn
        body = scn.body
        if scn.m:
            deg = scn.quad.simplex_degree or max(scn.n, 1)
            sample = sample.with_simplex(simplex_rule(len(self.active), deg))
            invP = 1.0 / np.prod(sample.extra["P"][:, list(self.active)], axis=1)
        else:
            invP = np.ones(sample.size)
        e, de = eta_prime_jet(body, sample)
        pre = dphi_row(body, scn.delta, sample)[:, None, :].astype(complex)
        active = pre[:, 0, :].any(axis=1)
        if not np.any(active):
            return None
        sub = _take(sample, active)
        e, de, pre, invP = e[active], de[active], pre[active], invP[active]
        mu0 = dmu0 = None
        if self.active:
            mu0 = 1.0 - sub.mu.sum(axis=1)
            dmu0 = -sub.dmu.sum(axis=1)
        out = []
        rhs_cache = {}
        for job in jobs:
            A = dA = None
            if self.active:
                A = np.zeros((sub.size, scn.n), dtype=complex)
                dA = np.zeros((sub.size, scn.n, sub.dim), dtype=complex)
                for k, H in enumerate(self.hefers):
                    q, dq = hefer_jet(H, sub, job.point)
                    A += sub.mu[:, k, None] * q
                    dA += sub.mu[:, k, None, None] * dq + q[:, :, None] * sub.dmu[:, k, None, :]
            w = sub.zeta - job.point
            dens = kernels.cf_density(e, de, w, sub.dzeta, pre, A, dA, mu0, dmu0, job.normalize)
            if scn.dump_kernel:
                dump_kernel_csv(scn.dump_kernel, sub, dens, job.label)
            key = id(job.rhs)
            if key not in rhs_cache:
                rhs_cache[key] = np.asarray(job.rhs(sub))
            F = rhs_cache[key]
            wd = dens * invP * sub.weights
            out.append(pairwise_sum(wd[:, None] * F if F.ndim == 2 else wd * F))
        return out

    def integrate(self, jobs: Sequence[KernelJob], eps) -> list:
        parts = map_chunks(lambda c: self._chunk_values(c, jobs), self.chunks(eps), self.scn.workers)
        parts = [p for p in parts if p is not None]
        if not parts:
            raise EngineScopeError("the cutoff gradient vanishes on every chart node")
        return [ordered_sum([p[i] for p in parts]) for i in range(len(jobs))]

    def limit(self, jobs: Sequence[KernelJob]) -> dict:
        """Per-job t -> 0 limits (m >= 1) or the plain shell integral (m = 0)."""
        scn = self.scn
        if scn.m == 0:
            vals = self.integrate(jobs, ())
            return {"values": vals, "errors": [0.0] * len(jobs), "per_t": []}
        path = scn.path()
        ts = list(scn.quad.t_grid)
        per_t = [self.integrate(jobs, path(t)) for t in ts]
        order = scn.quad.order if scn.quad.order is not None else min(path.exponents)
        vals, errs = [], []
        for i in range(len(jobs)):
            lim, err, _ = extrapolate(ts, [p[i] for p in per_t], order)
            vals.append(lim)
            errs.append(err)
        return {"values": vals, "errors": errs, "per_t": [(t, [p[i] for i in range(len(jobs))]) for t, p in zip(ts, per_t)]}


def _take(sample: ChartSample, mask) -> ChartSample:
    return ChartSample(
        sample.zeta[mask],
        sample.dzeta[mask],
        sample.weights[mask],
        None if sample.mu is None else sample.mu[mask],
        None if sample.dmu is None else sample.dmu[mask],
        {k: v[mask] for k, v in sample.extra.items()},
    )


# ------------------------------------------------------------ interpolation

def chain_sign(n: int, m: int) -> int:
    """Orientation sign of T^eps x Lambda (tube angles first, simplex last) in the split orientation."""
    return split_sign(n) * (-1 if (m * (m + 1) // 2) % 2 else 1)


def interpolation_prefactor(n: int, m: int = 0) -> complex:
    """-(n-1)!/(2 pi i)^n up to the chain orientation sign.

    The minus sign: d phi_delta points inward, so by Stokes the shell integral
    is minus the boundary Cauchy-Fantappie integral.
    """
    return -chain_sign(n, m) * math.factorial(n - 1) / (2j * math.pi) ** n


def _as_callable(h):
    if isinstance(h, MultiPoly):
        return lambda z, h=h: eval_poly_many(h, z)
    return h


def interpolate_many(funcs: Sequence, scn: BVPScenario, points) -> tuple:
    """Integral term of the interpolation formula for several h at several z.

    Returns (values (len(points), len(funcs)), error estimates (len(points),)).
    """
    Z = np.atleast_2d(np.asarray(points, dtype=complex))
    for z in Z:
        if rho(scn.body, z) >= 0:
            raise EngineScopeError(f"z = {z} is not interior to G")
    hs = [_as_callable(h) for h in funcs]

    def rhs(sample):
        return np.stack([np.asarray(h(sample.zeta), dtype=complex) * np.ones(sample.size) for h in hs], axis=1)

    jobs = [KernelJob(z, rhs, True, f"interp z{i}") for i, z in enumerate(Z)]
    res = CFEngine(scn).limit(jobs)
    c = interpolation_prefactor(scn.n, scn.m)
    vals = np.array([c * np.asarray(v) for v in res["values"]])
    errs = np.array([abs(c) * e for e in res["errors"]])
    return vals, errs


def interpolate(h, scn: BVPScenario, z) -> complex:
    vals, _ = interpolate_many([h], scn, [z])
    return complex(vals[0, 0])


def partial_tube_limit(h, scn: BVPScenario, z, active: Sequence[int]) -> tuple:
    """Interpolation integrand restricted to a partial tube T_I x Lambda_I; returns (limit, error).

    For I a proper subset of the indices the limit vanishes.
    """
    hh = _as_callable(h)
    z = np.asarray(z, dtype=complex)

    def rhs(sample):
        return (np.asarray(hh(sample.zeta), dtype=complex) * np.ones(sample.size))[:, None]

    res = CFEngine(scn, active).limit([KernelJob(z, rhs, True, "partial tube")])
    c = interpolation_prefactor(scn.n, len(active))
    return complex(c * res["values"][0][0]), abs(c) * res["errors"][0]


def separating_H(scn: BVPScenario, xis, u, numerator: complex = 1.0):
    """H_V(xi, u): interpolation of numerator / (xi_0 + xi'.w) at u, for each xi."""
    X = np.atleast_2d(np.asarray(xis, dtype=complex))
    scn.check_dual(X)
    funcs = [lambda w, xi=xi: numerator / (xi[0] + w @ xi[1:]) for xi in X]
    vals, _ = interpolate_many(funcs, scn, [u])
    out = vals[0]
    return complex(out[0]) if np.ndim(xis) == 1 else out


# ------------------------------------------------------------ Theorem side

def bvp_prefactor(n: int, m: int) -> complex:
    """(n-1)! / ((2 pi i)^n (n-m-1)!) up to the chain orientation sign, for eta_0 = -<eta'.w>.

    Relative to the interpolation constant the sign flips because, for every r,
    d^r g / d eta_0^r (eta(w)) = -c r! / <eta'.(w - a)>^(r+1) on an element c / (xi . a~).
    """
    r = n - m - 1
    if r < 0:
        raise EngineScopeError("the formula needs m < n")
    return chain_sign(n, m) * math.factorial(n - 1) / ((2j * math.pi) ** n * math.factorial(r))


def substitution_point(e: PoleElement, convention: EtaConvention) -> np.ndarray:
    """The point p replacing D in Q(w, D) for one pole element.

    With eta_0 = -<eta'.w> the element (base a) becomes a Cauchy-Fantappie
    kernel at p = a; with the other sign reading it sits at p = -a.
    """
    return -convention.sign * np.asarray(e.base, dtype=complex)


def _element_jobs(scn: BVPScenario, f: RationalSum, rhs_builder: Callable, label: str) -> list:
    jobs = []
    for i, e in enumerate(f):
        single = RationalSum(f.n, [e])
        Gr = eta0_deriv(single, scn.r)
        p = substitution_point(e, scn.convention)

        def rhs(sample, Gr=Gr):
            G = eval_rat(Gr, eta(scn.body, scn.convention, sample.zeta), scn.pole_tol)
            return G[:, None] * rhs_builder(sample)

        jobs.append(KernelJob(p, rhs, False, f"{label} element {i}"))
    return jobs


def _pairing_rhs(X):
    def build(sample):
        return 1.0 / (X[:, 0][None, :] + sample.zeta @ X[:, 1:].T)

    return build


def bvp_invert(scn: BVPScenario, xis, g: RationalSum | None = None, validate: bool = True):
    """Reconstruct g(xi) from its eta_0-derivative on V near bG; returns (values, error estimates)."""
    g = scn.g if g is None else g
    X = np.atleast_2d(np.asarray(xis, dtype=complex))
    if validate:
        scn.validate_g(g)
        scn.check_dual(X)
    if g.is_zero:
        return np.zeros(len(X), complex), np.zeros(len(X))
    jobs = _element_jobs(scn, g, _pairing_rhs(X), "invert")
    res = CFEngine(scn).limit(jobs)
    c = bvp_prefactor(scn.n, scn.m)
    vals = c * sum(np.asarray(v) for v in res["values"])
    err = abs(c) * sum(res["errors"])
    return vals, np.full(len(X), err)


def residual_pair_many(f0: RationalSum, scn: BVPScenario, funcs: Sequence, validate: bool = True) -> tuple:
    """<phi*, h> = 2 pi i * (theorem form with h in place of 1/(xi_0 + xi'.w)) for each h."""
    if validate:
        scn.validate_g(f0)
    hs = [_as_callable(h) for h in funcs]
    if f0.is_zero:
        return np.zeros(len(hs), complex), 0.0

    def build(sample):
        return np.stack([np.asarray(h(sample.zeta), dtype=complex) * np.ones(sample.size) for h in hs], axis=1)

    jobs = _element_jobs(scn, f0, build, "pair")
    res = CFEngine(scn).limit(jobs)
    c = 2j * math.pi * bvp_prefactor(scn.n, scn.m)
    vals = c * sum(np.asarray(v) for v in res["values"])
    return vals, abs(c) * sum(res["errors"])


def residual_pair(f0: RationalSum, scn: BVPScenario, h) -> complex:
    vals, _ = residual_pair_many(f0, scn, [h])
    return complex(vals[0])


def radon_coeffs_many(f0: RationalSum, scn: BVPScenario, xis) -> np.ndarray:
    """f_j(xi) = (1/2 pi i) <phi*, w_j / (xi_0 + xi'.w)>, w_0 = 1; shape (len(xis), n+1)."""
    X = np.atleast_2d(np.asarray(xis, dtype=complex))
    scn.check_dual(X)
    n = scn.n
    funcs = []
    for xi in X:
        for j in range(n + 1):
            if j == 0:
                funcs.append(lambda w, xi=xi: 1.0 / (xi[0] + w @ xi[1:]))
            else:
                funcs.append(lambda w, xi=xi, j=j: w[:, j - 1] / (xi[0] + w @ xi[1:]))
    vals, _ = residual_pair_many(f0, scn, funcs)
    return (vals / (2j * math.pi)).reshape(len(X), n + 1)


def radon_coeffs(f0: RationalSum, scn: BVPScenario, xi) -> np.ndarray:
    if f0.is_zero:
        return np.zeros(scn.n + 1, dtype=complex)
    return radon_coeffs_many(f0, scn, [xi])[0]


def radon_oracle(f0: RationalSum, xi) -> np.ndarray:
    """(f_0, ..., f_n) with f_j = sum c a~_j / (xi . a~) for order-1 f0 (a~ = (1, a))."""
    return indicatrice_oracle(f0, xi)
