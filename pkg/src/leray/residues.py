"""Tube integrals over T^eps, fiberwise residues and limits along admissible paths.

Tube orientation: dalpha_1 ^ ... ^ dalpha_m ^ (base), where alpha_k = arg P_k
and the base coordinates carry the complex orientation (r, phi per
coordinate).  Fiber coordinates are zeta_1..zeta_m, the base is the rest.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .forms import ChartSample
from .polycore import MultiPoly, eval_poly_many, partial
from .quadrature import (
    AdmissiblePath,
    DEFAULT_T_GRID,
    gauss_legendre,
    pairwise_sum,
    periodic_rule,
    richardson,
    tensor_rule,
)

CLUSTER_TOL = 1e-8


class RootFindingError(RuntimeError):
    pass


class EngineScopeError(ValueError):
    pass


class TubeOverlap(ValueError):
    """Circles around distinct fiber roots overlap: eps too large."""


@dataclass(frozen=True)
class TubeSpec:
    polys: tuple
    radii: tuple
    active: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "polys", tuple(self.polys))
        object.__setattr__(self, "radii", tuple(float(x) for x in self.radii))
        if len(self.polys) != len(self.radii):
            raise ValueError("one radius per polynomial")
        act = tuple(range(len(self.polys))) if self.active is None else tuple(sorted(self.active))
        object.__setattr__(self, "active", act)

    @property
    def m(self) -> int:
        return len(self.polys)

    @property
    def n(self) -> int:
        return self.polys[0].nvars

    @property
    def full(self) -> bool:
        return self.active == tuple(range(self.m))

    def with_radii(self, radii) -> TubeSpec:
        return TubeSpec(self.polys, tuple(radii), self.active)


# ------------------------------------------------------------------ base grid

@dataclass(frozen=True)
class BaseGrid:
    """Polar product grid over the base coordinates zeta_{m+1}..zeta_n.

    ``ranges`` holds one (r_lo, r_hi) annulus per base coordinate.
    """

    ranges: tuple
    n_r: int = 32
    n_phi: int = 64

    @property
    def dim(self) -> int:
        return len(self.ranges)

    def rule(self):
        rules = []
        for lo, hi in self.ranges:
            rules += [gauss_legendre(self.n_r, lo, hi), periodic_rule(self.n_phi)]
        if not rules:
            return None
        return tensor_rule(*rules)

    def points(self):
        """(w (N, k), dw (N, k, 2k), weights) with params (r_1, phi_1, r_2, phi_2, ...)."""
        rule = self.rule()
        k = self.dim
        if rule is None:
            return np.zeros((1, 0), complex), np.zeros((1, 0, 0), complex), np.ones(1)
        r = rule.nodes[:, 0::2]
        ph = rule.nodes[:, 1::2]
        e = np.exp(1j * ph)
        w = r * e
        dw = np.zeros((rule.size, k, 2 * k), dtype=complex)
        for j in range(k):
            dw[:, j, 2 * j] = e[:, j]
            dw[:, j, 2 * j + 1] = 1j * w[:, j]
        return w, dw, rule.weights


def disk_grid(k: int, radius: float, n_r: int = 32, n_phi: int = 64) -> BaseGrid:
    return BaseGrid(tuple((0.0, radius) for _ in range(k)), n_r, n_phi)


# ------------------------------------------------------------- fiber algebra

def fiber_coefficients(P: MultiPoly, fiber: int = 0) -> list:
    """Coefficients c_k (polynomials in the remaining variables) of P in zeta_fiber."""
    deg = P.degree_in(fiber)
    groups: dict = {}
    for exps, c in P.terms.items():
        k = exps[fiber]
        rest = exps[:fiber] + exps[fiber + 1:]
        groups.setdefault(k, {})
        groups[k][rest] = groups[k].get(rest, 0) + c
    return [MultiPoly(P.nvars - 1, groups.get(k, {})) for k in range(deg + 1)]


def _eval_coeffs(coeffs, base_pts):
    N = base_pts.shape[0]
    out = np.empty((N, len(coeffs)), dtype=complex)
    for k, c in enumerate(coeffs):
        if c.nvars == 0 or base_pts.shape[1] == 0:
            out[:, k] = sum(c.terms.values()) if c.terms else 0
        else:
            out[:, k] = eval_poly_many(c, base_pts)
    return out


def batched_roots(coeffs) -> np.ndarray:
    """Roots of sum_k coeffs[:, k] w^k for each row, via companion eigenvalues."""
    coeffs = np.asarray(coeffs, dtype=complex)
    N, d1 = coeffs.shape
    d = d1 - 1
    lead = coeffs[:, d]
    scale = np.max(np.abs(coeffs), axis=1)
    if np.any(np.abs(lead) <= 1e-12 * np.maximum(scale, 1e-300)):
        raise RootFindingError("leading fiber coefficient vanishes: fiber not finite over the base")
    if d == 1:
        return (-coeffs[:, 0] / lead)[:, None]
    C = np.zeros((N, d, d), dtype=complex)
    C[:, 1:, :-1] = np.eye(d - 1)
    C[:, :, -1] = -coeffs[:, :d] / lead[:, None]
    roots = np.linalg.eigvals(C)
    if not np.all(np.isfinite(roots)):
        raise RootFindingError("companion eigenvalue computation failed")
    return roots


def _newton_polish(coeffs, roots, steps=2):
    d = coeffs.shape[1] - 1
    for _ in range(steps):
        p = np.zeros_like(roots)
        dp = np.zeros_like(roots)
        for k in range(d, -1, -1):
            dp = dp * roots + p
            p = p * roots + coeffs[:, k, None]
        ok = np.abs(dp) > 1e-14
        roots = np.where(ok, roots - p / np.where(ok, dp, 1), roots)
    return roots


def min_critical_value(c) -> np.ndarray:
    """Smallest |P^(w*)| over critical points w* that are not multiple roots, per row."""
    c = np.asarray(c, dtype=complex)
    d = c.shape[1] - 1
    if d < 2:
        return np.full(c.shape[0], np.inf)
    dc = c[:, 1:] * np.arange(1, d + 1)
    crit = batched_roots(dc)
    vals = np.zeros(crit.shape, dtype=complex)
    for k in range(d, -1, -1):
        vals = vals * crit + c[:, k, None]
    a = np.abs(vals)
    scale = np.max(np.abs(c), axis=1, keepdims=True)
    a = np.where(a <= 1e-10 * scale, np.inf, a)
    return np.min(a, axis=1)


# -------------------------------------------------------------------- charts

def _permute(n, fibers):
    base = [j for j in range(n) if j not in fibers]
    return list(fibers), base


def root_tube_chunks(
    P: MultiPoly,
    eps: float,
    base: BaseGrid,
    n_alpha: int = 16,
    fiber: int = 0,
    chunk_nodes: int = 65536,
) -> Iterator[ChartSample]:
    """Chart of {|P| = eps}: zeta_fiber solves P = eps e^{i alpha} over each base node.

    Params (alpha, base params); every root of the fiber polynomial is a node.
    """
    n = P.nvars
    if base.dim != n - 1:
        raise EngineScopeError("base grid dimension must be n - 1 for a single polynomial")
    coeffs = fiber_coefficients(P, fiber)
    d = len(coeffs) - 1
    if d < 1:
        raise EngineScopeError("polynomial does not depend on the fiber coordinate")
    dP = [partial(P, j) for j in range(n)]
    _, bidx = _permute(n, [fiber])
    w, dw, wb = base.points()
    alpha = periodic_rule(n_alpha)
    a = alpha.nodes[:, 0]
    Nb = len(wb)
    D = 1 + dw.shape[2]
    per_base = n_alpha * d
    step = max(1, chunk_nodes // max(per_base, 1))
    for start in range(0, Nb, step):
        sl = slice(start, min(Nb, start + step))
        wk, dwk, wbk = w[sl], dw[sl], wb[sl]
        nb = len(wbk)
        c = _eval_coeffs(coeffs, wk)  # (nb, d+1)
        crit = min_critical_value(c)
        if np.any(eps >= crit):
            raise TubeOverlap(
                f"eps = {eps:g} reaches a critical value {float(np.min(crit)):g} of the fiber polynomial"
            )
        # all (base, alpha) pairs, alpha fastest
        cc = np.repeat(c, n_alpha, axis=0)
        target = eps * np.exp(1j * np.tile(a, nb))
        cc[:, 0] -= target
        roots = _newton_polish(cc, batched_roots(cc))  # (nb*n_alpha, d)
        M = nb * n_alpha * d
        zeta = np.empty((M, n), dtype=complex)
        zeta[:, fiber] = roots.reshape(-1)
        base_rep = np.repeat(np.repeat(wk, n_alpha, axis=0), d, axis=0)
        for q, j in enumerate(bidx):
            zeta[:, j] = base_rep[:, q]
        grads = np.stack([eval_poly_many(g, zeta) if g.terms else np.zeros(M, complex) for g in dP], axis=1)
        df = grads[:, fiber]
        if np.any(np.abs(df) < 1e-14):
            raise TubeOverlap("fiber derivative vanishes on the tube")
        dz = np.zeros((M, n, D), dtype=complex)
        tg = np.repeat(target, d)
        dz[:, fiber, 0] = 1j * tg / df
        dwr = np.repeat(np.repeat(dwk, n_alpha, axis=0), d, axis=0)
        for q, j in enumerate(bidx):
            dz[:, j, 1:] = dwr[:, q, :]
            dz[:, fiber, 1:] -= (grads[:, j] / df)[:, None] * dwr[:, q, :]
        weights = np.repeat(np.repeat(wbk, n_alpha) * np.tile(alpha.weights, nb), d)
        pvals = tg[:, None]
        yield ChartSample(zeta, dz, weights, extra={"P": pvals})


def monomial_exponent(P: MultiPoly, k: int):
    """(coeff, r) if P = coeff * z_k^r, else None."""
    if len(P.terms) != 1:
        return None
    (exps, c), = P.terms.items()
    if any(e != 0 for j, e in enumerate(exps) if j != k) or exps[k] < 1:
        return None
    return c, exps[k]


def torus_chunks(
    spec: TubeSpec,
    base: BaseGrid,
    n_beta: int = 16,
    n_sigma: int = 8,
    chunk_nodes: int = 65536,
) -> Iterator[ChartSample]:
    """Chart of T^eps_I for P_k = c_k zeta_k^{r_k}, k = 1..m.

    Active k: zeta_k = s_k e^{i beta_k} with |c_k| s_k^{r_k} = eps_k (param beta_k).
    Inactive k: the disk zeta_k = s_k sigma e^{i beta} (params sigma, beta).
    Params are ordered fiber by fiber, then the base.
    """
    n, m = spec.n, spec.m
    mono = [monomial_exponent(P, k) for k, P in enumerate(spec.polys)]
    if any(x is None for x in mono):
        raise EngineScopeError("torus engine needs P_k = c * z_k^r_k")
    if base.dim != n - m:
        raise EngineScopeError("base grid dimension must be n - m")
    rules = []
    for k in range(m):
        if k in spec.active:
            rules.append(periodic_rule(n_beta))
        else:
            rules += [gauss_legendre(n_sigma, 0.0, 1.0), periodic_rule(n_beta)]
    frule = tensor_rule(*rules)
    Df = frule.dim
    w, dw, wb = base.points()
    Db = dw.shape[2]
    D = Df + Db
    s = [(spec.radii[k] / abs(mono[k][0])) ** (1.0 / mono[k][1]) for k in range(m)]
    Nf = frule.size
    # fiber part, shared by all chunks
    fz = np.empty((Nf, m), dtype=complex)
    fdz = np.zeros((Nf, m, Df), dtype=complex)
    col = 0
    for k in range(m):
        if k in spec.active:
            e = np.exp(1j * frule.nodes[:, col])
            fz[:, k] = s[k] * e
            fdz[:, k, col] = 1j * fz[:, k]
            col += 1
        else:
            sig, e = frule.nodes[:, col], np.exp(1j * frule.nodes[:, col + 1])
            fz[:, k] = s[k] * sig * e
            fdz[:, k, col] = s[k] * e
            fdz[:, k, col + 1] = 1j * fz[:, k]
            col += 2
    fP = np.stack([mono[k][0] * fz[:, k] ** mono[k][1] for k in range(m)], axis=1)
    Nb = len(wb)
    step = max(1, chunk_nodes // Nf)
    for start in range(0, Nb, step):
        sl = slice(start, min(Nb, start + step))
        nb = len(wb[sl])
        M = nb * Nf
        zeta = np.empty((M, n), dtype=complex)
        zeta[:, :m] = np.tile(fz, (nb, 1))
        zeta[:, m:] = np.repeat(w[sl], Nf, axis=0)
        dz = np.zeros((M, n, D), dtype=complex)
        dz[:, :m, :Df] = np.tile(fdz, (nb, 1, 1))
        dz[:, m:, Df:] = np.repeat(dw[sl], Nf, axis=0)
        weights = np.repeat(wb[sl], Nf) * np.tile(frule.weights, nb)
        yield ChartSample(zeta, dz, weights, extra={"P": np.tile(fP, (nb, 1))})


@dataclass(frozen=True)
class TubeResolution:
    n_alpha: int = 16
    n_sigma: int = 8
    chunk_nodes: int = 65536


def tube_chunks(spec: TubeSpec, base: BaseGrid, res: TubeResolution = TubeResolution(), fiber: int = 0):
    if all(monomial_exponent(P, k) is not None for k, P in enumerate(spec.polys)):
        return torus_chunks(spec, base, res.n_alpha, res.n_sigma, res.chunk_nodes)
    if spec.m == 1 and spec.full:
        return root_tube_chunks(spec.polys[0], spec.radii[0], base, res.n_alpha, fiber, res.chunk_nodes)
    raise EngineScopeError("tube engine supports m = 1 or coordinate-monomial systems")


def map_chunks(fn, chunks, workers: int = 1) -> list:
    """Apply fn to every chunk; results come back in chunk order."""
    chunks = list(chunks) if workers > 1 else chunks
    if workers <= 1:
        return [fn(c) for c in chunks]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, chunks))


def ordered_sum(parts: Sequence) -> np.ndarray:
    """Sum of per-chunk partial results in index order (pairwise)."""
    if not parts:
        return np.zeros(())
    return pairwise_sum(np.stack([np.asarray(p) for p in parts]))


def tube_integral(
    spec: TubeSpec,
    integrand: Callable,
    base: BaseGrid,
    res: TubeResolution = TubeResolution(),
    fiber: int = 0,
    workers: int = 1,
):
    """sum over tube nodes of weight * integrand(sample).

    ``integrand(sample)`` returns the pulled-back density, shape (N,) or (N, K),
    already divided by the product of the active P_k (use ``sample.extra['P']``).
    """

    def one(sample):
        v = np.asarray(integrand(sample))
        wv = v * (sample.weights if v.ndim == 1 else sample.weights[:, None])
        return pairwise_sum(wv)

    return ordered_sum(map_chunks(one, tube_chunks(spec, base, res, fiber), workers))


# ------------------------------------------------------------ fiber residues

@dataclass
class FiberResidueProblem:
    """Residues of numerator(w) / P(w) for a one-variable polynomial P.

    ``coeffs`` are ascending coefficients of P; ``numerator`` maps complex
    arrays to complex arrays and must be holomorphic near the roots.
    """

    coeffs: Sequence[complex]
    numerator: Callable
    cluster_tol: float = CLUSTER_TOL
    fft_points: int = 32


def cluster_roots(roots, tol=CLUSTER_TOL) -> list:
    """[(center, multiplicity)] grouping roots closer than tol * (1 + |root|)."""
    roots = list(np.asarray(roots, dtype=complex))
    roots.sort(key=lambda z: (z.real, z.imag))
    clusters: list = []
    for r in roots:
        for cl in clusters:
            if abs(cl[0] / cl[1] - r) <= tol * (1 + abs(r)):
                cl[0] += r
                cl[1] += 1
                break
        else:
            clusters.append([r, 1])
    return [(s / k, k) for s, k in clusters]


def fiber_residue(problem: FiberResidueProblem) -> complex:
    """2 pi i * sum over roots of Res(numerator / P), with multiplicity.

    At a root w0 of multiplicity r the residue is the (r-1)-th Taylor
    coefficient of numerator(w) (w - w0)^r / P(w), computed by FFT on a small
    circle around w0.
    """
    c = np.trim_zeros(np.asarray(problem.coeffs, dtype=complex), "b")
    if len(c) < 2:
        raise EngineScopeError("fiber polynomial must have degree >= 1")
    roots = np.roots(c[::-1])
    cl = cluster_roots(roots, problem.cluster_tol)
    centers = np.array([z for z, _ in cl])
    total = 0j
    K = problem.fft_points
    ang = 2 * np.pi * np.arange(K) / K
    for i, (w0, r) in enumerate(cl):
        others = np.delete(centers, i)
        sep = np.min(np.abs(others - w0)) if len(others) else 1.0
        if sep < 1e3 * problem.cluster_tol * (1 + abs(w0)):
            raise RootFindingError("fiber roots too close to resolve")
        rad = min(0.25 * sep, 0.25)
        w = w0 + rad * np.exp(1j * ang)
        Pw = np.polyval(c[::-1], w)
        g = np.asarray(problem.numerator(w)) * (w - w0) ** r / Pw
        coef = np.mean(g * np.exp(-1j * (r - 1) * ang)) / rad ** (r - 1)
        total += coef
    return 2j * math.pi * total


def fiber_roots_tensor(P: MultiPoly, base_pts, fiber=0):
    coeffs = fiber_coefficients(P, fiber)
    return _eval_coeffs(coeffs, base_pts)


def discriminant_abs(coeff_row) -> float:
    c = np.trim_zeros(np.asarray(coeff_row, dtype=complex), "b")
    d = len(c) - 1
    if d < 2:
        return 1.0
    r = np.roots(c[::-1])
    prod = 1.0
    for i in range(d):
        for j in range(i + 1, d):
            prod *= abs(r[i] - r[j]) ** 2
    return abs(c[-1]) ** (2 * d - 2) * prod


@dataclass
class FiberTestForm:
    """alpha = F(zeta) dzetabar_B ^ dzeta_1 ^ ... ^ dzeta_n over P, B = base indices.

    F should be holomorphic in the fiber variable for the fiber engine to apply.
    """

    F: Callable
    n: int
    fiber: int = 0
    scale: float = 1.0

    def base_indices(self):
        return [j for j in range(self.n) if j != self.fiber]

    def density(self, sample: ChartSample) -> np.ndarray:
        B = self.base_indices()
        rows = np.concatenate([np.conj(sample.dzeta[:, B, :]), sample.dzeta], axis=1)
        return self.scale * self.F(sample.zeta) * np.linalg.det(rows) / np.prod(sample.extra["P"], axis=1)

    def scaled(self, c: float) -> FiberTestForm:
        return FiberTestForm(self.F, self.n, self.fiber, self.scale * c)


def fiber_limit(
    P: MultiPoly,
    form: FiberTestForm,
    base: BaseGrid,
    gamma: float = 0.0,
    fft_points: int = 32,
    cluster_tol: float = CLUSTER_TOL,
) -> complex:
    """Tube limit computed fiberwise: (-1)^(n-1) int_base 2 pi i sum Res(F / P^) dzetabar_B ^ dzeta_B.

    Base points whose fiber discriminant is below ``gamma`` are dropped.
    """
    n = P.nvars
    fiber = form.fiber
    B = form.base_indices()
    w, dw, wb = base.points()
    coeffs = fiber_coefficients(P, fiber)
    cvals = _eval_coeffs(coeffs, w)
    rows = np.concatenate([np.conj(dw), dw], axis=1)
    bden = np.linalg.det(rows) if rows.shape[1] else np.ones(len(wb))
    vals = np.zeros(len(wb), dtype=complex)
    for i in range(len(wb)):
        if gamma > 0 and discriminant_abs(cvals[i]) < gamma:
            continue

        def num(x, i=i):
            pts = np.empty((len(x), n), dtype=complex)
            pts[:, fiber] = x
            for q, j in enumerate(B):
                pts[:, j] = w[i, q]
            return form.scale * form.F(pts)

        vals[i] = fiber_residue(FiberResidueProblem(cvals[i], num, cluster_tol, fft_points))
    return complex((-1) ** (n - 1) * pairwise_sum(vals * bden * wb))


# ----------------------------------------------------------------- t -> 0

@dataclass
class LimitResult:
    limit: complex | np.ndarray
    error_estimate: float
    per_t: list
    table: list = field(default_factory=list)
    engine_agreement: dict | None = None

    def to_dict(self) -> dict:
        lim = np.asarray(self.limit)
        d = {
            "limit": [[complex(x).real, complex(x).imag] for x in lim.reshape(-1)],
            "error_estimate": self.error_estimate,
            "per_t": [[t] + [[complex(x).real, complex(x).imag] for x in np.asarray(v).reshape(-1)] for t, v in self.per_t],
        }
        if self.engine_agreement is not None:
            d["engine_agreement"] = self.engine_agreement
        return d


def extrapolate(ts, values, order: float) -> tuple:
    """Componentwise Richardson; returns (limit array, max error estimate, tables)."""
    vals = np.asarray(values)
    flat = vals.reshape(len(ts), -1)
    lims, errs, tables = [], [], []
    for k in range(flat.shape[1]):
        ex = richardson(ts, flat[:, k], order)
        lims.append(ex.limit)
        errs.append(ex.error_estimate)
        tables.append(ex.table)
    lim = np.array(lims).reshape(vals.shape[1:])
    return lim, max(errs) if errs else 0.0, tables


def residue_limit(
    spec: TubeSpec,
    integrand: Callable,
    path: AdmissiblePath,
    base: BaseGrid,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    res: TubeResolution = TubeResolution(),
    order: float | None = None,
    fiber_check: Callable | None = None,
    check_tol: float | None = None,
    workers: int = 1,
) -> LimitResult:
    """Tube integrals along eps = path(t), extrapolated to t = 0.

    ``fiber_check`` (optional) returns the fiber-engine value for comparison.
    """
    if path.m != spec.m:
        raise ValueError("path dimension must equal the number of polynomials")
    if order is None:
        order = min(path.exponents)
    per_t = []
    for t in t_grid:
        v = tube_integral(spec.with_radii(path(t)), integrand, base, res, workers=workers)
        per_t.append((float(t), v))
    lim, err, table = extrapolate([t for t, _ in per_t], [v for _, v in per_t], order)
    out = LimitResult(lim if np.ndim(lim) else complex(lim), err, per_t, table)
    if fiber_check is not None:
        ref = fiber_check()
        diff = float(np.max(np.abs(np.asarray(lim) - ref)))
        tol = check_tol if check_tol is not None else max(1e-6, 1e-4 * float(np.max(np.abs(ref))))
        out.engine_agreement = {"fiber": [complex(ref).real, complex(ref).imag] if np.ndim(ref) == 0 else None,
                                "difference": diff, "tol": tol, "agree": diff < tol}
    return out


def partial_tube_vanishing(
    spec: TubeSpec,
    integrand: Callable,
    path: AdmissiblePath,
    base: BaseGrid,
    t_grid: Sequence[float] = DEFAULT_T_GRID,
    res: TubeResolution = TubeResolution(),
    order: float | None = None,
    workers: int = 1,
) -> LimitResult:
    if spec.full:
        raise ValueError("partial tube needs a proper subset of active indices")
    return residue_limit(spec, integrand, path, base, t_grid, res, order, workers=workers)
