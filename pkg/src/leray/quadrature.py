"""Quadrature rules, admissible paths and Richardson extrapolation."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes in a parameter domain and positive weights summing to its volume."""

    nodes: np.ndarray  # (N, dim)
    weights: np.ndarray  # (N,)

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def integrate(self, values) -> complex:
        return pairwise_sum(np.asarray(values) * self.weights)


def pairwise_sum(values) -> complex:
    """Sum along the first axis in a fixed pairwise order."""
    v = np.asarray(values)
    if v.ndim == 0:
        return v[()]
    # numpy's add.reduce over a contiguous axis is pairwise and order-stable
    return np.add.reduce(np.ascontiguousarray(v), axis=0)


def tensor_rule(*rules: QuadratureRule) -> QuadratureRule:
    """Tensor product; the last rule varies fastest."""
    nodes = [r.nodes for r in rules]
    weights = [r.weights for r in rules]
    idx = np.array(list(itertools.product(*[range(r.size) for r in rules])), dtype=int)
    if idx.size == 0:
        return QuadratureRule(np.zeros((0, sum(r.dim for r in rules))), np.zeros(0))
    cols = [nodes[k][idx[:, k]] for k in range(len(rules))]
    w = np.ones(len(idx))
    for k in range(len(rules)):
        w = w * weights[k][idx[:, k]]
    return QuadratureRule(np.hstack(cols), w)


def gauss_legendre(npts: int, lo: float = 0.0, hi: float = 1.0) -> QuadratureRule:
    x, w = np.polynomial.legendre.leggauss(npts)
    half = 0.5 * (hi - lo)
    return QuadratureRule(((x + 1) * half + lo)[:, None], w * half)


def periodic_rule(npts: int, period: float = 2 * math.pi, offset: float = 0.0) -> QuadratureRule:
    """Equispaced trapezoidal rule on a full period."""
    h = period / npts
    return QuadratureRule((offset + h * np.arange(npts))[:, None], np.full(npts, h))


def sphere_rule(n: int, res: int) -> QuadratureRule:
    """Product rule on the angle chart of S^(2n-1).

    Parameters are ordered (phi_1, chi_1, ..., chi_{n-1}, phi_n, ..., phi_2)
    with phases on [0, 2pi) (``res`` trapezoidal points each) and polar angles
    on [0, pi/2] (``max(res // 2, 2)`` Gauss-Legendre points each).  This
    order gives the boundary orientation of the ball; see
    :func:`leray.geometry.sphere_point`.
    """
    if res < 4:
        raise ValueError("res must be >= 4")
    if n < 1:
        raise ValueError("n must be >= 1")
    phase = periodic_rule(res)
    polar = gauss_legendre(max(res // 2, 2), 0.0, math.pi / 2)
    rules = [phase] + [polar] * (n - 1) + [phase] * (n - 1)
    return tensor_rule(*rules)


def simplex_rule(m: int, degree: int) -> QuadratureRule:
    """Degree-exact rule on {mu >= 0, sum mu <= 1} (volume 1/m!).

    m = 1 is Gauss-Legendre on [0, 1].  For m >= 2 the rule is the collapsed
    (Duffy) Gauss-Jacobi product, which has positive weights and is exact for
    polynomials of total degree <= ``degree``.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if m == 0:
        return QuadratureRule(np.zeros((1, 0)), np.ones(1))
    npts = degree // 2 + 1
    if m == 1:
        return gauss_legendre(npts, 0.0, 1.0)
    from scipy.special import roots_jacobi

    # mu_1 = x_1, mu_2 = (1 - x_1) x_2, ... with Jacobian prod (1 - x_k)^(m - k)
    factors = []
    for k in range(m):
        a = m - 1 - k
        x, w = roots_jacobi(npts, a, 0.0)  # weight (1-x)^a on [-1, 1]
        t = (x + 1) / 2
        factors.append((t, w / 2 ** (a + 1)))
    idx = np.array(list(itertools.product(range(npts), repeat=m)))
    nodes = np.zeros((len(idx), m))
    weights = np.ones(len(idx))
    remaining = np.ones(len(idx))
    for k in range(m):
        t, w = factors[k]
        nodes[:, k] = remaining * t[idx[:, k]]
        remaining = remaining * (1 - t[idx[:, k]])
        weights = weights * w[idx[:, k]]
    return QuadratureRule(nodes, weights)


def contour_rule(radius: float, points: int, center: complex = 0j) -> QuadratureRule:
    """Equispaced nodes on a circle; weights are d(angle), nodes are complex points.

    ``integrate_dz`` below turns these into an approximation of a contour integral.
    """
    if points < 8:
        raise ValueError("points must be >= 8")
    ang = 2 * math.pi * np.arange(points) / points
    pts = center + radius * np.exp(1j * ang)
    return QuadratureRule(pts[:, None], np.full(points, 2 * math.pi / points))


def integrate_dz(rule: QuadratureRule, f, center: complex = 0j) -> complex:
    """Approximate the counterclockwise integral of f(z) dz over a contour rule."""
    z = rule.nodes[:, 0]
    dz_dt = 1j * (z - center)
    return complex(pairwise_sum(np.asarray(f(z)) * dz_dt * rule.weights))


# ------------------------------------------------------------ limit machinery

@dataclass(frozen=True)
class AdmissiblePath:
    """eps_j(t) = t^beta_j with beta_1 > ... > beta_m > 0."""

    exponents: tuple

    def __post_init__(self):
        b = tuple(float(x) for x in self.exponents)
        if any(x <= 0 for x in b):
            raise ValueError("exponents must be positive")
        if any(b[j] <= b[j + 1] for j in range(len(b) - 1)):
            raise ValueError("exponents must be strictly decreasing")
        object.__setattr__(self, "exponents", b)

    @classmethod
    def for_degree_bound(cls, m: int, L: int, scale: float = 1.0) -> AdmissiblePath:
        """beta_j = scale * (L+1)^(m-j), which satisfies beta_j > L beta_{j+1}."""
        return cls(tuple(scale * (L + 1) ** (m - j) for j in range(1, m + 1)))

    @property
    def m(self) -> int:
        return len(self.exponents)

    def __call__(self, t: float) -> tuple:
        return tuple(t ** b for b in self.exponents)

    def satisfies_bound(self, L: int) -> bool:
        b = self.exponents
        return all(b[j] > L * b[j + 1] for j in range(len(b) - 1))

    def ratios(self, t_grid: Sequence[float], L: int) -> np.ndarray:
        """eps_j(t) / eps_{j+1}(t)^L along the grid, shape (len(t_grid), m-1)."""
        out = []
        for t in t_grid:
            e = self(t)
            out.append([e[j] / e[j + 1] ** L for j in range(len(e) - 1)])
        return np.array(out)


DEFAULT_T_GRID = tuple(2.0 ** -k for k in range(3, 11))


@dataclass(frozen=True)
class Extrapolation:
    limit: complex
    error_estimate: float
    table: list  # Neville table rows for the report


def richardson(ts: Sequence[float], values: Sequence[complex], order: float = 1.0) -> Extrapolation:
    """Polynomial extrapolation of v(t) to t = 0 in the variable t**order.

    Uses Neville's scheme over all points; the error estimate is the
    difference of the last two diagonal extrapolants.
    """
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(values)
    if len(ts) < 3:
        raise ValueError("need at least 3 points")
    if np.any(np.diff(ts) >= 0):
        raise ValueError("t sequence must be strictly decreasing")
    x = ts ** order
    k = len(x)
    T = [list(vals.astype(complex))]
    for level in range(1, k):
        prev = T[-1]
        row = []
        for i in range(k - level):
            # extrapolate to x=0 from points i..i+level
            xi, xj = x[i], x[i + level]
            row.append((xj * prev[i] - xi * prev[i + 1]) / (xj - xi))
        T.append(row)
    limit = T[-1][0]
    prev_best = T[-2][-1]
    err = float(abs(limit - prev_best))
    table = [[[complex(v).real, complex(v).imag] for v in row] for row in T]
    return Extrapolation(complex(limit), err, table)
