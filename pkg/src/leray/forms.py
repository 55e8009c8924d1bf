"""Numerical exterior algebra on parameter charts.

A chart sample carries, at each quadrature node, the point zeta (N, n), its
derivatives along the D real chart parameters (N, n, D), optional simplex
coordinates mu (N, m) with derivatives, and quadrature weights.  One-forms
are represented by their rows of values on the coordinate vectors, so a
top-degree wedge of one-forms pulls back to a determinant.

The Leray form omega'_0(theta) = sum_j (-1)^(j-1) theta_j wedge_{i != j} dtheta_i
wedged with further one-forms is evaluated as one bordered determinant, see
:func:`leray_density`.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels


@dataclass
class ChartSample:
    zeta: np.ndarray  # (N, n)
    dzeta: np.ndarray  # (N, n, D)
    weights: np.ndarray  # (N,)
    mu: np.ndarray | None = None  # (N, m)
    dmu: np.ndarray | None = None  # (N, m, D)
    extra: dict = field(default_factory=dict)
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.dzeta.shape[2]

    @property
    def n(self) -> int:
        return self.zeta.shape[1]

    def with_simplex(self, rule) -> ChartSample:
        """Product with a simplex rule; the simplex parameters come last."""
        m = rule.dim
        Ng, Nm = self.size, rule.size
        D = self.dim + m
        dz = np.zeros((Ng * Nm, self.n, D), dtype=complex)
        dz[:, :, : self.dim] = np.repeat(self.dzeta, Nm, axis=0)
        mu = np.tile(rule.nodes, (Ng, 1))
        dmu = np.zeros((Ng * Nm, m, D))
        for k in range(m):
            dmu[:, k, self.dim + k] = 1.0
        extra = {k: np.repeat(v, Nm, axis=0) for k, v in self.extra.items()}
        return ChartSample(
            np.repeat(self.zeta, Nm, axis=0),
            dz,
            np.repeat(self.weights, Nm) * np.tile(rule.weights, Ng),
            mu,
            dmu,
            extra,
        )


# --------------------------------------------------------------- scalar fields

class ScalarField:
    """Complex function of chart parameters with an (optional) analytic gradient.

    Without an analytic gradient, centered differences with step ``h`` are used.
    """

    def __init__(self, evaluator: Callable, gradient: Callable | None = None, h: float = 1e-6):
        self.evaluator = evaluator
        self._gradient = gradient
        self.h = h

    def __call__(self, params):
        return self.evaluator(np.asarray(params, dtype=float))

    def gradient(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if self._gradient is not None:
            return self._gradient(params)
        return fd_gradient(self.evaluator, params, self.h)

    @property
    def analytic(self) -> bool:
        return self._gradient is not None


def fd_gradient(f, params, h=1e-6) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    D = params.shape[1]
    cols = []
    for d in range(D):
        e = np.zeros(D)
        e[d] = h
        cols.append((np.asarray(f(params + e)) - np.asarray(f(params - e))) / (2 * h))
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------- form values

def leray_density(theta, dtheta, pre=None, post=None) -> np.ndarray:
    """Coefficient of pre ^ omega'_0(theta) ^ post on the coordinate frame.

    theta (N, n), dtheta (N, n, D), pre (N, a, D), post (N, b, D) with
    a + (n - 1) + b = D.  Returns (N,) complex.
    """
    theta = np.asarray(theta, dtype=complex)
    N, n = theta.shape
    D = dtheta.shape[2]
    pre = np.zeros((N, 0, D), dtype=complex) if pre is None else np.asarray(pre, dtype=complex)
    post = np.zeros((N, 0, D), dtype=complex) if post is None else np.asarray(post, dtype=complex)
    if pre.shape[1] + n - 1 + post.shape[1] != D:
        raise ValueError(
            f"form degree {pre.shape[1] + n - 1 + post.shape[1]} does not match chart dimension {D}"
        )
    return kernels.leray_density(theta, np.asarray(dtheta, dtype=complex), pre, post)


def leray_density_literal(theta, dtheta, pre=None, post=None) -> np.ndarray:
    """Term-by-term expansion sum_j (-1)^(j-1) theta_j det[pre; dtheta_{i!=j}; post]."""
    theta = np.asarray(theta, dtype=complex)
    N, n = theta.shape
    D = dtheta.shape[2]
    pre = np.zeros((N, 0, D)) if pre is None else pre
    post = np.zeros((N, 0, D)) if post is None else post
    out = np.zeros(N, dtype=complex)
    for j in range(n):
        rows = [pre, np.delete(dtheta, j, axis=1), post]
        M = np.concatenate(rows, axis=1)
        out += (-1) ** j * theta[:, j] * np.linalg.det(M)
    return out


@dataclass
class FormValue:
    """pre-rows ^ omega'_0(theta) ^ post-rows, as an alternating form on frames.

    ``theta=None`` means a plain wedge of the rows.
    """

    theta: np.ndarray | None
    dtheta: np.ndarray | None
    pre: np.ndarray | None = None
    post: np.ndarray | None = None

    @property
    def degree(self) -> int:
        a = 0 if self.pre is None else self.pre.shape[1]
        b = 0 if self.post is None else self.post.shape[1]
        k = 0 if self.theta is None else self.theta.shape[1] - 1
        return a + k + b

    @property
    def rows_dim(self) -> int:
        for x in (self.dtheta, self.pre, self.post):
            if x is not None:
                return x.shape[2]
        return 0

    def evaluate(self, frame) -> np.ndarray:
        """Value on a frame of tangent vectors, frame shape (N, D, degree) or (D, degree)."""
        frame = np.asarray(frame)
        N = self._n_nodes()
        if frame.ndim == 2:
            frame = np.broadcast_to(frame, (N,) + frame.shape)

        def apply(rows):
            return None if rows is None else np.einsum("nrd,ndk->nrk", rows, frame)

        if self.theta is None:
            M = np.concatenate([x for x in (apply(self.pre), apply(self.post)) if x is not None], axis=1)
            return np.linalg.det(M)
        return leray_density(self.theta, apply(self.dtheta), apply(self.pre), apply(self.post))

    def density(self) -> np.ndarray:
        """Pullback coefficient on the coordinate frame; needs degree == D."""
        D = self.rows_dim
        if self.degree != D:
            raise ValueError(f"form degree {self.degree} != chart dimension {D}")
        if self.theta is None:
            M = np.concatenate([x for x in (self.pre, self.post) if x is not None], axis=1)
            return np.linalg.det(M)
        return leray_density(self.theta, self.dtheta, self.pre, self.post)

    def _n_nodes(self):
        for x in (self.theta, self.pre, self.post):
            if x is not None:
                return x.shape[0]
        raise ValueError("empty form")


def omega0_prime(theta, dtheta) -> FormValue:
    return FormValue(np.asarray(theta, dtype=complex), np.asarray(dtheta, dtype=complex))


def dzeta_rows(sample: ChartSample) -> np.ndarray:
    return sample.dzeta


def eta_prime_jet(body, sample: ChartSample):
    """eta'(zeta) and its derivatives along the chart parameters."""
    from .geometry import grad_rho

    key = ("eta", body)
    if key not in sample.cache:
        e = grad_rho(body, sample.zeta)
        de = np.conj(sample.dzeta) / (body.r ** 2)[None, :, None]
        sample.cache[key] = (e, de)
    return sample.cache[key]


def drho_row(body, sample: ChartSample) -> np.ndarray:
    """d rho on the coordinate vectors, (N, D) real."""
    e, _ = eta_prime_jet(body, sample)
    return 2 * np.real(np.einsum("nj,njd->nd", e, sample.dzeta))


def dphi_row(body, delta: float, sample: ChartSample) -> np.ndarray:
    from .geometry import rho, step_deriv

    key = ("dphi", body, float(delta))
    if key not in sample.cache:
        s = rho(body, sample.zeta) / delta
        sample.cache[key] = (step_deriv(s) / delta)[:, None] * drho_row(body, sample)
    return sample.cache[key]


def omega_prime_eta(body, convention, sample: ChartSample) -> FormValue:
    """omega'(eta) ^ dz := omega'_0(eta') ^ dz_1 ^ ... ^ dz_n on a level-set chart."""
    e, de = eta_prime_jet(body, sample)
    return FormValue(e, de, None, sample.dzeta)


def pullback_integrate(form: FormValue, weights, prefactor=None) -> complex | np.ndarray:
    """sum_nodes weight * prefactor * form(coordinate frame).

    ``prefactor`` may be (N,) or (N, K); the result is scalar or (K,).
    """
    from .quadrature import pairwise_sum

    dens = form.density() * np.asarray(weights)
    if prefactor is None:
        return complex(pairwise_sum(dens))
    pf = np.asarray(prefactor)
    if pf.ndim == 1:
        return complex(pairwise_sum(dens * pf))
    return pairwise_sum(dens[:, None] * pf)


# ----------------------------------------------------------------- theta fields

def hefer_jet(hefer, sample: ChartSample, point) -> tuple:
    """Q_j(zeta, point) and derivatives along the chart, (N, n) and (N, n, D)."""
    from .polycore import eval_poly_many, partial

    n = sample.n
    point = np.broadcast_to(np.asarray(point, dtype=complex), sample.zeta.shape)
    pts = np.concatenate([sample.zeta, point], axis=1)
    vals = np.empty((sample.size, n), dtype=complex)
    grads = np.zeros((sample.size, n, sample.dim), dtype=complex)
    for j, Q in enumerate(hefer.components):
        vals[:, j] = eval_poly_many(Q, pts)
        for l in range(n):
            dQ = partial(Q, l)
            if dQ.terms:
                grads[:, j, :] += eval_poly_many(dQ, pts)[:, None] * sample.dzeta[:, l, :]
    return vals, grads


def combine_theta(sample: ChartSample, q_jets: Sequence[tuple], b, db):
    """theta = sum_k mu_k Q^(k) + (1 - sum mu) b with its derivative along the chart."""
    mu = sample.mu if sample.mu is not None else np.zeros((sample.size, 0))
    dmu = sample.dmu if sample.dmu is not None else np.zeros((sample.size, 0, sample.dim))
    m = mu.shape[1]
    if len(q_jets) != m:
        raise ValueError("number of Hefer blocks must equal the simplex dimension")
    mu0 = 1.0 - mu.sum(axis=1)
    dmu0 = -dmu.sum(axis=1)
    theta = mu0[:, None] * b
    dtheta = mu0[:, None, None] * db + b[:, :, None] * dmu0[:, None, :]
    for k, (q, dq) in enumerate(q_jets):
        theta = theta + mu[:, k, None] * q
        dtheta = dtheta + mu[:, k, None, None] * dq + q[:, :, None] * dmu[:, k, None, :]
    return theta, dtheta


def theta_numeric(sample: ChartSample, hefers, body, z):
    """theta(mu, zeta, z) with b = eta'(zeta) / <eta'(zeta) . (zeta - z)>."""
    z = np.asarray(z, dtype=complex)
    e, de = eta_prime_jet(body, sample)
    w = sample.zeta - z
    L = np.sum(e * w, axis=1)
    dL = np.einsum("njd,nj->nd", de, w) + np.einsum("nj,njd->nd", e, sample.dzeta)
    b = e / L[:, None]
    db = de / L[:, None, None] - e[:, :, None] * (dL / L[:, None] ** 2)[:, None, :]
    q = [hefer_jet(H, sample, z) for H in hefers]
    return combine_theta(sample, q, b, db)


def theta_operator(sample: ChartSample, hefers, body, point):
    """theta(mu, zeta, D) on one pole element: D replaced by its substitution point.

    Here b = eta'(zeta) without normalization; the pairing enters through the
    eta_0-derivative of the boundary datum.
    """
    e, de = eta_prime_jet(body, sample)
    q = [hefer_jet(H, sample, point) for H in hefers]
    return combine_theta(sample, q, e, de)


def dump_kernel_csv(path, sample: ChartSample, density, label: str = "") -> None:
    density = np.asarray(density)
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if fh.tell() == 0:
            w.writerow(["label", "node"] + [f"zeta{j + 1}_{p}" for j in range(sample.n) for p in ("re", "im")]
                       + ["weight", "kernel_re", "kernel_im"])
        for i in range(sample.size):
            row = [label, i]
            for j in range(sample.n):
                row += [repr(float(sample.zeta[i, j].real)), repr(float(sample.zeta[i, j].imag))]
            row += [repr(float(sample.weights[i])), repr(float(density[i].real)), repr(float(density[i].imag))]
            w.writerow(row)
