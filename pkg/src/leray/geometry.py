"""Ellipsoidal bodies G = {rho <= 0}, the eta map, cutoffs and level-set charts."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .forms import ChartSample
from .quadrature import QuadratureRule, sphere_rule

DUAL_TOL = 1e-6


class DegenerateGradient(ValueError):
    pass


@dataclass(frozen=True)
class EtaConvention:
    """eta_0 = sign * sum_j zeta_j eta_j.

    sign = -1 gives <eta(z) . (1, z)> = 0; sign = +1 is the other reading.
    """

    sign: int = -1

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")


@dataclass(frozen=True)
class ConvexBody:
    """rho(z) = sum_j |(z_j - c_j) / r_j|^2 - 1."""

    center: tuple
    radii: tuple
    kind: str = field(default="ellipsoid")

    def __post_init__(self):
        c = tuple(complex(x) for x in self.center)
        r = tuple(float(x) for x in self.radii)
        if len(c) != len(r):
            raise ValueError("center and radii lengths differ")
        if any(x <= 0 for x in r):
            raise ValueError("radii must be positive")
        kind = "ball" if len(set(r)) == 1 else "ellipsoid"
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "kind", kind)

    @classmethod
    def ball(cls, n: int, radius: float = 1.0, center: Sequence[complex] | None = None) -> ConvexBody:
        return cls(tuple(center) if center is not None else (0j,) * n, (radius,) * n)

    @property
    def n(self) -> int:
        return len(self.radii)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.center, dtype=complex)

    @property
    def r(self) -> np.ndarray:
        return np.asarray(self.radii, dtype=float)

    def to_dict(self) -> dict:
        return {
            "type": self.kind,
            "center": [[x.real, x.imag] for x in self.center],
            "radii": list(self.radii),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ConvexBody:
        center = [complex(*x) if isinstance(x, (list, tuple)) else complex(x) for x in d["center"]]
        radii = d["radii"]
        if isinstance(radii, (int, float)):
            radii = [radii] * len(center)
        return cls(tuple(center), tuple(radii))

    def shrunk(self, factor: float) -> ConvexBody:
        return ConvexBody(self.center, tuple(factor * x for x in self.radii))


def rho(body: ConvexBody, z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    w = (z - body.c) / body.r
    return np.sum(np.abs(w) ** 2, axis=-1) - 1.0


def grad_rho(body: ConvexBody, z) -> np.ndarray:
    """Holomorphic gradient d rho / d zeta_j = conj(zeta_j - c_j) / r_j^2."""
    z = np.asarray(z, dtype=complex)
    return np.conj(z - body.c) / body.r ** 2


def eta(body: ConvexBody, convention: EtaConvention, z, check: bool = True) -> np.ndarray:
    """(eta_0, eta_1, ..., eta_n) along the last axis."""
    z = np.asarray(z, dtype=complex)
    g = grad_rho(body, z)
    if check and np.any(np.linalg.norm(g, axis=-1) < 1e-12):
        raise DegenerateGradient("grad rho vanishes")
    e0 = convention.sign * np.sum(z * g, axis=-1)
    return np.concatenate([e0[..., None], g], axis=-1)


# ---------------------------------------------------------------- cutoff

def _log_ratio(s):
    # log(f(1-s)/f(s)) with f(x) = exp(-1/x)
    return 1.0 / s - 1.0 / (1.0 - s)


def step(s) -> np.ndarray:
    """Smooth monotone step: 1 for s <= 0, 0 for s >= 1."""
    s = np.asarray(s, dtype=float)
    out = np.where(s <= 0, 1.0, 0.0)
    mid = (s > 0) & (s < 1)
    sm = s[mid]
    with np.errstate(over="ignore"):
        out[mid] = 1.0 / (1.0 + np.exp(-_log_ratio(sm)))
    return out


def step_deriv(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    mid = (s > 0) & (s < 1)
    sm = s[mid]
    lr = _log_ratio(sm)
    # psi = sigmoid(lr), psi' = sigmoid' * lr'
    with np.errstate(over="ignore"):
        sig = 1.0 / (1.0 + np.exp(-lr))
    dlr = -1.0 / sm ** 2 - 1.0 / (1.0 - sm) ** 2
    out[mid] = sig * (1 - sig) * dlr
    return out


def cutoff(body: ConvexBody, delta: float, z) -> np.ndarray:
    if delta <= 0:
        raise ValueError("delta must be positive")
    return step(rho(body, z) / delta)


def dcutoff(body: ConvexBody, delta: float, z) -> np.ndarray:
    """(1,0)-coefficients d phi / d zeta_j; the (0,1) part is their conjugate."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    z = np.asarray(z, dtype=complex)
    return (step_deriv(rho(body, z) / delta) / delta)[..., None] * grad_rho(body, z)


def dcutoff_real(body: ConvexBody, delta: float, z) -> np.ndarray:
    """Real gradient ordered (x_1, y_1, ..., x_n, y_n)."""
    d = dcutoff(body, delta, z)
    out = np.empty(d.shape[:-1] + (2 * d.shape[-1],))
    out[..., 0::2] = 2 * d.real
    out[..., 1::2] = -2 * d.imag
    return out


# ----------------------------------------------------------------- charts

def sphere_point(n: int, params: np.ndarray):
    """Unit-sphere points and d/dparams.

    Parameters are ordered (phi_1, chi_1..chi_{n-1}, phi_n, ..., phi_2); with
    the outward normal first this order is positive in C^n for every n.
    Returns (u, du) of shapes (N, n) and (N, n, 2n-1).
    """
    N = params.shape[0]
    phi = np.empty((N, n))
    phi[:, 0] = params[:, 0]
    chi = params[:, 1:n]
    phi[:, 1:] = params[:, n:][:, ::-1]
    D = 2 * n - 1
    # moduli on the positive orthant of S^(n-1)
    x = np.ones((N, n))
    dx = np.zeros((N, n, n - 1))  # d x_j / d chi_k
    sin_prod = np.ones(N)
    sin_prod_d = np.zeros((N, n - 1))  # d(sin_prod)/d chi_k, carried along
    for j in range(n):
        if j < n - 1:
            cj, sj = np.cos(chi[:, j]), np.sin(chi[:, j])
            x[:, j] = sin_prod * cj
            dx[:, j, :] = sin_prod_d * cj[:, None]
            dx[:, j, j] = -sin_prod * sj
            new_d = sin_prod_d * sj[:, None]
            new_d[:, j] = sin_prod * cj
            sin_prod, sin_prod_d = sin_prod * sj, new_d
        else:
            x[:, j] = sin_prod
            dx[:, j, :] = sin_prod_d
    ph = np.exp(1j * phi)
    u = x * ph
    du = np.zeros((N, n, D), dtype=complex)
    # parameter columns: 0 -> phi_1, 1..n-1 -> chi, then phi_n down to phi_2
    du[:, 0, 0] = 1j * u[:, 0]
    for k in range(n - 1):
        du[:, :, 1 + k] = dx[:, :, k] * ph
        du[:, n - 1 - k, n + k] = 1j * u[:, n - 1 - k]
    return u, du


def level_chart(body: ConvexBody, nu: float, rule: QuadratureRule) -> ChartSample:
    """The level set {rho = -nu} sampled on a sphere rule, boundary orientation."""
    if not 0 <= nu < 1:
        raise ValueError("nu must satisfy 0 <= nu < 1")
    u, du = sphere_point(body.n, rule.nodes)
    R = math.sqrt(1.0 - nu)
    scale = R * body.r
    z = body.c + u * scale
    dz = du * scale[None, :, None]
    return ChartSample(z, dz, rule.weights)


def shell_chart(body: ConvexBody, delta: float, radial: QuadratureRule, sphere: QuadratureRule) -> ChartSample:
    """The shell {0 <= rho <= delta} with parameters (s, sphere angles), rho = delta*s."""
    s = radial.nodes[:, 0]
    n = body.n
    u, du = sphere_point(n, sphere.nodes)
    Ns, Nu = len(s), len(u)
    R = np.sqrt(1.0 + delta * s)
    dR = delta / (2 * R)
    Rg = np.repeat(R, Nu)
    dRg = np.repeat(dR, Nu)
    ug = np.tile(u, (Ns, 1))
    dug = np.tile(du, (Ns, 1, 1))
    z = body.c + (Rg[:, None] * ug) * body.r
    D = 2 * n
    dz = np.zeros((Ns * Nu, n, D), dtype=complex)
    dz[:, :, 0] = dRg[:, None] * ug * body.r
    dz[:, :, 1:] = Rg[:, None, None] * dug * body.r[None, :, None]
    w = np.repeat(radial.weights, Nu) * np.tile(sphere.weights, Ns)
    return ChartSample(z, dz, w)


def boundary_samples(body: ConvexBody, samples: int) -> np.ndarray:
    res = 4
    while True:
        rule = sphere_rule(body.n, res)
        if rule.size >= samples:
            break
        res *= 2
    return level_chart(body, 0.0, rule).zeta


def in_dual(body: ConvexBody, xi, samples: int = 1024, dual_tol: float = DUAL_TOL) -> dict:
    """Sampled margin min |xi_0 + xi'.u| over u in bG.

    Membership also needs the hyperplane to miss G, which a finite sample of
    bG cannot see when it passes between nodes; the closed-form distance on
    the ellipsoid decides that part.
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    xi = np.asarray(xi, dtype=complex)
    u = boundary_samples(body, samples)
    margin = float(np.min(np.abs(xi[0] + u @ xi[1:])))
    member = margin > dual_tol and dual_margin_exact(body, xi) > 0
    return {"member": member, "margin": margin}


def dual_margin_exact(body: ConvexBody, xi) -> float:
    """min over bG of |xi_0 + xi'.u| when the hyperplane misses G, else 0."""
    xi = np.asarray(xi, dtype=complex)
    lin = xi[0] + xi[1:] @ body.c
    spread = float(np.linalg.norm(xi[1:] * body.r))
    return max(abs(lin) - spread, 0.0)


def orientation_sign(sample: ChartSample, normal=None) -> np.ndarray:
    """Sign of the real Jacobian of (normal, chart tangents) in (x1, y1, ...) order.

    For a full-dimensional chart pass ``normal=None``.
    """
    dz = sample.dzeta
    N, n, D = dz.shape
    cols = np.empty((N, 2 * n, D))
    cols[:, 0::2, :] = dz.real
    cols[:, 1::2, :] = dz.imag
    if normal is not None:
        nr = np.empty((N, 2 * n, 1))
        nr[:, 0::2, 0] = normal.real
        nr[:, 1::2, 0] = normal.imag
        cols = np.concatenate([nr, cols], axis=2)
    return np.sign(np.linalg.det(cols))
