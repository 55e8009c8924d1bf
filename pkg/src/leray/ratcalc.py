"""Finite sums of pole elements c * (xi_0 + xi' . a)^(-k) on the dual side.

This class is closed under d/dxi_j, under the homogeneous antiderivative in
xi_0 (for orders >= 2), and under the operators

    D_j = -(d/dxi_0)^(-1) d/dxi_j,

each of which acts on an element with base ``a`` as multiplication by a
scalar.  With s = xi_0 + xi'.a, D_j multiplies by -a_j.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .polycore import MultiPoly, eval_poly, factorial_rising

POLE_TOL = 1e-9
ZERO_TOL = 1e-12


class PoleProximity(ValueError):
    pass


class NonIntegrable(ValueError):
    """Order-1 elements have a logarithmic antiderivative in xi_0."""


@dataclass(frozen=True)
class PoleElement:
    coeff: complex
    base: tuple
    order: int = 1

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        object.__setattr__(self, "coeff", complex(self.coeff))
        object.__setattr__(self, "base", tuple(complex(x) for x in self.base))

    @property
    def extended_base(self) -> tuple:
        """(1, a_1, ..., a_n): the linear form is s = <xi, (1, a)>."""
        return (1 + 0j,) + self.base

    def to_record(self) -> dict:
        return {
            "re": self.coeff.real,
            "im": self.coeff.imag,
            "base": [[x.real, x.imag] for x in self.base],
            "order": self.order,
        }

    @classmethod
    def from_record(cls, rec: dict) -> PoleElement:
        base = tuple(complex(*b) if isinstance(b, (list, tuple)) else complex(b) for b in rec["base"])
        return cls(complex(rec.get("re", 0.0), rec.get("im", 0.0)), base, int(rec.get("order", 1)))


def _elem_key(e: PoleElement):
    return (e.order, tuple((x.real, x.imag) for x in e.base))


class RationalSum:
    """Canonical sum of pole elements over a common dimension n."""

    __slots__ = ("n", "elements")

    def __init__(self, n: int, elements: Iterable[PoleElement] = ()):
        merged: dict = {}
        for e in elements:
            if len(e.base) != n:
                raise ValueError(f"base {e.base} has length {len(e.base)}, expected {n}")
            key = (e.base, e.order)
            merged[key] = merged.get(key, 0j) + e.coeff
        elems = [PoleElement(c, b, k) for (b, k), c in merged.items() if c != 0]
        elems.sort(key=_elem_key)
        self.n = n
        self.elements = tuple(elems)

    @classmethod
    def single(cls, base: Sequence[complex], coeff: complex = 1, order: int = 1) -> RationalSum:
        return cls(len(base), [PoleElement(coeff, tuple(base), order)])

    @property
    def is_zero(self) -> bool:
        return not self.elements

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __add__(self, other: RationalSum) -> RationalSum:
        return RationalSum(self.n, self.elements + other.elements)

    def __sub__(self, other: RationalSum) -> RationalSum:
        return self + other.scale(-1)

    def scale(self, c: complex) -> RationalSum:
        return RationalSum(self.n, [PoleElement(e.coeff * c, e.base, e.order) for e in self.elements])

    def __rmul__(self, c):
        return self.scale(c)

    def __eq__(self, other):
        if not isinstance(other, RationalSum):
            return NotImplemented
        return self.n == other.n and self.elements == other.elements

    def __repr__(self):
        return f"RationalSum(n={self.n}, {list(self.elements)!r})"

    def max_abs_diff(self, other: RationalSum) -> float:
        d = self - other
        return max((abs(e.coeff) for e in d.elements), default=0.0)

    def orders(self) -> set:
        return {e.order for e in self.elements}

    def to_records(self) -> list:
        return [e.to_record() for e in self.elements]

    @classmethod
    def from_records(cls, n: int, records: Iterable[dict]) -> RationalSum:
        return cls(n, [PoleElement.from_record(r) for r in records])


# --------------------------------------------------------------- evaluation

def _linear_form(e: PoleElement, xi: np.ndarray) -> np.ndarray:
    return xi[..., 0] + xi[..., 1:] @ np.asarray(e.base, dtype=complex)


def eval_rat(f: RationalSum, xi, pole_tol: float = POLE_TOL):
    """Evaluate at one dual point or (vectorized) at an array of shape (..., n+1)."""
    arr = np.asarray(xi, dtype=complex)
    if arr.shape[-1] != f.n + 1:
        raise ValueError(f"xi has trailing dimension {arr.shape[-1]}, expected {f.n + 1}")
    out = np.zeros(arr.shape[:-1], dtype=complex)
    for e in f.elements:
        s = _linear_form(e, arr)
        if np.any(np.abs(s) <= pole_tol):
            raise PoleProximity(f"|xi_0 + xi'.a| <= {pole_tol} for base {e.base}")
        out = out + e.coeff * s ** (-e.order)
    if arr.ndim == 1:
        return complex(out)
    return out


# ------------------------------------------------------------ operator calculus

def d_xi(f: RationalSum, j: int) -> RationalSum:
    """d/dxi_j, j = 0..n:  c s^-k -> -k c a~_j s^-(k+1), a~ = (1, a)."""
    if not 0 <= j <= f.n:
        raise IndexError(f"index {j} out of range 0..{f.n}")
    return RationalSum(
        f.n,
        [PoleElement(-e.order * e.coeff * e.extended_base[j], e.base, e.order + 1) for e in f.elements],
    )


def antiderivative0(f: RationalSum) -> RationalSum:
    """The unique homogeneous F with dF/dxi_0 = f:  c s^-k -> -c/(k-1) s^-(k-1)."""
    for e in f.elements:
        if e.order < 2:
            raise NonIntegrable(f"element with base {e.base} has order 1")
    return RationalSum(
        f.n, [PoleElement(-e.coeff / (e.order - 1), e.base, e.order - 1) for e in f.elements]
    )


def apply_D(f: RationalSum, j: int) -> RationalSum:
    """D_j for j = 1..n, closed form: multiplication by -a_j per element."""
    if not 1 <= j <= f.n:
        raise IndexError(f"index {j} out of range 1..{f.n}")
    return RationalSum(f.n, [PoleElement(-e.base[j - 1] * e.coeff, e.base, e.order) for e in f.elements])


def apply_D_composed(f: RationalSum, j: int) -> RationalSum:
    """D_j by its definition -(d/dxi_0)^(-1) d/dxi_j; used to check the closed form."""
    return antiderivative0(d_xi(f, j)).scale(-1)


def apply_poly_D(R: MultiPoly, f: RationalSum) -> RationalSum:
    """R(D) for a polynomial R in n variables: element with base a times R(-a)."""
    if R.nvars != f.n:
        raise ValueError("polynomial and rational sum dimensions differ")
    return RationalSum(
        f.n,
        [PoleElement(eval_poly(R, [-x for x in e.base]) * e.coeff, e.base, e.order) for e in f.elements],
    )


def apply_system(P: MultiPoly, f: RationalSum, zero_tol: float = ZERO_TOL) -> RationalSum:
    """P~(d/dxi) for homogeneous P~ of degree d in n+1 variables.

    c s^-k -> (-1)^d k(k+1)...(k+d-1) P~(1, a) c s^-(k+d).  Elements whose base
    satisfies |P~(1, a)| < zero_tol are treated as exact solutions.
    """
    if P.nvars != f.n + 1:
        raise ValueError("system polynomial must have n+1 variables")
    if not P.is_homogeneous():
        raise ValueError("system polynomial must be homogeneous")
    d = max(P.degree(), 0)
    out = []
    for e in f.elements:
        val = eval_poly(P, e.extended_base)
        if abs(val) < zero_tol:
            continue
        out.append(PoleElement((-1) ** d * factorial_rising(e.order, d) * val * e.coeff, e.base, e.order + d))
    return RationalSum(f.n, out)


def apply_system_iterated(P: MultiPoly, f: RationalSum) -> RationalSum:
    """P~(d/dxi) by repeated d_xi on every monomial; reference for ``apply_system``."""
    if P.nvars != f.n + 1:
        raise ValueError("system polynomial must have n+1 variables")
    out = RationalSum(f.n)
    for exps, c in P.terms.items():
        g = f
        for j, k in enumerate(exps):
            for _ in range(k):
                g = d_xi(g, j)
        out = out + g.scale(c)
    return out


def system_residual(P: MultiPoly, f: RationalSum) -> float:
    """max |P~(1, a)| * |c| over elements, without the zero cutoff."""
    return max((abs(eval_poly(P, e.extended_base) * e.coeff) for e in f.elements), default=0.0)


def eta0_deriv(f: RationalSum, r: int) -> RationalSum:
    """r-fold d/dxi_0 in closed form."""
    if r < 0:
        raise ValueError("r must be >= 0")
    return RationalSum(
        f.n,
        [PoleElement((-1) ** r * factorial_rising(e.order, r) * e.coeff, e.base, e.order + r) for e in f.elements],
    )


def homogeneity(f: RationalSum) -> int | None:
    """Common homogeneity degree, or None for mixed orders / the zero sum."""
    orders = f.orders()
    if len(orders) != 1:
        return None
    return -orders.pop()


def fundamental_sum(bases: Sequence[Sequence[complex]], coeffs: Sequence[complex] | None = None) -> RationalSum:
    """Sum of order-1 elements c_i / (xi_0 + xi'.a_i)."""
    if coeffs is None:
        coeffs = [1.0] * len(bases)
    n = len(bases[0])
    return RationalSum(n, [PoleElement(c, tuple(a), 1) for a, c in zip(bases, coeffs)])


__all__ = [
    "PoleElement", "RationalSum", "PoleProximity", "NonIntegrable", "eval_rat", "d_xi",
    "antiderivative0", "apply_D", "apply_D_composed", "apply_poly_D", "apply_system",
    "system_residual", "eta0_deriv", "homogeneity", "fundamental_sum",
]
