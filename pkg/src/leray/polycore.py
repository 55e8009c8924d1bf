"""Sparse multivariate polynomials with complex coefficients.

Polynomials are immutable maps from exponent tuples to complex coefficients.
Terms are kept in graded lexicographic order (highest total degree first) so
that evaluation order and serialized output are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class ParseError(ValueError):
    """Syntax error in a polynomial expression; ``pos`` is a 0-based offset."""

    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


def _term_key(exps):
    return (-sum(exps), tuple(-e for e in exps))


@dataclass(frozen=True)
class MultiPoly:
    nvars: int
    terms: Mapping[tuple, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for exps, c in self.terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise ValueError(f"exponent {exps} does not match nvars={self.nvars}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent {exps}")
            c = complex(c)
            if c != 0:
                clean[exps] = clean.get(exps, 0j) + c
        clean = {k: v for k, v in clean.items() if v != 0}
        ordered = dict(sorted(clean.items(), key=lambda kv: _term_key(kv[0])))
        object.__setattr__(self, "terms", ordered)

    # construction helpers
    @classmethod
    def zero(cls, nvars: int) -> MultiPoly:
        return cls(nvars, {})

    @classmethod
    def const(cls, nvars: int, c: complex) -> MultiPoly:
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, j: int) -> MultiPoly:
        """The coordinate function of variable index ``j`` (0-based)."""
        exps = [0] * nvars
        exps[j] = 1
        return cls(nvars, {tuple(exps): 1})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def degree_in(self, j: int) -> int:
        if not self.terms:
            return -1
        return max(e[j] for e in self.terms)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def constant_term(self) -> complex:
        return self.terms.get((0,) * self.nvars, 0j)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError("nvars mismatch")
            return other
        return MultiPoly.const(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0j) + v
        return MultiPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.nvars, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for ka, va in self.terms.items():
            for kb, vb in other.terms.items():
                k = tuple(a + b for a, b in zip(ka, kb))
                out[k] = out.get(k, 0j) + va * vb
        return MultiPoly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        result = MultiPoly.const(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.nvars == other.nvars and dict(self.terms) == dict(other.terms)

    def __hash__(self):
        return hash((self.nvars, tuple(self.terms.items())))

    def __repr__(self):
        return f"MultiPoly({self.nvars}, {format_poly(self)!r})"

    def __call__(self, *point):
        return eval_poly(self, point)

    def max_abs_diff(self, other: MultiPoly) -> float:
        d = self - other
        return max((abs(v) for v in d.terms.values()), default=0.0)

    def to_records(self) -> list:
        """Sorted ``[exponents, re, im]`` records for the report format."""
        return [[list(k), v.real, v.imag] for k, v in self.terms.items()]

    @classmethod
    def from_records(cls, nvars: int, records: Iterable) -> MultiPoly:
        return cls(nvars, {tuple(r[0]): complex(r[1], r[2]) for r in records})


# ---------------------------------------------------------------- parsing

class _Parser:
    def __init__(self, text: str, nvars: int, first_index: int):
        self.s = text
        self.i = 0
        self.nvars = nvars
        self.first = first_index

    def peek(self):
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1
        return self.s[self.i] if self.i < len(self.s) else ""

    def parse(self) -> MultiPoly:
        if not self.peek():
            raise ParseError("empty expression", self.i)
        p = self.expr()
        if self.peek():
            raise ParseError(f"unexpected {self.peek()!r}", self.i)
        return p

    def expr(self):
        p = self.term()
        while self.peek() in ("+", "-"):
            op = self.s[self.i]
            self.i += 1
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek() == "*":
            self.i += 1
            p = p * self.unary()
        return p

    def unary(self):
        c = self.peek()
        if c in ("+", "-"):
            self.i += 1
            p = self.unary()
            return p if c == "+" else -p
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.i += 1
            self.peek()
            start = self.i
            while self.i < len(self.s) and self.s[self.i].isdigit():
                self.i += 1
            if start == self.i:
                raise ParseError("expected integer exponent", start)
            base = base ** int(self.s[start:self.i])
        return base

    def atom(self):
        c = self.peek()
        pos = self.i
        if c == "(":
            self.i += 1
            p = self.expr()
            if self.peek() != ")":
                raise ParseError("expected ')'", self.i)
            self.i += 1
            return p
        if c.isdigit() or c == ".":
            while self.i < len(self.s) and (self.s[self.i].isdigit() or self.s[self.i] in ".eE"):
                if self.s[self.i] in "eE" and self.i + 1 < len(self.s) and self.s[self.i + 1] in "+-":
                    self.i += 1
                self.i += 1
            try:
                val = float(self.s[pos:self.i])
            except ValueError:
                raise ParseError(f"bad number {self.s[pos:self.i]!r}", pos) from None
            if self.i < len(self.s) and self.s[self.i] == "i":
                self.i += 1
                return MultiPoly.const(self.nvars, 1j * val)
            return MultiPoly.const(self.nvars, val)
        if c == "i":
            self.i += 1
            return MultiPoly.const(self.nvars, 1j)
        if c == "z":
            self.i += 1
            start = self.i
            while self.i < len(self.s) and self.s[self.i].isdigit():
                self.i += 1
            if start == self.i:
                raise ParseError("expected variable index after 'z'", start)
            idx = int(self.s[start:self.i]) - self.first
            if not 0 <= idx < self.nvars:
                raise ParseError(f"variable z{self.s[start:self.i]} out of range", pos)
            return MultiPoly.var(self.nvars, idx)
        raise ParseError(f"unexpected {c!r}" if c else "unexpected end of input", pos)


def parse_poly(expr: str, nvars: int, homogeneous: bool = False) -> MultiPoly:
    """Parse ``expr`` in the variables z1..zn (z0..zn when ``homogeneous``).

    >>> parse_poly("(z1-z2)*(z1+z2)", 2) == parse_poly("z1^2-z2^2", 2)
    True
    """
    if homogeneous:
        return _Parser(expr, nvars + 1, 0).parse()
    return _Parser(expr, nvars, 1).parse()


def _fmt_coeff(c: complex) -> str:
    if c.imag == 0:
        return repr(c.real)
    if c.real == 0:
        return f"{c.imag!r}i"
    return f"({c.real!r}{c.imag:+}i)"


def format_poly(p: MultiPoly, first_index: int = 1) -> str:
    if p.is_zero:
        return "0"
    parts = []
    for exps, c in p.terms.items():
        mono = "*".join(
            f"z{j + first_index}" + (f"^{e}" if e > 1 else "") for j, e in enumerate(exps) if e
        )
        parts.append(_fmt_coeff(c) + ("*" + mono if mono else ""))
    return " + ".join(parts)


# ------------------------------------------------------------- evaluation

def eval_poly(p: MultiPoly, point: Sequence[complex]) -> complex:
    """Evaluate at one point using nested Horner in the first variable."""
    if len(point) != p.nvars:
        raise ValueError(f"point has length {len(point)}, expected {p.nvars}")
    return _horner(list(p.terms.items()), [complex(x) for x in point], 0)


def _horner(items, point, j):
    if not items:
        return 0j
    if j == len(point):
        return items[0][1]
    by_power: dict = {}
    for exps, c in items:
        by_power.setdefault(exps[j], []).append((exps, c))
    acc = 0j
    x = point[j]
    for e in range(max(by_power), -1, -1):
        acc = acc * x + _horner(by_power.get(e, []), point, j + 1)
    return acc


def eval_poly_many(p: MultiPoly, points) -> np.ndarray:
    """Vectorized evaluation; ``points`` has shape (..., nvars)."""
    pts = np.asarray(points, dtype=complex)
    if pts.shape[-1] != p.nvars:
        raise ValueError(f"points have trailing dimension {pts.shape[-1]}, expected {p.nvars}")
    out = np.zeros(pts.shape[:-1], dtype=complex)
    if p.is_zero:
        return out
    maxdeg = [p.degree_in(j) for j in range(p.nvars)]
    powers = []
    for j in range(p.nvars):
        pw = [np.ones(pts.shape[:-1], dtype=complex)]
        for _ in range(maxdeg[j]):
            pw.append(pw[-1] * pts[..., j])
        powers.append(pw)
    for exps, c in p.terms.items():
        mono = c
        for j, e in enumerate(exps):
            if e:
                mono = mono * powers[j][e]
        out = out + mono
    return out


def partial(p: MultiPoly, j: int) -> MultiPoly:
    """Formal partial derivative in variable index ``j`` (0-based)."""
    if not 0 <= j < p.nvars:
        raise IndexError(f"variable index {j} out of range for nvars={p.nvars}")
    out = {}
    for exps, c in p.terms.items():
        e = exps[j]
        if e:
            k = list(exps)
            k[j] = e - 1
            out[tuple(k)] = c * e
    return MultiPoly(p.nvars, out)


def substitute(p: MultiPoly, values: Mapping[int, complex], keep: Sequence[int]) -> MultiPoly:
    """Fix the variables in ``values`` and return a polynomial in ``keep`` (in order)."""
    out: dict = {}
    for exps, c in p.terms.items():
        coef = c
        for j, v in values.items():
            if exps[j]:
                coef *= complex(v) ** exps[j]
        k = tuple(exps[j] for j in keep)
        out[k] = out.get(k, 0j) + coef
    return MultiPoly(len(keep), out)


# --------------------------------------------------- projective coordinates

def homogenize(p: MultiPoly, degree: int | None = None) -> MultiPoly:
    """P(z1..zn) -> P~(z0..zn), homogeneous of ``degree`` with P~(1, z) = P(z)."""
    d = p.degree() if degree is None else degree
    if p.is_zero:
        return MultiPoly.zero(p.nvars + 1)
    if d < p.degree():
        raise ValueError(f"degree {d} is below deg p = {p.degree()}")
    return MultiPoly(p.nvars + 1, {(d - sum(e),) + e: c for e, c in p.terms.items()})


def dehomogenize(p: MultiPoly) -> MultiPoly:
    out: dict = {}
    for exps, c in p.terms.items():
        out[exps[1:]] = out.get(exps[1:], 0j) + c
    return MultiPoly(p.nvars - 1, out)


# ------------------------------------------------------------------ Hefer

@dataclass(frozen=True)
class HeferDecomposition:
    """P(zeta) - P(z) = sum_j (zeta_j - z_j) Q_j(zeta, z).

    Each component lives in 2n variables ordered (zeta_1..zeta_n, z_1..z_n).
    """

    source: MultiPoly
    components: tuple

    @property
    def n(self) -> int:
        return self.source.nvars

    def at_z(self, z: Sequence[complex]) -> tuple:
        """Components with z fixed, as polynomials in zeta."""
        n = self.n
        vals = {n + j: z[j] for j in range(n)}
        return tuple(substitute(q, vals, range(n)) for q in self.components)

    def residual(self, zeta, z) -> complex:
        pt = list(zeta) + list(z)
        lhs = eval_poly(self.source, zeta) - eval_poly(self.source, z)
        rhs = sum((zeta[j] - z[j]) * eval_poly(q, pt) for j, q in enumerate(self.components))
        return lhs - rhs


def hefer(p: MultiPoly) -> HeferDecomposition:
    """Telescoping Hefer decomposition, one variable at a time.

    Q_j = [P(z_1..z_{j-1}, zeta_j..zeta_n) - P(z_1..z_j, zeta_{j+1}..zeta_n)] / (zeta_j - z_j)
    """
    n = p.nvars
    comps = []
    for j in range(n):
        out: dict = {}
        for exps, c in p.terms.items():
            e = exps[j]
            if e == 0:
                continue
            base = [0] * (2 * n)
            for v in range(n):
                if v < j:
                    base[n + v] = exps[v]
                elif v > j:
                    base[v] = exps[v]
            # (zeta^e - z^e)/(zeta - z) = sum_k zeta^k z^(e-1-k)
            for k in range(e):
                mono = list(base)
                mono[j] += k
                mono[n + j] += e - 1 - k
                key = tuple(mono)
                out[key] = out.get(key, 0j) + c
        comps.append(MultiPoly(2 * n, out))
    return HeferDecomposition(p, tuple(comps))


def random_poly(rng: np.random.Generator, nvars: int, degree: int, nterms: int) -> MultiPoly:
    """Random dense-ish test polynomial with complex Gaussian coefficients."""
    terms = {}
    for _ in range(nterms):
        d = int(rng.integers(0, degree + 1))
        cuts = np.sort(rng.integers(0, d + 1, size=nvars - 1)) if nvars > 1 else np.array([], int)
        parts = np.diff(np.concatenate([[0], cuts, [d]])).astype(int)
        terms[tuple(parts)] = complex(rng.normal(), rng.normal())
    return MultiPoly(nvars, terms)


def factorial_rising(k: int, d: int) -> int:
    """Pochhammer k (k+1) ... (k+d-1)."""
    return math.prod(range(k, k + d))
