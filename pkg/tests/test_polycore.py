import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leray.polycore import (
    MultiPoly,
    ParseError,
    dehomogenize,
    eval_poly,
    eval_poly_many,
    format_poly,
    hefer,
    homogenize,
    parse_poly,
    partial,
    random_poly,
    substitute,
)


def test_parse_examples():
    assert len(parse_poly("z1^2+z2^2-1", 2).terms) == 3
    assert parse_poly("0*z1", 1).terms == {}
    assert parse_poly("(z1-z2)*(z1+z2)", 2) == parse_poly("z1^2-z2^2", 2)


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_poly("z3", 2)
    with pytest.raises(ParseError):
        parse_poly("z1^", 1)


def test_format_roundtrip():
    p = parse_poly("3*z1^2*z2 - 2i*z2 + 0.5", 2)
    assert parse_poly(format_poly(p), 2) == p


def test_eval_examples():
    p = parse_poly("z1^2+z2^2-1", 2)
    assert eval_poly(p, (1, 0)) == 0
    assert eval_poly(p, (1j, 0)) == -2
    q = parse_poly("z1*z2 + 7", 2)
    assert eval_poly(q, (0, 0)) == 7


def test_eval_many_matches_scalar():
    rng = np.random.default_rng(0)
    p = random_poly(rng, 3, 4, 8)
    pts = rng.normal(size=(20, 3)) + 1j * rng.normal(size=(20, 3))
    ref = np.array([eval_poly(p, x) for x in pts])
    assert np.allclose(eval_poly_many(p, pts), ref, rtol=1e-13, atol=1e-13)


def test_partial_examples():
    assert partial(parse_poly("z1^2", 1), 0) == parse_poly("2*z1", 1)
    assert partial(parse_poly("z2", 2), 0).is_zero
    assert partial(parse_poly("z1^3*z2", 2), 0) == parse_poly("3*z1^2*z2", 2)


def test_homogenize_examples():
    p = parse_poly("z1^2+z2^2-1", 2)
    assert homogenize(p, 2) == parse_poly("z1^2+z2^2-z0^2", 2, homogeneous=True)
    assert homogenize(MultiPoly.const(2, 1.0), 0) == MultiPoly.const(3, 1.0)
    assert dehomogenize(parse_poly("z0*z1", 1, homogeneous=True)) == parse_poly("z1", 1)


def test_homogenize_degree_too_small():
    with pytest.raises(ValueError):
        homogenize(parse_poly("z1^3", 1), 2)


def test_hefer_examples():
    H = hefer(parse_poly("z1", 2))
    assert H.components[0] == MultiPoly.const(4, 1.0)
    assert H.components[1].is_zero
    assert all(q.is_zero for q in hefer(MultiPoly.const(2, 3.0)).components)
    H = hefer(parse_poly("z1^2+z2^2-1", 2))
    # variables ordered (zeta1, zeta2, z1, z2)
    assert H.components[0] == parse_poly("z1+z3", 4)
    assert H.components[1] == parse_poly("z2+z4", 4)


def test_substitute():
    p = parse_poly("z1*z2 + z2^2", 2)
    q = substitute(p, {1: 2.0}, [0])
    assert q == parse_poly("2*z1 + 4", 1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 3), deg=st.integers(0, 4))
def test_hefer_identity_property(seed, n, deg):
    rng = np.random.default_rng(seed)
    P = random_poly(rng, n, deg, 5)
    H = hefer(P)
    for _ in range(5):
        zeta = rng.normal(size=n) + 1j * rng.normal(size=n)
        z = rng.normal(size=n) + 1j * rng.normal(size=n)
        assert abs(H.residual(zeta, z)) < 1e-10 * (1 + abs(eval_poly(P, zeta)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_ring_laws(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_poly(rng, 2, 3, 4) for _ in range(3))
    x = rng.normal(size=2) + 1j * rng.normal(size=2)
    lhs = eval_poly(a * (b + c), x)
    rhs = eval_poly(a * b, x) + eval_poly(a * c, x)
    assert abs(lhs - rhs) < 1e-9 * (1 + abs(lhs))
