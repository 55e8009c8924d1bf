import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from leray.polycore import homogenize, parse_poly
from leray.ratcalc import (
    NonIntegrable,
    PoleElement,
    PoleProximity,
    RationalSum,
    antiderivative0,
    apply_D,
    apply_D_composed,
    apply_poly_D,
    apply_system,
    apply_system_iterated,
    d_xi,
    eta0_deriv,
    eval_rat,
    homogeneity,
    system_residual,
)


def single(base, c=1.0, k=1):
    return RationalSum.single(tuple(base), c, k)


def test_eval_examples():
    assert eval_rat(single((0, 0)), np.array([2, 5, 7])) == pytest.approx(0.5)
    assert eval_rat(RationalSum(2), np.array([2, 5, 7])) == 0
    assert eval_rat(single((1, 0), k=2), np.array([1, 1, 0])) == pytest.approx(0.25)


def test_pole_proximity():
    with pytest.raises(PoleProximity):
        eval_rat(single((1, 0)), np.array([-1, 1, 0]))


def test_d_xi_examples():
    assert d_xi(single((0,)), 0) == single((0,), -1, 2)
    assert d_xi(single((0,)), 1).is_zero
    assert d_xi(single((2, 0)), 1) == single((2, 0), -2, 2)


def test_antiderivative_examples():
    assert antiderivative0(single((0,), -1, 2)) == single((0,), 1, 1)
    assert antiderivative0(RationalSum(1)).is_zero
    a = (0.3, -1j)
    f = single(a, 2, 3)
    F = antiderivative0(f)
    assert F == single(a, -1, 2)
    assert d_xi(F, 0) == f
    with pytest.raises(NonIntegrable):
        antiderivative0(single((0,)))


def test_apply_D_examples():
    assert apply_D(single((0, 0), k=3), 1).is_zero
    u = (0.4, -2.0)
    f = single(tuple(-x for x in u))
    assert apply_D(f, 1).max_abs_diff(f.scale(u[0])) < 1e-15
    g = single((3, 5), 1, 2)
    assert apply_D(g, 2) == g.scale(-5)
    assert apply_D_composed(g, 2).max_abs_diff(g.scale(-5)) < 1e-12


def test_apply_poly_D_examples():
    f = single((-1, -2))
    assert apply_poly_D(parse_poly("1", 2), f) == f
    assert apply_poly_D(parse_poly("z1", 2), f) == f
    assert apply_poly_D(parse_poly("z1^2+z2", 2), f) == f.scale(3)
    twice = apply_D(apply_D(f, 1), 1) + apply_D(f, 2)
    assert twice.max_abs_diff(f.scale(3)) < 1e-14


def test_apply_system_examples():
    Pt = parse_poly("z1^2+z2^2-z0^2", 2, homogeneous=True)
    assert apply_system(Pt, single((1, 0))).is_zero
    a = (0.2, 0.7)
    assert apply_system(parse_poly("z0", 2, homogeneous=True), single(a)) == single(a, -1, 2)
    assert apply_system(parse_poly("z1", 2, homogeneous=True), single((0, 0))).is_zero


def test_system_residual_off_variety():
    Pt = homogenize(parse_poly("z1^2+z2^2-0.25", 2))
    assert system_residual(Pt, single((0.5, 0))) == 0
    assert system_residual(Pt, single((0.3, 0.1))) == pytest.approx(0.15)


def test_eta0_deriv_examples():
    f = single((0.1, 0.2))
    assert eta0_deriv(f, 0) == f
    assert eta0_deriv(single((0,)), 1) == single((0,), -1, 2)
    assert eta0_deriv(f, 2) == single((0.1, 0.2), 2, 3)
    assert eta0_deriv(f, 2) == d_xi(d_xi(f, 0), 0)


def test_homogeneity():
    assert homogeneity(single((0, 0), k=2)) == -2
    assert homogeneity(single((0,)) + single((1,), k=2)) is None


def test_canonical_merging():
    f = single((0.5,)) + single((0.5,), 2.0)
    assert len(f) == 1 and f.elements[0].coeff == 3
    assert (f - f).is_zero


def elements(n):
    comp = st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False)
    return st.lists(st.tuples(comp, st.lists(comp, min_size=n, max_size=n), st.integers(1, 3)), min_size=1, max_size=4)


@settings(max_examples=40, deadline=None)
@given(data=elements(2), j=st.integers(1, 2))
def test_D_closed_form_equals_composition(data, j):
    f = RationalSum(2, [PoleElement(c, tuple(b), k) for c, b, k in data])
    assert apply_D(f, j).max_abs_diff(apply_D_composed(f, j)) <= 1e-12 * (1 + max((abs(e.coeff) for e in f), default=0) * 10)


@settings(max_examples=30, deadline=None)
@given(data=elements(2))
def test_system_closed_form_equals_iterated(data):
    f = RationalSum(2, [PoleElement(c, tuple(b), k) for c, b, k in data])
    Pt = parse_poly("z1^2 - 3*z0*z2 + 2i*z1*z2", 2, homogeneous=True)
    scale = 1 + sum(abs(e.coeff) * 100 for e in f)
    assert apply_system(Pt, f, zero_tol=0).max_abs_diff(apply_system_iterated(Pt, f)) < 1e-12 * scale


@settings(max_examples=30, deadline=None)
@given(data=elements(1), x=st.floats(0.5, 3))
def test_eval_derivative_fd(data, x):
    f = RationalSum(1, [PoleElement(c, tuple(b), k) for c, b, k in data])
    xi = np.array([x + 5.0, 0.3 + 0.1j])
    h = 1e-6
    fd = (eval_rat(f, xi + [h, 0]) - eval_rat(f, xi - [h, 0])) / (2 * h)
    assert abs(fd - eval_rat(d_xi(f, 0), xi)) < 1e-6
