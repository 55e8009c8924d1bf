import math

import numpy as np
import pytest

from leray.forms import (
    ChartSample,
    FormValue,
    ScalarField,
    combine_theta,
    fd_gradient,
    leray_density,
    leray_density_literal,
    omega0_prime,
    omega_prime_eta,
    pullback_integrate,
    theta_numeric,
    theta_operator,
)
from leray.geometry import ConvexBody, EtaConvention, level_chart
from leray.polycore import hefer, parse_poly
from leray.quadrature import QuadratureRule, periodic_rule, sphere_rule, tensor_rule
from leray.transforms import split_sign


def circle_chart(radius=1.0, npts=32):
    r = periodic_rule(npts)
    t = r.nodes[:, 0]
    z = radius * np.exp(1j * t)
    return ChartSample(z[:, None], (1j * z)[:, None, None], r.weights), t


def test_omega0_prime_n1_is_theta():
    th = np.array([[2.0 + 1j], [3.0]])
    f = omega0_prime(th, np.zeros((2, 1, 0)))
    assert f.degree == 0
    assert np.allclose(f.density(), th[:, 0])


def test_omega0_prime_constant_vanishes():
    th = np.tile([1.0, 0.0], (4, 1))
    f = omega0_prime(th, np.zeros((4, 2, 1)))
    assert np.allclose(f.density(), 0)


def test_omega0_prime_n2_hand_expansion():
    t = np.linspace(0, 2 * math.pi, 9)[:-1]
    z = np.stack([np.cos(t), np.sin(t)], axis=1).astype(complex)
    dz = np.stack([-np.sin(t), np.cos(t)], axis=1)[:, :, None].astype(complex)
    th, dth = np.conj(z), np.conj(dz)
    val = omega0_prime(th, dth).density()
    ref = th[:, 0] * dth[:, 1, 0] - th[:, 1] * dth[:, 0, 0]
    assert np.allclose(val, ref)
    assert np.allclose(val, 1.0)


def test_dz_integrals_on_circle():
    ch, _ = circle_chart(0.7)
    dz = FormValue(None, None, None, ch.dzeta)
    assert abs(pullback_integrate(dz, ch.weights)) < 1e-14
    assert pullback_integrate(dz, ch.weights, 1 / ch.zeta[:, 0]) == pytest.approx(2j * math.pi, abs=1e-12)


def test_sphere_area_from_gram_determinant():
    ch = level_chart(ConvexBody.ball(2), 0.0, sphere_rule(2, 32))
    J = np.concatenate([ch.dzeta.real, ch.dzeta.imag], axis=1)
    area = np.sum(ch.weights * np.sqrt(np.linalg.det(np.einsum("nik,nil->nkl", J, J))))
    assert area == pytest.approx(2 * math.pi ** 2, rel=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_bochner_martinelli_normalisation(n):
    body = ConvexBody.ball(n)
    ch = level_chart(body, 0.0, sphere_rule(n, 16))
    v = pullback_integrate(omega_prime_eta(body, EtaConvention(), ch), ch.weights)
    ref = split_sign(n) * (2j * math.pi) ** n / math.factorial(n - 1)
    assert v == pytest.approx(ref, rel=1e-10)


def test_bordered_density_matches_literal():
    rng = np.random.default_rng(4)
    N, n, D = 7, 3, 5
    c = lambda *s: rng.normal(size=s) + 1j * rng.normal(size=s)
    th, dth, pre, post = c(N, n), c(N, n, D), c(N, 1, D), c(N, 2, D)
    assert np.allclose(leray_density(th, dth, pre, post), leray_density_literal(th, dth, pre, post))
    with pytest.raises(ValueError):
        leray_density(th, dth, pre, None)


def test_form_evaluate_on_coordinate_frame():
    rng = np.random.default_rng(5)
    N, n, D = 3, 2, 3
    th = rng.normal(size=(N, n)) + 0j
    dth = rng.normal(size=(N, n, D)) + 0j
    post = rng.normal(size=(N, 2, D)) + 0j
    f = FormValue(th, dth, None, post)
    assert np.allclose(f.evaluate(np.eye(D)), f.density())
    # alternating in the frame vectors
    swapped = np.eye(D)[:, [1, 0, 2]]
    assert np.allclose(f.evaluate(swapped), -f.density())


def test_scalar_field_gradients():
    f = ScalarField(lambda p: np.sin(p[:, 0]) * np.exp(1j * p[:, 1]))
    p = np.array([[0.3, 0.4], [1.0, -2.0]])
    ref = np.stack([np.cos(p[:, 0]) * np.exp(1j * p[:, 1]), 1j * f(p)], axis=-1)
    assert not f.analytic
    assert np.allclose(f.gradient(p), ref, atol=1e-8)
    assert np.allclose(fd_gradient(f.evaluator, p), ref, atol=1e-8)


def _vertex_sample(body):
    base = level_chart(body, 0.1, sphere_rule(2, 4))
    verts = QuadratureRule(np.array([[0.0], [1.0]]), np.ones(2))
    return base.with_simplex(verts)


def test_theta_simplex_vertices():
    body = ConvexBody.ball(2)
    P = parse_poly("z1^2+z2^2-0.25", 2)
    H = hefer(P)
    s = _vertex_sample(body)
    z = np.array([0.5, 0.0])
    th, _ = theta_numeric(s, [H], body, z)
    zeta = s.zeta
    e = np.conj(zeta)
    b = e / np.sum(e * (zeta - z), axis=1)[:, None]
    at0, at1 = s.mu[:, 0] == 0, s.mu[:, 0] == 1
    assert np.allclose(th[at0], b[at0])
    assert np.allclose(th[at1], (zeta + z)[at1])


def test_theta_operator_linear_case():
    body = ConvexBody.ball(2)
    H = hefer(parse_poly("z1", 2))
    verts = QuadratureRule(np.array([[0.3]]), np.ones(1))
    s = level_chart(body, 0.1, sphere_rule(2, 4)).with_simplex(verts)
    u = np.array([0.0, 0.4])
    th, dth = theta_operator(s, [H], body, u)
    e = np.conj(s.zeta)
    assert np.allclose(th[:, 0], 0.3 * 1 + 0.7 * e[:, 0])
    assert np.allclose(th[:, 1], 0.7 * e[:, 1])
    assert dth.shape == (s.size, 2, s.dim)


def test_combine_theta_block_count_checked():
    s = _vertex_sample(ConvexBody.ball(2))
    with pytest.raises(ValueError):
        combine_theta(s, [], np.zeros((s.size, 2)), np.zeros((s.size, 2, s.dim)))
