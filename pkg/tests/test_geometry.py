import math

import numpy as np
import pytest

from leray.geometry import (
    ConvexBody,
    DegenerateGradient,
    EtaConvention,
    cutoff,
    dcutoff,
    dual_margin_exact,
    eta,
    grad_rho,
    in_dual,
    level_chart,
    orientation_sign,
    rho,
    shell_chart,
    step,
    step_deriv,
)
from leray.quadrature import gauss_legendre, sphere_rule

BALL = ConvexBody.ball(2)


def test_rho_examples():
    assert rho(BALL, [0, 0]) == -1
    assert np.allclose(grad_rho(BALL, [0, 0]), 0)
    assert rho(BALL, [1, 0]) == 0
    assert np.allclose(grad_rho(BALL, [1, 0]), [1, 0])
    assert rho(ConvexBody((0, 0), (2, 1)), [2, 0]) == 0


def test_eta_examples():
    assert np.allclose(eta(BALL, EtaConvention(-1), [1, 0]), [-1, 1, 0])
    assert np.allclose(eta(BALL, EtaConvention(1), [1, 0]), [1, 1, 0])
    assert np.allclose(eta(BALL, EtaConvention(-1), [0, 1]), [-1, 0, 1])
    z = np.array([0.3 + 0.2j, -0.5j])
    e = eta(BALL, EtaConvention(-1), z)
    assert abs(e[0] + e[1:] @ z) < 1e-15
    with pytest.raises(DegenerateGradient):
        eta(BALL, EtaConvention(), [0, 0])
    with pytest.raises(ValueError):
        EtaConvention(0)


def test_in_dual_examples():
    r = in_dual(BALL, [1, 0, 0])
    assert r["member"] and r["margin"] == pytest.approx(1)
    assert not in_dual(BALL, [0, 1, 0])["member"]
    r = in_dual(BALL, [2, 1, 0])
    assert r["member"] and r["margin"] == pytest.approx(1, abs=1e-3)
    assert dual_margin_exact(BALL, [2, 1, 0]) == pytest.approx(1)
    assert dual_margin_exact(BALL, [0, 1, 0]) == 0
    with pytest.raises(ValueError):
        in_dual(BALL, [1, 0, 0], samples=10)


def test_cutoff_examples():
    d = 0.1
    inside = [math.sqrt(0.5), 0]
    assert cutoff(BALL, d, inside) == 1
    assert np.allclose(dcutoff(BALL, d, inside), 0)
    assert cutoff(BALL, d, [math.sqrt(1 + 2 * d), 0]) == 0
    z = [math.sqrt(1 + d / 2), 0]
    assert cutoff(BALL, d, z) == pytest.approx(0.5)
    assert np.linalg.norm(dcutoff(BALL, d, z)) > 0
    with pytest.raises(ValueError):
        cutoff(BALL, 0, z)


def test_step_smooth_and_monotone():
    s = np.linspace(-0.2, 1.2, 301)
    v = step(s)
    assert np.all(np.diff(v) <= 0)
    h = 1e-6
    mid = np.linspace(0.05, 0.95, 19)
    fd = (step(mid + h) - step(mid - h)) / (2 * h)
    assert np.allclose(fd, step_deriv(mid), atol=1e-6)
    assert np.all(np.isfinite(step(np.array([1e-4, 1 - 1e-4]))))


def test_level_chart_radius():
    rule = sphere_rule(2, 8)
    ch = level_chart(BALL, 0.19, rule)
    assert np.allclose(np.linalg.norm(ch.zeta, axis=1), 0.9)
    ell = ConvexBody((0, 0), (2, 1))
    ch = level_chart(ell, 0.0, rule)
    assert np.allclose(rho(ell, ch.zeta), 0, atol=1e-14)
    with pytest.raises(ValueError):
        level_chart(BALL, 1.0, rule)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_boundary_orientation(n):
    # (outward normal, chart tangents) is positive in (x1, y1, ...) order
    body = ConvexBody.ball(n, 0.7, [0.1] * n)
    ch = level_chart(body, 0.0, sphere_rule(n, 8))
    assert np.all(orientation_sign(ch, ch.zeta - body.c) == 1)


def test_shell_chart_volume():
    n, d = 2, 0.1
    ch = shell_chart(BALL, d, gauss_legendre(6), sphere_rule(n, 32))
    assert ch.dim == 2 * n
    cols = np.concatenate([ch.dzeta.real, ch.dzeta.imag], axis=1)
    vol = np.sum(ch.weights * np.abs(np.linalg.det(cols)))
    ref = math.pi ** 2 / 2 * ((1 + d) ** 2 - 1)
    assert vol == pytest.approx(ref, rel=1e-10)
