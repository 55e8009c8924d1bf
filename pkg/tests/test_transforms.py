import math

import numpy as np
import pytest

from leray import scenario as sc
from leray.geometry import ConvexBody, EtaConvention
from leray.polycore import parse_poly
from leray.ratcalc import PoleElement, RationalSum, eval_rat
from leray.transforms import (
    BVPScenario,
    DualViolation,
    PoleOnBoundary,
    QuadConfig,
    ScenarioInvalid,
    bvp_invert,
    chain_sign,
    fantappie_indicatrice,
    indicatrice_oracle,
    interpolate_many,
    martineau_invert,
    radon_oracle,
    split_sign,
)

CONV = EtaConvention()
FAST_T = tuple(2.0 ** -k for k in range(5, 10))


def g1(base, c=1.0):
    return RationalSum.single(tuple(base), c, 1)


def test_signs():
    assert [split_sign(n) for n in (1, 2, 3, 4)] == [1, -1, -1, 1]
    assert chain_sign(2, 0) == -1 and chain_sign(2, 1) == 1


def test_martineau_n1_cauchy():
    v = martineau_invert(g1((0,)), ConvexBody.ball(1), CONV, 0.1, [[1, 0]], sphere_res=64)
    assert v[0] == pytest.approx(1.0, abs=1e-8)


def test_martineau_n2():
    body = ConvexBody.ball(2)
    g = g1((0.3, 0))
    xis = [[1, 0, 0], [1, 0.5, 0.2]]
    v = martineau_invert(g, body, CONV, 0.1, xis, sphere_res=16)
    for x, val in zip(xis, v):
        assert abs(val - eval_rat(g, np.array(x))) < 1e-3


def test_martineau_is_linear():
    body = ConvexBody.ball(2)
    a, b = g1((0.3, 0)), g1((0, -0.2j), 2.0)
    xis = [[1, 0.2, 0.1]]
    va = martineau_invert(a, body, CONV, 0.1, xis, sphere_res=8)
    vb = martineau_invert(b, body, CONV, 0.1, xis, sphere_res=8)
    vab = martineau_invert(a + b, body, CONV, 0.1, xis, sphere_res=8)
    assert abs(vab[0] - va[0] - vb[0]) < 1e-12


def test_martineau_errors():
    body = ConvexBody.ball(2)
    with pytest.raises(DualViolation):
        martineau_invert(g1((0, 0)), body, CONV, 0.1, [[0, 1, 0]], sphere_res=8)
    with pytest.raises(PoleOnBoundary):
        martineau_invert(g1((0.97, 0)), body, CONV, 0.1, [[1, 0, 0]], sphere_res=8)
    with pytest.raises(ScenarioInvalid):
        martineau_invert(RationalSum.single((0, 0), 1.0, 2), body, CONV, 0.1, [[1, 0, 0]], sphere_res=8)


def test_indicatrice():
    body = ConvexBody.ball(1)
    g = g1((0,))
    xi = np.array([1.0, 0.0])
    v = fantappie_indicatrice(g, body, CONV, 0.1, xi, sphere_res=64)
    assert np.allclose(v, indicatrice_oracle(g, xi), atol=1e-6)
    assert np.allclose(fantappie_indicatrice(RationalSum(1), body, CONV, 0.1, xi, sphere_res=16), 0)
    assert np.allclose(radon_oracle(RationalSum(1), xi), 0)


def linear_scenario(g=None, **kw):
    quad = QuadConfig(base_r=16, base_phi=32, n_alpha=8, sphere_res=16, t_grid=FAST_T)
    return BVPScenario(n=2, polys=[parse_poly("z1", 2)], body=ConvexBody.ball(2), g=g, quad=quad, **kw)


def test_interpolation_linear_variety():
    scn = linear_scenario()
    vals, errs = interpolate_many([lambda z: 1.0 + 0 * z[:, 0], lambda z: z[:, 1]], scn, [[0, 0.2]])
    assert abs(vals[0, 0] - 1) < 1e-3
    assert abs(vals[0, 1] - 0.2) < 1e-3


def test_bvp_invert_linear_variety():
    g = g1((0, 0.3))
    scn = linear_scenario(g)
    xis = [[1, 0, 0], [1, 0.2, 0.3]]
    vals, _ = bvp_invert(scn, xis)
    for x, v in zip(xis, vals):
        assert abs(v - eval_rat(g, np.array(x))) < 1e-3


def test_bvp_invert_validation():
    with pytest.raises(ScenarioInvalid):
        bvp_invert(linear_scenario(g1((0.2, 0.3))), [[1, 0, 0]])  # base off V
    with pytest.raises(ScenarioInvalid):
        bvp_invert(linear_scenario(None), [[1, 0, 0]])
    with pytest.raises(DualViolation):
        bvp_invert(linear_scenario(g1((0, 0.3))), [[0, 0, 1]])


def test_builtin_scenarios_build():
    for name in sc.builtin_names():
        doc = sc.builtin(name)
        assert doc["schema_version"] == sc.SCHEMA_VERSION
        if "polynomials" in doc and doc.get("command") != "residue":
            assert sc.build(doc).n == doc["n"]
