import math

import numpy as np
import pytest

from leray.polycore import parse_poly
from leray.quadrature import AdmissiblePath
from leray.residues import (
    BaseGrid,
    EngineScopeError,
    FiberResidueProblem,
    FiberTestForm,
    TubeOverlap,
    TubeSpec,
    cluster_roots,
    disk_grid,
    fiber_limit,
    fiber_residue,
    partial_tube_vanishing,
    residue_limit,
    tube_integral,
)

TWO_PI_I = 2j * math.pi
NO_BASE = BaseGrid(())


def h(z):
    return np.exp(z[:, 0]) * (1 + z[:, 0])


def dz_over_P(sample):
    return h(sample.zeta) * sample.dzeta[:, 0, 0] / np.prod(sample.extra["P"], axis=1)


def test_fiber_residue_examples():
    assert fiber_residue(FiberResidueProblem([0, 1], lambda w: np.ones_like(w))) == pytest.approx(TWO_PI_I)
    assert abs(fiber_residue(FiberResidueProblem([-1, 0, 1], lambda w: np.ones_like(w)))) < 1e-12
    assert fiber_residue(FiberResidueProblem([0, 0, 1], lambda w: w)) == pytest.approx(TWO_PI_I)
    with pytest.raises(EngineScopeError):
        fiber_residue(FiberResidueProblem([1], lambda w: w))


def test_cluster_roots():
    cl = cluster_roots([1.0, 1.0 + 1e-9, -2.0])
    assert sorted(k for _, k in cl) == [1, 2]


def test_tube_n1_simple_pole():
    spec = TubeSpec((parse_poly("z1", 1),), (0.1,))
    assert tube_integral(spec, dz_over_P, NO_BASE) == pytest.approx(TWO_PI_I * h(np.zeros((1, 1)))[0])


def test_tube_n1_double_pole():
    spec = TubeSpec((parse_poly("z1^2", 1),), (0.01,))
    # d/dz (e^z (1 + z)) at 0 is 2
    assert tube_integral(spec, dz_over_P, NO_BASE) == pytest.approx(TWO_PI_I * 2)


def test_tube_shifted_root_is_exact_for_every_eps():
    c = 0.3 - 0.1j
    spec = TubeSpec((parse_poly("z1 - 0.3 + 0.1i", 1),), (0.1,))
    path = AdmissiblePath((1.0,))
    out = residue_limit(spec, dz_over_P, path, NO_BASE, t_grid=(0.1, 0.05, 0.025))
    ref = TWO_PI_I * h(np.array([[c]]))[0]
    for _, v in out.per_t:
        assert v == pytest.approx(ref, abs=1e-12)
    assert out.limit == pytest.approx(ref, abs=1e-12)


def test_torus_iterated_cauchy():
    spec = TubeSpec((parse_poly("z1", 2), parse_poly("z2", 2)), (0.1, 0.05))

    def f(s):
        z = s.zeta
        hz = np.cos(z[:, 0]) + z[:, 1] + 2.0
        det = s.dzeta[:, 0, 0] * s.dzeta[:, 1, 1] - s.dzeta[:, 0, 1] * s.dzeta[:, 1, 0]
        return hz * det / np.prod(s.extra["P"], axis=1)

    assert tube_integral(spec, f, NO_BASE) == pytest.approx(TWO_PI_I ** 2 * 3.0)


def test_zero_integrand():
    spec = TubeSpec((parse_poly("z1", 1),), (0.1,))
    out = residue_limit(spec, lambda s: np.zeros(s.size, complex), AdmissiblePath((1.0,)), NO_BASE,
                        t_grid=(0.1, 0.05, 0.025))
    assert out.limit == 0


def test_partial_tube_zero_integrand_and_scope():
    spec = TubeSpec((parse_poly("z1", 2), parse_poly("z2", 2)), (0.1, 0.1), active=(0,))
    path = AdmissiblePath((2.0, 1.0))
    out = partial_tube_vanishing(spec, lambda s: np.zeros(s.size, complex), path, NO_BASE,
                                 t_grid=(0.25, 0.125, 0.0625))
    assert out.limit == 0
    with pytest.raises(ValueError):
        partial_tube_vanishing(TubeSpec(spec.polys, spec.radii), lambda s: 0, path, NO_BASE)


def test_tube_overlap_raised():
    spec = TubeSpec((parse_poly("z1^2 - 0.01", 1),), (0.02,))
    with pytest.raises(TubeOverlap):
        tube_integral(spec, dz_over_P, NO_BASE)


def test_engine_scope():
    spec = TubeSpec((parse_poly("z1 + z2^2", 2), parse_poly("z2", 2)), (0.1, 0.1))
    with pytest.raises(EngineScopeError):
        tube_integral(spec, dz_over_P, NO_BASE)


def test_fiber_engine_matches_tube():
    P = parse_poly("z1 - z2^2", 2)
    form = FiberTestForm(lambda z: np.exp(-4 * abs(z[:, 1]) ** 2) * (1 + z[:, 0]), 2)
    base = disk_grid(1, 1.0, 24, 32)
    spec = TubeSpec((P,), (1e-3,))
    tube = tube_integral(spec, form.density, base)
    fib = fiber_limit(P, form, base)
    assert abs(tube - fib) < 1e-6 * abs(fib)
