import math

import numpy as np
import pytest

from staticbdry import catalog
from staticbdry.cohomog1 import (Cohomog1Metric, curvature_radial, hessian_radial, laplacian_radial,
                                 sectional_radial, solve_radial_static_ode, sphere_volume)
from staticbdry.curvature import DomainError
from staticbdry.expr import evaluate


def kottler4():
    return catalog.kottler(4, 1.0, vol=2 * math.pi ** 2).metric


def test_kottler_components_at_2():
    c = curvature_radial(kottler4(), 2.0)
    assert c.ric_tt == pytest.approx(-3.375, abs=1e-12)
    assert c.ric_tan == pytest.approx(-2.875, abs=1e-12)
    assert c.scalar == pytest.approx(-12.0, abs=1e-12)


@pytest.mark.parametrize("t", [-7.0, -1.0, 0.0])
def test_cusp_components(t):
    m = catalog.cusp(3, 1.0).metric
    c = curvature_radial(m, t)
    assert c.ric_tt == pytest.approx(-2.0, abs=1e-14)
    assert c.ric_tan == pytest.approx(-2.0, abs=1e-14)
    assert sectional_radial(m, t) == pytest.approx((-1.0, -1.0), abs=1e-14)


@pytest.mark.parametrize("lam", [0.5, 2.0, -1.0])
def test_cusp_constant_curvature(lam):
    m = Cohomog1Metric(4, "1", f"exp({lam}*t)", fiber_flat=True, domain=(-5, 0), boundary="upper", coord="t")
    for t in m.sample_points(9):
        kr, kt = sectional_radial(m, t)
        assert kr == pytest.approx(-lam ** 2, rel=1e-13)
        assert kt == pytest.approx(-lam ** 2, rel=1e-13)


def test_cylinder_is_flat():
    m = catalog.half_cylinder(3).metric
    assert curvature_radial(m, 2.0) == (0.0, 0.0, 0.0)
    assert hessian_radial(m, "1", 1.0) == (0.0, 0.0)


def test_hessian_examples():
    h = hessian_radial(catalog.cusp(3, 1.0).metric, "exp(t)", 0.0)
    assert h.tt == pytest.approx(1.0) and h.tan == pytest.approx(1.0)
    m = kottler4()
    V = "sqrt(r^2+1-2/r^2)"
    c = curvature_radial(m, 2.0)
    h = hessian_radial(m, V, 2.0)
    v = evaluate(V, {"r": 2.0})
    assert abs(h.tt - (c.ric_tt - c.scalar / 3) * v) < 1e-10
    assert abs(h.tan - (c.ric_tan - c.scalar / 3) * v) < 1e-10
    assert laplacian_radial(m, V, 2.0) == pytest.approx(h.tt + 3 * h.tan)


def test_warped_product_identity_unit_lapse():
    m = Cohomog1Metric(4, "1", "2 + sin(s)", kappa=2.0, domain=(0, 6))
    for s in m.sample_points(25):
        v = m.values(s)
        f, fp, fpp = v["B"], v["fp"], v["fpp"]
        assert abs(v["ric_tan"] * f ** 2 - 2.0 + f * fpp + 2 * fp ** 2) < 1e-10


@pytest.mark.parametrize("factory,fiber", [
    (lambda: catalog.kottler(3, 1.0).metric, "sphere"),
    (lambda: catalog.schwarzschild(3, 2.0).metric, "sphere"),
    (lambda: catalog.cusp(3, 0.7).metric, "torus"),
    (lambda: Cohomog1Metric(3, "1 + s^2/10", "1 + s + s^3/5", kappa=1.0,
                            domain=(0.5, 4)), "sphere"),
])
def test_cross_engine_ricci(factory, fiber):
    m = factory()
    chart = m.to_chart(fiber)
    rng = np.random.default_rng(5)
    lo, hi = m.sample_range(8.0)
    for _ in range(20):
        s = rng.uniform(lo, hi)
        y = [rng.uniform(0.3, 2.8), rng.uniform(0, 6)] if fiber == "sphere" else list(rng.uniform(0, 1, 2))
        pt = chart.at([s, *y])
        c = curvature_radial(m, s)
        A = m.values(s)["A"]
        B = m.values(s)["B"]
        ric = pt.ricci
        assert ric[0, 0] / A ** 2 == pytest.approx(c.ric_tt, rel=1e-7, abs=1e-9)
        assert ric[1, 1] / pt.g[1, 1] == pytest.approx(c.ric_tan, rel=1e-7, abs=1e-9)
        assert pt.scalar == pytest.approx(c.scalar, rel=1e-7, abs=1e-9)
        assert abs(ric[0, 1]) < 1e-9 and B > 0


def test_sphere_volume():
    assert sphere_volume(1) == pytest.approx(2 * math.pi)
    assert sphere_volume(2) == pytest.approx(4 * math.pi)
    assert sphere_volume(3) == pytest.approx(2 * math.pi ** 2, rel=1e-14)


def test_validation():
    with pytest.raises(ValueError):
        Cohomog1Metric(3, "1", "1", kappa=1.0, fiber_flat=True)
    with pytest.raises(ValueError):
        Cohomog1Metric(3, "1", "s", domain=(-1, 1))   # B <= 0 on part of the domain
    with pytest.raises(ValueError):
        Cohomog1Metric(3, "1", "1", domain=(-math.inf, 0), boundary="lower")
    with pytest.raises(DomainError):
        curvature_radial(kottler4(), 1.0)


def test_ode_kottler():
    m = kottler4()
    V = lambda r: math.sqrt(r * r + 1 - 2 / r ** 2)
    dV = 2.25     # arclength derivative of sqrt(u) is u'/2
    sol = solve_radial_static_ode(m, V(2.0), dV, 2.0, 10.0)
    assert np.max(np.abs(sol.V - np.array([V(r) for r in sol.s]))) < 1e-6
    assert sol.tangential_residual < 1e-6


def test_ode_cusp_and_cylinder():
    sol = solve_radial_static_ode(catalog.cusp(3, 1.0).metric, 1.0, 1.0, 0.0, -5.0)
    assert np.max(np.abs(sol.V - np.exp(sol.s))) < 1e-8
    sol = solve_radial_static_ode(catalog.half_cylinder(3).metric, 1.0, 0.0, 0.0, 10.0)
    assert np.max(np.abs(sol.V - 1.0)) == 0.0


def test_ode_rejects_nonconstant_scalar():
    m = Cohomog1Metric(3, "1", "2 + sin(s)", kappa=1.0, domain=(0, 3))
    with pytest.raises(ValueError):
        solve_radial_static_ode(m, 1.0, 0.0, 0.0, 3.0)
