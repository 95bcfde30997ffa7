import math

import numpy as np
import pytest

from staticbdry import catalog
from staticbdry.curvature import ChartMetric, Face, laplacian
from staticbdry.expr import evaluate
from staticbdry.static_ops import (L_star, NonConstantScalarError, NonPositivePotentialError, PotentialSpec,
                                   SamplePlan, interior_samples, local_identity_residual, local_identity_terms,
                                   phi_star, s_tensor, verify_static)

from helpers import random_metric, sample_box

FLAT3 = ChartMetric(["x", "y", "z"], [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])


def test_flat_L_star_of_constant():
    assert np.all(L_star(FLAT3, "1", [0.1, 0.2, 0.3]).components == 0.0)


def test_flat_L_star_of_linear_function():
    # Hess = 0, Ric = 0: the kernel on flat space contains the affine functions
    assert np.max(np.abs(L_star(FLAT3, "2*x - y + 3", [0.4, -1.0, 2.0]).components)) < 1e-15


@pytest.mark.parametrize("r", np.linspace(math.sqrt(2), 10, 9))
def test_kottler_L_star_vanishes(r):
    d = catalog.kottler(4, 1.0)
    assert L_star(d.metric, d.potential.V, float(r)).op_norm() < 1e-8


@pytest.mark.parametrize("r", [1.001, 1.5, 2.0, 5.0, 10.0])
def test_schwarzschild_L_star_vanishes(r):
    d = catalog.schwarzschild(3, 2.0)
    assert L_star(d.metric, d.potential.V, r).op_norm() < 1e-8
    # the isotropic-chart potential agrees with (r-1)/(r+1)
    assert evaluate(d.potential.V, {"r": r}) == pytest.approx((r - 1) / (r + 1), rel=1e-14)


def test_phi_star_cusp_and_cylinder():
    d = catalog.cusp(3, 1.0)
    out = phi_star(d.metric, None, "exp(t)")
    assert out["interior"].op_norm() < 1e-9 and out["boundary"].op_norm() < 1e-9
    out = phi_star(catalog.half_cylinder(3).metric, None, "1")
    assert out["interior"].op_norm() == 0.0 and out["boundary"].op_norm() == 0.0


def test_phi_star_kottler_boundary_component():
    d = catalog.kottler(4, 1.0)
    out = phi_star(d.metric, None, d.potential.V)
    assert out["interior"].op_norm() < 1e-8
    # V_nu - (H/(n-1)) V = -(r_c + m(n-2) r_c^(1-n)) + r_c = -m(n-2) r_c^(1-n)
    rc = math.sqrt(2)
    assert out["boundary"].op_norm() == pytest.approx(2 * rc ** -3, rel=1e-12)
    assert out["boundary"].op_norm() > 1e-2


def test_phi_star_chart_matches_radial():
    d = catalog.kottler(4, 1.0)
    chart = d.metric.to_chart()
    q = [math.sqrt(2), 1.0, 0.7, 2.0]
    a = phi_star(d.metric, None, d.potential.V)["boundary"]
    b = phi_star(chart, None, d.potential.V, q)["boundary"]
    assert b.op_norm() == pytest.approx(a.op_norm(), rel=1e-9)


def test_s_tensor_examples():
    d = catalog.kottler(4, 1.0)
    S = s_tensor(d.metric, -3.0, 2.0).components
    assert np.allclose(np.diag(S), [-0.375, 0.125, 0.125, 0.125], atol=1e-12)
    assert np.max(np.abs(s_tensor(catalog.cusp(3, 1.0).metric, 2.0, -0.5).components)) < 1e-13
    assert np.all(s_tensor(FLAT3, 0.0, [0, 0, 0]).components == 0.0)


def test_local_identity_kottler_r3():
    d = catalog.kottler(4, 1.0)
    t = local_identity_terms(d.metric, d.potential.V, -3.0, 3.0)
    # S = diag(-6, 2, 2, 2)/81 in an orthonormal frame, V = sqrt(88)/3
    assert t.lhs == pytest.approx(math.sqrt(88) / 3 * 48 / 81 ** 2, rel=1e-12)
    assert t.pinching_term == 0.0
    assert t.residual < 1e-8 and t.split_residual < 1e-8
    assert t.div_combined == pytest.approx(t.div_split, rel=1e-10)


def test_local_identity_schwarzschild_and_cusp():
    d = catalog.schwarzschild(3, 2.0)
    assert local_identity_residual(d.metric, d.potential.V, 0.0, 2.0) < 1e-8
    c = catalog.cusp(3, 1.0)
    for t in [-3.0, -1.0, 0.0]:
        terms = local_identity_terms(c.metric, "exp(t)", 2.0, t)
        assert abs(terms.lhs) < 1e-12 and abs(terms.pinching_term) < 1e-12 and terms.residual < 1e-12


@pytest.mark.parametrize("name,H", [("kottler", -3.0), ("schwarzschild", 0.0)])
def test_local_identity_at_many_points(name, H):
    d = catalog.build(name)
    for s in interior_samples(d.metric, 100):
        assert local_identity_residual(d.metric, d.potential.V, H, s) < 1e-8


def test_local_identity_chart_kottler():
    d = catalog.kottler(4, 1.0)
    chart = d.metric.to_chart()
    for r in [1.6, 3.0, 7.0]:
        assert local_identity_residual(chart, d.potential.V, -3.0, [r, 1.0, 0.8, 0.3]) < 1e-8


def test_local_identity_rejects_nonconstant_scalar():
    m = random_metric(7, n=3)
    with pytest.raises(NonConstantScalarError):
        local_identity_terms(m, "1", 0.0, [0.1, 0.2, 0.3])


@pytest.mark.parametrize("name,admissible", [
    ("kottler", False), ("cusp", True), ("half-cylinder", True), ("schwarzschild", False),
])
def test_verify_static_catalog(name, admissible):
    d = catalog.build(name)
    rep = verify_static(d.metric, d.face, d.potential, SamplePlan(interior=200, boundary=8))
    assert rep.is_static_potential
    assert rep.interior_residual < 1e-8
    assert rep.trace_residual < 1e-8
    assert rep.scalar_spread < 1e-8
    assert rep.is_admissible is admissible
    assert rep.samples == 200


def test_kottler_admissibility_residual():
    d = catalog.kottler(4, 1.0)
    rep = verify_static(d.metric, None, d.potential, SamplePlan(interior=20))
    assert rep.admissibility_residual == pytest.approx(1 / math.sqrt(2), rel=1e-12)
    assert rep.scalar_mean == pytest.approx(-12.0, abs=1e-10)


def test_non_static_candidate_is_reported():
    d = catalog.kottler(4, 1.0)
    rep = verify_static(d.metric, None, "r", SamplePlan(interior=20))
    assert not rep.is_static_potential and not rep.is_admissible
    assert rep.interior_residual > 1e-2


def test_nonpositive_potential_aborts():
    d = catalog.cusp(3, 1.0)
    with pytest.raises(NonPositivePotentialError):
        verify_static(d.metric, None, "-exp(t)", SamplePlan(interior=10))
    with pytest.raises(NonPositivePotentialError):
        local_identity_terms(d.metric, "0", 2.0, -1.0)


def test_potential_spec_validation():
    assert PotentialSpec("exp(t)").positivity == "everywhere"
    with pytest.raises(ValueError):
        PotentialSpec("1", "sometimes")


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_trace_of_L_star(seed):
    m = random_metric(seed, n=3)
    rng = np.random.default_rng(seed)
    c = np.round(rng.uniform(-1, 1, 3), 3)
    u = f"{c[0]}*x*y + sin({c[1]}*z) + exp({c[2]}*x)"
    for p in sample_box(3, 10, seed):
        pt = m.at(p)
        L = L_star(m, u, p)
        val = evaluate(u, dict(zip("xyz", p)))
        expected = -2 * laplacian(m, u, p) - val * pt.scalar
        assert L.trace() == pytest.approx(expected, rel=1e-10, abs=1e-10)


def test_chart_verify_on_half_cylinder_chart():
    m = ChartMetric(["t", "y1", "y2"], [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
                    [(0.0, math.inf), (0.0, 1.0), (0.0, 1.0)], face=Face(0, "lower"))
    rep = verify_static(m, None, "1", SamplePlan(interior=30, boundary=6))
    assert rep.is_admissible and rep.interior_residual == 0.0
