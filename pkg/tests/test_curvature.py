import math

import numpy as np
import pytest

from staticbdry.curvature import (ChartMetric, DomainError, Face, christoffel, divergence_symtensor, hessian,
                                  laplacian, ricci, ricci_jet, riemann, scalar)
from staticbdry.expr import evaluate, parse
from staticbdry.tensors import SingularMetricError, riemann_symmetry_residuals

from helpers import random_metric, sample_box

FLAT3 = ChartMetric(["x", "y", "z"], [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
POLAR = ChartMetric(["r", "th"], [["1", "0"], ["0", "r^2"]], [(0.0, math.inf), (0.0, 2 * math.pi)])


def sphere(a):
    return ChartMetric(["th", "ph"], [[f"{a}^2", "0"], ["0", f"{a}^2*sin(th)^2"]], [(0, math.pi), (0, 2 * math.pi)])


def test_flat_is_flat():
    p = [0.3, -1.2, 2.0]
    assert np.all(christoffel(FLAT3, p) == 0)
    assert np.all(riemann(FLAT3, p) == 0)
    assert scalar(FLAT3, p) == 0


def test_polar_christoffel():
    G = christoffel(POLAR, [2.0, 0.4])
    assert G[0, 1, 1] == pytest.approx(-2.0, abs=1e-15)   # Gamma^r_{th th}
    assert G[1, 0, 1] == pytest.approx(0.5, abs=1e-15)    # Gamma^th_{r th}
    assert G[1, 1, 0] == G[1, 0, 1]


def test_conformal_christoffel_against_defining_formula():
    m = ChartMetric(["x", "y"], [["exp(2*x)", "0"], ["0", "exp(2*x)"]])
    G = christoffel(m, [0.0, 0.0])
    assert G[0, 0, 0] == pytest.approx(1.0, abs=1e-14)
    assert G[0, 1, 1] == pytest.approx(-1.0, abs=1e-14)
    assert G[1, 0, 1] == pytest.approx(1.0, abs=1e-14)
    # finite-difference oracle on 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)
    h = 1e-6

    def g(x, y):
        return np.eye(2) * math.exp(2 * x)

    dg = np.array([(g(h, 0) - g(-h, 0)) / (2 * h), (g(0, h) - g(0, -h)) / (2 * h)])
    gi = np.linalg.inv(g(0, 0))
    fd = 0.5 * (np.einsum("kl,ijl->kij", gi, dg) + np.einsum("kl,jil->kij", gi, dg)
                - np.einsum("kl,lij->kij", gi, dg))
    assert np.allclose(G, fd, atol=1e-8)


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0])
def test_round_sphere(a):
    p = [1.1, 0.3]
    assert scalar(sphere(a), p) == pytest.approx(2 / a ** 2, rel=1e-13)
    # unit-sphere convention: Ric = (n-1) g
    assert np.allclose(ricci(sphere(1.0), p).components, sphere(1.0).at(p).g, atol=1e-14)


def test_kottler_chart_scalar():
    m = ChartMetric(["r", "th", "ph"],
                    [["1/(r^2 + 1 - 2/r)", "0", "0"], ["0", "r^2", "0"], ["0", "0", "r^2*sin(th)^2"]],
                    [(2.0, math.inf), (0, math.pi), (0, 2 * math.pi)])
    assert scalar(m, [2.0, 1.0, 0.5]) == pytest.approx(-6.0, abs=1e-8)


def test_hessian_flat():
    H = hessian(FLAT3, "x^2", [1.0, 2.0, 3.0])
    assert np.allclose(H.components, np.diag([2.0, 0.0, 0.0]))
    assert laplacian(FLAT3, "x^2 + y^2 + z^2", [0.1, 0.2, 0.3]) == pytest.approx(6.0)


def test_cusp_hessian():
    m = ChartMetric(["t", "y1", "y2"], [["1", "0", "0"], ["0", "exp(2*t)", "0"], ["0", "0", "exp(2*t)"]])
    p = [-1.0, 0.2, 0.7]
    H = hessian(m, "exp(t)", p)
    assert np.allclose(H.components, math.exp(-1) * m.at(p).g, atol=1e-15)


def test_kottler_static_equation_residual():
    m = ChartMetric(["r", "a", "b", "c"],
                    [["1/(r^2+1-2/r^2)", "0", "0", "0"], ["0", "r^2", "0", "0"],
                     ["0", "0", "r^2*sin(a)^2", "0"], ["0", "0", "0", "r^2*sin(a)^2*sin(b)^2"]])
    p = [2.0, 1.0, 1.2, 0.3]
    V = parse("sqrt(r^2+1-2/r^2)")
    pt = m.at(p)
    Vp = evaluate(V, {"r": 2.0})
    resid = hessian(m, V, p).components - (pt.ricci - pt.scalar / 3 * pt.g) * Vp
    assert np.max(np.abs(resid)) < 1e-8


def test_divergence_of_metric_and_einstein_S():
    m = ChartMetric(["r", "a", "b", "c"],
                    [["1/(r^2+1-2/r^2)", "0", "0", "0"], ["0", "r^2", "0", "0"],
                     ["0", "0", "r^2*sin(a)^2", "0"], ["0", "0", "0", "r^2*sin(a)^2*sin(b)^2"]])
    p = [3.0, 1.0, 1.2, 0.3]
    comps = [[m.component(i, j) for j in range(4)] for i in range(4)]
    assert np.max(np.abs(divergence_symtensor(m, comps, p))) < 1e-13
    ric, dric = ricci_jet(m, p)
    pt = m.at(p)
    S = (ric + 3.0 * pt.g, dric + 3.0 * pt.dg)
    assert np.max(np.abs(divergence_symtensor(m, S, p))) < 1e-8


def test_singular_metric_raises():
    m = ChartMetric(["x", "y"], [["1", "0"], ["0", "x^2"]])
    with pytest.raises(SingularMetricError):
        m.at([0.0, 1.0]).ginv
    m2 = ChartMetric(["x", "y"], [["1", "2"], ["2", "1"]])
    with pytest.raises(SingularMetricError):
        m2.at([0.0, 0.0]).ginv


def test_asymmetric_components_rejected():
    with pytest.raises(ValueError):
        ChartMetric(["x", "y"], [["1", "x"], ["y", "1"]])


def test_domain_is_closed():
    assert POLAR.check_point([0.0, 0.0]) is not None
    with pytest.raises(DomainError):
        POLAR.check_point([-0.1, 0.0])


def test_face_sign():
    assert Face(0, "lower").sign == -1
    assert Face(1, "upper").sign == 1


# -- random analytic metrics --

SEEDS = [11, 22, 33, 44, 55]


@pytest.mark.parametrize("seed", SEEDS)
def test_riemann_symmetries(seed):
    m = random_metric(seed, n=3 + seed % 2)
    worst = 0.0
    for p in sample_box(m.dim, 100, seed):
        rm = riemann(m, p)
        scale = max(1.0, float(np.max(np.abs(rm))))
        res = riemann_symmetry_residuals(rm)
        worst = max(worst, max(res.values()) / scale)
    assert worst < 1e-10


@pytest.mark.parametrize("seed", SEEDS)
def test_contracted_bianchi(seed):
    m = random_metric(seed, n=3, polynomial=True)
    for p in sample_box(3, 100, seed + 1):
        pt = m.at(p)
        div = divergence_symtensor(m, ricci_jet(m, p), p)
        dR = pt.scalar_gradient
        assert np.max(np.abs(div - 0.5 * dR)) <= 1e-7 * (1 + np.max(np.abs(dR)))


@pytest.mark.parametrize("seed", SEEDS)
def test_traces(seed):
    m = random_metric(seed, n=3)
    for p in sample_box(3, 20, seed + 2):
        pt = m.at(p)
        assert pt.scalar == pytest.approx(np.einsum("ij,ij->", pt.ginv, pt.ricci), rel=1e-12, abs=1e-14)
        H = hessian(m, "x*y + sin(z)", p).components
        assert np.allclose(H, H.T, rtol=0, atol=1e-14)
        lap = laplacian(m, "x*y + sin(z)", p)
        assert lap == pytest.approx(np.einsum("ij,ij->", pt.ginv, H), rel=1e-12, abs=1e-14)
