"""Static operators and the pointwise identities built on them.

``L*_g u = -(Lap u) g + Hess u - u Ric`` and
``Phi*_g u = (L*_g u, u_nu g_hat - u h)``. A static potential is a nontrivial
``V`` with ``L*_g V = 0``; it is admissible if also ``V_nu g_hat = V h``.

Every routine accepts a :class:`~staticbdry.curvature.ChartMetric` (points
are coordinate vectors) or a :class:`~staticbdry.cohomog1.Cohomog1Metric`
(points are radial coordinates, tensors come in an orthonormal frame with
the radial direction first).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np
from scipy.stats import qmc

from .boundary import _chart_sff, _radial_sff, _resolve_face, face_samples
from .cohomog1 import Cohomog1Metric, RadialField, as_radial
from .curvature import ChartMetric, Face, ScalarField, as_field
from .expr import Expr, as_expr, compile_exprs, const
from .tensors import SymTensor2

__all__ = [
    "PotentialSpec", "SamplePlan", "StaticReport", "LocalIdentity",
    "NonConstantScalarError", "NonPositivePotentialError",
    "L_star", "phi_star", "s_tensor", "local_identity_residual", "local_identity_terms",
    "verify_static", "interior_samples", "geometry_at",
]

Metric = Union[ChartMetric, Cohomog1Metric]

DEFAULT_TOL = 1e-8


class NonConstantScalarError(ValueError):
    pass


class NonPositivePotentialError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialSpec:
    """A candidate static potential.

    ``positivity`` is ``"interior"`` when V may vanish on the boundary (as on
    a horizon) and ``"everywhere"`` otherwise.
    """

    V: Expr
    positivity: str = "everywhere"

    def __post_init__(self):
        object.__setattr__(self, "V", as_expr(self.V))
        if self.positivity not in ("interior", "everywhere"):
            raise ValueError(f"unknown positivity {self.positivity!r}")


def _potential_expr(V):
    return V.V if isinstance(V, PotentialSpec) else V


@dataclass(frozen=True)
class SamplePlan:
    interior: int = 200
    boundary: int = 32
    extent: float = 10.0    # where infinite coordinate ranges are cut


class _ChartGeometry:
    def __init__(self, metric: ChartMetric, f: ScalarField, p):
        self.metric = metric
        self.n = metric.dim
        self.pt = metric.at(p)
        self.val, self.grad, self.hess = self.pt.hessian_of(f)
        self._d2f = f.jet(self.pt.p)[2]

    @property
    def g(self):
        return self.pt.g

    @property
    def ginv(self):
        return self.pt.ginv

    @property
    def ricci(self):
        return self.pt.ricci

    @property
    def scalar(self):
        return self.pt.scalar

    @cached_property
    def scalar_gradient(self):
        return self.pt.scalar_gradient

    @cached_property
    def laplacian(self):
        return float(np.einsum("ij,ij->", self.ginv, self.hess))

    @cached_property
    def div_ricci(self):
        return self.pt.divergence(self.pt.ricci, self.pt.ricci_gradient)

    def div_S_dV(self, c: float) -> float:
        """Divergence of the 1-form ``S(DV, .)``, differentiated as a whole."""
        pt, gi = self.pt, self.ginv
        S = pt.ricci + c * pt.g
        dS = pt.ricci_gradient + c * pt.dg
        dv_up = gi @ self.grad
        omega = S @ dv_up
        d_omega = (np.einsum("ijk,k->ij", dS, dv_up)
                   + np.einsum("jk,ikl,l->ij", S, pt.dginv, self.grad)
                   + np.einsum("jk,kl,il->ij", S, gi, self._d2f))
        return float(np.einsum("ij,ij->", gi, d_omega - np.einsum("kij,k->ij", pt.gamma, omega)))


class _RadialGeometry:
    def __init__(self, metric: Cohomog1Metric, f: RadialField, s):
        self.metric = metric
        self.field = f
        n = self.n = metric.n
        self.s = metric.check(s)
        v = self.v = metric.values(self.s)
        self.val, dv, ddv, _ = f.jet(self.s)
        self.dv = dv
        self.g = np.eye(n)
        self.ginv = self.g
        self.ricci = np.diag([v["ric_tt"]] + [v["ric_tan"]] * (n - 1))
        self.scalar = v["scalar"]
        self.grad = np.zeros(n)
        self.grad[0] = dv
        self.hess = np.diag([ddv] + [v["fp"] / v["B"] * dv] * (n - 1))

    @cached_property
    def scalar_gradient(self):
        out = np.zeros(self.n)
        out[0] = self.v["d_ric_tt"] + (self.n - 1) * self.v["d_ric_tan"]
        return out

    @cached_property
    def laplacian(self):
        return float(np.trace(self.hess))

    @cached_property
    def div_ricci(self):
        v = self.v
        out = np.zeros(self.n)
        out[0] = v["d_ric_tt"] + (self.n - 1) * v["fp"] / v["B"] * (v["ric_tt"] - v["ric_tan"])
        return out

    def div_S_dV(self, c: float) -> float:
        """Divergence of the radial field ``(Ric_tt + c) V' e_t`` from its own symbolic derivative."""
        cache = self.field.__dict__.setdefault("_flux_div_cache", {})
        if c not in cache:
            m = self.metric
            X = (m.exprs["ric_tt"] + const(c)) * self.field.derivs[1]
            cache[c] = compile_exprs([X, m.D(X)], [m.coord])
        x, dx = cache[c](self.s)
        return dx + (self.n - 1) * self.v["fp"] / self.v["B"] * x


def geometry_at(metric: Metric, V, p):
    """Curvature and potential data at one point, in a frame-neutral form."""
    if isinstance(metric, Cohomog1Metric):
        return _RadialGeometry(metric, as_radial(_potential_expr(V), metric), p)
    return _ChartGeometry(metric, as_field(_potential_expr(V), metric), p)


def _prepare(metric: Metric, V):
    V = _potential_expr(V)
    if isinstance(metric, Cohomog1Metric):
        return as_radial(V, metric)
    return as_field(V, metric)


def _L_star_matrix(geo):
    return -geo.laplacian * geo.g + geo.hess - geo.val * geo.ricci


def L_star(metric: Metric, u, p) -> SymTensor2:
    geo = geometry_at(metric, u, p)
    return SymTensor2(_L_star_matrix(geo), geo.g)


def s_tensor(metric: Metric, H_const: float, p) -> SymTensor2:
    """``S = Ric + H^2/(n-1) g`` with the boundary mean curvature extended as a constant."""
    geo = geometry_at(metric, const(1.0), p)
    return SymTensor2(geo.ricci + H_const ** 2 / (geo.n - 1) * geo.g, geo.g)


def _boundary_term(metric: Metric, face, f, q) -> tuple:
    """``(u_nu g_hat - u h, g_hat, u)`` at a boundary point."""
    if isinstance(metric, Cohomog1Metric):
        s = metric.face_value
        sff = _radial_sff(metric, s)
        val, dv, _, _ = f.jet(s)
        u_nu = metric.outward_sign * dv
    else:
        sff, pt, _ = _chart_sff(metric, _resolve_face(metric, face), q)
        val, grad, _ = f.jet(pt.p)
        u_nu = float(grad @ sff.normal)
    ghat = sff.ghat.components
    return SymTensor2(u_nu * ghat - val * sff.h.components, ghat), sff, val


def phi_star(metric: Metric, face: Optional[Face], u, q=None) -> dict:
    """Both components of ``Phi*_g u`` at the boundary point `q`."""
    f = _prepare(metric, u)
    bdry, _, _ = _boundary_term(metric, face, f, q)
    p = metric.face_value if isinstance(metric, Cohomog1Metric) else q
    geo = geometry_at(metric, f, p)
    return {"interior": SymTensor2(_L_star_matrix(geo), geo.g), "boundary": bdry}


@dataclass(frozen=True)
class LocalIdentity:
    residual: float
    lhs: float                  # V |S|^2
    div_combined: float         # div(S(DV, .)) differentiated as one field
    div_split: float            # <Hess V, S> + (div S)(DV)
    hess_dot_S: float
    divS_dot_dV: float
    pinching_term: float        # (R+H^2)/(n-1) * (R + n H^2/(n-1)) * V

    @property
    def split_residual(self) -> float:
        return abs(self.lhs - self.div_split - self.pinching_term)


def local_identity_terms(metric: Metric, V, H_const: float, p, r_const_tol: float = 1e-8) -> LocalIdentity:
    """Both sides of ``V|S|^2 = div(S(DV, .)) + (R+H^2)/(n-1) (R + n H^2/(n-1)) V``.

    The left side is written as ``V |S|^2`` rather than ``V^-1 |V S|^2`` so that
    points where V is small cause no trouble.
    """
    geo = geometry_at(metric, V, p)
    n = geo.n
    if not geo.val > 0.0:
        raise NonPositivePotentialError(f"V = {geo.val!r} is not positive at {p!r}")
    dR = geo.scalar_gradient
    dR_norm = float(np.sqrt(max(dR @ geo.ginv @ dR, 0.0)))
    if dR_norm > r_const_tol * (1.0 + abs(geo.scalar)):
        raise NonConstantScalarError(f"|dR| = {dR_norm:.3g} at {p!r}")
    c = H_const ** 2 / (n - 1)
    S = SymTensor2(geo.ricci + c * geo.g, geo.g)
    R = geo.scalar
    hess_dot_S = S.inner(SymTensor2(geo.hess, geo.g))
    div_S = geo.div_ricci              # div(c g) = 0
    divS_dot_dV = float(div_S @ geo.ginv @ geo.grad)
    div_combined = geo.div_S_dV(c)
    lhs = geo.val * S.norm_sq()
    pinch = (R + H_const ** 2) / (n - 1) * (R + n * H_const ** 2 / (n - 1)) * geo.val
    return LocalIdentity(abs(lhs - div_combined - pinch), lhs, div_combined,
                         hess_dot_S + divS_dot_dV, hess_dot_S, divS_dot_dV, pinch)


def local_identity_residual(metric: Metric, V, H_const: float, p) -> float:
    return local_identity_terms(metric, V, H_const, p).residual


def interior_samples(metric: Metric, count: int, extent: float = 10.0) -> list:
    """Deterministic interior sample points (cell midpoints, or Halton for charts)."""
    if isinstance(metric, Cohomog1Metric):
        return [float(s) for s in metric.sample_points(count, extent)]
    lo, hi = [], []
    for a, b in metric.domain:
        if not math.isfinite(b):
            b = extent if extent > a else a + extent
        if not math.isfinite(a):
            a = -extent if -extent < b else b - extent
        lo.append(a)
        hi.append(b)
    lo, hi = np.array(lo), np.array(hi)
    unit = qmc.Halton(d=metric.dim, scramble=False).random(count + 1)[1:]
    return [lo + u * (hi - lo) for u in unit]


def boundary_points(metric: Metric, face, count: int) -> list:
    if isinstance(metric, Cohomog1Metric):
        return [metric.face_value]
    return list(face_samples(metric, _resolve_face(metric, face), count))


@dataclass(frozen=True)
class StaticReport:
    interior_residual: float
    trace_residual: float
    admissibility_residual: float
    scalar_spread: float
    scalar_mean: float
    trace_consistency: float
    tolerance: float
    is_static_potential: bool
    is_admissible: bool
    samples: int
    boundary_samples: int
    V_min: float = field(default=math.nan)


def verify_static(metric: Metric, face: Optional[Face], V, plan: SamplePlan = SamplePlan(),
                  tol: float = DEFAULT_TOL) -> StaticReport:
    """Check ``L*_g V = 0`` on interior samples and ``V_nu g_hat = V h`` on the face.

    Raises :class:`NonPositivePotentialError` if V is not positive at an
    interior sample. The trace of ``L*_g V`` is cross-checked against
    ``-(n-1) Lap V - V R`` at every sample.
    """
    f = _prepare(metric, V)
    interior = trace = consistency = 0.0
    spread_min, spread_max = math.inf, -math.inf
    v_min = math.inf
    r_sum = 0.0
    pts = interior_samples(metric, plan.interior, plan.extent)
    for p in pts:
        geo = geometry_at(metric, f, p)
        n = geo.n
        if not geo.val > 0.0:
            raise NonPositivePotentialError(f"V = {geo.val!r} at interior sample {np.asarray(p).tolist()}")
        v_min = min(v_min, geo.val)
        L = SymTensor2(_L_star_matrix(geo), geo.g)
        interior = max(interior, L.op_norm())
        R = geo.scalar
        trace = max(trace, abs(geo.laplacian + R / (n - 1) * geo.val))
        expected_trace = -(n - 1) * geo.laplacian - geo.val * R
        scale = 1.0 + abs(geo.laplacian) * n + abs(geo.val * R)
        consistency = max(consistency, abs(L.trace() - expected_trace) / scale)
        spread_min, spread_max = min(spread_min, R), max(spread_max, R)
        r_sum += R
    if consistency > 1e-10:
        raise ArithmeticError(f"trace of L*V disagrees with -(n-1)Lap V - V R by {consistency:.3g}")
    adm = 0.0
    bpts = boundary_points(metric, face, plan.boundary)
    for q in bpts:
        term, _, _ = _boundary_term(metric, face, f, q)
        adm = max(adm, term.op_norm())
    static = interior < tol
    return StaticReport(
        interior_residual=interior, trace_residual=trace, admissibility_residual=adm,
        scalar_spread=spread_max - spread_min, scalar_mean=r_sum / len(pts),
        trace_consistency=consistency, tolerance=tol,
        is_static_potential=static, is_admissible=static and adm < tol,
        samples=len(pts), boundary_samples=len(bpts), V_min=v_min,
    )
