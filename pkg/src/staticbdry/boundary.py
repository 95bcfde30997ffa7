"""Second fundamental form, mean curvature and boundary identities on a coordinate face.

Sign conventions: ``nu`` is the outward unit normal and
``h(X, Y) = -<nu, D_X Y>``, ``H = tr h``. The unit sphere bounding the unit
ball therefore has ``h = g_hat`` and ``H = n - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.stats import qmc

from .cohomog1 import Cohomog1Metric, as_radial
from .curvature import ChartMetric, Face, ScalarField
from .expr import as_expr, substitute
from .tensors import SymTensor2

__all__ = [
    "SecondFundamentalForm", "BoundaryReport", "second_fundamental_form",
    "boundary_report", "boundary_identity_residual", "face_samples",
]

Metric = Union[ChartMetric, Cohomog1Metric]


@dataclass(frozen=True)
class SecondFundamentalForm:
    h: SymTensor2
    ghat: SymTensor2
    H: float
    normal: np.ndarray       # outward unit normal; chart components, or (+-1, 0, ...) in the radial frame

    @property
    def trace_free(self) -> SymTensor2:
        k = self.ghat.dim
        return self.h - self.ghat.scaled(self.H / k) if k else self.h


@dataclass(frozen=True)
class BoundaryReport:
    H: list
    umbilicity_deficit: float
    H_variation: float
    normal_ricci_deficit: float
    trace_free_trace: float = 0.0
    points: list = field(default_factory=list)

    @property
    def H_mean(self) -> float:
        return float(np.mean(self.H))


def _resolve_face(metric: ChartMetric, face: Optional[Face]) -> Face:
    face = face or metric.face
    if face is None:
        raise ValueError("no boundary face given or designated on the metric")
    return face


def _check_on_face(metric: ChartMetric, face: Face, q) -> np.ndarray:
    q = metric.check_point(q)
    if q[face.index] != metric.face_value_of(face):
        raise ValueError(f"point {q.tolist()} is not on the face {face}")
    return q


def _chart_normal(pt, face: Face):
    k = face.index
    gkk = pt.ginv[k, k]
    if not gkk > 0.0:
        raise ValueError("face normal direction is null")
    nu_up = face.sign * pt.ginv[:, k] / np.sqrt(gkk)
    return nu_up, face.sign / np.sqrt(gkk)


def _chart_sff(metric: ChartMetric, face: Face, q) -> tuple:
    pt = metric.at(_check_on_face(metric, face, q))
    nu_up, nu_k = _chart_normal(pt, face)
    tang = [i for i in range(metric.dim) if i != face.index]
    h = -nu_k * pt.gamma[face.index][np.ix_(tang, tang)]
    ghat = pt.g[np.ix_(tang, tang)]
    ghat_t = SymTensor2(ghat, ghat)
    h_t = SymTensor2(h, ghat)
    return SecondFundamentalForm(h_t, ghat_t, h_t.trace(), nu_up), pt, tang


def _radial_sff(metric: Cohomog1Metric, s=None) -> SecondFundamentalForm:
    s = metric.face_value if s is None else s
    v = metric.values(s)
    k = metric.n - 1
    coeff = metric.outward_sign * v["fp"] / v["B"]
    eye = np.eye(k)
    normal = np.zeros(metric.n)
    normal[0] = metric.outward_sign
    return SecondFundamentalForm(SymTensor2(coeff * eye, eye), SymTensor2(eye, eye), k * coeff, normal)


def second_fundamental_form(metric: Metric, face: Optional[Face] = None, q=None) -> SecondFundamentalForm:
    """Second fundamental form, induced metric and mean curvature at boundary point `q`.

    For a :class:`Cohomog1Metric` the face is the metric's own boundary end
    and `q` may be omitted; tensors are then given in an orthonormal frame.
    """
    if isinstance(metric, Cohomog1Metric):
        return _radial_sff(metric)
    face = _resolve_face(metric, face)
    return _chart_sff(metric, face, q)[0]


def face_samples(metric: ChartMetric, face: Face, count: int) -> np.ndarray:
    """Deterministic Halton points on a coordinate face (first, corner point skipped)."""
    tang = [i for i in range(metric.dim) if i != face.index]
    lo = np.array([metric.domain[i][0] for i in tang])
    hi = np.array([metric.domain[i][1] for i in tang])
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("face sampling needs finite tangential coordinate ranges")
    unit = qmc.Halton(d=len(tang), scramble=False).random(count + 1)[1:]
    pts = np.empty((count, metric.dim))
    pts[:, face.index] = metric.face_value_of(face)
    pts[:, tang] = lo + unit * (hi - lo)
    return pts


def _normal_ricci(pt, sff: SecondFundamentalForm, tang) -> float:
    w = pt.ricci[tang] @ sff.normal
    ghat = sff.ghat.components
    return float(np.sqrt(max(w @ np.linalg.solve(ghat, w), 0.0)))


def boundary_report(metric: Metric, face: Optional[Face] = None, samples: int = 64) -> BoundaryReport:
    """Mean curvature, umbilicity and ``Ric(., nu)`` over a sample of the face.

    A cohomogeneity-one face is homogeneous, so one evaluation stands for all.
    """
    if isinstance(metric, Cohomog1Metric):
        sff = _radial_sff(metric)
        return BoundaryReport([sff.H], sff.trace_free.op_norm(), 0.0, 0.0,
                              abs(sff.trace_free.trace()), [[metric.face_value]])
    face = _resolve_face(metric, face)
    Hs, umb, nric, tft, pts = [], 0.0, 0.0, 0.0, []
    for q in face_samples(metric, face, samples):
        sff, pt, tang = _chart_sff(metric, face, q)
        Hs.append(sff.H)
        tf = sff.trace_free
        umb = max(umb, tf.op_norm())
        tft = max(tft, abs(tf.trace()))
        nric = max(nric, _normal_ricci(pt, sff, tang))
        pts.append(q.tolist())
    return BoundaryReport(Hs, umb, float(max(Hs) - min(Hs)), nric, tft, pts)


def boundary_identity_residual(metric: Metric, face: Optional[Face] = None, V=None, q=None) -> dict:
    """Residuals of the boundary Laplacian split and of the traced Gauss relation.

    ``laplace_split_residual = |Lap V - (Lap_bdry V + H V_nu + V_nu_nu)|`` and
    ``gauss_residual = |Lap_bdry V + (H^2/(n-1) + Ric(nu, nu)) V|``.
    The second one vanishes only for admissible potentials.
    """
    if V is None:
        raise ValueError("a potential V is required")
    if isinstance(metric, Cohomog1Metric):
        n = metric.n
        s = metric.face_value
        v = metric.values(s)
        val, dv, ddv, _ = as_radial(V, metric).jet(s)
        sff = _radial_sff(metric, s)
        lap = ddv + (n - 1) * v["fp"] / v["B"] * dv
        lap_bdry = 0.0
        v_nu = metric.outward_sign * dv
        v_nunu = ddv
        r_nunu = v["ric_tt"]
    else:
        face = _resolve_face(metric, face)
        n = metric.dim
        sff, pt, tang = _chart_sff(metric, face, q)
        field_ = ScalarField(V, metric.coords)
        val, grad, hess = pt.hessian_of(field_)
        lap = float(np.einsum("ij,ij->", pt.ginv, hess))
        nu = sff.normal
        v_nu = float(grad @ nu)
        v_nunu = float(nu @ hess @ nu)
        r_nunu = float(nu @ pt.ricci @ nu)
        bdry = metric.restricted_to_face(face)
        frozen = metric.coords[face.index]
        v_bdry = substitute(as_expr(field_.expr), {frozen: metric.face_value_of(face)})
        bfield = ScalarField(v_bdry, bdry.coords)
        bpt = bdry.at(np.delete(pt.p, face.index))
        _, _, bhess = bpt.hessian_of(bfield)
        lap_bdry = float(np.einsum("ij,ij->", bpt.ginv, bhess))
    H = sff.H
    return {
        "laplace_split_residual": abs(lap - (lap_bdry + H * v_nu + v_nunu)),
        "gauss_residual": abs(lap_bdry + (H * H / (n - 1) + r_nunu) * val),
        "laplacian": lap,
        "boundary_laplacian": lap_bdry,
        "V": val,
        "V_nu": v_nu,
        "V_nunu": v_nunu,
        "ric_nunu": r_nunu,
        "H": H,
    }
