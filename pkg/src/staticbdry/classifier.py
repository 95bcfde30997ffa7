"""Obata-type classification and the sufficient test for local surjectivity of g -> (R_g, H_g)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from .boundary import boundary_report
from .cohomog1 import Cohomog1Metric
from .curvature import ChartMetric, Face
from .integrals import QuadratureSettings, decay_liminf
from .static_ops import (SamplePlan, _prepare, geometry_at, interior_samples,
                         verify_static)
from .tensors import SymTensor2

__all__ = [
    "Tolerances", "ObataVerdict", "SurjectivityVerdict", "PrerequisiteError",
    "classify_obata", "surjectivity_verdict", "pinching_endpoints", "boundary_mean_curvature",
]

Metric = Union[ChartMetric, Cohomog1Metric]


class PrerequisiteError(ValueError):
    """The potential failed the static check that a verdict presupposes."""


@dataclass(frozen=True)
class Tolerances:
    static: float = 1e-8
    einstein: float = 1e-6      # on sup|VS| / sup V
    pinching: float = 1e-8      # absolute, on the constant R
    curvature: float = 1e-8     # |H|, sup|Ric|, |h| for Type I
    q_const: float = 1e-9       # Q max - min, relative to sup(|DV|^2 + lam^2 V^2)
    exp_fit: float = 1e-8
    boundary: float = 1e-8      # H variation and umbilicity deficit


@dataclass
class ObataVerdict:
    tag: str
    subtag: Optional[str]
    sup_VS: float
    sup_V: float
    VS_ratio: float
    R: float
    H: float
    lam: float
    pinching_product: float
    Q_deviation: Optional[float]
    dQ_max: Optional[float]
    exp_fit_deviation: Optional[float]
    fiber_flat: Optional[bool]
    ric_sup: float
    h_norm: float
    reasons: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SurjectivityVerdict:
    surjective: Union[bool, str]     # True or "unknown"; never False
    condition: Optional[int]
    fired: list
    H_variation: float
    umbilicity_deficit: float
    pinching_holds: bool
    decay_holds: Optional[bool]
    admissible: bool
    obata: ObataVerdict
    R: float
    H: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["obata"] = self.obata.to_dict()
        return d


def boundary_mean_curvature(metric: Metric, face: Optional[Face] = None, samples: int = 16) -> float:
    return boundary_report(metric, face, samples).H_mean


def pinching_endpoints(R: float, H: float, n: int, tol: float = 1e-8) -> dict:
    """Which ends of ``-(n/(n-1)) H^2 <= R <= -H^2`` are attained, with the interval test.

    Both ends coincide only when H = 0; attaining both with ``H^2`` beyond
    what the tolerance allows is reported as inconsistent.
    """
    upper = -H * H
    lower = -n / (n - 1) * H * H
    at_upper = abs(R - upper) < tol
    at_lower = abs(R - lower) < tol
    consistent = not (at_upper and at_lower) or H * H / (n - 1) < 2 * tol
    if not consistent:
        raise ArithmeticError(f"R = {R!r} sits at both pinching ends with H = {H!r}")
    return {
        "holds": lower - tol <= R <= upper + tol,
        "at_upper": at_upper, "at_lower": at_lower, "degenerate": at_upper and at_lower,
        "lower": lower, "upper": upper,
    }


def _exp_fit(metric, f, pts, lam):
    """Deviation of V from ``V0 exp(+-lam t)`` in arclength t."""
    if isinstance(metric, Cohomog1Metric):
        from .cohomog1 import arclength
        s0 = metric.face_value
        t = np.array([arclength(metric, s0, s) for s in pts])
        logv = np.log([f.jet(s)[0] for s in pts])
        M = np.column_stack([np.ones_like(t), t])
        coef, *_ = np.linalg.lstsq(M, logv, rcond=None)
        misfit = float(np.max(np.abs(logv - M @ coef)))
        return max(misfit, abs(abs(coef[1]) - abs(lam)))
    # chart: V = V0 exp(lam t) with |Dt| = 1 forces |D log V| = |lam|
    dev = 0.0
    for p in pts:
        geo = geometry_at(metric, f.expr, p)
        dlog = geo.grad / geo.val
        dev = max(dev, abs(math.sqrt(max(dlog @ geo.ginv @ dlog, 0.0)) - abs(lam)))
    return dev


def classify_obata(metric: Metric, face: Optional[Face], V, H_const: Optional[float] = None,
                   plan: SamplePlan = SamplePlan(), tol: Tolerances = Tolerances(),
                   check_static: bool = True) -> ObataVerdict:
    """Decide whether ``V S = 0`` holds and, if so, which rigid model the data match."""
    f = _prepare(metric, V)
    if check_static:
        rep = verify_static(metric, face, V, plan, tol.static)
        if not rep.is_static_potential:
            raise PrerequisiteError(f"V is not static (residual {rep.interior_residual:.3g})")
    bdry = boundary_report(metric, face, min(plan.boundary, 16))
    H = bdry.H_mean if H_const is None else float(H_const)
    pts = interior_samples(metric, plan.interior, plan.extent)
    n = metric.n if isinstance(metric, Cohomog1Metric) else metric.dim
    lam = H / (n - 1)
    c = H * H / (n - 1)
    sup_vs = sup_v = ric_sup = 0.0
    Rs, Qs, dQ = [], [], 0.0
    qscale = 0.0
    for p in pts:
        geo = geometry_at(metric, f, p)
        S = SymTensor2(geo.ricci + c * geo.g, geo.g)
        sup_vs = max(sup_vs, abs(geo.val) * S.op_norm())
        sup_v = max(sup_v, abs(geo.val))
        ric_sup = max(ric_sup, SymTensor2(geo.ricci, geo.g).op_norm())
        Rs.append(geo.scalar)
        du = geo.ginv @ geo.grad
        grad_sq = float(geo.grad @ du)
        Qs.append(grad_sq - lam * lam * geo.val ** 2)
        qscale = max(qscale, grad_sq + lam * lam * geo.val ** 2)
        dq = 2.0 * geo.hess @ du - 2.0 * lam * lam * geo.val * geo.grad
        dQ = max(dQ, math.sqrt(max(float(dq @ geo.ginv @ dq), 0.0)))
    R = float(np.mean(Rs))
    ratio = sup_vs / sup_v if sup_v > 0 else math.inf
    pinch = (R + H * H) * (R + n / (n - 1) * H * H)
    h_norm = float(max(abs(x) for x in bdry.H)) / math.sqrt(n - 1) + bdry.umbilicity_deficit
    fiber_flat = metric.fiber_flat if isinstance(metric, Cohomog1Metric) else None
    out = dict(subtag=None, sup_VS=sup_vs, sup_V=sup_v, VS_ratio=ratio, R=R, H=H, lam=lam,
               pinching_product=pinch, Q_deviation=None, dQ_max=None, exp_fit_deviation=None,
               fiber_flat=fiber_flat, ric_sup=ric_sup, h_norm=h_norm)
    thr = tol.einstein
    if ratio > 10 * thr:
        return ObataVerdict("NotObata", reasons=[f"sup|VS|/sup V = {ratio:.3g} > {10 * thr:.3g}"], **out)
    if ratio >= 0.1 * thr:
        return ObataVerdict("Inconclusive", reasons=[f"sup|VS|/sup V = {ratio:.3g} within a decade of {thr:.3g}"], **out)
    reasons = []
    if abs(H) < tol.curvature:
        if ric_sup >= tol.curvature:
            reasons.append(f"sup|Ric| = {ric_sup:.3g}")
        if h_norm >= tol.curvature:
            reasons.append(f"|h| = {h_norm:.3g}")
        if reasons:
            return ObataVerdict("Inconclusive", reasons=["VS = 0 with H = 0 but"] + reasons, **out)
        return ObataVerdict("TypeI", **out)
    q_dev = float(max(Qs) - min(Qs))
    out["Q_deviation"] = q_dev
    out["dQ_max"] = dQ
    out["exp_fit_deviation"] = fit = _exp_fit(metric, f, pts, lam)
    if abs(R + n / (n - 1) * H * H) >= tol.pinching:
        reasons.append(f"R + n H^2/(n-1) = {R + n / (n - 1) * H * H:.3g}")
    if q_dev >= tol.q_const * max(1.0, qscale):
        reasons.append(f"Q varies by {q_dev:.3g}")
    if fit >= tol.exp_fit:
        reasons.append(f"V departs from V0 exp(lam t) by {fit:.3g}")
    if reasons:
        return ObataVerdict("Inconclusive", reasons=["VS = 0 with H != 0 but"] + reasons, **out)
    if fiber_flat:
        out["subtag"] = "cusp"
    return ObataVerdict("TypeII", **out)


def surjectivity_verdict(metric: Metric, face: Optional[Face], V, plan: SamplePlan = SamplePlan(),
                         settings: QuadratureSettings = QuadratureSettings(),
                         tol: Tolerances = Tolerances(), H_const: Optional[float] = None) -> SurjectivityVerdict:
    """Sufficient conditions for ``g -> (R_g, H_g)`` to be a local surjection.

    Condition 1: H not locally constant. Condition 2: boundary not umbilical.
    Condition 3: pinching, decay of the S-flux and V not of Obata type.
    The answer is ``True`` or ``"unknown"``; the test is one-sided.
    """
    rep = verify_static(metric, face, V, plan, tol.static)
    if not rep.is_static_potential:
        raise PrerequisiteError(f"V is not static (residual {rep.interior_residual:.3g})")
    bdry = boundary_report(metric, face, plan.boundary)
    H = bdry.H_mean if H_const is None else float(H_const)
    n = metric.n if isinstance(metric, Cohomog1Metric) else metric.dim
    R = rep.scalar_mean
    notes = []
    fired = []
    if bdry.H_variation > tol.boundary:
        fired.append(1)
    if bdry.umbilicity_deficit > tol.boundary:
        fired.append(2)
    pin = pinching_endpoints(R, H, n, tol.pinching)
    if isinstance(metric, Cohomog1Metric) and metric.unbounded:
        scan = decay_liminf(metric, V, H, settings)
        decay = scan.decay_holds
        if decay is None:
            notes.append("flux tail fit inconclusive")
    elif isinstance(metric, Cohomog1Metric):
        decay = True
        notes.append("compact region: no decay condition needed")
    else:
        decay = None
        notes.append("flux decay not evaluated on a generic chart")
    obata = classify_obata(metric, face, V, H, plan, tol, check_static=False)
    if pin["holds"] and decay is True and obata.tag == "NotObata":
        fired.append(3)
    if not rep.is_admissible:
        notes.append("V is not admissible on the boundary")
    return SurjectivityVerdict(
        surjective=True if fired else "unknown", condition=fired[0] if fired else None,
        fired=fired, H_variation=bdry.H_variation, umbilicity_deficit=bdry.umbilicity_deficit,
        pinching_holds=pin["holds"], decay_holds=decay, admissible=rep.is_admissible,
        obata=obata, R=R, H=H, notes=notes,
    )
