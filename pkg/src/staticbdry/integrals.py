"""Slice fluxes, truncated divergence bookkeeping, decay limits and the WCH mass.

Everything here is radial: a face integral over a coordinate slice is its
(constant) integrand times the slice area ``B^(n-1) Vol``, and volume
integrals reduce to one-dimensional quadrature.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .cohomog1 import Cohomog1Metric, as_radial
from .quadrature import integrate
from .static_ops import PotentialSpec

__all__ = [
    "QuadratureSettings", "FluxScan", "TruncatedIdentity", "flux_integral", "flux_scan",
    "fit_tail", "decay_liminf", "truncated_identity", "wch_mass", "divergence_check",
    "DecayUndefinedError", "NonConvergentTailError",
]

WEIGHTS = ("S", "Ric_plus_lambda_g")


class DecayUndefinedError(ValueError):
    pass


class NonConvergentTailError(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadratureSettings:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-14
    max_panels: int = 200000
    r_max: float = 1000.0
    tail_points: int = 12
    scan_points: int = 40
    fit_tol: float = 1e-3      # relative rms misfit above which the tail fit is inconclusive
    decay_tol: float = 1e-6

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.tail_points < 4 or self.scan_points < self.tail_points:
            raise ValueError("need scan_points >= tail_points >= 4")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")


def _field(metric, V):
    if isinstance(V, PotentialSpec):
        V = V.V
    return as_radial(V, metric)


def _away(metric: Cohomog1Metric) -> int:
    """Direction (+-1 in s) pointing away from the boundary face, toward the far end."""
    return -metric.outward_sign


def _weight_shift(metric: Cohomog1Metric, H_const: Optional[float], weight: str) -> float:
    if weight == "S":
        if H_const is None:
            raise ValueError("weight S needs the boundary mean curvature")
        return H_const ** 2 / (metric.n - 1)
    if weight == "Ric_plus_lambda_g":
        return float(metric.n - 1)
    raise ValueError(f"weight must be one of {WEIGHTS}, not {weight!r}")


def _slice_flux(metric, f, c, s, sign):
    # S(e_t, e_t) -> 0 while V' B^(n-1) grows, so the product is formed in
    # extended precision to keep the cancellation out of the result
    v = metric.values_mp(s)
    _, dv, _, _ = f.jet_mp(s)
    return float(sign * (v["ric_tt"] + c) * dv * v["B"] ** (metric.n - 1) * metric.vol)


def flux_integral(metric: Cohomog1Metric, V, H_const: Optional[float], r: float,
                  weight: str = "S") -> float:
    """``int_{s = r} W(DV, nu)`` with ``W = S`` or ``Ric + (n-1) g``.

    ``nu`` is the unit normal of the slice pointing away from the boundary
    face (increasing s when the face is the lower end).
    """
    c = _weight_shift(metric, H_const, weight)
    return _slice_flux(metric, _field(metric, V), c, metric.check(r), _away(metric))


@dataclass
class FluxScan:
    r: list
    flux: list
    c0: float
    c1: float
    p: Optional[float]
    residual: float
    raw_min: float
    tolerance: float
    inconclusive: bool
    weight: str = "S"

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.r, self.r[1:])):
            raise ValueError("scan radii must be strictly increasing")

    @property
    def limit(self) -> float:
        return self.c0

    @property
    def decay_holds(self) -> Optional[bool]:
        """``c0 <= tol``; None when the fit is inconclusive."""
        if self.inconclusive:
            return None
        return self.c0 <= self.tolerance

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "flux"])
            for r, f in zip(self.r, self.flux):
                w.writerow([format(r, ".17g"), format(f, ".17g")])

    def summary(self) -> dict:
        return {
            "c0": self.c0, "c1": self.c1, "p": self.p, "fit_residual": self.residual,
            "raw_min": self.raw_min, "tolerance": self.tolerance,
            "inconclusive": self.inconclusive, "decay_holds": self.decay_holds,
            "samples": len(self.r), "r_first": self.r[0], "r_last": self.r[-1],
            "weight": self.weight,
        }


def _projected(x, y, p):
    """Least-squares (c0, c1) for ``y = c0 + c1 x^-p`` and the rms misfit."""
    col = x ** -p
    scale = np.max(np.abs(col))
    M = np.column_stack([np.ones_like(x), col / scale])
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    res = y - M @ coef
    return coef[0], coef[1] / scale, float(np.sqrt(np.mean(res ** 2)))


def fit_tail(x, y, p_bounds=(0.05, 20.0)) -> tuple:
    """Fit ``y = c0 + c1 x^-p``; returns ``(c0, c1, p, relative rms misfit)``.

    ``c0`` and ``c1`` enter linearly and are projected out, leaving a 1D
    minimisation over p (coarse grid, then bounded refinement).
    Constant data gives ``p = None``.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    spread = float(np.ptp(y))
    if spread <= 1e-14 * max(1.0, float(np.max(np.abs(y)))):
        return float(np.mean(y)), 0.0, None, 0.0
    grid = np.geomspace(*p_bounds, 241)
    errs = [_projected(x, y, p)[2] for p in grid]
    k = int(np.argmin(errs))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    opt = minimize_scalar(lambda p: _projected(x, y, p)[2], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    p = float(opt.x) if opt.fun <= errs[k] else float(grid[k])
    c0, c1, rms = _projected(x, y, p)
    return float(c0), float(c1), p, rms / spread


def _scan_radii(metric: Cohomog1Metric, settings: QuadratureSettings) -> np.ndarray:
    """Geometric sequence of |s| from the face out to r_max, as increasing s values."""
    if not metric.unbounded:
        raise DecayUndefinedError("decay is undefined on a compact domain")
    face = metric.face_value
    away = _away(metric)
    start = max(abs(face) * 2.0, 1.0) if away * face >= 0 else 1.0
    if not start < settings.r_max:
        raise ValueError(f"r_max = {settings.r_max!r} must exceed the scan start {start!r}")
    mags = np.geomspace(start, settings.r_max, settings.scan_points)
    # keep the scan on the far side of the face
    s = away * mags
    if away > 0:
        s = s[s > face]
    else:
        s = s[s < face]
    return np.sort(s)


def flux_scan(metric: Cohomog1Metric, V, H_const: Optional[float],
              settings: QuadratureSettings = QuadratureSettings(), weight: str = "S") -> FluxScan:
    c = _weight_shift(metric, H_const, weight)
    f = _field(metric, V)
    s = _scan_radii(metric, settings)
    flux = np.array([_slice_flux(metric, f, c, x, _away(metric)) for x in s])
    # fit in the distance variable |s|, ordered toward the far end
    order = np.argsort(np.abs(s))
    tail = order[-settings.tail_points:]
    c0, c1, p, rel = fit_tail(np.abs(s[tail]), flux[tail])
    return FluxScan(s.tolist(), flux.tolist(), c0, c1, p, rel, float(flux.min()),
                    settings.decay_tol, rel > settings.fit_tol, weight)


def decay_liminf(metric: Cohomog1Metric, V, H_const: float,
                 settings: QuadratureSettings = QuadratureSettings()) -> FluxScan:
    """Tail-fitted limit of the S-flux through slices marching to the far end."""
    return flux_scan(metric, V, H_const, settings, "S")


def wch_mass(metric: Cohomog1Metric, V, settings: QuadratureSettings = QuadratureSettings()) -> dict:
    """``m(g, V) = -2/(n-2) * lim int (Ric + (n-1) g)(DV, nu)``."""
    if metric.n < 3:
        raise ValueError("the mass normalisation needs n >= 3")
    scan = flux_scan(metric, V, None, settings, "Ric_plus_lambda_g")
    if scan.inconclusive:
        raise NonConvergentTailError(f"tail fit misfit {scan.residual:.3g} exceeds {settings.fit_tol}")
    if scan.p is not None and scan.p <= 0.1:
        raise NonConvergentTailError(f"weighted flux does not settle (fitted exponent {scan.p:.3g})")
    return {"mass": -2.0 / (metric.n - 2) * scan.c0, "limit": scan.c0, "scan": scan}


@dataclass(frozen=True)
class TruncatedIdentity:
    lhs_volume: float
    inner_flux: float
    outer_flux: float
    pinching_volume_term: float
    residual: float
    relative_residual: float
    pinching_factor: float
    quadrature_error: float = 0.0


def truncated_identity(metric: Cohomog1Metric, V, H_const: float, r: float,
                       settings: QuadratureSettings = QuadratureSettings()) -> TruncatedIdentity:
    """Integrated form of ``V|S|^2 = div(S(DV, .)) + P V`` over the region between the face and ``s = r``.

    ``P = ((R+H^2)/(n-1)) (R + n H^2/(n-1))``. Fluxes use normals pointing out
    of the truncated region, so the face term is the flux through the
    boundary of M. R must be constant on the region.
    """
    n = metric.n
    f = _field(metric, V)
    c = H_const ** 2 / (n - 1)
    s0 = metric.face_value
    r = metric.check(r)
    if r == s0:
        raise ValueError("truncation radius coincides with the face")
    lo, hi = sorted((s0, r))
    R_mp = metric.values_mp(lo)["scalar"]
    R = float(R_mp)
    area = metric.vol

    def dens(s, what):
        v = metric.values(s)
        val, dv, ddv, _ = f.jet(s)
        jac = v["B"] ** (n - 1) * v["A"] * area
        if what == "lhs":
            a = v["ric_tt"] + c
            b = v["ric_tan"] + c
            return val * (a * a + (n - 1) * b * b) * jac
        if what == "V":
            return val * jac
        return v["scalar"]

    kw = dict(rel_tol=settings.rel_tol, abs_tol=settings.abs_tol, max_panels=settings.max_panels)
    lhs = integrate(lambda s: dens(s, "lhs"), lo, hi, **kw)
    vint = integrate(lambda s: dens(s, "V"), lo, hi, **kw)
    spread = max(abs(dens(s, "R") - R) for s in np.linspace(lo, hi, 17))
    if spread > 1e-8 * max(1.0, abs(R)):
        raise ValueError(f"scalar curvature is not constant on the region (spread {spread:.3g})")
    # in 40 digits, so an exactly pinched factor stays at rounding level
    P = float((R_mp + H_const ** 2) / (n - 1) * (R_mp + n * H_const ** 2 / (n - 1)))
    inner = _slice_flux(metric, f, c, s0, metric.outward_sign)
    outer = _slice_flux(metric, f, c, r, _away(metric))
    pinch = P * vint.value
    resid = abs(lhs.value - inner - outer - pinch)
    scale = max(abs(lhs.value), abs(inner), abs(outer), abs(pinch))
    return TruncatedIdentity(lhs.value, inner, outer, pinch, resid,
                             resid / scale if scale > 0 else 0.0, P,
                             lhs.error + abs(P) * vint.error)


def divergence_check(metric: Cohomog1Metric, phi, a: float, b: float,
                     settings: QuadratureSettings = QuadratureSettings()) -> dict:
    """Compare ``int_[a,b] div(phi e_t)`` with the boundary fluxes of the radial field ``phi e_t``."""
    n = metric.n
    f = as_radial(phi, metric)
    a, b = metric.check(a), metric.check(b)

    def integrand(s):
        v = metric.values(s)
        val, dval, _, _ = f.jet(s)
        div = dval + (n - 1) * v["fp"] / v["B"] * val
        return div * v["B"] ** (n - 1) * v["A"] * metric.vol

    vol = integrate(integrand, a, b, rel_tol=settings.rel_tol, abs_tol=settings.abs_tol,
                    max_panels=settings.max_panels)

    def through(s):
        return f.jet(s)[0] * metric.values(s)["B"] ** (n - 1) * metric.vol

    flux = through(b) - through(a)
    return {"volume": vol.value, "flux": flux, "error": vol.error,
            "relative": abs(vol.value - flux) / max(abs(flux), abs(vol.value), 1e-300)}
