"""Cohomogeneity-one metrics ``g = A(s)^2 ds^2 + B(s)^2 b`` over an Einstein fiber.

The fiber ``(Sigma, b)`` is never meshed: it is described by its Einstein
constant ``kappa`` (``Ric_b = kappa b``), its volume, and whether it is flat.
Tangential quantities are returned as coefficients on unit tangential
directions, radial ones on the unit radial direction ``e_t = A^{-1} d_s``.

A prime always means the arclength derivative ``f' = A^{-1} df/ds``; the chart
coordinate ``s`` is not assumed to be arclength.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, NamedTuple, Optional

import numpy as np

from .curvature import ChartMetric, DomainError, Face
from .expr import Expr, as_expr, compile_exprs, const, differentiate, substitute
from .quadrature import integrate

__all__ = [
    "Cohomog1Metric", "RadialField", "RadialCurvature", "RadialHessian", "RadialSolution",
    "curvature_radial", "hessian_radial", "laplacian_radial", "sectional_radial",
    "divergence_radial", "solve_radial_static_ode", "arclength", "sphere_volume",
]


def sphere_volume(k: int) -> float:
    """Volume of the unit round k-sphere, ``2 pi^((k+1)/2) / Gamma((k+1)/2)``."""
    return 2.0 * math.pi ** ((k + 1) / 2) / math.gamma((k + 1) / 2)


class RadialCurvature(NamedTuple):
    ric_tt: float
    ric_tan: float
    scalar: float


class RadialHessian(NamedTuple):
    tt: float
    tan: float


class Cohomog1Metric:
    """Warped metric over an abstract Einstein fiber.

    ``boundary`` names the end of ``domain`` carrying the boundary face
    (``"lower"`` or ``"upper"``); that end must be finite.
    """

    def __init__(self, n: int, A, B, kappa: float = 0.0, vol: float = 1.0,
                 fiber_flat: bool = False, domain=(0.0, math.inf), boundary: str = "lower",
                 coord: str = "s", params: Optional[Mapping[str, float]] = None,
                 check_samples: int = 33):
        if n < 2:
            raise ValueError("dimension must be at least 2")
        if fiber_flat and kappa != 0.0:
            raise ValueError("a flat fiber has kappa = 0")
        if n == 2 and kappa != 0.0:
            raise ValueError("a one-dimensional fiber has kappa = 0")
        if not vol > 0.0:
            raise ValueError("fiber volume must be positive")
        if boundary not in ("lower", "upper"):
            raise ValueError(f"boundary must be 'lower' or 'upper', not {boundary!r}")
        s0, s1 = (float(x) for x in domain)
        if not s0 < s1:
            raise ValueError("empty domain")
        if not math.isfinite(s0 if boundary == "lower" else s1):
            raise ValueError("the boundary end of the domain must be finite")
        params = dict(params or {})
        self.n = int(n)
        self.coord = coord
        self.A = substitute(as_expr(A), params)
        self.B = substitute(as_expr(B), params)
        self.kappa = float(kappa)
        self.vol = float(vol)
        self.fiber_flat = bool(fiber_flat)
        self.domain = (s0, s1)
        self.boundary = boundary
        for s in self.sample_points(check_samples, open_interval=True):
            a, b = self._base(s)[:2]
            if not (a > 0.0 and b > 0.0):
                raise ValueError(f"A and B must be positive; A={a!r}, B={b!r} at {coord}={s!r}")

    # symbolic pieces

    def D(self, e) -> Expr:
        """Arclength derivative of an expression in the radial coordinate."""
        return differentiate(as_expr(e), self.coord) / self.A

    @cached_property
    def exprs(self) -> dict:
        n, B = self.n, self.B
        fp = self.D(B)
        fpp = self.D(fp)
        ric_tt = const(-(n - 1)) * fpp / B
        ric_tan = const(self.kappa) / B ** 2 - fpp / B - const(n - 2) * fp ** 2 / B ** 2
        scalar = ric_tt + const(n - 1) * ric_tan
        return {
            "A": self.A, "B": B, "fp": fp, "fpp": fpp,
            "ric_tt": ric_tt, "ric_tan": ric_tan, "scalar": scalar,
            "d_ric_tt": self.D(ric_tt), "d_ric_tan": self.D(ric_tan),
        }

    @cached_property
    def _fn(self):
        keys = list(self.exprs)
        return keys, compile_exprs([self.exprs[k] for k in keys], [self.coord])

    def values(self, s: float) -> dict:
        keys, fn = self._fn
        return dict(zip(keys, fn(self.check(s))))

    @cached_property
    def _fn_mp(self):
        keys = list(self.exprs)
        return keys, compile_exprs([self.exprs[k] for k in keys], [self.coord], dps=40)

    def values_mp(self, s) -> dict:
        """Like :meth:`values` but evaluated in 40-digit mpmath arithmetic."""
        keys, fn = self._fn_mp
        self.check(float(s))
        return dict(zip(keys, fn(s)))

    def _base(self, s):
        return self._base_fn(s)

    @cached_property
    def _base_fn(self):
        return compile_exprs([self.A, self.B], [self.coord])

    # domain helpers

    @property
    def face_value(self) -> float:
        return self.domain[0] if self.boundary == "lower" else self.domain[1]

    @property
    def unbounded(self) -> bool:
        return not all(math.isfinite(x) for x in self.domain)

    @property
    def outward_sign(self) -> int:
        """+1 when the outward normal of the boundary face points toward increasing s."""
        return 1 if self.boundary == "upper" else -1

    def check(self, s: float) -> float:
        s = float(s)
        lo, hi = self.domain
        if not lo <= s <= hi:
            raise DomainError(f"{self.coord} = {s!r} outside [{lo}, {hi}]")
        return s

    def sample_range(self, extent: float = 10.0) -> tuple:
        """Finite sub-interval of the domain; infinite ends are cut at +-extent.

        If the finite end already lies beyond the cut, the cut moves to
        ``extent`` units past it.
        """
        lo, hi = self.domain
        if not math.isfinite(hi):
            hi = extent if extent > lo else lo + extent
        if not math.isfinite(lo):
            lo = -extent if -extent < hi else hi - extent
        return lo, hi

    def sample_points(self, count: int, extent: float = 10.0, open_interval: bool = True) -> np.ndarray:
        """Deterministic cell-midpoint samples (or a closed grid with endpoints)."""
        lo, hi = self.sample_range(extent)
        if open_interval:
            return lo + (hi - lo) * (np.arange(count) + 0.5) / count
        return np.linspace(lo, hi, count)

    def to_chart(self, fiber: str = "sphere") -> ChartMetric:
        """Realize the metric in explicit coordinates on a round-sphere or flat-torus fiber.

        The sphere is scaled so that its Einstein constant equals ``kappa``.
        Fiber coordinates are named ``y1, y2, ...``.
        """
        k = self.n - 1
        names = [f"y{i + 1}" for i in range(k)]
        if self.coord in names:
            raise ValueError(f"radial coordinate name {self.coord!r} clashes with fiber coordinates")
        if fiber == "torus":
            if self.kappa != 0.0:
                raise ValueError("a flat torus fiber needs kappa = 0")
            fib = [const(1.0)] * k
            fib_domain = [(0.0, 1.0)] * k
        elif fiber == "sphere":
            if k < 2 or self.kappa <= 0.0:
                raise ValueError("a round sphere fiber needs dimension >= 2 and kappa > 0")
            radius_sq = (k - 1) / self.kappa
            fib, prod = [], const(radius_sq)
            for i in range(k):
                fib.append(prod)
                prod = prod * as_expr(f"sin({names[i]})") ** 2
            fib_domain = [(0.0, math.pi)] * (k - 1) + [(0.0, 2.0 * math.pi)]
        else:
            raise ValueError(f"unknown fiber {fiber!r}")
        n = self.n
        comps = [[const(0.0)] * n for _ in range(n)]
        comps[0][0] = self.A ** 2
        for i in range(k):
            comps[i + 1][i + 1] = self.B ** 2 * fib[i]
        face = Face(0, self.boundary)
        return ChartMetric([self.coord, *names], comps, [self.domain, *fib_domain], face=face)


class RadialField:
    """A function of the radial coordinate with arclength derivatives up to third order."""

    def __init__(self, metric: Cohomog1Metric, V, params: Optional[Mapping[str, float]] = None):
        self.metric = metric
        self.expr = substitute(as_expr(V), dict(params or {}))
        d1 = metric.D(self.expr)
        d2 = metric.D(d1)
        d3 = metric.D(d2)
        self.derivs = (self.expr, d1, d2, d3)
        self._fn = compile_exprs(list(self.derivs), [metric.coord])
        self._fn_mp = None

    def jet(self, s: float) -> tuple:
        """``(V, V', V'', V''')`` in arclength derivatives."""
        return self._fn(self.metric.check(s))

    def jet_mp(self, s) -> tuple:
        """Arclength jet in 40-digit mpmath arithmetic."""
        if self._fn_mp is None:
            self._fn_mp = compile_exprs(list(self.derivs), [self.metric.coord], dps=40)
        self.metric.check(float(s))
        return self._fn_mp(s)


def as_radial(V, metric: Cohomog1Metric) -> RadialField:
    if isinstance(V, RadialField):
        if V.metric is not metric:
            raise ValueError("radial field belongs to a different metric")
        return V
    return RadialField(metric, V)


def curvature_radial(metric: Cohomog1Metric, s: float) -> RadialCurvature:
    v = metric.values(s)
    return RadialCurvature(v["ric_tt"], v["ric_tan"], v["scalar"])


def hessian_radial(metric: Cohomog1Metric, V, s: float) -> RadialHessian:
    field = as_radial(V, metric)
    _, dv, ddv, _ = field.jet(s)
    v = metric.values(s)
    return RadialHessian(ddv, v["fp"] / v["B"] * dv)


def laplacian_radial(metric: Cohomog1Metric, V, s: float) -> float:
    h = hessian_radial(metric, V, s)
    return h.tt + (metric.n - 1) * h.tan


def sectional_radial(metric: Cohomog1Metric, s: float) -> tuple:
    """Sectional curvatures ``(K(e_t, X), K(X, Y))`` for unit tangential X, Y.

    The tangential one needs the fiber's own sectional curvature, known here
    only for flat fibers and two-dimensional fibers; otherwise it is None.
    """
    v = metric.values(s)
    k_rad = -v["fpp"] / v["B"]
    if metric.n < 3:
        return k_rad, None
    if metric.fiber_flat:
        k_fib = 0.0
    elif metric.n == 3:
        k_fib = metric.kappa
    else:
        return k_rad, None
    return k_rad, (k_fib - v["fp"] ** 2) / v["B"] ** 2


def divergence_radial(metric: Cohomog1Metric, phi, s: float) -> float:
    """Divergence of the radial vector field ``phi(s) e_t``."""
    field = as_radial(phi, metric)
    val, dval, _, _ = field.jet(s)
    v = metric.values(s)
    return dval + (metric.n - 1) * v["fp"] / v["B"] * val


def arclength(metric: Cohomog1Metric, s_from: float, s_to: float, rel_tol: float = 1e-12) -> float:
    """Signed g-length of the radial segment from `s_from` to `s_to`."""
    a_fn = compile_exprs([metric.A], [metric.coord])
    return integrate(lambda s: a_fn(s)[0], metric.check(s_from), metric.check(s_to),
                     rel_tol=rel_tol, abs_tol=1e-15).value


@dataclass(frozen=True)
class RadialSolution:
    s: np.ndarray
    V: np.ndarray
    dV: np.ndarray          # arclength derivative
    tangential_residual: float
    richardson_error: float
    scalar_spread: float


def solve_radial_static_ode(metric: Cohomog1Metric, V0: float, dV0: float, s_start: float,
                            s_end: float, steps: int = 4096, r_const_tol: float = 1e-8) -> RadialSolution:
    """Integrate the radial part of ``Hess V = (Ric - R/(n-1) g) V`` with classical RK4.

    `dV0` is the arclength derivative at `s_start`. The tangential component
    of the same equation is not imposed; its largest violation on the grid
    is returned as ``tangential_residual``. A second solve with half the step
    gives ``richardson_error``.
    """
    n = metric.n
    grid = np.linspace(metric.check(s_start), metric.check(s_end), steps + 1)
    scal = np.array([metric.values(s)["scalar"] for s in grid])
    spread = float(scal.max() - scal.min())
    if spread > r_const_tol:
        raise ValueError(f"scalar curvature varies by {spread:.3g} along the grid")
    R = float(scal.mean())
    keys, fn = metric._fn
    ia, ib, ifp, itt, itan = (keys.index(k) for k in ("A", "B", "fp", "ric_tt", "ric_tan"))
    dA_fn = compile_exprs([differentiate(metric.A, metric.coord)], [metric.coord])

    def rhs(s, y):
        vals = fn(s)
        a = vals[ia]
        da = dA_fn(s)[0]
        v, w = y  # w = dV/ds in the chart coordinate
        return np.array([w, a * a * (vals[itt] - R / (n - 1)) * v + da / a * w])

    def run(m):
        ss = np.linspace(grid[0], grid[-1], m + 1)
        h = ss[1] - ss[0]
        y = np.array([V0, dV0 * fn(ss[0])[ia]])
        out = np.empty((m + 1, 2))
        out[0] = y
        for i in range(m):
            s = ss[i]
            k1 = rhs(s, y)
            k2 = rhs(s + h / 2, y + h / 2 * k1)
            k3 = rhs(s + h / 2, y + h / 2 * k2)
            k4 = rhs(s + h, y + h * k3)
            y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            out[i + 1] = y
        return ss, out

    ss, coarse = run(steps)
    _, fine = run(2 * steps)
    fine = fine[::2]
    rich = float(np.max(np.abs(fine[:, 0] - coarse[:, 0])) / 15.0)
    V = coarse[:, 0]
    dV = np.empty_like(V)
    resid = 0.0
    for i, s in enumerate(ss):
        vals = fn(s)
        dV[i] = coarse[i, 1] / vals[ia]
        tan = vals[ifp] / vals[ib] * dV[i]
        resid = max(resid, abs(tan - (vals[itan] - R / (n - 1)) * V[i]))
    return RadialSolution(ss, V, dV, resid, rich, spread)
