"""Globally adaptive Simpson quadrature in one dimension."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

__all__ = ["QuadratureError", "QuadResult", "integrate", "integrate_improper"]


class QuadratureError(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    panels: int


def _panel(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    fm, flm, frm = f(m), f(lm), f(rm)
    h = b - a
    coarse = h / 6.0 * (fa + 4.0 * fm + fb)
    fine = h / 12.0 * (fa + 4.0 * flm + 2.0 * fm + 4.0 * frm + fb)
    # Richardson-corrected value and its error estimate
    return fine + (fine - coarse) / 15.0, abs(fine - coarse) / 15.0, fm


def integrate(f: Callable[[float], float], a: float, b: float, rel_tol: float = 1e-9,
              abs_tol: float = 1e-14, max_panels: int = 200_000) -> QuadResult:
    """Integrate `f` over the finite interval [a, b].

    The panel with the largest error estimate is bisected until the summed
    estimate drops below ``max(abs_tol, rel_tol * |value|)``.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("integrate() needs finite limits; use integrate_improper()")
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    fa, fb = f(a), f(b)
    # start from 8 panels so narrow features are less likely to be skipped
    edges = [a + (b - a) * k / 8 for k in range(9)]
    fvals = [fa] + [f(x) for x in edges[1:-1]] + [fb]
    heap = []
    for k in range(8):
        val, err, fm = _panel(f, edges[k], fvals[k], edges[k + 1], fvals[k + 1])
        heap.append((-err, edges[k], edges[k + 1], fvals[k], fvals[k + 1], val, fm))
    heapq.heapify(heap)
    while True:
        total = math.fsum(item[5] for item in heap)
        err = math.fsum(-item[0] for item in heap)
        if not math.isfinite(total):
            raise QuadratureError("integrand produced a non-finite value")
        if err <= max(abs_tol, rel_tol * abs(total)):
            return QuadResult(sign * total, err, len(heap))
        if len(heap) >= max_panels:
            raise QuadratureError(
                f"no convergence after {len(heap)} panels (error {err:.3g}, value {total:.6g})")
        _, lo, hi, flo, fhi, _, fmid = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        for x0, f0, x1, f1 in ((lo, flo, mid, fmid), (mid, fmid, hi, fhi)):
            val, e, fm = _panel(f, x0, f0, x1, f1)
            heapq.heappush(heap, (-e, x0, x1, f0, f1, val, fm))


def integrate_improper(f: Callable[[float], float], a: float, rel_tol: float = 1e-9,
                       abs_tol: float = 1e-14, max_panels: int = 200_000) -> QuadResult:
    """Integrate `f` over [a, inf) through the substitution x = a + t/(1-t).

    The integrand must decay faster than 1/x^2; the transformed integrand is
    taken to be 0 at t = 1.
    """

    def g(t):
        if t >= 1.0:
            return 0.0
        x = a + t / (1.0 - t)
        if not math.isfinite(x):
            return 0.0
        return f(x) / (1.0 - t) ** 2

    return integrate(g, 0.0, 1.0, rel_tol, abs_tol, max_panels)
