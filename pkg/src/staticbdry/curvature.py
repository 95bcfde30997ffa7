"""Curvature of a metric given by closed-form components on a coordinate box.

Conventions: ``R(X,Y)Z = D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z``,
``Ric(Y,Z) = tr(X -> R(X,Y)Z)`` and ``R = tr_g Ric``, so the unit round
sphere has ``Ric = (n-1) g``. The lowered tensor is
``Rm[i,j,k,l] = <R(d_i, d_j) d_k, d_l>``.

Array index conventions: ``dg[a,i,j] = d_a g_ij``, ``gamma[k,i,j] = Gamma^k_ij``,
``dgamma[a,k,i,j] = d_a Gamma^k_ij``.

All metric derivatives up to third order come from exact symbolic
differentiation of the components, so nothing here is finite-differenced.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .expr import Expr, as_expr, compile_exprs, differentiate, substitute
from .tensors import SymTensor2, inverse_metric

__all__ = [
    "Face", "ChartMetric", "ScalarField", "ChartPoint", "DomainError",
    "christoffel", "riemann", "ricci", "scalar", "hessian", "laplacian",
    "divergence_symtensor", "ricci_jet", "scalar_gradient",
]


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Face:
    """Coordinate face of the domain box: coordinate ``index`` at its ``end``.

    The outward direction points out of the box, i.e. toward increasing
    coordinate on an ``"upper"`` face.
    """

    index: int
    end: str = "lower"

    def __post_init__(self):
        if self.end not in ("lower", "upper"):
            raise ValueError(f"face end must be 'lower' or 'upper', not {self.end!r}")

    @property
    def sign(self) -> int:
        return 1 if self.end == "upper" else -1


def _sym_pairs(n):
    return [(i, j) for i in range(n) for j in range(i, n)]


class ChartMetric:
    """Metric ``g_ij(x)`` given by expressions in the chart coordinates.

    ``components`` is a full symmetric ``n x n`` matrix (or only its upper
    triangle, with ``None`` below the diagonal). ``params`` are substituted
    into every component before anything else happens.
    """

    def __init__(self, coords: Sequence[str], components, domain=None,
                 face: Optional[Face] = None, params: Optional[Mapping[str, float]] = None):
        self.coords = tuple(coords)
        n = len(self.coords)
        if n < 2:
            raise ValueError("dimension must be at least 2")
        if len(set(self.coords)) != n:
            raise ValueError("coordinate names must be distinct")
        params = dict(params or {})
        rows = [list(row) for row in components]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"metric must be a {n}x{n} matrix")
        comps = {}
        for i, j in _sym_pairs(n):
            upper = substitute(as_expr(rows[i][j]), params)
            lower = rows[j][i]
            if lower is not None and i != j:
                lower = substitute(as_expr(lower), params)
                if lower != upper:
                    raise ValueError(f"metric is not symmetric as trees at ({i},{j})")
            comps[i, j] = upper
        self.components = comps
        if domain is None:
            domain = [(-math.inf, math.inf)] * n
        self.domain = tuple((float(lo), float(hi)) for lo, hi in domain)
        if len(self.domain) != n or any(lo > hi for lo, hi in self.domain):
            raise ValueError("domain must give one (lo, hi) interval per coordinate")
        if face is not None:
            if not 0 <= face.index < n:
                raise ValueError(f"face index {face.index} out of range")
            if not math.isfinite(self.face_value_of(face)):
                raise ValueError("boundary face must sit at a finite coordinate value")
        self.face = face

    @property
    def dim(self) -> int:
        return len(self.coords)

    def face_value_of(self, face: Face) -> float:
        lo, hi = self.domain[face.index]
        return hi if face.end == "upper" else lo

    def component(self, i, j) -> Expr:
        return self.components[min(i, j), max(i, j)]

    def check_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.shape[0] != self.dim:
            raise DomainError(f"point has {p.shape[0]} coordinates, expected {self.dim}")
        for x, (lo, hi), name in zip(p, self.domain, self.coords):
            if not lo <= x <= hi:
                raise DomainError(f"{name} = {x!r} outside [{lo}, {hi}]")
        return p

    # symbolic derivative tables, built once per metric and order

    @cached_property
    def _d1(self):
        return {(a, i, j): differentiate(e, self.coords[a])
                for (i, j), e in self.components.items() for a in range(self.dim)}

    @cached_property
    def _d2(self):
        n = self.dim
        return {(a, b, i, j): differentiate(self._d1[a, i, j], self.coords[b])
                for a in range(n) for b in range(a, n) for i, j in _sym_pairs(n)}

    @cached_property
    def _d3(self):
        n = self.dim
        return {(a, b, c, i, j): differentiate(self._d2[a, b, i, j], self.coords[c])
                for a in range(n) for b in range(a, n) for c in range(b, n)
                for i, j in _sym_pairs(n)}

    def _compiled(self, order):
        cache = self.__dict__.setdefault("_compiled_cache", {})
        if order not in cache:
            tables = [self.components, self._d1, self._d2, self._d3][: order + 1]
            keys = [(t, k) for t, table in enumerate(tables) for k in table]
            fn = compile_exprs([tables[t][k] for t, k in keys], self.coords)
            cache[order] = (keys, fn)
        return cache[order]

    def jet(self, p, order: int = 2) -> tuple:
        """Arrays ``(g, dg, d2g, d3g)`` at `p`, truncated after `order`."""
        n = self.dim
        keys, fn = self._compiled(order)
        values = fn(*p)
        arrays = [np.zeros((n,) * (2 + k)) for k in range(order + 1)]
        for (t, key), v in zip(keys, values):
            *ds, i, j = key
            for perm in set(itertools.permutations(ds)):
                arrays[t][perm + (i, j)] = v
                arrays[t][perm + (j, i)] = v
        return tuple(arrays)

    def at(self, p) -> "ChartPoint":
        return ChartPoint(self, self.check_point(p))

    def restricted_to_face(self, face: Optional[Face] = None) -> "ChartMetric":
        """Induced metric on a coordinate face, as a chart in the other coordinates."""
        face = face or self.face
        if face is None:
            raise ValueError("no boundary face designated")
        value = self.face_value_of(face)
        frozen = self.coords[face.index]
        keep = [i for i in range(self.dim) if i != face.index]
        comps = [[substitute(self.component(i, j), {frozen: value}) for j in keep] for i in keep]
        return ChartMetric([self.coords[i] for i in keep], comps, [self.domain[i] for i in keep])


class ScalarField:
    """A function on the chart with its exact first and second derivatives."""

    def __init__(self, f, coords: Sequence[str], params: Optional[Mapping[str, float]] = None):
        self.coords = tuple(coords)
        self.expr = substitute(as_expr(f), dict(params or {}))
        n = len(self.coords)
        d1 = [differentiate(self.expr, c) for c in self.coords]
        d2 = {(a, b): differentiate(d1[a], self.coords[b]) for a in range(n) for b in range(a, n)}
        self._d2_keys = list(d2)
        self._fn = compile_exprs([self.expr, *d1, *d2.values()], self.coords)

    def jet(self, p) -> tuple:
        n = len(self.coords)
        out = self._fn(*p)
        grad = np.array(out[1: n + 1])
        hess = np.zeros((n, n))
        for (a, b), v in zip(self._d2_keys, out[n + 1:]):
            hess[a, b] = hess[b, a] = v
        return out[0], grad, hess


def as_field(f, metric: ChartMetric) -> ScalarField:
    if isinstance(f, ScalarField):
        if f.coords != metric.coords:
            raise ValueError("scalar field coordinates differ from the metric's")
        return f
    return ScalarField(f, metric.coords)


class ChartPoint:
    """Lazily computed geometry of a chart metric at one point."""

    def __init__(self, metric: ChartMetric, p: np.ndarray):
        self.metric = metric
        self.p = p

    @cached_property
    def _jet2(self):
        return self.metric.jet(self.p, order=2)

    @cached_property
    def _jet3(self):
        return self.metric.jet(self.p, order=3)

    @property
    def g(self):
        return self._jet2[0]

    @property
    def dg(self):
        return self._jet2[1]

    @cached_property
    def ginv(self):
        return inverse_metric(self.g)

    @cached_property
    def dginv(self):
        dg = self._jet2[1]
        return -np.einsum("km,amn,nl->akl", self.ginv, dg, self.ginv)

    @cached_property
    def _gamma1(self):
        dg = self._jet2[1]
        # Gamma_{l ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
        return 0.5 * (dg.transpose(2, 0, 1) + dg.transpose(2, 1, 0) - dg)

    @cached_property
    def _dgamma1(self):
        d2g = self._jet2[2]
        # d_a Gamma_{l ij}
        return 0.5 * (d2g.transpose(0, 3, 1, 2) + d2g.transpose(0, 3, 2, 1) - d2g)

    @cached_property
    def gamma(self):
        return np.einsum("kl,lij->kij", self.ginv, self._gamma1)

    @cached_property
    def dgamma(self):
        return (np.einsum("akl,lij->akij", self.dginv, self._gamma1)
                + np.einsum("kl,alij->akij", self.ginv, self._dgamma1))

    @cached_property
    def d2gamma(self):
        _, dg, d2g, d3g = self._jet3
        gi = self.ginv
        t1 = np.einsum("km,amn,nr,brs,sl->abkl", gi, dg, gi, dg, gi)
        d2ginv = t1 + t1.transpose(1, 0, 2, 3) - np.einsum("km,abmn,nl->abkl", gi, d2g, gi)
        d2gamma1 = 0.5 * (d3g.transpose(0, 1, 4, 2, 3) + d3g.transpose(0, 1, 4, 3, 2) - d3g)
        cross = np.einsum("akl,blij->abkij", self.dginv, self._dgamma1)
        return (np.einsum("abkl,lij->abkij", d2ginv, self._gamma1)
                + cross + cross.transpose(1, 0, 2, 3, 4)
                + np.einsum("kl,ablij->abkij", gi, d2gamma1))

    @cached_property
    def riemann_up(self):
        """``R^l_ijk`` stored as ``[l, i, j, k]``."""
        G, dG = self.gamma, self.dgamma
        return (dG.transpose(1, 0, 2, 3) - dG.transpose(1, 2, 0, 3)
                + np.einsum("lip,pjk->lijk", G, G) - np.einsum("ljp,pik->lijk", G, G))

    @cached_property
    def riemann(self):
        return np.einsum("lm,mijk->ijkl", self.g, self.riemann_up)

    @cached_property
    def ricci(self):
        ric = np.einsum("iijk->jk", self.riemann_up)
        return 0.5 * (ric + ric.T)

    @cached_property
    def scalar(self):
        return float(np.einsum("jk,jk->", self.ginv, self.ricci))

    @cached_property
    def ricci_gradient(self):
        """``d_a Ric_jk`` from third derivatives of the metric."""
        G, dG, d2G = self.gamma, self.dgamma, self.d2gamma
        out = (np.einsum("aiijk->ajk", d2G) - np.einsum("ajiik->ajk", d2G)
               + np.einsum("aiip,pjk->ajk", dG, G) + np.einsum("iip,apjk->ajk", G, dG)
               - np.einsum("aijp,pik->ajk", dG, G) - np.einsum("ijp,apik->ajk", G, dG))
        return 0.5 * (out + out.transpose(0, 2, 1))

    @cached_property
    def scalar_gradient(self):
        return (np.einsum("ajk,jk->a", self.dginv, self.ricci)
                + np.einsum("jk,ajk->a", self.ginv, self.ricci_gradient))

    def divergence(self, T, dT) -> np.ndarray:
        """``(div T)_j = g^ik (d_i T_kj - Gamma^l_ik T_lj - Gamma^l_ij T_kl)``."""
        G = self.gamma
        term = dT - np.einsum("lik,lj->ikj", G, T) - np.einsum("lij,kl->ikj", G, T)
        return np.einsum("ik,ikj->j", self.ginv, term)

    def hessian_of(self, f: ScalarField):
        val, grad, hess = f.jet(self.p)
        return val, grad, hess - np.einsum("kij,k->ij", self.gamma, grad)

    def tensor(self, components) -> SymTensor2:
        return SymTensor2(components, self.g)


def christoffel(metric: ChartMetric, p) -> np.ndarray:
    return metric.at(p).gamma


def riemann(metric: ChartMetric, p) -> np.ndarray:
    return metric.at(p).riemann


def ricci(metric: ChartMetric, p) -> SymTensor2:
    pt = metric.at(p)
    return pt.tensor(pt.ricci)


def scalar(metric: ChartMetric, p) -> float:
    return metric.at(p).scalar


def scalar_gradient(metric: ChartMetric, p) -> np.ndarray:
    return metric.at(p).scalar_gradient


def hessian(metric: ChartMetric, f, p) -> SymTensor2:
    pt = metric.at(p)
    _, _, hess = pt.hessian_of(as_field(f, metric))
    return pt.tensor(hess)


def laplacian(metric: ChartMetric, f, p) -> float:
    pt = metric.at(p)
    _, _, hess = pt.hessian_of(as_field(f, metric))
    return float(np.einsum("ij,ij->", pt.ginv, hess))


def ricci_jet(metric: ChartMetric, p) -> tuple:
    """``(Ric, dRic)`` at `p`, in the form accepted by :func:`divergence_symtensor`."""
    pt = metric.at(p)
    return pt.ricci, pt.ricci_gradient


def divergence_symtensor(metric: ChartMetric, T, p) -> np.ndarray:
    """Divergence of a symmetric 2-tensor field at `p`, as a covector.

    `T` is either an ``n x n`` matrix of expressions in the chart coordinates
    (differentiated exactly), or a pair ``(values, derivatives)`` with
    ``derivatives[a,i,j] = d_a T_ij`` such as :func:`ricci_jet` returns.
    """
    pt = metric.at(p)
    n = metric.dim
    if isinstance(T, tuple) and len(T) == 2 and isinstance(T[0], np.ndarray):
        values, derivs = (np.asarray(a, dtype=float) for a in T)
    else:
        rows = [[as_expr(x) for x in row] for row in T]
        fields = [rows[i][j] for i in range(n) for j in range(n)]
        grads = [differentiate(e, c) for c in metric.coords for e in fields]
        out = compile_exprs(fields + grads, metric.coords)(*pt.p)
        values = np.array(out[: n * n]).reshape(n, n)
        derivs = np.array(out[n * n:]).reshape(n, n, n)
    return pt.divergence(values, derivs)
