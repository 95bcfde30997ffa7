"""Built-in metrics with their potentials and the values they are expected to reproduce."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

from scipy.optimize import brentq

from .cohomog1 import Cohomog1Metric, sphere_volume
from .curvature import ChartMetric, Face
from .expr import as_expr, call, const, differentiate, evaluate
from .static_ops import PotentialSpec

__all__ = [
    "Expectation", "ExampleDescriptor", "schwarzschild", "kottler", "cusp",
    "half_cylinder", "ball_fixture", "ellipsoid_fixture", "pullback_flat",
    "build", "EXAMPLES",
]


@dataclass(frozen=True)
class Expectation:
    """A value an engine must reproduce, with its tolerance and where it comes from.

    ``provenance`` is one of ``PAPER``, ``DERIVED`` or ``TRIVIAL``. String
    values (verdict tags) must match exactly and ignore `tol`.
    """

    value: Union[float, str]
    tol: float
    provenance: str
    relative: bool = False
    note: str = ""


@dataclass
class ExampleDescriptor:
    name: str
    params: dict
    metric: Union[Cohomog1Metric, ChartMetric]
    potential: PotentialSpec
    expected: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def face(self) -> Optional[Face]:
        return getattr(self.metric, "face", None)

    @property
    def H_const(self) -> float:
        """Mean curvature used to build S; the boundary value unless the family fixes it."""
        if "H_const" in self.extras:
            return self.extras["H_const"]
        from .boundary import boundary_report
        return boundary_report(self.metric, None, 8).H_mean


def schwarzschild(n: int = 3, m: float = 2.0, r_inner: Optional[float] = None) -> ExampleDescriptor:
    """Spatial Schwarzschild ``phi^(4/(n-2)) delta`` outside the horizon, in the radial chart.

    With ``m = 0`` the metric is flat and `r_inner` (default 1) replaces the
    horizon radius.
    """
    if n < 3:
        raise ValueError("schwarzschild needs n >= 3")
    if m < 0:
        raise ValueError("schwarzschild needs m >= 0")
    k = n - 2
    if m > 0:
        r_h = (m / 2) ** (1 / k)
    else:
        r_h = 1.0 if r_inner is None else float(r_inner)
    phi = f"(1 + {m!r}/(2*r^{k}))"
    A = f"{phi}^(2/{k})"
    V = f"2/{phi} - 1"
    metric = Cohomog1Metric(n, A, f"{A}*r", kappa=n - 2, vol=sphere_volume(n - 1),
                            domain=(r_h, math.inf), boundary="lower", coord="r")
    desc = ExampleDescriptor(
        "schwarzschild", {"n": n, "m": m, "r_inner": r_h},
        metric, PotentialSpec(V, "interior" if m > 0 else "everywhere"),
        extras={"horizon": r_h, "phi": as_expr(phi)},
    )
    desc.expected = {
        "R": Expectation(0.0, 1e-8, "PAPER", note="R = 0"),
        "is_static_potential": Expectation(1.0, 0.0, "PAPER"),
    }
    if m > 0:
        desc.expected.update({
            "horizon": Expectation(r_h, 1e-12, "DERIVED"),
            "H": Expectation(0.0, 1e-7, "PAPER", note="H vanishes on the horizon"),
            "flux_limit": Expectation(0.0, 1e-6, "PAPER", note="S-flux through large spheres tends to 0"),
            "decay_exponent": Expectation(float(n), 0.1, "PAPER"),
            "is_admissible": Expectation(0.0, 0.0, "DERIVED", note="V = 0 but V_nu != 0 on the horizon"),
            "obata": Expectation("NotObata", 0.0, "PAPER"),
            "surjective": Expectation("true", 0.0, "PAPER"),
        })
    else:
        # flat exterior of a round sphere: H = -(n-1)/r_inner, so S != 0
        desc.expected.update({
            "H": Expectation(-(n - 1) / r_h, 1e-9, "TRIVIAL"),
            "obata": Expectation("NotObata", 0.0, "TRIVIAL"),
        })
    return desc


def kottler(n: int = 4, m: float = 1.0, vol: Optional[float] = None, fiber_flat: bool = False,
            r_inner: Optional[float] = None) -> ExampleDescriptor:
    """Generalized Kottler metric ``u^-1 dr^2 + r^2 b`` with ``Ric_b = (n-2) b`` on ``[r_c, inf)``.

    `vol` defaults to the unit round sphere. For ``m = 0`` an inner radius
    must be supplied; for ``m > 0`` it is ``r_c = (2m)^(1/(n-2))``, checked to
    exceed the largest root of ``u``.
    """
    if n < 3:
        raise ValueError("kottler needs n >= 3")
    if m < 0:
        raise ValueError("kottler needs m >= 0")
    if vol is None:
        vol = sphere_volume(n - 1)
    u = as_expr(f"r^2 + 1 - 2*{m!r}*r^(2-{n})")
    if m > 0:
        r_c = (2 * m) ** (1 / (n - 2))
        r0 = _largest_root(u, r_c)
    else:
        if r_inner is None:
            raise ValueError("kottler with m = 0 needs an inner radius")
        r_c, r0 = float(r_inner), None
        if not r_c > 0:
            raise ValueError("inner radius must be positive")
    metric = Cohomog1Metric(n, u ** const(-0.5), "r", kappa=n - 2, vol=vol, fiber_flat=fiber_flat,
                            domain=(r_c, math.inf), boundary="lower", coord="r")
    u_rc = evaluate(u, {"r": r_c})
    desc = ExampleDescriptor(
        "kottler", {"n": n, "m": m, "vol": vol, "fiber_flat": fiber_flat, "r_inner": r_c},
        metric, PotentialSpec(call("sqrt", u)),
        # S is formed with the family's H = -(n-1), also when m = 0 and the
        # inner sphere is arbitrary, so that S vanishes identically there
        extras={"u": u, "r_c": r_c, "r0": r0, "H_const": -(n - 1.0)},
    )
    desc.expected = {
        "R": Expectation(-n * (n - 1), 1e-8, "PAPER", note="R = -n(n-1)"),
        "r_c": Expectation(r_c, 1e-12, "PAPER" if m > 0 else "TRIVIAL"),
        "is_static_potential": Expectation(1.0, 0.0, "PAPER"),
    }
    if m > 0:
        desc.expected.update({
            "u(r_c)": Expectation((2 * m) ** (2 / (n - 2)), 1e-12, "PAPER"),
            "H": Expectation(-(n - 1), 1e-8, "PAPER", note="H = -(n-1)"),
            "flux_limit": Expectation(-m * (n - 1) * (n - 2) * vol, 1e-6, "PAPER", relative=True),
            "decay_exponent": Expectation(float(n), 0.1, "DERIVED"),
            "wch_mass": Expectation(2 / (n - 2) * m * (n - 1) * (n - 2) * vol, 1e-6, "DERIVED", relative=True),
            "is_admissible": Expectation(0.0, 0.0, "DERIVED",
                                         note="V_nu - (H/(n-1)) V = -m(n-2) r_c^(1-n) at r_c"),
            "obata": Expectation("NotObata", 0.0, "PAPER"),
            "surjective": Expectation("true", 0.0, "PAPER"),
        })
    else:
        desc.expected["wch_mass"] = Expectation(0.0, 1e-9, "TRIVIAL")
        desc.expected["S_sup"] = Expectation(0.0, 1e-8, "TRIVIAL", note="Einstein with H = -(n-1)")
    return desc


def _largest_root(u, r_c: float) -> Optional[float]:
    """Largest positive root of u below r_c, cross-checking that u > 0 above it."""
    f = lambda r: evaluate(u, {"r": r})
    du = differentiate(u, "r")
    lo = 1e-6
    grid = [lo + (r_c - lo) * k / 400 for k in range(401)]
    vals = [f(r) for r in grid]
    if not vals[-1] > 0:
        raise ArithmeticError(f"u(r_c) = {vals[-1]!r} is not positive")
    root = None
    for a, b, fa, fb in zip(grid, grid[1:], vals, vals[1:]):
        if fa <= 0 < fb or fa < 0 <= fb:
            root = brentq(f, a, b, xtol=1e-15)
    if root is None or not root < r_c:
        raise ArithmeticError("no root of u found below r_c")
    for r in grid:
        if r > root and not f(r) > 0:
            raise ArithmeticError(f"u changes sign above its root, at r = {r!r}")
        if r > root and not evaluate(du, {"r": r}) > 0:
            raise ArithmeticError(f"u is not increasing at r = {r!r}")
    return root


def cusp(n: int = 3, lam: float = 1.0, V0: float = 1.0, vol: float = 1.0) -> ExampleDescriptor:
    """``dt^2 + e^(2 lam t) g_flat`` on ``(-inf, 0] x T^(n-1)`` with ``V = V0 e^(lam t)``."""
    if lam == 0:
        raise ValueError("cusp needs lambda != 0")
    if not V0 > 0:
        raise ValueError("cusp needs V0 > 0")
    metric = Cohomog1Metric(n, "1", f"exp({lam!r}*t)", kappa=0.0, vol=vol, fiber_flat=True,
                            domain=(-math.inf, 0.0), boundary="upper", coord="t")
    desc = ExampleDescriptor("cusp", {"n": n, "lambda": lam, "V0": V0, "vol": vol},
                             metric, PotentialSpec(f"{V0!r}*exp({lam!r}*t)"))
    desc.expected = {
        "R": Expectation(-n * (n - 1) * lam ** 2, 1e-8, "PAPER"),
        "H": Expectation((n - 1) * lam, 1e-9, "PAPER"),
        "is_static_potential": Expectation(1.0, 0.0, "PAPER"),
        "is_admissible": Expectation(1.0, 0.0, "PAPER"),
        "flux_limit": Expectation(0.0, 1e-9, "TRIVIAL"),
        "wch_mass": Expectation(0.0, 1e-9, "TRIVIAL") if lam ** 2 == 1 else None,
        "obata": Expectation("TypeII", 0.0, "PAPER"),
        "surjective": Expectation("unknown", 0.0, "TRIVIAL"),
    }
    desc.expected = {k: v for k, v in desc.expected.items() if v is not None}
    return desc


def half_cylinder(n: int = 3, vol: float = 1.0) -> ExampleDescriptor:
    """Flat ``[0, inf) x T^(n-1)`` with ``V = 1``."""
    metric = Cohomog1Metric(n, "1", "1", kappa=0.0, vol=vol, fiber_flat=True,
                            domain=(0.0, math.inf), boundary="lower", coord="t")
    desc = ExampleDescriptor("half-cylinder", {"n": n, "vol": vol}, metric, PotentialSpec("1"))
    desc.expected = {
        "R": Expectation(0.0, 1e-12, "PAPER"),
        "H": Expectation(0.0, 1e-12, "PAPER"),
        "is_static_potential": Expectation(1.0, 0.0, "PAPER"),
        "is_admissible": Expectation(1.0, 0.0, "PAPER"),
        "obata": Expectation("TypeI", 0.0, "PAPER"),
        "surjective": Expectation("unknown", 0.0, "TRIVIAL"),
    }
    return desc


def pullback_flat(coords, embedding) -> list:
    """Components of the Euclidean metric pulled back along ``x_k = embedding[k](coords)``."""
    X = [as_expr(e) for e in embedding]
    J = [[differentiate(x, c) for c in coords] for x in X]
    n = len(coords)
    out = [[const(0.0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            acc = const(0.0)
            for row in J:
                acc = acc + row[i] * row[j]
            out[i][j] = out[j][i] = acc
    return out


def _polar_embedding(n, axes):
    """Hyperspherical coordinates (rho, y1..y_{n-1}) with per-axis scale factors."""
    names = ["rho"] + [f"y{i + 1}" for i in range(n - 1)]
    emb = []
    prefix = "rho"
    for i in range(n - 1):
        emb.append(f"{axes[i]!r}*{prefix}*cos({names[i + 1]})")
        prefix = f"{prefix}*sin({names[i + 1]})"
    emb.append(f"{axes[n - 1]!r}*{prefix}")
    if n == 2:
        emb = [f"{axes[0]!r}*rho*cos(y1)", f"{axes[1]!r}*rho*sin(y1)"]
    domain = [(0.0, 1.0)] + [(0.0, math.pi)] * (n - 2) + [(0.0, 2 * math.pi)]
    return names, emb, domain


def ball_fixture(n: int = 3) -> ExampleDescriptor:
    """Flat unit ball in polar coordinates; the face ``rho = 1`` is the unit sphere."""
    names, emb, domain = _polar_embedding(n, [1.0] * n)
    metric = ChartMetric(names, pullback_flat(names, emb), domain, face=Face(0, "upper"))
    desc = ExampleDescriptor("ball", {"n": n}, metric, PotentialSpec("1"))
    desc.expected = {
        "R": Expectation(0.0, 1e-10, "TRIVIAL"),
        "H": Expectation(float(n - 1), 1e-10, "TRIVIAL", note="sign anchor"),
    }
    return desc


def ellipsoid_fixture(axes=(2.0, 1.0, 1.0)) -> ExampleDescriptor:
    """Flat solid ellipsoid with semi-axes `axes`, face ``rho = 1``."""
    n = len(axes)
    names, emb, domain = _polar_embedding(n, list(axes))
    metric = ChartMetric(names, pullback_flat(names, emb), domain, face=Face(0, "upper"))
    return ExampleDescriptor("ellipsoid", {"axes": list(axes)}, metric, PotentialSpec("1"))


EXAMPLES = {
    "schwarzschild": schwarzschild,
    "kottler": kottler,
    "cusp": cusp,
    "half-cylinder": half_cylinder,
    "ball": ball_fixture,
}


def build(name: str, **params) -> ExampleDescriptor:
    try:
        ctor = EXAMPLES[name]
    except KeyError:
        raise ValueError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}") from None
    return ctor(**params)
