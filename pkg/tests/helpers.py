"""Shared fixtures: seeded random metrics and sample points."""

import numpy as np

from staticbdry.curvature import ChartMetric

NAMES = ["x", "y", "z", "w"]


def _term(rng, names, polynomial):
    v = rng.choice(names)
    u = rng.choice(names)
    c = round(float(rng.uniform(-1, 1)), 3)
    if polynomial:
        kind = rng.integers(0, 3)
        body = [f"{v}", f"{v}*{u}", f"{v}^2*{u}"][kind]
    else:
        kind = rng.integers(0, 4)
        body = [f"{v}*{u}", f"sin({v})", f"exp({v}/2)*cos({u})", f"{v}^3"][kind]
    return f"{c}*{body}"


def random_metric(seed: int, n: int = 3, polynomial: bool = False, eps: float = 0.15) -> ChartMetric:
    """``delta + eps * P(x)`` with P a seeded symmetric matrix of analytic terms.

    Positive definite on the box ``[-1, 1]^n`` for the default eps.
    """
    rng = np.random.default_rng(seed)
    names = NAMES[:n]
    comps = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            terms = " + ".join(_term(rng, names, polynomial) for _ in range(2))
            base = "1" if i == j else "0"
            comps[i][j] = f"{base} + {eps}*({terms})"
    return ChartMetric(names, comps, [(-1.0, 1.0)] * n)


def sample_box(n: int, count: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed + 1000).uniform(-1, 1, size=(count, n))
