"""Static potentials on manifolds with boundary: curvature, boundary geometry, fluxes and verdicts."""

__version__ = "0.1.0"

from .expr import parse, differentiate, evaluate, compile_exprs, to_source  # noqa: E402
from .curvature import ChartMetric, Face  # noqa: E402
from .cohomog1 import Cohomog1Metric  # noqa: E402
from .static_ops import PotentialSpec, SamplePlan, verify_static  # noqa: E402

__all__ = [
    "parse", "differentiate", "evaluate", "compile_exprs", "to_source",
    "ChartMetric", "Face", "Cohomog1Metric", "PotentialSpec", "SamplePlan", "verify_static",
]
