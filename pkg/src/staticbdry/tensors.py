"""Pointwise tensor values carried together with the metric of their frame."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SymTensor2", "SingularMetricError", "inverse_metric", "riemann_symmetry_residuals"]

# largest acceptable condition number of a metric matrix
MAX_CONDITION = 1e12


class SingularMetricError(ArithmeticError):
    pass


def inverse_metric(g: np.ndarray) -> np.ndarray:
    """Invert a symmetric positive definite matrix, refusing ill-conditioned ones."""
    g = np.asarray(g, dtype=float)
    w = np.linalg.eigvalsh(g)
    if not np.all(np.isfinite(w)) or w[0] <= 0.0:
        raise SingularMetricError(f"metric is not positive definite (eigenvalues {w})")
    if w[-1] / w[0] > MAX_CONDITION:
        raise SingularMetricError(f"metric condition number {w[-1] / w[0]:.3g} exceeds {MAX_CONDITION:g}")
    chol = np.linalg.cholesky(g)
    linv = np.linalg.solve(chol, np.eye(len(g)))
    ginv = linv.T @ linv
    return 0.5 * (ginv + ginv.T)


@dataclass(frozen=True)
class SymTensor2:
    """Covariant symmetric 2-tensor at a point.

    ``metric`` is the metric expressed in the same frame, so that traces and
    norms can be taken without knowing where the components came from (a
    coordinate frame or an orthonormal one).
    """

    components: np.ndarray
    metric: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        object.__setattr__(self, "components", 0.5 * (c + c.T))
        object.__setattr__(self, "metric", np.asarray(self.metric, dtype=float))

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def _raised(self):
        ginv = inverse_metric(self.metric)
        return ginv @ self.components

    def trace(self) -> float:
        return float(np.trace(self._raised()))

    def norm_sq(self) -> float:
        """Full contraction ``T_ij T^ij``."""
        m = self._raised()
        return float(np.trace(m @ m))

    def norm(self) -> float:
        return float(np.sqrt(max(self.norm_sq(), 0.0)))

    def op_norm(self) -> float:
        """Largest absolute eigenvalue of the endomorphism ``T^i_j``."""
        chol = np.linalg.cholesky(self.metric)
        linv = np.linalg.solve(chol, np.eye(self.dim))
        w = np.linalg.eigvalsh(linv @ self.components @ linv.T)
        return float(np.max(np.abs(w))) if w.size else 0.0

    def inner(self, other: "SymTensor2") -> float:
        ginv = inverse_metric(self.metric)
        return float(np.einsum("ik,jl,ij,kl->", ginv, ginv, self.components, other.components))

    def __add__(self, other):
        return SymTensor2(self.components + other.components, self.metric)

    def __sub__(self, other):
        return SymTensor2(self.components - other.components, self.metric)

    def scaled(self, c: float) -> "SymTensor2":
        return SymTensor2(c * self.components, self.metric)


def riemann_symmetry_residuals(rm: np.ndarray) -> dict:
    """Max violations of the algebraic symmetries of a lowered ``R_ijkl``."""
    return {
        "antisym_12": float(np.max(np.abs(rm + rm.transpose(1, 0, 2, 3)))),
        "antisym_34": float(np.max(np.abs(rm + rm.transpose(0, 1, 3, 2)))),
        "pair": float(np.max(np.abs(rm - rm.transpose(2, 3, 0, 1)))),
        "bianchi": float(np.max(np.abs(rm + rm.transpose(1, 2, 0, 3) + rm.transpose(2, 0, 1, 3)))),
    }
