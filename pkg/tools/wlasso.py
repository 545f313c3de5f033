"""
Complex weighted LASSO solver

    minimize  (1/2) ||y - A x||^2 + sum_i lambda_i |x_i|

Accelerated proximal gradient with restart whenever the objective would
increase, so accepted iterates have a non-increasing objective. Optimality is
certified with the KKT residual of the subgradient condition.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from tools.scene import as_signal
from tools.sensing import DesignMatrix
from utils.errors import InvalidDimensionError, InvalidParameterError, SolverConvergenceError

logger = logging.getLogger(__name__)


@dataclass
class SolverOptions:
    max_iters: int = 50_000
    rel_tol: float = 1e-10
    kkt_tol: float = 1e-6
    step_size: Union[float, str] = "auto"
    kkt_every: int = 10

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidParameterError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (self.rel_tol > 0 and self.kkt_tol > 0):
            raise InvalidParameterError("solver tolerances must be > 0")
        if self.step_size != "auto" and not float(self.step_size) > 0:
            raise InvalidParameterError(f"step_size must be 'auto' or > 0, got {self.step_size}")
        if self.kkt_every < 1:
            raise InvalidParameterError(f"kkt_every must be >= 1, got {self.kkt_every}")


@dataclass(frozen=True)
class WeightVector:
    """Per-entry regularization weights (lambda_i >= 0)"""

    values: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.values, dtype=float)
        if lam.ndim != 1:
            raise InvalidDimensionError(f"weights must be a vector, got shape {lam.shape}")
        if not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise InvalidParameterError("weights must be finite and >= 0")
        object.__setattr__(self, "values", lam)

    @classmethod
    def uniform(cls, N: int, lam: float) -> "WeightVector":
        return cls(np.full(N, float(lam)))

    @property
    def N(self) -> int:
        return self.values.shape[0]

    def scaled(self, c: float) -> "WeightVector":
        return WeightVector(self.values * c)


@dataclass
class SolverResult:
    x: np.ndarray
    iterations: int
    kkt_residual: float
    objective_history: List[float] = field(default_factory=list)
    kkt_history: List[Tuple[int, float]] = field(default_factory=list)
    restarts: int = 0


def _weights_array(weights, N: int) -> np.ndarray:
    if not isinstance(weights, WeightVector):
        weights = WeightVector(np.broadcast_to(np.asarray(weights, dtype=float), (N,)).copy())
    if weights.N != N:
        raise InvalidDimensionError(f"weights have length {weights.N}, expected {N}")
    return weights.values


def complex_soft_threshold(z: np.ndarray, thresh) -> np.ndarray:
    """prox of thresh*|.|: z * max(0, 1 - thresh/|z|), with ties and zeros mapped to 0"""
    z = np.asarray(z, dtype=complex)
    thresh = np.broadcast_to(np.asarray(thresh, dtype=float), z.shape)
    mag = np.abs(z)
    keep = mag > thresh
    out = np.zeros_like(z)
    out[keep] = z[keep] * (1.0 - thresh[keep] / mag[keep])
    return out


def objective(x: np.ndarray, y: np.ndarray, A: DesignMatrix, weights) -> float:
    lam = _weights_array(weights, A.N)
    r = A.matvec(x) - y
    return float(0.5 * np.vdot(r, r).real + np.sum(lam * np.abs(x)))


def _kkt_from_gradient(x: np.ndarray, g: np.ndarray, lam: np.ndarray) -> float:
    if x.size == 0:
        return 0.0
    mag = np.abs(x)
    nz = mag > 0
    res = np.empty(x.shape[0])
    res[nz] = np.abs(g[nz] + lam[nz] * x[nz] / mag[nz])
    res[~nz] = np.maximum(0.0, np.abs(g[~nz]) - lam[~nz])
    return float(res.max())


def kkt_residual(x, y, A: DesignMatrix, weights) -> float:
    """
    Max violation of the weighted LASSO optimality condition.

    With g = A^H (A x - y): |g_i + lambda_i x_i/|x_i|| on nonzero entries,
    max(0, |g_i| - lambda_i) on zero entries. Zero iff x is optimal.
    """
    x = as_signal(x, A.N, "x")
    y = as_signal(y, A.M, "y")
    lam = _weights_array(weights, A.N)
    g = A.rmatvec(A.matvec(x) - y)
    return _kkt_from_gradient(x, g, lam)


def solve_weighted_lasso(
    y,
    A: DesignMatrix,
    weights,
    opts: Optional[SolverOptions] = None,
    return_info: bool = False,
):
    """Solve the weighted LASSO to kkt_residual <= opts.kkt_tol"""
    opts = opts or SolverOptions()
    y = as_signal(y, A.M, "y")
    lam = _weights_array(weights, A.N)

    if opts.step_size == "auto":
        L = A.lipschitz()
        step = 1.0 / L if L > 0 else 1.0
    else:
        step = float(opts.step_size)

    x = np.zeros(A.N, dtype=complex)
    Ax = np.zeros(A.M, dtype=complex)
    z, Az = x, Ax
    t_k = 1.0
    momentum = False

    r = Ax - y
    obj = float(0.5 * np.vdot(r, r).real)
    history = [obj]
    kkt_history: List[Tuple[int, float]] = []
    restarts = 0
    kkt = np.inf

    for it in range(1, opts.max_iters + 1):
        grad = A.rmatvec(Az - y)
        x_new = complex_soft_threshold(z - step * grad, step * lam)
        Ax_new = A.matvec(x_new)
        r = Ax_new - y
        obj_new = float(0.5 * np.vdot(r, r).real + np.sum(lam * np.abs(x_new)))

        if momentum and obj_new > obj:
            # restart from the last accepted iterate
            z, Az = x, Ax
            t_k = 1.0
            momentum = False
            restarts += 1
            continue

        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
        beta = (t_k - 1.0) / t_next
        diff = x_new - x
        change = np.linalg.norm(diff) / max(np.linalg.norm(x_new), 1e-300)
        z = x_new + beta * diff
        Az = Ax_new + beta * (Ax_new - Ax)
        x, Ax, obj, t_k = x_new, Ax_new, obj_new, t_next
        momentum = True
        history.append(obj)

        if it % opts.kkt_every == 0 or change < opts.rel_tol:
            kkt = _kkt_from_gradient(x, A.rmatvec(Ax - y), lam)
            kkt_history.append((it, kkt))
            if kkt <= opts.kkt_tol:
                logger.debug(f"Weighted LASSO converged in {it} iterations (kkt={kkt:.2e}, restarts={restarts})")
                result = SolverResult(x, it, kkt, history, kkt_history, restarts)
                return result if return_info else x

    kkt = _kkt_from_gradient(x, A.rmatvec(Ax - y), lam)
    if kkt <= opts.kkt_tol:
        result = SolverResult(x, opts.max_iters, kkt, history, kkt_history, restarts)
        return result if return_info else x
    raise SolverConvergenceError("weighted LASSO did not reach the KKT tolerance", kkt, opts.max_iters)
