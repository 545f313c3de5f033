"""
Entry-wise detectors built on the weighted LASSO and detection metrics

DWLD: |x_d_i|^2 > kappa_i with kappa_i = -sigma_w2 ln Pfa_i
NWLD: |x_wl_i|^2 > kappa_wl_i (no analytic link between kappa_wl and Pfa)
DLD:  DWLD with a uniform weight
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from tools.debias import DebiasResult, debias
from tools.scene import as_signal
from tools.sensing import DesignMatrix
from tools.wlasso import SolverOptions, WeightVector, solve_weighted_lasso
from utils.errors import InvalidDimensionError, InvalidParameterError

logger = logging.getLogger(__name__)


def threshold_from_pfa(sigma_w2: float, pfa) -> np.ndarray:
    """kappa_i = -sigma_w2 * ln(pfa_i)"""
    if not sigma_w2 > 0:
        raise InvalidParameterError(f"sigma_w2 must be > 0, got {sigma_w2}")
    pfa = np.atleast_1d(np.asarray(pfa, dtype=float))
    if np.any(~np.isfinite(pfa)) or np.any(pfa <= 0.0) or np.any(pfa > 1.0):
        raise InvalidParameterError("false alarm probabilities must lie in (0, 1]")
    # -0.0 for pfa = 1
    return np.maximum(-sigma_w2 * np.log(pfa), 0.0)


def _check_kappa(kappa, N: int) -> np.ndarray:
    kappa = np.asarray(kappa, dtype=float)
    kappa = np.broadcast_to(kappa, (N,)) if kappa.ndim == 0 else kappa
    if kappa.shape != (N,):
        raise InvalidDimensionError(f"threshold vector has shape {kappa.shape}, expected ({N},)")
    if np.any(np.isnan(kappa)) or np.any(kappa < 0):
        raise InvalidParameterError("thresholds must be >= 0")
    return kappa


def dwld_detect(x_d, kappa) -> np.ndarray:
    x_d = as_signal(x_d, name="x_d")
    kappa = _check_kappa(kappa, x_d.shape[0])
    return np.abs(x_d) ** 2 > kappa


def nwld_detect(x_wl, kappa_wl) -> np.ndarray:
    x_wl = as_signal(x_wl, name="x_wl")
    kappa_wl = _check_kappa(kappa_wl, x_wl.shape[0])
    return np.abs(x_wl) ** 2 > kappa_wl


@dataclass
class MetricsAccumulator:
    """Per-entry rejection/occurrence counters over trials"""

    null_rejections: np.ndarray
    null_occurrences: np.ndarray
    support_rejections: np.ndarray
    support_occurrences: np.ndarray

    @classmethod
    def empty(cls, N: int) -> "MetricsAccumulator":
        zeros = lambda: np.zeros(N, dtype=np.int64)
        return cls(zeros(), zeros(), zeros(), zeros())

    @property
    def N(self) -> int:
        return self.null_occurrences.shape[0]

    def update(self, decisions, support) -> "MetricsAccumulator":
        decisions = np.asarray(decisions, dtype=bool)
        if decisions.shape != (self.N,):
            raise InvalidDimensionError(f"decisions have shape {decisions.shape}, expected ({self.N},)")
        mask = support_mask(support, self.N)
        self.support_occurrences += mask
        self.support_rejections += decisions & mask
        self.null_occurrences += ~mask
        self.null_rejections += decisions & ~mask
        return self

    def merge(self, other: "MetricsAccumulator") -> "MetricsAccumulator":
        if other.N != self.N:
            raise InvalidDimensionError(f"cannot merge accumulators of size {self.N} and {other.N}")
        return MetricsAccumulator(
            self.null_rejections + other.null_rejections,
            self.null_occurrences + other.null_occurrences,
            self.support_rejections + other.support_rejections,
            self.support_occurrences + other.support_occurrences,
        )

    @staticmethod
    def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
        out = np.full(num.shape, np.nan)
        np.divide(num, den, out=out, where=den > 0)
        return out

    def pfa_per_entry(self) -> np.ndarray:
        return self._ratio(self.null_rejections, self.null_occurrences)

    def pd_per_entry(self) -> np.ndarray:
        return self._ratio(self.support_rejections, self.support_occurrences)

    def total_pfa(self) -> float:
        den = self.null_occurrences.sum()
        return float(self.null_rejections.sum() / den) if den > 0 else float("nan")

    def total_pd(self) -> float:
        den = self.support_occurrences.sum()
        return float(self.support_rejections.sum() / den) if den > 0 else float("nan")

    def prior_weighted_pfa(self, weights) -> float:
        """sum_i w_i Pfa_i / sum_i w_i over entries with a defined rate"""
        rates = self.pfa_per_entry()
        w = np.asarray(weights, dtype=float)
        ok = ~np.isnan(rates)
        return float(np.sum(w[ok] * rates[ok]) / np.sum(w[ok]))


def support_mask(support, N: int) -> np.ndarray:
    support = np.asarray(support)
    if support.dtype == bool:
        if support.shape != (N,):
            raise InvalidDimensionError(f"support mask has shape {support.shape}, expected ({N},)")
        return support
    mask = np.zeros(N, dtype=bool)
    mask[support.astype(int)] = True
    return mask


def accumulate_metrics(acc: MetricsAccumulator, decisions, support) -> MetricsAccumulator:
    return acc.update(decisions, support)


@dataclass
class PipelineOutput:
    decisions: np.ndarray
    x_wl: np.ndarray
    debiased: Optional[DebiasResult] = None
    kappa: Optional[np.ndarray] = field(default=None)


def dwld_pipeline(
    y,
    A: DesignMatrix,
    weights,
    pfa,
    sigma2: float,
    opts: Optional[SolverOptions] = None,
    x_wl: Optional[np.ndarray] = None,
) -> PipelineOutput:
    """Weighted LASSO -> debias -> analytic thresholds -> decisions"""
    if not isinstance(weights, WeightVector):
        weights = WeightVector(np.broadcast_to(np.asarray(weights, dtype=float), (A.N,)).copy())
    if x_wl is None:
        x_wl = solve_weighted_lasso(y, A, weights, opts)
    result = debias(x_wl, y, A, weights, sigma2)
    kappa = threshold_from_pfa(result.sigma_w2, np.broadcast_to(np.asarray(pfa, dtype=float), (A.N,)))
    decisions = dwld_detect(result.x_d, kappa)
    return PipelineOutput(decisions=decisions, x_wl=x_wl, debiased=result, kappa=kappa)


def dld_pipeline(y, A: DesignMatrix, lambda_scalar: float, pfa, sigma2: float, opts: Optional[SolverOptions] = None) -> Tuple[np.ndarray, DebiasResult]:
    """Non-weighted detector: DWLD with lambda_i = lambda_scalar"""
    if not lambda_scalar > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lambda_scalar}")
    out = dwld_pipeline(y, A, WeightVector.uniform(A.N, lambda_scalar), pfa, sigma2, opts)
    return out.decisions, out.debiased


def nwld_pipeline(y, A: DesignMatrix, weights, kappa_wl, opts: Optional[SolverOptions] = None) -> PipelineOutput:
    x_wl = solve_weighted_lasso(y, A, weights, opts)
    kappa = _check_kappa(kappa_wl, A.N) if np.ndim(kappa_wl) else np.full(A.N, float(kappa_wl))
    return PipelineOutput(decisions=nwld_detect(x_wl, kappa), x_wl=x_wl, kappa=kappa)


def calibrate_nwld_threshold(null_magnitudes, target_pfa: float, tol: float = 1e-4, max_iter: int = 200) -> float:
    """
    Bisection on a common NWLD threshold so that the empirical false-alarm
    rate over pooled null-entry |x_wl|^2 values matches target_pfa.
    """
    values = np.asarray(null_magnitudes, dtype=float).ravel()
    if values.size == 0:
        raise InvalidParameterError("no null-entry samples to calibrate on")
    if not 0.0 < target_pfa < 1.0:
        raise InvalidParameterError(f"target_pfa must be in (0, 1), got {target_pfa}")

    rate = lambda kappa: float(np.mean(values > kappa))
    lo, hi = 0.0, float(values.max())
    if rate(lo) <= target_pfa:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = rate(mid)
        if abs(r - target_pfa) <= tol:
            return mid
        if r > target_pfa:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    logger.debug(f"NWLD threshold bracket collapsed at rate {rate(hi):.5f} (target {target_pfa})")
    return hi
