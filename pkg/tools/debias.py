"""
Debiasing of the weighted LASSO estimate

Row-orthogonal (complex) designs use the coupled equations

    Lambda = (gamma - rho) / (1 - rho)
    rho    = (1/2N) sum_i [2 - lambda_i / (Lambda |x_i| + lambda_i)] * Theta(|x_i|)

with Theta(0) = 0, and the residual variance

    sigma_w2 = gamma (1 - gamma) / (gamma - rho)^2 * RSS + sigma2,   RSS = ||y - A x||^2 / M.

Gaussian designs use Lambda = gamma - rho_a with rho_a the active density.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from tools.scene import as_signal
from tools.sensing import DesignMatrix, MatrixKind
from utils.errors import DebiasInfeasibleError, FixedPointError, InvalidParameterError

logger = logging.getLogger(__name__)

DAMPING = 0.5
MAX_DAMPED_ITERS = 1000
FIXED_POINT_TOL = 1e-12
BISECTION_FLOOR = 1e-8


@dataclass
class DebiasResult:
    x_d: np.ndarray
    lambda_cro: float
    rho_ca: float
    sigma_w2: float
    rss_bar: float
    iterations: int


def _check_gamma(gamma: float):
    if not 0.0 < gamma <= 1.0:
        raise InvalidParameterError(f"gamma must be in (0, 1], got {gamma}")


def active_density(x_wl: np.ndarray) -> float:
    """Fraction of exactly nonzero entries"""
    x_wl = np.asarray(x_wl)
    return float(np.count_nonzero(x_wl)) / x_wl.shape[0]


def rho_of_lambda(Lam: float, mag: np.ndarray, lam: np.ndarray, N: int) -> float:
    """rho-equation right-hand side, restricted to the nonzero entries (mag > 0)"""
    if mag.size == 0:
        return 0.0
    denom = Lam * mag + lam
    terms = 2.0 - np.divide(lam, denom, out=np.zeros_like(lam), where=denom > 0)
    return float(terms.sum() / (2.0 * N))


def fixed_point_residuals(Lam: float, rho: float, x_wl, weights, gamma: float) -> Tuple[float, float]:
    """Residuals of both equations at (Lambda, rho)"""
    x_wl = np.asarray(x_wl, dtype=complex)
    lam = np.asarray(getattr(weights, "values", weights), dtype=float)
    N = x_wl.shape[0]
    nz = np.abs(x_wl) > 0
    r1 = Lam * (1.0 - rho) - (gamma - rho)
    r2 = rho - rho_of_lambda(Lam, np.abs(x_wl[nz]), lam[nz], N)
    return float(r1), float(r2)


def solve_fixed_point(x_wl, weights, gamma: float) -> Tuple[float, float, int]:
    """
    Solve for (Lambda_CRO, rho_CA).

    Damped iteration from Lambda = gamma; falls back to a bracketed root
    search on Lambda - g(Lambda) over (1e-8, gamma] when it does not settle.
    """
    _check_gamma(gamma)
    x_wl = as_signal(x_wl, name="x_wl")
    lam = np.asarray(getattr(weights, "values", weights), dtype=float)
    N = x_wl.shape[0]
    if lam.shape != (N,):
        lam = np.broadcast_to(lam, (N,)).astype(float)

    nz = np.abs(x_wl) > 0
    mag, lam_nz = np.abs(x_wl[nz]), lam[nz]

    if mag.size == 0:
        return gamma, 0.0, 0

    # rho is smallest as Lambda -> 0+, where each nonzero term tends to 1
    rho_floor = rho_of_lambda(0.0, mag, lam_nz, N)
    if rho_floor >= gamma:
        raise DebiasInfeasibleError(rho_floor, gamma)

    def g(Lam: float) -> Tuple[float, float]:
        rho = rho_of_lambda(Lam, mag, lam_nz, N)
        if rho >= 1.0:
            return -np.inf, rho
        return (gamma - rho) / (1.0 - rho), rho

    Lam = gamma
    for it in range(1, MAX_DAMPED_ITERS + 1):
        target, rho = g(Lam)
        if not np.isfinite(target):
            break
        Lam_new = (1.0 - DAMPING) * Lam + DAMPING * target
        if Lam_new <= 0.0:
            break
        if abs(Lam_new - Lam) <= FIXED_POINT_TOL * max(1.0, Lam):
            Lam = Lam_new
            target, rho = g(Lam)
            # settle exactly on the Lambda equation
            Lam = target
            rho = rho_of_lambda(Lam, mag, lam_nz, N)
            if rho >= gamma:
                raise DebiasInfeasibleError(rho, gamma)
            logger.debug(f"Fixed point settled after {it} damped iterations: Lambda={Lam:.12g}, rho={rho:.12g}")
            return float(Lam), float(rho), it
        Lam = Lam_new

    logger.debug("Damped fixed-point iteration did not settle, falling back to root bracketing")

    def h(Lam: float) -> float:
        target, _ = g(Lam)
        return Lam - target

    lo, hi = BISECTION_FLOOR, gamma
    h_lo, h_hi = h(lo), h(hi)
    if not (h_lo <= 0.0 <= h_hi):
        raise FixedPointError(f"fixed point not bracketed on [{lo}, {hi}]: h={h_lo:.3e}, {h_hi:.3e}")
    try:
        Lam = brentq(h, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as e:
        raise FixedPointError(f"fixed point search failed: {e}")
    rho = rho_of_lambda(Lam, mag, lam_nz, N)
    if rho >= gamma:
        raise DebiasInfeasibleError(rho, gamma)
    return float(Lam), float(rho), MAX_DAMPED_ITERS


def debias_estimate(x_wl, y, A: DesignMatrix, lambda_cro: float) -> np.ndarray:
    """x_d = x_wl + (1/Lambda) A^H (y - A x_wl)"""
    if not lambda_cro > 0:
        raise InvalidParameterError(f"debiasing coefficient must be > 0, got {lambda_cro}")
    x_wl = as_signal(x_wl, A.N, "x_wl")
    y = as_signal(y, A.M, "y")
    return x_wl + A.rmatvec(y - A.matvec(x_wl)) / lambda_cro


def debias_gaussian(x_wl, y, A: DesignMatrix) -> np.ndarray:
    """Debiased estimate for i.i.d. Gaussian design, Lambda_G = gamma - rho_a"""
    gamma = A.gamma
    rho_a = active_density(x_wl)
    if rho_a >= gamma:
        raise DebiasInfeasibleError(rho_a, gamma)
    return debias_estimate(x_wl, y, A, gamma - rho_a)


def _rss_bar(x_wl, y, A: DesignMatrix) -> float:
    r = as_signal(y, A.M, "y") - A.matvec(as_signal(x_wl, A.N, "x_wl"))
    return float(np.vdot(r, r).real / A.M)


def residual_variance(x_wl, y, A: DesignMatrix, gamma: float, rho_ca: float, sigma2: float) -> Tuple[float, float]:
    """(sigma_w2, RSS) for row-orthogonal design"""
    _check_gamma(gamma)
    if rho_ca >= gamma:
        raise DebiasInfeasibleError(rho_ca, gamma)
    rss_bar = _rss_bar(x_wl, y, A)
    coeff = gamma * (1.0 - gamma) / (gamma - rho_ca) ** 2
    return float(coeff * rss_bar + sigma2), rss_bar


def residual_variance_gaussian(x_wl, y, A: DesignMatrix) -> Tuple[float, float]:
    """(sigma_w2, RSS) for Gaussian design: gamma * RSS / (gamma - rho_a)^2"""
    gamma = A.gamma
    rho_a = active_density(x_wl)
    if rho_a >= gamma:
        raise DebiasInfeasibleError(rho_a, gamma)
    rss_bar = _rss_bar(x_wl, y, A)
    return float(gamma * rss_bar / (gamma - rho_a) ** 2), rss_bar


def debias(x_wl, y, A: DesignMatrix, weights, sigma2: float) -> DebiasResult:
    """Full debiasing step for a solved weighted LASSO estimate"""
    gamma = A.gamma
    if A.kind == MatrixKind.GAUSSIAN_IID:
        rho_a = active_density(x_wl)
        if rho_a >= gamma:
            raise DebiasInfeasibleError(rho_a, gamma)
        Lam = gamma - rho_a
        sigma_w2, rss_bar = residual_variance_gaussian(x_wl, y, A)
        x_d = debias_estimate(x_wl, y, A, Lam)
        return DebiasResult(x_d, Lam, rho_a, sigma_w2, rss_bar, 0)

    Lam, rho, iterations = solve_fixed_point(x_wl, weights, gamma)
    sigma_w2, rss_bar = residual_variance(x_wl, y, A, gamma, rho, sigma2)
    x_d = debias_estimate(x_wl, y, A, Lam)
    return DebiasResult(x_d, Lam, rho, sigma_w2, rss_bar, iterations)
