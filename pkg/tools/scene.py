"""
Sparse scene synthesis: priors, Bernoulli-Gaussian signals, noisy measurements
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from tools.sensing import DesignMatrix, MatrixKind, generate_matrix
from utils.errors import InvalidDimensionError, InvalidParameterError

logger = logging.getLogger(__name__)


def complex_normal(rng: np.random.Generator, size, variance: float = 1.0) -> np.ndarray:
    """CN(0, variance) samples"""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def as_signal(values, length: Optional[int] = None, name: str = "signal") -> np.ndarray:
    """Validate a complex vector (finite, 1-D, optional length)"""
    arr = np.asarray(values, dtype=complex)
    if arr.ndim != 1:
        raise InvalidDimensionError(f"{name} must be a vector, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise InvalidDimensionError(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{name} contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class PriorVector:
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1:
            raise InvalidDimensionError(f"prior must be a vector, got shape {p.shape}")
        if np.any(~np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
            raise InvalidParameterError("prior probabilities must lie in [0, 1]")
        object.__setattr__(self, "p", p)

    @property
    def N(self) -> int:
        return self.p.shape[0]

    def expected_support_size(self) -> float:
        return float(self.p.sum())


def uniform_prior(N: int, p: float) -> PriorVector:
    return PriorVector(np.full(N, float(p)))


def two_level_prior(N: int, p_low: float, p_high: float, high_fraction: float = 0.25) -> PriorVector:
    """p_low on the leading entries, p_high on the trailing high_fraction of them"""
    if not 0.0 <= high_fraction <= 1.0:
        raise InvalidParameterError(f"high_fraction must be in [0, 1], got {high_fraction}")
    n_low = int(round((1.0 - high_fraction) * N))
    p = np.full(N, float(p_low))
    p[n_low:] = float(p_high)
    return PriorVector(p)


@dataclass(frozen=True)
class NoiseSpec:
    sigma2: float

    def __post_init__(self):
        if not np.isfinite(self.sigma2) or self.sigma2 < 0:
            raise InvalidParameterError(f"noise variance must be >= 0, got {self.sigma2}")


@dataclass
class SceneConfig:
    N: int
    M: int
    sigma_x2: float
    noise: NoiseSpec
    prior: PriorVector
    matrix_kind: MatrixKind = MatrixKind.PARTIAL_FOURIER
    master_seed: int = 0

    def __post_init__(self):
        self.matrix_kind = MatrixKind.parse(self.matrix_kind)
        if self.N < 1 or self.M < 1 or self.M > self.N:
            raise InvalidDimensionError(f"need 1 <= M <= N, got M={self.M}, N={self.N}")
        if not self.sigma_x2 > 0:
            raise InvalidParameterError(f"sigma_x2 must be > 0, got {self.sigma_x2}")
        if self.prior.N != self.N:
            raise InvalidDimensionError(f"prior length {self.prior.N} != N={self.N}")

    @property
    def gamma(self) -> float:
        return self.M / self.N

    def with_sigma_x2(self, sigma_x2: float) -> "SceneConfig":
        return SceneConfig(
            N=self.N, M=self.M, sigma_x2=sigma_x2, noise=self.noise, prior=self.prior,
            matrix_kind=self.matrix_kind, master_seed=self.master_seed,
        )


@dataclass
class SparseScene:
    A: DesignMatrix
    x0: np.ndarray
    support: np.ndarray  # sorted indices of nonzero entries of x0
    y: np.ndarray
    sigma2: float = field(default=0.0)

    @property
    def support_mask(self) -> np.ndarray:
        mask = np.zeros(self.x0.shape[0], dtype=bool)
        mask[self.support] = True
        return mask


def gen_sparse_signal(prior: PriorVector, sigma_x2: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bernoulli-Gaussian draw: entry i is nonzero with probability p_i and then CN(0, sigma_x2).

    The Bernoulli and amplitude draws are taken for every entry, so the stream
    consumed does not depend on the prior values or on sigma_x2.
    """
    if not sigma_x2 > 0:
        raise InvalidParameterError(f"sigma_x2 must be > 0, got {sigma_x2}")
    active = rng.random(prior.N) < prior.p
    amplitudes = complex_normal(rng, prior.N, sigma_x2)
    # a CN draw is exactly zero with probability zero; keep the support exact anyway
    x0 = np.where(active, amplitudes, 0.0 + 0.0j)
    support = np.flatnonzero(x0)
    return x0, support


def measure(A: DesignMatrix, x0: np.ndarray, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """y = A x0 + xi with xi_i ~ CN(0, sigma2)"""
    x0 = as_signal(x0, A.N, "x0")
    xi = complex_normal(rng, A.M, noise.sigma2)
    return A.matvec(x0) + xi


def snr(gamma: float, sigma_x2: float, sigma2: float) -> float:
    """Matched-filter SNR, gamma * sigma_x2 / sigma2 (linear)"""
    if sigma2 <= 0:
        raise InvalidParameterError(f"noise variance must be > 0 to define an SNR, got {sigma2}")
    if gamma <= 0 or sigma_x2 <= 0:
        raise InvalidParameterError("gamma and sigma_x2 must be > 0")
    return gamma * sigma_x2 / sigma2


def snr_db(gamma: float, sigma_x2: float, sigma2: float) -> float:
    return float(10.0 * np.log10(snr(gamma, sigma_x2, sigma2)))


def sigma_x2_for_snr(target_snr_db: float, gamma: float, sigma2: float) -> float:
    if sigma2 <= 0 or gamma <= 0:
        raise InvalidParameterError("gamma and sigma2 must be > 0")
    return float(10.0 ** (target_snr_db / 10.0) * sigma2 / gamma)


def generate_scene(config: SceneConfig, rng: np.random.Generator) -> SparseScene:
    """Draw A, then x0, then the noise, in that order from one stream"""
    A = generate_matrix(config.matrix_kind, config.N, config.M, rng)
    x0, support = gen_sparse_signal(config.prior, config.sigma_x2, rng)
    y = measure(A, x0, config.noise, rng)
    return SparseScene(A=A, x0=x0, support=support, y=y, sigma2=config.noise.sigma2)
