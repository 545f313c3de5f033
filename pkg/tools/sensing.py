"""
Random sensing (design) matrices
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.linalg import qr

from utils.errors import InvalidDimensionError, InvalidParameterError

logger = logging.getLogger(__name__)

ROW_ORTHOGONAL_TOL = 1e-10


class MatrixKind(str, Enum):
    PARTIAL_FOURIER = "partial_fourier"
    HAAR_ROW_ORTHOGONAL = "haar_row_orthogonal"
    GAUSSIAN_IID = "gaussian_iid"
    IMPORTED = "imported"

    @property
    def row_orthogonal(self) -> bool:
        return self in (MatrixKind.PARTIAL_FOURIER, MatrixKind.HAAR_ROW_ORTHOGONAL)

    @classmethod
    def parse(cls, value) -> "MatrixKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"fourier": "partial_fourier", "haar": "haar_row_orthogonal", "gaussian": "gaussian_iid"}
        return cls(aliases.get(key, key))


@dataclass
class DesignMatrix:
    """M x N complex measurement matrix tagged with its ensemble"""

    entries: np.ndarray
    kind: MatrixKind
    rows: Optional[np.ndarray] = None  # selected DFT rows, partial Fourier only
    _lipschitz: Optional[float] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2:
            raise InvalidDimensionError(f"design matrix must be 2-D, got shape {self.entries.shape}")
        M, N = self.entries.shape
        if not 0 < M <= N:
            raise InvalidDimensionError(f"need 0 < M <= N, got M={M}, N={N}")

    @property
    def M(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]

    @property
    def gamma(self) -> float:
        return self.M / self.N

    @classmethod
    def from_entries(cls, entries: np.ndarray) -> "DesignMatrix":
        return cls(entries=entries, kind=MatrixKind.IMPORTED)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if self.rows is not None:
            return np.fft.fft(x, norm="ortho")[self.rows]
        return self.entries @ x

    def rmatvec(self, r: np.ndarray) -> np.ndarray:
        if self.rows is not None:
            full = np.zeros(self.N, dtype=complex)
            full[self.rows] = r
            return np.fft.ifft(full, norm="ortho")
        return self.entries.conj().T @ r

    def orthogonality_residual(self) -> float:
        gram = self.entries @ self.entries.conj().T
        return float(np.max(np.abs(gram - np.eye(self.M))))

    def is_row_orthogonal(self, tol: float = ROW_ORTHOGONAL_TOL) -> bool:
        return self.orthogonality_residual() <= tol

    def lipschitz(self) -> float:
        """Largest eigenvalue of A^H A (exactly 1 for row-orthogonal ensembles)"""
        if self._lipschitz is None:
            if self.kind.row_orthogonal or (self.kind == MatrixKind.IMPORTED and self.is_row_orthogonal()):
                self._lipschitz = 1.0
            else:
                self._lipschitz = power_iteration(self)
        return self._lipschitz


def power_iteration(A: DesignMatrix, max_iter: int = 500, tol: float = 1e-10, seed: int = 0) -> float:
    """Largest eigenvalue of A^H A from a seeded random complex start"""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.N) + 1j * rng.standard_normal(A.N)
    v /= np.linalg.norm(v)
    estimate = None
    for it in range(max_iter):
        w = A.rmatvec(A.matvec(v))
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        # at least two iterates before accepting
        if estimate is not None and abs(norm - estimate) <= tol * max(1.0, norm):
            logger.debug(f"Power iteration converged in {it + 1} iterations: L={norm:.12g}")
            return float(norm)
        estimate = norm
    return float(estimate)


def _check_dims(N: int, M: int):
    if M < 1 or N < 1:
        raise InvalidDimensionError(f"dimensions must be positive, got M={M}, N={N}")
    if M > N:
        raise InvalidDimensionError(f"M={M} exceeds N={N}")


def gen_partial_fourier(N: int, M: int, rng: np.random.Generator) -> DesignMatrix:
    """M rows of the unitary N-point DFT, drawn uniformly without replacement"""
    _check_dims(N, M)
    rows = np.sort(rng.choice(N, size=M, replace=False))
    n = np.arange(N)
    phase = np.mod(np.outer(rows, n), N)
    entries = np.exp(-2j * np.pi * phase / N) / np.sqrt(N)
    return DesignMatrix(entries=entries, kind=MatrixKind.PARTIAL_FOURIER, rows=rows)


def haar_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2)
    q, r = qr(z)
    d = np.diag(r)
    # phase correction makes the distribution exactly Haar
    return q * (d / np.abs(d))


def gen_haar_row_orthogonal(N: int, M: int, rng: np.random.Generator) -> DesignMatrix:
    _check_dims(N, M)
    U = haar_unitary(N, rng)
    return DesignMatrix(entries=U[:M, :], kind=MatrixKind.HAAR_ROW_ORTHOGONAL)


def gen_gaussian_iid(N: int, M: int, rng: np.random.Generator) -> DesignMatrix:
    """i.i.d. CN(0, 1/N) entries so every row has unit expected energy"""
    _check_dims(N, M)
    scale = np.sqrt(1.0 / (2 * N))
    entries = scale * (rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N)))
    return DesignMatrix(entries=entries, kind=MatrixKind.GAUSSIAN_IID)


GENERATORS = {
    MatrixKind.PARTIAL_FOURIER: gen_partial_fourier,
    MatrixKind.HAAR_ROW_ORTHOGONAL: gen_haar_row_orthogonal,
    MatrixKind.GAUSSIAN_IID: gen_gaussian_iid,
}


def generate_matrix(kind, N: int, M: int, rng: np.random.Generator) -> DesignMatrix:
    kind = MatrixKind.parse(kind)
    if kind not in GENERATORS:
        raise InvalidParameterError(f"cannot generate a matrix of kind {kind.value}")
    return GENERATORS[kind](N, M, rng)
