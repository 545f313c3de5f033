"""
One-shot detection and fixed-point inspection on user-supplied data files
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from tools.debias import fixed_point_residuals, solve_fixed_point
from tools.detectors import dwld_pipeline
from tools.scene import as_signal
from tools.sensing import DesignMatrix
from tools.wlasso import SolverOptions, WeightVector
from utils.data_files import (
    load_complex_matrix,
    load_complex_vector,
    load_real_vector,
    save_complex_vector,
    save_real_vector,
)
from utils.errors import DataFileError, InvalidParameterError

logger = logging.getLogger(__name__)

DETECT_ORTHOGONALITY_TOL = 1e-6


@dataclass
class DetectionReport:
    x_wl: np.ndarray
    x_d: np.ndarray
    sigma_w2: float
    kappa: np.ndarray
    decisions: np.ndarray
    lambda_cro: float
    rho_ca: float
    row_orthogonal: bool

    def summary(self) -> dict:
        return {
            "N": int(self.x_wl.shape[0]),
            "sigma_w2": self.sigma_w2,
            "lambda_cro": self.lambda_cro,
            "rho_ca": self.rho_ca,
            "row_orthogonal": self.row_orthogonal,
            "n_detections": int(self.decisions.sum()),
            "detected": [int(i) for i in np.flatnonzero(self.decisions)],
        }

    def write(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_complex_vector(directory / "x_wl.txt", self.x_wl)
        save_complex_vector(directory / "x_d.txt", self.x_d)
        save_real_vector(directory / "kappa.txt", self.kappa)
        save_real_vector(directory / "decisions.txt", self.decisions.astype(float))
        with open(directory / "report.json", "w") as f:
            json.dump(self.summary(), f, indent=2)
        logger.info(f"Detection report written to {directory}")
        return directory


def _load_weights(weights, N: int) -> WeightVector:
    if isinstance(weights, WeightVector):
        w = weights
    elif isinstance(weights, (str, Path)):
        w = WeightVector(load_real_vector(weights))
    else:
        w = WeightVector(np.broadcast_to(np.asarray(weights, dtype=float), (N,)).copy())
    if w.N != N:
        raise DataFileError(f"weights have length {w.N}, design matrix has {N} columns")
    return w


def detect_once(y_path, A_path, weights, pfa: float, sigma2: float, opts: Optional[SolverOptions] = None) -> DetectionReport:
    """Run the debiased weighted detector on y.txt / A.txt; weights is a file, scalar, or vector"""
    y = load_complex_vector(y_path)
    A = DesignMatrix.from_entries(load_complex_matrix(A_path))
    if y.shape[0] != A.M:
        raise DataFileError(f"y has {y.shape[0]} entries, A has {A.M} rows")
    w = _load_weights(weights, A.N)
    if not sigma2 > 0:
        raise InvalidParameterError(f"sigma2 must be > 0, got {sigma2}")

    row_orthogonal = A.is_row_orthogonal(DETECT_ORTHOGONALITY_TOL)
    if not row_orthogonal:
        logger.warning(
            f"A is not row-orthogonal (max |A A^H - I| = {A.orthogonality_residual():.3e}); "
            "thresholds assume orthonormal rows"
        )

    out = dwld_pipeline(y, A, w, pfa, sigma2, opts)
    res = out.debiased
    logger.info(f"sigma_w2={res.sigma_w2:.6g}, {int(out.decisions.sum())} detection(s)")
    return DetectionReport(
        x_wl=out.x_wl,
        x_d=res.x_d,
        sigma_w2=res.sigma_w2,
        kappa=out.kappa,
        decisions=out.decisions,
        lambda_cro=res.lambda_cro,
        rho_ca=res.rho_ca,
        row_orthogonal=row_orthogonal,
    )


@dataclass
class FixpointReport:
    lambda_cro: float
    rho_ca: float
    iterations: int
    residuals: Tuple[float, float]

    def format(self) -> str:
        return (
            f"Lambda_CRO = {self.lambda_cro:.15g}\n"
            f"rho_CA     = {self.rho_ca:.15g}\n"
            f"iterations = {self.iterations}\n"
            f"residual (Lambda equation) = {self.residuals[0]:.3e}\n"
            f"residual (rho equation)    = {self.residuals[1]:.3e}"
        )


def fixpoint_debug(x_wl, weights, gamma: float) -> FixpointReport:
    """x_wl and weights may be file paths or arrays"""
    if isinstance(x_wl, (str, Path)):
        x_wl = load_complex_vector(x_wl)
    x_wl = as_signal(x_wl, name="x_wl")
    w = _load_weights(weights, x_wl.shape[0])
    Lam, rho, iterations = solve_fixed_point(x_wl, w, gamma)
    return FixpointReport(Lam, rho, iterations, fixed_point_residuals(Lam, rho, x_wl, w, gamma))
