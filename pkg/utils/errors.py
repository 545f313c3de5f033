"""Exception hierarchy shared by the detector library and the CLI"""

from typing import Optional


class DWLDError(Exception):
    """Base class for every error raised by this package"""


class InvalidDimensionError(DWLDError, ValueError):
    pass


class InvalidParameterError(DWLDError, ValueError):
    pass


class ConfigError(DWLDError, ValueError):
    pass


class DataFileError(DWLDError, ValueError):
    pass


class SolverConvergenceError(DWLDError, RuntimeError):
    """Weighted LASSO solve stopped before reaching the KKT tolerance"""

    def __init__(self, message: str, kkt_residual: float, iterations: int):
        super().__init__(f"{message} (kkt_residual={kkt_residual:.3e}, iterations={iterations})")
        self.kkt_residual = kkt_residual
        self.iterations = iterations


class DebiasInfeasibleError(DWLDError, ArithmeticError):
    """Active density of the estimate reached the compression rate"""

    hint = "increase the regularization weights so the estimate is sparser"

    def __init__(self, rho: float, gamma: float, message: Optional[str] = None):
        text = message or f"active density {rho:.6f} >= compression rate {gamma:.6f}"
        super().__init__(f"{text}; {self.hint}")
        self.rho = rho
        self.gamma = gamma


class FixedPointError(DWLDError, RuntimeError):
    pass


class ObjectiveUndefinedError(DWLDError, RuntimeError):
    pass
