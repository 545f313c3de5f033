"""
Weight-model optimization

Weights are parameterized by two hyper-parameters (lambda0, alpha), either
linearly (lambda_i = lambda0 - alpha p_i) or exponentially
(lambda_i = lambda0 / p_i^alpha). The objective is the Monte Carlo mean of the
predicted residual variance sigma_w2 over scenes drawn from the configured
ensemble, evaluated with common random numbers so that differences between
models are not swamped by Monte Carlo noise.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize

from tools.debias import debias
from tools.scene import PriorVector, SceneConfig, generate_scene
from tools.wlasso import SolverOptions, WeightVector, solve_weighted_lasso
from utils.errors import (
    DebiasInfeasibleError,
    FixedPointError,
    InvalidParameterError,
    ObjectiveUndefinedError,
    SolverConvergenceError,
)
from utils.parallel import run_parallel
from utils.seeding import trial_rng

logger = logging.getLogger(__name__)

LAMBDA_MIN = 1e-4
P_MIN = 1e-3
INFEASIBLE_PENALTY_FACTOR = 10.0
MIN_BUDGET = 25
DEFAULT_N_MC = 64
LAMBDA0_RANGE = (0.01, 0.5)
ALPHA_RANGE = (0.0, 1.0)
MAX_SIMPLEX_ITERS = 100


class ModelKind(str, Enum):
    LINEAR = "linear"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class WeightModel:
    kind: ModelKind
    lambda0: float
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not (np.isfinite(self.lambda0) and self.lambda0 > 0):
            raise InvalidParameterError(f"lambda0 must be > 0, got {self.lambda0}")
        if not np.isfinite(self.alpha):
            raise InvalidParameterError(f"alpha must be finite, got {self.alpha}")

    def weights(self, prior: PriorVector) -> WeightVector:
        p = prior.p
        if self.kind == ModelKind.LINEAR:
            lam = np.maximum(LAMBDA_MIN, self.lambda0 - self.alpha * p)
        else:
            lam = self.lambda0 / np.maximum(p, P_MIN) ** self.alpha
            lam = np.maximum(lam, LAMBDA_MIN)
        return WeightVector(lam)

    def describe(self) -> str:
        if self.kind == ModelKind.LINEAR:
            return f"lambda_i = {self.lambda0:.4f} - {self.alpha:.4f} p_i"
        return f"lambda_i = {self.lambda0:.4f} / p_i^{self.alpha:.4f}"


@dataclass
class ObjectiveEstimate:
    mean_sigma_w2: float
    std_error: float
    n_trials: int
    n_failed: int

    def __post_init__(self):
        if self.std_error < 0:
            raise InvalidParameterError("std_error must be >= 0")
        if self.n_failed > self.n_trials:
            raise InvalidParameterError("n_failed cannot exceed n_trials")


def _f2_trial(task) -> float:
    """sigma_w2 for one scene, NaN when debiasing is infeasible"""
    scene_config, weights, master_seed, index, opts = task
    scene = generate_scene(scene_config, trial_rng(master_seed, index))
    try:
        x_wl = solve_weighted_lasso(scene.y, scene.A, weights, opts)
        return debias(x_wl, scene.y, scene.A, weights, scene.sigma2).sigma_w2
    except (DebiasInfeasibleError, FixedPointError, SolverConvergenceError) as e:
        logger.debug(f"Trial {index} infeasible: {e}")
        return float("nan")


def evaluate_f2(
    model: WeightModel,
    scene: SceneConfig,
    n_mc: int = DEFAULT_N_MC,
    seed: Optional[int] = None,
    threads: int = 1,
    opts: Optional[SolverOptions] = None,
) -> ObjectiveEstimate:
    """
    Monte Carlo estimate of the mean predicted residual variance.

    Trial t always uses the stream (seed, t), so two models evaluated with the
    same seed see identical scenes. Infeasible trials count as
    INFEASIBLE_PENALTY_FACTOR x the worst feasible sigma_w2 of the evaluation.
    """
    if n_mc < 1:
        raise InvalidParameterError(f"n_mc must be >= 1, got {n_mc}")
    seed = scene.master_seed if seed is None else seed
    weights = model.weights(scene.prior)
    tasks = [(scene, weights, seed, t, opts) for t in range(n_mc)]
    values = np.asarray(run_parallel(_f2_trial, tasks, threads), dtype=float)

    failed = np.isnan(values)
    n_failed = int(failed.sum())
    if n_failed == n_mc:
        raise ObjectiveUndefinedError(f"every trial was infeasible for {model.describe()}")
    if n_failed:
        values[failed] = INFEASIBLE_PENALTY_FACTOR * values[~failed].max()
        logger.warning(f"{n_failed}/{n_mc} infeasible trials penalized for {model.describe()}")

    std_error = float(values.std(ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else 0.0
    return ObjectiveEstimate(float(values.mean()), std_error, n_mc, n_failed)


@dataclass
class Evaluation:
    model: WeightModel
    estimate: Optional[ObjectiveEstimate]

    @property
    def value(self) -> float:
        return self.estimate.mean_sigma_w2 if self.estimate is not None else np.inf


def _safe_evaluate(kind, lambda0, alpha, scene, n_mc, seed, threads, opts) -> Evaluation:
    try:
        model = WeightModel(kind, float(lambda0), float(alpha))
    except InvalidParameterError:
        return Evaluation(None, None)
    try:
        return Evaluation(model, evaluate_f2(model, scene, n_mc, seed, threads, opts))
    except ObjectiveUndefinedError as e:
        logger.warning(f"Objective undefined: {e}")
        return Evaluation(model, None)


def default_grid(n_lambda0: int = 8, n_alpha: int = 6) -> Tuple[np.ndarray, np.ndarray]:
    lambda0_grid = np.geomspace(LAMBDA0_RANGE[0], LAMBDA0_RANGE[1], n_lambda0)
    alpha_grid = np.linspace(ALPHA_RANGE[0], ALPHA_RANGE[1], n_alpha)
    return lambda0_grid, alpha_grid


def grid_scan(
    kind,
    scene: SceneConfig,
    lambda0_grid,
    alpha_grid,
    n_mc: int = DEFAULT_N_MC,
    seed: Optional[int] = None,
    threads: int = 1,
    opts: Optional[SolverOptions] = None,
) -> List[Evaluation]:
    evaluations = []
    for lambda0 in lambda0_grid:
        for alpha in alpha_grid:
            evaluations.append(_safe_evaluate(kind, lambda0, alpha, scene, n_mc, seed, threads, opts))
    return evaluations


@dataclass
class OptimizationResult:
    model: WeightModel
    estimate: ObjectiveEstimate
    grid: List[Evaluation] = field(default_factory=list)
    n_evaluations: int = 0


def optimize_weights(
    kind,
    scene: SceneConfig,
    budget: int = 150,
    seed: Optional[int] = None,
    n_mc: int = DEFAULT_N_MC,
    threads: int = 1,
    opts: Optional[SolverOptions] = None,
) -> OptimizationResult:
    """
    Coarse (lambda0, alpha) grid followed by Nelder-Mead from the best grid
    point. budget bounds the total number of objective evaluations.
    """
    kind = ModelKind(kind)
    if budget < MIN_BUDGET:
        raise InvalidParameterError(f"budget must be >= {MIN_BUDGET}, got {budget}")
    seed = scene.master_seed if seed is None else seed

    lambda0_grid, alpha_grid = default_grid() if budget > 8 * 6 else default_grid(5, 5)
    grid = grid_scan(kind, scene, lambda0_grid, alpha_grid, n_mc, seed, threads, opts)
    feasible = [e for e in grid if e.estimate is not None]
    if not feasible:
        raise ObjectiveUndefinedError("objective undefined at every grid point")

    best = min(feasible, key=lambda e: e.value)
    logger.info(f"Grid best: {best.model.describe()} -> {best.value:.6g}")
    n_evaluations = len(grid)
    remaining = budget - n_evaluations

    if remaining > 0:
        history: List[Evaluation] = []

        def f(params: np.ndarray) -> float:
            if len(history) >= remaining:
                return np.inf
            ev = _safe_evaluate(kind, params[0], params[1], scene, n_mc, seed, threads, opts)
            history.append(ev)
            return ev.value

        x0 = np.array([best.model.lambda0, best.model.alpha])
        # initial simplex spans one grid cell in each direction
        step = np.array([0.25 * best.model.lambda0, (ALPHA_RANGE[1] - ALPHA_RANGE[0]) / max(len(alpha_grid) - 1, 1)])
        simplex = np.vstack([x0, x0 + [step[0], 0.0], x0 + [0.0, step[1]]])
        minimize(
            f,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": MAX_SIMPLEX_ITERS,
                "maxfev": remaining,
                "initial_simplex": simplex,
                "xatol": 1e-4,
                "fatol": 1e-8,
            },
        )
        n_evaluations += len(history)
        for ev in history:
            if ev.estimate is not None and ev.value < best.value:
                best = ev
        logger.info(f"Simplex best: {best.model.describe()} -> {best.value:.6g} after {n_evaluations} evaluations")

    return OptimizationResult(best.model, best.estimate, grid, n_evaluations)
