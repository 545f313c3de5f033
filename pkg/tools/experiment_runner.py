"""
Monte Carlo experiment runner

Sweeps SNR points, draws independent scenes per trial from per-trial random
streams, runs every configured detector on the same scene, and reduces the
per-trial outcomes into pooled false-alarm / detection rates with Wilson
intervals.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from tools.debias import debias
from tools.detectors import (
    MetricsAccumulator,
    calibrate_nwld_threshold,
    dwld_detect,
    nwld_detect,
    threshold_from_pfa,
)
from tools.scene import PriorVector, SceneConfig, generate_scene, sigma_x2_for_snr
from tools.weight_opt import WeightModel
from tools.wlasso import SolverOptions, WeightVector, solve_weighted_lasso
from utils.errors import ConfigError, DebiasInfeasibleError, FixedPointError, SolverConvergenceError
from utils.parallel import run_parallel
from utils.seeding import trial_rng
from utils.stats import wilson_interval

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "detector", "snr_db", "pfa_target", "pfa_emp", "pfa_lo", "pfa_hi",
    "pd_emp", "pd_lo", "pd_hi", "sigma_w2_mean", "rho_ca_mean", "n_trials", "n_infeasible",
]
CALIBRATION_STREAM = 1
DEFAULT_SNR_DB = [float(s) for s in range(0, 31, 3)]


class DetectorType(str, Enum):
    DWLD = "dwld"
    NWLD = "nwld"
    DLD = "dld"


@dataclass
class WeightSource:
    """Where a detector's weights come from: explicit vector, weight model, or uniform lambda_L"""

    kind: str
    values: Optional[np.ndarray] = None
    model: Optional[WeightModel] = None
    lambda_l: Optional[float] = None

    def __post_init__(self):
        if self.kind == "explicit" and self.values is None:
            raise ConfigError("explicit weights need a vector")
        if self.kind == "model" and self.model is None:
            raise ConfigError("model weights need a weight model")
        if self.kind == "uniform" and not (self.lambda_l is not None and self.lambda_l > 0):
            raise ConfigError("uniform weights need lambda > 0")
        if self.kind not in ("explicit", "model", "uniform"):
            raise ConfigError(f"unknown weight source {self.kind!r}")

    def resolve(self, prior: PriorVector) -> WeightVector:
        if self.kind == "explicit":
            w = WeightVector(self.values)
            if w.N != prior.N:
                raise ConfigError(f"explicit weights have length {w.N}, expected {prior.N}")
            return w
        if self.kind == "model":
            return self.model.weights(prior)
        return WeightVector.uniform(prior.N, self.lambda_l)

    def to_dict(self) -> dict:
        if self.kind == "explicit":
            return {"kind": "explicit", "length": int(len(self.values))}
        if self.kind == "model":
            return {"kind": "model", "model": self.model.kind.value, "lambda0": self.model.lambda0, "alpha": self.model.alpha}
        return {"kind": "uniform", "lambda": self.lambda_l}


@dataclass
class DetectorSpec:
    name: str
    detector: DetectorType
    weights: WeightSource
    pfa: Optional[float] = None
    kappa: Optional[float] = None

    def __post_init__(self):
        self.detector = DetectorType(self.detector)
        if self.detector == DetectorType.NWLD:
            if self.kappa is None:
                self.kappa = 0.0
        elif self.pfa is None and self.kappa is None:
            raise ConfigError(f"detector {self.name!r} needs a pfa target or an explicit kappa")
        if self.detector == DetectorType.DLD and self.weights.kind != "uniform":
            raise ConfigError(f"detector {self.name!r}: DLD uses a uniform lambda")
        if self.pfa is not None and not 0.0 < self.pfa <= 1.0:
            raise ConfigError(f"detector {self.name!r}: pfa must be in (0, 1]")
        if self.kappa is not None and self.kappa < 0:
            raise ConfigError(f"detector {self.name!r}: kappa must be >= 0")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "type": self.detector.value,
            "weights": self.weights.to_dict(),
            "pfa": self.pfa,
            "kappa": self.kappa,
        }


@dataclass
class ExperimentConfig:
    scene: SceneConfig
    detectors: List[DetectorSpec]
    snr_db: List[float] = field(default_factory=lambda: list(DEFAULT_SNR_DB))
    n_trials: int = 2000
    output: Optional[str] = None
    master_seed: int = 0
    fmt: str = "csv"
    threads: int = 1
    solver: SolverOptions = field(default_factory=SolverOptions)
    prior_name: Optional[str] = None

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError(f"n_trials must be >= 1, got {self.n_trials}")
        if not self.detectors:
            raise ConfigError("at least one detector is required")
        if not self.snr_db or not np.all(np.isfinite(self.snr_db)):
            raise ConfigError("snr_db must be a non-empty list of finite values")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.fmt!r}")
        names = [d.name for d in self.detectors]
        if len(set(names)) != len(names):
            raise ConfigError(f"detector names must be unique: {names}")
        self.scene.master_seed = self.master_seed

    def to_dict(self) -> dict:
        return {
            "scene": {
                "N": self.scene.N,
                "M": self.scene.M,
                "gamma": self.scene.gamma,
                "sigma2": self.scene.noise.sigma2,
                "matrix_kind": self.scene.matrix_kind.value,
                "prior": self.prior_name or "custom",
                "prior_values": [float(v) for v in self.scene.prior.p],
            },
            "detectors": [d.to_dict() for d in self.detectors],
            "snr_db": [float(s) for s in self.snr_db],
            "n_trials": self.n_trials,
            "master_seed": self.master_seed,
            "solver": asdict(self.solver),
        }


@dataclass
class ResultRow:
    detector: str
    snr_db: float
    pfa_target: float
    pfa_emp: float
    pfa_lo: float
    pfa_hi: float
    pd_emp: float
    pd_lo: float
    pd_hi: float
    sigma_w2_mean: float
    rho_ca_mean: float
    n_trials: int
    n_infeasible: int
    accumulator: Optional[MetricsAccumulator] = field(default=None, repr=False, compare=False)

    def as_record(self) -> Dict[str, object]:
        return {col: getattr(self, col) for col in CSV_COLUMNS}


@dataclass
class _DetectorPlan:
    name: str
    detector: DetectorType
    weight_key: int
    pfa: Optional[float]
    kappa: Optional[float]


@dataclass
class _DetectorOutcome:
    decisions: Optional[np.ndarray]
    sigma_w2: float = float("nan")
    rho_ca: float = float("nan")


@dataclass
class _TrialOutcome:
    support_mask: np.ndarray
    detectors: List[_DetectorOutcome]


def _run_trial(task) -> _TrialOutcome:
    scene_config, plans, weight_vectors, master_seed, index, solver = task
    scene = generate_scene(scene_config, trial_rng(master_seed, index))
    mask = np.zeros(scene_config.N, dtype=bool)
    mask[scene.support] = True

    solved: Dict[int, Optional[np.ndarray]] = {}
    outcomes = []
    for plan in plans:
        weights = weight_vectors[plan.weight_key]
        try:
            if plan.weight_key not in solved:
                solved[plan.weight_key] = solve_weighted_lasso(scene.y, scene.A, weights, solver)
            x_wl = solved[plan.weight_key]
            if plan.detector == DetectorType.NWLD:
                outcomes.append(_DetectorOutcome(nwld_detect(x_wl, plan.kappa)))
                continue
            result = debias(x_wl, scene.y, scene.A, weights, scene.sigma2)
            if plan.kappa is not None:
                kappa = np.full(scene_config.N, plan.kappa)
            else:
                kappa = threshold_from_pfa(result.sigma_w2, np.full(scene_config.N, plan.pfa))
            outcomes.append(_DetectorOutcome(dwld_detect(result.x_d, kappa), result.sigma_w2, result.rho_ca))
        except (DebiasInfeasibleError, FixedPointError, SolverConvergenceError) as e:
            logger.debug(f"Trial {index}, detector {plan.name}: {e}")
            outcomes.append(_DetectorOutcome(None))
    return _TrialOutcome(mask, outcomes)


def _plan(config: ExperimentConfig):
    """Resolve weights once and share solves between detectors with equal weights"""
    weight_vectors: List[WeightVector] = []
    plans = []
    for spec in config.detectors:
        w = spec.weights.resolve(config.scene.prior)
        key = next((i for i, v in enumerate(weight_vectors) if np.array_equal(v.values, w.values)), None)
        if key is None:
            weight_vectors.append(w)
            key = len(weight_vectors) - 1
        plans.append(_DetectorPlan(spec.name, spec.detector, key, spec.pfa, spec.kappa))
    return plans, weight_vectors


def _reduce(spec: DetectorSpec, snr: float, outcomes: List[_TrialOutcome], j: int, N: int) -> ResultRow:
    acc = MetricsAccumulator.empty(N)
    sigma_sum, rho_sum, n_ok, n_infeasible = 0.0, 0.0, 0, 0
    for trial in outcomes:
        out = trial.detectors[j]
        if out.decisions is None:
            n_infeasible += 1
            continue
        acc.update(out.decisions, trial.support_mask)
        if np.isfinite(out.sigma_w2):
            sigma_sum += out.sigma_w2
            rho_sum += out.rho_ca
            n_ok += 1

    null_n, supp_n = int(acc.null_occurrences.sum()), int(acc.support_occurrences.sum())
    pfa_lo, pfa_hi = wilson_interval(int(acc.null_rejections.sum()), null_n)
    pd_lo, pd_hi = wilson_interval(int(acc.support_rejections.sum()), supp_n)
    pfa_target = spec.pfa if (spec.detector != DetectorType.NWLD and spec.kappa is None) else float("nan")
    return ResultRow(
        detector=spec.name,
        snr_db=float(snr),
        pfa_target=float(pfa_target) if pfa_target is not None else float("nan"),
        pfa_emp=acc.total_pfa(),
        pfa_lo=pfa_lo,
        pfa_hi=pfa_hi,
        pd_emp=acc.total_pd(),
        pd_lo=pd_lo,
        pd_hi=pd_hi,
        sigma_w2_mean=sigma_sum / n_ok if n_ok else float("nan"),
        rho_ca_mean=rho_sum / n_ok if n_ok else float("nan"),
        n_trials=len(outcomes),
        n_infeasible=n_infeasible,
        accumulator=acc,
    )


def run_experiment(config: ExperimentConfig) -> List[ResultRow]:
    """One row per (SNR point, detector), in sweep order then detector order"""
    plans, weight_vectors = _plan(config)
    gamma, sigma2 = config.scene.gamma, config.scene.noise.sigma2
    rows: List[ResultRow] = []

    for snr in config.snr_db:
        scene_config = config.scene.with_sigma_x2(sigma_x2_for_snr(snr, gamma, sigma2))
        tasks = [
            (scene_config, plans, weight_vectors, config.master_seed, t, config.solver)
            for t in range(config.n_trials)
        ]
        outcomes = run_parallel(_run_trial, tasks, config.threads)
        for j, spec in enumerate(config.detectors):
            row = _reduce(spec, snr, outcomes, j, config.scene.N)
            if row.n_infeasible:
                logger.warning(f"{spec.name} @ {snr:g} dB: {row.n_infeasible}/{row.n_trials} infeasible trials")
            rows.append(row)
        logger.info(
            f"SNR {snr:g} dB done: "
            + ", ".join(f"{r.detector} Pfa={r.pfa_emp:.4f} Pd={r.pd_emp:.4f}" for r in rows[-len(config.detectors):])
        )
    return rows


def all_infeasible_cells(rows: List[ResultRow]) -> List[ResultRow]:
    return [r for r in rows if r.n_trials > 0 and r.n_infeasible == r.n_trials]


def collect_null_magnitudes(config: ExperimentConfig, spec: DetectorSpec, snr: float, n_trials: int) -> np.ndarray:
    """|x_wl|^2 on null entries from an ensemble independent of the main trials"""
    weights = spec.weights.resolve(config.scene.prior)
    scene_config = config.scene.with_sigma_x2(sigma_x2_for_snr(snr, config.scene.gamma, config.scene.noise.sigma2))
    values = []
    for t in range(n_trials):
        scene = generate_scene(scene_config, trial_rng(config.master_seed, t, CALIBRATION_STREAM))
        x_wl = solve_weighted_lasso(scene.y, scene.A, weights, config.solver)
        null = np.ones(config.scene.N, dtype=bool)
        null[scene.support] = False
        values.append(np.abs(x_wl[null]) ** 2)
    return np.concatenate(values)


def calibrate_nwld(config: ExperimentConfig, spec: DetectorSpec, snr: float, target_pfa: float, n_trials: int = 200, tol: float = 5e-4) -> float:
    """NWLD threshold matched to target_pfa on a calibration ensemble"""
    kappa = calibrate_nwld_threshold(collect_null_magnitudes(config, spec, snr, n_trials), target_pfa, tol)
    logger.info(f"Calibrated {spec.name} @ {snr:g} dB: kappa={kappa:.6g} for Pfa={target_pfa:.4f}")
    return kappa


def write_results(rows: List[ResultRow], config: ExperimentConfig, path, fmt: Optional[str] = None) -> Path:
    """CSV (with the resolved config in '#' header lines) or JSON"""
    fmt = fmt or config.fmt
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    resolved = config.to_dict()

    if fmt == "json":
        records = []
        for r in rows:
            rec = r.as_record()
            records.append({k: (None if isinstance(v, float) and np.isnan(v) else v) for k, v in rec.items()})
        with open(path, "w") as f:
            json.dump({"config": resolved, "master_seed": config.master_seed, "rows": records}, f, indent=2)
    else:
        df = pd.DataFrame([r.as_record() for r in rows], columns=CSV_COLUMNS)
        with open(path, "w", newline="") as f:
            f.write(f"# master_seed: {config.master_seed}\n")
            f.write(f"# config: {json.dumps(resolved, sort_keys=True)}\n")
            df.to_csv(f, index=False, na_rep="", float_format="%.10g")
    logger.info(f"Results written to {path}")
    return path


def read_results(path) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")
