"""
Experiment configuration loading

Config files are INI-style (`[scene]`, `[experiment]`, `[solver]`,
`[detector.<name>]`) or JSON with the same sections. Named priors and
reference weight models come from config/presets.json.
"""

import configparser
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from tools.experiment_runner import DetectorSpec, ExperimentConfig, WeightSource
from tools.scene import NoiseSpec, PriorVector, SceneConfig, sigma_x2_for_snr, two_level_prior, uniform_prior
from tools.sensing import MatrixKind
from tools.weight_opt import ModelKind, WeightModel
from tools.wlasso import SolverOptions
from utils.data_files import load_real_vector
from utils.errors import ConfigError, DataFileError, DWLDError
from utils.settings import Settings, resolve_threads

logger = logging.getLogger(__name__)

PRESETS_PATH = Path(__file__).resolve().parent.parent / "config" / "presets.json"

_presets_cache: Optional[Dict[str, Any]] = None


def load_presets(path: Optional[Path] = None) -> Dict[str, Any]:
    global _presets_cache
    if path is None and _presets_cache is not None:
        return _presets_cache
    try:
        with open(path or PRESETS_PATH, "r") as f:
            presets = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot load presets: {e}")
    if path is None:
        _presets_cache = presets
    return presets


def reference_model(prior_name: str, kind: str) -> WeightModel:
    refs = load_presets()["reference_weights"]
    if prior_name not in refs:
        raise ConfigError(f"no reference weights for prior {prior_name!r}; known: {sorted(refs)}")
    entry = refs[prior_name].get(str(kind).lower())
    if entry is None:
        raise ConfigError(f"no {kind!r} reference model for prior {prior_name!r}")
    return WeightModel(ModelKind(kind), entry["lambda0"], entry["alpha"])


def _read_sections(path: Path) -> Dict[str, Dict[str, Any]]:
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix.lower() == ".json":
        try:
            with open(path, "r") as f:
                raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}")
        sections = {k: dict(v) for k, v in raw.items() if k != "detectors"}
        for name, body in raw.get("detectors", {}).items():
            sections[f"detector.{name}"] = dict(body)
        return sections

    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}")
    return {name: dict(parser.items(name)) for name in parser.sections()}


def _float(section: dict, key: str, where: str, default=None) -> Optional[float]:
    value = section.get(key, default)
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"[{where}] {key} must be a number, got {value!r}")


def _int(section: dict, key: str, where: str, default=None) -> Optional[int]:
    value = section.get(key, default)
    if value is None:
        return None
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"[{where}] {key} must be an integer, got {value!r}")


def _float_list(value, where: str) -> List[float]:
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = [tok for tok in str(value).split(",") if tok.strip()]
    try:
        return [float(v) for v in items]
    except ValueError:
        raise ConfigError(f"[{where}] expected a comma-separated list of numbers, got {value!r}")


def _resolve_path(value: str, base_dir: Path) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base_dir / p


def _build_prior(scene: dict, N: int, base_dir: Path) -> Tuple[PriorVector, str]:
    name = str(scene.get("prior", "two_level_sparse")).strip().lower()
    presets = load_presets()["priors"]
    if name in presets:
        entry = presets[name]
        return two_level_prior(N, entry["p_low"], entry["p_high"], entry.get("high_fraction", 0.25)), name
    if name == "two_level":
        return two_level_prior(
            N,
            _float(scene, "p_low", "scene"),
            _float(scene, "p_high", "scene"),
            _float(scene, "high_fraction", "scene", 0.25),
        ), name
    if name == "uniform":
        return uniform_prior(N, _float(scene, "p", "scene")), name
    if name == "file":
        if "prior_path" not in scene:
            raise ConfigError("[scene] prior = file needs prior_path")
        return PriorVector(load_real_vector(_resolve_path(scene["prior_path"], base_dir))), name
    raise ConfigError(f"[scene] unknown prior {name!r}; use one of {sorted(presets)} or two_level, uniform, file")


def _build_scene(scene: dict, snr_db: List[float], base_dir: Path) -> Tuple[SceneConfig, str]:
    defaults = load_presets()["defaults"]
    N = _int(scene, "n", "scene", _int(scene, "N", "scene", defaults["N"]))
    if "m" in scene or "M" in scene:
        M = _int(scene, "m" if "m" in scene else "M", "scene")
    else:
        M = int(round(_float(scene, "gamma", "scene", defaults["gamma"]) * N))
    sigma2 = _float(scene, "sigma2", "scene", defaults["sigma2"])
    if not sigma2 > 0:
        raise ConfigError(f"[scene] sigma2 must be > 0 for an SNR sweep, got {sigma2}")
    try:
        kind = MatrixKind.parse(scene.get("matrix_kind", defaults["matrix_kind"]))
    except ValueError:
        raise ConfigError(f"[scene] unknown matrix_kind {scene.get('matrix_kind')!r}")
    if kind == MatrixKind.IMPORTED:
        raise ConfigError("[scene] imported matrices cannot be drawn per trial")
    prior, prior_name = _build_prior(scene, N, base_dir)
    config = SceneConfig(
        N=N,
        M=M,
        sigma_x2=sigma_x2_for_snr(snr_db[0], M / N, sigma2),
        noise=NoiseSpec(sigma2),
        prior=prior,
        matrix_kind=kind,
    )
    return config, prior_name


def _build_weights(body: dict, where: str, prior_name: str, base_dir: Path) -> WeightSource:
    kind = str(body.get("weights", "linear")).strip().lower()
    if kind in ("linear", "exponential"):
        lambda0 = _float(body, "lambda0", where)
        alpha = _float(body, "alpha", where)
        if lambda0 is None or alpha is None:
            raise ConfigError(f"[{where}] {kind} weights need lambda0 and alpha")
        return WeightSource("model", model=WeightModel(ModelKind(kind), lambda0, alpha))
    if kind == "uniform":
        return WeightSource("uniform", lambda_l=_float(body, "lambda", where))
    if kind == "explicit":
        if "weights_path" not in body:
            raise ConfigError(f"[{where}] explicit weights need weights_path")
        return WeightSource("explicit", values=load_real_vector(_resolve_path(body["weights_path"], base_dir)))
    if kind == "reference":
        model = str(body.get("model", "linear")).lower()
        return WeightSource("model", model=reference_model(body.get("reference_prior", prior_name), model))
    raise ConfigError(f"[{where}] unknown weights {kind!r}")


def _build_detector(name: str, body: dict, prior_name: str, base_dir: Path, default_pfa: float) -> DetectorSpec:
    where = f"detector.{name}"
    detector = str(body.get("type", "dwld")).strip().lower()
    if detector not in ("dwld", "nwld", "dld"):
        raise ConfigError(f"[{where}] unknown detector type {detector!r}")
    if detector == "dld":
        body = dict(body, weights="uniform")
    kappa = _float(body, "kappa", where)
    pfa = _float(body, "pfa", where)
    if detector != "nwld" and pfa is None and kappa is None:
        pfa = default_pfa
    return DetectorSpec(
        name=name,
        detector=detector,
        weights=_build_weights(body, where, prior_name, base_dir),
        pfa=pfa,
        kappa=kappa,
    )


def _build_solver(section: dict) -> SolverOptions:
    opts = SolverOptions()
    return SolverOptions(
        max_iters=_int(section, "max_iters", "solver", opts.max_iters),
        rel_tol=_float(section, "rel_tol", "solver", opts.rel_tol),
        kkt_tol=_float(section, "kkt_tol", "solver", opts.kkt_tol),
        kkt_every=_int(section, "kkt_every", "solver", opts.kkt_every),
    )


def parse_config(
    sections: Dict[str, Dict[str, Any]],
    base_dir: Path = Path("."),
    overrides: Optional[Dict[str, Any]] = None,
    settings: Optional[Settings] = None,
) -> ExperimentConfig:
    """
    Build an ExperimentConfig from parsed sections.

    overrides (from CLI flags) win over file values, which win over settings
    (environment defaults). Keys: seed, trials, threads, out, format.
    """
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    settings = settings or Settings.from_env()
    defaults = load_presets()["defaults"]
    experiment = sections.get("experiment", {})

    snr_db = _float_list(experiment.get("snr_db", defaults["snr_db"]), "experiment")
    if not snr_db:
        raise ConfigError("[experiment] snr_db is empty")

    try:
        scene, prior_name = _build_scene(sections.get("scene", {}), snr_db, base_dir)
        default_pfa = _float(experiment, "pfa", "experiment", defaults["pfa"])
        detectors = [
            _build_detector(name.split(".", 1)[1], body, prior_name, base_dir, default_pfa)
            for name, body in sections.items()
            if name.startswith("detector.")
        ]
        if not detectors:
            raise ConfigError("config defines no [detector.<name>] section")

        threads = overrides.get("threads", experiment.get("threads", settings.threads))
        output = overrides.get("out", experiment.get("output"))
        return ExperimentConfig(
            scene=scene,
            detectors=detectors,
            snr_db=snr_db,
            n_trials=int(overrides.get("trials", _int(experiment, "n_trials", "experiment", settings.trials))),
            output=str(output) if output is not None else None,
            master_seed=int(overrides.get("seed", _int(experiment, "master_seed", "experiment", settings.master_seed))),
            fmt=str(overrides.get("format", experiment.get("format", "csv"))).lower(),
            threads=resolve_threads(threads),
            solver=_build_solver(sections.get("solver", {})),
            prior_name=prior_name,
        )
    except ConfigError:
        raise
    except (DWLDError, DataFileError, ValueError) as e:
        raise ConfigError(str(e))


def load_config(path, overrides: Optional[Dict[str, Any]] = None, settings: Optional[Settings] = None) -> ExperimentConfig:
    path = Path(path)
    config = parse_config(_read_sections(path), path.parent, overrides, settings)
    logger.info(
        f"Loaded {path.name}: N={config.scene.N}, M={config.scene.M}, "
        f"{len(config.detectors)} detector(s), {len(config.snr_db)} SNR point(s), {config.n_trials} trials"
    )
    return config
