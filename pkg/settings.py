"""
Experiment configuration: one YAML (or JSON) document parsed into frozen dataclasses.

Unknown keys and invalid values raise ConfigError naming the offending field.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Optional, Tuple

import yaml

from selection import METHODS
from selection.lmap import LmapConfig
from simulator import SimulationSpec
from solvers.errors import ConfigError
from solvers.irmxne import ReweightConfig
from solvers.mxne import SolverConfig

DEFAULT_CONFIG_PATH = "config/config.yaml"
SIMULATED_BETA = 10.0


def load_config(path: str = DEFAULT_CONFIG_PATH) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"{path} is not valid YAML/JSON: {exc}") from exc
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError("<root>", f"{path} must hold a mapping, got {type(raw).__name__}")
    return raw


# -----------------------------
# Sections
# -----------------------------

@dataclass(frozen=True)
class FileScenario:
    G: str
    M: str
    positions: str
    n_orient: int = 3
    sigma: float = 1.0


@dataclass(frozen=True)
class GridSettings:
    n: int = 20
    ratio_min: float = 0.1

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 < self.ratio_min < 1:
            raise ValueError(f"ratio_min must be in (0, 1), got {self.ratio_min}")


@dataclass(frozen=True)
class ReweightSettings:
    n_iter: int = 5
    eps: float = 1e-8


@dataclass(frozen=True)
class SureSettings:
    n_probes: int = 1

    def __post_init__(self) -> None:
        if self.n_probes < 1:
            raise ValueError(f"n_probes must be >= 1, got {self.n_probes}")


@dataclass(frozen=True)
class CvSettings:
    n_folds: int = 5

    def __post_init__(self) -> None:
        if self.n_folds < 2:
            raise ValueError(f"n_folds must be >= 2, got {self.n_folds}")


@dataclass(frozen=True)
class LmapSettings:
    beta: Optional[float] = None
    lambda0: Optional[float] = None
    n_iter: int = 10
    tol_lambda: Optional[float] = None


@dataclass(frozen=True)
class SweepSettings:
    amplitudes: Tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    n_seeds: int = 20
    methods: Tuple[str, ...] = METHODS
    delta_mm: float = 7.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "amplitudes", tuple(float(a) for a in self.amplitudes))
        object.__setattr__(self, "methods", tuple(self.methods))
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")
        if self.n_seeds < 1:
            raise ValueError(f"n_seeds must be >= 1, got {self.n_seeds}")


@dataclass(frozen=True)
class ExperimentConfig:
    simulate: Optional[SimulationSpec] = None
    files: Optional[FileScenario] = None
    method: str = "sure"
    seed: int = 0
    n_jobs: int = 1
    output_dir: str = "out"
    grid: GridSettings = field(default_factory=GridSettings)
    solver: SolverConfig = field(default_factory=SolverConfig)
    reweight: ReweightSettings = field(default_factory=ReweightSettings)
    sure: SureSettings = field(default_factory=SureSettings)
    cv: CvSettings = field(default_factory=CvSettings)
    lmap: LmapSettings = field(default_factory=LmapSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)

    def reweight_config(self) -> ReweightConfig:
        return ReweightConfig(n_iter=self.reweight.n_iter, eps=self.reweight.eps, inner=self.solver)

    def lmap_config(self) -> LmapConfig:
        beta = self.lmap.beta if self.lmap.beta is not None else SIMULATED_BETA
        return LmapConfig(
            beta=beta,
            lambda0=self.lmap.lambda0,
            n_iter=self.lmap.n_iter,
            tol_lambda=self.lmap.tol_lambda,
            reweight=self.reweight_config(),
        )

    def with_overrides(self, seed: Optional[int] = None, n_jobs: Optional[int] = None,
                       output_dir: Optional[str] = None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            sim = cfg.simulate
            if sim is not None:
                sim = replace(sim, seed=seed)
            cfg = replace(cfg, seed=seed, simulate=sim)
        if n_jobs is not None:
            cfg = replace(cfg, n_jobs=n_jobs)
        if output_dir is not None:
            cfg = replace(cfg, output_dir=output_dir)
        return cfg

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# -----------------------------
# Parsing
# -----------------------------

def _coerce(section: str, f: Any, value: Any) -> Any:
    # YAML 1.1 reads exponent floats without a dot ("1e-8") as strings
    if isinstance(value, str) and "float" in str(f.type):
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigError(f"{section}.{f.name}", f"expected a number, got {value!r}") from exc
    return value


def _build(name: str, cls: type, raw: Any) -> Any:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(name, f"must be a mapping, got {type(raw).__name__}")
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown field")
    raw = {f.name: _coerce(name, f, raw[f.name]) for f in fields(cls) if f.name in raw}
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, str(exc)) from exc


def parse_config(raw: Dict[str, Any]) -> ExperimentConfig:
    raw = dict(raw or {})
    top_level = {f.name for f in fields(ExperimentConfig)} | {"scenario"}
    top_level -= {"simulate", "files"}
    for key in raw:
        if key not in top_level:
            raise ConfigError(key, "unknown field")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed", f"must be a non-negative integer, got {seed!r}")

    scenario = raw.get("scenario") or {}
    if not isinstance(scenario, dict):
        raise ConfigError("scenario", "must be a mapping")
    for key in scenario:
        if key not in ("simulate", "files"):
            raise ConfigError(f"scenario.{key}", "unknown field; expected 'simulate' or 'files'")
    if ("simulate" in scenario) == ("files" in scenario):
        raise ConfigError("scenario", "exactly one of 'simulate' or 'files' is required")

    simulate = files = None
    if "simulate" in scenario:
        sim_raw = dict(scenario["simulate"] or {})
        sim_raw.setdefault("seed", seed)
        simulate = _build("scenario.simulate", SimulationSpec, sim_raw)
    else:
        files = _build("scenario.files", FileScenario, scenario["files"])

    method = raw.get("method", "sure")
    if method not in METHODS:
        raise ConfigError("method", f"must be one of {list(METHODS)}, got {method!r}")

    n_jobs = raw.get("n_jobs", 1)
    if not isinstance(n_jobs, int) or n_jobs == 0:
        raise ConfigError("n_jobs", f"must be a non-zero integer, got {n_jobs!r}")

    lmap = _build("lmap", LmapSettings, raw.get("lmap"))
    if method == "lmap" and files is not None and lmap.beta is None:
        raise ConfigError("lmap.beta", "is mandatory for file input (no default hyperprior for real data)")

    cfg = ExperimentConfig(
        simulate=simulate,
        files=files,
        method=method,
        seed=seed,
        n_jobs=n_jobs,
        output_dir=str(raw.get("output_dir", "out")),
        grid=_build("grid", GridSettings, raw.get("grid")),
        solver=_build("solver", SolverConfig, raw.get("solver")),
        reweight=_build("reweight", ReweightSettings, raw.get("reweight")),
        sure=_build("sure", SureSettings, raw.get("sure")),
        cv=_build("cv", CvSettings, raw.get("cv")),
        lmap=lmap,
        sweep=_build("sweep", SweepSettings, raw.get("sweep")),
    )
    # validate the derived solver configs now rather than mid-run
    try:
        cfg.reweight_config()
        cfg.lmap_config()
    except ValueError as exc:
        raise ConfigError("reweight/lmap", str(exc)) from exc
    return cfg
