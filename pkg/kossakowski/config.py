# YAML configuration: config.yaml next to the scripts, falling back to the shipped config_template.yaml.
import os
from dataclasses import dataclass, field, fields
from typing import Optional

import yaml

ROOT = os.path.normpath(os.path.join(os.path.dirname(__file__), ".."))


@dataclass(frozen=True)
class OptimizerConfig:
    """
    Multistart projected-gradient ascent of the positivity inequality.

    :param restarts: Starting points per map (barycenter, vertices, edge midpoints, then Dirichlet draws).
    :param iterations: Iteration budget per restart.
    :param eps_viol: A maximum above 1 + eps_viol is a violation.
    :param step: Initial step length along the normalized gradient.
    :param xtol: An accepted move shorter than this stops a restart.
    :param ftol: An accepted gain below this stops a restart.
    :param min_step: A step length below this stops a restart.
    :param inconclusive_band: Unconverged restarts this close to 1 make the verdict inconclusive.
    """

    restarts: int = 200
    iterations: int = 500
    eps_viol: float = 1e-7
    step: float = 1.0
    xtol: float = 1e-12
    ftol: float = 1e-15
    min_step: float = 1e-14
    inconclusive_band: float = 1e-3

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 1:
            raise ValueError("optimizer restarts and iterations must be at least 1")


@dataclass(frozen=True)
class OracleConfig:
    """
    Brute-force evaluation of <x|Λ(|y><y|)|x> over random unit vectors and a simplex grid.

    :param samples: Random (x, y) pairs.
    :param grid_resolution: Simplex grid denominator, lowered until the grid has at most ``grid_points_max`` points.
    :param batch_size: Pairs evaluated per vectorized batch.
    :param eps: A value below -eps is a violation.
    """

    samples: int = 100000
    grid_resolution: int = 12
    grid_points_max: int = 2000
    batch_size: int = 4096
    eps: float = 1e-7

    def __post_init__(self):
        if self.samples < 0 or self.batch_size < 1 or self.grid_resolution < 1:
            raise ValueError("oracle samples must be >= 0, batch_size and grid_resolution >= 1")


@dataclass(frozen=True)
class ScanConfig:
    """
    Region scan of n=3 circulant parameters (a, b, c) in [0, a_max]³.

    :param a_max: Upper end of each axis.
    :param resolution: Grid points per axis, or the number of draws in random mode.
    :param margin_band: Closed-form margins within this band are not counted as disagreements.
    :param n_jobs: joblib workers.
    :param chunk_size: Maps per optimizer batch.
    """

    a_max: float = 3.0
    resolution: int = 40
    margin_band: float = 1e-4
    n_jobs: int = -1
    chunk_size: int = 256

    def __post_init__(self):
        if self.a_max <= 0:
            raise ValueError(f"a_max must be positive, got {self.a_max}")
        if self.resolution < 2:
            raise ValueError(f"scan resolution must be at least 2, got {self.resolution}")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be at least 1")


@dataclass(frozen=True)
class Config:
    results_path: Optional[str] = None
    random_seed: int = 0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)


def _section(cls, values):
    values = values or {}
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    # PyYAML reads exponents without a dot ("1e-7") as strings.
    types = {f.name: type(f.default) for f in fields(cls)}
    return cls(**{k: types[k](v) for k, v in values.items() if v is not None})


def default_config_path() -> str:
    path = os.path.join(ROOT, "config.yaml")
    if os.path.exists(path):
        return path
    return os.path.join(ROOT, "config_template.yaml")


def load_config(path: Optional[str] = None) -> Config:
    """
    Reads the YAML configuration. Missing keys take their defaults, unknown keys are rejected.

    :param path: YAML file. Defaults to config.yaml in the repository root, else config_template.yaml.
    """
    path = path or default_config_path()
    with open(path, "r") as f:
        raw = yaml.safe_load(f) or {}
    sections = {"optimizer": OptimizerConfig, "oracle": OracleConfig, "scan": ScanConfig}
    top = {f.name for f in fields(Config)}
    unknown = set(raw) - top
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    kwargs = {k: v for k, v in raw.items() if k not in sections and v is not None}
    for name, cls in sections.items():
        kwargs[name] = _section(cls, raw.get(name))
    return Config(**kwargs)
