"""Run configuration: a nested YAML mapping checked key by key."""
import dataclasses
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .analysis import FamilyConfig
from .grid import Grid1D
from .model import ASYMPTOTIC, PERIODIC, BumpParams, NonlinearitySpec, PeriodicParams
from .solver import SolverConfig

CHECK_NAMES = (
    "validators",
    "spectral_exactness",
    "seminorm_identity",
    "coercivity",
    "gradient_fd",
    "projection",
    "tm_ratio_sweep",
    "exp_power_check",
    "brezis_lieb_check",
    "vanishing_diagnostic",
)


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (CLI exit status 2)."""


@dataclass(frozen=True)
class GridConfig:
    L: float = 16.0
    N: int = 1024


@dataclass(frozen=True)
class FamilyParams:
    v1_base: float = 1.0
    v1_amp: float = 0.5
    v2_base: float = 1.5
    v2_amp: float = 0.5
    coupling: float = 0.5


@dataclass(frozen=True)
class PotentialConfig:
    flavor: str = PERIODIC
    delta: float = 0.6
    family: FamilyParams = field(default_factory=FamilyParams)
    bump: BumpParams = field(default_factory=BumpParams)
    edge_tol: float = 1e-3

    def __post_init__(self) -> None:
        if self.flavor not in (PERIODIC, ASYMPTOTIC):
            raise ValueError(f"flavor must be {PERIODIC!r} or {ASYMPTOTIC!r}, got {self.flavor!r}")

    def periodic_params(self) -> PeriodicParams:
        return PeriodicParams(**dataclasses.asdict(self.family), delta=self.delta)


@dataclass(frozen=True)
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    potentials: PotentialConfig = field(default_factory=PotentialConfig)
    nonlinearity: tuple = (
        NonlinearitySpec(q=4.0, mu=3.0, theta=60.0, alpha0=1.0),
        NonlinearitySpec(q=4.0, mu=3.5, theta=60.0, alpha0=1.25),
    )
    solver: SolverConfig = field(default_factory=SolverConfig)
    checks: tuple = CHECK_NAMES
    tm_family: FamilyConfig = field(default_factory=FamilyConfig)
    estimator_starts: int = 16
    output_dir: str = "results"
    omega: float = math.pi / 4

    def __post_init__(self) -> None:
        if len(self.nonlinearity) != 2:
            raise ValueError("nonlinearity needs exactly two entries, one per component")
        unknown = [c for c in self.checks if c not in CHECK_NAMES]
        if unknown:
            raise ValueError(f"unknown checks {unknown}; known: {list(CHECK_NAMES)}")
        if not self.omega > 0 or self.estimator_starts < 1:
            raise ValueError("omega and estimator_starts must be positive")

    def make_grid(self) -> Grid1D:
        return Grid1D(self.grid.L, self.grid.N)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["nonlinearity"] = [dataclasses.asdict(s) for s in self.nonlinearity]
        out["checks"] = list(self.checks)
        return out


def _coerce(value, hint, where: str):
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if dataclasses.is_dataclass(hint):
        return _build(hint, value, where)
    raise ConfigError(f"{where}: unsupported field type {hint}")


def _build(cls, data, where: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}")
    kwargs = {}
    for key, value in data.items():
        path = f"{where}.{key}" if where else key
        if cls is RunConfig and key == "nonlinearity":
            if not isinstance(value, list) or len(value) != 2:
                raise ConfigError(f"{path}: expected a list of two mappings")
            kwargs[key] = tuple(_build(NonlinearitySpec, v, f"{path}[{i}]") for i, v in enumerate(value))
        elif cls is RunConfig and key == "checks":
            if not isinstance(value, list) or not all(isinstance(c, str) for c in value):
                raise ConfigError(f"{path}: expected a list of check names")
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = _coerce(value, hints[key], path)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where or 'config'}: {exc}") from exc


def parse_config(data) -> RunConfig:
    return _build(RunConfig, data, "")


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(data)
