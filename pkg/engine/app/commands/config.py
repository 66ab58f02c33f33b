"""Experiment configuration: TOML file + environment + command-line flags.

Precedence is flags > file > environment (.env) > defaults.
"""
import math
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Literal, Optional

import tomli_w
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError
from ..services.artifacts import content_hash
from ..services.measure import MIN_RESOLUTION
from ..services.solver import MIN_RADIAL_NODES, GridSpec

load_dotenv(Path(__file__).parent.parent.parent / ".env")

UNIT_TOL = 1e-10

COMMANDS = ("solve", "verify", "sweep", "equivalence", "oracle")


class DomainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["half_space", "ball", "slab", "cylinder", "whole_space"] = "half_space"
    a: Optional[list[float]] = None
    b: Optional[float] = None
    c: Optional[list[float]] = None
    r: Optional[float] = None
    dim: Optional[int] = None
    extra_dims: Optional[int] = None
    base: Optional["DomainConfig"] = None

    @model_validator(mode="after")
    def check_geometry(self):
        if self.a is not None:
            norm = math.sqrt(math.fsum(x * x for x in self.a))
            if not self.a or abs(norm - 1.0) > UNIT_TOL:
                raise ValueError(f"domain.a must be a unit vector, |a| = {norm}")
        if self.kind == "slab" and self.b is not None and self.b <= 0:
            raise ValueError(f"slab width b must be positive, got {self.b}")
        if self.r is not None and self.r <= 0:
            raise ValueError(f"ball radius r must be positive, got {self.r}")
        if self.dim is not None and self.dim < 1:
            raise ValueError(f"domain.dim must be at least 1, got {self.dim}")
        if self.extra_dims is not None and self.extra_dims < 1:
            raise ValueError(f"domain.extra_dims must be at least 1, got {self.extra_dims}")
        if self.kind == "cylinder" and self.base is None:
            raise ValueError("a cylinder needs a [domain.base] table")
        return self

    def spec(self) -> dict:
        return self.model_dump(exclude_none=True)


class RhsConfig(BaseModel):
    """Catalogue entry; parameters beyond `name` depend on the entry."""
    model_config = ConfigDict(extra="allow")

    name: str = "constant"

    def spec(self) -> dict:
        return self.model_dump(exclude_none=True)


class GridConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    spacing: float = Field(1.0 / 32.0, gt=0.0, le=0.5)
    truncation: float = Field(8.0, gt=0.0)
    free_spacing: Optional[float] = Field(None, gt=0.0)
    radial_nodes: int = Field(256, ge=MIN_RADIAL_NODES)

    def grid_spec(self, free_spacing: Optional[float] = None) -> GridSpec:
        return GridSpec(spacing=self.spacing, truncation=self.truncation,
                        free_spacing=self.free_spacing or free_spacing)


class QuadratureConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    resolution: int = Field(64, ge=MIN_RESOLUTION)
    boundary_resolution: Optional[int] = Field(None, ge=MIN_RESOLUTION)
    hermite_nodes: int = Field(20, ge=1)
    panel_order: int = Field(4, ge=1)


class OracleConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(0, ge=0)
    dt: float = Field(1e-3, gt=0.0)
    n_paths: int = Field(100_000, ge=2)
    t_max: Optional[float] = Field(None, gt=0.0)
    x0: Optional[list[float]] = None
    antithetic: bool = False
    dt_levels: int = Field(1, ge=1)


class SweepConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dims: list[int] = [1, 2, 3, 4, 5]
    lambdas: list[float] = []
    free_spacing: float = Field(2.0, gt=0.0)

    @field_validator("dims")
    @classmethod
    def dims_in_range(cls, v):
        if not v or any(n < 1 or n > 6 for n in v):
            raise ValueError("sweep dims must be a non-empty list within 1..6")
        return v

    @field_validator("lambdas")
    @classmethod
    def lambdas_positive(cls, v):
        if any(lam <= 0 for lam in v):
            raise ValueError("every sweep lambda must be positive")
        return v


class EquivalenceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    extra_dims: int = Field(1, ge=1, le=3)
    free_spacing: float = Field(0.25, gt=0.0)


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    out_dir: str = "out"
    format: Literal["csv", "json"] = "csv"


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    command: Literal["solve", "verify", "sweep", "equivalence", "oracle"] = "solve"
    lam: float = Field(1.0, alias="lambda", gt=0.0)
    workers: int = Field(1, ge=1)
    ledger: bool = True
    bundle: bool = False
    domain: DomainConfig = Field(default_factory=DomainConfig)
    rhs: RhsConfig = Field(default_factory=RhsConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    oracle: OracleConfig = Field(default_factory=OracleConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    equivalence: EquivalenceConfig = Field(default_factory=EquivalenceConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def environment_defaults() -> dict:
    """OUNEUMANN_* variables from the process or engine/.env."""
    env = {}
    if os.environ.get("OUNEUMANN_SEED"):
        env["oracle"] = {"seed": int(os.environ["OUNEUMANN_SEED"])}
    if os.environ.get("OUNEUMANN_WORKERS"):
        env["workers"] = int(os.environ["OUNEUMANN_WORKERS"])
    if os.environ.get("OUNEUMANN_DATA_DIR"):
        env["output"] = {"out_dir": str(Path(os.environ["OUNEUMANN_DATA_DIR"]) / "out")}
    return env


def validate(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except (ValidationError, ValueError) as e:
        raise ConfigError(str(e))


def parse(text: str) -> ExperimentConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML: {e}")
    return validate(data)


def as_dict(config: ExperimentConfig) -> dict:
    return config.model_dump(by_alias=True, exclude_none=True)


def serialize(config: ExperimentConfig) -> str:
    return tomli_w.dumps(as_dict(config))


def load_config(path: Optional[Path] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Merge defaults, environment, the TOML file and flag overrides, then validate."""
    data = environment_defaults()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, "rb") as f:
                data = _deep_merge(data, tomllib.load(f))
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"invalid TOML in {path}: {e}")
    if overrides:
        data = _deep_merge(data, overrides)
    return validate(data)


# run bookkeeping that cannot change any result
_UNHASHED = {"ledger", "bundle", "workers"}


def config_hash(config: ExperimentConfig) -> str:
    data = as_dict(config)
    for key in _UNHASHED:
        data.pop(key, None)
    data["output"].pop("out_dir", None)
    return content_hash(data)
