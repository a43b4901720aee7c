"""Config utilities for loading and validating experiment configuration files.

Raw files (YAML or JSON) are loaded with :func:`load_config` and validated
into an :class:`ExperimentConfig`. Keep code config-driven: every sweep,
fit and figure reads its parameters from one of these objects, and the
``config_hash`` of the validated config is stamped on every artifact.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError


logger = logging.getLogger(__name__)

GRID_DECIMALS = 12


def load_config(config_path: str | Path) -> Dict[str, Any]:
    """Load a configuration file from YAML or JSON.

    Args:
        config_path: Path to a YAML or JSON config file.

    Returns:
        Parsed configuration as a dictionary.
    """
    path = Path(config_path)
    if not path.exists():
        raise FileNotFoundError(f"Config not found: {path}")

    logger.info("Loading config from %s", path)
    if path.suffix.lower() in {".yaml", ".yml"}:
        with path.open("r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    elif path.suffix.lower() == ".json":
        with path.open("r", encoding="utf-8") as f:
            data = json.load(f)
    else:
        raise ValueError(f"Unsupported config format: {path.suffix}")
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a mapping", type(data).__name__)
    return data


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridRange(_Section):
    """Inclusive range ``start, start+step, ..., stop``."""

    start: float
    stop: float
    step: float = Field(gt=0)

    @model_validator(mode="after")
    def _check_order(self) -> "GridRange":
        if self.stop < self.start:
            raise ValueError(f"stop ({self.stop}) must not be below start ({self.start})")
        return self

    def values(self) -> List[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        points = self.start + self.step * np.arange(count)
        return [float(v) for v in np.round(points, GRID_DECIMALS)]


GridAxis = Union[List[float], GridRange]


def axis_values(axis: GridAxis) -> List[float]:
    return axis.values() if isinstance(axis, GridRange) else [float(v) for v in axis]


class ModelSection(_Section):
    t1: float = 1.0
    t12: float = math.pi / 2
    tau_u: float = Field(1.0, gt=0)
    filling: Literal["global", "per_chain"] = "global"


class GridSection(_Section):
    L: Union[List[int], GridRange] = [16]
    t2: GridAxis = [1.0]
    p1: GridAxis = [0.2]
    p2: GridAxis = [0.0]

    @field_validator("L")
    @classmethod
    def _check_sizes(cls, value):
        sizes = axis_values(value)
        if not sizes:
            raise ValueError("grid must not be empty")
        bad = [s for s in sizes if s != int(s) or int(s) < 2 or int(s) % 2]
        if bad:
            raise ValueError(f"system sizes must be even integers >= 2, got {bad}")
        return value

    @field_validator("t2")
    @classmethod
    def _check_hopping(cls, value):
        if not axis_values(value):
            raise ValueError("grid must not be empty")
        return value

    @field_validator("p1", "p2")
    @classmethod
    def _check_probabilities(cls, value):
        points = axis_values(value)
        if not points:
            raise ValueError("grid must not be empty")
        bad = [p for p in points if not 0.0 <= p <= 1.0]
        if bad:
            raise ValueError(f"probabilities must lie in [0, 1], got {bad}")
        return value

    def sizes(self) -> List[int]:
        return [int(v) for v in axis_values(self.L)]


class ProtocolSection(_Section):
    n_traj: int = Field(150, ge=1)
    master_seed: int = Field(20240101, ge=0)
    n_st: Optional[int] = Field(None, ge=1)
    m: int = Field(5, ge=1)
    lA: Union[Literal["half"], int] = "half"
    backend: Literal["loky", "threading", "sequential"] = "loky"
    n_jobs: int = 1

    @field_validator("n_jobs")
    @classmethod
    def _check_jobs(cls, value: int) -> int:
        if value == 0 or value < -1:
            raise ValueError(f"n_jobs must be -1 or a positive integer, got {value}")
        return value


class OutputSection(_Section):
    directory: str = "artifacts/run"
    table: str = "results.csv"


def _registered_windows(value: Optional[List[str]]) -> Optional[List[str]]:
    from .analysis.fits import FIT_WINDOWS

    if value is None:
        return value
    unknown = [w for w in value if w not in FIT_WINDOWS]
    if unknown:
        raise ValueError(f"unknown fit windows {unknown}; registered: {sorted(FIT_WINDOWS)}")
    return value


class AnalysisSection(_Section):
    windows: List[str] = ["L8-32", "L16-48", "L24-64"]
    control: Literal["p2", "t2"] = "p2"
    crossing_windows: Optional[List[str]] = None
    collapse_windows: Optional[List[str]] = None
    extrapolation_windows: Optional[List[str]] = None
    collapse_box: Dict[str, List[float]] = {}
    fix_zeta: Optional[float] = None
    n_jobs: int = 1

    @field_validator("windows")
    @classmethod
    def _check_windows(cls, value):
        return _registered_windows(value)

    @field_validator("collapse_windows", "extrapolation_windows")
    @classmethod
    def _check_distinct_sizes(cls, value):
        from .analysis.fits import largest_sizes

        value = _registered_windows(value)
        if value is not None:
            largest_sizes(value)
        return value

    @field_validator("crossing_windows")
    @classmethod
    def _check_pair(cls, value):
        if value is not None and len(value) != 2:
            raise ValueError("crossing_windows must name exactly two windows (small, large)")
        return _registered_windows(value)

    @field_validator("collapse_box")
    @classmethod
    def _check_box(cls, value):
        for name, bounds in value.items():
            if name not in ("p2c", "nu", "zeta"):
                raise ValueError(f"unknown collapse parameter {name}")
            if len(bounds) != 2 or bounds[0] >= bounds[1]:
                raise ValueError(f"{name} bounds must be [low, high], got {bounds}")
        return value

    def crossing_pair(self) -> List[str]:
        return list(self.crossing_windows) if self.crossing_windows else [self.windows[0], self.windows[-1]]

    def collapse_set(self) -> List[str]:
        return list(self.collapse_windows) if self.collapse_windows else list(self.windows)

    def extrapolation_set(self) -> List[str]:
        if self.extrapolation_windows:
            return list(self.extrapolation_windows)
        return self.collapse_set()


class PlotSection(_Section):
    contour_level: float = 2.5
    format: Literal["svg"] = "svg"


class ExperimentConfig(_Section):
    model: ModelSection = ModelSection()
    grid: GridSection = GridSection()
    protocol: ProtocolSection = ProtocolSection()
    output: OutputSection = OutputSection()
    analysis: AnalysisSection = AnalysisSection()
    plot: PlotSection = PlotSection()

    def lA_for(self, L: int) -> int:
        return L // 2 if self.protocol.lA == "half" else int(self.protocol.lA)

    @property
    def output_dir(self) -> Path:
        return Path(self.output.directory)


def _check_bipartition(config: ExperimentConfig) -> None:
    lA = config.protocol.lA
    if isinstance(lA, int):
        offending = [L for L in config.grid.sizes() if not 1 <= lA <= L - 1]
        if offending:
            raise ConfigError("protocol.lA", f"must satisfy 1 <= lA <= L-1 for L in {offending}", lA)


def _dotted_key(loc: Sequence[Any]) -> str:
    # Union members add their type name (list[float], GridRange, int, ...) to the location.
    parts = [
        str(part)
        for part in loc
        if not isinstance(part, int) and str(part).isidentifier() and str(part) not in _UNION_TAGS
    ]
    return ".".join(parts) or "<root>"


_UNION_TAGS = {"GridRange", "int", "float", "str"}


def parse_config(raw: Dict[str, Any]) -> ExperimentConfig:
    """Validate a raw mapping; errors name the offending dotted key."""
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        error = exc.errors()[0]
        key = _dotted_key(error["loc"])
        raise ConfigError(key, error["msg"], error.get("input")) from exc
    _check_bipartition(config)
    return config


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply ``dotted.key=value`` overrides; values are parsed as YAML."""
    result = json.loads(json.dumps(raw))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like dotted.key=value")
        key, text = item.split("=", 1)
        parts = key.strip().split(".")
        node = result
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(key, "cannot descend into a non-mapping value", child)
            node = child
        node[parts[-1]] = yaml.safe_load(text)
    return result


def load_experiment(config_path: str | Path, overrides: Sequence[str] = ()) -> ExperimentConfig:
    return parse_config(apply_overrides(load_config(config_path), overrides))


def config_dict(config: ExperimentConfig) -> Dict[str, Any]:
    return config.model_dump(mode="json")


def config_hash(config: ExperimentConfig) -> str:
    """First 12 hex digits of SHA-256 over the canonical JSON dump."""
    payload = json.dumps(config_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def dump_config(config: ExperimentConfig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        yaml.safe_dump(config_dict(config), f, sort_keys=False)
    return path
