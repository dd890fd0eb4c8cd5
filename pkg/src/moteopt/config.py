"""Declarative experiment configuration: a human-readable YAML tree.

The network axes (size, imitation rate, communication period) and the mode
list may hold several values; the experiment runs their cross product and the
first value of each axis names the reference configuration for the rank-sum
comparisons. Validation reports YAML line numbers where available.
"""

from __future__ import annotations

import hashlib
import json
from typing import Literal, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from . import bench

MODES = ("sa", "sa_standalone", "ma", "ma_standalone")


class NetworkSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    size: Union[int, list[int]] = 5
    topology: Literal["random_geometric", "complete", "ring"] = "random_geometric"
    radio_range: float = Field(0.5, gt=0.0)
    comm_period: Union[float, list[float]] = 0.25
    q: Union[float, list[float]] = 0.9

    @field_validator("size")
    @classmethod
    def _size_positive(cls, v):
        for s in v if isinstance(v, list) else [v]:
            if s < 1:
                raise ValueError("network size must be >= 1")
        return v

    @field_validator("comm_period")
    @classmethod
    def _period_positive(cls, v):
        for s in v if isinstance(v, list) else [v]:
            if s <= 0.0:
                raise ValueError("communication period must be positive")
        return v

    @field_validator("q")
    @classmethod
    def _q_range(cls, v):
        for s in v if isinstance(v, list) else [v]:
            if not 0.0 <= s <= 1.0:
                raise ValueError("imitation rate must be within [0, 1]")
        return v

    def sizes(self) -> list[int]:
        return self.size if isinstance(self.size, list) else [self.size]

    def periods(self) -> list[float]:
        return self.comm_period if isinstance(self.comm_period, list) else [self.comm_period]

    def qs(self) -> list[float]:
        return self.q if isinstance(self.q, list) else [self.q]


class ChannelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    loss_prob: float = Field(0.0, ge=0.0, le=1.0)
    collision_window: float = Field(0.0, ge=0.0)
    latency: float = Field(0.001, ge=0.0)


class CostSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    c0: float = Field(0.030, ge=0.0)
    c1: float = Field(0.001, ge=0.0)


class RadioSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    bitrate: float = Field(250_000.0, gt=0.0)
    listen_window: float = Field(0.005, ge=0.0)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    problems: list[str] = Field(default_factory=bench.problem_ids)
    dimensions: list[int] = Field(default_factory=lambda: [5, 15, 25])
    modes: list[Literal["sa", "sa_standalone", "ma", "ma_standalone"]] = Field(
        default_factory=lambda: list(MODES)
    )
    repetitions: int = Field(16, ge=1)
    master_seed: int = 1
    eval_budget: int = Field(1000, ge=1)
    time_budget: float = Field(60.0, gt=0.0)
    network: NetworkSection = Field(default_factory=NetworkSection)
    channel: ChannelSection = Field(default_factory=ChannelSection)
    cost: CostSection = Field(default_factory=CostSection)
    radio: RadioSection = Field(default_factory=RadioSection)
    workers: int = Field(1, ge=1)
    output_dir: str | None = None

    @field_validator("problems")
    @classmethod
    def _known_problems(cls, v):
        if not v:
            raise ValueError("at least one problem id required")
        known = set(bench.problem_ids())
        for fid in v:
            if fid not in known:
                raise ValueError(f"unknown problem id {fid!r}")
        return v

    @field_validator("dimensions")
    @classmethod
    def _dimension_limit(cls, v):
        if not v:
            raise ValueError("at least one dimension required")
        for n in v:
            if n < 1:
                raise ValueError("dimension must be >= 1")
            if n > bench.MAX_DIMENSION:
                raise ValueError(
                    f"dimension {n} exceeds the {bench.MAX_DIMENSION}-variable limit "
                    "imposed by the 128-byte radio payload"
                )
        return v

    @field_validator("modes")
    @classmethod
    def _modes_nonempty(cls, v):
        if not v:
            raise ValueError("at least one mode required")
        return v

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]


def _yaml_line_map(text: str) -> dict[str, int]:
    """Map dotted key paths to 1-based YAML line numbers."""
    lines: dict[str, int] = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key_node, value_node in node.value:
                sub = f"{path}.{key_node.value}" if path else str(key_node.value)
                lines[sub] = key_node.start_mark.line + 1
                walk(value_node, sub)
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                sub = f"{path}.{i}"
                lines[sub] = item.start_mark.line + 1
                walk(item, sub)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    if root is not None:
        walk(root, "")
    return lines


def set_by_path(data: dict, dotted: str, value) -> None:
    """Apply an override like ``network.q=0.5`` onto the parsed config tree."""
    parts = dotted.split(".")
    cur = data
    for part in parts[:-1]:
        nxt = cur.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            cur[part] = nxt
        cur = nxt
    cur[parts[-1]] = value


def parse_overrides(pairs: list[str]) -> dict[str, object]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ValueError(f"override {pair!r} must look like key.path=value")
        key, raw = pair.split("=", 1)
        out[key.strip()] = yaml.safe_load(raw)
    return out


def load_config(text: str, overrides: dict[str, object] | None = None,
                source: str = "config"):
    """Parse + validate a YAML config. Returns (ExperimentConfig | None, errors)."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        return None, [f"{source}: invalid YAML: {exc}"]
    if data is None:
        data = {}
    if not isinstance(data, dict):
        return None, [f"{source}: top level must be a mapping"]
    for key, value in (overrides or {}).items():
        set_by_path(data, key, value)
    line_map = _yaml_line_map(text)
    try:
        cfg = ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        errors = []
        for err in exc.errors():
            path = ".".join(str(p) for p in err["loc"])
            line = line_map.get(path)
            where = f"{source} line {line}" if line else source
            errors.append(f"{where}: {path}: {err['msg']}")
        return None, errors
    return cfg, []
