"""Experiment configuration: a JSON document that mirrors every CLI flag."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .auditors import AUDITORS
from .ground_truth import canonical_pair
from .mechanisms import AdjacentPair, Family, MechanismSpec, canonical_pattern, generate_inputs

# spec fields that are not the free parameter vector
STRUCTURAL = ("sensitivity", "thresholds", "abort_count", "filter_size", "hash_count", "hash_seed",
              "clip_norm", "model_dim", "batch_size", "task_seed")

# CLI flag name -> auditor keyword
AUDITOR_FLAGS = {"c": "c", "tau": "tau", "delta_c": "delta_c", "rho": "rho"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    family: str
    grid: list[list[float]]
    auditor: str = "dpsniper"
    auditor_config: dict = field(default_factory=dict)
    structure: dict = field(default_factory=dict)
    pattern: str | None = None
    dimension: int = 1
    seeds: list[int] = field(default_factory=lambda: [0])
    samples: int | None = None
    eps_c: float | None = None
    delta_c: float = 0.0
    both_orientations: bool = True
    output: str = "results"
    cache_dir: str | None = None

    def __post_init__(self):
        self.grid = [[float(v) for v in (p if isinstance(p, (list, tuple)) else [p])] for p in self.grid]
        self.seeds = [int(s) for s in self.seeds]
        self.validate()

    def validate(self) -> None:
        try:
            self.family = Family.parse(self.family).value
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self.auditor not in AUDITORS:
            raise ConfigError(f"unknown auditor {self.auditor!r}; expected one of {', '.join(AUDITORS)}")
        if not self.seeds:
            raise ConfigError("seeds must be listed explicitly")
        unknown = set(self.structure) - set(STRUCTURAL)
        if unknown:
            raise ConfigError(f"unknown structural fields: {sorted(unknown)}")
        if self.pattern is not None:
            self.pattern = canonical_pattern(self.pattern)
        if self.samples is not None and self.samples < 2:
            raise ConfigError("samples must be at least 2")
        for p in self.grid:
            self.spec(p).validate()

    # -- derived objects --------------------------------------------------
    def spec(self, params) -> MechanismSpec:
        s = dict(self.structure)
        if "thresholds" in s:
            s["thresholds"] = tuple(s["thresholds"])
        return MechanismSpec(Family.parse(self.family), tuple(params), **s)

    def specs(self) -> list[MechanismSpec]:
        return [self.spec(p) for p in self.grid]

    def pair(self, spec: MechanismSpec) -> AdjacentPair:
        if self.pattern is None:
            return canonical_pair(spec)
        return generate_inputs(self.pattern, spec.input_dim if spec.input_dim > 1 else self.dimension,
                               spec.sensitivity)

    def audit_kwargs(self) -> dict:
        kw = dict(self.auditor_config)
        if self.auditor in ("deltasiege", "dpsgd"):
            kw.setdefault("delta_c", self.delta_c)
        if self.samples is not None:
            if self.auditor == "dpsniper":
                kw["n_train"] = kw["n_est"] = self.samples // 2
            else:
                kw["n"] = self.samples
        return kw

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def digest(self) -> str:
        """Hash of everything that affects results (output locations excluded)."""
        d = self.to_dict()
        d.pop("output")
        d.pop("cache_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        extra = set(d) - names
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: {e}") from None
        return cls.from_dict(d)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    def point_config(self, params, seed: int) -> "ExperimentConfig":
        """Single-point config that re-runs exactly one row."""
        d = self.to_dict()
        d["grid"] = [list(params)]
        d["seeds"] = [int(seed)]
        return ExperimentConfig.from_dict(d)
