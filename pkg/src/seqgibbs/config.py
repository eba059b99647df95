"""Experiment configuration loaded from JSON."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .potentials import Potential, potential_from_spec
from .shift import FactorMap


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    potential: dict
    experiment: str | None = None
    factor: dict | None = None
    measure: str = "equilibrium"
    K: float | str | None = None
    P: float | str = "solve"
    truncate: int | None = None
    N: int = 30
    ns: list[int] | None = None
    k_max: int = 10
    L: int = 16
    depths: list[int] = field(default_factory=lambda: [6, 8])
    psi2_k: int = 10
    n_z: int = 100
    words: list[list[int]] | None = None
    seed: int = 0
    seeds: list[int] | None = None
    n_paths: int = 1000
    path_length: int = 1000
    tol: float = 1e-12
    max_iter: int = 100_000
    synthetic: dict | None = None
    return_symbol: int | None = None

    def __post_init__(self):
        if self.measure not in ("conformal", "equilibrium"):
            raise ConfigError(f"measure must be conformal or equilibrium, got {self.measure!r}")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        for name in ("N", "k_max", "L", "n_paths", "path_length", "max_iter", "psi2_k"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if isinstance(self.K, str) and self.K != "solve":
            raise ConfigError("K must be a number or 'solve'")
        if isinstance(self.K, (int, float)) and self.K < 1:
            raise ConfigError("K must be >= 1")
        if isinstance(self.P, str) and self.P != "solve":
            raise ConfigError("P must be a number or 'solve'")
        try:
            self.build_potential()
            self.build_factor()
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "potential" not in data:
            raise ConfigError("config needs a 'potential' entry")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config root must be an object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def build_potential(self) -> Potential:
        return potential_from_spec(self.potential)

    def build_factor(self) -> FactorMap | None:
        if self.factor is None:
            return None
        f = self.factor
        return FactorMap(int(f["q1"]), int(f["q2"]), tuple(f["table"]))

    def seed_list(self) -> list[int]:
        return list(self.seeds) if self.seeds else [self.seed]
