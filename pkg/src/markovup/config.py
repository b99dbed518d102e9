"""Campaign configuration: JSON in, validated dataclass out."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .errors import ConfigError, MarkovUpError
from .process import DescentLaw, ExampleLaw, ExampleLawParams, TabularLaw, TransitionLaw

LAW_KINDS = ("example", "descent", "tabular")
_LAW_KEYS = {"kind", "params", "floor", "ceiling", "table", "fallback"}
_PARAM_KEYS = {"p_up", "p_stay", "p_down", "floor_up", "floor_stay"}


def _prob(value, where: str) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{where}: {value!r} is not a probability") from exc


def _int(value, where: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where} must be >= {minimum}")
    return value


def build_law(spec: dict, where: str = "law") -> TransitionLaw:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = set(spec) - _LAW_KEYS
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    kind = spec.get("kind", "example")
    if kind not in LAW_KINDS:
        raise ConfigError(f"{where}.kind must be one of {LAW_KINDS}, got {kind!r}")
    floor = _int(spec.get("floor", 0), f"{where}.floor", 0)
    ceiling = spec.get("ceiling")
    if ceiling is not None:
        ceiling = _int(ceiling, f"{where}.ceiling", 0)
    try:
        if kind == "example":
            params = spec.get("params", {})
            if not isinstance(params, dict) or set(params) - _PARAM_KEYS:
                raise ConfigError(f"{where}.params: unknown or malformed keys")
            p = ExampleLawParams(**{k: _prob(v, f"{where}.params.{k}") for k, v in params.items()})
            return ExampleLaw(p, floor=floor, ceiling=ceiling)
        if kind == "descent":
            return DescentLaw(floor=floor, ceiling=ceiling)
        table = {}
        for i, entry in enumerate(spec.get("table", [])):
            if not isinstance(entry, dict) or set(entry) != {"run", "dist"}:
                raise ConfigError(f"{where}.table[{i}] needs exactly 'run' and 'dist'")
            dist = {int(y): _prob(p, f"{where}.table[{i}].dist") for y, p in entry["dist"].items()}
            table[tuple(entry["run"])] = dist
        fallback = spec.get("fallback")
        if fallback is not None:
            fallback = build_law(fallback, f"{where}.fallback")
        return TabularLaw(table, fallback=fallback, floor=floor, ceiling=ceiling)
    except ConfigError:
        raise
    except (MarkovUpError, ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


@dataclass
class CampaignConfig:
    law: dict = field(default_factory=lambda: {"kind": "example"})
    alphas: list = field(default_factory=lambda: [0.05])
    sweep_alphas: list = field(default_factory=lambda: [round(0.01 * i, 2) for i in range(1, 16)])
    x0_list: list = field(default_factory=lambda: [1, 3, 5])
    n_traj: int = 10_000
    horizon: int = 10_000
    seed: int = 0
    m_max: int = 60
    output_dir: str = "out"

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "CampaignConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def validate(self) -> None:
        law = self.build_law()
        for name in ("alphas", "sweep_alphas"):
            vals = getattr(self, name)
            if not isinstance(vals, list) or not all(
                    isinstance(a, (int, float)) and not isinstance(a, bool) and a >= 0 for a in vals):
                raise ConfigError(f"{name} must be a list of nonnegative numbers")
        if not isinstance(self.x0_list, list):
            raise ConfigError("x0_list must be a list")
        for x0 in self.x0_list:
            _int(x0, "x0_list entry", 0)
            if law.ceiling is not None and x0 > law.ceiling:
                raise ConfigError(f"x0={x0} lies above the ceiling {law.ceiling}")
        _int(self.n_traj, "n_traj", 2)
        _int(self.horizon, "horizon", 0)
        _int(self.seed, "seed", 0)
        _int(self.m_max, "m_max", 0)
        if not isinstance(self.output_dir, str):
            raise ConfigError("output_dir must be a string")

    def build_law(self) -> TransitionLaw:
        return build_law(self.law)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; ``output_dir`` is excluded."""
        d = self.to_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()
