"""Flat ``key = value`` run configuration with typed validation.

Lines starting with ``#`` are comments. Values are overridden by environment
variables named ``FAITHREL_<KEY>`` (upper case), which are in turn overridden
by explicit command-line flags.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

from faithrel.calibrate import CalibrationConfig, DEFAULT_EPS, T_BOUNDS
from faithrel.counterfactual import DEFAULT_BOUNDS, DEFAULT_STEP
from faithrel.model import TrainConfig
from faithrel.synth import GenConfig

ENV_PREFIX = "FAITHREL_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # corpus
    n_train: int = 6000
    n_dev: int = 1200
    n_test: int = 1200
    trigger_bias_strength: float = 0.5
    label_skew: float = 0.3
    vague_fraction: float = 1.0 / 6.0
    anti_bias_test: bool = False
    dev_trigger_bias: float | None = None
    seed: int = 0
    # training
    lambda1: float = 1.0
    lambda2: float = 1.0
    learning_rate: float = TrainConfig.learning_rate
    epochs: int = TrainConfig.epochs
    batch_size: int = TrainConfig.batch_size
    alpha0_sharp: float = TrainConfig.alpha0_sharp
    eps_smooth: float = TrainConfig.eps_smooth
    momentum: float = 0.0
    # debiasing
    beta_lo: float = DEFAULT_BOUNDS[0]
    beta_hi: float = DEFAULT_BOUNDS[1]
    beta_step: float = DEFAULT_STEP
    metric: str = "macro-f1"
    pre_abstention: bool = False
    # calibration
    eps: float = DEFAULT_EPS
    t_lo: float = T_BOUNDS[0]
    t_hi: float = T_BOUNDS[1]
    ece_bins: int = 10

    def gen_config(self) -> GenConfig:
        return GenConfig(**{k: getattr(self, k) for k in GenConfig.field_names()})

    def train_config(self) -> TrainConfig:
        names = {f.name for f in fields(TrainConfig)}
        return TrainConfig(**{k: getattr(self, k) for k in names if hasattr(self, k)})

    def validate(self) -> "RunConfig":
        try:
            self.gen_config()
            self.train_config().validate(3)
            CalibrationConfig(eps=self.eps, ece_bins=self.ece_bins)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.metric not in ("macro-f1", "micro-f1"):
            raise ConfigError(f"unknown metric {self.metric!r}")
        if not (self.beta_lo <= self.beta_hi and self.beta_step > 0):
            raise ConfigError("invalid beta search grid")
        if not 0 < self.t_lo < self.t_hi:
            raise ConfigError("invalid temperature bounds")
        return self


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str) -> Any:
    kind = _TYPES[key]
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "float | None":
            return None if raw.lower() in ("", "none") else float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind}") from None


def parse_text(text: str, source: str = "<config>") -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load(path: str | Path | None = None, env: Mapping[str, str] | None = None,
         overrides: Mapping[str, Any] | None = None) -> RunConfig:
    values: dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_text(text, str(path)))
    env = os.environ if env is None else env
    for key in _TYPES:
        name = ENV_PREFIX + key.upper()
        if name in env:
            values[key] = _coerce(key, env[name])
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**values).validate()


def dump(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name} = {'none' if v is None else str(v).lower() if isinstance(v, bool) else v}")
    return "\n".join(lines) + "\n"
