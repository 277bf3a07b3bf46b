"""Run configuration files.

A run config is a JSON object::

    {
      "system": "lorenz96" | "pendulum",
      "variant": "cAE" | "Context-cAE" | "NcAE",
      "architecture": {"latent_dim", "layer_widths", "static_alpha",
                       "mlp_topology", "alpha_min", "alpha_max"},
      "training": {"epochs", "batch_size", "main_lr", "main_weight_decay",
                   "nmd_lr", "nmd_weight_decay", "seed", "deterministic",
                   "scheduler": {"patience", "factor"},
                   "adam": {"beta1", "beta2", "epsilon"}}
    }

Only ``system`` and ``variant`` are required; anything omitted falls back to the
preset for that system.  Unknown keys are rejected.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .. import presets
from ..errors import ConfigError
from ..network import ArchitectureSpec
from ..training import TrainConfig


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)


class SchedulerSection(_Strict):
    patience: Optional[int] = Field(None, ge=1)
    factor: Optional[float] = Field(None, gt=0.0, lt=1.0)


class AdamSection(_Strict):
    beta1: Optional[float] = Field(None, ge=0.0, lt=1.0)
    beta2: Optional[float] = Field(None, ge=0.0, lt=1.0)
    epsilon: Optional[float] = Field(None, gt=0.0)


class ArchitectureSection(_Strict):
    latent_dim: Optional[int] = Field(None, ge=1)
    layer_widths: Optional[list[int]] = None
    static_alpha: Optional[float] = None
    mlp_topology: Optional[list[int]] = None
    alpha_min: Optional[float] = None
    alpha_max: Optional[float] = None


class TrainingSection(_Strict):
    epochs: Optional[int] = Field(None, ge=0)
    batch_size: Optional[int] = Field(None, ge=1)
    main_lr: Optional[float] = Field(None, gt=0.0)
    main_weight_decay: Optional[float] = Field(None, ge=0.0)
    nmd_lr: Optional[float] = Field(None, gt=0.0)
    nmd_weight_decay: Optional[float] = Field(None, ge=0.0)
    seed: Optional[int] = None
    deterministic: Optional[bool] = None
    scheduler: SchedulerSection = SchedulerSection()
    adam: AdamSection = AdamSection()


class RunConfig(_Strict):
    system: Literal["lorenz96", "pendulum"]
    variant: Literal["cAE", "Context-cAE", "NcAE"]
    architecture: ArchitectureSection = ArchitectureSection()
    training: TrainingSection = TrainingSection()

    def architecture_spec(self) -> ArchitectureSpec:
        over = self.architecture.model_dump(exclude_none=True)
        for k in ("layer_widths", "mlp_topology"):
            if k in over:
                over[k] = tuple(over[k])
        try:
            return presets.architecture(self.system, self.variant, **over)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"architecture: {exc}") from exc

    def train_config(self, **overrides) -> TrainConfig:
        """Preset training settings, overlaid with the file, overlaid with ``overrides``."""
        t = self.training
        kw = t.model_dump(exclude_none=True, exclude={"scheduler", "adam"})
        kw.update({k: v for k, v in overrides.items() if v is not None})
        try:
            base = presets.train_config(self.system).to_dict()
            kw["scheduler"] = {**base["scheduler"], **t.scheduler.model_dump(exclude_none=True)}
            kw["adam"] = {**base["adam"], **t.adam.model_dump(exclude_none=True)}
            return presets.train_config(self.system, **kw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"training: {exc}") from exc


def _format_errors(exc: ValidationError, source: str) -> str:
    lines = [f"invalid config {source}:"]
    for e in exc.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"  {loc}: {e['msg']}")
    return "\n".join(lines)


def parse_config(data, source: str = "<dict>") -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc, source)) from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return parse_config(data, str(path))
