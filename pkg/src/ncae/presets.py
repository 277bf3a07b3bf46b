"""Architectures and optimisation settings used for the two experiment families."""
from __future__ import annotations

from .network import ArchitectureSpec, Variant
from .training import TrainConfig

SYSTEMS = ("lorenz96", "pendulum")

_STATE_DIM = {"lorenz96": 36, "pendulum": 16}
_CONTEXT_DIM = {"lorenz96": 1, "pendulum": 4}
_LATENT_DIM = {"lorenz96": 2, "pendulum": 4}

# Context-cAE gets one extra input slot per context entry on its last layer
_WIDTHS = {
    ("lorenz96", Variant.CAE): (21, 36),
    ("lorenz96", Variant.CONTEXT_CAE): (20, 37),
    ("lorenz96", Variant.NCAE): (18, 36),
    ("pendulum", Variant.CAE): (8, 16, 16, 16),
    ("pendulum", Variant.CONTEXT_CAE): (8, 16, 16, 20),
    ("pendulum", Variant.NCAE): (8, 12, 14, 16),
}
_MLP = {"lorenz96": (1, 2, 2, 2), "pendulum": (4, 4, 4)}

_TRAIN = {
    "lorenz96": dict(epochs=5000, batch_size=512, main_lr=5e-2, main_weight_decay=1e-4,
                     nmd_lr=5e-3, nmd_weight_decay=1e-3),
    "pendulum": dict(epochs=5000, batch_size=4096, main_lr=5e-2, main_weight_decay=1e-5,
                     nmd_lr=5e-3, nmd_weight_decay=1e-3),
}


def _check_system(system: str):
    if system not in SYSTEMS:
        raise ValueError(f"unknown system {system!r}; choose from {SYSTEMS}")


def architecture(system: str, variant, **overrides) -> ArchitectureSpec:
    _check_system(system)
    variant = Variant(variant)
    kw = dict(
        variant=variant,
        state_dim=_STATE_DIM[system],
        latent_dim=_LATENT_DIM[system],
        layer_widths=_WIDTHS[system, variant],
        context_dim=0 if variant is Variant.CAE else _CONTEXT_DIM[system],
        mlp_topology=_MLP[system] if variant is Variant.NCAE else (),
    )
    kw.update(overrides)
    return ArchitectureSpec(**kw)


def train_config(system: str, **overrides) -> TrainConfig:
    _check_system(system)
    return TrainConfig(**{**_TRAIN[system], **overrides})
