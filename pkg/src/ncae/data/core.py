"""Trajectory containers and the fixed-step integrator shared by the generators."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DimensionError, NcaeError


class DivergenceError(NcaeError, ArithmeticError):
    """Integration produced non-finite states."""


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], x, dt: float):
    """Classical fourth-order Runge-Kutta step of ``xdot = rhs(x)``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise DivergenceError("RK4 step produced non-finite state")
    return out


@dataclass
class Trajectory:
    states: np.ndarray
    derivs: np.ndarray
    context: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.derivs = np.asarray(self.derivs, dtype=np.float64)
        self.context = np.atleast_1d(np.asarray(self.context, dtype=np.float64))
        if self.states.ndim != 2 or self.states.shape != self.derivs.shape:
            raise DimensionError(
                f"states {self.states.shape} and derivs {self.derivs.shape} must be equal 2-D arrays"
            )

    @property
    def n_samples(self) -> int:
        return self.states.shape[0]


@dataclass
class Dataset:
    trajectories: list[Trajectory]
    system: str
    split: str
    regime: str = ""
    seed: int | None = None
    dt: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trajectories:
            n = self.state_dim
            d = self.context_dim
            for i, tr in enumerate(self.trajectories):
                if tr.states.shape[1] != n or tr.context.shape != (d,):
                    raise DimensionError(f"trajectory {i} has inconsistent dimensions")

    def __len__(self) -> int:
        return len(self.trajectories)

    @property
    def state_dim(self) -> int:
        return self.trajectories[0].states.shape[1]

    @property
    def context_dim(self) -> int:
        return self.trajectories[0].context.shape[0]

    def stacked(self):
        """Per-sample ``(states, derivs, contexts)`` arrays over all trajectories."""
        xs = np.concatenate([t.states for t in self.trajectories])
        xd = np.concatenate([t.derivs for t in self.trajectories])
        cs = np.concatenate([np.tile(t.context, (t.n_samples, 1)) for t in self.trajectories])
        return xs, xd, cs

    def subsample(self, every: int) -> "Dataset":
        trs = [Trajectory(t.states[::every].copy(), t.derivs[::every].copy(), t.context, dict(t.meta))
               for t in self.trajectories]
        return Dataset(trs, self.system, self.split, self.regime, self.seed, self.dt * every,
                       {**self.meta, "subsample": every})
