"""16-DoF pendulum: four driven joints plus twelve coupled coordinates.

The four joints follow independent frictionless pendulums
``q'' = -(g / l) sin q``.  Coordinates ``q5 .. q16`` are algebraic functions of
``q1 .. q4`` (and, in the context mode, of the link lengths).

Real-valued powers ``q ** (4 l)`` are evaluated as ``|q| ** (4 l)``, which is
exactly ``q ** 2`` at ``l = 0.5``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DomainError
from .core import Dataset, Trajectory, rk4_step

GRAVITY = 9.81
LENGTH_RANGE = (0.35, 0.65)
TEST_LENGTHS = (0.35, 0.45, 0.55, 0.65)
N_TRAIN = 100
TRAIN_ANGLE_RANGE_DEG = (0.0, 30.0)
TEST_ANGLE_DEG = 15.0
COUPLING_MODES = ("standard", "context")


@dataclass(frozen=True)
class PendulumConfig:
    lengths: tuple[float, float, float, float]
    initial_angles: tuple[float, float, float, float]
    coupling: str = "context"
    dt: float = 1e-3
    duration: float = 3.0
    gravity: float = GRAVITY

    def __post_init__(self):
        lo, hi = LENGTH_RANGE
        if len(self.lengths) != 4 or any(not lo <= l <= hi for l in self.lengths):
            raise ConfigError(f"need four link lengths in [{lo}, {hi}], got {self.lengths}")
        if len(self.initial_angles) != 4:
            raise ConfigError("need four initial angles")
        if self.coupling not in COUPLING_MODES:
            raise ConfigError(f"coupling must be one of {COUPLING_MODES}, got {self.coupling!r}")
        n = self.duration / self.dt
        if abs(n - round(n)) > 1e-9 or round(n) < 2:
            raise ConfigError("duration must be an integral multiple of dt")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration / self.dt))


def _split(q):
    q = np.asarray(q, dtype=np.float64)
    return q[..., 0], q[..., 1], q[..., 2], q[..., 3]


def _spow(q, p):
    return np.abs(q) ** p


def _dspow(q, p):
    return p * np.sign(q) * np.abs(q) ** (p - 1.0)


def _finite(out):
    if not np.all(np.isfinite(out)):
        raise DomainError("coupling produced non-finite values")
    return out


def coupling_standard(q):
    """Coordinates ``q5 .. q16`` from the joint angles alone."""
    q1, q2, q3, q4 = _split(q)
    out = np.stack([
        q3 - np.cos(q2),
        q1 + 0.1 * np.sin(q2),
        q4 * np.cos(q2),
        q1 + q3**2,
        1.5 * np.sin(q2),
        -q4 * q1,
        np.sin(q1),
        0.4 * q3 * q4,
        -0.9 * q1 - q2 + q3 - 2.0 * q4**2,
        -3.0 * np.sin(q3),
        -2.0 * q3**2,
        -0.9 * q1**2,
    ], axis=-1)
    return _finite(out)


def coupling_context(q, lengths):
    """Length-dependent coupling; reduces to :func:`coupling_standard` at ``l = 0.5``."""
    q1, q2, q3, q4 = _split(q)
    l1, l2, l3, l4 = _split(lengths)
    L1, L2, L3, L4 = 2 * l1, 2 * l2, 2 * l3, 2 * l4
    out = np.stack([
        q3 - np.cos(L2 * q2),
        q1 + L1 * 0.1 * np.sin(L2 * q2),
        q4 * np.cos(L4 * q2),
        q1 + _spow(q3, 2 * L3),
        L2 * 1.5 * np.sin(q2),
        -(l4 + l1) * q4 * q1,
        np.sin(L1 * q1),
        L3 * 0.4 * q3 * q4,
        -L1 * 0.9 * q1 - q2 + q3 - 2.0 * _spow(q4, 2 * L4),
        -L3 * 3.0 * np.sin(q3),
        -2.0 * _spow(q3, 2 * L3),
        -0.9 * _spow(q1, 2 * L1),
    ], axis=-1)
    return _finite(out)


def coupling(q, lengths, mode: str):
    if mode == "standard":
        return coupling_standard(q)
    if mode == "context":
        return coupling_context(q, lengths)
    raise ConfigError(f"coupling must be one of {COUPLING_MODES}, got {mode!r}")


def coupling_jacobian(q, lengths, mode: str):
    """``d(q5..q16)/d(q1..q4)``, shape ``(..., 12, 4)``."""
    q1, q2, q3, q4 = _split(q)
    zero = np.zeros_like(q1)
    if mode == "standard":
        L1 = L2 = L3 = L4 = np.ones_like(q1)
        l1 = l4 = 0.5 * np.ones_like(q1)
        d8 = d15 = 2.0 * q3
        d13 = 2.0 * q4
        d16 = 2.0 * q1
    elif mode == "context":
        l1, l2, l3, l4 = _split(lengths)
        L1, L2, L3, L4 = 2 * l1, 2 * l2, 2 * l3, 2 * l4
        d8 = d15 = _dspow(q3, 2 * L3)
        d13 = _dspow(q4, 2 * L4)
        d16 = _dspow(q1, 2 * L1)
    else:
        raise ConfigError(f"coupling must be one of {COUPLING_MODES}, got {mode!r}")
    one = np.ones_like(q1)
    rows = [
        [zero, L2 * np.sin(L2 * q2), one, zero],
        [one, L1 * 0.1 * L2 * np.cos(L2 * q2), zero, zero],
        [zero, -L4 * q4 * np.sin(L4 * q2), zero, np.cos(L4 * q2)],
        [one, zero, d8, zero],
        [zero, L2 * 1.5 * np.cos(q2), zero, zero],
        [-(l4 + l1) * q4, zero, zero, -(l4 + l1) * q1],
        [L1 * np.cos(L1 * q1), zero, zero, zero],
        [zero, zero, L3 * 0.4 * q4, L3 * 0.4 * q3],
        [-L1 * 0.9, -one, one, -2.0 * d13],
        [zero, zero, -L3 * 3.0 * np.cos(q3), zero],
        [zero, zero, -2.0 * d15, zero],
        [-0.9 * d16, zero, zero, zero],
    ]
    jac = np.stack([np.stack(np.broadcast_arrays(*r), axis=-1) for r in rows], axis=-2)
    return _finite(jac)


def _simulate_many(lengths, angles, mode, dt, n_samples, gravity):
    lengths = np.asarray(lengths, dtype=np.float64)
    omega2 = gravity / lengths

    def rhs(y):
        q, qd = y[..., :4], y[..., 4:]
        return np.concatenate([qd, -omega2 * np.sin(q)], axis=-1)

    y = np.concatenate([np.asarray(angles, dtype=np.float64), np.zeros_like(lengths)], axis=-1)
    hist = np.empty((n_samples,) + y.shape)
    hist[0] = y
    for t in range(1, n_samples):
        y = rk4_step(rhs, y, dt)
        hist[t] = y
    hist = np.moveaxis(hist, 0, -2)  # (..., T, 8)
    q, qd = hist[..., :4], hist[..., 4:]
    lb = lengths[..., None, :]
    f = coupling(q, lb, mode)
    fdot = np.einsum("...ij,...j->...i", coupling_jacobian(q, lb, mode), qd)
    return np.concatenate([q, f], axis=-1), np.concatenate([qd, fdot], axis=-1)


def simulate_pendulum(config: PendulumConfig) -> Trajectory:
    """Integrate the surrogate joints with RK4 from rest and assemble the 16-D state."""
    states, derivs = _simulate_many(
        np.array([config.lengths]), np.array([config.initial_angles]), config.coupling,
        config.dt, config.n_samples, config.gravity,
    )
    meta = {"lengths": list(config.lengths), "initial_angles": list(config.initial_angles),
            "coupling": config.coupling, "dt": config.dt, "duration": config.duration}
    return Trajectory(states[0], derivs[0], np.array(config.lengths), meta)


def pendulum_configs(split: str, coupling_mode: str, seed: int = 0, n_trajectories: int | None = None):
    if split == "train":
        n = N_TRAIN if n_trajectories is None else n_trajectories
        # per-trajectory streams: a prefix of the split is independent of its size
        lo_deg, hi_deg = TRAIN_ANGLE_RANGE_DEG
        out = []
        for child in np.random.SeedSequence(seed).spawn(n):
            rng = np.random.default_rng(child)
            lengths = rng.uniform(*LENGTH_RANGE, 4)
            angles = np.deg2rad(rng.uniform(lo_deg, hi_deg, 4))
            out.append(PendulumConfig(tuple(lengths), tuple(angles), coupling_mode))
        return out
    if split == "test":
        q0 = (float(np.deg2rad(TEST_ANGLE_DEG)),) * 4
        grid = itertools.product(TEST_LENGTHS, repeat=4)
        cfgs = [PendulumConfig(tuple(l), q0, coupling_mode) for l in grid]
        return cfgs if n_trajectories is None else cfgs[:n_trajectories]
    raise ConfigError(f"split must be 'train' or 'test', got {split!r}")


def build_pendulum_dataset(split: str, coupling_mode: str = "context", seed: int = 0,
                           n_trajectories: int | None = None) -> Dataset:
    """100 random training configurations or the 256-point length grid for testing."""
    cfgs = pendulum_configs(split, coupling_mode, seed, n_trajectories)
    first = cfgs[0]
    states, derivs = _simulate_many(
        np.array([c.lengths for c in cfgs]), np.array([c.initial_angles for c in cfgs]),
        coupling_mode, first.dt, first.n_samples, first.gravity,
    )
    trajs = []
    for i, c in enumerate(cfgs):
        meta = {"lengths": list(c.lengths), "initial_angles": list(c.initial_angles)}
        trajs.append(Trajectory(states[i], derivs[i], np.array(c.lengths), meta))
    return Dataset(trajs, "pendulum", split, coupling_mode, seed, first.dt,
                   {"duration": first.duration, "gravity": first.gravity})
