"""Per-trajectory reconstruction metrics and latent/error exports."""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ..data import Dataset, Trajectory
from ..errors import DimensionError
from ..network import ModelParams, Variant, encode_with_velocity, model_input, modulation
from ..network import _decode_core, _encode_core

METRICS = ("state_rmse", "deriv_rmse")
AGGREGATES = ("min", "q1", "median", "q3", "max")


def _fmt(v) -> str:
    return format(float(v), ".17g")


def _check(params: ModelParams, ds: Dataset):
    spec = params.spec
    if ds.state_dim != spec.state_dim:
        raise DimensionError(f"dataset state_dim {ds.state_dim} does not match model {spec.state_dim}")
    if spec.variant is not Variant.CAE and ds.context_dim != spec.context_dim:
        raise DimensionError(
            f"dataset context_dim {ds.context_dim} does not match model {spec.context_dim}"
        )


def reconstruct(params: ModelParams, tr: Trajectory, context=None):
    """``P(x)`` and ``dP(x) xdot`` restricted to the state block, for one trajectory."""
    c = tr.context if context is None else np.atleast_1d(np.asarray(context, dtype=np.float64))
    X, V, C, _ = model_input(params.spec, tr.states, c, tr.derivs)
    mods = modulation(params, C)
    z, zt, _ = _encode_core(params, mods, X, V)
    y, yt, _ = _decode_core(params, mods, z, zt)
    n = params.spec.state_dim
    return y[:, :n], yt[:, :n]


def trajectory_rmse(params: ModelParams, tr: Trajectory):
    y, yt = reconstruct(params, tr)
    return (float(np.sqrt(np.mean((tr.states - y) ** 2))),
            float(np.sqrt(np.mean((tr.derivs - yt) ** 2))))


def order_stats(values) -> dict:
    """Min, quartiles (linear interpolation between order statistics), median, max."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    return {"min": float(v[0]), "q1": float(np.quantile(v, 0.25)), "median": float(np.quantile(v, 0.5)),
            "q3": float(np.quantile(v, 0.75)), "max": float(v[-1])}


class EvalRow(NamedTuple):
    trajectory: int
    context: tuple
    state_rmse: float
    deriv_rmse: float


@dataclass
class EvalReport:
    rows: list[EvalRow]
    aggregates: dict  # metric -> {min, q1, median, q3, max}

    def median(self, metric: str) -> float:
        return self.aggregates[metric]["median"]

    def write_csv(self, path, summary_path=None):
        ctx_dim = len(self.rows[0].context) if self.rows else 0
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["trajectory", *[f"context_{i}" for i in range(ctx_dim)], *METRICS])
            for r in self.rows:
                w.writerow([r.trajectory, *map(_fmt, r.context), _fmt(r.state_rmse), _fmt(r.deriv_rmse)])
        if summary_path is not None:
            with open(summary_path, "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["metric", *AGGREGATES])
                for m in METRICS:
                    w.writerow([m, *(_fmt(self.aggregates[m][a]) for a in AGGREGATES)])


def _map(fn, items, threads: int):
    # results come back in input order, so report assembly does not depend on scheduling
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def evaluate(params: ModelParams, ds: Dataset, threads: int = 1) -> EvalReport:
    _check(params, ds)
    metrics = _map(lambda tr: trajectory_rmse(params, tr), ds.trajectories, threads)
    rows = [EvalRow(i, tuple(float(c) for c in tr.context), s, d)
            for i, (tr, (s, d)) in enumerate(zip(ds.trajectories, metrics))]
    aggs = {m: order_stats([getattr(r, m) for r in rows]) for m in METRICS}
    return EvalReport(rows, aggs)


def latent_rows(params: ModelParams, ds: Dataset, trajectories=None, overrides=None):
    """Yield ``(trajectory, t, z, zdot, context_used)`` per time sample.

    With ``overrides``, every selected trajectory is re-encoded under each given context.
    """
    _check(params, ds)
    idx = range(len(ds)) if trajectories is None else trajectories
    for i in idx:
        tr = ds.trajectories[i]
        ctxs = [tr.context] if not overrides else [np.atleast_1d(np.asarray(o, float)) for o in overrides]
        for c in ctxs:
            if c.shape != tr.context.shape:
                raise DimensionError(f"override context has {c.size} values, expected {tr.context.size}")
            z, zd = encode_with_velocity(params, tr.states, tr.derivs, c)
            t = ds.dt * np.arange(tr.n_samples)
            yield i, t, z, zd, c


def write_latent_csv(path, params: ModelParams, ds: Dataset, trajectories=None, overrides=None):
    d = params.spec.latent_dim
    ctx_dim = ds.context_dim
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["trajectory", "t", *[f"z_{k + 1}" for k in range(d)],
                    *[f"zdot_{k + 1}" for k in range(d)], *[f"context_{k}" for k in range(ctx_dim)]])
        for i, t, z, zd, c in latent_rows(params, ds, trajectories, overrides):
            cs = [_fmt(v) for v in c]
            for k in range(len(t)):
                w.writerow([i, _fmt(t[k]), *map(_fmt, z[k]), *map(_fmt, zd[k]), *cs])


def hovmoller_grids(params: ModelParams, ds: Dataset, index: int):
    """``(|x - P(x)|, x)`` as ``T x N`` grids for one Lorenz96 trajectory."""
    if ds.system != "lorenz96":
        raise DimensionError(f"Hovmoller export needs a lorenz96 dataset, got {ds.system!r}")
    _check(params, ds)
    tr = ds.trajectories[index]
    y, _ = reconstruct(params, tr)
    return np.abs(tr.states - y), tr.states.copy()


def write_grid_csv(path, grid, dt: float):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", *[f"x_{k + 1}" for k in range(grid.shape[1])]])
        for t, row in enumerate(grid):
            w.writerow([_fmt(t * dt), *map(_fmt, row)])
