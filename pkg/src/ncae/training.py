"""Derivative-matching loss, exact gradients, Riemannian Adam and the epoch loop.

The loss over a batch of ``N`` samples is::

    L = 1/N sum_i |x_i - P(x_i)|^2 + |xdot_i - dP(x_i) xdot_i|^2

Gradients are obtained by running the tangent (forward-mode) pass alongside
the primal pass and then accumulating adjoints backwards through both, using
the analytic activation partials.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError, DimensionError, SingularityError, TrainingError
from .manifold import BiorthogonalPair, retract, tangent_project
from .network import ModelParams, Variant, forward_trace, model_input, modulation
from .neuromod import mlp_backward

log = logging.getLogger(__name__)

HISTORY_COLUMNS = ("epoch", "total", "recon", "deriv", "lr_main", "lr_nmd")
MAX_STEP_HALVINGS = 5


@dataclass(frozen=True)
class SchedulerConfig:
    patience: int = 200
    factor: float = 0.9


@dataclass(frozen=True)
class AdamConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5000
    batch_size: int = 512
    main_lr: float = 5e-2
    main_weight_decay: float = 1e-4
    nmd_lr: float = 5e-3
    nmd_weight_decay: float = 1e-3
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    seed: int = 0
    adam: AdamConfig = field(default_factory=AdamConfig)
    deterministic: bool = True

    def __post_init__(self):
        if isinstance(self.scheduler, dict):
            object.__setattr__(self, "scheduler", SchedulerConfig(**self.scheduler))
        if isinstance(self.adam, dict):
            object.__setattr__(self, "adam", AdamConfig(**self.adam))
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if min(self.main_lr, self.nmd_lr) <= 0:
            raise ConfigError("learning rates must be positive")
        if min(self.main_weight_decay, self.nmd_weight_decay) < 0:
            raise ConfigError("weight decay must be non-negative")
        if not 0.0 < self.scheduler.factor < 1.0 or self.scheduler.patience < 1:
            raise ConfigError("scheduler needs factor in (0, 1) and patience >= 1")
        a = self.adam
        if not (0 <= a.beta1 < 1 and 0 <= a.beta2 < 1 and a.epsilon > 0):
            raise ConfigError("Adam needs betas in [0, 1) and epsilon > 0")

    def to_dict(self) -> dict:
        return asdict(self)


class LossBreakdown(NamedTuple):
    total: float
    recon: float
    deriv: float
    batch_size: int


def _as_batch(params: ModelParams, xs, xdots, cs):
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    xdots = np.atleast_2d(np.asarray(xdots, dtype=np.float64))
    if xs.shape[0] == 0:
        raise DimensionError("empty batch")
    if xs.shape != xdots.shape or xs.shape[1] != params.spec.state_dim:
        raise DimensionError(
            f"batch states {xs.shape} / derivatives {xdots.shape} do not match state_dim "
            f"{params.spec.state_dim}"
        )
    if params.spec.variant is Variant.CAE:
        cs = None
    elif cs is None:
        raise DimensionError(f"{params.spec.variant.value} needs contexts")
    else:
        cs = np.asarray(cs, dtype=np.float64)
        cs = np.broadcast_to(np.atleast_2d(cs), (xs.shape[0], cs.shape[-1]))
    return xs, xdots, cs


def _evaluate(params: ModelParams, xs, xdots, cs, want_grad: bool):
    spec = params.spec
    xs, xdots, cs = _as_batch(params, xs, xdots, cs)
    X, V, C, _ = model_input(spec, xs, cs, xdots)
    mods = modulation(params, C)
    tr = forward_trace(params, X, V, mods)
    n, N = spec.state_dim, X.shape[0]
    R = xs - tr.output[:, :n]
    D = xdots - tr.output_dot[:, :n]
    recon = float(np.sum(R * R)) / N
    deriv = float(np.sum(D * D)) / N
    loss = LossBreakdown(recon + deriv, recon, deriv, N)
    if not want_grad:
        return loss, None

    L = spec.n_layers
    grads: dict[str, np.ndarray] = {}
    bias_bar = [None] * L
    alpha_bar = [None] * L

    g_bar = np.zeros_like(tr.output)
    w_bar = np.zeros_like(tr.output_dot)
    g_bar[:, :n] = -2.0 * R / N
    w_bar[:, :n] = -2.0 * D / N

    for l in reversed(range(L)):
        dc = tr.dec[l]
        phi = params.pairs[l].phi
        st = dc.terms
        bias_bar[l] = g_bar
        grads[f"pairs.{l}.phi"] = g_bar.T @ dc.activated + w_bar.T @ dc.tangent_act
        p_bar = g_bar @ phi
        q_bar = w_bar @ phi
        qw = q_bar * dc.w_in
        alpha_bar[l] = p_bar * st.dalpha + qw * st.d1_alpha
        g_bar = p_bar * st.d1 + qw * st.d2
        w_bar = q_bar * st.d1

    h_bar, t_bar = g_bar, w_bar
    for l in range(L):
        ec = tr.enc[l]
        psi = params.pairs[l].psi
        st = ec.terms
        td = t_bar * ec.tangent_pre
        u_bar = h_bar * st.d1 + td * st.d2
        du_bar = t_bar * st.d1
        alpha_bar[l] = alpha_bar[l] + h_bar * st.dalpha + td * st.d1_alpha
        grads[f"pairs.{l}.psi"] = ec.centred.T @ u_bar + ec.tangent_in.T @ du_bar
        r_bar = u_bar @ psi.T
        bias_bar[l] = bias_bar[l] - r_bar
        h_bar = r_bar
        t_bar = du_bar @ psi.T

    for l in range(L):
        grads[f"biases.{l}"] = bias_bar[l].sum(axis=0)

    nm = params.neuromod
    if nm is not None:
        s = mods.signal
        s_bar = np.zeros_like(s)
        width = nm.alpha_max - nm.alpha_min
        for l in range(L):
            sg = np.exp(-np.logaddexp(0.0, -mods.raw_alphas[l]))
            raw_bar = alpha_bar[l] * (width * sg * (1.0 - sg))
            grads[f"nmd.w_alpha.{l}"] = s.T @ raw_bar
            grads[f"nmd.w_bias.{l}"] = s.T @ bias_bar[l]
            s_bar += raw_bar @ nm.w_alpha[l].T + bias_bar[l] @ nm.w_bias[l].T
        g_w, g_b = mlp_backward(nm, mods.mlp_cache, s_bar)
        for i, (gw, gb) in enumerate(zip(g_w, g_b)):
            grads[f"nmd.mlp.{i}.weight"] = gw
            grads[f"nmd.mlp.{i}.bias"] = gb

    order = list(params.tensors())
    return loss, {k: grads[k] for k in order}


def loss_ae(params: ModelParams, xs, xdots, cs=None) -> LossBreakdown:
    """Batch loss; ``cs`` holds one context per sample (or a single shared one)."""
    return _evaluate(params, xs, xdots, cs, want_grad=False)[0]


def loss_and_gradients(params: ModelParams, xs, xdots, cs=None):
    return _evaluate(params, xs, xdots, cs, want_grad=True)


def param_gradients(params: ModelParams, xs, xdots, cs=None) -> dict[str, np.ndarray]:
    """Euclidean gradient of :func:`loss_ae` for every named tensor."""
    return _evaluate(params, xs, xdots, cs, want_grad=True)[1]


@dataclass
class OptimState:
    lr_main: float
    lr_nmd: float
    step: int = 0
    exp_avg: dict = field(default_factory=dict)
    exp_avg_sq: dict = field(default_factory=dict)
    best_loss: float = float("inf")
    bad_epochs: int = 0
    n_reductions: int = 0

    @classmethod
    def initial(cls, config: TrainConfig) -> "OptimState":
        return cls(lr_main=config.main_lr, lr_nmd=config.nmd_lr)


def _group(name: str, state: OptimState, config: TrainConfig):
    if name.startswith("nmd."):
        return state.lr_nmd, config.nmd_weight_decay
    return state.lr_main, config.main_weight_decay


def _adam_direction(name, grad, state: OptimState, adam: AdamConfig):
    m = state.exp_avg.get(name)
    v = state.exp_avg_sq.get(name)
    if m is None:
        m, v = np.zeros_like(grad), np.zeros_like(grad)
    m = adam.beta1 * m + (1.0 - adam.beta1) * grad
    v = adam.beta2 * v + (1.0 - adam.beta2) * grad * grad
    state.exp_avg[name], state.exp_avg_sq[name] = m, v
    m_hat = m / (1.0 - adam.beta1**state.step)
    v_hat = v / (1.0 - adam.beta2**state.step)
    return m_hat / (np.sqrt(v_hat) + adam.epsilon)


def riemannian_adam_step(params: ModelParams, grads, state: OptimState, config: TrainConfig):
    """One Adam update; Euclidean tensors directly, biorthogonal pairs via projection + retraction.

    Moments of the pairs are kept in ambient coordinates (identity transport).
    Returns ``(new_params, state)``; ``state`` is updated in place.
    """
    state.step += 1
    adam = config.adam
    new = {}
    for l, pair in enumerate(params.pairs):
        n_phi, n_psi = f"pairs.{l}.phi", f"pairs.{l}.psi"
        lr, wd = _group(n_phi, state, config)
        t_phi, t_psi = tangent_project(pair, grads[n_phi], grads[n_psi])
        d_phi = _adam_direction(n_phi, t_phi, state, adam)
        d_psi = _adam_direction(n_psi, t_psi, state, adam)
        # elementwise rescaling leaves the tangent space; project back so the
        # retraction only absorbs second-order (and weight-decay) drift
        d_phi, d_psi = tangent_project(pair, d_phi, d_psi)
        step_phi = -lr * (wd * pair.phi + d_phi)
        step_psi = -lr * (wd * pair.psi + d_psi)
        new_pair = _retract_with_backoff(pair, step_phi, step_psi, l)
        new[n_phi], new[n_psi] = new_pair.phi, new_pair.psi

    for name, p in params.tensors().items():
        if name.startswith("pairs."):
            continue
        lr, wd = _group(name, state, config)
        d = _adam_direction(name, grads[name], state, adam)
        new[name] = p - lr * (wd * p + d)
    return params.with_tensors(new), state


def _retract_with_backoff(pair: BiorthogonalPair, step_phi, step_psi, layer: int):
    scale = 1.0
    for _ in range(MAX_STEP_HALVINGS + 1):
        try:
            return retract(pair, scale * step_phi, scale * step_psi)
        except SingularityError:
            scale *= 0.5
            log.warning("layer %d: retraction singular, halving step to %g", layer, scale)
    raise TrainingError(f"layer {layer}: retraction failed after {MAX_STEP_HALVINGS} step halvings")


def scheduler_step(state: OptimState, epoch_loss: float, config: TrainConfig) -> OptimState:
    """Reduce-on-plateau: scale both group rates once ``patience`` epochs pass without strict improvement."""
    if epoch_loss < state.best_loss:
        state.best_loss = epoch_loss
        state.bad_epochs = 0
        return state
    state.bad_epochs += 1
    if state.bad_epochs >= config.scheduler.patience:
        state.lr_main *= config.scheduler.factor
        state.lr_nmd *= config.scheduler.factor
        state.bad_epochs = 0
        state.n_reductions += 1
    return state


class HistoryRow(NamedTuple):
    epoch: int
    total: float
    recon: float
    deriv: float
    lr_main: float
    lr_nmd: float


def _stack(dataset):
    if hasattr(dataset, "stacked"):
        return dataset.stacked()
    xs, xdots, cs = dataset
    return np.asarray(xs, float), np.asarray(xdots, float), None if cs is None else np.asarray(cs, float)


def train(
    params: ModelParams,
    dataset,
    config: TrainConfig,
    callback: Callable[[int, ModelParams], None] | None = None,
    state: OptimState | None = None,
):
    """Shuffled mini-batch training; returns ``(params, history, state)``.

    ``dataset`` is a :class:`ncae.data.Dataset` or a ``(states, derivs, contexts)``
    tuple of per-sample arrays.  ``callback(step, params)`` runs after every
    optimizer step.
    """
    xs, xdots, cs = _stack(dataset)
    N = xs.shape[0]
    if N == 0:
        raise DimensionError("training set is empty")
    # shuffling stream kept apart from the initialisation stream of the same seed
    rng = np.random.default_rng([config.seed, 1])
    state = state or OptimState.initial(config)
    history: list[HistoryRow] = []
    for epoch in range(1, config.epochs + 1):
        lr_main, lr_nmd = state.lr_main, state.lr_nmd
        perm = rng.permutation(N)
        sums = np.zeros(3)
        for start in range(0, N, config.batch_size):
            idx = perm[start:start + config.batch_size]
            loss, grads = loss_and_gradients(
                params, xs[idx], xdots[idx], None if cs is None else cs[idx]
            )
            if not np.isfinite(loss.total):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, step {state.step + 1}: "
                    f"recon={loss.recon}, deriv={loss.deriv}"
                )
            params, state = riemannian_adam_step(params, grads, state, config)
            sums += len(idx) * np.array([loss.total, loss.recon, loss.deriv])
            if callback is not None:
                callback(state.step, params)
        total, recon, deriv = sums / N
        history.append(HistoryRow(epoch, total, recon, deriv, lr_main, lr_nmd))
        scheduler_step(state, total, config)
        if epoch % 100 == 0:
            log.info("epoch %d loss %.6g (recon %.4g, deriv %.4g)", epoch, total, recon, deriv)
    return params, history, state


def write_history_csv(history, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(HISTORY_COLUMNS)
        for row in history:
            w.writerow([row.epoch] + [format(v, ".17g") for v in row[1:]])
