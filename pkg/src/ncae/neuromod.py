"""Context-driven modulation of activation parameters and biases.

A small SiLU MLP maps the context ``c`` to a shared signal ``s``.  For each
layer pair, ``s`` is mapped linearly to raw activation parameters (squashed
into the admissible alpha range) and to a bias offset added to the base bias.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activations import ALPHA_MAX, ALPHA_MIN, alpha_from_raw, sigmoid
from .errors import DimensionError

INIT_STD = 0.01


def silu(x):
    x = np.asarray(x, dtype=np.float64)
    return x * sigmoid(x)


def silu_grad(x):
    sg = sigmoid(x)
    return sg * (1.0 + x * (1.0 - sg))


@dataclass
class NeuromodNet:
    """MLP ``theta`` plus per-layer modulation matrices.

    ``mlp_weights[i]`` has shape ``(in_i, out_i)`` and is applied as ``h @ W + b``.
    ``w_alpha[l]`` is ``(d_s, n_{l-1})`` and ``w_bias[l]`` is ``(d_s, n_l)``.
    """

    mlp_weights: list[np.ndarray]
    mlp_biases: list[np.ndarray]
    w_alpha: list[np.ndarray]
    w_bias: list[np.ndarray]
    alpha_min: float = ALPHA_MIN
    alpha_max: float = ALPHA_MAX
    topology: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if len(self.mlp_weights) != len(self.mlp_biases) or not self.mlp_weights:
            raise DimensionError("MLP needs matching, non-empty weight and bias lists")
        topo = [self.mlp_weights[0].shape[0]]
        for w, b in zip(self.mlp_weights, self.mlp_biases):
            if w.shape[0] != topo[-1] or b.shape != (w.shape[1],):
                raise DimensionError(f"inconsistent MLP layer shapes {w.shape}, {b.shape}")
            topo.append(w.shape[1])
        self.topology = tuple(topo)
        if len(self.w_alpha) != len(self.w_bias):
            raise DimensionError("w_alpha and w_bias must list the same number of layers")
        for wa, wb in zip(self.w_alpha, self.w_bias):
            if wa.shape[0] != self.signal_dim or wb.shape[0] != self.signal_dim:
                raise DimensionError(
                    f"modulation matrices must have {self.signal_dim} rows, got {wa.shape}, {wb.shape}"
                )

    @property
    def context_dim(self) -> int:
        return self.topology[0]

    @property
    def signal_dim(self) -> int:
        return self.topology[-1]

    @property
    def n_layers(self) -> int:
        return len(self.w_alpha)


def init_neuromod(
    topology, widths, rng: np.random.Generator, std: float = INIT_STD,
    alpha_min: float = ALPHA_MIN, alpha_max: float = ALPHA_MAX,
) -> NeuromodNet:
    """``widths`` is the full list ``[n_0, n_1, ..., n_L]`` of the primary network."""
    topology = list(topology)
    if len(topology) < 2:
        raise DimensionError("MLP topology needs at least input and output widths")
    mlp_w = [std * rng.standard_normal((i, o)) for i, o in zip(topology[:-1], topology[1:])]
    # MLP biases start at zero like the base biases
    mlp_b = [np.zeros(o) for o in topology[1:]]
    d_s = topology[-1]
    w_alpha = [std * rng.standard_normal((d_s, n_in)) for n_in in widths[:-1]]
    w_bias = [std * rng.standard_normal((d_s, n_out)) for n_out in widths[1:]]
    return NeuromodNet(mlp_w, mlp_b, w_alpha, w_bias, alpha_min, alpha_max)


def _mlp(net: NeuromodNet, c):
    c = np.asarray(c, dtype=np.float64)
    if c.shape[-1] != net.context_dim:
        raise DimensionError(f"context has dimension {c.shape[-1]}, expected {net.context_dim}")
    pre = []
    h = c
    acts = [h]
    last = len(net.mlp_weights) - 1
    for i, (w, b) in enumerate(zip(net.mlp_weights, net.mlp_biases)):
        z = h @ w + b
        pre.append(z)
        # linear output layer
        h = z if i == last else silu(z)
        acts.append(h)
    return h, (acts, pre)


def modulation_signal(net: NeuromodNet, c):
    """Shared signal ``s = f(c; theta)``; accepts a single context or a batch."""
    return _mlp(net, c)[0]


def modulation_signal_with_cache(net: NeuromodNet, c):
    return _mlp(net, c)


def mlp_backward(net: NeuromodNet, cache, s_bar):
    """Gradients of a scalar w.r.t. MLP weights and biases given ``d/ds`` (batched)."""
    acts, pre = cache
    g_w = [None] * len(net.mlp_weights)
    g_b = [None] * len(net.mlp_weights)
    h_bar = s_bar
    last = len(net.mlp_weights) - 1
    for i in range(last, -1, -1):
        z_bar = h_bar if i == last else h_bar * silu_grad(pre[i])
        inp = acts[i]
        g_w[i] = np.atleast_2d(inp).T @ np.atleast_2d(z_bar)
        g_b[i] = np.atleast_2d(z_bar).sum(axis=0)
        h_bar = z_bar @ net.mlp_weights[i].T
    return g_w, g_b


def raw_alpha(net: NeuromodNet, s, layer: int):
    return s @ net.w_alpha[layer]


def layer_parameters(net: NeuromodNet, s, layer: int, base_bias):
    """Modulated ``(alpha, bias)`` for the 0-based layer-pair index ``layer``."""
    if not 0 <= layer < net.n_layers:
        raise IndexError(f"layer index {layer} out of range for {net.n_layers} layer pairs")
    s = np.asarray(s, dtype=np.float64)
    if s.shape[-1] != net.signal_dim:
        raise DimensionError(f"signal has dimension {s.shape[-1]}, expected {net.signal_dim}")
    base_bias = np.asarray(base_bias, dtype=np.float64)
    if base_bias.shape != (net.w_bias[layer].shape[1],):
        raise DimensionError(
            f"base bias shape {base_bias.shape} does not match layer width {net.w_bias[layer].shape[1]}"
        )
    alpha = alpha_from_raw(raw_alpha(net, s, layer), net.alpha_min, net.alpha_max)
    bias = s @ net.w_bias[layer] + base_bias
    return alpha, bias
