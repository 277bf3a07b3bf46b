"""Constrained autoencoder stacks: cAE, Context-cAE and NcAE.

Layer pair ``l`` (0-based here) maps ``R^{n_{l+1}} -> R^{n_l}`` when encoding::

    rho_l(x) = sigma_minus(psi_l.T (x - b_l); alpha_l)
    phi_l(z) = phi_l sigma_plus(z; alpha_l) + b_l

so ``rho_l(phi_l(z)) = z`` whenever ``psi_l.T phi_l = I``.  The projection
``P = decode o encode`` is then idempotent.

Inputs may be single vectors or ``(batch, dim)`` arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .activations import (
    ALPHA_MAX, ALPHA_MIN, STATIC_ALPHA, check_alpha_bounds, sigma_minus, sigma_plus, sigma_terms,
    sigmoid,
)
from .errors import DimensionError
from .manifold import BiorthogonalPair, init_biorthogonal
from .neuromod import NeuromodNet, init_neuromod, modulation_signal_with_cache


class Variant(str, Enum):
    CAE = "cAE"
    CONTEXT_CAE = "Context-cAE"
    NCAE = "NcAE"


@dataclass(frozen=True)
class ArchitectureSpec:
    variant: Variant
    state_dim: int
    latent_dim: int
    layer_widths: tuple[int, ...]
    context_dim: int = 0
    static_alpha: float = STATIC_ALPHA
    mlp_topology: tuple[int, ...] = ()
    alpha_min: float = ALPHA_MIN
    alpha_max: float = ALPHA_MAX

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "layer_widths", tuple(int(n) for n in self.layer_widths))
        object.__setattr__(self, "mlp_topology", tuple(int(n) for n in self.mlp_topology))
        widths = self.widths
        if len(widths) < 2:
            raise DimensionError("need at least one layer pair")
        if any(a > b for a, b in zip(widths[:-1], widths[1:])) or widths[0] < 1:
            raise DimensionError(f"widths must be non-decreasing from the latent size, got {widths}")
        expected = self.state_dim + (self.context_dim if self.variant is Variant.CONTEXT_CAE else 0)
        if widths[-1] != expected:
            raise DimensionError(
                f"{self.variant.value}: last layer width {widths[-1]} must equal {expected}"
            )
        if self.variant is Variant.CAE and self.context_dim != 0:
            raise DimensionError("cAE does not consume context; context_dim must be 0")
        if self.variant is not Variant.CAE and self.context_dim < 1:
            raise DimensionError(f"{self.variant.value} needs context_dim >= 1")
        if self.variant is Variant.NCAE:
            topo = self.mlp_topology
            if len(topo) < 2 or topo[0] != self.context_dim:
                raise DimensionError(
                    f"MLP topology {topo} must start with the context dimension {self.context_dim}"
                )
            check_alpha_bounds(self.alpha_min, self.alpha_max)
        elif not 0.0 < self.static_alpha < np.pi / 4:
            raise DimensionError(f"static alpha {self.static_alpha} outside (0, pi/4)")

    @property
    def widths(self) -> tuple[int, ...]:
        """``(n_0, n_1, ..., n_L)`` with ``n_0`` the latent size."""
        return (self.latent_dim, *self.layer_widths)

    @property
    def input_dim(self) -> int:
        return self.layer_widths[-1]

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "state_dim": self.state_dim,
            "latent_dim": self.latent_dim,
            "layer_widths": list(self.layer_widths),
            "context_dim": self.context_dim,
            "static_alpha": self.static_alpha,
            "mlp_topology": list(self.mlp_topology),
            "alpha_min": self.alpha_min,
            "alpha_max": self.alpha_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArchitectureSpec":
        return cls(**d)


@dataclass
class ModelParams:
    spec: ArchitectureSpec
    pairs: list[BiorthogonalPair]
    base_biases: list[np.ndarray]
    neuromod: NeuromodNet | None = None

    def __post_init__(self):
        w = self.spec.widths
        if len(self.pairs) != self.spec.n_layers or len(self.base_biases) != self.spec.n_layers:
            raise DimensionError("parameter lists do not match the number of layer pairs")
        for l, (pair, bias) in enumerate(zip(self.pairs, self.base_biases)):
            if pair.shape != (w[l + 1], w[l]) or bias.shape != (w[l + 1],):
                raise DimensionError(
                    f"layer {l}: expected pair {(w[l + 1], w[l])} and bias {(w[l + 1],)}, "
                    f"got {pair.shape} and {bias.shape}"
                )
        if (self.neuromod is not None) != (self.spec.variant is Variant.NCAE):
            raise DimensionError("neuromodulation weights are present iff the variant is NcAE")
        if self.neuromod is not None:
            nm = self.neuromod
            if nm.topology != self.spec.mlp_topology or nm.n_layers != self.spec.n_layers:
                raise DimensionError("neuromodulation shapes do not match the architecture")
            for l in range(nm.n_layers):
                if nm.w_alpha[l].shape[1] != w[l] or nm.w_bias[l].shape[1] != w[l + 1]:
                    raise DimensionError(f"layer {l}: modulation matrix widths do not match")

    def tensors(self) -> dict[str, np.ndarray]:
        """Ordered name -> array view of every trainable tensor."""
        out = {}
        for l, pair in enumerate(self.pairs):
            out[f"pairs.{l}.phi"] = pair.phi
            out[f"pairs.{l}.psi"] = pair.psi
        for l, b in enumerate(self.base_biases):
            out[f"biases.{l}"] = b
        nm = self.neuromod
        if nm is not None:
            for i, (w, b) in enumerate(zip(nm.mlp_weights, nm.mlp_biases)):
                out[f"nmd.mlp.{i}.weight"] = w
                out[f"nmd.mlp.{i}.bias"] = b
            for l, w in enumerate(nm.w_alpha):
                out[f"nmd.w_alpha.{l}"] = w
            for l, w in enumerate(nm.w_bias):
                out[f"nmd.w_bias.{l}"] = w
        return out

    def with_tensors(self, arrays: dict[str, np.ndarray]) -> "ModelParams":
        """New parameter set with the named tensors replaced (others kept)."""
        cur = self.tensors()
        unknown = set(arrays) - set(cur)
        if unknown:
            raise KeyError(f"unknown tensor names: {sorted(unknown)}")
        for name, arr in arrays.items():
            if np.shape(arr) != cur[name].shape:
                raise DimensionError(f"{name}: expected shape {cur[name].shape}, got {np.shape(arr)}")
        t = {**cur, **{k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}}
        L = self.spec.n_layers
        pairs = [BiorthogonalPair(t[f"pairs.{l}.phi"], t[f"pairs.{l}.psi"]) for l in range(L)]
        biases = [t[f"biases.{l}"] for l in range(L)]
        nm = self.neuromod
        if nm is not None:
            n_mlp = len(nm.mlp_weights)
            nm = NeuromodNet(
                [t[f"nmd.mlp.{i}.weight"] for i in range(n_mlp)],
                [t[f"nmd.mlp.{i}.bias"] for i in range(n_mlp)],
                [t[f"nmd.w_alpha.{l}"] for l in range(L)],
                [t[f"nmd.w_bias.{l}"] for l in range(L)],
                nm.alpha_min, nm.alpha_max,
            )
        return ModelParams(self.spec, pairs, biases, nm)

    def copy(self) -> "ModelParams":
        return self.with_tensors({k: v.copy() for k, v in self.tensors().items()})


def init_model(spec: ArchitectureSpec, rng: np.random.Generator) -> ModelParams:
    w = spec.widths
    pairs = [init_biorthogonal(w[l + 1], w[l], rng) for l in range(spec.n_layers)]
    biases = [np.zeros(w[l + 1]) for l in range(spec.n_layers)]
    nm = None
    if spec.variant is Variant.NCAE:
        nm = init_neuromod(spec.mlp_topology, w, rng, alpha_min=spec.alpha_min, alpha_max=spec.alpha_max)
    return ModelParams(spec, pairs, biases, nm)


class Modulation(NamedTuple):
    """Per-layer ``alpha`` and bias, plus what the backward pass needs for NcAE."""

    alphas: list
    biases: list
    signal: np.ndarray | None = None
    mlp_cache: tuple | None = None
    raw_alphas: list | None = None


def modulation(params: ModelParams, c) -> Modulation:
    spec = params.spec
    if spec.variant is not Variant.NCAE:
        return Modulation([spec.static_alpha] * spec.n_layers, list(params.base_biases))
    if c is None:
        raise DimensionError("NcAE requires a context vector")
    nm = params.neuromod
    s, cache = modulation_signal_with_cache(nm, c)
    raws = [s @ wa for wa in nm.w_alpha]
    alphas = [(nm.alpha_max - nm.alpha_min) * sigmoid(r) + nm.alpha_min for r in raws]
    biases = [s @ wb + b for wb, b in zip(nm.w_bias, params.base_biases)]
    return Modulation(alphas, biases, s, cache, raws)


@dataclass
class EncoderCache:
    centred: np.ndarray  # x - b
    tangent_in: np.ndarray
    tangent_pre: np.ndarray  # psi.T v
    terms: object


@dataclass
class DecoderCache:
    z_in: np.ndarray
    w_in: np.ndarray
    activated: np.ndarray  # sigma_plus(z)
    tangent_act: np.ndarray  # sigma_plus'(z) * w
    terms: object


@dataclass
class ForwardTrace:
    z: np.ndarray
    z_dot: np.ndarray
    output: np.ndarray
    output_dot: np.ndarray
    enc: list[EncoderCache] = field(default_factory=list)
    dec: list[DecoderCache] = field(default_factory=list)


def _encode_core(params, mods, X, V=None, keep=False):
    h, t = X, V
    caches = [None] * params.spec.n_layers
    for l in reversed(range(params.spec.n_layers)):
        pair = params.pairs[l]
        r = h - mods.biases[l]
        u = r @ pair.psi
        if V is None:
            h = sigma_minus(u, mods.alphas[l])
            continue
        st = sigma_terms(u, mods.alphas[l], "minus")
        du = t @ pair.psi
        if keep:
            caches[l] = EncoderCache(r, t, du, st)
        h, t = st.value, st.d1 * du
    return h, t, caches


def _decode_core(params, mods, Z, W=None, keep=False):
    g, w = Z, W
    caches = []
    for l in range(params.spec.n_layers):
        pair = params.pairs[l]
        if W is None:
            g = sigma_plus(g, mods.alphas[l]) @ pair.phi.T + mods.biases[l]
            continue
        st = sigma_terms(g, mods.alphas[l], "plus")
        q = st.d1 * w
        if keep:
            caches.append(DecoderCache(g, w, st.value, q, st))
        g, w = st.value @ pair.phi.T + mods.biases[l], q @ pair.phi.T
    return g, w, caches


def forward_trace(params: ModelParams, X, V, mods: Modulation) -> ForwardTrace:
    """Primal and tangent pass over a 2-D batch of model inputs, keeping intermediates."""
    z, zt, enc = _encode_core(params, mods, X, V, keep=True)
    y, yt, dec = _decode_core(params, mods, z, zt, keep=True)
    return ForwardTrace(z, zt, y, yt, enc, dec)


def model_input(spec: ArchitectureSpec, x, c=None, v=None):
    """Assemble 2-D model inputs (and tangents) from states and contexts.

    Returns ``(X, V, C, squeeze)`` where ``C`` is the context fed to modulation.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    X = np.atleast_2d(x)
    V = None if v is None else np.atleast_2d(np.asarray(v, dtype=np.float64))
    if V is not None and V.shape != X.shape:
        raise DimensionError(f"tangent shape {V.shape} does not match input shape {X.shape}")
    C = None if c is None else np.asarray(c, dtype=np.float64)
    if C is not None and C.shape[-1] != max(spec.context_dim, 1) and spec.variant is not Variant.CAE:
        raise DimensionError(f"context has dimension {C.shape[-1]}, expected {spec.context_dim}")
    if C is not None and C.ndim == 2 and C.shape[0] != X.shape[0]:
        raise DimensionError(f"got {C.shape[0]} contexts for {X.shape[0]} samples")

    if spec.variant is Variant.CONTEXT_CAE:
        if X.shape[1] == spec.input_dim:
            if C is not None:
                raise DimensionError("input already contains the context block; do not pass c as well")
        elif X.shape[1] == spec.state_dim:
            if C is None:
                raise DimensionError("Context-cAE requires a context vector")
            X = np.concatenate([X, np.broadcast_to(np.atleast_2d(C), (X.shape[0], spec.context_dim))], axis=1)
            if V is not None:
                V = np.concatenate([V, np.zeros((V.shape[0], spec.context_dim))], axis=1)
        else:
            raise DimensionError(
                f"input has dimension {X.shape[1]}, expected {spec.state_dim} or {spec.input_dim}"
            )
        C = None
    elif X.shape[1] != spec.input_dim:
        raise DimensionError(f"input has dimension {X.shape[1]}, expected {spec.input_dim}")
    if spec.variant is Variant.NCAE and C is None:
        raise DimensionError("NcAE requires a context vector")
    if spec.variant is Variant.CAE:
        C = None
    return X, V, C, squeeze


def _out(a, squeeze):
    return a[0] if squeeze else a


def encode(params: ModelParams, x, c=None):
    X, _, C, sq = model_input(params.spec, x, c)
    z, _, _ = _encode_core(params, modulation(params, C), X)
    return _out(z, sq)


def decode(params: ModelParams, z, c=None):
    spec = params.spec
    z = np.asarray(z, dtype=np.float64)
    sq = z.ndim == 1
    Z = np.atleast_2d(z)
    if Z.shape[1] != spec.latent_dim:
        raise DimensionError(f"latent has dimension {Z.shape[1]}, expected {spec.latent_dim}")
    C = c if spec.variant is Variant.NCAE else None
    if spec.variant is Variant.NCAE and c is None:
        raise DimensionError("NcAE requires a context vector")
    y, _, _ = _decode_core(params, modulation(params, C), Z)
    return _out(y, sq)


def project(params: ModelParams, x, c=None):
    X, _, C, sq = model_input(params.spec, x, c)
    mods = modulation(params, C)
    z, _, _ = _encode_core(params, mods, X)
    y, _, _ = _decode_core(params, mods, z)
    return _out(y, sq)


def project_jvp(params: ModelParams, x, v, c=None):
    """Exact forward-mode directional derivative ``dP(x) v``."""
    X, V, C, sq = model_input(params.spec, x, c, v)
    mods = modulation(params, C)
    z, zt, _ = _encode_core(params, mods, X, V)
    _, yt, _ = _decode_core(params, mods, z, zt)
    return _out(yt, sq)


def encode_jvp(params: ModelParams, x, v, c=None):
    """Latent velocity ``d rho(x) v``."""
    X, V, C, sq = model_input(params.spec, x, c, v)
    _, zt, _ = _encode_core(params, modulation(params, C), X, V)
    return _out(zt, sq)


def encode_with_velocity(params: ModelParams, x, v, c=None):
    X, V, C, sq = model_input(params.spec, x, c, v)
    z, zt, _ = _encode_core(params, modulation(params, C), X, V)
    return _out(z, sq), _out(zt, sq)


def decode_jvp(params: ModelParams, z, w, c=None):
    """Tangent of the decoder ``d phi(z) w``."""
    spec = params.spec
    z = np.asarray(z, dtype=np.float64)
    sq = z.ndim == 1
    Z, W = np.atleast_2d(z), np.atleast_2d(np.asarray(w, dtype=np.float64))
    if Z.shape[1] != spec.latent_dim or W.shape != Z.shape:
        raise DimensionError("latent point and tangent must both have the latent dimension")
    if spec.variant is Variant.NCAE and c is None:
        raise DimensionError("NcAE requires a context vector")
    C = c if spec.variant is Variant.NCAE else None
    _, yt, _ = _decode_core(params, modulation(params, C), Z, W)
    return _out(yt, sq)


def static_equivalent(params: ModelParams, alpha: float = STATIC_ALPHA) -> ModelParams:
    """The cAE sharing these pairs and base biases (drops neuromodulation)."""
    spec = replace(params.spec, variant=Variant.CAE, context_dim=0, mlp_topology=(), static_alpha=alpha)
    return ModelParams(spec, list(params.pairs), list(params.base_biases), None)
