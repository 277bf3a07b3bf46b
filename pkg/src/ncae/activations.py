"""Mutually inverse hyperbolic activation pair and its derivatives.

The pair is parameterised by an angle ``alpha`` in ``(0, pi/4)``.  ``sigma_plus``
has asymptotic slopes ``tan(pi/4 + alpha)`` and ``tan(pi/4 - alpha)``;
``sigma_minus`` is its inverse and satisfies ``sigma_minus(x) = -sigma_plus(-x)``.
Both pass through the origin.

All functions broadcast ``x`` against ``alpha`` elementwise.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DomainError

ALPHA_MIN = 1e-5
ALPHA_MAX = np.pi / 8
STATIC_ALPHA = np.pi / 8

_SQRT2 = np.sqrt(2.0)


class SigmaTerms(NamedTuple):
    value: np.ndarray
    d1: np.ndarray  # d sigma / dx
    d2: np.ndarray  # d^2 sigma / dx^2
    dalpha: np.ndarray  # d sigma / d alpha
    d1_alpha: np.ndarray  # d^2 sigma / dx d alpha


def _check(x, alpha):
    x = np.asarray(x, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("activation input contains non-finite values")
    if np.any(~(alpha > 0.0)) or np.any(~(alpha < np.pi / 4)):
        raise DomainError("activation parameter alpha must lie in (0, pi/4)")
    return x, alpha


def _plus(x, alpha, order):
    """Evaluate sigma_plus and, for ``order > 0``, all partials used by training."""
    s = np.sin(alpha)
    c = np.cos(alpha)
    inv_s2 = 1.0 / (s * s)
    inv_c2 = 1.0 / (c * c)
    a = inv_s2 - inv_c2
    b = inv_s2 + inv_c2
    k = 2.0 / (s * c)
    u = k * x - _SQRT2 / c
    root = np.hypot(u, np.sqrt(2.0 * a))
    lead = b * x - _SQRT2 / s

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # lead < 0: rationalise, using root^2 - lead^2 = a x (2 sqrt2 / s - a x)
        conj = x * ((2.0 * _SQRT2 / s - a * x) / (root - lead))
        value = np.where(lead >= 0.0, (lead + root) / a, conj)
    if order == 0:
        return value

    ratio = u / root
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # u < 0: 1 + u/root = 2a / (root (root - u)) avoids cancellation
        d1_neg = ((1.0 / s - 1.0 / c) ** 2 + k * 2.0 * a / (root * (root - u))) / a
        d1 = np.where(u >= 0.0, (b + k * ratio) / a, d1_neg)
    d2 = 2.0 * k * k / root**3

    a_al = -2.0 * c / s**3 - 2.0 * s / c**3
    b_al = -2.0 * c / s**3 + 2.0 * s / c**3
    k_al = -2.0 * (c * c - s * s) * inv_s2 * inv_c2
    u_al = k_al * x - _SQRT2 * s * inv_c2
    root_al = (u * u_al + a_al) / root
    num_al = b_al * x + _SQRT2 * c * inv_s2 + root_al
    dalpha = (num_al - a_al * value) / a

    ratio_al = (u_al * root - u * root_al) / (root * root)
    d1_alpha = (b_al + k_al * ratio + k * ratio_al - a_al * d1) / a
    return SigmaTerms(value, d1, d2, dalpha, d1_alpha)


def sigma_plus(x, alpha):
    """Decoder-side activation; strictly increasing, convex."""
    x, alpha = _check(x, alpha)
    return _plus(x, alpha, 0)


def sigma_minus(x, alpha):
    """Encoder-side activation, the inverse of :func:`sigma_plus`."""
    x, alpha = _check(x, alpha)
    return -_plus(-x, alpha, 0)


def sigma_terms(x, alpha, branch: str) -> SigmaTerms:
    """Value together with first/second x-partials and the alpha partials.

    ``branch`` is ``"plus"`` or ``"minus"``.
    """
    x, alpha = _check(x, alpha)
    if branch == "plus":
        return _plus(x, alpha, 1)
    if branch == "minus":
        t = _plus(-x, alpha, 1)
        return SigmaTerms(-t.value, t.d1, -t.d2, -t.dalpha, t.d1_alpha)
    raise ValueError(f"branch must be 'plus' or 'minus', got {branch!r}")


def sigma_derivatives(x, alpha, branch: str):
    """Return ``(d sigma/dx, d^2 sigma/dx^2, d sigma/d alpha)``."""
    t = sigma_terms(x, alpha, branch)
    return t.d1, t.d2, t.dalpha


def check_alpha_bounds(alpha_min: float, alpha_max: float) -> None:
    if not (0.0 < alpha_min < alpha_max < np.pi / 4):
        raise ConfigError(
            f"alpha bounds must satisfy 0 < alpha_min < alpha_max < pi/4, "
            f"got [{alpha_min}, {alpha_max}]"
        )


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def alpha_from_raw(raw, alpha_min: float = ALPHA_MIN, alpha_max: float = ALPHA_MAX):
    """Squash unconstrained values into ``(alpha_min, alpha_max)`` with a scaled sigmoid."""
    check_alpha_bounds(alpha_min, alpha_max)
    return (alpha_max - alpha_min) * sigmoid(raw) + alpha_min
