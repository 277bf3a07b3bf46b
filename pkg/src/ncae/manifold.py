"""Biorthogonal weight pairs and the Riemannian pieces needed to optimise them.

A pair ``(phi, psi)`` of ``rows x cols`` matrices lives on the manifold
``psi.T @ phi = I``.  The encoder uses ``psi.T``, the decoder ``phi``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_sylvester

from .errors import DimensionError, SingularityError

MAX_RETRACTION_COND = 1e12


@dataclass(frozen=True)
class BiorthogonalPair:
    phi: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        if self.phi.shape != self.psi.shape or self.phi.ndim != 2:
            raise DimensionError(
                f"phi and psi must be equal-shaped matrices, got {self.phi.shape} and {self.psi.shape}"
            )
        rows, cols = self.phi.shape
        if rows < cols:
            raise DimensionError(f"biorthogonal pair needs rows >= cols, got {rows}x{cols}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.phi.shape


def init_biorthogonal(rows: int, cols: int, rng: np.random.Generator) -> BiorthogonalPair:
    """Orthonormalised Gaussian start with ``phi = psi``."""
    if cols < 1 or rows < cols:
        raise DimensionError(f"need rows >= cols >= 1, got rows={rows}, cols={cols}")
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    # sign fix makes the factorisation unique
    q = q * np.sign(np.diag(r))
    return BiorthogonalPair(q, q.copy())


def biorthogonality_defect(point: BiorthogonalPair) -> float:
    """Max-abs deviation of ``psi.T @ phi`` from the identity."""
    gram = point.psi.T @ point.phi
    return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


def _normal_multiplier(point: BiorthogonalPair, g_phi, g_psi):
    phi, psi = point.phi, point.psi
    rhs = psi.T @ g_phi + g_psi.T @ phi
    lam = solve_sylvester(psi.T @ psi, phi.T @ phi, rhs)
    if not np.all(np.isfinite(lam)):
        raise SingularityError("tangent projection: Sylvester solve produced non-finite multiplier")
    resid = psi.T @ psi @ lam + lam @ (phi.T @ phi) - rhs
    scale = max(1.0, float(np.max(np.abs(rhs))))
    if np.max(np.abs(resid)) > 1e-8 * scale:
        raise SingularityError("tangent projection: Sylvester system is ill-conditioned")
    return lam


def tangent_project(point: BiorthogonalPair, grad_phi, grad_psi):
    """Euclidean-orthogonal projection of an ambient direction onto the tangent space.

    The tangent space is ``{(t_phi, t_psi) : t_psi.T phi + psi.T t_phi = 0}``; its
    orthogonal complement is ``{(psi L, phi L.T)}``.
    """
    grad_phi = np.asarray(grad_phi, dtype=np.float64)
    grad_psi = np.asarray(grad_psi, dtype=np.float64)
    if grad_phi.shape != point.shape or grad_psi.shape != point.shape:
        raise DimensionError(
            f"gradient shapes {grad_phi.shape}, {grad_psi.shape} do not match point {point.shape}"
        )
    lam = _normal_multiplier(point, grad_phi, grad_psi)
    return grad_phi - point.psi @ lam, grad_psi - point.phi @ lam.T


def retract(point: BiorthogonalPair, step_phi, step_psi, method: str = "project") -> BiorthogonalPair:
    """Map ``point + step`` back onto the manifold, keeping psi and correcting phi.

    ``"project"`` moves phi to the nearest matrix satisfying the constraint,
    ``phi + psi (psi^T psi)^-1 (I - psi^T phi)``; the correction is bounded by the
    conditioning of psi alone.  ``"inverse"`` right-multiplies phi by
    ``(psi^T phi)^-1``, which can amplify phi when that product nears singularity.
    """
    if not np.any(step_phi) and not np.any(step_psi):
        return point
    phi_t = point.phi + step_phi
    psi_t = point.psi + step_psi
    if method == "project":
        gram = psi_t.T @ psi_t
        label = "psi~.T psi~"
    elif method == "inverse":
        gram = psi_t.T @ phi_t
        label = "psi~.T phi~"
    else:
        raise ValueError(f"unknown retraction {method!r}")
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > MAX_RETRACTION_COND:
        raise SingularityError(f"retraction: {label} has condition number {cond:.3g}")
    if method == "inverse":
        return BiorthogonalPair(np.linalg.solve(gram.T, phi_t.T).T, psi_t)
    resid = np.eye(gram.shape[0]) - psi_t.T @ phi_t
    return BiorthogonalPair(phi_t + psi_t @ np.linalg.solve(gram, resid), psi_t)
