"""Proximal operators for the transformed tubal nuclear norm and the l1 norm."""

from __future__ import annotations

import numpy as np

from .tproduct import REAL_TOL, from_slices, preserves_real, to_slices
from .transforms import UnitaryTransform


def prox_ttnn(y: np.ndarray, lam: float, t: UnitaryTransform) -> np.ndarray:
    """Singular value thresholding in the transform domain.

    Returns the minimizer of ``lam * ttnn(x) + 0.5 * ||x - y||_F^2``: every
    transform-domain singular value is shrunk by ``lam`` and clipped at zero.
    Real input under a real-preserving transform gives a real result; an
    imaginary residue above ``1e-8`` (relative to ``max(1, |y|_inf)``) is an
    error in that case.
    """
    if lam < 0:
        raise ValueError(f"threshold must be non-negative, got {lam}")
    hat = to_slices(y, t)
    u, sigma, vh = np.linalg.svd(hat, full_matrices=False)
    shrunk = np.maximum(sigma - lam, 0.0)
    out = from_slices((u * shrunk[:, None, :]) @ vh, t)
    if np.iscomplexobj(out) and not np.iscomplexobj(y) and preserves_real(t):
        scale = max(1.0, float(np.max(np.abs(y), initial=0.0)))
        resid = float(np.max(np.abs(out.imag), initial=0.0))
        if resid > REAL_TOL * scale:
            raise ArithmeticError(f"prox_ttnn: imaginary residue {resid:.3e} on real input")
        out = np.asfortranarray(out.real)
    return out


def soft_threshold(h: np.ndarray, tau: float) -> np.ndarray:
    """Elementwise ``sgn(h) * max(|h| - tau, 0)``, the prox of ``tau * ||.||_1``."""
    if np.iscomplexobj(h):
        raise TypeError("soft_threshold expects a real tensor")
    if tau < 0:
        raise ValueError(f"threshold must be non-negative, got {tau}")
    return np.sign(h) * np.maximum(np.abs(h) - tau, 0.0)
