"""Phi-product algebra and the transformed tensor SVD.

Every operation maps its arguments into the transform domain, works on the
frontal slices there as a stack of ordinary matrices, and maps back with
``Phi^H``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .transforms import FOURIER, UnitaryTransform, apply, apply_inverse

RANK_TOL = 1e-10
_RANK_FLOOR = 1e-14
REAL_TOL = 1e-8


def to_slices(a: np.ndarray, t: UnitaryTransform) -> np.ndarray:
    """Transform-domain frontal slices of ``a`` as an ``(n3, n1, n2)`` stack."""
    return np.moveaxis(apply(t, a), 2, 0)


def from_slices(stack: np.ndarray, t: UnitaryTransform) -> np.ndarray:
    """Inverse of :func:`to_slices`."""
    return apply_inverse(t, np.moveaxis(stack, 0, 2))


def preserves_real(t: UnitaryTransform) -> bool:
    """Whether slicewise products of real tensors come back real under ``t``.

    True for real matrices, and for the DFT because its transform-domain
    slices of a real tensor come in conjugate pairs.
    """
    return t.kind == FOURIER or t.preserves_real


def maybe_real(out: np.ndarray, expect_real: bool, tol: float = REAL_TOL) -> np.ndarray:
    """Drop a negligible imaginary part when the result is known to be real."""
    if not expect_real or not np.iscomplexobj(out):
        return out
    scale = max(1.0, float(np.max(np.abs(out), initial=0.0)))
    if np.max(np.abs(out.imag), initial=0.0) > tol * scale:
        return out
    return np.asfortranarray(out.real)


def _real_inputs(t: UnitaryTransform, *tensors: np.ndarray) -> bool:
    return preserves_real(t) and not any(np.iscomplexobj(x) for x in tensors)


def phi_product(a: np.ndarray, b: np.ndarray, t: UnitaryTransform) -> np.ndarray:
    """``a <>_Phi b``: slicewise matrix products in the transform domain."""
    if a.shape[1] != b.shape[0] or a.shape[2] != b.shape[2]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    out = from_slices(to_slices(a, t) @ to_slices(b, t), t)
    return maybe_real(out, _real_inputs(t, a, b))


def conj_transpose(a: np.ndarray, t: UnitaryTransform) -> np.ndarray:
    """Conjugate transpose with respect to ``Phi``; an ``n2 x n1 x n3`` tensor."""
    hat = to_slices(a, t)
    out = from_slices(np.conj(np.swapaxes(hat, 1, 2)), t)
    return maybe_real(out, _real_inputs(t, a))


def identity_tensor(n: int, t: UnitaryTransform) -> np.ndarray:
    stack = np.broadcast_to(np.eye(n), (t.n3, n, n))
    return maybe_real(from_slices(stack, t), preserves_real(t))


@dataclass
class TransformedTSvd:
    """Factors of ``A = U <> S <> V^H`` together with the ranks.

    ``u`` is ``n1 x rho x n3``, ``s`` is ``rho x rho x n3`` (f-diagonal in the
    transform domain), ``v`` is ``n2 x rho x n3``.  The transform-domain
    factors are kept alongside for reuse.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    transform: UnitaryTransform
    multi_rank: np.ndarray
    tubal_rank: int
    singular_values: np.ndarray = field(repr=False)
    u_hat: np.ndarray = field(repr=False)
    v_hat: np.ndarray = field(repr=False)

    @property
    def width(self) -> int:
        return self.u.shape[1]

    def effective_factors(self) -> tuple[np.ndarray, np.ndarray]:
        """Transform-domain ``U`` and ``V`` with columns beyond each slice's rank zeroed."""
        keep = np.arange(self.width)[None, :] < self.multi_rank[:, None]
        return self.u_hat * keep[:, None, :], self.v_hat * keep[:, None, :]

    def reconstruct(self) -> np.ndarray:
        stack = (self.u_hat * self.singular_values[:, None, :]) @ np.conj(np.swapaxes(self.v_hat, 1, 2))
        return from_slices(stack, self.transform)


def _normalize_phase(u: np.ndarray, vh: np.ndarray) -> None:
    """Make the first nonzero entry of every left singular vector real and non-negative."""
    mag = np.abs(u)
    first = np.argmax(mag > 1e-12 * np.max(mag, axis=1, keepdims=True), axis=1)
    pivot = np.take_along_axis(u, first[:, None, :], axis=1)[:, 0, :]
    pabs = np.abs(pivot)
    phase = np.where(pabs > 0, pivot / np.where(pabs > 0, pabs, 1), 1)
    u *= np.conj(phase)[:, None, :]
    vh *= phase[:, :, None]


def numerical_ranks(sigma: np.ndarray) -> np.ndarray:
    """Per-slice rank counts for a ``(n3, k)`` array of singular values."""
    smax = float(np.max(sigma, initial=0.0))
    thresh = RANK_TOL * smax if smax > 0 else _RANK_FLOOR
    return np.count_nonzero(sigma > thresh, axis=1)


def ttsvd(a: np.ndarray, t: UnitaryTransform, mode: str = "full") -> TransformedTSvd:
    """Transformed tensor SVD via per-slice SVDs in the transform domain.

    ``mode="full"`` keeps ``min(n1, n2)`` singular tubes, ``mode="skinny"``
    keeps ``tubal_rank`` of them and zeroes singular values past each
    slice's own rank.
    """
    if mode not in ("full", "skinny"):
        raise ValueError(f"mode must be 'full' or 'skinny', got {mode!r}")
    hat = to_slices(a, t)
    try:
        u, sigma, vh = np.linalg.svd(hat, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"slice SVD did not converge: {exc}") from exc
    _normalize_phase(u, vh)
    multi_rank = numerical_ranks(sigma)
    tubal_rank = int(multi_rank.max(initial=0))
    if mode == "skinny":
        u, sigma, vh = u[:, :, :tubal_rank], sigma[:, :tubal_rank].copy(), vh[:, :tubal_rank, :]
        sigma[np.arange(tubal_rank)[None, :] >= multi_rank[:, None]] = 0.0
    v = np.conj(np.swapaxes(vh, 1, 2))
    width = sigma.shape[1]
    s_stack = np.zeros((t.n3, width, width), dtype=sigma.dtype)
    idx = np.arange(width)
    s_stack[:, idx, idx] = sigma
    return TransformedTSvd(
        u=from_slices(u, t),
        s=maybe_real(from_slices(s_stack, t), preserves_real(t)),
        v=from_slices(v, t),
        transform=t,
        multi_rank=multi_rank,
        tubal_rank=tubal_rank,
        singular_values=sigma,
        u_hat=u,
        v_hat=v,
    )


def ttnn(a: np.ndarray, t: UnitaryTransform) -> float:
    """Transformed tubal nuclear norm: sum of nuclear norms of the transform-domain slices."""
    return float(np.sum(np.linalg.svd(to_slices(a, t), compute_uv=False)))


def spectral_norm(a: np.ndarray, t: UnitaryTransform) -> float:
    """Largest singular value over all transform-domain slices."""
    return float(np.max(np.linalg.svd(to_slices(a, t), compute_uv=False), initial=0.0))


def column_basis(i: int, n1: int, n3: int, t: UnitaryTransform) -> np.ndarray:
    """``n1 x 1 x n3`` tensor whose transform has an all-ones tube at row ``i``."""
    if not 0 <= i < n1:
        raise IndexError(f"row index {i} out of range for n1={n1}")
    _check_n3(n3, t)
    hat = np.zeros((n1, 1, n3))
    hat[i, 0, :] = 1.0
    return maybe_real(apply_inverse(t, hat), preserves_real(t))


def tube_basis(k: int, n3: int, t: UnitaryTransform) -> np.ndarray:
    """``1 x 1 x n3`` tensor whose transform is the unit tube at position ``k``."""
    if not 0 <= k < n3:
        raise IndexError(f"tube index {k} out of range for n3={n3}")
    _check_n3(n3, t)
    hat = np.zeros((1, 1, n3))
    hat[0, 0, k] = 1.0
    return maybe_real(apply_inverse(t, hat), t.is_real)


def _check_n3(n3: int, t: UnitaryTransform) -> None:
    if n3 != t.n3:
        raise ValueError(f"n3={n3} does not match transform size {t.n3}")


def _tangent_parts(z: np.ndarray, svd: TransformedTSvd) -> tuple[np.ndarray, np.ndarray]:
    n1, n2 = svd.u.shape[0], svd.v.shape[0]
    if z.shape != (n1, n2, svd.transform.n3):
        raise ValueError(f"tensor {z.shape} does not match factors for {(n1, n2, svd.transform.n3)}")
    ue, ve = svd.effective_factors()
    zh = to_slices(z, svd.transform)
    # U^H Z and Z V computed once and reused for both projections
    left = ue @ (np.conj(np.swapaxes(ue, 1, 2)) @ zh)
    right = (zh @ ve) @ np.conj(np.swapaxes(ve, 1, 2))
    both = ue @ (np.conj(np.swapaxes(ue, 1, 2)) @ right)
    return zh, left + right - both


def project_t(z: np.ndarray, svd: TransformedTSvd) -> np.ndarray:
    """Projection onto the tangent space ``{U <> Y^H + W <> V^H}``."""
    _, proj = _tangent_parts(z, svd)
    return maybe_real(from_slices(proj, svd.transform), _real_inputs(svd.transform, z))


def project_t_perp(z: np.ndarray, svd: TransformedTSvd) -> np.ndarray:
    """``(I - U <> U^H) <> Z <> (I - V <> V^H)``."""
    zh, proj = _tangent_parts(z, svd)
    return maybe_real(from_slices(zh - proj, svd.transform), _real_inputs(svd.transform, z))


class Incoherence(NamedTuple):
    mu_u: float
    mu_v: float
    mu_joint: float

    @property
    def mu(self) -> float:
        return max(self.mu_u, self.mu_v, self.mu_joint)


def incoherence(svd: TransformedTSvd) -> Incoherence:
    """Smallest ``mu`` satisfying each of the three incoherence bounds.

    Uses the identities ``||U^H <> e_i||_F^2 = sum_k ||row i of U_hat_k||^2``
    (unitary invariance of the Frobenius norm).
    """
    r = svd.tubal_rank
    if r == 0:
        raise ValueError("incoherence is undefined for a zero tensor")
    n1, n2, n3 = svd.u.shape[0], svd.v.shape[0], svd.transform.n3
    ue, ve = svd.effective_factors()
    row_u = np.sum(np.abs(ue) ** 2, axis=(0, 2))
    row_v = np.sum(np.abs(ve) ** 2, axis=(0, 2))
    joint = from_slices(ue @ np.conj(np.swapaxes(ve, 1, 2)), svd.transform)
    return Incoherence(
        mu_u=float(n1 / r * row_u.max()),
        mu_v=float(n2 / r * row_v.max()),
        mu_joint=float(n1 * n2 * n3 / r * np.max(np.abs(joint)) ** 2),
    )
