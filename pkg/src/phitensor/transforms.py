"""Unitary transforms applied along the third mode of a tensor."""

from __future__ import annotations

import numpy as np

from .tensor import fold_mode3, unfold_mode3

FOURIER = "fourier"
DB4 = "db4"
DATA = "data"
CUSTOM = "custom"
KINDS = (FOURIER, DB4, DATA, CUSTOM)

_SQRT3 = np.sqrt(3.0)
# Orthonormal four-tap Daubechies scaling filter.
DB4_LOWPASS = np.array([1 + _SQRT3, 3 + _SQRT3, 3 - _SQRT3, 1 - _SQRT3]) / (4 * np.sqrt(2.0))
DB4_HIGHPASS = DB4_LOWPASS[::-1] * np.array([1.0, -1.0, 1.0, -1.0])


class UnitaryTransform:
    """An ``n3 x n3`` unitary matrix acting on every tube of a tensor.

    ``matrix`` is stored as float64 for real transforms (db4, data from real
    tensors) and complex128 otherwise.  Instances are treated as immutable.
    """

    def __init__(self, matrix, kind: str = CUSTOM):
        mat = np.asarray(matrix)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
            raise ValueError(f"transform matrix must be square and non-empty, got {mat.shape}")
        if kind not in KINDS:
            raise ValueError(f"unknown transform kind {kind!r}")
        mat = np.array(mat, dtype=np.complex128 if np.iscomplexobj(mat) else np.float64)
        mat.setflags(write=False)
        self.matrix = mat
        self.kind = kind
        self._conj_closed = None

    @property
    def n3(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix)

    @property
    def preserves_real(self) -> bool:
        """Whether ``Phi^H D Phi`` stays real for real tensors under slicewise ops.

        Holds when the rows of ``Phi`` are closed under conjugation, as for
        real matrices and the DFT (loaded from disk or built here).
        """
        if self.is_real:
            return True
        if self._conj_closed is None:
            p = self.matrix
            gap = np.abs(p.conj()[:, None, :] - p[None, :, :]).max(axis=2)
            self._conj_closed = bool(np.all(gap.min(axis=1) <= 1e-10))
        return self._conj_closed

    def unitarity_defect(self) -> float:
        """``max(|PP^H - I|_max, |P^H P - I|_max)``."""
        p = self.matrix
        eye = np.eye(self.n3)
        return float(max(np.max(np.abs(p @ p.conj().T - eye)), np.max(np.abs(p.conj().T @ p - eye))))

    def apply(self, a: np.ndarray) -> np.ndarray:
        return apply(self, a)

    def apply_inverse(self, a: np.ndarray) -> np.ndarray:
        return apply_inverse(self, a)

    def __repr__(self) -> str:
        return f"UnitaryTransform(kind={self.kind!r}, n3={self.n3})"


def _apply_matrix(mat: np.ndarray, a: np.ndarray) -> np.ndarray:
    n1, n2, n3 = a.shape
    if n3 != mat.shape[0]:
        raise ValueError(f"transform size {mat.shape[0]} does not match tensor n3={n3}")
    return fold_mode3(mat @ unfold_mode3(a), n1, n2)


def apply(t: UnitaryTransform, a: np.ndarray) -> np.ndarray:
    """Replace every tube ``a[i, j, :]`` by ``Phi @ a[i, j, :]``."""
    return _apply_matrix(t.matrix, a)


def apply_inverse(t: UnitaryTransform, a: np.ndarray) -> np.ndarray:
    """Replace every tube by ``Phi^H @ tube``."""
    return _apply_matrix(t.matrix.conj().T, a)


def fourier_transform(n3: int) -> UnitaryTransform:
    """Unitary DFT matrix ``exp(-2 pi i p q / n3) / sqrt(n3)``."""
    if n3 < 1:
        raise ValueError("n3 must be positive")
    idx = np.arange(n3)
    # reduce pq mod n3 first so large n3 keeps full angle accuracy
    phase = np.outer(idx, idx) % n3
    return UnitaryTransform(np.exp(-2j * np.pi * phase / n3) / np.sqrt(n3), FOURIER)


def db4_levels(n3: int) -> int:
    """Number of decomposition levels used for a length-``n3`` db4 transform.

    One level is always applied; further levels are applied to the
    approximation band while it is even and at least as long as the filter.
    """
    if n3 < 2 or n3 % 2:
        raise ValueError(f"db4 transform needs an even length, got n3={n3}")
    levels, length = 0, n3
    while length % 2 == 0 and (levels == 0 or length >= DB4_LOWPASS.size):
        levels += 1
        length //= 2
    return levels


def _analysis_step(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = x.size
    taps = DB4_LOWPASS.size
    # offset -1 matches the usual periodization alignment (pywt, MATLAB 'per')
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(taps)[None, :] - 1) % n
    windows = x[idx]
    return windows @ DB4_LOWPASS, windows @ DB4_HIGHPASS


def db4_analysis(x: np.ndarray, levels: int) -> np.ndarray:
    """Periodized multi-level db4 analysis of a vector.

    Output is ordered ``[approx_L, detail_L, ..., detail_1]``.
    """
    details = []
    approx = np.asarray(x, dtype=float)
    for _ in range(levels):
        approx, detail = _analysis_step(approx)
        details.append(detail)
    return np.concatenate([approx] + details[::-1])


def db4_transform(n3: int) -> UnitaryTransform:
    """Orthogonal periodized Daubechies-4 wavelet analysis matrix."""
    levels = db4_levels(n3)
    eye = np.eye(n3)
    mat = np.column_stack([db4_analysis(eye[:, q], levels) for q in range(n3)])
    return UnitaryTransform(mat, DB4)


def data_transform(a: np.ndarray) -> UnitaryTransform:
    """``U^H`` from the full SVD ``U S V^H`` of the mode-3 unfolding of ``a``.

    Rows of ``Phi @ unfold_mode3(a)`` are then orthogonal with norms equal to
    the singular values in non-increasing order.
    """
    u, _, _ = np.linalg.svd(unfold_mode3(a), full_matrices=True)
    return UnitaryTransform(u.conj().T, DATA)


def custom_transform(matrix, tol: float = 1e-8) -> UnitaryTransform:
    t = UnitaryTransform(matrix, CUSTOM)
    defect = t.unitarity_defect()
    if defect > tol:
        raise ValueError(f"matrix is not unitary (defect {defect:.3e} > {tol:.0e})")
    return t


def make_transform(kind: str, n3: int) -> UnitaryTransform:
    """Construct a data-independent transform by kind name."""
    if kind == FOURIER:
        return fourier_transform(n3)
    if kind == DB4:
        return db4_transform(n3)
    raise ValueError(f"transform kind {kind!r} cannot be built from n3 alone")
