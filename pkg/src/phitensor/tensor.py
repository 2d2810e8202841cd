"""Dense third-order tensors.

Tensors are plain ``numpy`` arrays of shape ``(n1, n2, n3)`` with dtype
``float64`` or ``complex128``.  Arrays built here use Fortran order, so each
frontal slice ``a[:, :, k]`` is a contiguous column-major block and the flat
index of entry ``(i, j, k)`` is ``(k * n2 + j) * n1 + i``.
"""

from __future__ import annotations

import numpy as np

REAL = "real64"
COMPLEX = "complex128"

_DTYPES = {REAL: np.float64, COMPLEX: np.complex128}

# Largest element count we agree to allocate; guards against dims that
# overflow a 64-bit byte count.
_MAX_ELEMENTS = 2**60 // 16


def _check_dims(n1: int, n2: int, n3: int) -> tuple[int, int, int]:
    dims = tuple(int(n) for n in (n1, n2, n3))
    if any(n < 1 for n in dims):
        raise ValueError(f"tensor dimensions must be positive, got {dims}")
    if dims[0] * dims[1] * dims[2] > _MAX_ELEMENTS:
        raise OverflowError(f"tensor dimensions {dims} overflow")
    return dims


def zeros(n1: int, n2: int, n3: int, kind: str = REAL) -> np.ndarray:
    """Zero tensor of the given shape and scalar kind."""
    dims = _check_dims(n1, n2, n3)
    try:
        dtype = _DTYPES[kind]
    except KeyError:
        raise ValueError(f"unknown scalar kind {kind!r}") from None
    return np.zeros(dims, dtype=dtype, order="F")


def as_tensor(a, copy: bool = False) -> np.ndarray:
    """Coerce ``a`` to a float64/complex128 third-order array in Fortran order."""
    arr = np.asarray(a)
    if arr.ndim != 3:
        raise ValueError(f"expected a third-order tensor, got ndim={arr.ndim}")
    _check_dims(*arr.shape)
    dtype = np.complex128 if np.iscomplexobj(arr) else np.float64
    return np.array(arr, dtype=dtype, order="F", copy=True) if copy else np.asfortranarray(arr, dtype=dtype)


def kind(a: np.ndarray) -> str:
    return COMPLEX if np.iscomplexobj(a) else REAL


def to_real(a: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Drop the imaginary part if every entry's is at most ``tol`` in magnitude.

    Raises ``ValueError`` otherwise.  Real input is returned unchanged.
    """
    if not np.iscomplexobj(a):
        return a
    resid = float(np.max(np.abs(a.imag), initial=0.0))
    if resid > tol:
        raise ValueError(f"imaginary residue {resid:.3e} exceeds {tol:.1e}")
    return np.asfortranarray(a.real)


def frontal_slice(a: np.ndarray, k: int) -> np.ndarray:
    """Writable ``n1 x n2`` view of frontal slice ``k``."""
    n3 = a.shape[2]
    if not 0 <= k < n3:
        raise IndexError(f"slice index {k} out of range for n3={n3}")
    return a[:, :, k]


def _check_same_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Inner product ``sum conj(a_ijk) * b_ijk``."""
    _check_same_dims(a, b)
    return complex(np.vdot(a, b))


def norm_l1(a: np.ndarray) -> float:
    return float(np.sum(np.abs(a)))


def norm_inf(a: np.ndarray) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def norm_fro(a: np.ndarray) -> float:
    return float(np.linalg.norm(a.ravel()))


def unfold_mode3(a: np.ndarray) -> np.ndarray:
    """Mode-3 unfolding, an ``n3 x (n1*n2)`` matrix whose column ``j*n1 + i`` is tube ``(i, j)``."""
    n1, n2, n3 = a.shape
    return a.reshape(n1 * n2, n3, order="F").T


def fold_mode3(mat: np.ndarray, n1: int, n2: int) -> np.ndarray:
    """Inverse of :func:`unfold_mode3`."""
    n3 = mat.shape[0]
    if mat.shape[1] != n1 * n2:
        raise ValueError(f"cannot fold a {mat.shape} matrix into {n1}x{n2}x{n3}")
    return np.asfortranarray(mat.T.reshape(n1, n2, n3, order="F"))
