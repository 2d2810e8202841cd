"""Robust tensor completion by a symmetric Gauss-Seidel multi-block ADMM.

Solves::

    min  ttnn(L) + lam * ||E||_1
    s.t. L + E = M,  P_Omega(M) = P_Omega(X)

with the block order M (half step), L, M, E followed by a multiplier update.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import prox as _prox
from .prox import prox_ttnn, soft_threshold
from .tensor import norm_fro, norm_l1
from .tproduct import preserves_real, ttnn
from .transforms import UnitaryTransform, fourier_transform

GOLDEN = (1 + math.sqrt(5)) / 2


class SolverAbort(ArithmeticError):
    """Raised when an iterate stops being finite."""


@dataclass(frozen=True, eq=False)
class ObservationMask:
    """Boolean membership array for the observed index set Omega."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 3:
            raise ValueError(f"mask must be third-order, got ndim={bits.ndim}")
        bits = np.asfortranarray(bits, dtype=bool)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def full(cls, dims) -> ObservationMask:
        return cls(np.ones(dims, dtype=bool))

    @classmethod
    def empty(cls, dims) -> ObservationMask:
        return cls(np.zeros(dims, dtype=bool))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.bits.shape

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    @property
    def ratio(self) -> float:
        return self.count / self.bits.size

    def __eq__(self, other) -> bool:
        return isinstance(other, ObservationMask) and np.array_equal(self.bits, other.bits)

    def _check(self, x: np.ndarray) -> None:
        if x.shape != self.dims:
            raise ValueError(f"tensor {x.shape} does not match mask {self.dims}")


def project_omega(x: np.ndarray, mask: ObservationMask) -> np.ndarray:
    """Zero every entry outside Omega."""
    mask._check(x)
    return np.where(mask.bits, x, 0)


def project_omega_complement(x: np.ndarray, mask: ObservationMask) -> np.ndarray:
    """Zero every entry inside Omega."""
    mask._check(x)
    return np.where(mask.bits, 0, x)


def default_lambda(n1: int, n2: int, n3: int, rho: float, a: float = 1.0) -> float:
    """``a / sqrt(rho * max(n1, n2) * n3)``."""
    if not 0 < rho <= 1:
        raise ValueError(f"sampling ratio must lie in (0, 1], got {rho}")
    if a <= 0:
        raise ValueError(f"lambda scale must be positive, got {a}")
    return a / math.sqrt(rho * max(n1, n2) * n3)


@dataclass
class SolverConfig:
    """Parameters of the ADMM solve.

    ``lam=None`` selects :func:`default_lambda` with the mask's sampling
    ratio and ``lambda_scale``; ``transform=None`` selects the unitary DFT.
    """

    lam: Optional[float] = None
    lambda_scale: float = 1.0
    beta: float = 0.1
    tau: float = 1.618
    tol: float = 5e-4
    max_iters: int = 500
    transform: Optional[UnitaryTransform] = None

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.lambda_scale > 0:
            raise ValueError(f"lambda_scale must be positive, got {self.lambda_scale}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0 < self.tau < GOLDEN:
            raise ValueError(f"tau must lie in (0, {GOLDEN:.10f}), got {self.tau}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")

    def resolve_lambda(self, dims, rho: float) -> float:
        if self.lam is not None:
            return float(self.lam)
        return default_lambda(*dims, rho=rho, a=self.lambda_scale)

    def resolve_transform(self, n3: int) -> UnitaryTransform:
        t = self.transform if self.transform is not None else fourier_transform(n3)
        if t.n3 != n3:
            raise ValueError(f"transform size {t.n3} does not match n3={n3}")
        return t


@dataclass(frozen=True)
class KktResiduals:
    eta_z: float
    eta_e: float
    eta_m: float

    @property
    def eta_res(self) -> float:
        return max(self.eta_z, self.eta_e, self.eta_m)

    def as_dict(self) -> dict:
        return {"eta_z": self.eta_z, "eta_e": self.eta_e, "eta_m": self.eta_m}


@dataclass
class SolverReport:
    l_hat: np.ndarray
    e_hat: np.ndarray
    m_hat: np.ndarray
    iterations: int
    residual_history: list[KktResiduals]
    converged: bool
    lam: float
    transform: UnitaryTransform
    wall_ms: float = 0.0
    z_hat: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def residuals(self) -> KktResiduals:
        return self.residual_history[-1]


def kkt_residuals(
    l: np.ndarray, e: np.ndarray, m: np.ndarray, z: np.ndarray, lam: float, t: UnitaryTransform
) -> KktResiduals:
    """Relative KKT residuals of the constrained problem at ``(L, E, M, Z)``."""
    if not l.shape == e.shape == m.shape == z.shape:
        raise ValueError("KKT residuals need tensors of equal dimensions")
    nl, ne, nm, nz = norm_fro(l), norm_fro(e), norm_fro(m), norm_fro(z)
    eta_z = norm_fro(l - _prox.prox_ttnn(z + l, 1.0, t)) / (1 + nz + nl)
    eta_e = norm_fro(e - _prox.soft_threshold(z + e, lam)) / (1 + nz + ne)
    eta_m = norm_fro(l + e - m) / (1 + nl + ne + nm)
    return KktResiduals(eta_z, eta_e, eta_m)


def objective(l: np.ndarray, e: np.ndarray, lam: float, t: UnitaryTransform) -> float:
    """``ttnn(L) + lam * ||E||_1``."""
    return ttnn(l, t) + lam * norm_l1(e)


def _check_finite(k: int, **tensors: np.ndarray) -> None:
    for name, arr in tensors.items():
        if not np.all(np.isfinite(arr)):
            raise SolverAbort(f"non-finite values in {name} at iteration {k}")


def solve(
    x: np.ndarray,
    mask: ObservationMask,
    cfg: Optional[SolverConfig] = None,
    callback: Optional[Callable[[int, dict], None]] = None,
) -> SolverReport:
    """Recover a low-tubal-rank tensor and a sparse corruption from ``P_Omega(x)``.

    Entries of ``x`` outside ``mask`` are never read.  Iteration starts from
    ``L = E = Z = 0`` and stops once the largest relative KKT residual is at
    most ``cfg.tol`` or after ``cfg.max_iters`` iterations.  ``callback`` is
    called after every iteration with the iteration number and a dict holding
    the current ``L``, ``E``, ``M``, ``Z`` and residuals.
    """
    cfg = cfg or SolverConfig()
    if np.iscomplexobj(x):
        raise TypeError("solve expects a real observation tensor")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError("observation must be a third-order tensor")
    mask._check(x)
    t = cfg.resolve_transform(x.shape[2])
    if not preserves_real(t):
        raise ValueError("transform rows must be closed under conjugation for real data")
    rho = mask.ratio
    lam = cfg.resolve_lambda(x.shape, rho if rho > 0 else 1.0)
    beta, tau = cfg.beta, cfg.tau
    obs = mask.bits
    x_obs = np.where(obs, x, 0.0)
    _check_finite(0, X=x_obs)

    start = time.perf_counter()
    l = np.zeros_like(x_obs)
    e = np.zeros_like(x_obs)
    z = np.zeros_like(x_obs)
    m = x_obs.copy()
    history: list[KktResiduals] = []
    converged = False
    k = 0
    for k in range(1, int(cfg.max_iters) + 1):
        m = np.where(obs, x_obs, l + e - z / beta)
        try:
            l = prox_ttnn(m + z / beta - e, 1.0 / beta, t)
        except np.linalg.LinAlgError as exc:
            raise SolverAbort(f"SVD failed at iteration {k}: {exc}") from exc
        m = np.where(obs, x_obs, l + e - z / beta)
        e = soft_threshold(m + z / beta - l, lam / beta)
        z = z - tau * beta * (l + e - m)
        _check_finite(k, L=l, E=e, Z=z)
        res = kkt_residuals(l, e, m, z, lam, t)
        history.append(res)
        if callback is not None:
            callback(k, {"L": l, "E": e, "M": m, "Z": z, "residuals": res})
        if res.eta_res <= cfg.tol:
            converged = True
            break
    wall_ms = (time.perf_counter() - start) * 1e3
    return SolverReport(
        l_hat=l,
        e_hat=e,
        m_hat=m,
        iterations=k,
        residual_history=history,
        converged=converged,
        lam=lam,
        transform=t,
        wall_ms=wall_ms,
        z_hat=z,
    )
