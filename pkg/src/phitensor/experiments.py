"""Synthetic robust-completion problems, PSNR, and parameter sweeps."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from .solver import ObservationMask, SolverAbort, SolverConfig, SolverReport, solve
from .tensor import norm_fro
from .tproduct import phi_product, ttsvd
from .transforms import DATA, UnitaryTransform, data_transform, fourier_transform, make_transform

log = logging.getLogger(__name__)

CSV_HEADER = ["transform", "rho", "gamma", "r", "seed", "psnr_db", "rel_err", "iters", "eta_res", "wall_ms"]


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def gen_lowrank(n1: int, n2: int, n3: int, r: int, t: UnitaryTransform, seed) -> np.ndarray:
    """``A <>_Phi B`` with standard Gaussian ``A`` (n1 x r x n3) and ``B`` (r x n2 x n3)."""
    if not 0 <= r <= min(n1, n2):
        raise ValueError(f"rank {r} must lie in [0, {min(n1, n2)}]")
    if t.n3 != n3:
        raise ValueError(f"transform size {t.n3} does not match n3={n3}")
    if r == 0:
        return np.zeros((n1, n2, n3), order="F")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n1, r, n3))
    b = rng.standard_normal((r, n2, n3))
    return phi_product(a, b, t)


def gen_smooth_lowrank(n1: int, n2: int, n3: int, r: int, seed, profiles: int = 2, width: float = 0.3) -> np.ndarray:
    """Low-rank tensor whose tubes are combinations of a few smooth bumps.

    ``L0[:, :, k] = sum_s C_s * f_s(k)`` with rank-``r`` Gaussian matrices
    ``C_s`` and Gaussian bump profiles ``f_s`` over ``[0, 1]``.  The mode-3
    unfolding then has rank at most ``profiles``.
    """
    rng = np.random.default_rng(seed)
    grid = np.linspace(0.0, 1.0, n3)
    out = np.zeros((n1, n2, n3), order="F")
    for center in rng.uniform(0.0, 1.0, profiles):
        coef = rng.standard_normal((n1, r)) @ rng.standard_normal((r, n2)) / math.sqrt(r)
        out += coef[:, :, None] * np.exp(-(((grid - center) / width) ** 2))[None, None, :]
    return out


def gen_mask(n1: int, n2: int, n3: int, rho: float, seed) -> ObservationMask:
    """Exactly ``round(rho * n1 * n2 * n3)`` entries drawn uniformly without replacement."""
    if not 0 <= rho <= 1:
        raise ValueError(f"sampling ratio must lie in [0, 1], got {rho}")
    total = n1 * n2 * n3
    rng = np.random.default_rng(seed)
    flat = np.zeros(total, dtype=bool)
    flat[rng.choice(total, _round_half_up(rho * total), replace=False)] = True
    return ObservationMask(flat.reshape((n1, n2, n3), order="F"))


def corrupt(l0: np.ndarray, mask: ObservationMask, gamma: float, seed) -> tuple[np.ndarray, np.ndarray]:
    """Add N(0, 1) noise to ``round(gamma * |Omega|)`` observed entries.

    Returns ``(e0, x)`` where ``x = l0 + e0`` on Omega and 0 elsewhere.
    """
    if not 0 <= gamma <= 1:
        raise ValueError(f"corruption fraction must lie in [0, 1], got {gamma}")
    if l0.shape != mask.dims:
        raise ValueError(f"tensor {l0.shape} does not match mask {mask.dims}")
    rng = np.random.default_rng(seed)
    observed = np.flatnonzero(mask.bits.ravel(order="F"))
    picked = rng.choice(observed, _round_half_up(gamma * observed.size), replace=False)
    e0 = np.zeros(l0.size)
    e0[np.sort(picked)] = rng.standard_normal(picked.size)
    e0 = e0.reshape(l0.shape, order="F")
    x = np.where(mask.bits, l0 + e0, 0.0)
    return np.asfortranarray(e0), np.asfortranarray(x)


def psnr(l: np.ndarray, l0: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB, using the dynamic range of ``l0``.

    Returns ``inf`` when ``l`` equals ``l0`` exactly.
    """
    if l.shape != l0.shape:
        raise ValueError(f"dimension mismatch: {l.shape} vs {l0.shape}")
    peak = float(np.max(l0) - np.min(l0))
    if peak == 0:
        raise ValueError("ground truth is constant; PSNR is undefined")
    err = norm_fro(l - l0) ** 2
    if err == 0:
        return math.inf
    return 10.0 * math.log10(l0.size * peak**2 / err)


def relative_error(l: np.ndarray, l0: np.ndarray) -> float:
    return norm_fro(l - l0) / norm_fro(l0)


@dataclass
class SyntheticProblem:
    l0: np.ndarray
    e0: np.ndarray
    mask: ObservationMask
    x: np.ndarray
    r: int
    rho: float
    gamma: float
    seed: int
    transform: UnitaryTransform
    profiles: int = 1

    @property
    def corruption_support(self) -> np.ndarray:
        return self.e0 != 0

    def validate(self) -> None:
        """Re-check the generation invariants; raises ``AssertionError`` on violation."""
        assert ttsvd(self.l0, self.transform).tubal_rank <= self.r * self.profiles
        support = self.corruption_support
        assert not np.any(support & ~self.mask.bits)
        assert np.count_nonzero(support) <= _round_half_up(self.gamma * self.mask.count)
        on = self.mask.bits
        assert np.array_equal(self.x[on], (self.l0 + self.e0)[on])


def make_problem(
    dims: Sequence[int],
    r: int,
    rho: float,
    gamma: float,
    seed: int,
    transform: Optional[UnitaryTransform] = None,
    smooth: bool = False,
) -> SyntheticProblem:
    """Generate a complete synthetic instance from independent streams of ``seed``.

    ``smooth=True`` draws the ground truth from :func:`gen_smooth_lowrank`.
    """
    n1, n2, n3 = (int(d) for d in dims)
    t = transform if transform is not None else fourier_transform(n3)
    s_low, s_mask, s_noise = np.random.SeedSequence(seed).spawn(3)
    profiles = 1
    if smooth:
        profiles = 2
        l0 = gen_smooth_lowrank(n1, n2, n3, r, s_low, profiles=profiles)
    else:
        l0 = gen_lowrank(n1, n2, n3, r, t, s_low)
    mask = gen_mask(n1, n2, n3, rho, s_mask)
    e0, x = corrupt(l0, mask, gamma, s_noise)
    return SyntheticProblem(l0, e0, mask, x, r, rho, gamma, seed, t, profiles)


def solve_data_pipeline(x: np.ndarray, mask: ObservationMask, cfg: SolverConfig) -> tuple[SolverReport, SolverReport]:
    """Solve with the DFT, build the data transform from that estimate, solve again.

    Returns both reports; the second is the final answer.
    """
    n3 = x.shape[2]
    first = solve(x, mask, replace(cfg, transform=fourier_transform(n3)))
    second = solve(x, mask, replace(cfg, transform=data_transform(first.l_hat)))
    return first, second


@dataclass
class SweepRow:
    transform: str
    rho: float
    gamma: float
    r: int
    seed: int
    psnr_db: float
    rel_err: float
    iters: int
    eta_res: float
    wall_ms: float

    def as_list(self) -> list:
        return [getattr(self, name) for name in CSV_HEADER]


def run_cell(problem: SyntheticProblem, kind: str, cfg: SolverConfig) -> SweepRow:
    n3 = problem.x.shape[2]
    start = time.perf_counter()
    try:
        if kind == DATA:
            _, report = solve_data_pipeline(problem.x, problem.mask, cfg)
        else:
            report = solve(problem.x, problem.mask, replace(cfg, transform=make_transform(kind, n3)))
    except SolverAbort as exc:
        log.warning("cell %s rho=%g gamma=%g seed=%d aborted: %s", kind, problem.rho, problem.gamma, problem.seed, exc)
        nan = float("nan")
        return SweepRow(kind, problem.rho, problem.gamma, problem.r, problem.seed, nan, nan, 0, nan,
                        (time.perf_counter() - start) * 1e3)
    return SweepRow(
        transform=kind,
        rho=problem.rho,
        gamma=problem.gamma,
        r=problem.r,
        seed=problem.seed,
        psnr_db=psnr(report.l_hat, problem.l0),
        rel_err=relative_error(report.l_hat, problem.l0),
        iters=report.iterations,
        eta_res=report.residuals.eta_res,
        wall_ms=(time.perf_counter() - start) * 1e3,
    )


def sweep(
    rhos: Iterable[float],
    gammas: Iterable[float],
    transforms: Iterable[str],
    dims: Sequence[int],
    r: int,
    seeds: Iterable[int],
    cfg: Optional[SolverConfig] = None,
    smooth: bool = False,
) -> list[SweepRow]:
    """Solve every (rho, gamma, transform, seed) cell; rows come out in that nesting order.

    The instance depends only on (rho, gamma, seed), so rows that differ only
    in transform are paired runs on the same data.
    """
    rhos, gammas, transforms, seeds = list(rhos), list(gammas), list(transforms), list(seeds)
    if not (rhos and gammas and transforms and seeds):
        raise ValueError("sweep grid must be non-empty")
    cfg = cfg or SolverConfig()
    rows = []
    for rho in rhos:
        for gamma in gammas:
            for seed in seeds:
                problem = make_problem(dims, r, rho, gamma, seed, smooth=smooth)
                for kind in transforms:
                    rows.append(run_cell(problem, kind, cfg))
    order = {kind: i for i, kind in enumerate(transforms)}
    rows.sort(key=lambda row: (rhos.index(row.rho), gammas.index(row.gamma), order[row.transform], seeds.index(row.seed)))
    return rows


def write_sweep_csv(rows: Iterable[SweepRow], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_list())
