import numpy as np
import pytest

from phitensor.transforms import data_transform, db4_transform, fourier_transform


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def randn(rng, *shape, complex_=False):
    a = rng.standard_normal(shape)
    if complex_:
        a = a + 1j * rng.standard_normal(shape)
    return a


def block_circulant(a):
    """``Circ(A)``: block (p, q) is frontal slice ``(p - q) mod n3``."""
    n1, n2, n3 = a.shape
    out = np.zeros((n1 * n3, n2 * n3), dtype=a.dtype)
    for p in range(n3):
        for q in range(n3):
            out[p * n1:(p + 1) * n1, q * n2:(q + 1) * n2] = a[:, :, (p - q) % n3]
    return out


def circulant_tproduct(a, b):
    """Classical t-product ``Fold(Circ(A) @ Vec(B))`` built without any transform."""
    n1, _, n3 = a.shape
    n4 = b.shape[1]
    vec_b = np.concatenate([b[:, :, k] for k in range(n3)], axis=0)
    stacked = block_circulant(a) @ vec_b
    return np.stack([stacked[k * n1:(k + 1) * n1] for k in range(n3)], axis=2).reshape(n1, n4, n3)


def make_transforms(n3, rng):
    """One transform of each constructible kind for length ``n3``."""
    out = [fourier_transform(n3), data_transform(rng.standard_normal((3, 4, n3)))]
    if n3 % 2 == 0:
        out.append(db4_transform(n3))
    return out


def sign_tensor(svd):
    """``U <> V^H`` from the rank-restricted factors of a transformed SVD."""
    from phitensor.tproduct import from_slices, maybe_real, preserves_real

    ue, ve = svd.effective_factors()
    return maybe_real(from_slices(ue @ np.conj(np.swapaxes(ve, 1, 2)), svd.transform), preserves_real(svd.transform))


def prox_objective(x, y, lam, t):
    from phitensor.tproduct import ttnn

    return lam * ttnn(x, t) + 0.5 * np.linalg.norm((x - y).ravel()) ** 2


def subgradient_residuals(y, x, lam, t):
    """``(|P_T(G) - U<>V^H|_F, ||P_T_perp(G)||)`` for ``G = (y - x) / lam``."""
    from phitensor.tproduct import project_t, project_t_perp, spectral_norm, ttsvd

    svd = ttsvd(x, t, "skinny")
    g = (y - x) / lam
    tangent = np.linalg.norm((project_t(g, svd) - sign_tensor(svd)).ravel())
    return tangent, spectral_norm(project_t_perp(g, svd), t)


def grid_soft_threshold(h, tau, step=1e-4):
    """Per-entry minimizer of ``tau*|x| + (x - h)^2 / 2`` over a uniform grid."""
    out = np.empty_like(h)
    for idx, v in np.ndenumerate(h):
        half = int(np.ceil((abs(v) + 1.0) / step))
        grid = step * np.arange(-half, half + 1)  # contains 0 exactly
        out[idx] = grid[np.argmin(tau * np.abs(grid) + 0.5 * (grid - v) ** 2)]
    return out


# One line per acceptance criterion, filled in by test_acceptance.py.
ACCEPTANCE_LINES: list[str] = []


def report_criterion(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
