"""Dense linear-algebra kernels: truncated/randomized SVD and small dense eigensolves.

All tensors are plain numpy arrays in C (row-major) order; every reshape in the
package is order-preserving so results can be cross-checked element by element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_EIG_CAP = 4096
DEFAULT_OVERSAMPLING = 10
DEFAULT_POWER_ITERATIONS = 2
DEFAULT_RSVD_SEED = 0


@dataclass
class SvdResult:
    """Truncated factorization A ~ left @ diag(singular_values) @ right."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    discarded_weight: float


def _check_matrix(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ValueError(f"expected a rank-2 tensor, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix contains non-finite entries")
    return matrix


def gauge_fix_svd(u: np.ndarray, vh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Remove the per-vector phase freedom of an SVD.

    The largest-magnitude entry of each left singular vector is made real and
    positive (first index wins ties), with the compensating phase pushed into
    the matching right vector.  Makes truncation gauges deterministic.
    """
    u = u.copy()
    vh = vh.copy()
    for j in range(u.shape[1]):
        col = u[:, j]
        k = int(np.argmax(np.abs(col)))
        a = col[k]
        if a != 0:
            phase = a / abs(a)
            u[:, j] *= np.conj(phase)
            vh[j, :] *= phase
    return u, vh


def truncated_svd(matrix: np.ndarray, chi_max: int, gauge_fix: bool = True) -> SvdResult:
    """Exact SVD keeping at most ``chi_max`` singular values.

    ``discarded_weight`` is the exact sum of squares of the dropped values.
    """
    matrix = _check_matrix(matrix)
    if chi_max <= 0:
        raise ValueError("chi_max must be a positive integer")
    u, s, vh = np.linalg.svd(matrix, full_matrices=False)
    keep = min(chi_max, s.size)
    discarded = float(np.sum(s[keep:] ** 2))
    u, s, vh = u[:, :keep], s[:keep], vh[:keep, :]
    if gauge_fix:
        u, vh = gauge_fix_svd(u, vh)
    return SvdResult(u, s, vh, discarded)


def randomized_svd(
    matrix: np.ndarray,
    chi_max: int,
    oversampling: int = DEFAULT_OVERSAMPLING,
    power_iterations: int = DEFAULT_POWER_ITERATIONS,
    seed: int = DEFAULT_RSVD_SEED,
    gauge_fix: bool = True,
) -> SvdResult:
    """Reduced-rank randomized SVD (Gaussian sketch + subspace power iteration).

    Keeps the leading ``chi_max`` values; deterministic for a given ``seed``.
    ``discarded_weight`` is estimated as ||A||_F^2 minus the kept weight.
    """
    matrix = _check_matrix(matrix)
    if chi_max <= 0:
        raise ValueError("chi_max must be a positive integer")
    sketch = chi_max + oversampling
    if sketch > min(matrix.shape):
        raise ValueError(
            f"chi_max + oversampling = {sketch} exceeds min(matrix dims) = {min(matrix.shape)}"
        )
    rng = np.random.default_rng(seed)
    omega = rng.standard_normal((matrix.shape[1], sketch))
    if np.iscomplexobj(matrix):
        omega = omega + 1j * rng.standard_normal((matrix.shape[1], sketch))
    q, _ = np.linalg.qr(matrix @ omega)
    for _ in range(power_iterations):
        q, _ = np.linalg.qr(matrix.conj().T @ q)
        q, _ = np.linalg.qr(matrix @ q)
    b = q.conj().T @ matrix
    ub, s, vh = np.linalg.svd(b, full_matrices=False)
    u = q @ ub
    keep = min(chi_max, s.size)
    total = float(np.sum(np.abs(matrix) ** 2))
    discarded = max(total - float(np.sum(s[:keep] ** 2)), 0.0)
    u, s, vh = u[:, :keep], s[:keep], vh[:keep, :]
    if gauge_fix:
        u, vh = gauge_fix_svd(u, vh)
    return SvdResult(u, s, vh, discarded)


def dense_eigs(matrix: np.ndarray, cap: int = DEFAULT_EIG_CAP) -> np.ndarray:
    """Eigenvalues of a square (generally non-Hermitian) matrix.

    Sorted by descending magnitude; ties broken by descending real part, then
    descending imaginary part.
    """
    matrix = _check_matrix(matrix)
    n, m = matrix.shape
    if n != m:
        raise ValueError(f"matrix must be square, got {matrix.shape}")
    if n > cap:
        raise ValueError(f"dimension {n} exceeds the dense eigensolver cap {cap}")
    eigs = np.linalg.eigvals(matrix)
    order = np.lexsort((-eigs.imag, -eigs.real, -np.abs(eigs)))
    return eigs[order]
