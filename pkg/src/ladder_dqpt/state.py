"""Two-column infinite MPS in Vidal canonical form, plus gauge utilities.

The unit cell holds two column tensors (sublattices A and B).  Bond A sits
between Gamma_A and Gamma_B inside the cell; bond B sits between unit cells.
Lambda vectors store Schmidt *probabilities* (sum 1); the diagonal matrices
appearing in contractions carry their square roots.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

#: singular values below this (relative to the leading one) are treated as
#: exact zeros when inverting environments or truncating gauge transforms
PSEUDO_INVERSE_CUTOFF = 1e-12


@dataclass
class CanonicalState:
    """Vidal-form iMPS with a two-column unit cell.

    gamma_a: (chi_b, d, chi_a) tensor, d = 2**l_perp
    gamma_b: (chi_a, d, chi_b) tensor
    lambda_a, lambda_b: Schmidt probabilities on the two inequivalent bonds,
    descending, each summing to 1.
    """

    gamma_a: np.ndarray
    lambda_a: np.ndarray
    gamma_b: np.ndarray
    lambda_b: np.ndarray
    l_perp: int
    time: float = 0.0

    @property
    def dim(self) -> int:
        return 2**self.l_perp

    @property
    def chi_a(self) -> int:
        return self.lambda_a.size

    @property
    def chi_b(self) -> int:
        return self.lambda_b.size

    def sqrt_lambda_a(self) -> np.ndarray:
        return np.sqrt(self.lambda_a)

    def sqrt_lambda_b(self) -> np.ndarray:
        return np.sqrt(self.lambda_b)

    def copy(self) -> "CanonicalState":
        return replace(
            self,
            gamma_a=self.gamma_a.copy(),
            lambda_a=self.lambda_a.copy(),
            gamma_b=self.gamma_b.copy(),
            lambda_b=self.lambda_b.copy(),
        )


def entanglement_entropy(lam: np.ndarray) -> float:
    """Von Neumann entropy -sum(lam log lam) of a probability spectrum."""
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


def _condition_residuals(gamma: np.ndarray, lam_left: np.ndarray, lam_right: np.ndarray) -> float:
    chi_l = lam_left.size
    chi_r = lam_right.size
    left = np.einsum("ldk,l,ldm->km", gamma.conj(), lam_left, gamma, optimize=True)
    right = np.einsum("kdr,r,mdr->km", gamma, lam_right, gamma.conj(), optimize=True)
    res_l = np.max(np.abs(left - np.eye(chi_r)))
    res_r = np.max(np.abs(right - np.eye(chi_l)))
    return float(max(res_l, res_r))


def canonical_residual(state: CanonicalState) -> dict[str, float]:
    """Max-norm residual of the two canonical conditions, per sublattice tensor."""
    return {
        "A": _condition_residuals(state.gamma_a, state.lambda_b, state.lambda_a),
        "B": _condition_residuals(state.gamma_b, state.lambda_a, state.lambda_b),
    }


def _right_map(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("ldr,rk,mdk->lm", a, x, a.conj(), optimize=True)


def _left_map(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.einsum("ldr,lm,mdk->rk", a.conj(), x, a, optimize=True)


def _dominant_fixed_point(a: np.ndarray, side: str, tol: float = 1e-14, max_iter: int = 5000):
    """Dominant Hermitian fixed point of the state transfer map, by power iteration.

    Falls back to a dense eigendecomposition of the chi^2 x chi^2 transfer
    matrix when the iteration stalls (near-degenerate subleading eigenvalues).
    """
    chi = a.shape[0] if side == "left" else a.shape[2]
    apply_map = _left_map if side == "left" else _right_map
    x = np.eye(chi, dtype=complex)
    x /= np.trace(x).real
    eta = 1.0
    for _ in range(max_iter):
        y = apply_map(a, x)
        y = 0.5 * (y + y.conj().T)
        eta = float(np.trace(y).real)
        if eta <= 0:
            break
        y /= eta
        if np.max(np.abs(y - x)) < tol:
            return y, eta
        x = y
    # dense fallback
    mat = np.einsum("ldr,mdk->lmrk", a, a.conj(), optimize=True).reshape(chi * chi, chi * chi)
    if side == "left":
        mat = mat.conj().T
    evals, evecs = np.linalg.eig(mat)
    k = int(np.argmax(np.abs(evals)))
    fp = evecs[:, k].reshape(chi, chi)
    fp = 0.5 * (fp + fp.conj().T)
    if np.trace(fp).real < 0:
        fp = -fp
    fp /= np.trace(fp).real
    return fp, float(np.abs(evals[k]))


def _psd_square_root(m: np.ndarray, rank_tol: float):
    """Rank-revealing factor m = root @ root^dag; returns (root, pinv(root))."""
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    vals = np.clip(vals, 0.0, None)
    keep = vals > rank_tol * max(vals.max(), 1e-300)
    vals, vecs = vals[keep], vecs[:, keep]
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    sq = np.sqrt(vals)
    root = vecs * sq
    pinv = (vecs / sq).conj().T
    return root, pinv


def canonicalize_uniform(a: np.ndarray, rank_tol: float = PSEUDO_INVERSE_CUTOFF):
    """Bring a single-site uniform iMPS tensor into Vidal form.

    Returns (gamma, lam) with lam the Schmidt probabilities (descending,
    sum 1).  Handles non-injective inputs (e.g. product states written with
    inflated bond dimension) by rank truncation of the transfer fixed points.
    """
    r_fp, eta = _dominant_fixed_point(a, "right")
    l_fp, _ = _dominant_fixed_point(a, "left")
    a = a / np.sqrt(eta)

    y, y_pinv = _psd_square_root(r_fp, rank_tol)       # r = y @ y^dag
    x_dag, x_dag_pinv = _psd_square_root(l_fp, rank_tol)  # l = x^dag @ x
    x = x_dag.conj().T
    x_pinv = x_dag_pinv.conj().T

    u, s, vh = np.linalg.svd(x @ y, full_matrices=False)
    keep = s > rank_tol * s[0]
    u, s, vh = u[:, keep], s[keep], vh[keep, :]
    s_norm = s / np.linalg.norm(s)

    gamma = np.einsum("ka,al,ldr,rb,bm->kdm", vh, y_pinv, a, x_pinv, u, optimize=True)
    # polish the overall scale so the left condition has unit trace density
    lam = s_norm**2
    t = np.einsum("ldk,l,ldk->", gamma.conj(), lam, gamma, optimize=True).real / lam.size
    gamma /= np.sqrt(t)
    return gamma, lam


def uniform_to_two_column(gamma: np.ndarray, lam: np.ndarray, l_perp: int, time: float) -> CanonicalState:
    """Wrap a one-column uniform iMPS as a (trivially) two-column-cell state."""
    return CanonicalState(
        gamma_a=gamma.copy(),
        lambda_a=lam.copy(),
        gamma_b=gamma.copy(),
        lambda_b=lam.copy(),
        l_perp=l_perp,
        time=time,
    )
