"""Closed-form results and analytical ansatz states.

Contains the exact classical-chain solution, the connectivity-c one-site
density matrix, and the two variational product ansatz states (rotating-frame
precession ansatz and Trotterized interaction ansatz), both evaluated as
uniform column MPS and canonicalized so the regular observables apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .model import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    QuenchSpec,
    column_product_vector,
    single_site_rotation,
    spin_z_values,
)
from .state import CanonicalState, canonicalize_uniform, uniform_to_two_column

QUAD_TOL = 1e-11

#: eigenvectors of sigma_y as columns (+y, -y)
Y_BASIS = np.array([[1.0, 1.0], [1.0j, -1.0j]], dtype=complex) / np.sqrt(2.0)


def classical_chain_solution(j: float, t: float):
    """Exact quench of the 1D classical chain from the +x product state.

    Returns (f, lam_pair, o) with the Schmidt probabilities sorted descending
    and the constant overlap matrix diag(1, -i) reindexed accordingly.  Note
    the overlap phases are bond-gauge dependent; gauge-invariant are the
    magnitudes and the per-branch products o_jj^2 = (1, -1).
    """
    c2 = math.cos(j * t) ** 2
    s2 = math.sin(j * t) ** 2
    f = -2.0 * math.log(max(math.sqrt(c2), math.sqrt(s2)))
    if c2 >= s2:
        lam = np.array([c2, s2])
        o = np.diag([1.0, -1.0j]).astype(complex)
    else:
        lam = np.array([s2, c2])
        o = np.diag([-1.0j, 1.0]).astype(complex)
    return f, lam, o


@dataclass
class LdmParams:
    """Inputs of the connectivity-c one-site density matrix."""

    v: np.ndarray
    h_x: float
    h_z: float
    j: float
    connectivity: int

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex)
        if abs(np.linalg.norm(self.v) - 1.0) > 1e-12:
            raise ValueError("v must be normalized")
        if self.connectivity < 1:
            raise ValueError("connectivity must be >= 1")


def ldm_closed_form(params: LdmParams, t: float) -> np.ndarray:
    """One-site density matrix after a quench, for a site with c equally
    coupled neighbors.

    Field half-rotation, commuting two-spin phases with binomial resummation
    g = |a|^2 exp(-2iJt) + |b|^2 exp(2iJt) raised to the connectivity, then
    the second half-rotation.  Exact for h_x = 0, approximate otherwise.
    """
    c = params.connectivity
    w = single_site_rotation(params.h_x, params.h_z, t / 2.0)
    a, b = w @ params.v
    g = abs(a) ** 2 * np.exp(-2j * params.j * t) + abs(b) ** 2 * np.exp(2j * params.j * t)
    m = np.array(
        [
            [abs(a) ** 2, a * np.conj(b) * g**c],
            [np.conj(a) * b * np.conj(g) ** c, abs(b) ** 2],
        ],
        dtype=complex,
    )
    return w @ m @ w.conj().T


def ldm_spectrum_magnetization(c: int, j: float, t: float):
    """Closed-form local spectrum and magnetization for the +x initial state
    with h_z = 0: lam = (1 +- cos(2Jt)^c)/2, m_x = cos(2Jt)^c (sigma units)."""
    mc = math.cos(2.0 * j * t) ** c
    lam = np.array([0.5 * (1.0 + mc), 0.5 * (1.0 - mc)])
    return lam, mc


@dataclass
class PrecessionFrame:
    """Rotating-frame coefficients of the strong-field expansion.

    s_x, s_y, s_z are the free-precession matrix elements; the effective
    couplings are j_eff = J s_y^2 and h_eff = -2 J s_y (s_x^2 + s_z^2).
    Accumulated phases are evaluated by adaptive quadrature.
    """

    h_x: float
    h_z: float
    j: float

    def __post_init__(self):
        self.h = math.hypot(self.h_x, self.h_z)
        if self.h == 0.0:
            raise ValueError("precession frame undefined for h = 0")

    def s_x(self, t: float) -> float:
        return 2.0 * self.h_x * self.h_z * math.sin(self.h * t) ** 2 / self.h**2

    def s_y(self, t: float) -> float:
        return self.h_x * math.sin(2.0 * self.h * t) / self.h

    def s_z(self, t: float) -> float:
        return (self.h_x**2 * math.cos(2.0 * self.h * t) + self.h_z**2) / self.h**2

    def j_eff(self, t: float) -> float:
        return self.j * self.s_y(t) ** 2

    def h_eff(self, t: float) -> float:
        return -2.0 * self.j * self.s_y(t) * (self.s_x(t) ** 2 + self.s_z(t) ** 2)

    def bond_phase(self, t: float) -> float:
        """Integral of j_eff from 0 to t."""
        val, _ = quad(self.j_eff, 0.0, t, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
        return val

    def field_phase(self, t: float) -> float:
        """Integral of h_eff from 0 to t."""
        val, _ = quad(self.h_eff, 0.0, t, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)
        return val


def _ising_diagonal_mpo(theta_bond: float, theta_field: float, basis: str) -> np.ndarray:
    """chi=2 MPO tensor of exp(-i sum_i [theta_bond s_i s_{i+1} + theta_field s_i])
    for a spin component diagonal in the given basis ('z' or 'y').

    Index order (left, right, out, in); the left virtual index selects the
    site's eigenstate projector.
    """
    if basis == "z":
        vecs = np.eye(2, dtype=complex)
    elif basis == "y":
        vecs = Y_BASIS
    else:
        raise ValueError(f"unknown basis {basis!r}")
    mpo = np.zeros((2, 2, 2, 2), dtype=complex)
    signs = (1.0, -1.0)
    for ia, sa in enumerate(signs):
        proj = np.outer(vecs[:, ia], vecs[:, ia].conj())
        for ib, sb in enumerate(signs):
            mpo[ia, ib] = np.exp(-1j * (theta_bond * sa * sb + theta_field * sa)) * proj
    return mpo


def _ring_exponential(theta_bond: float, theta_field: float, l_perp: int, basis: str) -> np.ndarray:
    """Dense exp(-i sum_ring [theta_bond s s' + theta_field s]) on one column."""
    s = spin_z_values(l_perp)
    d = 2**l_perp
    energy = np.zeros(d)
    if l_perp > 1:
        for m in range(l_perp):
            energy += theta_bond * s[m] * s[(m + 1) % l_perp]
    energy += theta_field * np.sum(s, axis=0)
    diag = np.exp(-1j * energy)
    if basis == "z":
        return np.diag(diag)
    rot = np.array([[1.0]], dtype=complex)
    for _ in range(l_perp):
        rot = np.kron(rot, Y_BASIS)
    return rot @ np.diag(diag) @ rot.conj().T


def _column_tensor_from_rows(w_col: np.ndarray, mpo: np.ndarray, l_perp: int) -> np.ndarray:
    """Stack one row MPO per site onto the column state w_col.

    Returns the uniform column MPS tensor with combined virtual index of
    dimension 2**l_perp on each side.
    """
    x = w_col.reshape((2,) * l_perp)
    for m in range(l_perp):
        # processed sites occupy leading triples (alpha, sigma, beta)
        x = np.tensordot(mpo, x, axes=([3], [3 * m]))
        x = np.moveaxis(x, [0, 1, 2], [3 * m, 3 * m + 2, 3 * m + 1])
    perm = (
        [3 * m for m in range(l_perp)]
        + [3 * m + 1 for m in range(l_perp)]
        + [3 * m + 2 for m in range(l_perp)]
    )
    d = 2**l_perp
    return x.transpose(perm).reshape(d, d, d)


def _apply_physical(op: np.ndarray, tensor: np.ndarray, l_perp: int) -> np.ndarray:
    """Apply a per-site 2x2 operator to the physical leg of a column tensor."""
    full = np.array([[1.0]], dtype=complex)
    for _ in range(l_perp):
        full = np.kron(full, op)
    return np.einsum("st,ltr->lsr", full, tensor, optimize=True)


def pdqpt_ansatz_state(spec: QuenchSpec, t: float) -> CanonicalState:
    """Strong-field (precession) ansatz state at time t.

    Rotating-frame interaction exponentials: a ring factor per column and a
    chi=2 MPO per row, all diagonal in the sigma-y basis with quadrature
    phases, followed by the free precession factor.
    """
    frame_par = PrecessionFrame(spec.h_x, spec.h_z, spec.j_par)
    frame_perp = PrecessionFrame(spec.h_x, spec.h_z, spec.j_perp)
    l = spec.l_perp
    v_col = column_product_vector(spec.v, l)

    ring = _ring_exponential(frame_perp.bond_phase(t), frame_perp.field_phase(t), l, "y")
    w_col = ring @ v_col
    mpo = _ising_diagonal_mpo(frame_par.bond_phase(t), frame_par.field_phase(t), "y")
    tensor = _column_tensor_from_rows(w_col, mpo, l)

    free = single_site_rotation(spec.h_x, spec.h_z, t)
    tensor = _apply_physical(free, tensor, l)

    gamma, lam = canonicalize_uniform(tensor)
    return uniform_to_two_column(gamma, lam, l, t)


def edqpt_ansatz_state(spec: QuenchSpec, t: float) -> CanonicalState:
    """Strong-interaction ansatz: exact z-diagonal interaction exponentials
    sandwiched between half-time free rotations."""
    l = spec.l_perp
    half = single_site_rotation(spec.h_x, spec.h_z, t / 2.0)
    v_rot = half @ spec.v
    w_col = _ring_exponential(spec.j_perp * t, 0.0, l, "z") @ column_product_vector(v_rot, l)
    mpo = _ising_diagonal_mpo(spec.j_par * t, 0.0, "z")
    tensor = _column_tensor_from_rows(w_col, mpo, l)
    tensor = _apply_physical(half, tensor, l)
    gamma, lam = canonicalize_uniform(tensor)
    return uniform_to_two_column(gamma, lam, l, t)
