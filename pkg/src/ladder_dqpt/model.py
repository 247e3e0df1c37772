"""Lattices, quench definitions and Trotter gate construction.

Conventions: a "column" is a transverse ring of l_perp sites coupled by
j_perp; adjacent columns are coupled row-by-row with j_par along the infinite
direction.  Site 0 of a column is the most significant bit of the combined
physical index (numpy kron order).  Spin-z eigenvalues are +1 for index 0
(up) and -1 for index 1 (down).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .state import CanonicalState

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

#: named initial local states accepted by configs
NAMED_STATES = {
    "up": np.array([1.0, 0.0], dtype=complex),
    "down": np.array([0.0, 1.0], dtype=complex),
    "plus_x": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
    "minus_x": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
}


def default_chi_max(l_perp: int) -> int:
    """Bond-dimension policy: 64 up to four-site columns, 2**(l_perp+1) above."""
    return 64 if l_perp <= 4 else 2 ** (l_perp + 1)


@dataclass
class QuenchSpec:
    """Full experiment definition for one semi-infinite ladder quench."""

    lattice_kind: str
    l_perp: int
    j_par: float
    j_perp: float
    h_x: float
    h_z: float
    v: np.ndarray
    dt: float = 0.01
    t_max: float = 1.0
    chi_max: int | None = None
    svd_method: str = "randomized"
    refine: bool = False
    k_list: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.lattice_kind not in ("square", "honeycomb"):
            raise ValueError(f"unknown lattice_kind {self.lattice_kind!r}")
        if self.l_perp < 1:
            raise ValueError("l_perp must be a positive integer")
        if self.lattice_kind == "honeycomb" and self.l_perp % 2:
            raise ValueError("honeycomb requires even l_perp")
        self.v = np.asarray(self.v, dtype=complex)
        if self.v.shape != (2,):
            raise ValueError("v must be a complex 2-vector")
        if abs(np.linalg.norm(self.v) - 1.0) > 1e-12:
            raise ValueError("v must be normalized to 1e-12")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")
        if self.dt > self.t_max:
            raise ValueError("dt must not exceed t_max")
        if self.chi_max is None:
            self.chi_max = default_chi_max(self.l_perp)
        if self.chi_max < 1:
            raise ValueError("chi_max must be a positive integer")
        if self.svd_method not in ("exact", "randomized"):
            raise ValueError(f"unknown svd_method {self.svd_method!r}")
        self.k_list = tuple(int(k) for k in self.k_list)
        if any(k < 1 for k in self.k_list):
            raise ValueError("k_list entries must be >= 1")


@dataclass
class LatticeGraph:
    """Bond lists of the two-column unit cell.

    ring_bonds: (m, m') pairs within one column (periodic ring).
    inter_bonds_by_parity: rows carrying a column-to-column bond for the even
    and the odd gate.  connectivity: number of neighbors per site.
    """

    kind: str
    l_perp: int
    ring_bonds: list[tuple[int, int]]
    inter_bonds_by_parity: dict[str, list[int]]
    connectivity: int


def build_lattice(kind: str, l_perp: int) -> LatticeGraph:
    """Square or brick-wall honeycomb ladder of width l_perp.

    Honeycomb inter-column bonds sit on even rows for even-parity gates and
    on odd rows for odd-parity gates, which realizes connectivity 3.
    """
    if l_perp < 1:
        raise ValueError("l_perp must be >= 1")
    ring = [] if l_perp == 1 else [(m, (m + 1) % l_perp) for m in range(l_perp)]
    if kind == "square":
        inter = {"even": list(range(l_perp)), "odd": list(range(l_perp))}
        connectivity = 4
    elif kind == "honeycomb":
        if l_perp % 2:
            raise ValueError("honeycomb requires even l_perp")
        inter = {
            "even": [m for m in range(l_perp) if m % 2 == 0],
            "odd": [m for m in range(l_perp) if m % 2 == 1],
        }
        connectivity = 3
    else:
        raise ValueError(f"unknown lattice kind {kind!r}")
    return LatticeGraph(kind, l_perp, ring, inter, connectivity)


def column_product_vector(v: np.ndarray, l_perp: int) -> np.ndarray:
    """Tensor power of the local state over one column (site 0 = MSB)."""
    out = np.array([1.0], dtype=complex)
    for _ in range(l_perp):
        out = np.kron(out, v)
    return out


def initial_column_state(v: np.ndarray, l_perp: int) -> CanonicalState:
    """chi=1 product state |v>^(x l_perp) per column, both sublattices equal."""
    v = np.asarray(v, dtype=complex)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("v must be normalized")
    gamma = column_product_vector(v, l_perp).reshape(1, 2**l_perp, 1)
    lam = np.array([1.0])
    return CanonicalState(gamma.copy(), lam.copy(), gamma.copy(), lam.copy(), l_perp, 0.0)


def spin_z_values(l_perp: int) -> np.ndarray:
    """(l_perp, 2**l_perp) array of sigma-z eigenvalues per site and basis state."""
    d = 2**l_perp
    idx = np.arange(d)
    return np.array([1.0 - 2.0 * ((idx >> (l_perp - 1 - m)) & 1) for m in range(l_perp)])


@dataclass
class GatePair:
    """Factorized two-column Trotter gate exp(-i h dt_eff), split as
    field(dt_eff/2) * interaction(dt_eff) * field(dt_eff/2).

    field_half_step: single-site 2x2 unitary applied to every site of both
    columns.  interaction_phases: diagonal of the interaction exponential in
    the z basis, length 2**(2 l_perp), combined index (sigma_left, sigma_right).
    """

    field_half_step: np.ndarray
    interaction_phases: np.ndarray
    parity: str
    l_perp: int
    dt_eff: float


def single_site_rotation(h_x: float, h_z: float, tau: float) -> np.ndarray:
    """exp(-i (h_x sigma_x + h_z sigma_z) tau), in closed form."""
    h = np.hypot(h_x, h_z)
    if h == 0.0 or tau == 0.0:
        return ID2.copy()
    n_op = (h_x * SIGMA_X + h_z * SIGMA_Z) / h
    return np.cos(h * tau) * ID2 - 1j * np.sin(h * tau) * n_op


def interaction_energy_table(graph: LatticeGraph, j_par: float, j_perp: float, parity: str) -> np.ndarray:
    """z-basis diagonal of the two-column gate interaction Hamiltonian.

    Inter-column bonds on the parity's rows enter with full weight; each
    column's ring enters with weight 1/2 (the other half belongs to the gate
    of opposite parity touching the same column).
    """
    l = graph.l_perp
    s = spin_z_values(l)
    d = 2**l
    energy = np.zeros((d, d))
    for m in graph.inter_bonds_by_parity[parity]:
        energy += j_par * np.outer(s[m], s[m])
    ring = np.zeros(d)
    for m, mp in graph.ring_bonds:
        ring += s[m] * s[mp]
    energy += 0.5 * j_perp * (ring[:, None] + ring[None, :])
    return energy.reshape(-1)


def build_gate_pair(graph: LatticeGraph, spec: QuenchSpec, dt_eff: float, parity: str) -> GatePair:
    """Trotterized two-column gate for the given parity and effective step."""
    if dt_eff <= 0:
        raise ValueError("dt_eff must be positive")
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    # h_field carries weight 1/2 per gate, and the σ-level factor realizes
    # exp(-i h_field dt_eff / 2), hence tau = dt_eff / 4 per site.
    field = single_site_rotation(spec.h_x, spec.h_z, dt_eff / 4.0)
    energy = interaction_energy_table(graph, spec.j_par, spec.j_perp, parity)
    phases = np.exp(-1j * dt_eff * energy)
    return GatePair(field, phases, parity, graph.l_perp, dt_eff)


def pair_hamiltonian_dense(graph: LatticeGraph, spec: QuenchSpec, parity: str) -> np.ndarray:
    """Dense two-column gate Hamiltonian h = h_int + h_field on 2*l_perp spins.

    Test helper: exact reference for the Trotter factors.
    """
    l = graph.l_perp
    n = 2 * l
    dim = 2**n

    def op_at(op: np.ndarray, site: int) -> np.ndarray:
        out = np.array([[1.0]], dtype=complex)
        for j in range(n):
            out = np.kron(out, op if j == site else ID2)
        return out

    h = np.zeros((dim, dim), dtype=complex)
    for m in graph.inter_bonds_by_parity[parity]:
        h += spec.j_par * op_at(SIGMA_Z, m) @ op_at(SIGMA_Z, l + m)
    for col in (0, 1):
        for m, mp in graph.ring_bonds:
            h += 0.5 * spec.j_perp * op_at(SIGMA_Z, col * l + m) @ op_at(SIGMA_Z, col * l + mp)
        for m in range(l):
            h += 0.5 * (
                spec.h_x * op_at(SIGMA_X, col * l + m) + spec.h_z * op_at(SIGMA_Z, col * l + m)
            )
    return h


def gate_dense_unitary(gate: GatePair) -> np.ndarray:
    """Assemble the GatePair factors into a dense 2**(2 l_perp) unitary."""
    l = gate.l_perp
    f = np.array([[1.0]], dtype=complex)
    for _ in range(2 * l):
        f = np.kron(f, gate.field_half_step)
    u_int = np.diag(gate.interaction_phases.astype(complex))
    return f @ u_int @ f
