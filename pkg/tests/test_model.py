import numpy as np
import pytest
from scipy.linalg import expm

from ladder_dqpt.model import (
    NAMED_STATES,
    QuenchSpec,
    build_gate_pair,
    build_lattice,
    gate_dense_unitary,
    initial_column_state,
    pair_hamiltonian_dense,
)


def make_spec(**kw):
    base = dict(
        lattice_kind="square", l_perp=2, j_par=0.3, j_perp=0.7, h_x=0.4, h_z=0.2,
        v=NAMED_STATES["down"], dt=0.01, t_max=0.5,
    )
    base.update(kw)
    return QuenchSpec(**base)


class TestBuildLattice:
    def test_square_three(self):
        g = build_lattice("square", 3)
        assert set(g.ring_bonds) == {(0, 1), (1, 2), (2, 0)}
        assert g.inter_bonds_by_parity["even"] == [0, 1, 2]
        assert g.inter_bonds_by_parity["odd"] == [0, 1, 2]
        assert g.connectivity == 4

    def test_honeycomb_four(self):
        g = build_lattice("honeycomb", 4)
        assert set(g.ring_bonds) == {(0, 1), (1, 2), (2, 3), (3, 0)}
        assert g.inter_bonds_by_parity["even"] == [0, 2]
        assert g.inter_bonds_by_parity["odd"] == [1, 3]
        assert g.connectivity == 3

    def test_honeycomb_neighbor_count_is_three(self):
        # derived check: count neighbors per site over the assembled
        # two-column unit cell (rings + the inter bond from one parity side)
        g = build_lattice("honeycomb", 4)
        l = g.l_perp
        neighbor_count = {("A", m): 0 for m in range(l)}
        neighbor_count.update({("B", m): 0 for m in range(l)})
        for col in ("A", "B"):
            for m, mp in g.ring_bonds:
                neighbor_count[(col, m)] += 1
                neighbor_count[(col, mp)] += 1
        for m in g.inter_bonds_by_parity["even"]:  # A-B bonds inside the cell
            neighbor_count[("A", m)] += 1
            neighbor_count[("B", m)] += 1
        for m in g.inter_bonds_by_parity["odd"]:  # B-A' bonds across cells
            neighbor_count[("B", m)] += 1
            neighbor_count[("A", m)] += 1
        assert all(c == 3 for c in neighbor_count.values())

    def test_honeycomb_rows_partition(self):
        g = build_lattice("honeycomb", 6)
        even = set(g.inter_bonds_by_parity["even"])
        odd = set(g.inter_bonds_by_parity["odd"])
        assert even | odd == set(range(6))
        assert even & odd == set()

    def test_honeycomb_odd_width_rejected(self):
        with pytest.raises(ValueError):
            build_lattice("honeycomb", 3)

    def test_chain_has_no_ring(self):
        assert build_lattice("square", 1).ring_bonds == []


class TestInitialState:
    def test_down_state(self):
        st = initial_column_state(NAMED_STATES["down"], 3)
        vec = st.gamma_a.reshape(-1)
        assert vec[-1] == pytest.approx(1.0)  # down-down-down is the last index
        assert np.sum(np.abs(vec) ** 2) == pytest.approx(1.0)
        assert np.count_nonzero(np.abs(vec) > 1e-14) == 1

    def test_plus_x_amplitudes(self):
        st = initial_column_state(NAMED_STATES["plus_x"], 2)
        np.testing.assert_allclose(st.gamma_a.reshape(-1), 0.5 * np.ones(4), atol=1e-15)

    def test_norm_one(self):
        rng = np.random.default_rng(5)
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        v /= np.linalg.norm(v)
        st = initial_column_state(v, 3)
        norm = np.sum(np.abs(st.gamma_a) ** 2) * st.lambda_a[0]
        assert norm == pytest.approx(1.0, abs=1e-12)


class TestGatePair:
    def test_single_bond_phases(self):
        spec = make_spec(l_perp=1, j_par=0.8, j_perp=0.0, h_x=0.0, h_z=0.0)
        g = build_lattice("square", 1)
        gate = build_gate_pair(g, spec, 0.3, "even")
        theta = 0.8 * 0.3
        expected = np.exp(-1j * theta * np.array([1.0, -1.0, -1.0, 1.0]))
        np.testing.assert_allclose(gate.interaction_phases, expected, atol=1e-14)
        np.testing.assert_allclose(gate.field_half_step, np.eye(2), atol=1e-14)

    def test_honeycomb_even_gate_has_two_inter_terms(self):
        spec = make_spec(lattice_kind="honeycomb", l_perp=4, j_perp=0.0, h_x=0.0, h_z=0.0)
        g = build_lattice("honeycomb", 4)
        gate = build_gate_pair(g, spec, 0.1, "even")
        # with only inter terms the phase exponent per z-config is
        # j_par * dt * sum over 2 bonds of +-1 -> distinct values {-2,0,2}*j*dt
        angles = np.angle(gate.interaction_phases)
        uniq = np.unique(np.round(angles / (spec.j_par * 0.1), 9))
        np.testing.assert_allclose(uniq, [-2.0, 0.0, 2.0])

    def test_gate_matches_dense_exponential_to_third_order(self):
        # oracle: dense expm of the pair Hamiltonian; halving dt_eff must
        # shrink the defect by about 2^3
        spec = make_spec(l_perp=2)
        g = build_lattice("square", 2)
        h = pair_hamiltonian_dense(g, spec, "even")

        def defect(dt_eff):
            gate = build_gate_pair(g, spec, dt_eff, "even")
            exact = expm(-1j * h * dt_eff)
            return np.max(np.abs(gate_dense_unitary(gate) - exact))

        d1, d2 = defect(0.1), defect(0.05)
        assert d1 / d2 == pytest.approx(8.0, rel=0.25)

    def test_unitarity(self):
        spec = make_spec(l_perp=2)
        g = build_lattice("square", 2)
        gate = build_gate_pair(g, spec, 0.07, "odd")
        u = gate_dense_unitary(gate)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(16), atol=1e-12)
        np.testing.assert_allclose(np.abs(gate.interaction_phases), 1.0, atol=1e-12)

    def test_even_plus_odd_reproduces_hamiltonian_density(self):
        # the half-weighted single-column terms must sum to weight one over a
        # full even+odd sweep (unit cell periodically identified)
        for kind, l in (("square", 3), ("honeycomb", 4)):
            spec = make_spec(lattice_kind=kind, l_perp=l)
            g = build_lattice(kind, l)
            h_sum = pair_hamiltonian_dense(g, spec, "even") + pair_hamiltonian_dense(g, spec, "odd")
            h_ref = _unit_cell_hamiltonian(g, spec)
            np.testing.assert_allclose(h_sum, h_ref, atol=1e-12)

    def test_global_spin_flip_symmetry(self):
        spec = make_spec(l_perp=3, h_z=0.0)
        g = build_lattice("square", 3)
        gate = build_gate_pair(g, spec, 0.11, "even")
        phases = gate.interaction_phases
        flipped = phases[::-1]  # global flip reverses the combined z index
        np.testing.assert_allclose(phases, flipped, atol=1e-14)


def _unit_cell_hamiltonian(graph, spec):
    """Eq.-style density over the periodically identified two-column cell:
    both rings, both inter-bond sets, all fields at weight one."""
    from ladder_dqpt.model import ID2, SIGMA_X, SIGMA_Z

    l = graph.l_perp
    n = 2 * l
    dim = 2**n

    def op_at(op, site):
        out = np.array([[1.0]], dtype=complex)
        for j in range(n):
            out = np.kron(out, op if j == site else ID2)
        return out

    h = np.zeros((dim, dim), dtype=complex)
    for col in (0, 1):
        for m, mp in graph.ring_bonds:
            h += spec.j_perp * op_at(SIGMA_Z, col * l + m) @ op_at(SIGMA_Z, col * l + mp)
        for m in range(l):
            h += spec.h_x * op_at(SIGMA_X, col * l + m) + spec.h_z * op_at(SIGMA_Z, col * l + m)
    for m in graph.inter_bonds_by_parity["even"]:
        h += spec.j_par * op_at(SIGMA_Z, m) @ op_at(SIGMA_Z, l + m)
    for m in graph.inter_bonds_by_parity["odd"]:
        # across-cell bond, periodically identified B -> A
        h += spec.j_par * op_at(SIGMA_Z, l + m) @ op_at(SIGMA_Z, m)
    return h


class TestQuenchSpec:
    def test_defaults(self):
        spec = make_spec(l_perp=3)
        assert spec.chi_max == 64
        spec5 = make_spec(l_perp=5)
        assert spec5.chi_max == 64
        spec6 = make_spec(l_perp=6)
        assert spec6.chi_max == 128

    def test_validation(self):
        with pytest.raises(ValueError):
            make_spec(lattice_kind="triangular")
        with pytest.raises(ValueError):
            make_spec(lattice_kind="honeycomb", l_perp=3)
        with pytest.raises(ValueError):
            make_spec(v=np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            make_spec(dt=-0.1)
        with pytest.raises(ValueError):
            make_spec(dt=2.0, t_max=1.0)
        with pytest.raises(ValueError):
            make_spec(svd_method="magic")
        with pytest.raises(ValueError):
            make_spec(k_list=(0,))
