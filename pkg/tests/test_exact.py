import numpy as np
import pytest

from ladder_dqpt.analytic import classical_chain_solution
from ladder_dqpt.exact import (
    FiniteLattice,
    dense_hamiltonian,
    exact_evolve,
    exact_rate_and_locals,
    star_lattice,
    torus_lattice,
)
from ladder_dqpt.model import NAMED_STATES


class TestExactEvolve:
    def test_single_spin_rabi(self):
        lattice = FiniteLattice(1, [], h_x=1.0, h_z=0.0)
        psi = exact_evolve(lattice, NAMED_STATES["down"], 0.7, method="dense")
        expected = np.array([-1j * np.sin(0.7), np.cos(0.7)])
        phase = psi[1] / expected[1]
        np.testing.assert_allclose(psi, expected * phase, atol=1e-12)
        assert abs(abs(phase) - 1.0) < 1e-12

    def test_classical_ring_return_amplitude(self):
        # cross-path with the transfer-matrix solution: the N-site ring
        # return amplitude is the trace of the N-th transfer power
        n, j, t = 8, 1.0, 0.63
        bonds = [(i, (i + 1) % n, j) for i in range(n)]
        lattice = FiniteLattice(n, bonds, h_x=0.0, h_z=0.0)
        psi0 = exact_evolve(lattice, NAMED_STATES["plus_x"], 0.0)
        psi = exact_evolve(lattice, NAMED_STATES["plus_x"], t, method="splitting", steps=10)
        amp = abs(np.vdot(psi0, psi))
        expected = abs(np.cos(j * t) ** n + (-1j * np.sin(j * t)) ** n)
        assert amp == pytest.approx(expected, abs=1e-10)
        # and the rate density approaches the classical chain value
        f_exact, _, _ = classical_chain_solution(j, t)
        f_n = -np.log(amp**2) / n
        assert abs(f_n - f_exact) < 0.2

    def test_norm_conserved(self):
        lattice = torus_lattice("square", 3, 3, 0.8, 0.5, 0.4, 0.2)
        psi = exact_evolve(lattice, NAMED_STATES["down"], 0.5, method="splitting")
        assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)

    def test_backends_agree(self):
        lattice = torus_lattice("square", 2, 4, 0.7, 0.4, 0.6, 0.3)
        psi_dense = exact_evolve(lattice, NAMED_STATES["down"], 0.5, method="dense")
        psi_split = exact_evolve(lattice, NAMED_STATES["down"], 0.5, method="splitting")
        assert np.max(np.abs(psi_dense - psi_split)) < 1e-9

    def test_spin_cap(self):
        with pytest.raises(ValueError):
            FiniteLattice(23, [], h_x=0.0, h_z=0.0)

    def test_dense_hamiltonian_hermitian(self):
        lattice = torus_lattice("honeycomb", 2, 2, 0.5, 0.3, 0.2, 0.1)
        h = dense_hamiltonian(lattice)
        np.testing.assert_allclose(h, h.conj().T, atol=1e-14)


class TestExactRateAndLocals:
    def test_time_zero(self):
        lattice = torus_lattice("square", 3, 4, 1.0, 1.0, 0.1, 0.0)
        res = exact_rate_and_locals(lattice, NAMED_STATES["plus_x"], 0.0, k_list=(1, 2))
        assert res.rate == pytest.approx(0.0, abs=1e-12)
        assert res.f_k[1] == pytest.approx(0.0, abs=1e-12)
        assert res.f_k[2] == pytest.approx(0.0, abs=1e-12)

    def test_f1_locality_across_sizes(self):
        # short-time f_1 is a local quantity: torus length barely matters
        v = NAMED_STATES["plus_x"]
        small = torus_lattice("square", 3, 4, 1.0, 1.0, 0.1, 0.0)
        large = torus_lattice("square", 3, 6, 1.0, 1.0, 0.1, 0.0)
        r_small = exact_rate_and_locals(small, v, 0.5, k_list=(1,), method="splitting")
        r_large = exact_rate_and_locals(large, v, 0.5, k_list=(1,), method="splitting")
        assert r_small.f_k[1] == pytest.approx(r_large.f_k[1], abs=1e-3)

    def test_star_graph_magnetization(self):
        lattice = star_lattice(4, 0.5, 0.0, 0.0)
        res = exact_rate_and_locals(lattice, NAMED_STATES["plus_x"], 0.9, method="dense")
        assert res.m_x == pytest.approx(np.cos(2 * 0.5 * 0.9) ** 4 / 2.0, abs=1e-12)

    def test_honeycomb_torus_bond_count(self):
        lattice = torus_lattice("honeycomb", 4, 4, 1.0, 1.0, 0.1, 0.0)
        ring = sum(1 for i, j, _ in lattice.bonds if abs(i - j) in (1, 3) and i // 4 == j // 4)
        inter = len(lattice.bonds) - ring
        assert ring == 4 * 4       # full rings
        assert inter == 4 * 2      # two rows per column pair
        with pytest.raises(ValueError):
            torus_lattice("honeycomb", 4, 3, 1.0, 1.0, 0.1, 0.0)
