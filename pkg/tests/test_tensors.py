import numpy as np
import pytest
import scipy.linalg

from ladder_dqpt.tensors import dense_eigs, randomized_svd, truncated_svd


def random_complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestTruncatedSvd:
    def test_identity(self):
        res = truncated_svd(np.eye(4), chi_max=4)
        np.testing.assert_allclose(res.singular_values, np.ones(4))
        assert res.discarded_weight == 0.0

    def test_diagonal_truncation(self):
        res = truncated_svd(np.diag([3.0, 2.0, 1.0, 0.0]), chi_max=2)
        np.testing.assert_allclose(res.singular_values, [3.0, 2.0])
        assert res.discarded_weight == pytest.approx(1.0)

    def test_full_rank_matches_independent_svd(self):
        # independent reference: scipy with the gesvd LAPACK driver
        rng = np.random.default_rng(7)
        m = random_complex(rng, (64, 64))
        res = truncated_svd(m, chi_max=64)
        u, s, vh = scipy.linalg.svd(m, lapack_driver="gesvd")
        np.testing.assert_allclose(res.singular_values, s, atol=1e-10)
        rebuilt = res.left @ np.diag(res.singular_values) @ res.right
        reference = u @ np.diag(s) @ vh
        np.testing.assert_allclose(rebuilt, reference, atol=1e-10)

    def test_orthonormal_factors(self):
        rng = np.random.default_rng(3)
        m = random_complex(rng, (40, 24))
        res = truncated_svd(m, chi_max=10)
        np.testing.assert_allclose(res.left.conj().T @ res.left, np.eye(10), atol=1e-10)
        np.testing.assert_allclose(res.right @ res.right.conj().T, np.eye(10), atol=1e-10)

    def test_reconstruction_error_equals_discarded_weight(self):
        rng = np.random.default_rng(11)
        m = random_complex(rng, (30, 30))
        res = truncated_svd(m, chi_max=12)
        rebuilt = res.left @ np.diag(res.singular_values) @ res.right
        err2 = np.sum(np.abs(m - rebuilt) ** 2)
        assert err2 == pytest.approx(res.discarded_weight, rel=1e-10)

    def test_full_rank_reconstructs(self):
        rng = np.random.default_rng(5)
        m = random_complex(rng, (17, 9))
        res = truncated_svd(m, chi_max=20)
        rebuilt = res.left @ np.diag(res.singular_values) @ res.right
        assert np.linalg.norm(rebuilt - m) < 1e-10

    def test_descending_nonnegative(self):
        rng = np.random.default_rng(13)
        res = truncated_svd(random_complex(rng, (25, 25)), chi_max=25)
        s = res.singular_values
        assert np.all(s >= 0)
        assert np.all(np.diff(s) <= 0)

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            truncated_svd(np.array([[np.nan, 0.0], [0.0, 1.0]]), chi_max=2)
        with pytest.raises(ValueError):
            truncated_svd(np.eye(3), chi_max=0)
        with pytest.raises(ValueError):
            truncated_svd(np.zeros((2, 2, 2)), chi_max=1)


class TestRandomizedSvd:
    def test_exact_low_rank(self):
        rng = np.random.default_rng(21)
        u = np.linalg.qr(random_complex(rng, (32, 2)))[0]
        v = np.linalg.qr(random_complex(rng, (32, 2)))[0]
        m = 1.0 * np.outer(u[:, 0], v[:, 0].conj()) + 0.5 * np.outer(u[:, 1], v[:, 1].conj())
        res = randomized_svd(m, chi_max=2)
        np.testing.assert_allclose(res.singular_values, [1.0, 0.5], atol=1e-10)

    def test_mid_quench_matrix_vs_exact(self):
        # 128x128 block from a short two-column evolution, checked against
        # the exact SVD at 1e-6 relative on the kept values
        m = _mid_quench_matrix()
        assert m.shape == (128, 128)
        res = randomized_svd(m, chi_max=32)
        exact = truncated_svd(m, chi_max=32)
        rel = np.abs(res.singular_values - exact.singular_values) / exact.singular_values[0]
        assert np.max(rel) < 1e-6

    def test_no_truncation_agrees_with_exact(self):
        rng = np.random.default_rng(2)
        m = random_complex(rng, (24, 24))
        res = randomized_svd(m, chi_max=24, oversampling=0, power_iterations=4)
        exact = truncated_svd(m, chi_max=24)
        np.testing.assert_allclose(res.singular_values, exact.singular_values, atol=1e-8)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(9)
        m = random_complex(rng, (50, 50))
        r1 = randomized_svd(m, chi_max=8, seed=123)
        r2 = randomized_svd(m, chi_max=8, seed=123)
        np.testing.assert_array_equal(r1.left, r2.left)
        np.testing.assert_array_equal(r1.singular_values, r2.singular_values)

    def test_dimension_violation(self):
        with pytest.raises(ValueError):
            randomized_svd(np.eye(8), chi_max=4, oversampling=10)


class TestDenseEigs:
    def test_diagonal(self):
        e = dense_eigs(np.diag([1.0, -0.5j]))
        np.testing.assert_allclose(e, [1.0, -0.5j])

    def test_symmetric_flip(self):
        e = dense_eigs(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(e, [1.0, -1.0], atol=1e-12)

    def test_mid_quench_transfer_vs_independent_solver(self):
        m = _mid_quench_transfer()
        ours = dense_eigs(m)
        theirs = scipy.linalg.eig(m, right=False)
        theirs = theirs[np.lexsort((-theirs.imag, -theirs.real, -np.abs(theirs)))]
        np.testing.assert_allclose(ours, theirs, atol=1e-8)

    def test_transpose_same_multiset(self):
        rng = np.random.default_rng(31)
        m = random_complex(rng, (12, 12))
        a = np.sort_complex(dense_eigs(m))
        b = np.sort_complex(dense_eigs(m.T))
        np.testing.assert_allclose(a, b, atol=1e-8)

    def test_cap(self):
        with pytest.raises(ValueError):
            dense_eigs(np.eye(10), cap=8)


def _mid_quench_state(l_perp=2, chi=32, n_steps=12):
    from ladder_dqpt import QuenchSpec, evolve

    spec = QuenchSpec(
        "square", l_perp, 1.0, 1.0, 0.1, 0.0,
        np.array([1.0, 1.0]) / np.sqrt(2.0),
        dt=0.05, t_max=n_steps * 0.05, chi_max=chi, svd_method="exact",
    )
    return evolve(spec)


def _mid_quench_matrix():
    """Deterministic 128x128 two-column block from a short strong-coupling run."""
    from ladder_dqpt.evolution import _apply_field
    from ladder_dqpt.model import QuenchSpec, build_gate_pair, build_lattice, initial_column_state
    from ladder_dqpt.evolution import apply_gate_step

    v = np.array([1.0, 1.0]) / np.sqrt(2.0)
    spec = QuenchSpec("square", 2, 1.0, 1.0, 0.3, 0.0, v, dt=0.05, t_max=1.0,
                      chi_max=32, svd_method="exact")
    graph = build_lattice("square", 2)
    even = build_gate_pair(graph, spec, 0.05, "even")
    odd = build_gate_pair(graph, spec, 0.05, "odd")
    state = initial_column_state(v, 2)
    for _ in range(16):
        state, _ = apply_gate_step(state, even, 32, "exact")
        state, _ = apply_gate_step(state, odd, 32, "exact")
    # assemble the gated two-column block exactly as the engine does
    d = state.dim
    sq_b = state.sqrt_lambda_b()
    sq_a = state.sqrt_lambda_a()
    left = state.gamma_a * sq_b[:, None, None] * sq_a[None, None, :]
    right = state.gamma_b * sq_b[None, None, :]
    theta = np.tensordot(left, right, axes=([2], [0]))
    theta = _apply_field(theta, even.field_half_step, 4)
    chi = theta.shape[0]
    theta = theta.reshape(chi, d * d, chi) * even.interaction_phases[None, :, None]
    theta = theta.reshape(chi, d, d, chi)
    theta = _apply_field(theta, even.field_half_step, 4)
    m = theta.reshape(chi * d, d * chi)
    if m.shape != (128, 128):  # chi saturated at 32 after 10 sweeps
        raise AssertionError(f"unexpected fixture shape {m.shape}")
    return m


def _mid_quench_transfer():
    from ladder_dqpt import transfer_spectrum

    series = _mid_quench_state()
    # rebuild the transfer matrix from the final state of a fresh evolution
    from ladder_dqpt import QuenchSpec, evolve
    from ladder_dqpt.evolution import _gate_triple, _sweep
    from ladder_dqpt.model import build_lattice, initial_column_state

    v = np.array([1.0, 1.0]) / np.sqrt(2.0)
    spec = series.spec
    graph = build_lattice(spec.lattice_kind, spec.l_perp)
    state = initial_column_state(v, spec.l_perp)
    gates = _gate_triple(graph, spec, spec.dt)
    for _ in range(12):
        state, _, _, _ = _sweep(state, gates, spec.chi_max, "exact", 0, 1e-2, False)
    return transfer_spectrum(state, v, check_residual=False).t_f
