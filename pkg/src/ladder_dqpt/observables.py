"""Observables of a canonical ladder state: fidelity transfer spectrum,
overlaps, excitation amplitudes, local density matrix, local fidelity
approximants and DQPT detection over a time series.

Single-bond quantities (overlap matrix, entanglement spectrum, tau) are
reported from the bond between unit cells (the B bond).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import SIGMA_X, SIGMA_Z, column_product_vector
from .state import CanonicalState, canonical_residual, entanglement_entropy
from .tensors import dense_eigs

N_EIGS_REPORTED = 8
TRANSFER_RESIDUAL_TOL = 1e-4


@dataclass
class TransferData:
    """Fidelity transfer matrix of the two-column cell and its ingredients."""

    t_f: np.ndarray
    eigs: np.ndarray
    o_a: np.ndarray
    o_b: np.ndarray
    tau: np.ndarray
    tau_11: float
    tau_1x: float


@dataclass
class LocalDensity:
    """One-site reduced density matrix and derived local observables."""

    rho: np.ndarray
    spectrum: np.ndarray
    m_x: float
    m_z: float


@dataclass
class TimeSeriesRecord:
    t: float
    f: float
    e_list: np.ndarray
    lambda_list: np.ndarray
    entropy: float
    o11_abs: float
    tau_ratio: float
    m_x: float
    m_z: float
    ldm_spectrum: np.ndarray
    f_k: dict[int, float] = field(default_factory=dict)
    max_discarded_weight: float = 0.0


@dataclass
class DqptEvent:
    time: float
    kind: str  # "crossing" | "degenerate"
    window: tuple[float, float] | None = None


def transfer_spectrum(state: CanonicalState, v: np.ndarray, check_residual: bool = True) -> TransferData:
    """Fidelity transfer data: per-sublattice T_s = o_s Lambda_s, spectrum of
    the two-column product, overlap matrices and excitation amplitudes."""
    if check_residual:
        res = canonical_residual(state)
        worst = max(res.values())
        if worst >= TRANSFER_RESIDUAL_TOL:
            raise ValueError(f"state is not canonical enough for transfer data: residual {worst:.3e}")
    v_col = column_product_vector(np.asarray(v, dtype=complex), state.l_perp)
    o_a = np.einsum("s,lsr->lr", v_col.conj(), state.gamma_a, optimize=True)
    o_b = np.einsum("s,lsr->lr", v_col.conj(), state.gamma_b, optimize=True)
    t_a = o_a * state.sqrt_lambda_a()[None, :]
    t_b = o_b * state.sqrt_lambda_b()[None, :]
    t_cell = t_a @ t_b
    eigs = dense_eigs(t_cell)

    # excitation amplitudes pair the cell-merged overlap matrix at the B bond
    # (o_cell Lambda_B = T_cell, the one-column structure of the product)
    # with the B-bond Schmidt probabilities
    o_cell = t_a @ o_b
    lam_b = state.lambda_b
    jmax = min(o_cell.shape[0], o_cell.shape[1], lam_b.size)
    tau = np.array(
        [abs(o_cell[0, j] * o_cell[j, 0]) * math.sqrt(lam_b[0] * lam_b[j]) for j in range(jmax)]
    )
    tau_11 = float(tau[0]) if tau.size else 0.0
    tau_1x = float(np.sum(tau[1:])) if tau.size > 1 else 0.0
    return TransferData(t_cell, eigs, o_a, o_b, tau, tau_11, tau_1x)


def fidelity_density(transfer: TransferData, l_perp: int) -> float:
    """f = -(1/l_perp) log max|e_i| for the two-column spectrum.

    Reduces to the one-column formula with doubled exponent when the two
    sublattices coincide.  Returns +inf if the whole spectrum vanished.
    """
    top = float(np.abs(transfer.eigs[0])) if transfer.eigs.size else 0.0
    if top <= 0.0:
        return math.inf
    return -math.log(top) / l_perp


def excitation_amplitudes(transfer: TransferData) -> tuple[float, float, float]:
    """(tau_11, tau_1x, tau_1x / tau_11); ratio is +inf when tau_11 = 0."""
    ratio = transfer.tau_1x / transfer.tau_11 if transfer.tau_11 > 0 else math.inf
    return transfer.tau_11, transfer.tau_1x, ratio


def _site_rho(rho_col: np.ndarray, site: int, l_perp: int) -> np.ndarray:
    a = 2**site
    b = 2 ** (l_perp - 1 - site)
    x = rho_col.reshape(a, 2, b, a, 2, b)
    return np.einsum("aibajb->ij", x, optimize=True)


#: tolerance between the two row-parity classes; the brick-wall lattice puts
#: a site's inter-column bond in exactly one Trotter parity, which splits the
#: classes at second order in the time step
CROSS_PARITY_TOL = 1e-4


def local_density_matrix(state: CanonicalState, site_tol: float = 1e-8) -> LocalDensity:
    """One-site reduced density matrix from the canonical environment.

    The one-column matrix is traced down to site 0.  Ring symmetry makes the
    sites of a column equivalent: shift-by-two equivalence (exact for every
    gate ordering) is asserted to ``site_tol``; adjacent rows are allowed the
    looser CROSS_PARITY_TOL Trotter split.  Magnetizations use spin-1/2
    normalization <sigma>/2.
    """
    rho_col = np.einsum(
        "l,lsr,r,ltr->st",
        state.lambda_a,
        state.gamma_b,
        state.lambda_b,
        state.gamma_b.conj(),
        optimize=True,
    )
    rho_col /= np.trace(rho_col).real
    site_rhos = [_site_rho(rho_col, m, state.l_perp) for m in range(state.l_perp)]
    rho0 = site_rhos[0]
    for m in range(1, state.l_perp):
        ref = site_rhos[m - 2] if m >= 2 else rho0
        tol = site_tol if m >= 2 else (site_tol if state.l_perp % 2 else CROSS_PARITY_TOL)
        dev = np.max(np.abs(site_rhos[m] - ref))
        if dev > tol:
            raise AssertionError(f"ring symmetry violated at site {m}: deviation {dev:.3e}")
    rho0 = 0.5 * (rho0 + rho0.conj().T)
    spectrum = np.sort(np.linalg.eigvalsh(rho0))[::-1]
    m_x = float(np.trace(rho0 @ SIGMA_X).real) / 2.0
    m_z = float(np.trace(rho0 @ SIGMA_Z).real) / 2.0
    return LocalDensity(rho0, spectrum, m_x, m_z)


def _a_form_tensors(state: CanonicalState) -> tuple[np.ndarray, np.ndarray]:
    """Left-canonical tensors Lambda_left * Gamma for both sublattices."""
    a_a = state.gamma_a * state.sqrt_lambda_b()[:, None, None]
    a_b = state.gamma_b * state.sqrt_lambda_a()[:, None, None]
    return a_a, a_b


def _cell_fixed_points(state: CanonicalState, tol: float = 1e-13, max_iter: int = 200):
    """Dominant transfer fixed points, refined from the canonical guesses.

    Returns (l_b, r_b, r_a, norm): left fixed point at the B bond, right
    fixed points at the B and A bonds, and the pairing (l_b|r_b).
    """
    a_a, a_b = _a_form_tensors(state)

    def right_col(t, x):
        return np.einsum("ldr,rk,mdk->lm", t, x, t.conj(), optimize=True)

    def left_col(t, x):
        return np.einsum("ldr,lm,mdk->rk", t.conj(), x, t, optimize=True)

    def refine(apply_map, x):
        for _ in range(max_iter):
            y = apply_map(x)
            y = 0.5 * (y + y.conj().T)
            y /= np.trace(y).real
            if np.max(np.abs(y - x)) < tol:
                return y
            x = y
        return x

    r_b = refine(lambda x: right_col(a_a, right_col(a_b, x)), np.diag(state.lambda_b).astype(complex))
    r_a = refine(lambda x: right_col(a_b, right_col(a_a, x)), np.diag(state.lambda_a).astype(complex))
    l_b = refine(lambda x: left_col(a_b, left_col(a_a, x)), np.eye(state.chi_b, dtype=complex))
    norm = np.trace(l_b.conj().T @ r_b).real
    return l_b, r_b, r_a, norm


def local_fidelity_fk(state: CanonicalState, v: np.ndarray, k: int) -> float:
    """Local projector approximant f_k = -(1/(k l_perp)) log <P_k>.

    <P_k> inserts |v><v| on every site of k consecutive columns; the
    single-column projector transfer factor is T_s = <v|A_s> so the k-column
    weight is a plain product of alternating one-column matrices closed by
    the state's dominant transfer fixed points.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    v_col = column_product_vector(np.asarray(v, dtype=complex), state.l_perp)
    a_a, a_b = _a_form_tensors(state)
    t_a = np.einsum("s,lsr->lr", v_col.conj(), a_a, optimize=True)
    t_b = np.einsum("s,lsr->lr", v_col.conj(), a_b, optimize=True)
    l_b, r_b, r_a, norm = _cell_fixed_points(state)
    prod = np.eye(state.chi_b, dtype=complex)
    for i in range(k):
        prod = prod @ (t_a if i % 2 == 0 else t_b)
    r_edge = r_b if k % 2 == 0 else r_a  # odd windows end at the in-cell bond
    val = np.trace(l_b.conj().T @ (prod @ r_edge @ prod.conj().T)).real / norm
    if not np.isfinite(val) or val < 1e-300:
        return math.inf
    return -math.log(val) / (k * state.l_perp)


def snapshot(
    state: CanonicalState,
    v: np.ndarray,
    k_list: tuple[int, ...] = (),
    max_discarded_weight: float = 0.0,
    check_residual: bool = True,
) -> TimeSeriesRecord:
    """Full per-time record of the observables used in the analysis."""
    transfer = transfer_spectrum(state, v, check_residual=check_residual)
    l_perp = state.l_perp
    f = fidelity_density(transfer, l_perp)
    e_list = np.zeros(N_EIGS_REPORTED, dtype=complex)
    n = min(N_EIGS_REPORTED, transfer.eigs.size)
    e_list[:n] = transfer.eigs[:n]
    n_lam = 2 ** (l_perp + 1)
    lam = state.lambda_b[:n_lam].copy()
    _, _, ratio = excitation_amplitudes(transfer)
    ldm = local_density_matrix(state)
    f_k = {k: local_fidelity_fk(state, v, k) for k in k_list}
    return TimeSeriesRecord(
        t=state.time,
        f=f,
        e_list=e_list,
        lambda_list=lam,
        entropy=entanglement_entropy(state.lambda_b),
        o11_abs=float(abs(transfer.o_b[0, 0])),
        tau_ratio=ratio,
        m_x=ldm.m_x,
        m_z=ldm.m_z,
        ldm_spectrum=ldm.spectrum,
        f_k=f_k,
        max_discarded_weight=max_discarded_weight,
    )


def _match_branches(prev: np.ndarray, eigs: np.ndarray) -> np.ndarray:
    """Continue branch values by nearest neighbors in the complex plane."""
    out = np.empty(prev.size, dtype=complex)
    used: set[int] = set()
    for i, p in enumerate(prev):
        dists = np.abs(eigs - p)
        for j in used:
            dists[j] = np.inf
        j = int(np.argmin(dists))
        used.add(j)
        out[i] = eigs[j]
    return out


def detect_dqpts(series, eps_deg: float = 1e-3) -> list[DqptEvent]:
    """Locate DQPTs in a time series of transfer spectra.

    Crossing events: linear-interpolated zeros of |e1|-|e2| between branch
    values continued by nearest neighbors in the complex plane.  Degenerate
    events: 1-|e2|/|e1| < eps_deg over >= 3 consecutive samples without a
    sign change; on refined series the plateau must additionally span three
    steps of the nominal grid, so that oversampled windows do not lower the
    duration bar.
    """
    records = series.records if hasattr(series, "records") else list(series)
    if len(records) < 3:
        raise ValueError("series must contain at least 3 samples")
    ts = np.array([r.t for r in records])
    n = len(records)
    spec = getattr(series, "spec", None)
    # bare record lists (e.g. re-detection from a file) infer the nominal
    # grid from the coarsest spacing present
    dt_ref = spec.dt if spec is not None else float(np.max(np.diff(ts)))
    min_duration = 2.0 * dt_ref * (1.0 - 1e-9)

    # gap between the instantaneous top-2 branches, re-matched locally: at
    # each sample take the two largest magnitudes, continue them to the next
    # sample by nearest neighbors in the complex plane, and compare there.
    # Exact zeros are bond-dimension padding and must not capture a branch.
    spectra = []
    for rec in records:
        eigs = np.asarray(rec.e_list, dtype=complex)
        spectra.append(eigs[np.abs(eigs) > 0])
    d = np.full(n, np.nan)        # ranked gap at each sample
    d_cont = np.full(n, np.nan)   # signed gap of the previous top-2, continued
    for i in range(n):
        if spectra[i].size >= 2:
            mags = np.sort(np.abs(spectra[i]))[::-1]
            d[i] = mags[0] - mags[1]
        if i + 1 < n and spectra[i].size >= 2 and spectra[i + 1].size >= 2:
            top2 = spectra[i][np.argsort(-np.abs(spectra[i]))[:2]]
            cont = _match_branches(top2, spectra[i + 1])
            d_cont[i + 1] = abs(cont[0]) - abs(cont[1])

    # magnitude-ranked degeneracy measure
    gap = np.full(n, np.nan)
    for i, rec in enumerate(records):
        mags = np.sort(np.abs(np.asarray(rec.e_list)))[::-1]
        if mags[0] > 0:
            gap[i] = 1.0 - mags[1] / mags[0]

    in_band = gap < eps_deg
    band_runs = []
    i = 0
    while i < n:
        if in_band[i]:
            j = i
            while j + 1 < n and in_band[j + 1]:
                j += 1
            if j - i + 1 >= 3 and ts[j] - ts[i] >= min_duration:
                band_runs.append((i, j))
            i = j + 1
        else:
            i += 1

    def inside_run(i0: int, i1: int) -> bool:
        return any(lo <= i0 and i1 <= hi for lo, hi in band_runs)

    # sign-change crossings; intervals fully interior to a degeneracy window
    # are magnitude noise (the pair is equal there to ~1e-11) and are dropped
    crossings: list[tuple[float, int]] = []
    for i in range(n - 1):
        d0, d1 = d[i], d_cont[i + 1]
        if np.isnan(d0) or np.isnan(d1):
            continue
        if d0 > 0.0 and d1 < 0.0 and not inside_run(i, i + 1):
            t_star = ts[i] + (ts[i + 1] - ts[i]) * d0 / (d0 - d1)
            crossings.append((float(t_star), i))

    events: list[DqptEvent] = []
    used: set[int] = set()

    # each window marks non-analytic points at its boundaries: a boundary
    # where the branch ordering swaps is a crossing, otherwise the contact is
    # degenerate; a window with no swap at all is a single grazing event
    for lo, hi in band_runs:
        window = (float(ts[lo]), float(ts[hi]))
        entry = next((k for k, (_, i) in enumerate(crossings) if i + 1 == lo), None)
        exit_ = next((k for k, (_, i) in enumerate(crossings) if i == hi), None)
        if entry is None and exit_ is None:
            j = lo + int(np.nanargmin(gap[lo : hi + 1]))
            events.append(DqptEvent(float(ts[j]), "degenerate", window))
            continue
        if entry is not None:
            used.add(entry)
            events.append(DqptEvent(crossings[entry][0], "crossing"))
        else:
            events.append(DqptEvent(float(ts[lo]), "degenerate", window))
        if exit_ is not None:
            used.add(exit_)
            events.append(DqptEvent(crossings[exit_][0], "crossing"))
        else:
            events.append(DqptEvent(float(ts[hi]), "degenerate", window))

    # remaining isolated crossings; a pair within one nominal step is a
    # grazing contact, not two transversal crossings
    rest = [c for k, c in enumerate(crossings) if k not in used]
    k = 0
    while k < len(rest):
        t_star, i = rest[k]
        if k + 1 < len(rest) and rest[k + 1][0] - t_star < min_duration:
            t_next, _ = rest[k + 1]
            mid = 0.5 * (t_star + t_next)
            events.append(DqptEvent(float(mid), "degenerate", (t_star, t_next)))
            k += 2
            continue
        events.append(DqptEvent(t_star, "crossing"))
        k += 1

    events.sort(key=lambda e: e.time)
    return events


def energy_density(state: CanonicalState, graph, spec) -> float:
    """Energy per column via the two-column reduced density matrices.

    Test helper for Trotter-conservation checks; builds dense pair
    Hamiltonians, so use only for small l_perp.
    """
    from .model import pair_hamiltonian_dense

    sqrt_la = state.sqrt_lambda_a()
    sqrt_lb = state.sqrt_lambda_b()

    def pair_energy(g_left, lam_left, center_sqrt, g_right, lam_right, parity):
        m = np.einsum("lsa,a,atr->lstr", g_left, center_sqrt, g_right, optimize=True)
        d2 = m.shape[1] * m.shape[2]
        m = m.reshape(m.shape[0], d2, m.shape[3])
        rho = np.einsum("l,lsr,r,ltr->st", lam_left, m, lam_right, m.conj(), optimize=True)
        rho /= np.trace(rho).real
        h = pair_hamiltonian_dense(graph, spec, parity)
        return float(np.trace(rho @ h).real)

    e_even = pair_energy(state.gamma_a, state.lambda_b, sqrt_la, state.gamma_b, state.lambda_b, "even")
    e_odd = pair_energy(state.gamma_b, state.lambda_a, sqrt_lb, state.gamma_a, state.lambda_a, "odd")
    return 0.5 * (e_even + e_odd)
