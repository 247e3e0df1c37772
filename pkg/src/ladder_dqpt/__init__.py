"""Simulator and analysis toolkit for dynamical quantum phase transitions of
the quantum Ising model on semi-infinite ladders."""

from .analytic import (
    LdmParams,
    PrecessionFrame,
    classical_chain_solution,
    edqpt_ansatz_state,
    ldm_closed_form,
    ldm_spectrum_magnetization,
    pdqpt_ansatz_state,
)
from .evolution import TimeSeries, TruncationAbort, apply_gate_step, evolve, recanonicalize
from .exact import (
    FiniteLattice,
    exact_evolve,
    exact_rate_and_locals,
    star_lattice,
    torus_lattice,
)
from .model import (
    GatePair,
    LatticeGraph,
    QuenchSpec,
    build_gate_pair,
    build_lattice,
    default_chi_max,
    initial_column_state,
)
from .observables import (
    DqptEvent,
    TimeSeriesRecord,
    TransferData,
    detect_dqpts,
    excitation_amplitudes,
    fidelity_density,
    local_density_matrix,
    local_fidelity_fk,
    snapshot,
    transfer_spectrum,
)
from .runio import RunManifest, export_series, load_config, parse_series, run
from .state import CanonicalState, canonical_residual
from .tensors import SvdResult, dense_eigs, randomized_svd, truncated_svd

__version__ = "0.1.0"

__all__ = [
    "CanonicalState",
    "DqptEvent",
    "FiniteLattice",
    "GatePair",
    "LatticeGraph",
    "LdmParams",
    "PrecessionFrame",
    "QuenchSpec",
    "RunManifest",
    "SvdResult",
    "TimeSeries",
    "TimeSeriesRecord",
    "TransferData",
    "TruncationAbort",
    "apply_gate_step",
    "build_gate_pair",
    "build_lattice",
    "canonical_residual",
    "classical_chain_solution",
    "default_chi_max",
    "dense_eigs",
    "detect_dqpts",
    "edqpt_ansatz_state",
    "evolve",
    "exact_evolve",
    "exact_rate_and_locals",
    "excitation_amplitudes",
    "export_series",
    "fidelity_density",
    "initial_column_state",
    "ldm_closed_form",
    "ldm_spectrum_magnetization",
    "load_config",
    "local_density_matrix",
    "local_fidelity_fk",
    "parse_series",
    "pdqpt_ansatz_state",
    "randomized_svd",
    "recanonicalize",
    "run",
    "snapshot",
    "star_lattice",
    "torus_lattice",
    "transfer_spectrum",
    "truncated_svd",
    "__version__",
]
