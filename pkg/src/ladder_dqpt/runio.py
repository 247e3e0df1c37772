"""Config parsing, experiment orchestration and structured outputs.

Configs are INI-style key=value files with [lattice], [quench], [numerics],
[output] sections (plus [sweep]/[oracle] for those modes).  Series tables are
CSV with a mandatory header and all values printed as positional decimals
with 12 significant digits; events and metadata are line-oriented key=value
documents.
"""

from __future__ import annotations

import configparser
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .analytic import edqpt_ansatz_state, pdqpt_ansatz_state
from .evolution import TimeSeries, evolve
from .exact import torus_lattice
from .model import NAMED_STATES, QuenchSpec
from .observables import DqptEvent, TimeSeriesRecord, detect_dqpts, snapshot

MODES = ("evolve", "ansatz-p", "ansatz-e", "oracle", "sweep")
N_EIGS = 8


class ConfigError(ValueError):
    """Configuration problem, annotated with the offending field."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass
class RunManifest:
    spec: QuenchSpec
    mode: str = "evolve"
    sweep_values: tuple[int, ...] = ()
    out_dir: str = "."
    prefix: str = "run"
    seed: int = 0
    jobs: int = 1
    eps_deg: float = 1e-3
    oracle_l_par: int = 6

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError("mode", f"unknown mode {self.mode!r}")
        if self.sweep_values and self.mode != "sweep":
            raise ConfigError("sweep", "sweep values given outside sweep mode")
        if self.mode == "sweep" and not self.sweep_values:
            raise ConfigError("sweep.l_perp_values", "sweep mode needs l_perp values")


def _parse_state(text: str):
    text = text.strip()
    if text in NAMED_STATES:
        return NAMED_STATES[text]
    try:
        parts = [complex(p.strip().replace(" ", "")) for p in text.split(",")]
    except ValueError as err:
        raise ConfigError("quench.initial_state", f"cannot parse {text!r}: {err}") from None
    if len(parts) != 2:
        raise ConfigError("quench.initial_state", "expected a name or two amplitudes")
    vec = np.array(parts, dtype=complex)
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ConfigError("quench.initial_state", "zero vector")
    return vec / norm


def _get(cfg, section: str, key: str, cast, default=None, required=False):
    if not cfg.has_option(section, key):
        if required:
            raise ConfigError(f"{section}.{key}", "missing required key")
        return default
    raw = cfg.get(section, key)
    try:
        return cast(raw)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}: {err}") from None


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(p) for p in text.split(","))


def load_config(path: str | os.PathLike, mode: str = "evolve") -> RunManifest:
    """Parse a config file into a RunManifest (spec validated)."""
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cfg.read(path)
    if not read:
        raise ConfigError(str(path), "config file not found or unreadable")
    for section in ("lattice", "quench", "numerics"):
        if not cfg.has_section(section):
            raise ConfigError(section, "missing section")

    kind = _get(cfg, "lattice", "kind", str, required=True).strip()
    l_perp = _get(cfg, "lattice", "l_perp", int, required=True)

    spec_kwargs = dict(
        lattice_kind=kind,
        l_perp=l_perp,
        j_par=_get(cfg, "quench", "j_par", float, required=True),
        j_perp=_get(cfg, "quench", "j_perp", float, required=True),
        h_x=_get(cfg, "quench", "h_x", float, required=True),
        h_z=_get(cfg, "quench", "h_z", float, required=True),
        v=_parse_state(_get(cfg, "quench", "initial_state", str, required=True)),
        dt=_get(cfg, "numerics", "dt", float, 0.01),
        t_max=_get(cfg, "numerics", "t_max", float, required=True),
        chi_max=_get(cfg, "numerics", "chi_max", int, None),
        svd_method=_get(cfg, "numerics", "svd_method", str, "randomized").strip(),
        refine=_get(cfg, "numerics", "refine", _bool, False),
        k_list=_get(cfg, "numerics", "k_list", _int_list, ()),
    )
    try:
        spec = QuenchSpec(**spec_kwargs)
    except ValueError as err:
        raise ConfigError("quench/numerics", str(err)) from None

    manifest = RunManifest(
        spec=spec,
        mode=mode,
        sweep_values=_get(cfg, "sweep", "l_perp_values", _int_list, ())
        if cfg.has_section("sweep") and mode == "sweep"
        else (),
        prefix=_get(cfg, "output", "prefix", str, "run").strip()
        if cfg.has_section("output")
        else "run",
        eps_deg=_get(cfg, "numerics", "eps_deg", float, 1e-3),
        oracle_l_par=_get(cfg, "oracle", "l_par", int, 6) if cfg.has_section("oracle") else 6,
    )
    return manifest


def format_value(x) -> str:
    """Positional decimal with 12 significant digits; empty for missing.

    Built from the scientific representation so that parse -> reprint is
    byte-stable (12-digit decimals are far coarser than double precision).
    """
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0.0:
        return "0.000000000000"
    mant, _, exp = f"{x:.11e}".partition("e")
    sign = "-" if mant.startswith("-") else ""
    digits = mant.lstrip("-").replace(".", "")
    e = int(exp)
    if e >= 11:
        return sign + digits + "0" * (e - 11)
    if e >= 0:
        return sign + digits[: e + 1] + "." + digits[e + 1 :]
    return sign + "0." + "0" * (-e - 1) + digits


def series_header(l_perp: int, k_list: tuple[int, ...]) -> list[str]:
    cols = ["t", "f"]
    cols += [f"abs_e{i}" for i in range(1, N_EIGS + 1)]
    cols += [f"arg_e{i}" for i in range(1, N_EIGS + 1)]
    cols += [f"lambda_{i}" for i in range(1, 2 ** (l_perp + 1) + 1)]
    cols += ["S", "o11_abs", "tau_ratio", "m_x", "m_z", "ldm_1", "ldm_2"]
    cols += [f"f_k_{k}" for k in k_list]
    cols += ["max_discarded_weight"]
    return cols


def export_series(series: TimeSeries, path: str | os.PathLike) -> None:
    """Write the time-series table as CSV with the mandatory header."""
    spec = series.spec
    cols = series_header(spec.l_perp, spec.k_list)
    n_lam = 2 ** (spec.l_perp + 1)
    lines = [",".join(cols)]
    for rec in series.records:
        row = [format_value(rec.t), format_value(rec.f)]
        eigs = np.asarray(rec.e_list, dtype=complex)
        abs_e = np.full(N_EIGS, np.nan)
        arg_e = np.full(N_EIGS, np.nan)
        n = min(N_EIGS, eigs.size)
        abs_e[:n] = np.abs(eigs[:n])
        arg_e[:n] = np.angle(eigs[:n])
        row += [format_value(x) for x in abs_e]
        row += [format_value(x) for x in arg_e]
        lam = np.full(n_lam, np.nan)
        m = min(n_lam, rec.lambda_list.size)
        lam[:m] = rec.lambda_list[:m]
        row += [format_value(x) for x in lam]
        row += [
            format_value(rec.entropy),
            format_value(rec.o11_abs),
            format_value(rec.tau_ratio),
            format_value(rec.m_x),
            format_value(rec.m_z),
            format_value(rec.ldm_spectrum[0] if rec.ldm_spectrum.size else None),
            format_value(rec.ldm_spectrum[1] if rec.ldm_spectrum.size > 1 else None),
        ]
        row += [format_value(rec.f_k.get(k)) for k in spec.k_list]
        row.append(format_value(rec.max_discarded_weight))
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def parse_series(path: str | os.PathLike):
    """Read an exported series back into (header, column arrays)."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    columns = {name: [] for name in header}
    for line in text[1:]:
        for name, cell in zip(header, line.split(",")):
            columns[name].append(float(cell) if cell not in ("", None) else math.nan)
    return header, {k: np.array(v) for k, v in columns.items()}


def records_from_series(path: str | os.PathLike) -> list[TimeSeriesRecord]:
    """Rebuild minimal records (t, complex transfer eigenvalues, f) from a
    series file, enough to re-run event detection."""
    header, cols = parse_series(path)
    n = cols["t"].size
    records = []
    for i in range(n):
        eigs = np.zeros(N_EIGS, dtype=complex)
        for j in range(N_EIGS):
            a = cols.get(f"abs_e{j + 1}")
            p = cols.get(f"arg_e{j + 1}")
            if a is not None and p is not None and not math.isnan(a[i]):
                eigs[j] = a[i] * np.exp(1j * p[i])
        lam_cols = sorted((k for k in cols if k.startswith("lambda_")), key=lambda s: int(s.split("_")[1]))
        lam = np.array([cols[k][i] for k in lam_cols])
        lam = lam[~np.isnan(lam)]
        records.append(
            TimeSeriesRecord(
                t=float(cols["t"][i]),
                f=float(cols["f"][i]),
                e_list=eigs,
                lambda_list=lam,
                entropy=float(cols["S"][i]),
                o11_abs=float(cols["o11_abs"][i]),
                tau_ratio=float(cols["tau_ratio"][i]),
                m_x=float(cols["m_x"][i]),
                m_z=float(cols["m_z"][i]),
                ldm_spectrum=np.array([cols["ldm_1"][i], cols["ldm_2"][i]]),
                max_discarded_weight=float(cols["max_discarded_weight"][i]),
            )
        )
    return records


def export_events(events: list[DqptEvent], path: str | os.PathLike) -> None:
    lines = ["# DQPT events: one record per line"]
    for ev in events:
        parts = [f"time={format_value(ev.time)}", f"kind={ev.kind}"]
        if ev.window is not None:
            parts.append(f"window_lo={format_value(ev.window[0])}")
            parts.append(f"window_hi={format_value(ev.window[1])}")
        lines.append(" ".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


def parse_events(path: str | os.PathLike) -> list[DqptEvent]:
    events = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = dict(part.split("=", 1) for part in line.split())
        window = None
        if "window_lo" in fields:
            window = (float(fields["window_lo"]), float(fields["window_hi"]))
        events.append(DqptEvent(float(fields["time"]), fields["kind"], window))
    return events


def export_metadata(manifest: RunManifest, path: str | os.PathLike) -> None:
    """Key=value document echoing the resolved spec and library versions;
    sufficient to reconstruct the manifest."""
    import scipy

    from . import __version__

    spec = manifest.spec
    lines = [
        "# run metadata",
        f"mode={manifest.mode}",
        f"seed={manifest.seed}",
        f"prefix={manifest.prefix}",
        f"eps_deg={format_value(manifest.eps_deg)}",
        f"lattice_kind={spec.lattice_kind}",
        f"l_perp={spec.l_perp}",
        f"j_par={format_value(spec.j_par)}",
        f"j_perp={format_value(spec.j_perp)}",
        f"h_x={format_value(spec.h_x)}",
        f"h_z={format_value(spec.h_z)}",
        f"v_re_up={format_value(spec.v[0].real)}",
        f"v_im_up={format_value(spec.v[0].imag)}",
        f"v_re_down={format_value(spec.v[1].real)}",
        f"v_im_down={format_value(spec.v[1].imag)}",
        f"dt={format_value(spec.dt)}",
        f"t_max={format_value(spec.t_max)}",
        f"chi_max={spec.chi_max}",
        f"svd_method={spec.svd_method}",
        f"refine={'on' if spec.refine else 'off'}",
        f"k_list={','.join(str(k) for k in spec.k_list)}",
        f"sweep_values={','.join(str(v) for v in manifest.sweep_values)}",
        f"oracle_l_par={manifest.oracle_l_par}",
        f"version_ladder_dqpt={__version__}",
        f"version_numpy={np.__version__}",
        f"version_scipy={scipy.__version__}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_metadata(path: str | os.PathLike) -> RunManifest:
    fields = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        fields[key] = value
    v = np.array(
        [
            float(fields["v_re_up"]) + 1j * float(fields["v_im_up"]),
            float(fields["v_re_down"]) + 1j * float(fields["v_im_down"]),
        ]
    )
    spec = QuenchSpec(
        lattice_kind=fields["lattice_kind"],
        l_perp=int(fields["l_perp"]),
        j_par=float(fields["j_par"]),
        j_perp=float(fields["j_perp"]),
        h_x=float(fields["h_x"]),
        h_z=float(fields["h_z"]),
        v=v / np.linalg.norm(v),
        dt=float(fields["dt"]),
        t_max=float(fields["t_max"]),
        chi_max=int(fields["chi_max"]),
        svd_method=fields["svd_method"],
        refine=fields["refine"] == "on",
        k_list=_int_list(fields["k_list"]),
    )
    return RunManifest(
        spec=spec,
        mode=fields["mode"],
        sweep_values=_int_list(fields["sweep_values"]),
        prefix=fields["prefix"],
        seed=int(fields["seed"]),
        eps_deg=float(fields["eps_deg"]),
        oracle_l_par=int(fields["oracle_l_par"]),
    )


def ansatz_series(spec: QuenchSpec, kind: str) -> TimeSeries:
    """Evaluate the analytical ansatz on the run's time grid."""
    build = pdqpt_ansatz_state if kind == "p" else edqpt_ansatz_state
    n_steps = int(round(spec.t_max / spec.dt))
    records = []
    for step in range(n_steps + 1):
        t = step * spec.dt
        state = build(spec, t)
        records.append(snapshot(state, spec.v, spec.k_list, check_residual=False))
    assert abs(records[0].f) < 1e-10
    records[0].f = 0.0
    records[0].f_k = {k: 0.0 for k in spec.k_list}
    return TimeSeries(records, spec, {"kind": f"ansatz-{kind}"})


def oracle_series(spec: QuenchSpec, l_par: int) -> TimeSeries:
    """Exact torus evolution sampled on the run's time grid.

    Only locally defined columns are populated; the rest stay empty.
    """
    lattice = torus_lattice(
        spec.lattice_kind, spec.l_perp, l_par, spec.j_par, spec.j_perp, spec.h_x, spec.h_z
    )
    from .exact import iterate_exact_grid, locals_from_state, product_state

    psi0 = product_state(spec.v, lattice.n_sites)
    records = []
    nan_lam = np.array([])
    for t, psi in iterate_exact_grid(lattice, spec.v, spec.dt, spec.t_max):
        res = locals_from_state(lattice, psi0, psi, spec.v, spec.k_list)
        spectrum = np.sort(np.linalg.eigvalsh(res.rho_1))[::-1]
        records.append(
            TimeSeriesRecord(
                t=t,
                f=res.rate,
                e_list=np.zeros(0, dtype=complex),
                lambda_list=nan_lam,
                entropy=math.nan,
                o11_abs=math.nan,
                tau_ratio=math.nan,
                m_x=res.m_x,
                m_z=res.m_z,
                ldm_spectrum=spectrum,
                f_k=res.f_k,
                max_discarded_weight=math.nan,
            )
        )
    assert abs(records[0].f) < 1e-10
    records[0].f = 0.0
    records[0].f_k = {k: 0.0 for k in spec.k_list}
    return TimeSeries(records, spec, {"kind": "oracle", "l_par": l_par})


def _run_one_point(args):
    manifest, l_perp = args
    spec = replace(manifest.spec, l_perp=l_perp, chi_max=None)
    sub = replace(manifest, spec=spec, mode="evolve", sweep_values=(),
                  prefix=f"{manifest.prefix}_L{l_perp}")
    return run(sub)


def run(manifest: RunManifest) -> dict[str, str]:
    """Execute a manifest; returns the map of artifact names to paths.

    Writes <prefix>_series.csv, <prefix>_events.txt, <prefix>_meta.txt in
    the output directory (per sweep point in sweep mode).
    """
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if manifest.mode == "sweep":
        points = [(manifest, l) for l in manifest.sweep_values]
        artifacts: dict[str, str] = {}
        if manifest.jobs > 1:
            with ProcessPoolExecutor(max_workers=manifest.jobs) as pool:
                for result in pool.map(_run_one_point, points):
                    artifacts.update(result)
        else:
            for point in points:
                artifacts.update(_run_one_point(point))
        return artifacts

    spec = manifest.spec
    if manifest.mode == "evolve":
        series = evolve(spec, seed=manifest.seed)
    elif manifest.mode == "ansatz-p":
        series = ansatz_series(spec, "p")
    elif manifest.mode == "ansatz-e":
        series = ansatz_series(spec, "e")
    elif manifest.mode == "oracle":
        series = oracle_series(spec, manifest.oracle_l_par)
    else:
        raise ConfigError("mode", f"unhandled mode {manifest.mode}")

    base = out / manifest.prefix
    series_path = f"{base}_series.csv"
    events_path = f"{base}_events.txt"
    meta_path = f"{base}_meta.txt"

    export_series(series, series_path)
    if manifest.mode == "oracle":
        events: list[DqptEvent] = []
    else:
        events = detect_dqpts(series, eps_deg=manifest.eps_deg)
    export_events(events, events_path)
    export_metadata(manifest, meta_path)
    return {"series": series_path, "events": events_path, "meta": meta_path}
