"""Recipe-driven rendering of exported series/event files.

Recipes use the same key=value format as the simulator configs.  The module
reads only the exported CSV/event files; there is no in-process coupling to
the simulator package.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

#: fixed style so renders are reproducible byte-for-byte
RC_PARAMS = {
    "figure.dpi": 110,
    "savefig.dpi": 150,
    "font.family": "DejaVu Sans",
    "font.size": 9.0,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.2,
    "legend.fontsize": 8.0,
    "svg.hashsalt": "dqpt-figures",
}


class RecipeError(ValueError):
    pass


@dataclass
class PanelSpec:
    kind: str = "series"          # series | fk_fit
    columns: list[str] = field(default_factory=list)
    ylabel: str = ""
    logy: bool = False
    time: float | None = None     # fk_fit: where to evaluate the relaxation
    k_max: int = 8
    markers: bool = True


@dataclass
class FigureRecipe:
    series_paths: list[str]
    labels: list[str]
    events_path: str | None
    panels: list[PanelSpec]
    output_path: str
    marker_style: str = "dashed"
    marker_color: str = "black"
    width: float = 5.0
    height_per_panel: float = 1.9
    dpi: int = 150


def _parse_bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def load_recipe(path: str) -> FigureRecipe:
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not cfg.read(path):
        raise RecipeError(f"recipe file not found: {path}")
    if not cfg.has_section("inputs") or not cfg.has_option("inputs", "series"):
        raise RecipeError("inputs.series: missing")
    base = Path(path).parent
    series = [str((base / p.strip())) for p in cfg.get("inputs", "series").split(",")]
    labels = (
        [p.strip() for p in cfg.get("inputs", "labels").split(",")]
        if cfg.has_option("inputs", "labels")
        else [Path(p).stem for p in series]
    )
    if len(labels) != len(series):
        raise RecipeError("inputs.labels: count must match inputs.series")
    events = (
        str(base / cfg.get("inputs", "events").strip())
        if cfg.has_option("inputs", "events")
        else None
    )

    panels = []
    for section in sorted(s for s in cfg.sections() if s.startswith("panel")):
        panel = PanelSpec(
            kind=cfg.get(section, "kind", fallback="series").strip(),
            columns=[c.strip() for c in cfg.get(section, "columns", fallback="").split(",") if c.strip()],
            ylabel=cfg.get(section, "ylabel", fallback=""),
            logy=_parse_bool(cfg.get(section, "logy", fallback="off")),
            time=cfg.getfloat(section, "time", fallback=None),
            k_max=cfg.getint(section, "k_max", fallback=8),
            markers=_parse_bool(cfg.get(section, "markers", fallback="on")),
        )
        if panel.kind not in ("series", "fk_fit"):
            raise RecipeError(f"{section}.kind: unknown kind {panel.kind!r}")
        if panel.kind == "series" and not panel.columns:
            raise RecipeError(f"{section}.columns: missing")
        panels.append(panel)
    if not panels:
        raise RecipeError("no [panel.*] sections found")
    if not cfg.has_option("output", "path"):
        raise RecipeError("output.path: missing")

    return FigureRecipe(
        series_paths=series,
        labels=labels,
        events_path=events,
        panels=panels,
        output_path=str(base / cfg.get("output", "path").strip()),
        marker_style=cfg.get("markers", "style", fallback="dashed"),
        marker_color=cfg.get("markers", "color", fallback="black"),
        width=cfg.getfloat("figure", "width", fallback=5.0),
        height_per_panel=cfg.getfloat("figure", "height_per_panel", fallback=1.9),
        dpi=cfg.getint("output", "dpi", fallback=150),
    )


def read_series(path: str) -> dict[str, np.ndarray]:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    out = {}
    for j, name in enumerate(header):
        out[name] = np.array([float(r[j]) if r[j] else math.nan for r in rows])
    return out


def read_events(path: str) -> list[dict]:
    events = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        events.append(dict(part.split("=", 1) for part in line.split()))
    return events


def _marker_linestyle(style: str) -> str:
    return {"dashed": "--", "dotted": ":", "solid": "-", "dashdot": "-."}.get(style, "--")


def _fk_columns(series: dict[str, np.ndarray], k_max: int) -> list[int]:
    ks = []
    for name in series:
        if name.startswith("f_k_"):
            k = int(name.split("_")[-1])
            if k <= k_max:
                ks.append(k)
    return sorted(ks)


def _draw_series_panel(ax, panel, datasets, labels, events, recipe):
    for cols, label in zip(datasets, labels):
        for column in panel.columns:
            if column not in cols:
                raise RecipeError(f"column {column!r} not present in series header")
            name = column if len(datasets) == 1 else f"{label}:{column}"
            ax.plot(cols["t"], cols[column], label=name)
    if panel.markers and events:
        for ev in events:
            ax.axvline(
                float(ev["time"]),
                linestyle=_marker_linestyle(recipe.marker_style),
                color=recipe.marker_color,
                linewidth=0.9,
            )
    if panel.logy:
        ax.set_yscale("log")
    ax.set_ylabel(panel.ylabel or ", ".join(panel.columns))
    if len(panel.columns) > 1 or len(datasets) > 1:
        ax.legend(loc="best")


def _draw_fk_panel(ax, panel, datasets, recipe):
    cols = datasets[0]
    ks = _fk_columns(cols, panel.k_max)
    if not ks:
        raise RecipeError("column 'f_k_*' not present in series header")
    t_eval = panel.time if panel.time is not None else cols["t"][-1]
    i = int(np.argmin(np.abs(cols["t"] - t_eval)))
    f_val = cols["f"][i]
    d = np.array([abs(cols[f"f_k_{k}"][i] - f_val) for k in ks])
    kk = np.array(ks, dtype=float)
    good = d > 0
    ax.plot(kk[good], d[good], "o", markersize=4, label=f"t = {cols['t'][i]:.2f}")
    coef = np.polyfit(np.log(kk[good]), np.log(d[good]), 1)
    b, a = coef[0], coef[1]
    grid = np.linspace(kk[good].min(), kk[good].max(), 64)
    ax.plot(grid, np.exp(a) * grid**b, "-", label=f"fit a = {a:.2f}, b = {b:.2f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("k")
    ax.set_ylabel(panel.ylabel or "|f_k - f|")
    ax.legend(loc="best")


def render(recipe: FigureRecipe):
    """Build the figure described by the recipe; returns the Figure."""
    datasets = [read_series(p) for p in recipe.series_paths]
    events = read_events(recipe.events_path) if recipe.events_path else []

    n = len(recipe.panels)
    with plt.rc_context(RC_PARAMS):
        fig, axes = plt.subplots(
            n, 1, figsize=(recipe.width, recipe.height_per_panel * n), sharex=False
        )
        axes = np.atleast_1d(axes)
        for ax, panel in zip(axes, recipe.panels):
            if panel.kind == "series":
                _draw_series_panel(ax, panel, datasets, recipe.labels, events, recipe)
                ax.set_xlabel("t")
            else:
                _draw_fk_panel(ax, panel, datasets, recipe)
        fig.tight_layout()
    return fig


def render_to_file(recipe: FigureRecipe) -> str:
    fig = render(recipe)
    out = Path(recipe.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=recipe.dpi, metadata={"Software": "dqpt-figures"})
    plt.close(fig)
    return str(out)
