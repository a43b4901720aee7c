"""Static SVG figures for sweep and fit outputs.

Each figure kind reads one table (results, fits, or fits plus an
extrapolation/collapse summary), checks the columns it needs, and writes one
SVG per data slice. Every file carries the config hash of the data twice:
in the SVG metadata description and as a footer line.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import numpy as np
import pandas as pd
from matplotlib import pyplot as plt
from matplotlib.figure import Figure

from ..analysis.collapse import CollapseData, rescale
from ..analysis.susceptibility import susceptibility_table
from ..errors import SchemaError


logger = logging.getLogger(__name__)

FIGURE_KINDS = ("heatmap", "susceptibility", "scaling", "ceff", "extrapolation", "collapse")

REQUIRED_COLUMNS: Dict[str, List[str]] = {
    "heatmap": ["L", "t2", "p1", "p2", "E_mean"],
    "susceptibility": ["L", "t2", "p1", "p2", "E_mean", "E_sem"],
    "scaling": ["L", "t2", "p1", "p2", "E_mean", "E_sem"],
    "ceff": ["t2", "p1", "p2", "window", "L_max", "c_eff", "c_err"],
    "extrapolation": ["t2", "p1", "p2", "window", "L_max", "c_eff", "c_err"],
    "collapse": ["t2", "p1", "p2", "window", "L_max", "c_eff", "c_err"],
}

LABELS = {
    "p1": r"$p_1$",
    "p2": r"$p_2$",
    "t2": r"$t_2$",
    "E_mean": r"$\overline{\mathcal{E}}_{L/2}$",
}


def _check_schema(table: pd.DataFrame, kind: str) -> None:
    if kind not in REQUIRED_COLUMNS:
        raise ValueError(f"Unknown figure kind: {kind}; expected one of {FIGURE_KINDS}")
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in table.columns]
    if missing:
        raise SchemaError(f"Table for '{kind}' figure is missing columns: {missing}")


def _valid(table: pd.DataFrame, value: str) -> pd.DataFrame:
    ok = table[np.isfinite(table[value].astype(float))]
    if "error" in ok.columns:
        ok = ok[ok["error"].fillna("").astype(str).eq("")]
    return ok


def _slice_name(kind: str, keys: Sequence[str], values: Sequence[Any]) -> str:
    parts = [f"{k}{float(v):g}" for k, v in zip(keys, values)]
    return "_".join([kind, *parts]) if parts else kind


def _groups(table: pd.DataFrame, keys: List[str]):
    if table.empty:
        return [((), table)]
    return [((k,) if not isinstance(k, tuple) else k, g) for k, g in table.groupby(keys, sort=True)]


def _heatmap(ax, frame: pd.DataFrame, value: str, label: str, contour_level: Optional[float], cmap: str):
    ax.set_xlabel(LABELS["p2"])
    ax.set_ylabel(LABELS["p1"])
    p1 = np.sort(frame["p1"].unique())
    p2 = np.sort(frame["p2"].unique())
    if p1.size >= 2 and p2.size >= 2:
        grid = frame.pivot_table(index="p1", columns="p2", values=value).reindex(index=p1, columns=p2)
        mesh = ax.pcolormesh(p2, p1, grid.to_numpy(), shading="nearest", cmap=cmap)
        ax.figure.colorbar(mesh, ax=ax, label=label)
        z = grid.to_numpy()
        if contour_level is not None and np.nanmin(z) < contour_level < np.nanmax(z):
            ax.contour(p2, p1, z, levels=[contour_level], colors="red", linewidths=1.5)
    elif not frame.empty:
        points = ax.scatter(frame["p2"], frame["p1"], c=frame[value], cmap=cmap, marker="s", s=80)
        ax.figure.colorbar(points, ax=ax, label=label)


def _plot_heatmaps(table, contour_level, **_) -> List[Tuple[str, Figure]]:
    figures = []
    for key, frame in _groups(_valid(table, "E_mean"), ["L", "t2"]):
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        _heatmap(ax, frame, "E_mean", LABELS["E_mean"], contour_level, "viridis")
        ax.set_title(f"L={int(key[0])}, t2={key[1]:g}" if key else "negativity")
        figures.append((_slice_name("heatmap", ["L", "t2"], key), fig))
    return figures


def _plot_susceptibility(table, **_) -> List[Tuple[str, Figure]]:
    chi = susceptibility_table(_valid(table, "E_mean"))
    figures = []
    for key, frame in _groups(chi, ["L", "t2"]):
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        if not frame.empty:
            limit = float(np.nanmax(np.abs(frame["chi2"]))) or 1.0
            frame = frame.assign(chi2=frame["chi2"].clip(-limit, limit))
        _heatmap(ax, frame, "chi2", r"$\chi_2$", 0.0, "RdBu_r")
        ax.set_title(f"L={int(key[0])}, t2={key[1]:g}" if key else "susceptibility")
        figures.append((_slice_name("susceptibility", ["L", "t2"], key), fig))
    return figures


def _plot_scaling(table, **_) -> List[Tuple[str, Figure]]:
    figures = []
    for key, frame in _groups(_valid(table, "E_mean"), ["t2", "p1"]):
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        for p2, curve in frame.groupby("p2", sort=True):
            curve = curve.sort_values("L")
            ax.errorbar(curve["L"], curve["E_mean"], yerr=curve["E_sem"], marker="o", capsize=2, label=f"p2={p2:g}")
        ax.set_xscale("log")
        ax.set_xlabel(r"$L$")
        ax.set_ylabel(LABELS["E_mean"])
        if not frame.empty:
            ax.legend(loc="best", fontsize="small")
            ax.set_title(f"t2={key[0]:g}, p1={key[1]:g}")
        figures.append((_slice_name("scaling", ["t2", "p1"], key), fig))
    return figures


def _plot_ceff(table, control="p2", **_) -> List[Tuple[str, Figure]]:
    fixed = [k for k in ("t2", "p1", "p2") if k != control]
    figures = []
    for key, frame in _groups(_valid(table, "c_eff"), fixed):
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        for window, curve in frame.groupby("window", sort=False):
            curve = curve.sort_values(control)
            ax.errorbar(curve[control], curve["c_eff"], yerr=curve["c_err"], marker="o", capsize=2, label=window)
        ax.axhline(0.0, color="grey", linewidth=0.8)
        ax.set_xlabel(LABELS[control])
        ax.set_ylabel(r"$c_\mathrm{eff}$")
        if not frame.empty:
            ax.legend(loc="best", fontsize="small")
        figures.append((_slice_name("ceff", fixed, key), fig))
    return figures


def _select_windows(table: pd.DataFrame, windows: Optional[Sequence[str]]) -> pd.DataFrame:
    return table if windows is None else table[table["window"].isin(list(windows))]


def _plot_extrapolation(
    table, extrapolation: Optional[pd.DataFrame] = None, windows: Optional[Sequence[str]] = None, **_
) -> List[Tuple[str, Figure]]:
    figures = []
    for key, frame in _groups(_valid(_select_windows(table, windows), "c_eff"), ["t2", "p1", "p2"]):
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        ax.errorbar(1.0 / frame["L_max"], frame["c_eff"], yerr=frame["c_err"], marker="o", linestyle="none", capsize=2)
        if extrapolation is not None and key:
            match = extrapolation[
                np.isclose(extrapolation["t2"], key[0])
                & np.isclose(extrapolation["p1"], key[1])
                & np.isclose(extrapolation["p2"], key[2])
            ]
            if not match.empty:
                row = match.iloc[0]
                x = np.linspace(0.0, float((1.0 / frame["L_max"]).max()), 100)
                ax.plot(x, row["c0"] + row["c1"] * x + row["c2"] * x**2, "k--", label=f"c0={row['c0']:.3f}±{row['c0_err']:.3f}")
                ax.legend(loc="best", fontsize="small")
        ax.set_xlabel(r"$1/L$")
        ax.set_ylabel(r"$c_\mathrm{eff}$")
        figures.append((_slice_name("extrapolation", ["t2", "p1", "p2"], key), fig))
    return figures


def _plot_collapse(
    table, collapse: Optional[List[Dict[str, Any]]] = None, windows: Optional[Sequence[str]] = None, **_
) -> List[Tuple[str, Figure]]:
    """Raw c_eff curves, or the rescaled ones when a collapse result exists.

    Only rows of ``windows`` are drawn.
    """
    figures = []
    results = {(r["t2"], r["p1"]): r for r in (collapse or [])}
    for key, frame in _groups(_valid(_select_windows(table, windows), "c_eff"), ["t2", "p1"]):
        fig, ax = plt.subplots(figsize=(5.5, 4.5))
        result = results.get(tuple(float(k) for k in key)) if key else None
        if result is None:
            for L, curve in frame.groupby("L_max", sort=True):
                curve = curve.sort_values("p2")
                ax.errorbar(curve["p2"], curve["c_eff"], yerr=curve["c_err"], marker="o", capsize=2, label=f"L={int(L)}")
            ax.set_xlabel(LABELS["p2"])
            ax.set_ylabel(r"$c_\mathrm{eff}$")
        else:
            data = CollapseData(frame["L_max"], frame["p2"], frame["c_eff"], frame["c_err"])
            x, y, dy = rescale((result["p2c"], result["nu"], result["zeta"]), data)
            for L in data.sizes:
                mask = data.L == L
                ax.errorbar(x[mask], y[mask], yerr=dy[mask], marker="o", capsize=2, label=f"L={int(L)}")
            ax.set_xlabel(r"$L^{1/\nu}(p_2 - p_{2c})$")
            ax.set_ylabel(r"$c_\mathrm{eff} L^{-\zeta/\nu}$")
            ax.set_title(f"p2c={result['p2c']:.3f}, nu={result['nu']:.2f}, zeta={result['zeta']:.3f}")
        if not frame.empty:
            ax.legend(loc="best", fontsize="small")
        figures.append((_slice_name("collapse", ["t2", "p1"], key), fig))
    return figures


_BUILDERS = {
    "heatmap": _plot_heatmaps,
    "susceptibility": _plot_susceptibility,
    "scaling": _plot_scaling,
    "ceff": _plot_ceff,
    "extrapolation": _plot_extrapolation,
    "collapse": _plot_collapse,
}


def build_figures(table: pd.DataFrame, kind: str, **options: Any) -> List[Tuple[str, Figure]]:
    """Figures for ``kind`` as ``(file stem, Figure)`` pairs, not yet saved."""
    _check_schema(table, kind)
    return _BUILDERS[kind](table, **options)


def emit_figures(
    table: pd.DataFrame,
    kind: str,
    out_dir: str | Path,
    *,
    config_hash: str,
    contour_level: Optional[float] = 2.5,
    **options: Any,
) -> List[Path]:
    """Render and save SVG figures; returns the written paths.

    Raises:
        SchemaError: The table lacks columns needed by ``kind``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    with plt.rc_context({"svg.fonttype": "none"}):
        for stem, fig in build_figures(table, kind, contour_level=contour_level, **options):
            fig.text(0.01, 0.005, f"config {config_hash}", fontsize=6, color="grey")
            fig.tight_layout()
            path = out_dir / f"{stem}.svg"
            fig.savefig(path, format="svg", metadata={"Description": f"config_hash={config_hash}"})
            plt.close(fig)
            paths.append(path)
    logger.info("Saved %d %s figure(s) to %s", len(paths), kind, out_dir)
    return paths
