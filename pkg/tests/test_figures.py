from __future__ import annotations

import numpy as np
import pandas as pd
import pytest
from matplotlib import pyplot as plt

from src.analysis.fits import fit_table
from src.errors import SchemaError
from src.plots.figures import FIGURE_KINDS, build_figures, emit_figures
from src.tables.schema import RESULT_COLUMNS
from src.tables.store import load_results


def _grid_table() -> pd.DataFrame:
    rows = []
    for p1 in (0.0, 0.5, 1.0):
        for p2 in (0.0, 0.25, 0.5, 0.75, 1.0):
            rows.append({"L": 16, "t2": 1.0, "p1": p1, "p2": p2, "E_mean": 4.0 * (1 - p1) * (1 - p2), "E_sem": 0.05, "error": ""})
    return pd.DataFrame(rows)


def test_heatmap_contains_config_hash(tmp_path):
    (path,) = emit_figures(_grid_table(), "heatmap", tmp_path, config_hash="abc123def456")
    assert path.name == "heatmap_L16_t21.svg"
    text = path.read_text(encoding="utf-8")
    assert text.count("abc123def456") >= 2


def test_single_row_heatmap_draws_one_marker():
    table = _grid_table().iloc[:1]
    ((stem, fig),) = build_figures(table, "heatmap", contour_level=2.5)
    (ax,) = [a for a in fig.axes if a.get_label() != "<colorbar>"]
    offsets = ax.collections[0].get_offsets()
    assert len(offsets) == 1


@pytest.mark.parametrize("kind", ["heatmap", "susceptibility", "scaling"])
def test_empty_result_table_gives_empty_figure(kind, tmp_path):
    table = pd.DataFrame(columns=RESULT_COLUMNS)
    paths = emit_figures(table, kind, tmp_path, config_hash="000000000000")
    assert [p.name for p in paths] == [f"{kind}.svg"]
    assert "000000000000" in paths[0].read_text(encoding="utf-8")


def test_missing_columns_raise():
    with pytest.raises(SchemaError):
        build_figures(pd.DataFrame({"L": [8], "p2": [0.1]}), "heatmap")
    with pytest.raises(ValueError):
        build_figures(_grid_table(), "histogram")


def test_failed_rows_are_not_plotted():
    table = _grid_table()
    table.loc[0, "error"] = "EnsembleError: too many failures"
    table.loc[0, "E_mean"] = np.nan
    assert len(build_figures(table, "heatmap", contour_level=2.5)) == 1


def test_fit_figures_from_synthetic_results(synthetic_results_csv, tmp_path):
    fits = fit_table(load_results(synthetic_results_csv), ["L8-32", "L16-48", "L24-64"])
    for kind in ("ceff", "extrapolation", "collapse"):
        paths = emit_figures(fits, kind, tmp_path, config_hash="feedfacecafe", control="p2")
        assert paths
        assert all(p.suffix == ".svg" for p in paths)
    assert (tmp_path / "ceff_t21_p10.2.svg").exists()
    assert set(FIGURE_KINDS) == {"heatmap", "susceptibility", "scaling", "ceff", "extrapolation", "collapse"}


def test_scaling_figure_per_slice(synthetic_results_csv, tmp_path):
    paths = emit_figures(load_results(synthetic_results_csv), "scaling", tmp_path, config_hash="feedfacecafe")
    assert [p.name for p in paths] == ["scaling_t21_p10.2.svg"]


def test_collapse_and_extrapolation_figures_draw_only_selected_windows(synthetic_results_csv):
    fits = fit_table(load_results(synthetic_results_csv), ["L8-32", "L16-48", "L24-64", "L8-64"])
    moving = ["L8-32", "L16-48", "L24-64"]

    ((_, fig),) = build_figures(fits, "collapse", windows=moving)
    ax = fig.axes[0]
    assert ax.get_legend_handles_labels()[1] == ["L=32", "L=48", "L=64"]
    assert [len(container.lines[0].get_xdata()) for container in ax.containers] == [2, 2, 2]

    everything = build_figures(fits, "collapse")
    ((_, fig_all),) = everything
    assert [len(c.lines[0].get_xdata()) for c in fig_all.axes[0].containers] == [2, 2, 4]

    for _, fig in build_figures(fits, "extrapolation", windows=moving):
        (container,) = fig.axes[0].containers
        assert len(container.lines[0].get_xdata()) == 3
    plt.close("all")
