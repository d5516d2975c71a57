# -*- coding: utf-8 -*-
"""
Result files: raw per-trial CSV, aggregated curve CSV, JSON metadata and SVG plots.

Curve aggregation, reproducible from the raw CSV alone: for each
(scenario, method, n_high), take the numeric efficiencies (rows holding `exact`
are left out), mean_efficiency = their arithmetic mean,
stderr = sample sd (ddof=1) / sqrt(count), 0 for a single value,
trials = count. When every row is `exact`, mean_efficiency is `exact`.
"""
import io
import json
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from scipy.stats import sem  # noqa: E402

from .utils import (  # noqa: E402
    PreconditionError,
    TOOLKIT_VERSION,
    degree_sign,
    logger,
    write_text_atomic,
)

RAW_COLUMNS = [
    "scenario",
    "method",
    "n_high",
    "n_low",
    "trial",
    "seed",
    "D",
    "D_lb",
    "efficiency",
]
CURVE_COLUMNS = ["scenario", "method", "n_high", "mean_efficiency", "stderr", "trials"]
EXACT_TOKEN = "exact"

# model-free blue, MAP red, Bayes green; dashed when only high-fidelity data is used
METHOD_STYLES: Dict[str, Dict] = {
    "lw-hf": {"color": "tab:blue", "linestyle": "--"},
    "lw-mf": {"color": "tab:blue", "linestyle": "-"},
    "map-hf": {"color": "tab:red", "linestyle": "--"},
    "map-mf": {"color": "tab:red", "linestyle": "-"},
    "bayes-mf": {"color": "tab:green", "linestyle": "-"},
}

SVG_HASH_SALT = "mf-encounter"


def output_stem(scenario: str, n_low: int) -> str:
    return f"{scenario}_nlow{n_low}"


def _csv_text(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


# --------- Raw results ---------
def results_frame(results: Iterable) -> pd.DataFrame:
    """
    Raw rows of TrialResult-like objects (anything with `row()`), in the given order
    """
    frame = pd.DataFrame([r.row() for r in results], columns=RAW_COLUMNS)
    frame["efficiency"] = frame["efficiency"].astype(object)
    return frame


def write_raw_csv(file_path: Union[str, Path], frame: pd.DataFrame) -> None:
    write_text_atomic(file_path, _csv_text(frame[RAW_COLUMNS]))


def read_raw_csv(file_path: Union[str, Path]) -> pd.DataFrame:
    frame = pd.read_csv(
        file_path,
        float_precision="round_trip",
        dtype={"scenario": str, "method": str, "efficiency": str, "seed": "uint64"},
        encoding="utf-8",
    )
    missing = [column for column in RAW_COLUMNS if column not in frame.columns]
    if missing:
        raise PreconditionError(f"Raw results file is missing columns {missing}")
    frame["efficiency"] = [
        value if value == EXACT_TOKEN else float(value) for value in frame["efficiency"]
    ]
    frame["efficiency"] = frame["efficiency"].astype(object)
    return frame


# --------- Curves ---------
def aggregate_frame(raw: pd.DataFrame) -> pd.DataFrame:
    """
    Curve rows from raw rows, groups in order of first appearance
    """
    if raw["n_low"].nunique() > 1:
        raise PreconditionError(
            f"Raw results mix n_low values {sorted(raw['n_low'].unique())}, "
            + "aggregate them separately"
        )
    rows = []
    for (scenario, method, n_high), group in raw.groupby(
        ["scenario", "method", "n_high"], sort=False
    ):
        values = pd.to_numeric(group["efficiency"], errors="coerce").dropna()
        values = values.to_numpy(dtype=np.float64)
        if len(values) == 0:
            mean, stderr = EXACT_TOKEN, 0.0
        else:
            mean = float(np.mean(values))
            stderr = float(sem(values)) if len(values) > 1 else 0.0
        rows.append((scenario, method, int(n_high), mean, stderr, len(values)))
    frame = pd.DataFrame(rows, columns=CURVE_COLUMNS)
    frame["mean_efficiency"] = frame["mean_efficiency"].astype(object)
    return frame


def write_curves_csv(file_path: Union[str, Path], frame: pd.DataFrame) -> None:
    write_text_atomic(file_path, _csv_text(frame[CURVE_COLUMNS]))


def read_curves_csv(file_path: Union[str, Path]) -> pd.DataFrame:
    frame = pd.read_csv(
        file_path,
        float_precision="round_trip",
        dtype={"scenario": str, "method": str, "mean_efficiency": str},
        encoding="utf-8",
    )
    frame["mean_efficiency"] = [
        value if value == EXACT_TOKEN else float(value)
        for value in frame["mean_efficiency"]
    ]
    return frame


def write_metadata(file_path: Union[str, Path], settings: Dict) -> None:
    """
    JSON sidecar holding the resolved settings of a sweep
    """
    metadata = {
        "toolkit_version": TOOLKIT_VERSION,
        "settings": settings,
        "test_set": "shared by all methods within an (n_high, trial) cell",
        "training_sets": "shared by all methods within an (n_high, trial) cell",
        "exact_token": EXACT_TOKEN,
        "curve_aggregation": "mean and sample sd / sqrt(count) over numeric efficiencies",
    }
    write_text_atomic(file_path, json.dumps(metadata, indent=2, sort_keys=True) + "\n")


# --------- Plots ---------
def _save_svg(figure, file_path: Union[str, Path]) -> None:
    buffer = io.StringIO()
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    plt.close(figure)
    write_text_atomic(file_path, buffer.getvalue())
    logger.info(f"Wrote {file_path}")


def plot_curves(
    curves: pd.DataFrame, file_path: Union[str, Path], title: Optional[str] = None
) -> None:
    """
    Efficiency against the number of high-fidelity training samples, one line per
    method with a shaded standard-error band
    """
    figure, axes = plt.subplots(figsize=(6.4, 4.4))
    for method, group in curves.groupby("method", sort=False):
        group = group[group["mean_efficiency"] != EXACT_TOKEN].sort_values("n_high")
        if group.empty:
            continue
        x = group["n_high"].to_numpy(dtype=np.float64)
        mean = group["mean_efficiency"].to_numpy(dtype=np.float64)
        stderr = group["stderr"].to_numpy(dtype=np.float64)
        style = METHOD_STYLES.get(method, {"color": "tab:gray", "linestyle": "-"})
        axes.plot(x, mean, marker="o", markersize=3, label=method, **style)
        axes.fill_between(
            x, mean - stderr, mean + stderr, color=style["color"], alpha=0.15, lw=0
        )
    axes.set_xscale("log")
    axes.set_xlabel("High-fidelity training samples")
    axes.set_ylabel("Predictive efficiency")
    if title:
        axes.set_title(title)
    axes.grid(True, which="both", alpha=0.3)
    axes.legend(loc="lower right")
    figure.tight_layout()
    _save_svg(figure, file_path)


def plot_densities(mesh: pd.DataFrame, file_path: Union[str, Path]) -> None:
    """
    One panel per weight combination of a density mesh (see modelbased.density_mesh)
    """
    panels = list(mesh.groupby(["w1", "w2"], sort=False))
    if len(panels) == 0:
        raise PreconditionError("Density mesh is empty")
    columns = min(len(panels), 3)
    rows = (len(panels) + columns - 1) // columns
    figure, axes = plt.subplots(
        rows, columns, figsize=(3.2 * columns, 3.0 * rows), squeeze=False
    )
    for ax in axes.ravel()[len(panels) :]:
        ax.set_visible(False)
    for ax, ((w1, w2), panel) in zip(axes.ravel(), panels):
        a1 = np.sort(panel["a1_deg"].unique())
        a2 = np.sort(panel["a2_deg"].unique())
        grid = (
            panel.pivot(index="a2_deg", columns="a1_deg", values="density")
            .reindex(index=a2, columns=a1)
            .to_numpy()
        )
        ax.pcolormesh(a1, a2, grid, shading="auto", cmap="viridis")
        ax.set_title(f"w = ({w1:.2f}, {w2:.2f})", fontsize=9)
        ax.set_xlabel(f"a1 ({degree_sign})", fontsize=8)
        ax.set_ylabel(f"a2 ({degree_sign})", fontsize=8)
        ax.tick_params(labelsize=7)
    figure.tight_layout()
    _save_svg(figure, file_path)
