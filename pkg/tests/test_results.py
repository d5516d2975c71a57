# -*- coding: utf-8 -*-
import json

import numpy as np
import pandas as pd
import pytest

from mfencounter.harness import TrialResult
from mfencounter.results import (
    CURVE_COLUMNS,
    EXACT_TOKEN,
    aggregate_frame,
    output_stem,
    plot_curves,
    plot_densities,
    read_curves_csv,
    read_raw_csv,
    results_frame,
    write_curves_csv,
    write_metadata,
    write_raw_csv,
)
from mfencounter.utils import PreconditionError


def _results():
    rows = []
    for method, base in (("lw-hf", 0.4), ("map-mf", 0.7)):
        for n_high in (5, 10):
            for trial in range(3):
                efficiency = base + 0.01 * n_high + 0.02 * trial
                rows.append(
                    TrialResult(
                        "identical",
                        method,
                        n_high,
                        100,
                        trial,
                        1000 + trial,
                        1.0 / efficiency,
                        1.0,
                        efficiency,
                    )
                )
    rows.append(TrialResult("identical", "lw-mf", 5, 100, 0, 7, 0.0, 1.0, EXACT_TOKEN))
    return rows


class TestRawFiles:
    def test_read_back(self, tmp_path):
        frame = results_frame(_results())
        path = tmp_path / "identical_nlow100_raw.csv"
        write_raw_csv(path, frame)
        loaded = read_raw_csv(path)
        assert list(loaded["efficiency"])[-1] == EXACT_TOKEN
        np.testing.assert_array_equal(
            loaded["efficiency"].iloc[:-1].to_numpy(dtype=float),
            frame["efficiency"].iloc[:-1].to_numpy(dtype=float),
        )
        assert list(loaded["seed"]) == list(frame["seed"])

    def test_missing_columns(self, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text("scenario,method\nidentical,lw-hf\n", encoding="utf-8")
        with pytest.raises(PreconditionError):
            read_raw_csv(path)


class TestCurves:
    def test_recomputed_from_raw_rows(self):
        raw = results_frame(_results())
        curves = aggregate_frame(raw)
        assert list(curves.columns) == CURVE_COLUMNS
        row = curves[(curves["method"] == "map-mf") & (curves["n_high"] == 10)].iloc[0]
        values = np.array([0.8, 0.82, 0.84])
        assert row["mean_efficiency"] == pytest.approx(values.mean(), abs=1e-12)
        assert row["stderr"] == pytest.approx(
            values.std(ddof=1) / np.sqrt(3.0), rel=1e-9
        )
        exact = curves[curves["method"] == "lw-mf"].iloc[0]
        assert exact["mean_efficiency"] == EXACT_TOKEN
        assert exact["trials"] == 0

    def test_mixed_low_fidelity_budgets(self):
        raw = results_frame(_results())
        raw.loc[0, "n_low"] = 1000
        with pytest.raises(PreconditionError):
            aggregate_frame(raw)

    def test_curve_file(self, tmp_path):
        curves = aggregate_frame(results_frame(_results()))
        path = tmp_path / "curves.csv"
        write_curves_csv(path, curves)
        loaded = read_curves_csv(path)
        assert list(loaded["method"]) == list(curves["method"])
        assert EXACT_TOKEN in list(loaded["mean_efficiency"])

    def test_output_stem(self):
        assert output_stem("large-diff", 1000) == "large-diff_nlow1000"


class TestPlots:
    def test_curve_svg_is_deterministic(self, tmp_path):
        curves = aggregate_frame(results_frame(_results()))
        plot_curves(curves, tmp_path / "a.svg", "identical")
        plot_curves(curves, tmp_path / "b.svg", "identical")
        text = (tmp_path / "a.svg").read_text(encoding="utf-8")
        assert "<svg" in text
        assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()

    def test_density_panels(self, tmp_path):
        axis = np.linspace(-60.0, 60.0, 5)
        a1, a2 = np.meshgrid(axis, axis, indexing="ij")
        mesh = pd.concat(
            [
                pd.DataFrame(
                    {
                        "w1": w,
                        "w2": w,
                        "a1_deg": a1.ravel(),
                        "a2_deg": a2.ravel(),
                        "density": np.exp(-(a1.ravel() ** 2 + a2.ravel() ** 2) / 900),
                    }
                )
                for w in (0.85, 0.95)
            ],
            ignore_index=True,
        )
        plot_densities(mesh, tmp_path / "densities.svg")
        assert (tmp_path / "densities.svg").stat().st_size > 0

    def test_empty_mesh(self, tmp_path):
        empty = pd.DataFrame(columns=["w1", "w2", "a1_deg", "a2_deg", "density"])
        with pytest.raises(PreconditionError):
            plot_densities(empty, tmp_path / "x.svg")


class TestMetadata:
    def test_json_sidecar(self, tmp_path):
        path = tmp_path / "identical_nlow100_metadata.json"
        write_metadata(path, {"base_seed": 7, "methods": ["lw-hf"]})
        metadata = json.loads(path.read_text(encoding="utf-8"))
        assert metadata["settings"]["base_seed"] == 7
        assert metadata["exact_token"] == EXACT_TOKEN
        assert "toolkit_version" in metadata
