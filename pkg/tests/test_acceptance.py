# -*- coding: utf-8 -*-
"""End-to-end statistical checks at desk scale. Run with `pytest -m slow`."""

import dataclasses
from pathlib import Path

import numpy as np
import pytest

from mfencounter.encounter import DecisionParams, FidelityLevel, UtilityWeights
from mfencounter.harness import ExperimentConfig, build_ensembles, run_sweep
from mfencounter.modelbased import fit_map_hf
from mfencounter.randomness import RandomSource
from mfencounter.scenario import GroundTruth, ScenarioConfig, Split, generate_dataset
from mfencounter.utils import read_config

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).parents[1] / "configs"


def _desk_config(name):
    config = ExperimentConfig.from_config(read_config(str(CONFIGS / f"{name}.ini")))
    return dataclasses.replace(config, ensemble_cache=None)


def _curve(sweep, method, n_high):
    for curve in sweep.curves:
        if curve.method == method and curve.n_high == n_high:
            return curve.mean_efficiency
    raise KeyError((method, n_high))


@pytest.fixture(scope="module")
def identical():
    return _desk_config("identical")


@pytest.fixture(scope="module")
def ensembles(identical):
    return build_ensembles(identical)


@pytest.fixture(scope="module")
def identical_sweep(identical, ensembles):
    return run_sweep(identical, ensembles)


class TestBehaviour:
    def test_turn_size_grows_with_weight(self):
        params = DecisionParams()
        mean_turn = []
        for weights in (
            UtilityWeights(0.80, 0.80),
            UtilityWeights(0.89, 0.90),
            UtilityWeights(0.98, 0.98),
        ):
            dataset = generate_dataset(
                300,
                Split.TRAIN,
                FidelityLevel.HIGH,
                GroundTruth(weights, weights, "behaviour"),
                ScenarioConfig(),
                params,
                RandomSource(1),
            )
            mean_turn.append(np.mean(np.abs(dataset.actions()[:, 0])))
        assert mean_turn[0] < mean_turn[1] < mean_turn[2]


class TestWeightRecovery:
    def test_map_recovers_high_fidelity_weights(self, identical, ensembles):
        train = generate_dataset(
            1000,
            Split.TRAIN,
            FidelityLevel.HIGH,
            identical.scenario,
            identical.scenario_config,
            identical.params,
            RandomSource(identical.base_seed).spawn("recovery"),
        )
        w = fit_map_hf(train, identical.grid, ensembles.high)
        assert abs(w.w1 - 0.89) <= 0.02 + 1e-9
        assert abs(w.w2 - 0.90) <= 0.02 + 1e-9


class TestMultiFidelityBenefit:
    @pytest.mark.parametrize("n_high", [10, 50])
    def test_model_free(self, identical_sweep, n_high):
        assert _curve(identical_sweep, "lw-mf", n_high) > _curve(
            identical_sweep, "lw-hf", n_high
        )

    @pytest.mark.parametrize("n_high", [10, 50])
    def test_model_based(self, identical_sweep, n_high):
        assert _curve(identical_sweep, "map-mf", n_high) > _curve(
            identical_sweep, "map-hf", n_high
        )

    def test_discrepancy_hurts_pooled_estimate(self, identical_sweep, ensembles):
        large = dataclasses.replace(
            _desk_config("large-diff"), methods=("map-mf",), n_high_sweep=(10,)
        )
        sweep = run_sweep(large, ensembles)
        assert _curve(sweep, "map-mf", 10) < _curve(identical_sweep, "map-mf", 10)
