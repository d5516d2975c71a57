# -*- coding: utf-8 -*-
import pytest

from mfencounter.encounter import DecisionParams, FidelityLevel, UtilityWeights
from mfencounter.harness import ExperimentConfig
from mfencounter.modelbased import WeightGrid
from mfencounter.randomness import RandomSource
from mfencounter.scenario import (
    SCENARIO_PRESETS,
    ScenarioConfig,
    Split,
    generate_dataset,
)


@pytest.fixture
def params():
    """Small decision rule so simulations stay fast."""
    return DecisionParams(m_actions=12, m_obs=3)


@pytest.fixture
def scenario_config():
    return ScenarioConfig()


@pytest.fixture
def truth():
    return SCENARIO_PRESETS["identical"]


@pytest.fixture
def small_grid():
    return WeightGrid((0.85, 0.95))


@pytest.fixture
def weights():
    return UtilityWeights(0.89, 0.90)


@pytest.fixture
def train_high(truth, scenario_config, params):
    return generate_dataset(
        8,
        Split.TRAIN,
        FidelityLevel.HIGH,
        truth,
        scenario_config,
        params,
        RandomSource(11).spawn("train-high"),
    )


@pytest.fixture
def train_low(truth, scenario_config, params):
    return generate_dataset(
        20,
        Split.TRAIN,
        FidelityLevel.LOW,
        truth,
        scenario_config,
        params,
        RandomSource(11).spawn("train-low"),
    )


@pytest.fixture
def tiny_experiment(params, small_grid, truth):
    """Model-free friendly experiment; model-based tests shrink the ensemble further."""
    return ExperimentConfig(
        scenario=truth,
        n_high_sweep=(2, 4),
        n_low=6,
        trials=2,
        n_test=3,
        methods=("lw-hf", "lw-mf"),
        base_seed=7,
        params=params,
        grid=small_grid,
        ensemble_size=15,
        n_samples=2,
    )
