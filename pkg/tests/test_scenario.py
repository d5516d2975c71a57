# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from mfencounter.encounter import (
    AircraftState,
    FidelityLevel,
    JointAction,
    UtilityWeights,
    apply_action,
)
from mfencounter.randomness import RandomSource
from mfencounter.scenario import (
    SCENARIO_PRESETS,
    Dataset,
    DatasetRecord,
    GroundTruth,
    ScenarioConfig,
    Split,
    approach_angle_of,
    collision_heading,
    generate_dataset,
    min_separation,
    place_intruder,
    replay_record,
    sample_geometry,
)
from mfencounter.utils import (
    ConfigurationError,
    InfeasibleGeometryError,
    PreconditionError,
)


class TestGeometry:
    def test_head_on_range(self, scenario_config):
        x, y = place_intruder(scenario_config, 0.0)
        assert (x, y) == pytest.approx((5000.0, 0.0))

    def test_head_on_heading(self):
        own = AircraftState(0.0, 0.0, 500.0, 0.0)
        heading = collision_heading(own, (5000.0, 0.0), 500.0)
        assert abs(abs(heading) - math.pi) < 1e-12

    @pytest.mark.parametrize("angle", [-45.0, -22.5, 0.0, 22.5, 45.0])
    def test_unperturbed_intruder_collides(self, angle):
        config = ScenarioConfig(heading_sd=0.0)
        position = place_intruder(config, angle)
        own = AircraftState(0.0, 0.0, config.airspeed, 0.0)
        heading = collision_heading(own, position, config.airspeed)
        intruder = AircraftState.from_heading(*position, config.airspeed, heading)
        t = config.time_to_collision
        p1 = apply_action(own, 0.0, t)
        p2 = apply_action(intruder, 0.0, t)
        assert math.hypot(p1.x - p2.x, p1.y - p2.y) < 1e-6
        assert intruder.speed == pytest.approx(config.airspeed)

    def test_zero_spread_sample_has_no_miss_distance(self):
        config = ScenarioConfig(heading_sd=0.0)
        rng = np.random.default_rng(2)
        for _ in range(10):
            geometry = sample_geometry(config, Split.TRAIN, rng)
            assert min_separation(geometry, config.duration) < 1e-6

    def test_collision_inside_a_longer_horizon(self):
        config = ScenarioConfig(heading_sd=0.0, initial_range=3000.0, duration=5.0)
        rng = np.random.default_rng(3)
        for _ in range(10):
            geometry = sample_geometry(config, Split.TRAIN, rng)
            assert min_separation(geometry, config.duration) < 1e-6
            assert min_separation(geometry, 0.5 * config.time_to_collision) > 1.0

    def test_collision_after_the_horizon_rejected(self):
        with pytest.raises(ConfigurationError):
            ScenarioConfig(initial_range=6000.0, duration=5.0)
        with pytest.raises(ConfigurationError):
            ScenarioConfig(duration=4.0)

    def test_split_angles(self, scenario_config):
        rng = np.random.default_rng(4)
        train = {
            round(approach_angle_of(sample_geometry(scenario_config, "train", rng)), 6)
            for _ in range(60)
        }
        test = {
            round(approach_angle_of(sample_geometry(scenario_config, "test", rng)), 6)
            for _ in range(60)
        }
        assert train == {-45.0, 0.0, 45.0}
        assert test == {-22.5, 22.5}

    def test_no_intercept(self):
        own = AircraftState(0.0, 0.0, 500.0, 0.0)
        with pytest.raises(InfeasibleGeometryError):
            collision_heading(own, (-5000.0, 0.0), 100.0)

    def test_coincident_intruder(self):
        own = AircraftState(0.0, 0.0, 500.0, 0.0)
        with pytest.raises(InfeasibleGeometryError):
            collision_heading(own, (0.0, 0.0), 500.0)

    def test_angle_outside_field_of_view(self):
        with pytest.raises(ConfigurationError):
            ScenarioConfig(train_approach_angles=(95.0,))

    def test_turning_away_opens_separation(self):
        config = ScenarioConfig(heading_sd=0.0)
        geometry = sample_geometry(config, Split.TRAIN, np.random.default_rng(0))
        assert min_separation(geometry, 5.0, JointAction(0.8, 0.8)) > min_separation(
            geometry, 5.0
        )


class TestGroundTruth:
    def test_presets(self):
        assert SCENARIO_PRESETS["identical"].w_low == UtilityWeights(0.89, 0.90)
        assert SCENARIO_PRESETS["small-diff"].w_low == UtilityWeights(0.88, 0.89)
        assert SCENARIO_PRESETS["large-diff"].w_low == UtilityWeights(0.80, 0.81)
        for truth in SCENARIO_PRESETS.values():
            assert truth.w_high == UtilityWeights(0.89, 0.90)

    def test_unknown_preset(self):
        with pytest.raises(ConfigurationError):
            GroundTruth.preset("nope")


class TestDataset:
    def _generate(self, truth, scenario_config, params, seed=3, n=6):
        return generate_dataset(
            n,
            Split.TRAIN,
            FidelityLevel.HIGH,
            truth,
            scenario_config,
            params,
            RandomSource(seed),
        )

    def test_shape_and_ids(self, truth, scenario_config, params):
        dataset = self._generate(truth, scenario_config, params)
        assert dataset.N == 6
        assert [r.encounter_id for r in dataset] == list(range(6))
        assert dataset.features().shape == (6, 8)
        assert dataset.actions().shape == (6, 2)
        assert all(r.fidelity is FidelityLevel.HIGH for r in dataset)

    def test_repeatable(self, truth, scenario_config, params):
        a = self._generate(truth, scenario_config, params)
        b = self._generate(truth, scenario_config, params)
        assert a == b
        assert a.to_csv_text() == b.to_csv_text()

    def test_seed_changes_data(self, truth, scenario_config, params):
        a = self._generate(truth, scenario_config, params, seed=3)
        b = self._generate(truth, scenario_config, params, seed=4)
        assert not np.array_equal(a.actions(), b.actions())

    def test_replay_from_stored_seed(self, truth, scenario_config, params):
        dataset = self._generate(truth, scenario_config, params)
        for record in dataset:
            replayed = replay_record(
                record, Split.TRAIN, truth, scenario_config, params
            )
            assert replayed == record

    def test_csv_file(self, tmp_path, truth, scenario_config, params):
        dataset = self._generate(truth, scenario_config, params)
        path = tmp_path / "train.csv"
        dataset.write_csv(path)
        assert Dataset.read_csv(path) == dataset
        assert path.read_text(encoding="utf-8").splitlines()[0].startswith(
            "encounter_id,fidelity,s1_x"
        )

    def test_empty_request(self, truth, scenario_config, params):
        with pytest.raises(PreconditionError):
            generate_dataset(
                0,
                Split.TRAIN,
                FidelityLevel.HIGH,
                truth,
                scenario_config,
                params,
                RandomSource(1),
            )

    def test_duplicate_ids(self, truth, scenario_config, params):
        record = self._generate(truth, scenario_config, params, n=1).records[0]
        with pytest.raises(PreconditionError):
            Dataset(
                [
                    record,
                    DatasetRecord(
                        0, record.geometry, record.action, record.fidelity, 1
                    ),
                ]
            )
