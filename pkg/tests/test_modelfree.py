# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from mfencounter.encounter import FidelityLevel, JointAction
from mfencounter.modelfree import (
    FeatureStats,
    KernelWeights,
    LwPredictor,
    fit_lw_hf,
    fit_lw_mf,
    geometry_features,
    lw_predict,
    standardized_distance,
)
from mfencounter.scenario import Dataset, DatasetRecord
from mfencounter.utils import PreconditionError


def _direct_prediction(inputs, outputs, query):
    """Unstabilised softmin regression written out in full."""
    mean = inputs.mean(axis=0)
    sd = np.sqrt(((inputs - mean) ** 2).mean(axis=0))
    sd = np.where(sd > 0, sd, 1.0)
    distances = [math.sqrt(np.sum(((query - x) / sd) ** 2)) for x in inputs]
    kernel = [math.exp(-d) for d in distances]
    z = np.array(kernel) / sum(kernel)
    return z @ outputs


def _with_actions(dataset, fidelity, actions):
    return Dataset(
        [
            DatasetRecord(r.encounter_id, r.geometry, JointAction(*a), fidelity, r.seed)
            for r, a in zip(dataset, actions)
        ]
    )


class TestStandardizedDistance:
    def test_unit_sd(self):
        stats = FeatureStats(mean=np.zeros(8), sd=np.ones(8))
        assert standardized_distance(np.zeros(8), np.ones(8), stats) == pytest.approx(
            math.sqrt(8.0)
        )

    def test_direct_formula(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=8), rng.normal(size=8)
        sd = rng.uniform(0.5, 3.0, 8)
        stats = FeatureStats(mean=np.zeros(8), sd=sd)
        expected = math.sqrt(sum(((x - y) / s) ** 2 for x, y, s in zip(a, b, sd)))
        assert standardized_distance(a, b, stats) == pytest.approx(expected, rel=1e-12)

    def test_constant_feature_gets_unit_sd(self):
        features = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
        stats = FeatureStats.from_features(features)
        assert stats.sd[1] == 1.0
        assert stats.sd[0] == pytest.approx(np.std([1.0, 2.0, 3.0]))

    def test_dimension_mismatch(self):
        stats = FeatureStats(mean=np.zeros(8), sd=np.ones(8))
        with pytest.raises(PreconditionError):
            standardized_distance(np.zeros(8), np.zeros(10), stats)


class TestKernelWeights:
    def test_sum_to_one(self):
        distances = np.random.default_rng(2).uniform(0.0, 50.0, 400)
        z = KernelWeights.from_distances(distances).z
        assert abs(np.sum(z) - 1.0) <= 1e-12
        assert np.all(z >= 0)

    def test_large_distances_do_not_underflow(self):
        z = KernelWeights.from_distances(np.array([1000.0, 1001.0])).z
        expected = np.array([1.0, math.exp(-1.0)]) / (1.0 + math.exp(-1.0))
        np.testing.assert_allclose(z, expected, rtol=1e-12)


class TestLwPredict:
    def test_single_record(self):
        predictor = LwPredictor.fit(np.array([[1.0, 2.0]]), np.array([[0.3, -0.2]]))
        for query in ([0.0, 0.0], [50.0, -3.0]):
            assert lw_predict(predictor, np.array(query)) == JointAction(0.3, -0.2)

    def test_equidistant_records(self):
        inputs = np.array([[1.0, 0.0], [-1.0, 0.0]])
        predictor = LwPredictor.fit(inputs, np.array([[0.4, 0.0], [0.0, 0.2]]))
        prediction = lw_predict(predictor, np.array([0.0, 0.0]))
        assert prediction == pytest.approx((0.2, 0.1))

    def test_direct_oracle(self):
        rng = np.random.default_rng(8)
        inputs = rng.normal(size=(5, 8)) * rng.uniform(1.0, 500.0, 8)
        outputs = rng.uniform(-1.0, 1.0, (5, 2))
        predictor = LwPredictor.fit(inputs, outputs)
        for _ in range(10):
            query = inputs[0] + rng.normal(size=8) * inputs.std(axis=0) * 0.3
            expected = _direct_prediction(inputs, outputs, query)
            np.testing.assert_allclose(
                lw_predict(predictor, query), expected, rtol=1e-10, atol=1e-12
            )
            np.testing.assert_allclose(
                predictor.predict_many(query[None, :])[0], expected, rtol=1e-10
            )

    def test_permutation_invariance(self):
        rng = np.random.default_rng(9)
        inputs = rng.normal(size=(20, 8))
        outputs = rng.uniform(-1.0, 1.0, (20, 2))
        queries = rng.normal(size=(6, 8))
        order = rng.permutation(20)
        a = LwPredictor.fit(inputs, outputs).predict_many(queries)
        b = LwPredictor.fit(inputs[order], outputs[order]).predict_many(queries)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


class TestFitLw:
    def test_hf_on_dataset(self, train_high):
        predictor = fit_lw_hf(train_high)
        queries = geometry_features(train_high.geometries)
        expected = _direct_prediction(
            train_high.features(), train_high.actions(), queries[0]
        )
        np.testing.assert_allclose(
            predictor.predict_many(queries)[0], expected, rtol=1e-10
        )

    def test_hf_rejects_empty_and_wrong_fidelity(self, train_low):
        with pytest.raises(PreconditionError):
            fit_lw_hf(Dataset([]))
        with pytest.raises(PreconditionError):
            fit_lw_hf(train_low)

    def test_mf_composition(self, train_high, train_low):
        model = fit_lw_mf(train_low, train_high)
        low = LwPredictor.fit(train_low.features(), train_low.actions())
        augmented = np.hstack(
            [train_high.features(), low.predict_many(train_high.features())]
        )
        geometry = FeatureStats.from_features(train_high.features())
        predicted = FeatureStats.from_features(low.predict_many(train_low.features()))
        stats = FeatureStats(
            mean=np.concatenate([geometry.mean, predicted.mean]),
            sd=np.concatenate([geometry.sd, predicted.sd]),
        )
        high = LwPredictor(augmented, train_high.actions(), stats)

        query = train_high.features()[2] * 1.01
        step_by_step = lw_predict(
            high, np.concatenate([query, low.predict_many(query[None, :])[0]])
        )
        np.testing.assert_allclose(model.predict(query), step_by_step, rtol=1e-10)
        assert model.augmented.inputs.shape == (train_high.N, 10)

    def test_predicted_actions_standardized_over_low_fidelity(
        self, train_high, train_low
    ):
        first = fit_lw_mf(train_low, Dataset(train_high.records[:4]))
        second = fit_lw_mf(train_low, Dataset(train_high.records[4:]))
        np.testing.assert_array_equal(
            first.augmented.stats.sd[8:], second.augmented.stats.sd[8:]
        )
        np.testing.assert_array_equal(
            first.augmented.stats.sd[:8],
            FeatureStats.from_features(train_high.features()[:4]).sd,
        )

    def test_constant_low_fidelity_predictor_changes_nothing(
        self, train_high, train_low
    ):
        constant = _with_actions(
            train_low, FidelityLevel.LOW, [(0.3, -0.3)] * train_low.N
        )
        queries = geometry_features(train_low.geometries)
        mf = fit_lw_mf(constant, train_high).predict_many(queries)
        hf = fit_lw_hf(train_high).predict_many(queries)
        np.testing.assert_allclose(mf, hf, rtol=1e-9, atol=1e-12)

    def test_mf_needs_low_fidelity_records(self, train_high):
        with pytest.raises(PreconditionError):
            fit_lw_mf(train_high, train_high)
