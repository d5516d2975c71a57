# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from mfencounter import kde
from mfencounter.kde import (
    EVALUATE_AT_ACTION,
    BandwidthConvergenceError,
    bw_botev,
    bw_silverman,
    kde_eval,
    kde_fit,
    kde_logpdf,
    nearest_neighbors,
    nn_loglik,
    select_bandwidth,
    shared_bandwidth,
)
from mfencounter.utils import PreconditionError


def _gaussian_sum(samples, bandwidth, point):
    """(1/n) sum_i N(point; sample_i, diag(h^2)) by direct summation."""
    total = 0.0
    for sample in samples:
        value = 1.0
        for x, mu, h in zip(point, sample, bandwidth):
            value *= math.exp(-0.5 * ((x - mu) / h) ** 2) / (h * math.sqrt(2 * math.pi))
        total += value
    return total / len(samples)


@pytest.fixture
def actions():
    rng = np.random.default_rng(12)
    return np.column_stack([rng.normal(0.2, 0.3, 150), rng.normal(-0.1, 0.2, 150)])


class TestKdeEvaluation:
    def test_two_point_oracle(self):
        density = kde_fit([[0.0, 0.0], [1.0, 1.0]], bandwidth=[1.0, 1.0])
        expected = 0.5 * (1.0 + math.exp(-1.0)) / (2.0 * math.pi)
        assert kde_eval(density, [0.0, 0.0]) == pytest.approx(expected, rel=1e-12)

    def test_sum_of_gaussians_oracle(self, actions):
        density = kde_fit(actions, bandwidth=[0.15, 0.08])
        points = np.random.default_rng(1).uniform(-1.0, 1.0, (100, 2))
        values = np.exp(kde_logpdf(density, points))
        oracle = [_gaussian_sum(actions, (0.15, 0.08), p) for p in points]
        np.testing.assert_allclose(values, oracle, rtol=1e-9)

    def test_integrates_to_one(self, actions):
        density = kde_fit(actions)
        axis = np.linspace(-3.0, 3.0, 301)
        a1, a2 = np.meshgrid(axis, axis, indexing="ij")
        values = np.exp(kde_logpdf(density, np.column_stack([a1.ravel(), a2.ravel()])))
        step = axis[1] - axis[0]
        assert np.sum(values) * step * step == pytest.approx(1.0, abs=0.02)

    def test_far_point_is_finite(self):
        density = kde_fit([[0.0, 0.0], [0.1, 0.1]], bandwidth=[0.1, 0.1])
        log_value = kde_logpdf(density, [[100.0, 100.0]])[0]
        assert np.isfinite(log_value)
        assert log_value < -1e5

    def test_point_symmetry(self, actions):
        density = kde_fit(actions, bandwidth=[0.2, 0.2])
        mirrored = kde_fit(-actions, bandwidth=[0.2, 0.2])
        points = np.random.default_rng(2).uniform(-1.0, 1.0, (20, 2))
        np.testing.assert_allclose(
            kde_logpdf(density, points), kde_logpdf(mirrored, -points), rtol=1e-12
        )

    def test_member_cache(self, actions):
        density = kde_fit(actions)
        np.testing.assert_array_equal(
            density.member_logpdf(), kde_logpdf(density, actions)
        )

    def test_needs_two_samples(self):
        with pytest.raises(PreconditionError):
            kde_fit([[0.0, 0.0]])


class TestBandwidth:
    def test_diffusion_near_rule_of_thumb_for_gaussian_data(self):
        x = np.random.default_rng(5).standard_normal(1000)
        h = bw_botev(x)
        assert 0.1 < h < 0.6
        assert h == pytest.approx(bw_silverman(x), rel=0.5)

    def test_constant_data_gets_floor(self):
        assert select_bandwidth(np.full(10, 0.3), bandwidth_floor=0.002) == 0.002
        density = kde_fit([[0.3, 0.1], [0.3, 0.2], [0.3, 0.4]], bandwidth_floor=0.002)
        assert density.bandwidth[0] == 0.002

    def test_spreadless_data_rejected(self):
        with pytest.raises(BandwidthConvergenceError):
            bw_botev(np.ones(5))

    def test_fallback_to_rule_of_thumb(self, monkeypatch):
        def unbracketed(x, grid_points=kde.GRID_POINTS):
            raise BandwidthConvergenceError("no root")

        monkeypatch.setattr(kde, "bw_botev", unbracketed)
        x = np.random.default_rng(6).standard_normal(200)
        assert select_bandwidth(x) == pytest.approx(bw_silverman(x))

    def test_floor_is_a_minimum(self):
        x = np.random.default_rng(7).standard_normal(300) * 1e-6
        assert select_bandwidth(x, bandwidth_floor=1e-3) == 1e-3

    def test_shared_bandwidth_is_the_median(self):
        rng = np.random.default_rng(8)
        sets = [
            np.column_stack([rng.normal(0.0, sd, 200), rng.normal(0.0, 0.1, 200)])
            for sd in (0.05, 0.2, 0.8)
        ]
        per_set = [[select_bandwidth(s[:, dim]) for dim in range(2)] for s in sets]
        np.testing.assert_array_equal(
            shared_bandwidth(sets), np.median(per_set, axis=0)
        )

    def test_shared_bandwidth_keeps_the_floor(self):
        sets = [np.full((5, 2), 0.3), np.full((5, 2), -0.2)]
        np.testing.assert_array_equal(
            shared_bandwidth(sets, bandwidth_floor=0.004), [0.004, 0.004]
        )
        with pytest.raises(PreconditionError):
            shared_bandwidth([])


class TestNearestNeighbourLikelihood:
    def test_ties_go_to_lowest_index(self):
        members = np.array([[0.0, 0.0], [1.0, 0.0]])
        np.testing.assert_array_equal(
            nearest_neighbors([[0.5, 0.0], [0.9, 0.0]], members), [0, 1]
        )

    def test_two_member_hand_case(self):
        members = np.array([[0.0, 0.0], [1.0, 0.0]])
        density = kde_fit(members, bandwidth=[1.0, 1.0])
        train = [[0.1, 0.0], [0.9, 0.0], [0.2, 0.0]]
        member_density = 0.5 * (1.0 + math.exp(-0.5)) / (2.0 * math.pi)
        assert nn_loglik(train, members, density) == pytest.approx(
            3.0 * math.log(member_density), rel=1e-12
        )

    def test_brute_force_double_loop(self):
        rng = np.random.default_rng(30)
        ensemble = rng.uniform(-1.0, 1.0, (200, 2))
        train = rng.uniform(-1.0, 1.0, (50, 2))
        density = kde_fit(ensemble)

        expected, neighbours = [], []
        for a in train:
            best, best_distance = 0, math.inf
            for i, member in enumerate(ensemble):
                distance = (a[0] - member[0]) ** 2 + (a[1] - member[1]) ** 2
                if distance < best_distance:
                    best, best_distance = i, distance
            neighbours.append(best)
            expected.append(kde_logpdf(density, ensemble[best])[0])
        np.testing.assert_array_equal(nearest_neighbors(train, ensemble), neighbours)
        assert nn_loglik(train, ensemble, density) == pytest.approx(
            math.fsum(expected), rel=1e-12
        )

    def test_density_floor_clips(self):
        members = np.array([[0.0, 0.0], [1.0, 0.0]])
        wide = kde_fit(members, bandwidth=[100.0, 100.0])
        # every density is far below 1, so clipping at 1 gives log-likelihood 0
        assert nn_loglik([[0.0, 0.0]], members, wide, density_floor=1.0) == 0.0

    def test_action_point_reads_the_density_at_the_training_action(self):
        rng = np.random.default_rng(31)
        ensemble = rng.uniform(-1.0, 1.0, (200, 2))
        train = rng.uniform(-1.0, 1.0, (50, 2))
        density = kde_fit(ensemble)
        expected = math.fsum(kde_logpdf(density, train))
        assert nn_loglik(
            train, ensemble, density, evaluate_at=EVALUATE_AT_ACTION
        ) == pytest.approx(expected, rel=1e-12)

    def test_action_point_sees_distance_to_the_ensemble(self):
        members = np.array([[0.0, 0.0], [0.1, 0.0]])
        density = kde_fit(members, bandwidth=[0.05, 0.05])
        near, far = [[0.05, 0.0]], [[0.8, 0.0]]
        assert nn_loglik(near, members, density) == nn_loglik(far, members, density)
        assert nn_loglik(
            far, members, density, evaluate_at=EVALUATE_AT_ACTION
        ) < nn_loglik(near, members, density, evaluate_at=EVALUATE_AT_ACTION)

    def test_unknown_evaluation_point(self):
        members = np.array([[0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(PreconditionError):
            nn_loglik(members, members, kde_fit(members), evaluate_at="centre")

    def test_empty_training(self):
        members = np.array([[0.0, 0.0], [1.0, 0.0]])
        with pytest.raises(PreconditionError):
            nn_loglik(np.empty((0, 2)), members, kde_fit(members))
