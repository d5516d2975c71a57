# -*- coding: utf-8 -*-
"""
Locally weighted regression from encounter geometry to joint action.

The kernel is a softmin over standardized Euclidean distances,
z_j = exp(-d_j) / sum_k exp(-d_k), and the prediction is sum_j z_j * A_j.
"""
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .encounter import EncounterGeometry, FidelityLevel, JointAction
from .scenario import Dataset
from .utils import PreconditionError, logger

# relative spread below which a feature counts as constant
CONSTANT_SD = 1.0e-12


@dataclass(frozen=True, eq=False)
class FeatureStats:
    """
    Per-dimension mean and standard deviation of training features.
    Constant dimensions, up to rounding, get sd = 1.
    """

    mean: np.ndarray
    sd: np.ndarray

    def __post_init__(self):
        if self.mean.shape != self.sd.shape or self.mean.ndim != 1:
            raise PreconditionError(
                f"mean {self.mean.shape} and sd {self.sd.shape} must be equal 1-D shapes"
            )

    @property
    def dimensions(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def from_features(cls, features: np.ndarray) -> "FeatureStats":
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] < 1:
            raise PreconditionError(
                f"Feature matrix must be (N >= 1, D), got {features.shape}"
            )
        mean = np.mean(features, axis=0)
        sd = np.std(features, axis=0)
        sd = np.where(sd > CONSTANT_SD * np.maximum(1.0, np.abs(mean)), sd, 1.0)
        return cls(mean=mean, sd=sd)

    def check(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.shape[-1] != self.dimensions:
            raise PreconditionError(
                f"Feature dimension {features.shape[-1]} != {self.dimensions}"
            )
        return features


def standardized_distance(a: np.ndarray, b: np.ndarray, stats: FeatureStats) -> float:
    """
    sqrt( sum_k ((a_k - b_k) / sd_k)^2 )
    """
    a = stats.check(np.asarray(a, dtype=np.float64).reshape(-1))
    b = stats.check(np.asarray(b, dtype=np.float64).reshape(-1))
    return float(np.sqrt(np.sum(((a - b) / stats.sd) ** 2)))


def _distances(
    queries: np.ndarray, inputs: np.ndarray, stats: FeatureStats
) -> np.ndarray:
    # (M, N) standardized distances
    scaled = (queries[:, None, :] - inputs[None, :, :]) / stats.sd
    return np.sqrt(np.sum(scaled**2, axis=2))


@dataclass(frozen=True, eq=False)
class KernelWeights:
    """
    Softmin weights of one query over the training records
    """

    z: np.ndarray

    @classmethod
    def from_distances(cls, distances: np.ndarray) -> "KernelWeights":
        distances = np.asarray(distances, dtype=np.float64)
        # shifting by the minimum cancels in the normalisation and avoids underflow
        unnormalised = np.exp(-(distances - np.min(distances)))
        return cls(z=unnormalised / np.sum(unnormalised))


@dataclass(frozen=True, eq=False)
class LwPredictor:
    inputs: np.ndarray
    outputs: np.ndarray
    stats: FeatureStats

    def __post_init__(self):
        if self.inputs.shape[0] < 1 or self.inputs.shape[0] != self.outputs.shape[0]:
            raise PreconditionError(
                f"LW predictor needs equal, non-zero input ({self.inputs.shape[0]}) "
                + f"and output ({self.outputs.shape[0]}) counts"
            )

    @classmethod
    def fit(cls, inputs: np.ndarray, outputs: np.ndarray) -> "LwPredictor":
        inputs = np.asarray(inputs, dtype=np.float64)
        outputs = np.asarray(outputs, dtype=np.float64).reshape(-1, 2)
        return cls(inputs, outputs, FeatureStats.from_features(inputs))

    def kernel_weights(self, query: np.ndarray) -> KernelWeights:
        query = self.stats.check(np.asarray(query, dtype=np.float64).reshape(1, -1))
        distances = _distances(query, self.inputs, self.stats)[0]
        return KernelWeights.from_distances(distances)

    def predict_many(self, queries: np.ndarray) -> np.ndarray:
        """
        (M, 2) predictions for an (M, D) query matrix
        """
        queries = self.stats.check(np.atleast_2d(np.asarray(queries, dtype=np.float64)))
        distances = _distances(queries, self.inputs, self.stats)
        unnormalised = np.exp(-(distances - np.min(distances, axis=1, keepdims=True)))
        z = unnormalised / np.sum(unnormalised, axis=1, keepdims=True)
        return z @ self.outputs


def lw_predict(predictor: LwPredictor, query: np.ndarray) -> JointAction:
    """
    Kernel-weighted average of the training joint actions

    :param predictor: fitted predictor
    :param query: feature vector of the predictor's dimension
    :return: the predicted joint action
    """
    prediction = predictor.kernel_weights(query).z @ predictor.outputs
    return JointAction(float(prediction[0]), float(prediction[1]))


def _check_dataset(dataset: Dataset, fidelity: FidelityLevel, name: str) -> None:
    if dataset is None or dataset.N == 0:
        raise PreconditionError(f"{name} training set must not be empty")
    wrong = [r.encounter_id for r in dataset if r.fidelity is not fidelity]
    if wrong:
        raise PreconditionError(
            f"{name} training set holds {len(wrong)} records of the wrong fidelity"
        )


def fit_lw_hf(train_h: Dataset) -> LwPredictor:
    """
    Locally weighted predictor on the 8-D geometry of high-fidelity records only
    """
    _check_dataset(train_h, FidelityLevel.HIGH, "High-fidelity")
    return LwPredictor.fit(train_h.features(), train_h.actions())


@dataclass(frozen=True, eq=False)
class MfLwPredictor:
    """
    R_h'(S, R_l(S)): a low-fidelity predictor whose output augments the
    geometry features of a high-fidelity predictor
    """

    low: LwPredictor
    augmented: LwPredictor

    def augment(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        return np.hstack([features, self.low.predict_many(features)])

    def predict_many(self, queries: np.ndarray) -> np.ndarray:
        return self.augmented.predict_many(self.augment(queries))

    def predict(self, query: np.ndarray) -> JointAction:
        return lw_predict(self.augmented, self.augment(query)[0])


def fit_lw_mf(train_l: Dataset, train_h: Dataset) -> MfLwPredictor:
    """
    Fit R_l on low-fidelity records, then R_h' on the high-fidelity geometry
    extended by R_l's predictions (10-D, every dimension standardized).

    The geometry dimensions are standardized over the high-fidelity records like
    in LW-HF, the two predicted-action dimensions over R_l's predictions for the
    low-fidelity geometry.
    """
    _check_dataset(train_l, FidelityLevel.LOW, "Low-fidelity")
    _check_dataset(train_h, FidelityLevel.HIGH, "High-fidelity")
    features_l = train_l.features()
    low = LwPredictor.fit(features_l, train_l.actions())
    features_h = train_h.features()
    augmented_inputs = np.hstack([features_h, low.predict_many(features_h)])
    geometry = FeatureStats.from_features(features_h)
    predicted = FeatureStats.from_features(low.predict_many(features_l))
    stats = FeatureStats(
        mean=np.concatenate([geometry.mean, predicted.mean]),
        sd=np.concatenate([geometry.sd, predicted.sd]),
    )
    logger.debug(
        f"LW-MF: {train_l.N} low-fidelity and {train_h.N} high-fidelity records, "
        + f"{augmented_inputs.shape[1]} features, predicted-action sd {predicted.sd}"
    )
    augmented = LwPredictor(
        augmented_inputs, np.asarray(train_h.actions(), dtype=np.float64), stats
    )
    return MfLwPredictor(low=low, augmented=augmented)


def geometry_features(
    geometries: Union[EncounterGeometry, Sequence[EncounterGeometry]]
) -> np.ndarray:
    if isinstance(geometries, EncounterGeometry):
        geometries = [geometries]
    return np.array([geometry.features() for geometry in geometries]).reshape(-1, 8)
