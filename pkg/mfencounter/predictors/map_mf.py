# -*- coding: utf-8 -*-
from typing import Optional

from ..encounter import EncounterGeometry, JointAction, UtilityWeights
from ..modelbased import fit_map_mf, predict_map
from ..predictor import ModelContext, Predictor
from ..randomness import RandomSource
from ..scenario import Dataset
from ..utils import PreconditionError, logger


class MapMf(Predictor):
    """
    MAP utility weights from low- and high-fidelity records pooled as if both came
    from the same pilots, prediction by simulating the high-fidelity game
    """

    METHOD = "map-mf"
    USES_LOW_FIDELITY = True
    MODEL_BASED = True

    def __init__(self, context: ModelContext):
        super(MapMf, self).__init__(context)
        self.weights: Optional[UtilityWeights] = None

    def fit(self, train_h: Dataset, train_l: Optional[Dataset] = None) -> None:
        if train_l is None:
            raise PreconditionError(f"{self.METHOD} needs low-fidelity training data")
        self.require_ensembles()
        self.weights = fit_map_mf(
            train_l,
            train_h,
            self.context.grid,
            self.context.ensemble_low,
            self.context.ensemble_high,
            self.context.density_floor,
            self.context.bandwidth_floor,
            self.context.likelihood_at,
        )
        self.fitted = True
        logger.debug(f"{self.METHOD}: w* = {self.weights}")

    def predict(self, geometry: EncounterGeometry, rng: RandomSource) -> JointAction:
        self.check_fitted()
        return predict_map(
            geometry, self.weights, self.context.params, self.context.n_samples, rng
        )

    def describe(self) -> str:
        if not self.fitted:
            return super().describe()
        return f"{self.METHOD}: w* = {self.weights}"
