# -*- coding: utf-8 -*-
from typing import Optional, Sequence

import numpy as np

from ..encounter import EncounterGeometry, JointAction
from ..modelfree import MfLwPredictor, fit_lw_mf, geometry_features
from ..predictor import ModelContext, Predictor
from ..randomness import RandomSource
from ..scenario import Dataset
from ..utils import PreconditionError


class LwMf(Predictor):
    """
    Locally weighted regression whose features are extended by the
    predictions of a low-fidelity locally weighted regressor
    """

    METHOD = "lw-mf"
    USES_LOW_FIDELITY = True

    def __init__(self, context: ModelContext):
        super(LwMf, self).__init__(context)
        self.model: Optional[MfLwPredictor] = None

    def fit(self, train_h: Dataset, train_l: Optional[Dataset] = None) -> None:
        if train_l is None:
            raise PreconditionError(f"{self.METHOD} needs low-fidelity training data")
        self.model = fit_lw_mf(train_l, train_h)
        self.fitted = True

    def predict(self, geometry: EncounterGeometry, rng: RandomSource) -> JointAction:
        self.check_fitted()
        return self.model.predict(geometry.features())

    def predict_many(
        self, geometries: Sequence[EncounterGeometry], rng: RandomSource
    ) -> np.ndarray:
        self.check_fitted()
        return self.model.predict_many(geometry_features(geometries))

    def describe(self) -> str:
        if not self.fitted:
            return super().describe()
        return (
            f"{self.METHOD}: {self.model.low.inputs.shape[0]} low-fidelity and "
            + f"{self.model.augmented.inputs.shape[0]} high-fidelity records, 10 features"
        )
