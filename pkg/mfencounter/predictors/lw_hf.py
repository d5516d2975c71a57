# -*- coding: utf-8 -*-
from typing import Optional, Sequence

import numpy as np

from ..encounter import EncounterGeometry, JointAction
from ..modelfree import LwPredictor, fit_lw_hf, geometry_features, lw_predict
from ..predictor import ModelContext, Predictor
from ..randomness import RandomSource
from ..scenario import Dataset


class LwHf(Predictor):
    """
    Locally weighted regression on high-fidelity records only
    """

    METHOD = "lw-hf"

    def __init__(self, context: ModelContext):
        super(LwHf, self).__init__(context)
        self.model: Optional[LwPredictor] = None

    def fit(self, train_h: Dataset, train_l: Optional[Dataset] = None) -> None:
        self.model = fit_lw_hf(train_h)
        self.fitted = True

    def predict(self, geometry: EncounterGeometry, rng: RandomSource) -> JointAction:
        self.check_fitted()
        return lw_predict(self.model, geometry.features())

    def predict_many(
        self, geometries: Sequence[EncounterGeometry], rng: RandomSource
    ) -> np.ndarray:
        self.check_fitted()
        return self.model.predict_many(geometry_features(geometries))

    def describe(self) -> str:
        if not self.fitted:
            return super().describe()
        return f"{self.METHOD}: {self.model.inputs.shape[0]} records, 8 features"
