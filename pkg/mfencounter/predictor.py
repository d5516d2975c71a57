# -*- coding: utf-8 -*-
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .encounter import DecisionParams, EncounterGeometry, JointAction
from .kde import BANDWIDTH_FLOOR, DENSITY_FLOOR, EVALUATE_AT_ACTION
from .modelbased import ActionEnsemble, CouplingPrior, WeightGrid
from .randomness import RandomSource
from .scenario import Dataset
from .utils import PreconditionError, logger


@dataclass(eq=False)
class ModelContext:
    """
    Everything a method needs besides its training data. The ensembles are only
    required by the model-based methods.
    """

    params: DecisionParams
    grid: Optional[WeightGrid] = None
    ensemble_high: Optional[ActionEnsemble] = None
    ensemble_low: Optional[ActionEnsemble] = None
    n_samples: int = 10
    density_floor: float = DENSITY_FLOOR
    bandwidth_floor: float = BANDWIDTH_FLOOR
    likelihood_at: str = EVALUATE_AT_ACTION
    prior: Optional[CouplingPrior] = None
    posterior_prune: float = 0.0


class Predictor(ABC):
    """
    This Class is the abstract baseclass for all prediction methods. Each method extends it
    and implements the abstract methods. The harness in harness.py fits and queries the
    individual implementations as type Predictor.
    """

    METHOD = "generic"
    USES_LOW_FIDELITY = False
    MODEL_BASED = False

    def __init__(self, context: ModelContext):
        self.context: ModelContext = context
        self.fitted: bool = False

    @abstractmethod
    def fit(self, train_h: Dataset, train_l: Optional[Dataset] = None) -> None:
        """
        Each method must override this function to learn from its training data.
        Methods that do not use low-fidelity data ignore `train_l`.

        :param train_h: high-fidelity training records
        :param train_l: low-fidelity training records
        """

    @abstractmethod
    def predict(self, geometry: EncounterGeometry, rng: RandomSource) -> JointAction:
        """
        Each method must override this function to predict the joint action of one encounter.

        :param geometry: the encounter
        :param rng: stream for methods that simulate, ignored by the others
        :return: the predicted joint action
        """

    def predict_many(
        self, geometries: Sequence[EncounterGeometry], rng: RandomSource
    ) -> np.ndarray:
        """
        (M, 2) predictions, encounter i drawing from sub-stream ("predict", i)
        """
        self.check_fitted()
        return np.array(
            [
                tuple(self.predict(geometry, rng.spawn("predict", i)))
                for i, geometry in enumerate(geometries)
            ],
            dtype=np.float64,
        ).reshape(-1, 2)

    def check_fitted(self) -> None:
        if not self.fitted:
            raise PreconditionError(f"{self.METHOD} has not been fitted")

    def require_ensembles(self) -> None:
        context = self.context
        if context.grid is None or context.ensemble_high is None:
            raise PreconditionError(f"{self.METHOD} needs a weight grid and ensembles")
        if self.USES_LOW_FIDELITY and context.ensemble_low is None:
            raise PreconditionError(f"{self.METHOD} needs a low-fidelity ensemble")

    def describe(self) -> str:
        """
        One-line summary of the fitted model for logs and the `fit` command
        """
        return f"{self.METHOD}: fitted={self.fitted}"

    def log_settings(self) -> None:
        logger.info(f"Method {self.describe()}")
