# -*- coding: utf-8 -*-
from typing import Optional

from ..encounter import EncounterGeometry, JointAction
from ..modelbased import (
    LikelihoodTable,
    PosteriorTable,
    likelihood_table,
    predict_bayes,
    weight_posterior,
)
from ..predictor import ModelContext, Predictor
from ..randomness import RandomSource
from ..scenario import Dataset
from ..utils import PreconditionError, logger


class BayesMf(Predictor):
    """
    Posterior over high-fidelity weights that lets low-fidelity data inform it
    through a coupling prior, prediction by the posterior-weighted mixture of
    simulations over the grid
    """

    METHOD = "bayes-mf"
    USES_LOW_FIDELITY = True
    MODEL_BASED = True

    def __init__(self, context: ModelContext):
        super(BayesMf, self).__init__(context)
        self.table_high: Optional[LikelihoodTable] = None
        self.table_low: Optional[LikelihoodTable] = None
        self.posterior: Optional[PosteriorTable] = None

    def fit(self, train_h: Dataset, train_l: Optional[Dataset] = None) -> None:
        if train_l is None or train_l.N == 0 or train_h.N == 0:
            raise PreconditionError(
                f"{self.METHOD} needs non-empty low- and high-fidelity training data"
            )
        self.require_ensembles()
        context = self.context
        if context.prior is None:
            logger.warning(
                f"{self.METHOD}: no coupling prior given, using a uniform one"
            )
        self.table_high = likelihood_table(
            train_h.actions(),
            context.ensemble_high,
            context.density_floor,
            context.bandwidth_floor,
            context.likelihood_at,
        )
        self.table_low = likelihood_table(
            train_l.actions(),
            context.ensemble_low,
            context.density_floor,
            context.bandwidth_floor,
            context.likelihood_at,
        )
        self.posterior = weight_posterior(
            self.table_high, self.table_low, context.prior, context.grid
        )
        self.fitted = True
        logger.debug(f"{self.METHOD}: posterior mode {self.posterior.mode()}")

    def predict(self, geometry: EncounterGeometry, rng: RandomSource) -> JointAction:
        self.check_fitted()
        return predict_bayes(
            geometry,
            self.posterior,
            self.context.grid,
            self.context.params,
            self.context.n_samples,
            rng,
            self.context.posterior_prune,
        )

    def describe(self) -> str:
        if not self.fitted:
            return super().describe()
        top = ", ".join(f"{w} p={p:.3f}" for w, p in self.posterior.top(3))
        return f"{self.METHOD}: posterior mean {self.posterior.mean()}, top {top}"
