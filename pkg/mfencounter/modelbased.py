# -*- coding: utf-8 -*-
"""
Model-based prediction: estimate the utility weights the pilots play with, then
predict by simulating the game at those weights.

For every weight combination on a grid the game is simulated on a shared set of
novel encounters. A KDE over the resulting joint actions is the likelihood of an
observed joint action under that combination (pooled over geometry). All KDEs of
one ensemble share a bandwidth. Training actions are scored at themselves by
default, or at their nearest ensemble member.
"""
import configparser
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

from .encounter import (
    AircraftState,
    DecisionParams,
    EncounterGeometry,
    FidelityLevel,
    JointAction,
    PLAYER_STREAMS,
    UtilityWeights,
    choose_action_level1,
    simulate_encounters,
)
from .kde import (
    BANDWIDTH_FLOOR,
    DENSITY_FLOOR,
    EVALUATE_AT_ACTION,
    ActionDensity,
    kde_fit,
    kde_logpdf,
    nn_loglik,
    shared_bandwidth,
)
from .randomness import RandomSource
from .scenario import (
    DATASET_COLUMNS,
    Dataset,
    GroundTruth,
    ScenarioConfig,
    Split,
    sample_geometry,
)
from .utils import (
    ConfigurationError,
    DegenerateLikelihoodError,
    PreconditionError,
    constrain,
    get_option,
    logger,
    write_text_atomic,
)

ENSEMBLE_COLUMNS = DATASET_COLUMNS + ["w1", "w2"]
# bumped whenever the way ensembles are drawn changes, so stale caches are not read
ENSEMBLE_VERSION = 2

# coupling prior entries between the four weights (w_l^1, w_l^2, w_h^1, w_h^2)
PRIOR_VARIANCE = 0.0017
PRIOR_COVARIANCE = 0.0013


# --------- Weight grid ---------
@dataclass(frozen=True)
class WeightGrid:
    """
    Per-player weight values. Joint combinations are the Cartesian product in
    lexicographic (w1, w2) order, so index j = i1 * len(values) + i2.
    """

    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) == 0:
            raise ConfigurationError("Weight grid must hold at least one value")
        if any(not (0.0 <= v <= 1.0) for v in values):
            raise ConfigurationError(f"Weight grid values must lie in [0, 1]: {values}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigurationError(
                f"Weight grid must be strictly increasing: {values}"
            )

    @classmethod
    def from_range(
        cls, weight_min: float, weight_max: float, step: float
    ) -> "WeightGrid":
        if not step > 0 or weight_max < weight_min:
            raise ConfigurationError(
                f"Invalid weight range {weight_min}..{weight_max} step {step}"
            )
        count = int(round((weight_max - weight_min) / step)) + 1
        # rounding keeps 0.8 + 3 * 0.01 at 0.83
        return cls(tuple(np.round(weight_min + step * np.arange(count), 10)))

    @classmethod
    def from_config(cls, cfg: configparser.ConfigParser) -> "WeightGrid":
        return cls.from_range(
            get_option(cfg, "grid", "weight_min", float),
            get_option(cfg, "grid", "weight_max", float),
            get_option(cfg, "grid", "weight_step", float),
        )

    @property
    def combinations(self) -> List[UtilityWeights]:
        return [UtilityWeights(w1, w2) for w1 in self.values for w2 in self.values]

    def __len__(self) -> int:
        return len(self.values) ** 2

    def index_of(self, weights: UtilityWeights) -> int:
        try:
            i1 = self.values.index(round(weights.w1, 10))
            i2 = self.values.index(round(weights.w2, 10))
        except ValueError:
            raise PreconditionError(f"Weights {weights} are not on the grid")
        return i1 * len(self.values) + i2

    def as_array(self) -> np.ndarray:
        """
        (J, 2) weights of every combination
        """
        return np.array([(w.w1, w.w2) for w in self.combinations], dtype=np.float64)


# --------- Action ensemble ---------
def sample_novel_geometries(
    n: int, config: ScenarioConfig, rng: RandomSource
) -> List[EncounterGeometry]:
    """
    Novel encounters drawn like training encounters, each from its own sub-stream
    """
    if n < 1:
        raise PreconditionError(f"Ensemble size must be >= 1, got {n}")
    return [
        sample_geometry(config, Split.TRAIN, rng.spawn("novel", e).generator())
        for e in range(n)
    ]


@dataclass(eq=False)
class ActionEnsemble:
    """
    actions[j, e] is the joint action of novel encounter e simulated at combination j
    """

    grid: WeightGrid
    fidelity: FidelityLevel
    novel: List[EncounterGeometry]
    actions: np.ndarray
    seeds: np.ndarray
    _densities: Dict[float, List[ActionDensity]] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __post_init__(self):
        expected = (len(self.grid), len(self.novel), 2)
        if self.actions.shape != expected:
            raise PreconditionError(
                f"Ensemble actions have shape {self.actions.shape}, expected {expected}"
            )

    @property
    def size(self) -> int:
        return len(self.novel)

    def actions_for(self, weights: UtilityWeights) -> np.ndarray:
        return self.actions[self.grid.index_of(weights)]

    def densities(
        self, bandwidth_floor: float = BANDWIDTH_FLOOR
    ) -> List[ActionDensity]:
        """
        One KDE per combination, all with the ensemble's shared bandwidth,
        fitted once per bandwidth floor
        """
        if bandwidth_floor not in self._densities:
            bandwidth = shared_bandwidth(self.actions, bandwidth_floor)
            logger.info(
                f"Fitting {len(self.grid)} {self.fidelity.value}-fidelity action densities"
                + f" with bandwidth {np.array2string(bandwidth, precision=4)}"
            )
            self._densities[bandwidth_floor] = [
                kde_fit(actions, bandwidth=bandwidth, bandwidth_floor=bandwidth_floor)
                for actions in self.actions
            ]
        return self._densities[bandwidth_floor]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for weights, actions in zip(self.grid.combinations, self.actions):
            for e, (geometry, action) in enumerate(zip(self.novel, actions)):
                rows.append(
                    (e, self.fidelity.value)
                    + tuple(geometry.s1)
                    + tuple(geometry.s2)
                    + (float(action[0]), float(action[1]), int(self.seeds[e]))
                    + (weights.w1, weights.w2)
                )
        frame = pd.DataFrame(rows, columns=ENSEMBLE_COLUMNS)
        return frame.astype({"encounter_id": "int64", "seed": "uint64"})

    def write_csv(self, file_path: Union[str, Path]) -> None:
        buffer = io.StringIO()
        self.to_frame().to_csv(buffer, index=False, lineterminator="\n")
        write_text_atomic(file_path, buffer.getvalue())
        logger.info(
            f"Wrote {self.fidelity.value}-fidelity ensemble "
            + f"({len(self.grid)} x {self.size}) to {file_path}"
        )

    @classmethod
    def read_csv(
        cls, file_path: Union[str, Path], grid: WeightGrid
    ) -> "ActionEnsemble":
        frame = pd.read_csv(
            file_path,
            float_precision="round_trip",
            dtype={"encounter_id": "int64", "fidelity": str, "seed": "uint64"},
            encoding="utf-8",
        )
        missing = [column for column in ENSEMBLE_COLUMNS if column not in frame.columns]
        if missing:
            raise PreconditionError(f"Ensemble file is missing columns {missing}")
        fidelities = frame["fidelity"].unique()
        if len(fidelities) != 1:
            raise PreconditionError(
                f"Ensemble file mixes fidelities {list(fidelities)}"
            )
        fidelity = FidelityLevel.parse(fidelities[0])

        combinations = grid.combinations
        size = int(frame["encounter_id"].max()) + 1
        if len(frame) != len(combinations) * size:
            raise PreconditionError(
                f"Ensemble file {file_path} has {len(frame)} rows, "
                + f"expected {len(combinations)} x {size} for the configured grid"
            )
        frame = frame.sort_values(["w1", "w2", "encounter_id"], kind="stable")
        actions = frame[["a1", "a2"]].to_numpy(dtype=np.float64).reshape(-1, size, 2)
        cached = frame[["w1", "w2"]].to_numpy().reshape(-1, size, 2)[:, 0, :]
        if not np.allclose(cached, grid.as_array(), atol=1e-9):
            raise PreconditionError(
                f"Ensemble file {file_path} was built on a different weight grid"
            )
        first = frame.iloc[:size]
        novel = [
            EncounterGeometry(
                AircraftState.from_array((r.s1_x, r.s1_y, r.s1_vx, r.s1_vy)),
                AircraftState.from_array((r.s2_x, r.s2_y, r.s2_vx, r.s2_vy)),
            )
            for r in first.itertuples(index=False)
        ]
        seeds = first["seed"].to_numpy(dtype=np.uint64)
        return cls(grid, fidelity, novel, actions, seeds)


def decision_stream(rng: RandomSource, player: int, w: float) -> RandomSource:
    """
    Sub-stream of one player's decision at own weight `w` in an ensemble encounter

    :param rng: the encounter's stream
    :param player: 0 for Player 1, 1 for Player 2
    """
    return rng.spawn(PLAYER_STREAMS[player], f"w={w:.10f}")


def _simulate_novel(job) -> np.ndarray:
    """
    (J, 2) joint actions of one novel encounter over the grid. A player's choice
    depends only on its own weight, so it is drawn once per weight value and the
    combinations are assembled from those choices.
    """
    geometry, values, fidelity, params, rng = job
    choices = [
        np.array(
            [
                choose_action_level1(
                    own,
                    intruder,
                    w,
                    fidelity,
                    params,
                    decision_stream(rng, player, w).generator(),
                )
                for w in values
            ]
        )
        for player, (own, intruder) in enumerate(
            ((geometry.s1, geometry.s2), (geometry.s2, geometry.s1))
        )
    ]
    # ij order matches WeightGrid.combinations: j = i1 * len(values) + i2
    a1, a2 = np.meshgrid(choices[0], choices[1], indexing="ij")
    return np.stack([a1.ravel(), a2.ravel()], axis=1)


def build_action_ensemble(
    grid: WeightGrid,
    novel: Sequence[EncounterGeometry],
    fidelity: FidelityLevel,
    params: DecisionParams,
    rng: RandomSource,
    workers: int = 1,
) -> ActionEnsemble:
    """
    Simulate every novel encounter once per weight combination.

    Encounter e has the sub-stream ("encounter", e). Each player's decision at
    weight value w draws from `decision_stream(("encounter", e), player, w)`,
    so different weights see independent observations and candidates.

    :param workers: processes to simulate with; results do not depend on it
    :return: the ensemble
    """
    if len(grid) == 0 or len(novel) == 0:
        raise PreconditionError("Ensemble needs a non-empty grid and encounter list")
    combinations = grid.combinations
    streams = [rng.spawn("encounter", e) for e in range(len(novel))]
    jobs = [
        (geometry, grid.values, fidelity, params, stream)
        for geometry, stream in zip(novel, streams)
    ]
    logger.info(
        f"Simulating {fidelity.value}-fidelity ensemble: {len(combinations)} "
        + f"combinations x {len(novel)} encounters"
    )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            per_encounter = list(
                executor.map(
                    _simulate_novel, jobs, chunksize=max(1, len(jobs) // (4 * workers))
                )
            )
    else:
        per_encounter = [_simulate_novel(job) for job in jobs]
    # (n, J, 2) -> (J, n, 2)
    actions = np.ascontiguousarray(np.stack(per_encounter, axis=0).transpose(1, 0, 2))
    seeds = np.array([stream.seed for stream in streams], dtype=np.uint64)
    return ActionEnsemble(grid, fidelity, list(novel), actions, seeds)


# --------- Likelihood and MAP ---------
@dataclass(frozen=True, eq=False)
class LikelihoodTable:
    """
    Summed log-likelihood of a training set for each grid combination
    """

    grid: WeightGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.grid),):
            raise PreconditionError(
                f"Likelihood table of shape {self.values.shape} does not match "
                + f"a grid of {len(self.grid)} combinations"
            )

    def __add__(self, other: "LikelihoodTable") -> "LikelihoodTable":
        if other.grid != self.grid:
            raise PreconditionError("Likelihood tables are over different grids")
        return LikelihoodTable(self.grid, self.values + other.values)


def likelihood_table(
    train_actions: np.ndarray,
    ensemble: ActionEnsemble,
    density_floor: float = DENSITY_FLOOR,
    bandwidth_floor: float = BANDWIDTH_FLOOR,
    evaluate_at: str = EVALUATE_AT_ACTION,
) -> LikelihoodTable:
    """
    nn_loglik of the training actions under every combination of the ensemble
    """
    train_actions = np.asarray(train_actions, dtype=np.float64).reshape(-1, 2)
    if train_actions.shape[0] == 0:
        raise PreconditionError("Likelihood needs at least one training action")
    densities = ensemble.densities(bandwidth_floor)
    values = np.array(
        [
            nn_loglik(train_actions, actions, density, density_floor, evaluate_at)
            for actions, density in zip(ensemble.actions, densities)
        ],
        dtype=np.float64,
    )
    return LikelihoodTable(ensemble.grid, values)


def map_estimate(
    table: LikelihoodTable, log_prior: Optional[np.ndarray] = None
) -> UtilityWeights:
    """
    argmax over the grid of log-prior + log-likelihood, ties to the
    lexicographically smallest (w1, w2)

    :param table: log-likelihood per combination
    :param log_prior: log-prior per combination, uniform if omitted
    :return: the MAP combination
    """
    totals = np.array(table.values, dtype=np.float64)
    if log_prior is not None:
        totals = totals + np.asarray(log_prior, dtype=np.float64)
    totals = np.where(np.isnan(totals), -np.inf, totals)
    if totals.size == 0 or not np.any(totals > -np.inf):
        raise DegenerateLikelihoodError(
            "Every weight combination has log-probability -inf"
        )
    # combinations are in lexicographic order and argmax returns the first maximum
    return table.grid.combinations[int(np.argmax(totals))]


def _check_ensemble(ensemble: ActionEnsemble, grid: WeightGrid, fidelity) -> None:
    if ensemble.grid != grid:
        raise PreconditionError("Ensemble was built on a different weight grid")
    if ensemble.fidelity is not fidelity:
        raise PreconditionError(
            f"Expected a {fidelity.value}-fidelity ensemble, got {ensemble.fidelity.value}"
        )


def _check_training(dataset: Dataset, name: str) -> None:
    if dataset is None or dataset.N == 0:
        raise PreconditionError(f"{name} training set must not be empty")


def fit_map_hf(
    train_h: Dataset,
    grid: WeightGrid,
    ensemble_h: ActionEnsemble,
    density_floor: float = DENSITY_FLOOR,
    bandwidth_floor: float = BANDWIDTH_FLOOR,
    evaluate_at: str = EVALUATE_AT_ACTION,
) -> UtilityWeights:
    """
    MAP weights from high-fidelity data under a uniform prior
    """
    _check_training(train_h, "High-fidelity")
    _check_ensemble(ensemble_h, grid, FidelityLevel.HIGH)
    table = likelihood_table(
        train_h.actions(), ensemble_h, density_floor, bandwidth_floor, evaluate_at
    )
    return map_estimate(table)


def fit_map_mf(
    train_l: Dataset,
    train_h: Dataset,
    grid: WeightGrid,
    ensemble_l: ActionEnsemble,
    ensemble_h: ActionEnsemble,
    density_floor: float = DENSITY_FLOOR,
    bandwidth_floor: float = BANDWIDTH_FLOOR,
    evaluate_at: str = EVALUATE_AT_ACTION,
) -> UtilityWeights:
    """
    MAP weights from both fidelities, treating novices and experts as the same
    decision makers: the two log-likelihood tables are added
    """
    _check_training(train_l, "Low-fidelity")
    _check_training(train_h, "High-fidelity")
    _check_ensemble(ensemble_l, grid, FidelityLevel.LOW)
    _check_ensemble(ensemble_h, grid, FidelityLevel.HIGH)
    table_h = likelihood_table(
        train_h.actions(), ensemble_h, density_floor, bandwidth_floor, evaluate_at
    )
    table_l = likelihood_table(
        train_l.actions(), ensemble_l, density_floor, bandwidth_floor, evaluate_at
    )
    return map_estimate(table_h + table_l)


# --------- Prediction by simulation ---------
def predict_map_weights(
    geometry: EncounterGeometry,
    weights: Sequence[UtilityWeights],
    params: DecisionParams,
    n_samples: int,
    rng: RandomSource,
) -> np.ndarray:
    """
    (len(weights), 2) mean high-fidelity joint actions over `n_samples` simulations,
    sample l drawing from sub-stream ("sample", l) for every combination
    """
    if n_samples < 1:
        raise PreconditionError(f"n_samples must be >= 1, got {n_samples}")
    samples = np.stack(
        [
            simulate_encounters(
                geometry, weights, FidelityLevel.HIGH, params, rng.spawn("sample", l)
            )
            for l in range(n_samples)
        ],
        axis=0,
    )
    return np.mean(samples, axis=0)


def predict_map(
    geometry: EncounterGeometry,
    w: UtilityWeights,
    params: DecisionParams,
    n_samples: int,
    rng: RandomSource,
) -> JointAction:
    """
    Component-wise mean of `n_samples` high-fidelity simulations at weights `w`
    """
    prediction = predict_map_weights(geometry, [w], params, n_samples, rng)[0]
    return JointAction(float(prediction[0]), float(prediction[1]))


# --------- Coupled posterior ---------
@dataclass(frozen=True, eq=False)
class CouplingPrior:
    """
    Gaussian prior over (w_l^1, w_l^2, w_h^1, w_h^2) tying each player's novice
    and expert weights together
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        covariance = np.asarray(self.covariance, dtype=np.float64)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", covariance)
        if mean.shape != (4,) or covariance.shape != (4, 4):
            raise ConfigurationError(
                "Coupling prior needs a 4-vector mean and 4x4 covariance, "
                + f"got {mean.shape} and {covariance.shape}"
            )
        if not np.allclose(covariance, covariance.T):
            raise ConfigurationError("Coupling prior covariance is not symmetric")
        try:
            np.linalg.cholesky(covariance)
        except np.linalg.LinAlgError:
            raise ConfigurationError(
                "Coupling prior covariance is not positive definite"
            )

    @staticmethod
    def default_covariance(
        variance: float = PRIOR_VARIANCE, covariance: float = PRIOR_COVARIANCE
    ) -> np.ndarray:
        matrix = np.eye(4) * variance
        for low, high in ((0, 2), (1, 3)):
            matrix[low, high] = matrix[high, low] = covariance
        return matrix

    @classmethod
    def from_weights(
        cls,
        w_low: UtilityWeights,
        w_high: UtilityWeights,
        variance: float = PRIOR_VARIANCE,
        covariance: float = PRIOR_COVARIANCE,
    ) -> "CouplingPrior":
        return cls(
            mean=np.array([w_low.w1, w_low.w2, w_high.w1, w_high.w2]),
            covariance=cls.default_covariance(variance, covariance),
        )

    @classmethod
    def from_config(
        cls, cfg: configparser.ConfigParser, truth: GroundTruth
    ) -> "CouplingPrior":
        """
        The mean is the scenario's ground truth unless prior_mean lists four weights
        """
        variance = get_option(cfg, "modelbased", "prior_variance", float)
        covariance = get_option(cfg, "modelbased", "prior_covariance", float)
        raw_mean = get_option(cfg, "modelbased", "prior_mean")
        if raw_mean == "" or raw_mean.lower() == "truth":
            return cls.from_weights(truth.w_low, truth.w_high, variance, covariance)
        try:
            mean = [float(v) for v in raw_mean.split(",")]
        except ValueError as e:
            raise ConfigurationError(
                f"Invalid config value [modelbased] prior_mean: {e}"
            )
        return cls(np.array(mean), cls.default_covariance(variance, covariance))

    def log_coupling(self, grid: WeightGrid) -> np.ndarray:
        """
        (K, J) log p(w_l^k, w_h^j), normalised over the joint grid
        """
        weights = grid.as_array()
        k, j = len(weights), len(weights)
        points = np.concatenate(
            [np.repeat(weights, j, axis=0), np.tile(weights, (k, 1))], axis=1
        )
        log_density = multivariate_normal(self.mean, self.covariance).logpdf(points)
        log_density = np.asarray(log_density, dtype=np.float64).reshape(k, j)
        return log_density - logsumexp(log_density)


@dataclass(frozen=True, eq=False)
class PosteriorTable:
    """
    p(w_h^j | low- and high-fidelity training actions) per grid combination
    """

    grid: WeightGrid
    probabilities: np.ndarray

    def mean(self) -> UtilityWeights:
        w = self.probabilities @ self.grid.as_array()
        return UtilityWeights(
            constrain(float(w[0]), 0.0, 1.0), constrain(float(w[1]), 0.0, 1.0)
        )

    def mode(self) -> UtilityWeights:
        return self.grid.combinations[int(np.argmax(self.probabilities))]

    def top(self, count: int = 5) -> List[Tuple[UtilityWeights, float]]:
        # stable sort keeps lexicographic order among equal probabilities
        order = np.argsort(-self.probabilities, kind="stable")[:count]
        combinations = self.grid.combinations
        return [(combinations[j], float(self.probabilities[j])) for j in order]


def _normalised_log(values: np.ndarray, name: str) -> np.ndarray:
    values = np.where(np.isnan(values), -np.inf, np.asarray(values, dtype=np.float64))
    if not np.any(values > -np.inf):
        raise DegenerateLikelihoodError(f"{name} likelihood is -inf everywhere")
    return values - logsumexp(values)


def weight_posterior(
    loglik_h: LikelihoodTable,
    loglik_l: LikelihoodTable,
    prior: Optional[CouplingPrior],
    grid: WeightGrid,
) -> PosteriorTable:
    """
    p(w_h^j | A_l, A_h) proportional to
    p(w_h^j | A_h) * sum_k p(w_l^k | A_l) * p(w_l^k, w_h^j), all in log space

    :param prior: coupling prior, a uniform coupling if None
    """
    if loglik_h.grid != grid or loglik_l.grid != grid:
        raise PreconditionError("Likelihood tables must be over the posterior's grid")
    log_high = _normalised_log(loglik_h.values, "High-fidelity")
    log_low = _normalised_log(loglik_l.values, "Low-fidelity")
    if prior is None:
        log_coupling = np.full((len(grid), len(grid)), -2.0 * math.log(len(grid)))
    else:
        log_coupling = prior.log_coupling(grid)
    log_post = log_high + logsumexp(log_low[:, None] + log_coupling, axis=0)
    log_post = log_post - logsumexp(log_post)
    probabilities = np.exp(log_post)
    return PosteriorTable(grid, probabilities / np.sum(probabilities))


def predict_bayes(
    geometry: EncounterGeometry,
    posterior: PosteriorTable,
    grid: WeightGrid,
    params: DecisionParams,
    n_samples: int,
    rng: RandomSource,
    prune_below: float = 0.0,
) -> JointAction:
    """
    Posterior-weighted mixture of predict_map over the grid. All combinations
    share `rng`, so they are compared on common random numbers.

    :param prune_below: combinations with probability <= this are skipped and
        the remaining weights renormalised
    """
    if posterior.grid != grid:
        raise PreconditionError("Posterior is over a different grid")
    kept = np.flatnonzero(posterior.probabilities > prune_below)
    if kept.size == 0:
        raise PreconditionError(
            f"No combination has posterior probability above {prune_below}"
        )
    combinations = grid.combinations
    predictions = predict_map_weights(
        geometry, [combinations[j] for j in kept], params, n_samples, rng
    )
    p = posterior.probabilities[kept]
    mixture = (p @ predictions) / np.sum(p)
    return JointAction(float(mixture[0]), float(mixture[1]))


# --------- Density mesh ---------
def density_mesh(
    ensemble: ActionEnsemble,
    weights: Sequence[UtilityWeights],
    points: int = 61,
    limit_deg: float = 60.0,
    bandwidth_floor: float = BANDWIDTH_FLOOR,
) -> pd.DataFrame:
    """
    Joint-action densities of selected combinations on a square mesh in degrees,
    density per square degree

    :return: frame with columns w1, w2, a1_deg, a2_deg, density
    """
    axis = np.linspace(-limit_deg, limit_deg, points)
    a1, a2 = np.meshgrid(axis, axis, indexing="ij")
    mesh = np.radians(np.column_stack([a1.ravel(), a2.ravel()]))
    densities = ensemble.densities(bandwidth_floor)
    per_degree = (math.pi / 180.0) ** 2
    frames = []
    for w in weights:
        density = densities[ensemble.grid.index_of(w)]
        values = np.exp(kde_logpdf(density, mesh)) * per_degree
        frames.append(
            pd.DataFrame(
                {
                    "w1": w.w1,
                    "w2": w.w2,
                    "a1_deg": a1.ravel(),
                    "a2_deg": a2.ravel(),
                    "density": values,
                }
            )
        )
    return pd.concat(frames, ignore_index=True)
