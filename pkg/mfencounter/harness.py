# -*- coding: utf-8 -*-
"""
Experiment driver: fits every method on fresh training data per
(n_high, trial) cell and scores its predictions against a shared test set.

Seeds (see randomness.mix_seed):
    data of a cell        RandomSource(base_seed).spawn("cell", n_high, trial)
    method trial seed     mix_seed(base_seed, method, n_high, trial)
    action ensembles      RandomSource(base_seed).spawn("ensemble")
so every cell is reproducible on its own, in any order and in any process.
"""
import configparser
import hashlib
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Type, Union

import numpy as np

from .encounter import DecisionParams, FidelityLevel, JointAction
from .kde import BANDWIDTH_FLOOR, DENSITY_FLOOR, EVALUATE_AT_ACTION, EVALUATION_POINTS
from .modelbased import (
    ENSEMBLE_VERSION,
    ActionEnsemble,
    CouplingPrior,
    WeightGrid,
    build_action_ensemble,
    predict_map,
    sample_novel_geometries,
)
from .predictor import ModelContext, Predictor
from .predictors.bayes_mf import BayesMf
from .predictors.lw_hf import LwHf
from .predictors.lw_mf import LwMf
from .predictors.map_hf import MapHf
from .predictors.map_mf import MapMf
from .randomness import RandomSource, mix_seed
from .results import aggregate_frame, results_frame
from .scenario import Dataset, GroundTruth, ScenarioConfig, Split, generate_dataset
from .utils import (
    ConfigurationError,
    PreconditionError,
    get_list_option,
    get_option,
    log_exception,
    logger,
)

supported_methods = [
    {"method": LwHf},
    {"method": LwMf},
    {"method": MapHf},
    {"method": MapMf},
    {"method": BayesMf},
]

METHOD_NAMES: Tuple[str, ...] = tuple(m["method"].METHOD for m in supported_methods)

EXACT = "exact"
EXACT_THRESHOLD = 1e-9


def method_class(name: str) -> Type[Predictor]:
    for method in supported_methods:
        if method["method"].METHOD == name:
            return method["method"]
    raise ConfigurationError(f"Unknown method {name!r}, expected one of {METHOD_NAMES}")


# --------- Settings ---------
@dataclass(frozen=True)
class ExperimentConfig:
    scenario: GroundTruth
    n_high_sweep: Tuple[int, ...] = (5, 10, 20, 50, 100, 200)
    n_low: int = 1000
    trials: int = 10
    n_test: int = 100
    methods: Tuple[str, ...] = METHOD_NAMES
    base_seed: int = 0
    params: DecisionParams = field(default_factory=DecisionParams)
    scenario_config: ScenarioConfig = field(default_factory=ScenarioConfig)
    grid: WeightGrid = field(
        default_factory=lambda: WeightGrid.from_range(0.80, 0.99, 0.01)
    )
    ensemble_size: int = 1000
    n_samples: int = 10
    density_floor: float = DENSITY_FLOOR
    bandwidth_floor: float = BANDWIDTH_FLOOR
    likelihood_at: str = EVALUATE_AT_ACTION
    prior: Optional[CouplingPrior] = None
    posterior_prune: float = 0.0
    workers: int = 1
    ensemble_cache: Optional[str] = None

    def __post_init__(self):
        if self.prior is None:
            object.__setattr__(
                self,
                "prior",
                CouplingPrior.from_weights(self.scenario.w_low, self.scenario.w_high),
            )
        object.__setattr__(self, "n_high_sweep", tuple(self.n_high_sweep))
        object.__setattr__(self, "methods", tuple(self.methods))
        counts = {
            "n_low": self.n_low,
            "trials": self.trials,
            "n_test": self.n_test,
            "ensemble_size": self.ensemble_size,
            "n_samples": self.n_samples,
            "workers": self.workers,
        }
        for name, value in counts.items():
            if value < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {value}")
        if len(self.n_high_sweep) == 0 or min(self.n_high_sweep) < 1:
            raise ConfigurationError(
                f"n_high_sweep must hold counts >= 1, got {self.n_high_sweep}"
            )
        if len(self.methods) == 0:
            raise ConfigurationError("At least one method must be selected")
        for name in self.methods:
            method_class(name)
        if self.likelihood_at not in EVALUATION_POINTS:
            raise ConfigurationError(
                f"likelihood_at must be one of {EVALUATION_POINTS}, "
                + f"got {self.likelihood_at!r}"
            )
        if not (0.0 <= self.posterior_prune < 1.0):
            raise ConfigurationError(
                f"posterior_prune must lie in [0, 1), got {self.posterior_prune}"
            )

    @property
    def model_based(self) -> bool:
        return any(method_class(name).MODEL_BASED for name in self.methods)

    @property
    def uses_low_fidelity(self) -> bool:
        return any(method_class(name).USES_LOW_FIDELITY for name in self.methods)

    @classmethod
    def from_config(cls, cfg: configparser.ConfigParser) -> "ExperimentConfig":
        scenario = GroundTruth.from_config(cfg)
        cache = get_option(cfg, "experiment", "ensemble_cache")
        return cls(
            scenario=scenario,
            n_high_sweep=tuple(get_list_option(cfg, "experiment", "n_high_sweep", int)),
            n_low=get_option(cfg, "experiment", "n_low", int),
            trials=get_option(cfg, "experiment", "trials", int),
            n_test=get_option(cfg, "experiment", "n_test", int),
            methods=tuple(get_list_option(cfg, "experiment", "methods")),
            base_seed=get_option(cfg, "experiment", "base_seed", int),
            params=DecisionParams.from_config(cfg),
            scenario_config=ScenarioConfig.from_config(cfg),
            grid=WeightGrid.from_config(cfg),
            ensemble_size=get_option(cfg, "modelbased", "ensemble_size", int),
            n_samples=get_option(cfg, "modelbased", "n_samples", int),
            density_floor=get_option(cfg, "modelbased", "density_floor", float),
            bandwidth_floor=get_option(cfg, "modelbased", "bandwidth_floor", float),
            likelihood_at=get_option(cfg, "modelbased", "likelihood_at"),
            prior=CouplingPrior.from_config(cfg, scenario),
            posterior_prune=get_option(cfg, "modelbased", "posterior_prune", float),
            workers=get_option(cfg, "experiment", "workers", int),
            ensemble_cache=cache if cache != "" else None,
        )

    def describe(self) -> Dict:
        """
        JSON-friendly summary of the resolved settings
        """
        return {
            "scenario": self.scenario.scenario_name,
            "w_low": [self.scenario.w_low.w1, self.scenario.w_low.w2],
            "w_high": [self.scenario.w_high.w1, self.scenario.w_high.w2],
            "n_high_sweep": list(self.n_high_sweep),
            "n_low": self.n_low,
            "trials": self.trials,
            "n_test": self.n_test,
            "methods": list(self.methods),
            "base_seed": self.base_seed,
            "decision": {
                key: value
                for key, value in asdict(self.params).items()
                if key != "observation"
            },
            "observation": asdict(self.params.observation),
            "scenario_config": asdict(self.scenario_config),
            "grid": list(self.grid.values),
            "ensemble_size": self.ensemble_size,
            "n_samples": self.n_samples,
            "density_floor": self.density_floor,
            "bandwidth_floor": self.bandwidth_floor,
            "likelihood_at": self.likelihood_at,
            "prior_mean": self.prior.mean.tolist(),
            "prior_covariance": self.prior.covariance.tolist(),
            "posterior_prune": self.posterior_prune,
        }


# --------- Scoring ---------
def test_set_error(
    predicted: Union[Sequence[JointAction], np.ndarray],
    actual: Union[Sequence[JointAction], np.ndarray],
) -> float:
    """
    Sum over encounters of the Euclidean distance between predicted and
    realised joint actions
    """
    predicted = np.asarray(predicted, dtype=np.float64).reshape(-1, 2)
    actual = np.asarray(actual, dtype=np.float64).reshape(-1, 2)
    if predicted.shape != actual.shape or predicted.shape[0] == 0:
        raise PreconditionError(
            f"Need equal, non-zero prediction ({predicted.shape[0]}) "
            + f"and outcome ({actual.shape[0]}) counts"
        )
    diff = predicted - actual
    return float(np.sum(np.hypot(diff[:, 0], diff[:, 1])))


# keep pytest from collecting the scoring function
test_set_error.__test__ = False


def lower_bound_error(
    test_set: Dataset,
    truth: GroundTruth,
    params: DecisionParams,
    n_samples: int,
    rng: RandomSource,
) -> float:
    """
    Test-set error of predicting with the true high-fidelity weights.
    Encounter i simulates on sub-stream ("predict", i).
    """
    if test_set.N == 0:
        raise PreconditionError("Test set must not be empty")
    predicted = [
        predict_map(
            record.geometry, truth.w_high, params, n_samples, rng.spawn("predict", i)
        )
        for i, record in enumerate(test_set)
    ]
    return test_set_error(predicted, test_set.actions())


def predictive_efficiency(D: float, D_lb: float) -> Union[float, str]:
    """
    D_lb / D, or the `exact` sentinel when D is (numerically) zero
    """
    if D < 0 or D_lb < 0:
        raise PreconditionError(f"Errors must be non-negative, got D={D}, D_lb={D_lb}")
    if D < EXACT_THRESHOLD:
        return EXACT
    return D_lb / D


@dataclass(frozen=True)
class TrialResult:
    scenario: str
    method: str
    n_high: int
    n_low: int
    trial: int
    seed: int
    D: float
    D_lb: float
    efficiency: Union[float, str]

    def row(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class EfficiencyCurve:
    """
    Mean efficiency and standard error of one method at one n_high.
    mean_efficiency is `exact` when every trial predicted exactly.
    """

    scenario: str
    method: str
    n_high: int
    mean_efficiency: Union[float, str]
    stderr: float
    trials: int


@dataclass
class SweepResult:
    config: ExperimentConfig
    results: List[TrialResult]
    curves: List[EfficiencyCurve]


# --------- Ensembles ---------
@dataclass(eq=False)
class Ensembles:
    high: ActionEnsemble
    low: ActionEnsemble


def _ensemble_key(config: ExperimentConfig) -> str:
    text = repr(
        (
            ENSEMBLE_VERSION,
            config.base_seed,
            config.grid.values,
            config.ensemble_size,
            config.params,
            config.scenario_config,
        )
    )
    return hashlib.blake2b(text.encode("utf-8"), digest_size=6).hexdigest()


def build_ensembles(config: ExperimentConfig) -> Ensembles:
    """
    Low- and high-fidelity ensembles over one set of novel encounters. They do
    not depend on the scenario, so scenarios with the same settings share them.
    With `ensemble_cache` set, they are read from and written to that directory.
    """
    cache_files = None
    if config.ensemble_cache is not None:
        key = _ensemble_key(config)
        cache_files = {
            fidelity: Path(config.ensemble_cache)
            / f"ensemble-{fidelity.value}-{key}.csv"
            for fidelity in FidelityLevel
        }
        if all(path.is_file() for path in cache_files.values()):
            logger.info(f"Reading cached ensembles {key} from {config.ensemble_cache}")
            return Ensembles(
                high=ActionEnsemble.read_csv(
                    cache_files[FidelityLevel.HIGH], config.grid
                ),
                low=ActionEnsemble.read_csv(
                    cache_files[FidelityLevel.LOW], config.grid
                ),
            )

    rng = RandomSource(config.base_seed).spawn("ensemble")
    novel = sample_novel_geometries(
        config.ensemble_size, config.scenario_config, rng.spawn("novel")
    )
    ensembles = Ensembles(
        high=build_action_ensemble(
            config.grid,
            novel,
            FidelityLevel.HIGH,
            config.params,
            rng.spawn(FidelityLevel.HIGH.value),
            config.workers,
        ),
        low=build_action_ensemble(
            config.grid,
            novel,
            FidelityLevel.LOW,
            config.params,
            rng.spawn(FidelityLevel.LOW.value),
            config.workers,
        ),
    )
    if cache_files is not None:
        ensembles.high.write_csv(cache_files[FidelityLevel.HIGH])
        ensembles.low.write_csv(cache_files[FidelityLevel.LOW])
    return ensembles


def model_context(
    config: ExperimentConfig, ensembles: Optional[Ensembles] = None
) -> ModelContext:
    return ModelContext(
        params=config.params,
        grid=config.grid,
        ensemble_high=ensembles.high if ensembles is not None else None,
        ensemble_low=ensembles.low if ensembles is not None else None,
        n_samples=config.n_samples,
        density_floor=config.density_floor,
        bandwidth_floor=config.bandwidth_floor,
        likelihood_at=config.likelihood_at,
        prior=config.prior,
        posterior_prune=config.posterior_prune,
    )


# --------- Cells ---------
@dataclass(eq=False)
class CellData:
    train_high: Dataset
    train_low: Optional[Dataset]
    test: Dataset
    rng: RandomSource


def cell_data(
    config: ExperimentConfig, n_high: int, trial: int, with_low: bool = True
) -> CellData:
    """
    Training and test sets of one (n_high, trial) cell, shared by every method
    """
    rng = RandomSource(config.base_seed).spawn("cell", n_high, trial)
    truth = config.scenario

    def generate(n, split, fidelity, label):
        return generate_dataset(
            n,
            split,
            fidelity,
            truth,
            config.scenario_config,
            config.params,
            rng.spawn(label),
        )

    return CellData(
        train_high=generate(n_high, Split.TRAIN, FidelityLevel.HIGH, "train-high"),
        train_low=(
            generate(config.n_low, Split.TRAIN, FidelityLevel.LOW, "train-low")
            if with_low
            else None
        ),
        test=generate(config.n_test, Split.TEST, FidelityLevel.HIGH, "test"),
        rng=rng,
    )


def trial_seed(config: ExperimentConfig, method: str, n_high: int, trial: int) -> int:
    return mix_seed(config.base_seed, method, n_high, trial)


def run_cell(
    config: ExperimentConfig,
    n_high: int,
    trial: int,
    methods: Sequence[str],
    ensembles: Optional[Ensembles] = None,
) -> List[TrialResult]:
    """
    Evaluate `methods` on one cell. Each result equals what run_condition
    returns for that method alone.
    """
    started = time.time()
    classes = [method_class(name) for name in methods]
    if any(cls.MODEL_BASED for cls in classes) and ensembles is None:
        raise PreconditionError("Model-based methods need action ensembles")
    data = cell_data(
        config, n_high, trial, any(cls.USES_LOW_FIDELITY for cls in classes)
    )
    actual = data.test.actions()
    D_lb = lower_bound_error(
        data.test,
        config.scenario,
        config.params,
        config.n_samples,
        data.rng.spawn("lower-bound"),
    )
    context = model_context(config, ensembles)
    results = []
    for name, cls in zip(methods, classes):
        seed = trial_seed(config, name, n_high, trial)
        predictor: Predictor = cls(context)
        predictor.fit(
            data.train_high, data.train_low if cls.USES_LOW_FIDELITY else None
        )
        predicted = predictor.predict_many(data.test.geometries, RandomSource(seed))
        D = test_set_error(predicted, actual)
        efficiency = predictive_efficiency(D, D_lb)
        if efficiency == EXACT:
            logger.warning(
                f"{name} predicted the test set of cell n_high={n_high} "
                + f"trial={trial} exactly"
            )
        results.append(
            TrialResult(
                scenario=config.scenario.scenario_name,
                method=name,
                n_high=n_high,
                n_low=config.n_low,
                trial=trial,
                seed=seed,
                D=D,
                D_lb=D_lb,
                efficiency=efficiency,
            )
        )
        logger.debug(f"{predictor.describe()}, D={D:.4f}")
    logger.debug(
        f"Cell n_high={n_high} trial={trial} took {time.time() - started:.1f}s"
    )
    return results


def run_condition(
    config: ExperimentConfig,
    method: str,
    n_high: int,
    trial_index: int,
    ensembles: Optional[Ensembles] = None,
) -> TrialResult:
    """
    Fit and score one method on one cell

    :param ensembles: reused if given, built from the config otherwise
    """
    if method_class(method).MODEL_BASED and ensembles is None:
        ensembles = build_ensembles(config)
    return run_cell(config, n_high, trial_index, [method], ensembles)[0]


# --------- Sweep ---------
def sort_results(
    results: Sequence[TrialResult], methods: Sequence[str]
) -> List[TrialResult]:
    order = {name: i for i, name in enumerate(methods)}
    return sorted(
        results, key=lambda r: (order.get(r.method, len(order)), r.n_high, r.trial)
    )


def aggregate(results: Sequence[TrialResult]) -> List[EfficiencyCurve]:
    """
    Mean and standard error (sample sd / sqrt(trials), 0 for a single trial)
    of the numeric efficiencies per (scenario, method, n_high)
    """
    frame = aggregate_frame(results_frame(results))
    return [
        EfficiencyCurve(
            scenario=row.scenario,
            method=row.method,
            n_high=int(row.n_high),
            mean_efficiency=row.mean_efficiency,
            stderr=float(row.stderr),
            trials=int(row.trials),
        )
        for row in frame.itertuples(index=False)
    ]


_worker_state: Dict = {}


def _init_worker(config: ExperimentConfig, ensembles: Optional[Ensembles]) -> None:
    _worker_state["config"] = config
    _worker_state["ensembles"] = ensembles


def _run_cell_job(cell: Tuple[int, int]) -> List[TrialResult]:
    config = _worker_state["config"]
    return run_cell(
        config, cell[0], cell[1], config.methods, _worker_state["ensembles"]
    )


def run_sweep(
    config: ExperimentConfig,
    ensembles: Optional[Ensembles] = None,
    on_cell: Optional[Callable[[List[TrialResult]], None]] = None,
) -> SweepResult:
    """
    Run every (method x n_high x trial) combination and aggregate the curves

    :param ensembles: reused if given, built from the config otherwise
    :param on_cell: called with all results completed so far after each cell
    :return: raw results in (method, n_high, trial) order and the curves
    """
    if config.model_based and ensembles is None:
        ensembles = build_ensembles(config)
    if ensembles is not None and config.model_based:
        # fit the densities once here instead of once per worker
        ensembles.high.densities(config.bandwidth_floor)
        if config.uses_low_fidelity:
            ensembles.low.densities(config.bandwidth_floor)

    cells = [
        (n_high, trial)
        for n_high in config.n_high_sweep
        for trial in range(config.trials)
    ]
    logger.info(
        f"Sweep {config.scenario.scenario_name}: {len(config.methods)} methods x "
        + f"{len(config.n_high_sweep)} sample sizes x {config.trials} trials, "
        + f"n_low={config.n_low}, {config.workers} worker(s)"
    )
    completed: List[TrialResult] = []

    def collect(cell, cell_results):
        completed.extend(cell_results)
        logger.info(
            f"-- Cell n_high={cell[0]} trial={cell[1]} done "
            + f"({len(completed) // len(config.methods)}/{len(cells)})"
        )
        if on_cell is not None:
            on_cell(sort_results(completed, config.methods))

    try:
        if config.workers > 1:
            with ProcessPoolExecutor(
                max_workers=config.workers,
                initializer=_init_worker,
                initargs=(config, ensembles),
            ) as executor:
                futures = {executor.submit(_run_cell_job, cell): cell for cell in cells}
                for future in as_completed(futures):
                    collect(futures[future], future.result())
        else:
            for cell in cells:
                collect(
                    cell, run_cell(config, cell[0], cell[1], config.methods, ensembles)
                )
    except Exception:
        log_exception(f"Sweep stopped after {len(completed)} results")
        raise

    results = sort_results(completed, config.methods)
    return SweepResult(config=config, results=results, curves=aggregate(results))

