# -*- coding: utf-8 -*-
"""
Encounter geometries and labelled datasets.

Geometries are expressed in Player 1's frame: Player 1 starts at the origin
flying along +x. Player 2 is placed on an approach bearing inside Player 1's
field of view, with a heading scattered around the heading that collides with
Player 1 if nobody manoeuvres.
"""
import configparser
import io
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .encounter import (
    AircraftState,
    DecisionParams,
    EncounterGeometry,
    FidelityLevel,
    JointAction,
    UtilityWeights,
    apply_action,
    simulate_encounter,
)
from .randomness import RandomSource
from .utils import (
    ConfigurationError,
    InfeasibleGeometryError,
    PreconditionError,
    get_list_option,
    get_option,
    logger,
    write_text_atomic,
)

DATASET_COLUMNS = [
    "encounter_id",
    "fidelity",
    "s1_x",
    "s1_y",
    "s1_vx",
    "s1_vy",
    "s2_x",
    "s2_y",
    "s2_vx",
    "s2_vy",
    "a1",
    "a2",
    "seed",
]


class Split(Enum):
    TRAIN = "train"
    TEST = "test"

    @classmethod
    def parse(cls, value: Union[str, "Split"]) -> "Split":
        if isinstance(value, Split):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigurationError(
                f"Unknown split {value!r}, expected one of 'train', 'test'"
            )


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Encounter sampling settings (angles in degrees, distances in ft, speeds in ft/s)

    initial_range is the head-on starting range. On other bearings Player 2 starts
    at the range that keeps the same time to collision, initial_range / (2 * airspeed).
    An unmitigated collision must happen within the encounter duration.
    """

    train_approach_angles: Tuple[float, ...] = (-45.0, 0.0, 45.0)
    test_approach_angles: Tuple[float, ...] = (-22.5, 22.5)
    heading_sd: float = 5.0
    airspeed: float = 500.0
    initial_range: float = 5000.0
    duration: float = 5.0
    field_of_view: float = 90.0

    def __post_init__(self):
        if not self.heading_sd >= 0:
            raise ConfigurationError(f"heading_sd must be >= 0, got {self.heading_sd}")
        if not self.airspeed > 0:
            raise ConfigurationError(f"airspeed must be > 0, got {self.airspeed}")
        if not self.initial_range > 0:
            raise ConfigurationError(
                f"initial_range must be > 0, got {self.initial_range}"
            )
        if not self.duration > 0:
            raise ConfigurationError(f"duration must be > 0, got {self.duration}")
        if self.time_to_collision > self.duration:
            raise ConfigurationError(
                f"Time to collision {self.time_to_collision:g} s "
                + f"(initial_range / (2 * airspeed)) exceeds duration {self.duration:g} s"
            )
        for angles in (self.train_approach_angles, self.test_approach_angles):
            if len(angles) == 0:
                raise ConfigurationError("approach angle sets must not be empty")
            for angle in angles:
                if abs(angle) >= self.field_of_view:
                    raise ConfigurationError(
                        f"approach angle {angle} is outside the field of view "
                        + f"(+/- {self.field_of_view})"
                    )

    def approach_angles(self, split: Split) -> Tuple[float, ...]:
        return (
            self.train_approach_angles
            if split is Split.TRAIN
            else self.test_approach_angles
        )

    @property
    def time_to_collision(self) -> float:
        return self.initial_range / (2.0 * self.airspeed)

    @classmethod
    def from_config(cls, cfg: configparser.ConfigParser) -> "ScenarioConfig":
        return cls(
            train_approach_angles=tuple(
                get_list_option(cfg, "scenario", "train_approach_angles", float)
            ),
            test_approach_angles=tuple(
                get_list_option(cfg, "scenario", "test_approach_angles", float)
            ),
            heading_sd=get_option(cfg, "scenario", "heading_sd", float),
            airspeed=get_option(cfg, "scenario", "airspeed", float),
            initial_range=get_option(cfg, "scenario", "initial_range", float),
            duration=get_option(cfg, "scenario", "duration", float),
            field_of_view=get_option(cfg, "scenario", "field_of_view", float),
        )


@dataclass(frozen=True)
class GroundTruth:
    w_low: UtilityWeights
    w_high: UtilityWeights
    scenario_name: str = "custom"

    def weights_for(self, fidelity: FidelityLevel) -> UtilityWeights:
        return self.w_low if fidelity is FidelityLevel.LOW else self.w_high

    @classmethod
    def preset(cls, name: str) -> "GroundTruth":
        if name not in SCENARIO_PRESETS:
            raise ConfigurationError(
                f"Unknown scenario {name!r}, expected one of {list(SCENARIO_PRESETS)} or 'custom'"
            )
        return SCENARIO_PRESETS[name]

    @classmethod
    def from_config(cls, cfg: configparser.ConfigParser) -> "GroundTruth":
        name = get_option(cfg, "experiment", "scenario")
        if name != "custom":
            return cls.preset(name)
        w_low = get_list_option(cfg, "experiment", "w_low", float)
        w_high = get_list_option(cfg, "experiment", "w_high", float)
        if len(w_low) != 2 or len(w_high) != 2:
            raise ConfigurationError("w_low and w_high need exactly two weights each")
        return cls(UtilityWeights(*w_low), UtilityWeights(*w_high), "custom")


# experts and novices behave alike, slightly differently, very differently
SCENARIO_PRESETS: Dict[str, GroundTruth] = {
    "identical": GroundTruth(
        UtilityWeights(0.89, 0.90), UtilityWeights(0.89, 0.90), "identical"
    ),
    "small-diff": GroundTruth(
        UtilityWeights(0.88, 0.89), UtilityWeights(0.89, 0.90), "small-diff"
    ),
    "large-diff": GroundTruth(
        UtilityWeights(0.80, 0.81), UtilityWeights(0.89, 0.90), "large-diff"
    ),
}


# --------- Geometry ---------
def _closure_rate(
    own_velocity: np.ndarray, bearing_unit: np.ndarray, intruder_speed: float
) -> float:
    """
    Largest k > 0 with |v_own - k * r_hat| = intruder_speed, i.e. the closing speed
    of an intruder on a collision course from direction r_hat. NaN if none exists.
    """
    along = float(own_velocity @ bearing_unit)
    disc = along * along - float(own_velocity @ own_velocity) + intruder_speed**2
    if disc < 0:
        return math.nan
    return along + math.sqrt(disc)


def collision_heading(
    own: AircraftState,
    intruder_position: Tuple[float, float],
    intruder_speed: float,
) -> float:
    """
    Intruder heading that brings the closest point of approach to zero under
    constant-velocity flight: the relative velocity points from the intruder
    straight at the own aircraft.

    :param own: own aircraft state
    :param intruder_position: intruder (x, y), ft
    :param intruder_speed: intruder ground speed, ft/s
    :return: heading in radians, measured counter-clockwise from +x
    """
    relative = np.array(
        [intruder_position[0] - own.x, intruder_position[1] - own.y], dtype=np.float64
    )
    distance = float(np.hypot(*relative))
    if distance == 0 or not math.isfinite(distance):
        raise InfeasibleGeometryError(
            f"Intruder position {intruder_position} coincides with the own aircraft"
        )
    bearing_unit = relative / distance
    own_velocity = np.array([own.vx, own.vy], dtype=np.float64)

    closure = _closure_rate(own_velocity, bearing_unit, intruder_speed)
    scale = max(float(np.hypot(*own_velocity)), intruder_speed, 1.0)
    if not (closure > 1e-9 * scale):
        raise InfeasibleGeometryError(
            f"No intercept: an intruder at {intruder_position} flying {intruder_speed} ft/s "
            + "cannot close on the own aircraft"
        )
    intruder_velocity = own_velocity - closure * bearing_unit
    return math.atan2(intruder_velocity[1], intruder_velocity[0])


def own_initial_state(config: ScenarioConfig) -> AircraftState:
    return AircraftState(0.0, 0.0, config.airspeed, 0.0)


def place_intruder(
    config: ScenarioConfig, approach_angle: float
) -> Tuple[float, float]:
    """
    Intruder starting position on `approach_angle` (degrees from Player 1's heading)
    """
    own = own_initial_state(config)
    bearing = math.radians(approach_angle)
    bearing_unit = np.array([math.cos(bearing), math.sin(bearing)])
    closure = _closure_rate(
        np.array([own.vx, own.vy]), bearing_unit, config.airspeed
    )
    if not closure > 0:
        raise InfeasibleGeometryError(
            f"Approach angle {approach_angle} deg admits no collision course"
        )
    distance = closure * config.time_to_collision
    return (distance * bearing_unit[0], distance * bearing_unit[1])


def sample_geometry(
    config: ScenarioConfig, split: Union[Split, str], rng: np.random.Generator
) -> EncounterGeometry:
    """
    Draw one encounter: an approach angle uniformly from the split's set, Player 2
    on that bearing, Player 2's heading = collision heading + N(0, heading_sd)
    """
    split = Split.parse(split)
    angles = config.approach_angles(split)
    approach_angle = angles[int(rng.integers(len(angles)))]
    own = own_initial_state(config)
    position = place_intruder(config, approach_angle)
    heading = collision_heading(own, position, config.airspeed)
    heading += math.radians(config.heading_sd) * float(rng.standard_normal())
    intruder = AircraftState.from_heading(
        position[0], position[1], config.airspeed, heading
    )
    return EncounterGeometry(own, intruder)


def approach_angle_of(geometry: EncounterGeometry) -> float:
    """
    Bearing of Player 2 from Player 1 relative to Player 1's heading, degrees
    """
    bearing = math.atan2(geometry.s2.y - geometry.s1.y, geometry.s2.x - geometry.s1.x)
    relative = bearing - geometry.s1.heading
    return math.degrees(math.atan2(math.sin(relative), math.cos(relative)))


def min_separation(
    geometry: EncounterGeometry,
    duration: float,
    actions: Optional[JointAction] = None,
) -> float:
    """
    Minimum distance between both aircraft over [0, duration] for straight flight
    after the (instantaneous) heading changes in `actions`
    """
    a1, a2 = actions if actions is not None else (0.0, 0.0)
    p = np.array([geometry.s2.x - geometry.s1.x, geometry.s2.y - geometry.s1.y])
    own = apply_action(geometry.s1, a1, 0.0)
    intruder = apply_action(geometry.s2, a2, 0.0)
    v = np.array([intruder.vx - own.vx, intruder.vy - own.vy])
    vv = float(v @ v)
    t = 0.0 if vv == 0 else min(max(-float(p @ v) / vv, 0.0), duration)
    return float(np.hypot(*(p + v * t)))


# --------- Datasets ---------
@dataclass(frozen=True)
class DatasetRecord:
    encounter_id: int
    geometry: EncounterGeometry
    action: JointAction
    fidelity: FidelityLevel
    seed: int


class Dataset:
    """
    Encounter geometries with their realised joint actions
    """

    def __init__(self, records: Sequence[DatasetRecord]):
        self.records: List[DatasetRecord] = list(records)
        ids = [record.encounter_id for record in self.records]
        if len(set(ids)) != len(ids):
            raise PreconditionError("encounter_id values must be unique in a dataset")

    @property
    def N(self) -> int:
        return len(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __eq__(self, other) -> bool:
        return isinstance(other, Dataset) and self.records == other.records

    @property
    def geometries(self) -> List[EncounterGeometry]:
        return [record.geometry for record in self.records]

    def features(self) -> np.ndarray:
        """
        (N, 8) geometry feature matrix
        """
        features = [record.geometry.features() for record in self.records]
        return np.array(features, dtype=np.float64).reshape(-1, 8)

    def actions(self) -> np.ndarray:
        """
        (N, 2) joint-action matrix
        """
        return np.array([tuple(record.action) for record in self.records]).reshape(
            -1, 2
        )

    def to_frame(self) -> pd.DataFrame:
        rows = [
            (record.encounter_id, record.fidelity.value)
            + tuple(record.geometry.s1)
            + tuple(record.geometry.s2)
            + tuple(record.action)
            + (record.seed,)
            for record in self.records
        ]
        frame = pd.DataFrame(rows, columns=DATASET_COLUMNS)
        return frame.astype({"encounter_id": "int64", "seed": "uint64"})

    def to_csv_text(self) -> str:
        buffer = io.StringIO()
        self.to_frame().to_csv(buffer, index=False, lineterminator="\n")
        return buffer.getvalue()

    def write_csv(self, file_path: Union[str, Path]) -> None:
        write_text_atomic(file_path, self.to_csv_text())
        logger.info(f"Wrote {self.N} records to {file_path}")

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "Dataset":
        missing = [column for column in DATASET_COLUMNS if column not in frame.columns]
        if missing:
            raise PreconditionError(f"Dataset file is missing columns {missing}")
        records = [
            DatasetRecord(
                encounter_id=int(row.encounter_id),
                geometry=EncounterGeometry(
                    AircraftState.from_array(
                        (row.s1_x, row.s1_y, row.s1_vx, row.s1_vy)
                    ),
                    AircraftState.from_array(
                        (row.s2_x, row.s2_y, row.s2_vx, row.s2_vy)
                    ),
                ),
                action=JointAction(float(row.a1), float(row.a2)),
                fidelity=FidelityLevel.parse(row.fidelity),
                seed=int(row.seed),
            )
            for row in frame.itertuples(index=False)
        ]
        return cls(records)

    @classmethod
    def read_csv(cls, file_path: Union[str, Path]) -> "Dataset":
        frame = pd.read_csv(
            file_path,
            float_precision="round_trip",
            dtype={"encounter_id": "int64", "fidelity": str, "seed": "uint64"},
            encoding="utf-8",
        )
        return cls.from_frame(frame)


def generate_dataset(
    n: int,
    split: Union[Split, str],
    fidelity: FidelityLevel,
    truth: GroundTruth,
    config: ScenarioConfig,
    params: DecisionParams,
    rng: RandomSource,
) -> Dataset:
    """
    Simulate `n` encounters at the fidelity's ground-truth weights.
    Record i draws from its own sub-stream, whose seed is stored with the record.

    :param n: number of records, >= 1
    :return: the dataset, ordered by encounter_id
    """
    if n < 1:
        raise PreconditionError(f"Dataset size must be >= 1, got {n}")
    split = Split.parse(split)
    weights = truth.weights_for(fidelity)
    records = []
    for encounter_id in range(n):
        record_rng = rng.spawn("record", encounter_id)
        geometry = sample_geometry(
            config, split, record_rng.spawn("geometry").generator()
        )
        action = simulate_encounter(
            geometry, weights, fidelity, params, record_rng.spawn("decision")
        )
        records.append(
            DatasetRecord(encounter_id, geometry, action, fidelity, record_rng.seed)
        )
    logger.debug(
        f"Generated {n} {fidelity.value}-fidelity {split.value} encounters at {weights}"
    )
    return Dataset(records)


def replay_record(
    record: DatasetRecord,
    split: Union[Split, str],
    truth: GroundTruth,
    config: ScenarioConfig,
    params: DecisionParams,
) -> DatasetRecord:
    """
    Regenerate a record from its stored seed
    """
    record_rng = RandomSource(record.seed)
    geometry = sample_geometry(config, split, record_rng.spawn("geometry").generator())
    action = simulate_encounter(
        geometry,
        truth.weights_for(record.fidelity),
        record.fidelity,
        params,
        record_rng.spawn("decision"),
    )
    return DatasetRecord(
        record.encounter_id, geometry, action, record.fidelity, record.seed
    )
