# -*- coding: utf-8 -*-
"""
The two-pilot self-separation game.

Each pilot observes the intruder through noisy channels (out the window, and in
high fidelity also instruments), samples candidate heading changes and picks the
candidate with the highest summed utility against the sampled intruder beliefs
(a relaxed level-1 strategy). Actions are executed perfectly: the heading change
is instantaneous and the aircraft flies straight at constant speed afterwards.

Units: ft, ft/s, s, radians.
"""
import configparser
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .randomness import RandomSource
from .utils import (
    ConfigurationError,
    InvalidStateError,
    PreconditionError,
    get_option,
)

HeadingChange = float
"""
Heading change in radians, positive turns counter-clockwise
"""


class AircraftState(NamedTuple):
    """
    Horizontal position (ft) and velocity (ft/s) of one aircraft
    """

    x: float
    y: float
    vx: float
    vy: float

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)

    @property
    def heading(self) -> float:
        return math.atan2(self.vy, self.vx)

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "AircraftState":
        return cls(*(float(v) for v in values))

    @classmethod
    def from_heading(
        cls, x: float, y: float, speed: float, heading: float
    ) -> "AircraftState":
        return cls(x, y, speed * math.cos(heading), speed * math.sin(heading))


class JointAction(NamedTuple):
    """
    Heading changes (a^1, a^2) of both pilots in one encounter
    """

    a1: float
    a2: float


@dataclass(frozen=True)
class EncounterGeometry:
    """
    Initial states of both aircraft, expressed in Player 1's frame
    """

    s1: AircraftState
    s2: AircraftState

    def __post_init__(self):
        check_state(self.s1)
        check_state(self.s2)

    def features(self) -> np.ndarray:
        """
        The 8-D geometry vector s1 ⊕ s2
        """
        return np.array(tuple(self.s1) + tuple(self.s2), dtype=np.float64)

    def swapped(self) -> "EncounterGeometry":
        return EncounterGeometry(self.s2, self.s1)


@dataclass(frozen=True, order=True)
class UtilityWeights:
    """
    Per-player preference for separation over keeping the heading, each in [0, 1]
    """

    w1: float
    w2: float

    def __post_init__(self):
        for name, value in (("w1", self.w1), ("w2", self.w2)):
            if not (0.0 <= value <= 1.0):
                raise PreconditionError(
                    f"Utility weight {name} = {value} is outside [0, 1]"
                )

    def __str__(self) -> str:
        return f"({self.w1:.2f}, {self.w2:.2f})"

    def swapped(self) -> "UtilityWeights":
        return UtilityWeights(self.w2, self.w1)


class FidelityLevel(Enum):
    LOW = "low"
    HIGH = "high"

    @classmethod
    def parse(cls, value: Union[str, "FidelityLevel"]) -> "FidelityLevel":
        if isinstance(value, FidelityLevel):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigurationError(
                f"Unknown fidelity {value!r}, expected one of 'low', 'high'"
            )


@dataclass(frozen=True)
class ObservationNoiseModel:
    """
    Axis-independent Gaussian observation noise, given as standard deviations
    """

    position_sd: float
    velocity_sd: float

    def __post_init__(self):
        # zero is accepted, it makes the channel exact
        if not (self.position_sd >= 0 and self.velocity_sd >= 0):
            raise ConfigurationError(
                f"Observation noise must be non-negative, got {self.position_sd}, {self.velocity_sd}"
            )

    @property
    def sd(self) -> np.ndarray:
        return np.array(
            [self.position_sd, self.position_sd, self.velocity_sd, self.velocity_sd],
            dtype=np.float64,
        )


OUT_THE_WINDOW_NOISE = ObservationNoiseModel(position_sd=900.0, velocity_sd=318.0)
INSTRUMENT_NOISE = ObservationNoiseModel(position_sd=600.0, velocity_sd=318.0)


@dataclass(frozen=True)
class ObservationSources:
    """
    Observation channels available to a pilot. Low fidelity has no instruments.
    """

    out_the_window: ObservationNoiseModel = OUT_THE_WINDOW_NOISE
    instrument: ObservationNoiseModel = INSTRUMENT_NOISE

    def fused_sd(self, fidelity: FidelityLevel) -> np.ndarray:
        """
        Per-axis standard deviation of the fused observation.

        High fidelity multiplies the two Gaussians, which adds their precisions:
        sd = 1 / sqrt(1/sd_ow^2 + 1/sd_in^2) = sd_ow * sd_in / hypot(sd_ow, sd_in).
        """
        sd_ow = self.out_the_window.sd
        if fidelity is FidelityLevel.LOW:
            return sd_ow
        sd_in = self.instrument.sd
        norm = np.hypot(sd_ow, sd_in)
        with np.errstate(invalid="ignore", divide="ignore"):
            fused = np.where(norm > 0, sd_ow * sd_in / norm, 0.0)
        return fused

    @classmethod
    def from_config(cls, cfg: configparser.ConfigParser) -> "ObservationSources":
        return cls(
            out_the_window=ObservationNoiseModel(
                position_sd=get_option(cfg, "out_the_window", "position_sd", float),
                velocity_sd=get_option(cfg, "out_the_window", "velocity_sd", float),
            ),
            instrument=ObservationNoiseModel(
                position_sd=get_option(cfg, "instrument", "position_sd", float),
                velocity_sd=get_option(cfg, "instrument", "velocity_sd", float),
            ),
        )


@dataclass(frozen=True)
class DecisionParams:
    """
    Parameters of the sampled level-1 decision rule

    m_actions: number of candidate heading changes (m)
    m_obs: number of sampled intruder observations (m')
    action_bound: candidates are drawn from U(-action_bound, +action_bound), radians
    duration: time the chosen action is flown before the final state is taken, s
    distance_scale: divides the separation term of the utility, ft
    """

    m_actions: int = 100
    m_obs: int = 10
    action_bound: float = 1.0
    duration: float = 5.0
    distance_scale: float = 1.0e4
    observation: ObservationSources = field(default_factory=ObservationSources)

    def __post_init__(self):
        if self.m_actions < 1 or self.m_obs < 1:
            raise ConfigurationError(
                f"m_actions and m_obs must be >= 1, got {self.m_actions}, {self.m_obs}"
            )
        if not self.action_bound >= 0:
            raise ConfigurationError(
                f"action_bound must be >= 0, got {self.action_bound}"
            )
        if not self.duration > 0:
            raise ConfigurationError(f"duration must be > 0, got {self.duration}")
        if not self.distance_scale > 0:
            raise ConfigurationError(
                f"distance_scale must be > 0, got {self.distance_scale}"
            )

    @classmethod
    def from_config(cls, cfg: configparser.ConfigParser) -> "DecisionParams":
        return cls(
            m_actions=get_option(cfg, "decision", "m_actions", int),
            m_obs=get_option(cfg, "decision", "m_obs", int),
            action_bound=get_option(cfg, "decision", "action_bound", float),
            duration=get_option(cfg, "decision", "duration", float),
            distance_scale=get_option(cfg, "decision", "distance_scale", float),
            observation=ObservationSources.from_config(cfg),
        )


def check_state(state: Sequence[float]) -> None:
    if not np.all(np.isfinite(np.asarray(state, dtype=np.float64))):
        raise InvalidStateError(f"Aircraft state is not finite: {tuple(state)}")


# --------- Kinematics ---------
def _propagate(states: np.ndarray, deltas: np.ndarray, duration: float) -> np.ndarray:
    """
    Rotate velocities by `deltas` and fly straight for `duration`.
    `states` (..., 4) and `deltas` (...) broadcast against each other.
    """
    states = np.asarray(states, dtype=np.float64)
    deltas = np.asarray(deltas, dtype=np.float64)
    c = np.cos(deltas)
    s = np.sin(deltas)
    vx = states[..., 2]
    vy = states[..., 3]
    new_vx = c * vx - s * vy
    new_vy = s * vx + c * vy
    return np.stack(
        np.broadcast_arrays(
            states[..., 0] + new_vx * duration,
            states[..., 1] + new_vy * duration,
            new_vx,
            new_vy,
        ),
        axis=-1,
    )


def apply_action(
    state: AircraftState, action: HeadingChange, duration: float
) -> AircraftState:
    """
    Execute a heading change instantaneously and fly straight for `duration` seconds

    :param state: initial state
    :param action: heading change in radians
    :param duration: flight time in seconds, >= 0
    :return: the final state; speed is preserved
    """
    check_state(state)
    if not (math.isfinite(action) and math.isfinite(duration)):
        raise InvalidStateError(f"Action {action} or duration {duration} not finite")
    if duration < 0:
        raise PreconditionError(f"duration must be >= 0, got {duration}")
    return AircraftState.from_array(_propagate(np.asarray(state), action, duration))


def random_heading_shrinkage(action_bound: float = 1.0) -> float:
    """
    E[cos δ] for δ ~ U(-b, b), i.e. sin(b)/b. E[sin δ] is zero by symmetry.
    """
    if action_bound == 0:
        return 1.0
    return math.sin(action_bound) / action_bound


def _expected_finals(
    observed: np.ndarray, duration: float, action_bound: float = 1.0
) -> np.ndarray:
    observed = np.asarray(observed, dtype=np.float64)
    shrink = random_heading_shrinkage(action_bound)
    velocity = observed[..., 2:] * shrink
    position = observed[..., :2] + velocity * duration
    return np.concatenate([position, velocity], axis=-1)


def expected_final_state_random_heading(
    observed: AircraftState, duration: float, action_bound: float = 1.0
) -> AircraftState:
    """
    Expected final state of an intruder that changes heading uniformly at random
    (a level-0 pilot), in closed form: the velocity shrinks by sin(b)/b.

    :param observed: observed intruder state
    :param duration: flight time in seconds
    :param action_bound: half-width of the uniform heading change, radians
    :return: expected final state
    """
    check_state(observed)
    return AircraftState.from_array(
        _expected_finals(np.asarray(observed), duration, action_bound)
    )


# --------- Observations ---------
def _draw_gaussian(
    mean: np.ndarray, sd: np.ndarray, rng: np.random.Generator, count: int
) -> np.ndarray:
    return mean + rng.standard_normal((count, 4)) * sd


def sample_observation(
    true_state: AircraftState,
    noise: ObservationNoiseModel,
    rng: np.random.Generator,
) -> AircraftState:
    """
    One noisy observation of `true_state` through a single channel
    """
    check_state(true_state)
    return AircraftState.from_array(
        _draw_gaussian(np.asarray(true_state, dtype=np.float64), noise.sd, rng, 1)[0]
    )


def fused_observation_samples(
    true_state: AircraftState,
    fidelity: FidelityLevel,
    count: int,
    rng: np.random.Generator,
    sources: Optional[ObservationSources] = None,
) -> np.ndarray:
    """
    `count` draws of the fused observation as a (count, 4) array
    """
    check_state(true_state)
    sources = sources if sources is not None else ObservationSources()
    return _draw_gaussian(
        np.asarray(true_state, dtype=np.float64),
        sources.fused_sd(fidelity),
        rng,
        count,
    )


def fused_observation_sample(
    true_state: AircraftState,
    fidelity: FidelityLevel,
    rng: np.random.Generator,
    sources: Optional[ObservationSources] = None,
) -> AircraftState:
    """
    One draw from the product of the pilot's observation channels.
    High fidelity fuses out-the-window and instrument, low fidelity uses the window only.
    """
    return AircraftState.from_array(
        fused_observation_samples(true_state, fidelity, 1, rng, sources)[0]
    )


# --------- Decision rule ---------
def sample_candidate_actions(
    params: DecisionParams, rng: np.random.Generator
) -> np.ndarray:
    """
    m_actions i.i.d. heading changes from U(-action_bound, +action_bound)
    """
    return rng.uniform(-params.action_bound, params.action_bound, params.m_actions)


def _candidate_utilities(
    own_positions: np.ndarray,
    intruder_positions: np.ndarray,
    actions: np.ndarray,
    weights: np.ndarray,
    distance_scale: float,
) -> np.ndarray:
    """
    (W, m) summed utilities of m candidates for each of W weight values
    """
    # (m, m') separations between each own final position and each intruder belief
    separation = np.hypot(
        own_positions[:, None, 0] - intruder_positions[None, :, 0],
        own_positions[:, None, 1] - intruder_positions[None, :, 1],
    )
    w = np.asarray(weights, dtype=np.float64)[:, None, None]
    terms = (
        w * separation[None, :, :] / distance_scale
        - (1.0 - w) * np.abs(actions)[None, :, None]
    )
    return terms.sum(axis=2)


def utility(
    own_final: AircraftState,
    intruder_expected_finals: Sequence[AircraftState],
    action: HeadingChange,
    w: float,
    params: DecisionParams,
) -> float:
    """
    Summed utility of one candidate against every intruder belief:
    sum_j [ w * d(own_final, intruder_j) / distance_scale - (1 - w) * |action| ],
    with d the distance between positions.
    """
    if len(intruder_expected_finals) == 0:
        raise PreconditionError("utility needs at least one intruder state")
    own = np.asarray([own_final], dtype=np.float64)[:, :2]
    intruders = np.asarray(intruder_expected_finals, dtype=np.float64)[:, :2]
    return float(
        _candidate_utilities(
            own, intruders, np.array([action]), np.array([w]), params.distance_scale
        )[0, 0]
    )


def choose_actions_level1(
    own_state: AircraftState,
    intruder_true_state: AircraftState,
    weights: Sequence[float],
    fidelity: FidelityLevel,
    params: DecisionParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    The level-1 choice for several own weights against one set of draws, so the
    choices differ only through the weight. Entry k equals
    `choose_action_level1(..., weights[k], ...)` on an identically seeded stream.
    """
    check_state(own_state)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    observations = fused_observation_samples(
        intruder_true_state, fidelity, params.m_obs, rng, params.observation
    )
    candidates = sample_candidate_actions(params, rng)

    own_finals = _propagate(np.asarray(own_state), candidates, params.duration)
    intruder_finals = _expected_finals(
        observations, params.duration, params.action_bound
    )
    utilities = _candidate_utilities(
        own_finals[:, :2],
        intruder_finals[:, :2],
        candidates,
        weights,
        params.distance_scale,
    )
    # argmax returns the first maximum
    return candidates[np.argmax(utilities, axis=1)]


def choose_action_level1(
    own_state: AircraftState,
    intruder_true_state: AircraftState,
    w: float,
    fidelity: FidelityLevel,
    params: DecisionParams,
    rng: np.random.Generator,
) -> HeadingChange:
    """
    Relaxed level-1 decision: draw m' fused observations of the intruder, then m
    candidate actions, and return the candidate with the highest summed utility.
    Ties go to the lowest candidate index.

    :param own_state: own true state
    :param intruder_true_state: intruder true state, only seen through observations
    :param w: own utility weight
    :param fidelity: decides which observation channels exist
    :param params: decision parameters
    :param rng: stream the observations and candidates are drawn from, in that order
    :return: the chosen heading change
    """
    return float(
        choose_actions_level1(
            own_state, intruder_true_state, [w], fidelity, params, rng
        )[0]
    )


PLAYER_STREAMS: Tuple[str, str] = ("player-1", "player-2")


def simulate_encounters(
    geometry: EncounterGeometry,
    weights: Sequence[UtilityWeights],
    fidelity: FidelityLevel,
    params: DecisionParams,
    rng: RandomSource,
    player_streams: Tuple[str, str] = PLAYER_STREAMS,
) -> np.ndarray:
    """
    Joint actions of one geometry under several weight combinations with common
    random numbers: every combination sees the same observations and candidates.

    :return: (len(weights), 2) array, row k equals
        `simulate_encounter(geometry, weights[k], ...)`
    """
    if len(weights) == 0:
        raise PreconditionError("simulate_encounters needs at least one combination")
    a1 = choose_actions_level1(
        geometry.s1,
        geometry.s2,
        [w.w1 for w in weights],
        fidelity,
        params,
        rng.spawn(player_streams[0]).generator(),
    )
    a2 = choose_actions_level1(
        geometry.s2,
        geometry.s1,
        [w.w2 for w in weights],
        fidelity,
        params,
        rng.spawn(player_streams[1]).generator(),
    )
    return np.stack([a1, a2], axis=1)


def simulate_encounter(
    geometry: EncounterGeometry,
    weights: UtilityWeights,
    fidelity: FidelityLevel,
    params: DecisionParams,
    rng: RandomSource,
    player_streams: Tuple[str, str] = PLAYER_STREAMS,
) -> JointAction:
    """
    Both pilots run the level-1 rule against the other's true state,
    each with its own sub-stream of `rng`.

    :param player_streams: sub-stream labels of Player 1 and Player 2
    :return: the joint action (a^1, a^2)
    """
    actions = simulate_encounters(
        geometry, [weights], fidelity, params, rng, player_streams
    )
    return JointAction(float(actions[0, 0]), float(actions[0, 1]))
