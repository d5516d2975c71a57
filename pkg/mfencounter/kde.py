# -*- coding: utf-8 -*-
"""
Kernel density estimates over joint-action space.

Product Gaussian kernel with one bandwidth per action dimension. Each bandwidth
comes from the diffusion plug-in rule (Botev, Grotowski and Kroese, 2010) applied
to that dimension; when its fixed point cannot be bracketed the rule of thumb
1.06 * sd * n^(-1/5) is used instead.
"""
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.fft import dct
from scipy.optimize import brentq
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .utils import PreconditionError, logger

# mesh size of the histogram the diffusion estimator works on
GRID_POINTS = 2**14
BANDWIDTH_FLOOR = 1.0e-3
DENSITY_FLOOR = 1.0e-300
# rows per block when evaluating many points
EVAL_CHUNK = 2048

# where nn_loglik reads the density: at the nearest ensemble member, or at the
# training action itself
EVALUATE_AT_MEMBER = "member"
EVALUATE_AT_ACTION = "action"
EVALUATION_POINTS = (EVALUATE_AT_ACTION, EVALUATE_AT_MEMBER)


class BandwidthConvergenceError(PreconditionError):
    """
    The diffusion fixed point could not be bracketed
    """


# Bandwidth functions ---------------------------------------------------------------
def bw_silverman(x: np.ndarray) -> float:
    """
    Rule of thumb 1.06 * sd * n^(-1/5)
    """
    x = np.asarray(x, dtype=np.float64)
    return 1.06 * float(np.std(x, ddof=1)) * len(x) ** (-0.2)


def _fixed_point(t: float, n: float, k_sq: np.ndarray, a_sq: np.ndarray) -> float:
    """
    t - zeta * gamma^[l](t), the function whose root is the squared bandwidth
    on the unit interval
    """
    l = 7
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        f = (
            2.0
            * np.pi ** (2 * l)
            * np.sum(k_sq**l * a_sq * np.exp(-k_sq * np.pi**2 * t))
        )
        for s in range(l - 1, 1, -1):
            k0 = np.prod(np.arange(1, 2 * s, 2, dtype=np.float64)) / np.sqrt(2 * np.pi)
            const = (1 + 0.5 ** (s + 0.5)) / 3.0
            time = (2 * const * k0 / n / f) ** (2.0 / (3.0 + 2.0 * s))
            f = 2.0 * np.pi ** (2 * s) * np.sum(
                k_sq**s * a_sq * np.exp(-k_sq * np.pi**2 * time)
            )
        return float(t - (2 * n * np.sqrt(np.pi) * f) ** (-0.4))


def bw_botev(x: np.ndarray, grid_points: int = GRID_POINTS) -> float:
    """
    Diffusion plug-in bandwidth of one-dimensional data

    :param x: samples
    :param grid_points: histogram mesh size, a power of two
    :return: the bandwidth
    :raises BandwidthConvergenceError: if the fixed point cannot be bracketed
    """
    x = np.asarray(x, dtype=np.float64)
    minimum = float(np.min(x))
    maximum = float(np.max(x))
    data_range = maximum - minimum
    if data_range <= 0:
        raise BandwidthConvergenceError("diffusion bandwidth needs spread data")
    low = minimum - data_range / 10.0
    high = maximum + data_range / 10.0
    mesh_range = high - low

    # relative frequencies on the mesh, normalised by the number of distinct values
    n_unique = len(np.unique(x))
    counts, _ = np.histogram(x, bins=grid_points, range=(low, high))
    initial = counts / n_unique
    initial = initial / np.sum(initial)

    a = dct(initial, type=2)
    k_sq = np.arange(1, grid_points, dtype=np.float64) ** 2
    a_sq = (a[1:] / 2.0) ** 2

    n = float(min(max(n_unique, 50), 1050))
    tol = 1e-12 + 0.01 * (n - 50) / 1000.0
    while True:
        try:
            t_star = brentq(_fixed_point, 0.0, tol, args=(float(n_unique), k_sq, a_sq))
            break
        except ValueError:
            if tol >= 0.1:
                raise BandwidthConvergenceError(
                    "diffusion fixed point not bracketed in [0, 0.1]"
                )
            tol = min(tol * 2.0, 0.1)
    if not (math.isfinite(t_star) and t_star > 0):
        raise BandwidthConvergenceError(f"diffusion fixed point t* = {t_star}")
    return math.sqrt(t_star) * mesh_range


def select_bandwidth(x: np.ndarray, bandwidth_floor: float = BANDWIDTH_FLOOR) -> float:
    """
    Diffusion bandwidth, Silverman fallback, never below `bandwidth_floor`
    """
    x = np.asarray(x, dtype=np.float64)
    if np.ptp(x) == 0:
        return bandwidth_floor
    try:
        bandwidth = bw_botev(x)
    except BandwidthConvergenceError as e:
        bandwidth = bw_silverman(x)
        logger.warning(f"KDE: {e}, falling back to rule of thumb h={bandwidth:.6g}")
    return max(bandwidth, bandwidth_floor)


def shared_bandwidth(
    sample_sets: Sequence[np.ndarray], bandwidth_floor: float = BANDWIDTH_FLOOR
) -> np.ndarray:
    """
    One bandwidth per dimension for a family of sample sets: the median of the
    bandwidths `select_bandwidth` picks for each set. Densities fitted with it
    differ only through their samples, so their values compare across sets.

    :param sample_sets: (n, d) sample arrays with the same d
    :return: (d,) bandwidths
    """
    if len(sample_sets) == 0:
        raise PreconditionError("shared_bandwidth needs at least one sample set")
    per_set = np.array(
        [
            [
                select_bandwidth(samples[:, dim], bandwidth_floor)
                for dim in range(samples.shape[1])
            ]
            for samples in (np.asarray(s, dtype=np.float64) for s in sample_sets)
        ],
        dtype=np.float64,
    )
    return np.maximum(np.median(per_set, axis=0), bandwidth_floor)


# Density ----------------------------------------------------------------------------
@dataclass(eq=False)
class ActionDensity:
    """
    Product-Gaussian KDE over (a^1, a^2)
    """

    samples: np.ndarray
    bandwidth: np.ndarray
    _member_logpdf: Optional[np.ndarray] = field(
        default=None, repr=False, compare=False
    )

    def member_logpdf(self) -> np.ndarray:
        """
        log density at each of its own samples, computed once
        """
        if self._member_logpdf is None:
            self._member_logpdf = kde_logpdf(self, self.samples)
        return self._member_logpdf


def kde_fit(
    samples: Union[Sequence[Sequence[float]], np.ndarray],
    bandwidth: Optional[Sequence[float]] = None,
    bandwidth_floor: float = BANDWIDTH_FLOOR,
) -> ActionDensity:
    """
    Fit a product-Gaussian KDE to joint actions

    :param samples: (n, 2) joint actions, n >= 2
    :param bandwidth: fixed per-dimension bandwidth, skips selection
    :param bandwidth_floor: smallest bandwidth used, also for zero-variance dimensions
    :return: the density
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise PreconditionError(
            f"KDE needs at least 2 samples of shape (n, d), got {samples.shape}"
        )
    if bandwidth is None:
        bandwidth = [
            select_bandwidth(samples[:, dim], bandwidth_floor)
            for dim in range(samples.shape[1])
        ]
    bandwidth = np.asarray(bandwidth, dtype=np.float64)
    if bandwidth.shape != (samples.shape[1],) or not np.all(bandwidth > 0):
        raise PreconditionError(f"Invalid bandwidth {bandwidth}")
    return ActionDensity(samples=samples, bandwidth=bandwidth)


def kde_logpdf(density: ActionDensity, points: np.ndarray) -> np.ndarray:
    """
    log density at each row of `points`
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = density.samples.shape[0]
    log_norm = float(np.sum(np.log(density.bandwidth * np.sqrt(2.0 * np.pi))))
    log_norm += math.log(n)
    out = np.empty(points.shape[0], dtype=np.float64)
    for start in range(0, points.shape[0], EVAL_CHUNK):
        block = points[start : start + EVAL_CHUNK]
        z = (block[:, None, :] - density.samples[None, :, :]) / density.bandwidth
        exponent = -0.5 * np.sum(z * z, axis=2)
        out[start : start + EVAL_CHUNK] = logsumexp(exponent, axis=1) - log_norm
    return out


def kde_eval(density: ActionDensity, point: Sequence[float]) -> float:
    """
    Density value at a single joint action
    """
    return float(np.exp(kde_logpdf(density, np.asarray(point, dtype=np.float64))[0]))


# Likelihood --------------------------------------------------------------------------
def nearest_neighbors(queries: np.ndarray, members: np.ndarray) -> np.ndarray:
    """
    Index of the Euclidean nearest member for each query, ties to the lowest index
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    members = np.atleast_2d(np.asarray(members, dtype=np.float64))
    out = np.empty(queries.shape[0], dtype=np.int64)
    for start in range(0, queries.shape[0], EVAL_CHUNK):
        block = queries[start : start + EVAL_CHUNK]
        # argmin returns the first minimum
        out[start : start + EVAL_CHUNK] = np.argmin(
            cdist(block, members, "sqeuclidean"), axis=1
        )
    return out


def nn_loglik(
    train_actions: Union[Sequence[Sequence[float]], np.ndarray],
    ensemble_actions: Union[Sequence[Sequence[float]], np.ndarray],
    density: ActionDensity,
    density_floor: float = DENSITY_FLOOR,
    evaluate_at: str = EVALUATE_AT_MEMBER,
) -> float:
    """
    Sum over training actions of the log density at each one's nearest ensemble member

    With evaluate_at="action" the density is read at the training action itself.
    A member-read score cannot see how far a training action is from the ensemble,
    so an ensemble that lacks a mode loses nothing for it.

    :param train_actions: (N, 2) observed joint actions
    :param ensemble_actions: (n, 2) simulated joint actions the density was fitted on
    :param density: the density
    :param density_floor: densities are clipped to this before taking logs
    :param evaluate_at: "member" or "action"
    :return: the summed log-likelihood, always finite
    """
    if evaluate_at not in EVALUATION_POINTS:
        raise PreconditionError(
            f"evaluate_at must be one of {EVALUATION_POINTS}, got {evaluate_at!r}"
        )
    train_actions = np.asarray(train_actions, dtype=np.float64).reshape(-1, 2)
    ensemble_actions = np.asarray(ensemble_actions, dtype=np.float64).reshape(-1, 2)
    if train_actions.shape[0] == 0 or ensemble_actions.shape[0] == 0:
        raise PreconditionError("nn_loglik needs non-empty training and ensemble sets")
    if evaluate_at == EVALUATE_AT_ACTION:
        logpdf = kde_logpdf(density, train_actions)
        return math.fsum(np.maximum(logpdf, math.log(density_floor)))
    neighbors = nearest_neighbors(train_actions, ensemble_actions)
    if ensemble_actions is density.samples or np.array_equal(
        ensemble_actions, density.samples
    ):
        logpdf = density.member_logpdf()[neighbors]
    else:
        logpdf = kde_logpdf(density, ensemble_actions[neighbors])
    return math.fsum(np.maximum(logpdf, math.log(density_floor)))
