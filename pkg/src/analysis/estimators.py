"""
Monte Carlo estimators confronting the analytic bounds with simulation.

Every estimator accepts either a numpy Generator or an integer seed. The
work is split into blocks that each own a stream derived from that seed
and the block index, and blocks are reduced in index order, so the
result does not depend on MHCONTRACT_WORKERS.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import stats
from scipy.special import gammaln

from ..config.settings import (
    CONFIDENCE_SIGMAS,
    FINITE_DIFFERENCE_STEP,
    MOMENT_SAMPLES,
    MOMENT_SEED,
    SCALING_MAX_RELATIVE_STD_ERROR,
    SCALING_MIN_POINTS,
)
from ..sampling.core_mh import (
    NormSpace,
    ProposalKind,
    ProposalSpec,
    TargetModel,
    _as_points,
    acceptance,
    draw_noise,
    log_g,
    mh_step_with_noise,
    propose,
)
from ..sampling.coupling import count_events, one_step_coupled_draws
from ..utils.logger import get_logger
from ..utils.random_streams import chunk_ranges, derive_stream, ordered_map

logger = get_logger(__name__)

SeedLike = Union[int, np.random.Generator]
BLOCK_SIZE = 20_000


@dataclass
class EstimateWithError:
    value: float
    std_error: float
    n_samples: int
    extra: Dict[str, object] = field(default_factory=dict)

    def upper(self, sigmas: float = CONFIDENCE_SIGMAS) -> float:
        return self.value + sigmas * self.std_error

    def lower(self, sigmas: float = CONFIDENCE_SIGMAS) -> float:
        return self.value - sigmas * self.std_error


@dataclass
class ScalingFit:
    """Least-squares fit of log E[1 - alpha] against log h."""

    h_grid: np.ndarray
    estimates: np.ndarray
    std_errors: np.ndarray
    used: np.ndarray
    slope: float
    intercept: float
    residuals: np.ndarray

    @property
    def prefactor(self) -> float:
        return math.exp(self.intercept)

    def to_records(self) -> List[Dict[str, object]]:
        return [
            {"h": float(h), "estimate": float(e), "std_error": float(s), "used_in_fit": bool(u)}
            for h, e, s, u in zip(self.h_grid, self.estimates, self.std_errors, self.used)
        ]


@dataclass
class DimensionProfile:
    dimensions: List[int]
    estimates: List[EstimateWithError]

    @property
    def ratio(self) -> float:
        values = [e.value for e in self.estimates]
        if min(values) <= 0.0:
            return math.inf
        return max(values) / min(values)


def stream_seed(rng: SeedLike) -> int:
    """Integer seed for deriving block streams."""
    if isinstance(rng, (int, np.integer)):
        return int(rng)
    return int(rng.integers(0, 2 ** 63 - 1))


def _mean_and_error(values: np.ndarray) -> EstimateWithError:
    values = np.asarray(values, dtype=float)
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EstimateWithError(float(values.mean()), se, n)


def _blockwise(n_samples: int, seed: int, draw: Callable[[np.random.Generator, int], np.ndarray],
               description: str = "") -> np.ndarray:
    blocks = list(chunk_ranges(n_samples, BLOCK_SIZE))

    def run(index):
        return draw(derive_stream(seed, index), len(blocks[index]))

    return np.concatenate(ordered_map(run, list(range(len(blocks))), description))


def estimate_rejection_probability(spec: ProposalSpec, model: TargetModel, x, n_samples: int,
                                   rng: SeedLike) -> EstimateWithError:
    """
    Monte Carlo mean of 1 - alpha(x, Y(x)) with its standard error.

    The uniform is integrated out, so each draw contributes 1 - alpha.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x = _as_points(x, model.d)
    seed = stream_seed(rng)

    def draw(stream, size):
        z = stream.standard_normal((size, model.d))
        y = propose(spec, model, x, z)
        return 1.0 - np.asarray(acceptance(log_g(spec, model, np.broadcast_to(x, y.shape), y)))

    return _mean_and_error(_blockwise(n_samples, seed, draw))


def fit_power_law(h_grid: Sequence[float], estimates: Sequence[float], std_errors: Sequence[float],
                  max_rel_err: float = SCALING_MAX_RELATIVE_STD_ERROR,
                  min_points: int = SCALING_MIN_POINTS) -> ScalingFit:
    """
    Fit log(estimate) = slope * log(h) + intercept.

    Points with a zero estimate or a relative std error above max_rel_err
    are excluded.

    Raises:
        ValueError: grid not strictly increasing, fewer than 4 grid points,
            or fewer than min_points usable points
    """
    h = np.asarray(h_grid, dtype=float)
    est = np.asarray(estimates, dtype=float)
    se = np.asarray(std_errors, dtype=float)
    if h.size < 4 or np.any(np.diff(h) <= 0):
        raise ValueError("h grid must be strictly increasing with at least 4 points")
    with np.errstate(divide="ignore", invalid="ignore"):
        relative = np.where(est > 0, se / est, np.inf)
    used = (est > 0) & (relative <= max_rel_err)
    if int(used.sum()) < min_points:
        raise ValueError(f"Only {int(used.sum())} usable grid points (need {min_points})")
    log_h = np.log(h[used])
    log_e = np.log(est[used])
    slope, intercept = np.polyfit(log_h, log_e, 1)
    residuals = log_e - (slope * log_h + intercept)
    return ScalingFit(h, est, se, used, float(slope), float(intercept), residuals)


def estimate_rejection_curve(kind, model: TargetModel, x, h_grid: Sequence[float], n_samples: int,
                             rng: SeedLike) -> List[EstimateWithError]:
    """Rejection estimates along a step-size grid; grid point i uses stream i."""
    kind = ProposalKind.parse(kind)
    seed = stream_seed(rng)
    estimates = []
    for index, h in enumerate(h_grid):
        estimate = estimate_rejection_probability(ProposalSpec(kind, h), model, x, n_samples,
                                                  derive_stream(seed, index))
        logger.debug(f"h={h}: rejection {estimate.value:.4e} ± {estimate.std_error:.1e}")
        estimates.append(estimate)
    return estimates


def fit_scaling_exponent(kind, model: TargetModel, x, h_grid: Sequence[float], n_samples: int,
                         rng: SeedLike) -> ScalingFit:
    """Estimate rejection on every grid step size and fit the power law."""
    kind = ProposalKind.parse(kind)
    estimates = estimate_rejection_curve(kind, model, x, h_grid, n_samples, rng)
    fit = fit_power_law(h_grid, [e.value for e in estimates], [e.std_error for e in estimates])
    logger.info(f"📈 Fitted {kind.value} rejection exponent: {fit.slope:.4f}")
    return fit


def estimate_contraction_rate(spec: ProposalSpec, model: TargetModel, x, x_tilde, n_samples: int,
                              rng: SeedLike) -> EstimateWithError:
    """
    E||W - W~||_- / ||x - x~||_- over one coupled step from (x, x~).

    The event tally of the coupled draws is returned in extra["events"].
    """
    x = _as_points(x, model.d)
    x_tilde = _as_points(x_tilde, model.d)
    d0 = float(model.space.minus(x - x_tilde))
    if d0 == 0.0:
        raise ValueError("Contraction rate needs distinct points")
    seed = stream_seed(rng)

    def draw(stream, size):
        z, log_u = draw_noise(stream, model.d, size)
        distances, first, second = one_step_coupled_draws(spec, model, x, x_tilde, z, log_u)
        return np.column_stack([distances / d0, first, second])

    samples = _blockwise(n_samples, seed, draw)
    estimate = _mean_and_error(samples[:, 0])
    estimate.extra["events"] = count_events(samples[:, 1] > 0.5, samples[:, 2] > 0.5)
    return estimate


def fit_contraction_slope(kind, model: TargetModel, x, x_tilde, h_grid: Sequence[float],
                          n_samples: int, seed: int) -> Dict[str, object]:
    """
    Slope of 1 - (one-step ratio) against h, fitted with an intercept.

    All grid points share the seed so their noise is common.
    """
    kind = ProposalKind.parse(kind)
    estimates = [
        estimate_contraction_rate(ProposalSpec(kind, h), model, x, x_tilde, n_samples, seed)
        for h in h_grid
    ]
    gaps = np.array([1.0 - e.value for e in estimates])
    slope, intercept = np.polyfit(np.asarray(h_grid, dtype=float), gaps, 1)
    logger.info(f"📉 Contraction slope {slope:.4f} (intercept {intercept:.2e})")
    return {"slope": float(slope), "intercept": float(intercept), "estimates": estimates}


def estimate_exit_probability(spec: ProposalSpec, model: TargetModel, x0, R: float, n_steps: int,
                              n_replicas: int, rng: SeedLike) -> EstimateWithError:
    """
    Fraction of replicas whose pre-step states X_0..X_{n-1} reach ||X_k||_- >= R.

    Replica r runs on stream r of the seed; replicas are advanced together
    in blocks. extra["exit_steps"] holds the first exit step per replica
    (-1 for no exit).
    """
    x0 = _as_points(x0, model.d)
    space = model.space
    if float(space.minus(x0)) >= R:
        raise ValueError("Initial state must lie inside B_R^-")
    if n_steps < 1 or n_replicas < 1:
        raise ValueError("n_steps and n_replicas must be >= 1")
    seed = stream_seed(rng)
    block = max(1, min(1024, n_replicas))
    groups = list(chunk_ranges(n_replicas, block))

    def run(group_index):
        replicas = groups[group_index]
        streams = [derive_stream(seed, r) for r in replicas]
        states = np.tile(x0, (len(replicas), 1))
        exit_steps = np.full(len(replicas), -1)
        for k in range(n_steps):
            outside = (space.minus(states) >= R) & (exit_steps < 0)
            exit_steps[outside] = k
            if np.all(exit_steps >= 0):
                break
            noise = [draw_noise(stream, model.d) for stream in streams]
            z = np.stack([n[0] for n in noise])
            log_u = np.array([n[1] for n in noise])
            states = mh_step_with_noise(spec, model, states, z, log_u).next
        return exit_steps

    exit_steps = np.concatenate(ordered_map(run, list(range(len(groups))), "exit replicas"))
    exited = exit_steps >= 0
    p = float(exited.mean())
    estimate = EstimateWithError(p, math.sqrt(p * (1.0 - p) / n_replicas), n_replicas)
    estimate.extra["exit_steps"] = exit_steps
    return estimate


def fit_exit_constant(estimate: float, K: float, x_norm: float, R: float, n: int, h: float) -> float:
    """Smallest D with D n h exp(K (|x|^2 - R^2)/24) >= estimate."""
    return estimate / (n * h * math.exp(K * (x_norm * x_norm - R * R) / 24.0))


def wasserstein_1d(samples_a, samples_b) -> float:
    """
    Empirical W1 distance on the line.

    Equal sizes use the sorted pairing; unequal sizes use the exact
    quantile-function formula from scipy.
    """
    a = np.asarray(samples_a, dtype=float).ravel()
    b = np.asarray(samples_b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("Wasserstein distance needs nonempty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(np.sort(a) - np.sort(b))))
    return float(stats.wasserstein_distance(a, b))


def finite_difference_check(f: Callable[[np.ndarray], float], grad_f: Callable[[np.ndarray], np.ndarray],
                            points, fd_step: float = FINITE_DIFFERENCE_STEP, atol: float = 1e-8) -> float:
    """
    Max over points of |FD - grad|_2 / (|FD|_2 + atol) with central differences.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    worst = 0.0
    for point in np.atleast_2d(np.asarray(points, dtype=float)):
        analytic = np.asarray(grad_f(point), dtype=float)
        numeric = np.empty_like(point)
        for i in range(point.size):
            step = np.zeros_like(point)
            step[i] = fd_step
            numeric[i] = (float(f(point + step)) - float(f(point - step))) / (2.0 * fd_step)
        error = np.linalg.norm(numeric - analytic) / (np.linalg.norm(numeric) + atol)
        worst = max(worst, float(error))
    return worst


def minus_norm_moments(space: NormSpace, orders: Sequence[int] = (1, 2, 3),
                       n_samples: int = MOMENT_SAMPLES, seed: int = MOMENT_SEED) -> Dict[int, float]:
    """
    m_n = E||Z||_-^n for standard normal Z.

    Euclidean weights use the chi moments 2^{n/2} Gamma((d+n)/2) / Gamma(d/2);
    other weights are estimated by Monte Carlo with a fixed seed.
    """
    d = space.d
    if np.all(space.weights == 1.0):
        return {n: float(np.exp(0.5 * n * np.log(2.0) + gammaln((d + n) / 2.0) - gammaln(d / 2.0)))
                for n in orders}

    def draw(stream, size):
        z = stream.standard_normal((size, d))
        return np.sqrt(np.sum(space.weights * z * z, axis=-1))

    norms = _blockwise(n_samples, seed, draw)
    logger.debug(f"Monte Carlo norm moments from {n_samples} samples")
    return {n: float(np.mean(norms ** n)) for n in orders}


def gaussian_lyapunov_expectation(a: float, sigma: float, x, K: float, weights=None) -> float:
    """E exp(K/16 ||a x + sigma Z||_-^2) in closed form."""
    x = np.asarray(x, dtype=float)
    g = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    s = K / 16.0
    denom = 1.0 - 2.0 * s * g * sigma * sigma
    if np.any(denom <= 0):
        raise ValueError("Expectation is infinite for these parameters")
    return float(np.prod(denom ** -0.5) * np.exp(np.sum(s * g * a * a * x * x / denom)))


def lyapunov_drift_check(spec: ProposalSpec, model: TargetModel, K: float, x_points, n_samples: int,
                         rng: SeedLike, c2: Optional[float] = None) -> List[Dict[str, object]]:
    """
    Smallest C2 with E f(X_1) <= f(x)^{1 - K h/4} e^{C2 h}, f = exp(K ||x||_-^2 / 16), per point.
    """
    seed = stream_seed(rng)
    space = model.space
    h = spec.h
    records = []
    for index, point in enumerate(np.atleast_2d(np.asarray(x_points, dtype=float))):
        point = _as_points(point, model.d)

        def draw(stream, size, point=point):
            z, log_u = draw_noise(stream, model.d, size)
            nxt = mh_step_with_noise(spec, model, np.broadcast_to(point, z.shape), z, log_u).next
            return np.exp(K * space.minus(nxt) ** 2 / 16.0)

        estimate = _mean_and_error(_blockwise(n_samples, int(derive_stream(seed, index).integers(2 ** 62)), draw))
        log_f = K * float(space.minus(point)) ** 2 / 16.0
        fitted = (math.log(estimate.value) - (1.0 - K * h / 4.0) * log_f) / h
        record = {
            "x_norm": float(space.minus(point)),
            "expected_f": estimate.value,
            "std_error": estimate.std_error,
            "fitted_C2": fitted,
        }
        if c2 is not None:
            record["passes"] = fitted <= c2
        records.append(record)
    return records


def estimate_dimension_profile(kind, h: float, models: Sequence[TargetModel], points: Sequence[np.ndarray],
                               n_samples: int, seed: int) -> DimensionProfile:
    """Rejection estimates at a fixed h across models of increasing dimension."""
    spec = ProposalSpec(kind, h)
    estimates = [
        estimate_rejection_probability(spec, model, x, n_samples, derive_stream(seed, index))
        for index, (model, x) in enumerate(zip(models, points))
    ]
    profile = DimensionProfile([m.d for m in models], estimates)
    logger.info(f"📏 Rejection max/min ratio across dimensions: {profile.ratio:.3f}")
    return profile
