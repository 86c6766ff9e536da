"""
Metropolis-Hastings kernels for targets mu ~ exp(-|x|^2/2 - V(x)).

Holds the target data model, the minus/plus norms, the three proposal
kernels (Ornstein-Uhlenbeck, semi-implicit Euler, explicit Euler), the
closed-form log acceptance functions G and their x-gradients, and the
single-chain MH step.

Every array function works on the last axis, so a batch of points with
shape (batch, d) goes through the same code path as a single point.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from ..config.settings import MAX_TRAJECTORY_ENTRIES
from ..utils.logger import get_logger

logger = get_logger(__name__)

Point = np.ndarray
RandomStream = np.random.Generator


class DimensionMismatchError(ValueError):
    """A point does not have the model/norm dimension."""


class NonFiniteValueError(ArithmeticError):
    """V, grad V or a coordinate evaluated to inf/nan."""


class StepSizeError(ValueError):
    """Step size outside (0, 2)."""


class MissingDerivativeError(ValueError):
    """An operation needs a derivative the model does not provide."""


class TrajectoryTooLargeError(MemoryError):
    """Full trajectory storage would exceed MAX_TRAJECTORY_ENTRIES."""


class ProposalKind(str, Enum):
    OU = "ou"
    SEMI_IMPLICIT = "semi_implicit"
    EXPLICIT_EULER = "explicit_euler"

    @classmethod
    def parse(cls, value) -> "ProposalKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"semiimplicit": "semi_implicit", "mala": "semi_implicit",
                   "expliciteuler": "explicit_euler", "euler": "explicit_euler"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"Unknown proposal kind: {value!r}") from None


def _as_points(x, d: int, what: str = "point") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != d:
        raise DimensionMismatchError(f"{what} has shape {arr.shape}, expected last axis {d}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError(f"{what} has non-finite coordinates")
    return arr


@dataclass(frozen=True)
class NormSpace:
    """
    Diagonal inner-product norm <x,y>_- = sum g_i x_i y_i with g_i in (0,1].

    The plus norm is its dual, sum xi_i^2 / g_i, so that
    ||xi||_- <= |xi| <= ||xi||_+ for every xi.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size < 1:
            raise ValueError("NormSpace needs at least one weight")
        if np.any(w <= 0.0) or np.any(w > 1.0):
            raise ValueError("NormSpace weights must lie in (0, 1]")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def euclidean(cls, d: int) -> "NormSpace":
        return cls(np.ones(d))

    @property
    def d(self) -> int:
        return int(self.weights.size)

    def inner(self, x, y) -> np.ndarray:
        x = _as_points(x, self.d)
        y = _as_points(y, self.d)
        return np.sum(self.weights * x * y, axis=-1)

    def minus(self, x) -> np.ndarray:
        x = _as_points(x, self.d)
        return np.sqrt(np.sum(self.weights * x * x, axis=-1))

    def plus(self, x) -> np.ndarray:
        x = _as_points(x, self.d)
        return np.sqrt(np.sum(x * x / self.weights, axis=-1))

    def euclid(self, x) -> np.ndarray:
        x = _as_points(x, self.d)
        return np.sqrt(np.sum(x * x, axis=-1))


def norm_eval(space: NormSpace, x, which: str = "minus"):
    """Evaluate the minus, plus or euclidean norm of x in the given space."""
    which = which.lower()
    if which == "minus":
        value = space.minus(x)
    elif which == "plus":
        value = space.plus(x)
    elif which in ("euclidean", "euclid"):
        value = space.euclid(x)
    else:
        raise ValueError(f"Unknown norm: {which!r}")
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class SmoothnessConstants:
    """Polynomial growth constants C_1..C_4, p_1..p_4 and the convexity constant K."""

    c: Sequence[float] = (0.0, 0.0, 0.0, 0.0)
    p: Sequence[int] = (0, 0, 0, 0)
    k_convexity: Optional[float] = None

    def __post_init__(self):
        if len(self.c) != 4 or len(self.p) != 4:
            raise ValueError("SmoothnessConstants needs four C values and four p values")
        if any(c < 0 for c in self.c) or any(p < 0 for p in self.p):
            raise ValueError("Smoothness constants must be nonnegative")
        if self.k_convexity is not None and not (0.0 < self.k_convexity <= 1.0):
            raise ValueError(f"K must be in (0, 1], got {self.k_convexity}")


@dataclass(frozen=True)
class TargetModel:
    """
    Target mu ~ exp(-U) with U(x) = |x|^2/2 + V(x).

    v_eval, v_grad and v_hess_apply operate on the last axis; v_hess_apply
    maps (x, eta) to the Hessian of V at x applied to eta.
    """

    d: int
    v_eval: Callable[[np.ndarray], np.ndarray]
    v_grad: Callable[[np.ndarray], np.ndarray]
    v_hess_apply: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    constants: Optional[SmoothnessConstants] = None
    norm_space: Optional[NormSpace] = None
    name: str = "custom"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("Model dimension must be >= 1")
        if self.norm_space is not None and self.norm_space.d != self.d:
            raise DimensionMismatchError("Norm space dimension differs from model dimension")

    @property
    def space(self) -> NormSpace:
        return self.norm_space if self.norm_space is not None else NormSpace.euclidean(self.d)

    def value(self, x) -> np.ndarray:
        v = np.asarray(self.v_eval(x), dtype=float)
        if not np.all(np.isfinite(v)):
            raise NonFiniteValueError(f"V is not finite for model {self.name}")
        return v

    def gradient(self, x) -> np.ndarray:
        g = np.asarray(self.v_grad(x), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NonFiniteValueError(f"grad V is not finite for model {self.name}")
        return g

    def hessian_apply(self, x, eta) -> np.ndarray:
        if self.v_hess_apply is None:
            raise MissingDerivativeError(f"Model {self.name} has no Hessian action")
        return np.asarray(self.v_hess_apply(x, eta), dtype=float)


@dataclass(frozen=True)
class ProposalSpec:
    kind: ProposalKind
    h: float

    def __post_init__(self):
        object.__setattr__(self, "kind", ProposalKind.parse(self.kind))
        h = float(self.h)
        if not (0.0 < h < 2.0):
            raise StepSizeError(f"Step size h must be in (0, 2), got {h}")
        object.__setattr__(self, "h", h)


@dataclass
class StepOutcome:
    next: np.ndarray
    proposal: np.ndarray
    g_value: np.ndarray
    accepted: np.ndarray
    log_uniform: np.ndarray


def proposal_std(spec: ProposalSpec) -> float:
    """Per-coordinate proposal standard deviation."""
    h = spec.h
    if spec.kind is ProposalKind.EXPLICIT_EULER:
        return float(np.sqrt(h))
    return float(np.sqrt(h - h * h / 4.0))


def semi_implicit_step_size(epsilon: float) -> float:
    """Step size h = eps / (1 + eps/4) of the semi-implicit scheme with time step eps."""
    if epsilon <= 0:
        raise StepSizeError("Time step must be positive")
    return epsilon / (1.0 + epsilon / 4.0)


def grad_U(model: TargetModel, x) -> np.ndarray:
    """grad U(x) = x + grad V(x)."""
    x = _as_points(x, model.d)
    return x + model.gradient(x)


def _proposal_mean(spec: ProposalSpec, model: TargetModel, x: np.ndarray) -> np.ndarray:
    h = spec.h
    if spec.kind is ProposalKind.OU:
        return (1.0 - h / 2.0) * x
    return (1.0 - h / 2.0) * x - (h / 2.0) * model.gradient(x)


def propose(spec: ProposalSpec, model: TargetModel, x, z) -> np.ndarray:
    """
    Proposal Y(x) for a caller-supplied standard normal draw z.

    Args:
        spec: Proposal family and step size
        model: Target model
        x: Current state(s)
        z: Standard normal innovation, broadcastable against x

    Returns:
        Proposed state(s)
    """
    x = _as_points(x, model.d)
    z = _as_points(z, model.d, "noise")
    return _proposal_mean(spec, model, x) + proposal_std(spec) * z


def log_g(spec: ProposalSpec, model: TargetModel, x, y):
    """
    Closed-form log acceptance function G(x, y); alpha = exp(-G^+).

    OU proposals give V(y) - V(x). Semi-implicit and explicit Euler
    proposals share the trapezoidal term and differ in the O(h) correction.
    """
    x = _as_points(x, model.d)
    y = _as_points(y, model.d)
    dv = model.value(y) - model.value(x)
    if spec.kind is ProposalKind.OU:
        return _scalar(dv)

    h = spec.h
    gx = model.gradient(x)
    gy = model.gradient(y)
    trapezoid = dv - 0.5 * np.sum((y - x) * (gy + gx), axis=-1)
    if spec.kind is ProposalKind.SEMI_IMPLICIT:
        correction = np.sum((y + x) * (gy - gx), axis=-1) + np.sum(gy * gy, axis=-1) - np.sum(gx * gx, axis=-1)
        return _scalar(trapezoid + h / (8.0 - 2.0 * h) * correction)

    uy = y + gy
    ux = x + gx
    correction = np.sum(uy * uy, axis=-1) - np.sum(ux * ux, axis=-1)
    return _scalar(trapezoid + h / 8.0 * correction)


def log_proposal_density_ratio(spec: ProposalSpec, model: TargetModel, x, y):
    """log p(x,y) - log p(y,x); normalizing constants cancel."""
    x = _as_points(x, model.d)
    y = _as_points(y, model.d)
    var = proposal_std(spec) ** 2
    forward = y - _proposal_mean(spec, model, x)
    backward = x - _proposal_mean(spec, model, y)
    return _scalar(-(np.sum(forward * forward, axis=-1) - np.sum(backward * backward, axis=-1)) / (2.0 * var))


def log_g_oracle(spec: ProposalSpec, model: TargetModel, x, y):
    """G(x,y) = U(y) - U(x) + log p(x,y)/p(y,x) from explicit Gaussian log-densities."""
    x = _as_points(x, model.d)
    y = _as_points(y, model.d)
    du = 0.5 * (np.sum(y * y, axis=-1) - np.sum(x * x, axis=-1)) + model.value(y) - model.value(x)
    return _scalar(du + log_proposal_density_ratio(spec, model, x, y))


def acceptance(g):
    """alpha = exp(-max(g, 0))."""
    value = np.exp(-np.maximum(g, 0.0))
    return _scalar(value)


def _scalar(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def mh_step_with_noise(spec: ProposalSpec, model: TargetModel, x, z, log_u) -> StepOutcome:
    """
    Deterministic MH transition for supplied noise.

    Accepts iff ln u < -G^+; a rejected step returns x itself, unchanged.
    """
    x = _as_points(x, model.d)
    y = propose(spec, model, x, z)
    g = np.asarray(log_g(spec, model, x, y), dtype=float)
    log_u = np.asarray(log_u, dtype=float)
    accepted = log_u < -np.maximum(g, 0.0)
    if x.ndim == 1:
        nxt = y if bool(accepted) else x
    else:
        nxt = np.where(accepted[..., None], y, x)
    return StepOutcome(next=nxt, proposal=y, g_value=g, accepted=accepted, log_uniform=log_u)


def draw_noise(rng: RandomStream, d: int, batch: Optional[int] = None):
    """One standard normal innovation and one log-uniform, in that order."""
    if batch is None:
        z = rng.standard_normal(d)
        u = rng.random()
    else:
        z = rng.standard_normal((batch, d))
        u = rng.random(batch)
    with np.errstate(divide="ignore"):
        return z, np.log(u)


def mh_step(spec: ProposalSpec, model: TargetModel, x, rng: RandomStream) -> StepOutcome:
    """Single MH step drawing its own innovation and uniform from rng."""
    z, log_u = draw_noise(rng, model.d)
    return mh_step_with_noise(spec, model, x, z, log_u)


@dataclass
class ChainSummary:
    """Streaming summary of a chain run (trajectory only when requested)."""

    n_steps: int
    n_accepted: int
    mean: np.ndarray
    variance: np.ndarray
    max_minus_norm: float
    final_state: np.ndarray
    burn_in: int = 0
    trajectory: Optional[np.ndarray] = None
    n_recorded: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_steps if self.n_steps else 0.0


def run_chain(spec: ProposalSpec, model: TargetModel, x0, n: int, rng: RandomStream,
              store_trajectory: bool = False, burn_in: int = 0) -> ChainSummary:
    """
    Run n MH steps from x0.

    Args:
        spec: Proposal family and step size
        model: Target model
        x0: Initial state
        n: Number of steps (>= 1)
        rng: Random stream owned by this chain
        store_trajectory: Keep all n+1 states (refused above MAX_TRAJECTORY_ENTRIES)
        burn_in: Steps excluded from the running mean/variance

    Returns:
        ChainSummary with acceptance count, running moments and max minus norm
    """
    if n < 1:
        raise ValueError("run_chain needs n >= 1")
    x = _as_points(x0, model.d, "initial state")
    if x.ndim != 1:
        raise DimensionMismatchError("run_chain advances a single chain; pass a 1-D initial state")

    trajectory = None
    if store_trajectory:
        entries = (n + 1) * model.d
        if entries > MAX_TRAJECTORY_ENTRIES:
            raise TrajectoryTooLargeError(
                f"Trajectory would hold {entries} floats (limit {MAX_TRAJECTORY_ENTRIES}); "
                "run with store_trajectory=False to get the streaming summary instead"
            )
        trajectory = np.empty((n + 1, model.d))
        trajectory[0] = x

    space = model.space
    max_norm = float(space.minus(x))
    mean = np.zeros(model.d)
    m2 = np.zeros(model.d)
    count = 0
    accepted = 0

    for k in range(1, n + 1):
        outcome = mh_step(spec, model, x, rng)
        x = outcome.next
        if outcome.accepted:
            accepted += 1
            max_norm = max(max_norm, float(space.minus(x)))
        if trajectory is not None:
            trajectory[k] = x
        if k > burn_in:
            # Welford update
            count += 1
            delta = x - mean
            mean += delta / count
            m2 += delta * (x - mean)

    variance = m2 / (count - 1) if count > 1 else np.zeros(model.d)
    logger.debug(f"Chain finished: {n} steps, acceptance rate {accepted / n:.4f}")
    return ChainSummary(
        n_steps=n, n_accepted=accepted, mean=mean, variance=variance,
        max_minus_norm=max_norm, final_state=x, burn_in=burn_in,
        trajectory=trajectory, n_recorded=count,
    )


def offset_proposal(spec: ProposalSpec, model: TargetModel, x, w) -> np.ndarray:
    """
    Proposal written through its noise offset w.

    OU: y = (1 - h/2) x + w.  Semi-implicit: y = x - (h/2) grad U(x) + w.
    """
    x = _as_points(x, model.d)
    return _proposal_mean(spec, model, x) + np.asarray(w, dtype=float)


def grad_x_g(spec: ProposalSpec, model: TargetModel, x, w) -> np.ndarray:
    """
    Gradient in x of F(x, w) = G(x, y(x, w)) with the noise offset w held fixed.

    Args:
        spec: OU or semi-implicit proposal
        model: Target model (semi-implicit needs the Hessian action)
        x: Current state(s)
        w: Noise offset, see offset_proposal

    Returns:
        The gradient, same shape as x
    """
    x = _as_points(x, model.d)
    w = _as_points(w, model.d, "noise offset")
    h = spec.h
    gx = model.gradient(x)

    if spec.kind is ProposalKind.OU:
        y = (1.0 - h / 2.0) * x + w
        gy = model.gradient(y)
        return (1.0 - h / 2.0) * (gy - gx) - (h / 2.0) * gx

    if spec.kind is not ProposalKind.SEMI_IMPLICIT:
        raise ValueError("grad_x_g is defined for OU and semi-implicit proposals")
    if model.v_hess_apply is None:
        raise MissingDerivativeError(f"Model {model.name} has no Hessian action; grad_x_g needs it")

    y = x - (h / 2.0) * (x + gx) + w
    gy = model.gradient(y)
    step = y - x
    s = (gy - gx) + (y + gy) + (x + gx)

    def hx(v):
        return model.hessian_apply(x, v)

    def hy(v):
        return model.hessian_apply(y, v)

    hy_step = hy(step)
    hy_s = hy(s)
    result = gy - gx - 0.5 * (hy_step + hx(step))
    result = result + (h / 4.0) * (hy_step + hx(hy_step))
    result = result + h / (8.0 - 2.0 * h) * (hy_s - hx(s))
    result = result - h * h / (16.0 - 4.0 * h) * (hy_s + hx(hy_s))
    return result
