"""
Synchronous coupling of two MH chains.

Both chains use the same Gaussian innovation and the same acceptance
uniform. Distances are measured in the model's minus norm.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from ..utils.logger import get_logger
from .core_mh import (
    DimensionMismatchError,
    ProposalKind,
    ProposalSpec,
    TargetModel,
    _as_points,
    acceptance,
    draw_noise,
    grad_U,
    mh_step_with_noise,
    propose,
    log_g,
)

logger = get_logger(__name__)


class CouplingEvent(str, Enum):
    BOTH_ACCEPT = "both_accept"
    BOTH_REJECT = "both_reject"
    FIRST_ONLY = "first_only"
    SECOND_ONLY = "second_only"

    @classmethod
    def from_flags(cls, first: bool, second: bool) -> "CouplingEvent":
        if first and second:
            return cls.BOTH_ACCEPT
        if not first and not second:
            return cls.BOTH_REJECT
        return cls.FIRST_ONLY if first else cls.SECOND_ONLY


EVENT_ORDER = (CouplingEvent.BOTH_ACCEPT, CouplingEvent.BOTH_REJECT,
               CouplingEvent.FIRST_ONLY, CouplingEvent.SECOND_ONLY)


@dataclass(frozen=True)
class CoupledState:
    x: np.ndarray
    x_tilde: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        xt = np.asarray(self.x_tilde, dtype=float)
        if x.shape != xt.shape or x.ndim != 1:
            raise DimensionMismatchError(f"Coupled components have shapes {x.shape} and {xt.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "x_tilde", xt)

    @property
    def coalesced(self) -> bool:
        return bool(np.array_equal(self.x, self.x_tilde))


@dataclass
class ContractionReport:
    """Summary of a coupled run or of a batch of one-step coupled draws."""

    distances: np.ndarray
    mean_ratio: float
    ratio_std_error: float
    event_counts: Dict[str, int]
    coalescence_step: Optional[int] = None
    exit_step: Optional[int] = None
    decomposition_bound: Optional[float] = None
    n_ratio_samples: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n_events(self) -> int:
        return int(sum(self.event_counts.values()))


def truncated_distance(x, x_tilde, radius: float, model: TargetModel) -> float:
    """min(||x - x~||_-, 2R)."""
    return float(min(model.space.minus(np.asarray(x) - np.asarray(x_tilde)), 2.0 * radius))


def coupled_step_with_noise(spec: ProposalSpec, model: TargetModel, s: CoupledState,
                            z, log_u) -> Tuple[CoupledState, CouplingEvent]:
    first = mh_step_with_noise(spec, model, s.x, z, log_u)
    second = mh_step_with_noise(spec, model, s.x_tilde, z, log_u)
    event = CouplingEvent.from_flags(bool(first.accepted), bool(second.accepted))
    return CoupledState(first.next, second.next), event


def coupled_step(spec: ProposalSpec, model: TargetModel, s: CoupledState,
                 rng: np.random.Generator) -> Tuple[CoupledState, CouplingEvent]:
    """
    One coupled MH transition.

    Args:
        spec: Proposal family and step size
        model: Target model
        s: Current pair
        rng: Stream supplying the shared innovation and the shared uniform

    Returns:
        The new pair and which accept/reject combination occurred
    """
    if s.x.shape[-1] != model.d:
        raise DimensionMismatchError(f"Coupled state has dimension {s.x.shape[-1]}, model has {model.d}")
    z, log_u = draw_noise(rng, model.d)
    return coupled_step_with_noise(spec, model, s, z, log_u)


def proposal_coupling_distance(spec: ProposalSpec, model: TargetModel, x, x_tilde) -> float:
    """
    Deterministic minus-norm distance of the coupled proposals.

    OU: (1 - h/2)||x - x~||_-; gradient proposals: ||x - x~ - (h/2)(grad U(x) - grad U(x~))||_-.
    """
    x = _as_points(x, model.d)
    x_tilde = _as_points(x_tilde, model.d)
    h = spec.h
    if spec.kind is ProposalKind.OU:
        return float((1.0 - h / 2.0) * model.space.minus(x - x_tilde))
    diff = x - x_tilde - (h / 2.0) * (grad_U(model, x) - grad_U(model, x_tilde))
    return float(model.space.minus(diff))


def one_step_coupled_draws(spec: ProposalSpec, model: TargetModel, x, x_tilde, z, log_u):
    """
    Vectorized one-step coupled transitions from a fixed pair.

    Args:
        z: Shared innovations, shape (n, d)
        log_u: Shared log-uniforms, shape (n,)

    Returns:
        (distances of the new pair, first accepted flags, second accepted flags)
    """
    x = _as_points(x, model.d)
    x_tilde = _as_points(x_tilde, model.d)
    first = mh_step_with_noise(spec, model, np.broadcast_to(x, z.shape), z, log_u)
    second = mh_step_with_noise(spec, model, np.broadcast_to(x_tilde, z.shape), z, log_u)
    distances = model.space.minus(first.next - second.next)
    return distances, np.asarray(first.accepted), np.asarray(second.accepted)


def count_events(first, second) -> Dict[str, int]:
    first = np.asarray(first, dtype=bool)
    second = np.asarray(second, dtype=bool)
    return {
        CouplingEvent.BOTH_ACCEPT.value: int(np.sum(first & second)),
        CouplingEvent.BOTH_REJECT.value: int(np.sum(~first & ~second)),
        CouplingEvent.FIRST_ONLY.value: int(np.sum(first & ~second)),
        CouplingEvent.SECOND_ONLY.value: int(np.sum(~first & second)),
    }


def contraction_decomposition(spec: ProposalSpec, model: TargetModel, x, x_tilde, z) -> Dict[str, np.ndarray]:
    """
    Per-draw terms of the basic MH contractivity upper bound, divided by d(x, x~).

    The terms are d(Y,Y~), (d(x,x~) - d(Y,Y~)) max(1-a, 1-a~),
    d(x,Y)(a - a~)^+ and d(x~,Y~)(a - a~)^-; their expectation bounds
    E d(W, W~) / d(x, x~). The uniform does not enter.
    """
    x = _as_points(x, model.d)
    x_tilde = _as_points(x_tilde, model.d)
    space = model.space
    d0 = float(space.minus(x - x_tilde))
    if d0 == 0.0:
        raise ValueError("Decomposition needs distinct points")
    y = propose(spec, model, x, z)
    yt = propose(spec, model, x_tilde, z)
    a = np.asarray(acceptance(log_g(spec, model, x, y)))
    at = np.asarray(acceptance(log_g(spec, model, x_tilde, yt)))
    dy = space.minus(y - yt)
    terms = {
        "proposal": dy / d0,
        "joint_rejection": (d0 - dy) * np.maximum(1.0 - a, 1.0 - at) / d0,
        "first_excess": space.minus(y - x) * np.maximum(a - at, 0.0) / d0,
        "second_excess": space.minus(yt - x_tilde) * np.maximum(at - a, 0.0) / d0,
    }
    terms["total"] = terms["proposal"] + terms["joint_rejection"] + terms["first_excess"] + terms["second_excess"]
    return terms


def run_coupled_chain(spec: ProposalSpec, model: TargetModel, s0: CoupledState, n: int,
                      rng: np.random.Generator, radius: Optional[float] = None) -> ContractionReport:
    """
    Evolve the coupled pair for n steps.

    Records the minus-norm distance after every step, the one-step ratios
    over steps that start from distinct points, the event counts, the first
    coalescence step and, when a radius is given, the first step k < n whose
    pre-step state has left B_R^-.
    """
    if n < 1:
        raise ValueError("run_coupled_chain needs n >= 1")
    space = model.space
    state = s0
    distances = np.empty(n + 1)
    distances[0] = space.minus(state.x - state.x_tilde)
    ratios = []
    bounds = []
    counts = {event.value: 0 for event in EVENT_ORDER}
    coalescence_step = 0 if state.coalesced else None
    exit_step = None

    for k in range(n):
        if radius is not None and exit_step is None:
            if space.minus(state.x) >= radius or space.minus(state.x_tilde) >= radius:
                exit_step = k
        z, log_u = draw_noise(rng, model.d)
        if distances[k] > 0.0:
            bounds.append(float(contraction_decomposition(spec, model, state.x, state.x_tilde, z)["total"]))
        state, event = coupled_step_with_noise(spec, model, state, z, log_u)
        counts[event.value] += 1
        distances[k + 1] = space.minus(state.x - state.x_tilde)
        if distances[k] > 0.0:
            ratios.append(distances[k + 1] / distances[k])
        if coalescence_step is None and state.coalesced:
            coalescence_step = k + 1
            logger.debug(f"Coupled chains coalesced at step {k + 1}")

    ratios = np.asarray(ratios)
    mean_ratio = float(ratios.mean()) if ratios.size else 0.0
    std_error = float(ratios.std(ddof=1) / np.sqrt(ratios.size)) if ratios.size > 1 else 0.0
    return ContractionReport(
        distances=distances,
        mean_ratio=mean_ratio,
        ratio_std_error=std_error,
        event_counts=counts,
        coalescence_step=coalescence_step,
        exit_step=exit_step,
        decomposition_bound=float(np.mean(bounds)) if bounds else None,
        n_ratio_samples=int(ratios.size),
    )
