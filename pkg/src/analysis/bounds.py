"""
Analytic bound calculators.

Pure functions of a BoundInputs record: proposal and MH contraction
factors, rejection and acceptance-sensitivity bounds, Lyapunov exit
bounds, iterated Wasserstein bounds and the step-count planner.
Constants the theory leaves unspecified are explicit inputs (default 1)
and are echoed in every BoundReport.
"""

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..config.settings import (
    PLANNER_GRID_RATIO,
    PLANNER_MAX_RADIUS,
    PLANNER_START_RADIUS,
    UNSPECIFIED_CONSTANTS,
)
from ..sampling.core_mh import ProposalKind, TargetModel, grad_U
from ..utils.logger import get_logger

logger = get_logger(__name__)


class MissingConstantError(ValueError):
    """A calculator needs a constant that BoundInputs does not carry."""


@dataclass(frozen=True)
class BoundInputs:
    """
    Constants feeding the bound calculators.

    Args:
        K: Convexity constant in (0, 1]
        M_R: sup over B_R^- of the operator norm of the Hessian of U
        N_R: sup over B_R^- of the operator norm of the Hessian of V
        C: Growth constants C_1..C_4
        p: Growth exponents p_1..p_4
        moments: m_n = E||Z||_-^n keyed by n
        R: Ball radius
        h: Step size in [0, 2); h = 0 is accepted for limits
        unspecified: A, C_main, D_main, q_main, rho, C2_lyap, D_exit, D_bar
    """

    K: Optional[float] = None
    M_R: Optional[float] = None
    N_R: Optional[float] = None
    C: Sequence[float] = (0.0, 0.0, 0.0, 0.0)
    p: Sequence[int] = (0, 0, 0, 0)
    moments: Mapping[int, float] = field(default_factory=dict)
    R: float = 1.0
    h: float = 0.1
    unspecified: Mapping[str, float] = field(default_factory=lambda: dict(UNSPECIFIED_CONSTANTS))
    heuristic: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.K is not None and not (0.0 < self.K <= 1.0):
            raise ValueError(f"K must be in (0, 1], got {self.K}")
        for name in ("M_R", "N_R"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be nonnegative")
        if len(self.C) != 4 or len(self.p) != 4:
            raise ValueError("C and p need four entries each")
        if any(c < 0 for c in self.C) or any(p < 0 for p in self.p):
            raise ValueError("C and p entries must be nonnegative")
        if self.R < 0:
            raise ValueError("R must be nonnegative")
        if not (0.0 <= self.h < 2.0):
            raise ValueError(f"h must be in [0, 2), got {self.h}")
        moments = {int(k): float(v) for k, v in dict(self.moments).items()}
        if any(v < 0 for v in moments.values()):
            raise ValueError("Moments must be nonnegative")
        # Lyapunov's inequality m_j^{1/j} <= m_k^{1/k} for j < k
        orders = sorted(moments)
        for j, k in zip(orders, orders[1:]):
            if moments[j] ** (1.0 / j) > moments[k] ** (1.0 / k) * (1.0 + 1e-9):
                raise ValueError(f"Inconsistent moments: m_{j}^(1/{j}) exceeds m_{k}^(1/{k})")
        unspecified = dict(UNSPECIFIED_CONSTANTS)
        unspecified.update(dict(self.unspecified))
        object.__setattr__(self, "moments", moments)
        object.__setattr__(self, "unspecified", unspecified)
        object.__setattr__(self, "C", tuple(float(c) for c in self.C))
        object.__setattr__(self, "p", tuple(int(p) for p in self.p))

    def with_step(self, h: float) -> "BoundInputs":
        return replace(self, h=h)

    def moment(self, n: int) -> float:
        if n not in self.moments:
            raise MissingConstantError(f"Moment m_{n} = E||Z||_-^{n} is required")
        return self.moments[n]

    def constant(self, name: str) -> float:
        value = getattr(self, name)
        if value is None:
            raise MissingConstantError(f"Constant {name} is required")
        return float(value)

    def free(self, name: str) -> float:
        return float(self.unspecified[name])

    def echo(self) -> Dict[str, object]:
        data = asdict(self)
        data["moments"] = {f"m{k}": v for k, v in self.moments.items()}
        data["heuristic"] = list(self.heuristic)
        return data


@dataclass
class BoundEntry:
    name: str
    value: float
    formula: str
    raw: Optional[float] = None
    heuristic: bool = False
    flags: Dict[str, object] = field(default_factory=dict)


@dataclass
class BoundReport:
    """Named bound values with their formulas and the echoed inputs."""

    entries: List[BoundEntry]
    inputs: Dict[str, object]

    def __getitem__(self, name: str) -> float:
        for entry in self.entries:
            if entry.name == name:
                return entry.value
        raise KeyError(name)

    def to_records(self) -> List[Dict[str, object]]:
        records = []
        for entry in self.entries:
            record = {
                "quantity": entry.name,
                "value": entry.value,
                "raw_value": entry.raw if entry.raw is not None else entry.value,
                "formula": entry.formula,
                "heuristic": entry.heuristic,
            }
            record.update(entry.flags)
            records.append(record)
        return records


@dataclass(frozen=True)
class ProbabilityBound:
    raw: float
    clipped: float


@dataclass(frozen=True)
class AuxiliaryConstants:
    beta: float
    gamma: float
    delta: float
    heuristic: bool = True


@dataclass
class PlannerResult:
    feasible: bool
    R: Optional[float] = None
    h: Optional[float] = None
    n: Optional[int] = None
    violated: Optional[str] = None
    checks: Dict[str, object] = field(default_factory=dict)


FORMULAS = {
    "proposal_convex": "1 - (K/2) h + (M_R^2/8) h^2",
    "proposal_lipschitz": "1 - ((1 - N_R)/2) h",
    "mh_ou": "1 - h/2 + m2 C2 h + A (1+R)(1 + h^(1/2) R) h^(3/2)",
    "mh_semi_implicit": "1 - K h/2 + (M_R^2/8 + gamma) h^2 + (K beta + delta/2) h^(5/2)",
    "rejection_ou": "m1 (C1 + C2|x|) h^(1/2) + (2 m2 C2 + C1|x| + C2|x|^2) h/2 + m1 C2|x| h^(3/2)/2",
    "rejection_semi_implicit": "h^(3/2)(C3 m3/4 + C2 m1 G/2) + h^2(C2 G^2/4 + C2(1+C2) m2/2) + h^3(C3 G^3/32 + C2(1+C2) G^2/8)",
    "sensitivity_ou": "(m2^(1/2) C2 h^(1/2) + (C1 + 2 C2 max|x|) h/2) |x - x~|",
    "sensitivity_semi_implicit": "h^(3/2)/4 (...) + h^2/8 (...) + h^(5/2)/16 (...) + h^3/32 (...)",
    "lyapunov_exit": "D_exit n h exp(K(|x|^2 - R^2)/24)",
    "iterated": "gamma^n w0 + diameter (exit_mu + exit_nu)",
    "convergence": "(1 - K h/4)^n w0 + 8 D_exit R exp(-K R^2/8) n h",
    "final_distance": "58 R (1 - K h/4)^n + D_bar R exp(-K R^2/33) n h",
}


def proposal_contraction_factor(inputs: BoundInputs, mode: str = "convex") -> float:
    """Deterministic contraction factor of the coupled proposals on B_R^-; may exceed 1."""
    h = inputs.h
    if mode == "convex":
        K = inputs.constant("K")
        M = inputs.constant("M_R")
        return 1.0 - 0.5 * K * h + M * M * h * h / 8.0
    if mode == "lipschitz":
        N = inputs.constant("N_R")
        return 1.0 - 0.5 * (1.0 - N) * h
    raise ValueError(f"Unknown mode: {mode!r}")


def sufficient_convexity(N_R: float) -> Optional[float]:
    """K = 1 - N(R) satisfies the convexity assumption when N(R) < 1."""
    if N_R < 1.0:
        return min(1.0, 1.0 - N_R)
    return None


def mh_contraction_factor(inputs: BoundInputs, kind, aux: Optional[AuxiliaryConstants] = None) -> float:
    """
    Contraction constant of the MH transition on B_R^-.

    Args:
        inputs: Constants; OU needs m2, C2 and A, semi-implicit needs K and M_R
        kind: OU or semi-implicit
        aux: beta, gamma, delta for the semi-implicit case

    Returns:
        The factor c_h(R); contraction holds when it is below 1
    """
    kind = ProposalKind.parse(kind)
    h = inputs.h
    if kind is ProposalKind.OU:
        m2 = inputs.moment(2)
        C2 = inputs.C[1]
        A = inputs.free("A")
        R = inputs.R
        return 1.0 - h / 2.0 + m2 * C2 * h + A * (1.0 + R) * (1.0 + math.sqrt(h) * R) * h ** 1.5
    if kind is ProposalKind.SEMI_IMPLICIT:
        if aux is None:
            raise MissingConstantError("Semi-implicit contraction needs beta, gamma and delta")
        K = inputs.constant("K")
        M = inputs.constant("M_R")
        return (1.0 - 0.5 * K * h + (M * M / 8.0 + aux.gamma) * h * h
                + (K * aux.beta + 0.5 * aux.delta) * h ** 2.5)
    raise ValueError("MH contraction factors exist for OU and semi-implicit proposals")


def _semi_implicit_rejection(inputs: BoundInputs, grad_norm: float) -> float:
    h = inputs.h
    _, C2, C3, _ = inputs.C
    m1, m2, m3 = inputs.moment(1), inputs.moment(2), inputs.moment(3)
    G = grad_norm
    return (h ** 1.5 * (0.25 * C3 * m3 + 0.5 * C2 * m1 * G)
            + h ** 2 * (0.25 * C2 * G * G + 0.5 * C2 * (1.0 + C2) * m2)
            + h ** 3 * (C3 * G ** 3 / 32.0 + C2 * (1.0 + C2) * G * G / 8.0))


def _semi_implicit_sensitivity(inputs: BoundInputs, grad_norm: float) -> float:
    h = inputs.h
    _, C2, C3, C4 = inputs.C
    m1, m2, m3 = inputs.moment(1), inputs.moment(2), inputs.moment(3)
    G = grad_norm
    return (0.25 * h ** 1.5 * (C4 * m3 + (1.0 + C2) * C2 * m1 + 2.0 * C3 * G * m1)
            + 0.125 * h ** 2 * (4.0 * C2 * (1.0 + 2.0 * C2) * m2 + 3.0 * C2 * (1.0 + C2) * G + 2.0 * C3 * G * G)
            + h ** 2.5 / 16.0 * C2 * (1.0 + C2) ** 2 * (2.0 * m1 + math.sqrt(h) * G)
            + h ** 3 / 32.0 * (4.0 * C3 * (1.0 + 2.0 * C2) * G * G + C4 * G ** 3))


def _require_flat(inputs: BoundInputs, indices: Sequence[int], label: str) -> None:
    bad = [f"p{i + 1}" for i in indices if inputs.p[i] != 0]
    if bad:
        raise ValueError(f"{label} bound is only available for {', '.join(bad)} = 0")


def rejection_bound(inputs: BoundInputs, kind: str, x_norm: float = 0.0,
                    grad_u_norm: Optional[float] = None) -> float:
    """
    Upper bound on E[1 - alpha(x, Y(x))].

    kind is "ou_p2zero" (needs ||x||_-) or "semi_implicit" (needs ||grad U(x)||_-).
    """
    h = inputs.h
    if kind == "ou_p2zero":
        _require_flat(inputs, (1,), "OU rejection")
        C1, C2 = inputs.C[0], inputs.C[1]
        m1, m2 = inputs.moment(1), inputs.moment(2)
        x = x_norm
        return (m1 * (C1 + C2 * x) * math.sqrt(h)
                + 0.5 * (2.0 * m2 * C2 + C1 * x + C2 * x * x) * h
                + 0.5 * m1 * C2 * x * h ** 1.5)
    if kind == "semi_implicit":
        _require_flat(inputs, (1, 2), "Semi-implicit rejection")
        if grad_u_norm is None:
            raise MissingConstantError("Semi-implicit rejection bound needs ||grad U(x)||_-")
        return _semi_implicit_rejection(inputs, grad_u_norm)
    raise ValueError(f"Unknown rejection bound kind: {kind!r}")


def acceptance_sensitivity_bound(inputs: BoundInputs, kind: str, x_norm: float = 0.0,
                                 x_tilde_norm: Optional[float] = None,
                                 grad_u_norm: Optional[float] = None, distance: float = 1.0) -> float:
    """
    Bound on how fast the acceptance probability changes with the state.

    ou_p2zero: bound on the L^2 norm of alpha(x,Y) - alpha(x~,Y~), scaled by
    distance = ||x - x~||_-. semi_implicit: per-unit-distance bound on
    E||grad_x G(x, Y(x))||_+, also scaled by distance.
    """
    h = inputs.h
    if kind == "ou_p2zero":
        _require_flat(inputs, (1,), "OU sensitivity")
        C1, C2 = inputs.C[0], inputs.C[1]
        m2 = inputs.moment(2)
        largest = max(x_norm, x_tilde_norm if x_tilde_norm is not None else x_norm)
        return (math.sqrt(m2) * C2 * math.sqrt(h) + 0.5 * (C1 + 2.0 * C2 * largest) * h) * distance
    if kind == "semi_implicit":
        _require_flat(inputs, (1, 2, 3), "Semi-implicit sensitivity")
        if grad_u_norm is None:
            raise MissingConstantError("Semi-implicit sensitivity bound needs ||grad U(x)||_-")
        return _semi_implicit_sensitivity(inputs, grad_u_norm) * distance
    raise ValueError(f"Unknown sensitivity bound kind: {kind!r}")


def auxiliary_constants(inputs: BoundInputs, grad_u_sup: float) -> AuxiliaryConstants:
    """
    beta, gamma, delta evaluated at the worst case ||grad U||_- = grad_u_sup.

    beta = rejection / h^(3/2), gamma = m2^(1/2) sensitivity / h^(3/2),
    delta = grad_u_sup sensitivity / h^(3/2). The sensitivity bound stands in
    for its second-moment analogue, so the result is labelled heuristic.
    """
    h = inputs.h
    if h <= 0.0:
        raise ValueError("Auxiliary constants need h > 0")
    scale = h ** 1.5
    beta = _semi_implicit_rejection(inputs, grad_u_sup) / scale
    sensitivity = _semi_implicit_sensitivity(inputs, grad_u_sup) / scale
    logger.debug(f"Auxiliary constants at grad sup {grad_u_sup:.4g}: beta={beta:.4g}")
    return AuxiliaryConstants(
        beta=beta, gamma=math.sqrt(inputs.moment(2)) * sensitivity, delta=sensitivity * grad_u_sup,
    )


def ball_grid(model: TargetModel, R: float, n_grid: int) -> np.ndarray:
    """Grid points of B_R^- for d <= 2."""
    if model.d > 2:
        raise ValueError("Grid searches are limited to d <= 2")
    weights = model.space.weights
    axes = [np.linspace(-R / math.sqrt(w), R / math.sqrt(w), n_grid) for w in weights]
    points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.d)
    return points[model.space.minus(points) <= R * (1.0 + 1e-12)]


def grid_gradient_supremum(model: TargetModel, R: float, n_grid: int = 101) -> float:
    """max ||grad U||_- over a grid of B_R^- (d <= 2)."""
    points = ball_grid(model, R, n_grid)
    grad_sup = float(np.max(model.space.minus(grad_U(model, points))))
    logger.warning(f"⚠️  Using grid supremum ||grad U||_- = {grad_sup:.4g} (heuristic)")
    return grad_sup


def auxiliary_constants_on_grid(model: TargetModel, inputs: BoundInputs, n_grid: int = 101) -> AuxiliaryConstants:
    """Auxiliary constants with grad_u_sup maximized over a grid of B_R^- (d <= 2)."""
    return auxiliary_constants(inputs, grid_gradient_supremum(model, inputs.R, n_grid))


def gradient_supremum(inputs: BoundInputs, model: Optional[TargetModel] = None,
                      grad_u_sup: Optional[float] = None, n_grid: int = 101) -> float:
    """
    Bound on sup ||grad U||_- over B_R^-.

    An explicit grad_u_sup wins. Otherwise d <= 2 models are searched on a
    grid, and anything else falls back to ||grad U(0)||_- + M_R R (M_R R
    alone without a model, exact for quadratic U).
    """
    if grad_u_sup is not None:
        if grad_u_sup < 0:
            raise ValueError("grad_u_sup must be nonnegative")
        return float(grad_u_sup)
    if model is not None and model.d <= 2:
        return grid_gradient_supremum(model, inputs.R, n_grid)
    if inputs.M_R is None:
        raise MissingConstantError("No bound on sup ||grad U||_- over the ball: give grad_u_sup or M_R")
    at_origin = 0.0
    if model is not None:
        at_origin = float(model.space.minus(grad_U(model, np.zeros(model.d))))
    return at_origin + inputs.M_R * inputs.R


def _weighted_operator_norm(matrix: np.ndarray, weights: np.ndarray) -> float:
    scale = np.sqrt(weights)
    return float(np.linalg.norm(scale[:, None] * matrix / scale[None, :], 2))


def estimate_curvature_constants(model: TargetModel, R: float, n_grid: int = 101) -> Dict[str, float]:
    """
    Heuristic M(R) and N(R) as grid maxima of the minus-norm operator norms
    of the Hessians of U and V over B_R^- (d <= 2).
    """
    points = ball_grid(model, R, n_grid)
    eye = np.eye(model.d)
    weights = model.space.weights
    m_sup = 0.0
    n_sup = 0.0
    for point in points:
        hess_v = np.stack([model.hessian_apply(point, e) for e in eye], axis=1)
        n_sup = max(n_sup, _weighted_operator_norm(hess_v, weights))
        m_sup = max(m_sup, _weighted_operator_norm(eye + hess_v, weights))
    logger.warning(f"⚠️  Curvature constants on a {len(points)}-point grid: M_R={m_sup:.4g}, N_R={n_sup:.4g} (heuristic)")
    return {"M_R": m_sup, "N_R": n_sup}


def lyapunov_function(K: float, x_norm: float) -> float:
    """f(x) = exp(K ||x||_-^2 / 16)."""
    return math.exp(K * x_norm * x_norm / 16.0)


def proposal_lyapunov_bound(K: float, h: float, x_prime_norm: float) -> float:
    """Bound exp(K (1 + K h/4) ||x'||_-^2 / 16) on E f(x' + sqrt(h - h^2/4) Z)."""
    return math.exp(K * (1.0 + K * h / 4.0) * x_prime_norm ** 2 / 16.0)


def lyapunov_exit_bound(inputs: BoundInputs, x_norm: float, n: int,
                        radius: Optional[float] = None) -> ProbabilityBound:
    """Bound D n h exp(K (||x||^2 - R^2)/24) on the probability of leaving B_R^- within n steps."""
    K = inputs.constant("K")
    R = inputs.R if radius is None else radius
    raw = inputs.free("D_exit") * n * inputs.h * math.exp(K * (x_norm * x_norm - R * R) / 24.0)
    return ProbabilityBound(raw=raw, clipped=min(1.0, max(0.0, raw)))


def iterated_wasserstein_bound(contraction: float, n: int, w0: float, diameter: float,
                               exit_mu: float = 0.0, exit_nu: float = 0.0) -> float:
    """gamma^n w0 + diameter (exit_mu + exit_nu)."""
    if contraction >= 1.0:
        raise ValueError(f"Contraction constant {contraction} >= 1 gives a vacuous bound")
    if contraction <= 0.0:
        raise ValueError("Contraction constant must be positive")
    for p in (exit_mu, exit_nu):
        if not (0.0 <= p <= 1.0):
            raise ValueError("Exit probabilities must lie in [0, 1]")
    return contraction ** n * w0 + diameter * (exit_mu + exit_nu)


def convergence_bound(inputs: BoundInputs, n: int, w0: float) -> float:
    """
    Iterated bound with contraction 1 - K h/4 on B_2R^-, both chains started
    in B_R^-, the distance truncated at 4R and raw exit bounds from radius 2R.
    """
    K = inputs.constant("K")
    R = inputs.R
    exit_raw = lyapunov_exit_bound(inputs, x_norm=R, n=n, radius=2.0 * R).raw
    return (1.0 - K * inputs.h / 4.0) ** n * w0 + 4.0 * R * 2.0 * exit_raw


def final_distance_bound(inputs: BoundInputs, n: int) -> float:
    """58 R (1 - K h/4)^n + D_bar R exp(-K R^2/33) n h."""
    K = inputs.constant("K")
    R, h = inputs.R, inputs.h
    return 58.0 * R * (1.0 - K * h / 4.0) ** n + inputs.free("D_bar") * R * math.exp(-K * R * R / 33.0) * n * h


def minimal_integration_time(epsilon: float, K: float, R: float) -> float:
    """Smallest n h with 58 R (1 - K h/4)^n <= epsilon/2."""
    return max(0.0, 4.0 / K * math.log(116.0 * R / epsilon))


def feasibility_lhs(epsilon: float, K: float, Dbar: float, R: float) -> float:
    return 8.0 * Dbar / K * math.log(116.0 * R / epsilon) * R * math.exp(-K * R * R / 33.0)


def step_planner(epsilon: float, K: float, Dbar: float, C: float, q: float,
                 start: float = PLANNER_START_RADIUS, ratio: float = PLANNER_GRID_RATIO,
                 max_radius: float = PLANNER_MAX_RADIUS) -> PlannerResult:
    """
    Smallest grid radius R, step size and step count reaching distance epsilon.

    R runs over start * ratio^j. At each R the feasibility condition is
    checked, h is set from 1/h = ceil(C (1+R)^q), n = ceil(T/h) with T the
    minimal integration time, and the exit term is verified. Returns an
    infeasible result naming the last violated constraint when the grid is
    exhausted.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not (0.0 < K <= 1.0) or C <= 0 or q < 0 or Dbar < 0:
        raise ValueError("Planner needs K in (0, 1], C > 0, q >= 0 and Dbar >= 0")

    R = start
    violated = "feasibility"
    while R <= max_radius:
        lhs = feasibility_lhs(epsilon, K, Dbar, R)
        if lhs < epsilon:
            h = 1.0 / math.ceil(C * (1.0 + R) ** q)
            T = minimal_integration_time(epsilon, K, R)
            n = math.ceil(T / h) if T > 0 else 0
            exit_term = Dbar * R * math.exp(-K * R * R / 33.0) * n * h
            if n * h >= T and exit_term < epsilon / 2.0:
                logger.info(f"📐 Planner: R={R:.4g}, h={h:.4g}, n={n}")
                return PlannerResult(
                    feasible=True, R=R, h=h, n=n,
                    checks={"integration_time": T, "n_h": n * h, "exit_term": exit_term,
                            "feasibility_lhs": lhs},
                )
            violated = "exit_term"
        else:
            violated = "feasibility"
        R *= ratio
    logger.warning(f"⚠️  Planner found no radius up to {max_radius} for epsilon={epsilon}")
    return PlannerResult(feasible=False, violated=violated, checks={"max_radius": max_radius})


def bound_report(inputs: BoundInputs, kind, x_norm: float = 0.0, grad_u_norm: Optional[float] = None,
                 n: int = 0, w0: float = 1.0, aux: Optional[AuxiliaryConstants] = None,
                 model: Optional[TargetModel] = None, grad_u_sup: Optional[float] = None) -> BoundReport:
    """
    Evaluate every calculator the inputs support at one (x, h, R).

    Entries whose constants are missing are skipped with a debug log. The
    semi-implicit report needs ||grad U(x)||_- for its pointwise entries and
    raises MissingConstantError without it. Its MH contraction factor uses
    auxiliary constants at the supremum of ||grad U||_- over B_R^- (see
    gradient_supremum), never at the evaluation point.
    """
    kind = ProposalKind.parse(kind)
    entries: List[BoundEntry] = []
    heuristic = bool(inputs.heuristic)

    def add(name, formula_key, compute, **flags):
        try:
            value = compute()
        except (MissingConstantError, ValueError) as e:
            logger.debug(f"Skipping {name}: {e}")
            return
        if isinstance(value, ProbabilityBound):
            entries.append(BoundEntry(name, value.clipped, FORMULAS[formula_key], raw=value.raw,
                                      heuristic=heuristic, flags=flags))
        else:
            entries.append(BoundEntry(name, float(value), FORMULAS[formula_key], heuristic=heuristic, flags=flags))

    add("proposal_contraction_convex", "proposal_convex", lambda: proposal_contraction_factor(inputs, "convex"))
    add("proposal_contraction_lipschitz", "proposal_lipschitz", lambda: proposal_contraction_factor(inputs, "lipschitz"))

    if kind is ProposalKind.OU:
        add("rejection", "rejection_ou", lambda: rejection_bound(inputs, "ou_p2zero", x_norm))
        add("acceptance_sensitivity", "sensitivity_ou",
            lambda: acceptance_sensitivity_bound(inputs, "ou_p2zero", x_norm))
        factor = _try(lambda: mh_contraction_factor(inputs, kind))
        if factor is not None:
            entries.append(BoundEntry("mh_contraction", factor, FORMULAS["mh_ou"], heuristic=heuristic,
                                      flags={"contractive": factor < 1.0}))
    else:
        if grad_u_norm is None:
            raise MissingConstantError("Semi-implicit bounds need ||grad U(x)||_- at the evaluation point")
        add("rejection", "rejection_semi_implicit",
            lambda: rejection_bound(inputs, "semi_implicit", grad_u_norm=grad_u_norm))
        add("acceptance_sensitivity", "sensitivity_semi_implicit",
            lambda: acceptance_sensitivity_bound(inputs, "semi_implicit", grad_u_norm=grad_u_norm))
        sup = None
        if aux is None and inputs.h > 0:
            sup = _try(lambda: gradient_supremum(inputs, model, grad_u_sup))
            if sup is not None:
                aux = _try(lambda: auxiliary_constants(inputs, sup))
        if aux is not None:
            factor = _try(lambda: mh_contraction_factor(inputs, ProposalKind.SEMI_IMPLICIT, aux))
            if factor is not None:
                entries.append(BoundEntry("mh_contraction", factor, FORMULAS["mh_semi_implicit"], heuristic=True,
                                          flags={"contractive": factor < 1.0, "beta": aux.beta,
                                                 "gamma": aux.gamma, "delta": aux.delta, "grad_u_sup": sup}))

    add("lyapunov_exit", "lyapunov_exit", lambda: lyapunov_exit_bound(inputs, x_norm, n))
    add("convergence", "convergence", lambda: convergence_bound(inputs, n, w0))
    add("final_distance", "final_distance", lambda: final_distance_bound(inputs, n))
    return BoundReport(entries=entries, inputs=inputs.echo())


def _try(compute):
    try:
        return compute()
    except (MissingConstantError, ValueError) as e:
        logger.debug(f"Skipped: {e}")
        return None
