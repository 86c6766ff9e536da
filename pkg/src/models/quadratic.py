"""
Quadratic perturbations V(x) = (1/2) sum b_i x_i^2 with exact constants.
"""

from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..sampling.core_mh import SmoothnessConstants, TargetModel
from ..utils.logger import get_logger

logger = get_logger(__name__)


def exact_quadratic_variance(b: float) -> float:
    """Stationary variance 1/(1+b) of the one-dimensional quadratic target."""
    if 1.0 + b <= 0.0:
        raise ValueError(f"Target is not normalizable for b = {b}")
    return 1.0 / (1.0 + b)


def quadratic_constants(b: np.ndarray) -> Dict[str, object]:
    """
    Exact constants of the quadratic model.

    K is reported raw (1 + min b) and capped at 1; it is None when the
    target is not strongly convex.
    """
    k_raw = 1.0 + float(np.min(b))
    k_value: Optional[float] = min(k_raw, 1.0) if k_raw > 0.0 else None
    c2 = float(np.max(np.abs(b)))
    return {
        "K": k_value,
        "K_raw": k_raw,
        "M_R": float(np.max(np.abs(1.0 + b))),
        "N_R": c2,
        "C": (0.0, c2, 0.0, 0.0),
        "p": (0, 0, 0, 0),
    }


def make_quadratic_model(d: int, b: Union[float, Sequence[float]]) -> Tuple[TargetModel, Dict[str, object]]:
    """
    Build the quadratic model and its exact constants fragment.

    Args:
        d: Dimension
        b: Diagonal of B, a scalar is broadcast to all coordinates

    Returns:
        (TargetModel, constants fragment with K, K_raw, M_R, N_R, C, p)
    """
    coeffs = np.broadcast_to(np.asarray(b, dtype=float), (d,)).copy()
    coeffs.setflags(write=False)
    fragment = quadratic_constants(coeffs)
    if fragment["K"] is None:
        logger.info(f"Quadratic model with min b = {coeffs.min()}: convexity constants absent")

    def v_eval(x):
        return 0.5 * np.sum(coeffs * x * x, axis=-1)

    def v_grad(x):
        return coeffs * x

    def v_hess_apply(x, eta):
        return coeffs * eta

    constants = SmoothnessConstants(c=fragment["C"], p=fragment["p"], k_convexity=fragment["K"])
    model = TargetModel(
        d=d, v_eval=v_eval, v_grad=v_grad, v_hess_apply=v_hess_apply,
        constants=constants, name=f"quadratic(d={d})",
    )
    return model, fragment


def zero_model(d: int) -> TargetModel:
    """V identically zero."""
    return make_quadratic_model(d, 0.0)[0]
