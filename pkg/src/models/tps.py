"""
Transition path sampling model over Schauder coefficients.

The Gaussian reference in coefficients is the standard normal; the
perturbation is the trapezoidal quadrature

    V_d(x) = 2^{-m-1} [ phi(y_0)/2 + sum_k phi(y_k) + phi(y_end)/2 ],

with y the polygonal path of x and phi = |grad H|^2 - Laplacian H.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from ..config.settings import TPS_DEFAULT_ALPHA, TPS_DEFAULT_POTENTIAL, TPS_DEFAULT_Q
from ..sampling.core_mh import MissingDerivativeError, NormSpace, TargetModel
from ..utils.logger import get_logger
from .potentials import ScalarPotential, get_potential
from .schauder import SchauderBasis

logger = get_logger(__name__)


def alpha_norm_space(m: int, ell: int = 1, alpha: float = TPS_DEFAULT_ALPHA) -> NormSpace:
    """Level weights 2^{-2 alpha n} on the coefficient vector."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    levels = SchauderBasis(m, ell).level_index()
    return NormSpace(2.0 ** (-2.0 * alpha * levels))


@dataclass
class TPSModel:
    """
    Discretized path-space target for a diffusion bridge from a to b.

    Args:
        m: Dyadic level; d = (2^m - 1) * ell
        ell: Dimension of the diffusion
        a: Start point (defaults to the origin)
        b: End point (defaults to the origin)
        potential: Registry name or a ScalarPotential
        alpha: Exponent of the alpha-norm used as minus norm
        q: L^q exponent bounding the dimension-free alpha window
    """

    m: int
    ell: int = 1
    a: Sequence[float] = ()
    b: Sequence[float] = ()
    potential: Union[str, ScalarPotential] = TPS_DEFAULT_POTENTIAL
    alpha: float = TPS_DEFAULT_ALPHA
    q: float = TPS_DEFAULT_Q
    basis: SchauderBasis = field(init=False)

    def __post_init__(self):
        self.basis = SchauderBasis(self.m, self.ell, tuple(self.a), tuple(self.b))
        if isinstance(self.potential, str):
            self.potential = get_potential(self.potential)
        if self.potential.d3 is None:
            raise MissingDerivativeError(f"Potential {self.potential.name} needs H''' for grad phi")
        lower, upper = 0.5, 0.5 + 1.0 / self.q
        if not (lower < self.alpha < upper):
            logger.warning(
                f"⚠️  alpha = {self.alpha} is outside ({lower}, {upper:.4f}); "
                "smoothness constants are not dimension-free there"
            )
        weights = np.ones(self.basis.n_nodes)
        weights[0] = weights[-1] = 0.5
        self._quadrature = 2.0 ** (-self.m - 1) * weights

    @property
    def d(self) -> int:
        return self.basis.d

    def to_path(self, x) -> np.ndarray:
        return self.basis.to_path(x)

    def to_coeffs(self, path) -> np.ndarray:
        return self.basis.to_coeffs(path)

    def v_eval(self, x) -> np.ndarray:
        path = self.basis.to_path(x)
        return np.sum(self._quadrature * self.potential.phi(path), axis=-1)

    def path_adjoint(self, path_weights) -> np.ndarray:
        """Pull node-wise cotangents back to coefficients."""
        return self.basis.adjoint(path_weights)

    def v_grad(self, x) -> np.ndarray:
        path = self.basis.to_path(x)
        cotangent = self._quadrature[:, None] * self.potential.phi_grad(path)
        return self.path_adjoint(cotangent)

    def v_hess_apply(self, x, xi) -> np.ndarray:
        if self.potential.d4 is None:
            raise MissingDerivativeError(f"Potential {self.potential.name} has no fourth derivative")
        path = self.basis.to_path(x)
        eta = self.basis.linear_path(np.broadcast_to(xi, np.broadcast_shapes(np.shape(x), np.shape(xi))))
        cotangent = self._quadrature[:, None] * self.potential.phi_hess_diag(path) * eta
        return self.path_adjoint(cotangent)

    def directional_derivative_formula(self, x, xi) -> np.ndarray:
        """d/dt V_d(x + t xi) at t=0 as the node-wise quadrature of D phi(y_k)[eta_k]."""
        path = self.basis.to_path(x)
        eta = self.basis.linear_path(xi)
        return np.sum(self._quadrature[:, None] * self.potential.phi_grad(path) * eta, axis=(-2, -1))

    def norm_space(self) -> NormSpace:
        return alpha_norm_space(self.m, self.ell, self.alpha)

    def target(self) -> TargetModel:
        hess = self.v_hess_apply if self.potential.d4 is not None else None
        return TargetModel(
            d=self.d, v_eval=self.v_eval, v_grad=self.v_grad, v_hess_apply=hess,
            constants=None, norm_space=self.norm_space(),
            name=f"tps(m={self.m}, ell={self.ell}, {self.potential.name})",
        )

    def sample_bridge_path(self, rng: np.random.Generator) -> np.ndarray:
        """Draw coefficients from the Gaussian reference and return the path."""
        return self.basis.to_path(rng.standard_normal(self.d))


def make_tps_model(m: int, ell: int = 1, a: Sequence[float] = (), b: Sequence[float] = (),
                   potential: Union[str, ScalarPotential] = TPS_DEFAULT_POTENTIAL,
                   alpha: float = TPS_DEFAULT_ALPHA, q: Optional[float] = None) -> TargetModel:
    tps = TPSModel(m=m, ell=ell, a=a, b=b, potential=potential, alpha=alpha,
                   q=TPS_DEFAULT_Q if q is None else q)
    logger.debug(f"Built TPS model with d = {tps.d}")
    return tps.target()
