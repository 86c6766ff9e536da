"""
Scalar potentials H for the transition path sampling model.

H acts coordinatewise on R^ell. Each entry supplies H' through H'''' so
that phi = |grad H|^2 - Laplacian H has a gradient and a Hessian.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np


@dataclass(frozen=True)
class ScalarPotential:
    name: str
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    d3: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d4: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def phi(self, u: np.ndarray) -> np.ndarray:
        """phi summed over the last (ambient) axis."""
        h1 = self.d1(u)
        return np.sum(h1 * h1 - self.d2(u), axis=-1)

    def phi_grad(self, u: np.ndarray) -> np.ndarray:
        return 2.0 * self.d1(u) * self.d2(u) - self.d3(u)

    def phi_hess_diag(self, u: np.ndarray) -> np.ndarray:
        h2 = self.d2(u)
        return 2.0 * h2 * h2 + 2.0 * self.d1(u) * self.d3(u) - self.d4(u)


def _const(value: float):
    return lambda u: np.full_like(u, value, dtype=float)


POTENTIALS: Dict[str, ScalarPotential] = {
    # H(u) = (u^2 - 1)^2 / 4
    "double_well": ScalarPotential(
        "double_well",
        d1=lambda u: u ** 3 - u,
        d2=lambda u: 3.0 * u * u - 1.0,
        d3=lambda u: 6.0 * u,
        d4=_const(6.0),
    ),
    # H(u) = u, phi = 1
    "linear": ScalarPotential("linear", d1=_const(1.0), d2=_const(0.0), d3=_const(0.0), d4=_const(0.0)),
    "zero": ScalarPotential("zero", d1=_const(0.0), d2=_const(0.0), d3=_const(0.0), d4=_const(0.0)),
    # H(u) = u^2 / 2, phi = u^2 - 1
    "harmonic": ScalarPotential("harmonic", d1=lambda u: np.asarray(u, dtype=float) * 1.0,
                                d2=_const(1.0), d3=_const(0.0), d4=_const(0.0)),
}


def get_potential(name: str) -> ScalarPotential:
    try:
        return POTENTIALS[name]
    except KeyError:
        raise ValueError(f"Unknown potential {name!r}; available: {sorted(POTENTIALS)}") from None
