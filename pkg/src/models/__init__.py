# Target models package
from .quadratic import exact_quadratic_variance, make_quadratic_model, zero_model
from .schauder import SchauderBasis, bridge_covariance, schauder_transform
from .tps import TPSModel, alpha_norm_space, make_tps_model

__all__ = [
    "exact_quadratic_variance", "make_quadratic_model", "zero_model",
    "SchauderBasis", "bridge_covariance", "schauder_transform",
    "TPSModel", "alpha_norm_space", "make_tps_model",
]
