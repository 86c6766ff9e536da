"""
Wiener-Levy (Schauder) expansion on the dyadic grid k 2^-m, k = 0..2^m.

Coefficients are ordered lexicographically by (level n, shift k, axis i),
so level n occupies a contiguous block of 2^n * ell entries. Both
directions work level by level with midpoint displacement in O(d).
"""

from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from ..sampling.core_mh import DimensionMismatchError


@dataclass(frozen=True)
class SchauderBasis:
    m: int
    ell: int = 1
    a: Tuple[float, ...] = ()
    b: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.m < 1 or self.ell < 1:
            raise ValueError("Need m >= 1 and ell >= 1")
        a = tuple(float(v) for v in self.a) or (0.0,) * self.ell
        b = tuple(float(v) for v in self.b) or (0.0,) * self.ell
        if len(a) != self.ell or len(b) != self.ell:
            raise DimensionMismatchError(f"Endpoints must have {self.ell} components")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def d(self) -> int:
        return (2 ** self.m - 1) * self.ell

    @property
    def n_nodes(self) -> int:
        return 2 ** self.m + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_nodes) / 2 ** self.m

    def levels(self) -> Iterator[Tuple[int, slice, int, float]]:
        """(level, coefficient slice, grid stride, midpoint scale) from coarse to fine."""
        offset = 0
        for n in range(self.m):
            size = 2 ** n * self.ell
            # basis peak 2^{-n/2} g(1/2)
            yield n, slice(offset, offset + size), 2 ** (self.m - n), 2.0 ** (-n / 2.0) / 2.0
            offset += size

    def level_index(self) -> np.ndarray:
        """Level n of every coefficient."""
        return np.concatenate([np.full(2 ** n * self.ell, n) for n in range(self.m)])

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.d:
            raise DimensionMismatchError(f"Coefficient vector has shape {x.shape}, expected last axis {self.d}")
        return x

    def _displace(self, x: np.ndarray, path: np.ndarray) -> np.ndarray:
        batch = x.shape[:-1]
        for n, block, stride, scale in self.levels():
            coeffs = x[..., block].reshape(batch + (2 ** n, self.ell))
            left = path[..., 0:-1:stride, :]
            right = path[..., stride::stride, :]
            path[..., stride // 2::stride, :] = 0.5 * (left + right) + scale * coeffs
        return path

    def to_path(self, x) -> np.ndarray:
        """Path values at all dyadic nodes, shape (..., 2^m + 1, ell), endpoints included."""
        x = self._check(x)
        path = np.zeros(x.shape[:-1] + (self.n_nodes, self.ell))
        path[..., 0, :] = self.a
        path[..., -1, :] = self.b
        return self._displace(x, path)

    def linear_path(self, xi) -> np.ndarray:
        """Linear part of to_path (zero endpoints)."""
        xi = self._check(xi)
        return self._displace(xi, np.zeros(xi.shape[:-1] + (self.n_nodes, self.ell)))

    def to_coeffs(self, path) -> np.ndarray:
        """
        Invert to_path.

        Accepts either the full path (2^m + 1 nodes) or only the interior
        nodes (2^m - 1), in which case the endpoints a and b are filled in.
        """
        path = np.asarray(path, dtype=float)
        if path.ndim == 1 and self.ell == 1:
            path = path[:, None]
        if path.ndim < 2 or path.shape[-1] != self.ell:
            raise DimensionMismatchError(f"Path has shape {path.shape}, expected trailing axis {self.ell}")
        nodes = path.shape[-2]
        if nodes == self.n_nodes - 2:
            full = np.empty(path.shape[:-2] + (self.n_nodes, self.ell))
            full[..., 0, :] = self.a
            full[..., -1, :] = self.b
            full[..., 1:-1, :] = path
            path = full
        elif nodes != self.n_nodes:
            raise DimensionMismatchError(f"Path has {nodes} nodes, expected {self.n_nodes} or {self.n_nodes - 2}")

        batch = path.shape[:-2]
        x = np.empty(batch + (self.d,))
        for n, block, stride, scale in self.levels():
            average = 0.5 * (path[..., 0:-1:stride, :] + path[..., stride::stride, :])
            mids = path[..., stride // 2::stride, :]
            x[..., block] = ((mids - average) / scale).reshape(batch + (2 ** n * self.ell,))
        return x

    def adjoint(self, path_cotangent) -> np.ndarray:
        """
        Transpose of linear_path.

        Endpoint entries of the cotangent are ignored since the endpoints
        do not depend on the coefficients.
        """
        ybar = np.array(path_cotangent, dtype=float, copy=True)
        if ybar.ndim < 2 or ybar.shape[-2:] != (self.n_nodes, self.ell):
            raise DimensionMismatchError(f"Cotangent has shape {ybar.shape}, expected (..., {self.n_nodes}, {self.ell})")
        batch = ybar.shape[:-2]
        xbar = np.empty(batch + (self.d,))
        for n, block, stride, scale in reversed(list(self.levels())):
            mids = ybar[..., stride // 2::stride, :]
            xbar[..., block] = (scale * mids).reshape(batch + (2 ** n * self.ell,))
            ybar[..., 0:-1:stride, :] += 0.5 * mids
            ybar[..., stride::stride, :] += 0.5 * mids
        return xbar

    def dense_matrix(self) -> np.ndarray:
        """Interior nodes as a (2^m - 1) ell x d matrix; small m only."""
        basis = np.eye(self.d)
        paths = self.linear_path(basis)[:, 1:-1, :].reshape(self.d, -1)
        return paths.T


def schauder_transform(basis: SchauderBasis, values, direction: str = "to_path") -> np.ndarray:
    """Dispatch to to_path or to_coeffs."""
    if direction == "to_path":
        return basis.to_path(values)
    if direction == "to_coeffs":
        return basis.to_coeffs(values)
    raise ValueError(f"Unknown direction: {direction!r}")


def bridge_covariance(times: np.ndarray) -> np.ndarray:
    """Brownian bridge covariance min(s,t) - s t."""
    s = np.asarray(times, dtype=float)
    return np.minimum.outer(s, s) - np.outer(s, s)
