"""Single-hidden-layer sigmoid networks.

A network with ``r`` hidden units on ``d`` inputs computes

    f(x) = alpha0 + sum_j alpha[j] * sigmoid(gamma[j] @ x + gamma0[j])

Parameters live in an immutable :class:`Theta`; data in :class:`Dataset`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from ._kernel import abs_slope
from .errors import InvalidInputError, UnsupportedDimensionError

# sigmoid'(u) integrates to less than 1e-17 outside |u| > 40
_TAIL = 40.0


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise InvalidInputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Theta:
    """Network parameters.

    ``alpha`` and ``gamma0`` have shape ``(r,)``; ``gamma`` has shape ``(r, d)``.
    The same container is used for gradients.
    """

    alpha0: float
    alpha: np.ndarray
    gamma0: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        alpha = _frozen(self.alpha, 1, "alpha")
        gamma0 = _frozen(self.gamma0, 1, "gamma0")
        gamma = np.array(self.gamma, dtype=float)
        if gamma.ndim == 1 and gamma.shape[0] == alpha.shape[0]:
            gamma = gamma[:, None]
        gamma = _frozen(gamma, 2, "gamma")
        r = alpha.shape[0]
        if r < 1:
            raise InvalidInputError("need at least one hidden unit")
        if gamma0.shape[0] != r or gamma.shape[0] != r:
            raise InvalidInputError(
                f"hidden-unit counts disagree: alpha {r}, gamma0 {gamma0.shape[0]}, gamma {gamma.shape[0]}"
            )
        if gamma.shape[1] < 1:
            raise InvalidInputError("input dimension d must be >= 1")
        if not math.isfinite(float(self.alpha0)):
            raise InvalidInputError("alpha0 must be finite")
        object.__setattr__(self, "alpha0", float(self.alpha0))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma0", gamma0)
        object.__setattr__(self, "gamma", gamma)

    @property
    def r(self) -> int:
        return self.alpha.shape[0]

    @property
    def d(self) -> int:
        return self.gamma.shape[1]

    @property
    def n_params(self) -> int:
        return self.r * (self.d + 2) + 1

    def output_l1(self) -> float:
        """sum_{j=0}^r |alpha_j|, including the output bias."""
        return abs(self.alpha0) + float(np.abs(self.alpha).sum())

    def hidden_l1(self) -> float:
        """max_j (|gamma0_j| + sum_i |gamma_ij|)."""
        return float(np.max(np.abs(self.gamma0) + np.abs(self.gamma).sum(axis=1)))

    def to_vector(self) -> np.ndarray:
        """Flatten as [alpha0, alpha, gamma0, gamma (row-major)]."""
        return np.concatenate([[self.alpha0], self.alpha, self.gamma0, self.gamma.ravel()])

    @classmethod
    def from_vector(cls, vec, r: int, d: int) -> "Theta":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (r * (d + 2) + 1,):
            raise InvalidInputError(f"vector of length {vec.shape} does not fit r={r}, d={d}")
        return cls(vec[0], vec[1 : r + 1], vec[r + 1 : 2 * r + 1], vec[2 * r + 1 :].reshape(r, d))

    @classmethod
    def zeros(cls, r: int, d: int) -> "Theta":
        return cls(0.0, np.zeros(r), np.zeros(r), np.zeros((r, d)))


@dataclass(frozen=True)
class Dataset:
    """Fixed design points ``x`` (n, d), responses ``y`` (n,), optional truth values."""

    x: np.ndarray
    y: np.ndarray
    f0_values: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        x = _frozen(x, 2, "x")
        y = _frozen(self.y, 1, "y")
        n = x.shape[0]
        if n < 1:
            raise InvalidInputError("dataset must contain at least one point")
        if y.shape[0] != n:
            raise InvalidInputError(f"x has {n} points but y has {y.shape[0]}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.f0_values is not None:
            f0 = _frozen(self.f0_values, 1, "f0_values")
            if f0.shape[0] != n:
                raise InvalidInputError(f"f0_values has {f0.shape[0]} entries, expected {n}")
            object.__setattr__(self, "f0_values", f0)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]


def sigmoid(z):
    """Logistic function, overflow-free for any finite input.

    Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def _check_dims(theta: Theta, x: np.ndarray) -> np.ndarray:
    if x.shape[-1] != theta.d:
        raise InvalidInputError(f"input dimension {x.shape[-1]} does not match network dimension {theta.d}")
    return x


def hidden_activations(theta: Theta, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if theta.d == 1 else X[None, :]
    _check_dims(theta, X)
    return sigmoid(X @ theta.gamma.T + theta.gamma0)


def evaluate(theta: Theta, x) -> float:
    """Network output at a single d-dimensional point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.shape[0] != theta.d:
        raise InvalidInputError(f"point of shape {x.shape} does not match network dimension {theta.d}")
    s = sigmoid(theta.gamma @ x + theta.gamma0)
    return float(theta.alpha0 + np.dot(theta.alpha, s))


def predict(theta: Theta, X) -> np.ndarray:
    """Network outputs at the rows of ``X`` (shape (n, d), or (n,) when d = 1)."""
    S = hidden_activations(theta, X)
    return theta.alpha0 + S @ theta.alpha


def loss(theta: Theta, data: Dataset) -> float:
    """Empirical squared error n^{-1} sum (y_i - f(x_i))^2."""
    res = data.y - predict(theta, data.x)
    return float(res @ res) / data.n


def grad(theta: Theta, data: Dataset) -> Theta:
    """Exact gradient of :func:`loss` with respect to every parameter."""
    _check_dims(theta, data.x)
    S = hidden_activations(theta, data.x)
    res = theta.alpha0 + S @ theta.alpha - data.y
    c = 2.0 * res / data.n
    # dL/dz_ij = c_i * alpha_j * s_ij (1 - s_ij)
    dz = (c[:, None] * S * (1.0 - S)) * theta.alpha
    return Theta(
        alpha0=c.sum(),
        alpha=S.T @ c,
        gamma0=dz.sum(axis=0),
        gamma=dz.T @ data.x,
    )


def _as_values(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidInputError(f"{name} is empty")
    return arr


def inner_product(values_f, values_g) -> float:
    """Empirical inner product n^{-1} sum f(x_i) g(x_i)."""
    f = _as_values(values_f, "values_f")
    g = _as_values(values_g, "values_g")
    if f.shape != g.shape:
        raise InvalidInputError(f"length mismatch: {f.size} vs {g.size}")
    return float(f @ g) / f.size


def empirical_norm(values_f, values_g=None) -> float:
    """||f||_n, or ||f - g||_n when a second sequence is given."""
    f = _as_values(values_f, "values_f")
    if values_g is not None:
        g = _as_values(values_g, "values_g")
        if f.shape != g.shape:
            raise InvalidInputError(f"length mismatch: {f.size} vs {g.size}")
        f = f - g
    return math.sqrt(float(f @ f) / f.size)


def derivative(theta: Theta, x) -> np.ndarray:
    """f'(x) for a one-dimensional network, vectorised over ``x``."""
    if theta.d != 1:
        raise UnsupportedDimensionError(f"derivative only defined here for d = 1, got d = {theta.d}")
    x = np.asarray(x, dtype=float)
    g = theta.gamma[:, 0]
    s = sigmoid(np.multiply.outer(x, g) + theta.gamma0)
    return (s * (1.0 - s)) @ (theta.alpha * g)


def total_variation(theta: Theta, tail: float = _TAIL) -> float:
    """Total variation int |f'(x)| dx of a one-dimensional network.

    Integrates over the union of intervals on which some unit's
    pre-activation stays within ``[-tail, tail]``.
    """
    if theta.d != 1:
        raise UnsupportedDimensionError(f"total variation requires d = 1, got d = {theta.d}")
    g = theta.gamma[:, 0]
    active = (g != 0.0) & (theta.alpha != 0.0)
    if not np.any(active):
        return 0.0
    lo_ends = (-tail - theta.gamma0[active]) / g[active]
    hi_ends = (tail - theta.gamma0[active]) / g[active]
    lo = np.minimum(lo_ends, hi_ends)
    hi = np.maximum(lo_ends, hi_ends)
    centers = -theta.gamma0[active] / g[active]

    # merge overlapping unit windows, integrate each piece with breakpoints at unit centres
    order = np.argsort(lo)
    pieces = []
    for i in order:
        if pieces and lo[i] <= pieces[-1][1]:
            pieces[-1][1] = max(pieces[-1][1], hi[i])
        else:
            pieces.append([lo[i], hi[i]])

    args = (float(theta.r), *theta.alpha, *theta.gamma0, *g)
    total = 0.0
    for a, b in pieces:
        inside = np.sort(centers[(centers > a) & (centers < b)])
        val, _ = integrate.quad(abs_slope, a, b, args=args, points=inside if inside.size else None,
                                limit=500, epsabs=1e-12, epsrel=1e-10)
        total += val
    return total
