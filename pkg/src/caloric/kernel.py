"""Heat kernel and its mixed partial derivatives in n space dimensions.

All functions take a time array ``t`` of shape ``S`` and a space array ``x``
of shape ``S + (n,)`` and broadcast over ``S``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import hermite as _herm

from .errors import OrderTooHigh

J_MAX = 2
A_MAX = 4

# exp(-700) is still a normal double; below that the kernel is flushed to 0.
LOG_FLOOR = -700.0


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "x", tuple(float(v) for v in np.atleast_1d(self.x)))
        if len(self.x) < 1:
            raise ValueError("space dimension must be at least 1")

    @property
    def n(self) -> int:
        return len(self.x)

    def as_array(self) -> np.ndarray:
        return np.array((self.t,) + self.x)

    def to_json(self) -> dict:
        return {"t": self.t, "x": list(self.x)}

    @classmethod
    def from_json(cls, doc) -> "SpacetimePoint":
        return cls(doc["t"], doc["x"])


@dataclass(frozen=True)
class DerivativeOrder:
    """Time order ``j`` and spatial multi-index ``alpha``."""

    j: int = 0
    alpha: tuple = (0,)

    def __post_init__(self):
        object.__setattr__(self, "j", int(self.j))
        object.__setattr__(self, "alpha", tuple(int(a) for a in self.alpha))
        if self.j < 0 or any(a < 0 for a in self.alpha):
            raise ValueError("derivative orders must be nonnegative")

    @classmethod
    def zero(cls, n: int) -> "DerivativeOrder":
        return cls(0, (0,) * n)

    @property
    def total_space(self) -> int:
        return sum(self.alpha)

    def check(self, j_max: int = J_MAX, a_max: int = A_MAX) -> None:
        if self.j > j_max or self.total_space > a_max:
            raise OrderTooHigh(
                f"order (j={self.j}, |alpha|={self.total_space}) exceeds ceilings "
                f"(J_max={j_max}, A_max={a_max})"
            )


def _as_tx(t, x):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise ValueError("x must carry a trailing space axis of length n")
    t = np.broadcast_to(t, x.shape[:-1])
    return t, x


@lru_cache(maxsize=None)
def _hermite_coeffs(k: int) -> np.ndarray:
    c = np.zeros(k + 1)
    c[k] = 1.0
    return c


@lru_cache(maxsize=None)
def _laplacian_power(n: int, j: int) -> tuple:
    """Expansion of the j-th power of the Laplacian as (multinomial, 2*beta) pairs."""
    terms = []
    for beta in itertools.product(range(j + 1), repeat=n):
        if sum(beta) != j:
            continue
        coef = math.factorial(j)
        for b in beta:
            coef //= math.factorial(b)
        terms.append((coef, tuple(2 * b for b in beta)))
    return tuple(terms)


def _space_derivative(t, x, alpha) -> np.ndarray:
    # d^k/dy^k exp(-y^2/4t) = (-1)^k H_k(z) (2 sqrt t)^(-k) exp(-z^2), z = y / (2 sqrt t)
    n = x.shape[-1]
    out = np.zeros(t.shape)
    pos = t > 0
    if not np.any(pos):
        return out
    tp = t[pos]
    xp = x[pos]
    s = 2.0 * np.sqrt(tp)
    order = sum(alpha)
    log_base = -0.5 * n * np.log(4.0 * np.pi * tp) - np.sum(xp * xp, axis=-1) / (4.0 * tp)
    log_base = log_base - order * np.log(s)
    alive = log_base >= LOG_FLOOR
    vals = np.zeros(tp.shape)
    if np.any(alive):
        v = np.exp(log_base[alive])
        for i, k in enumerate(alpha):
            if k:
                z = xp[alive, i] / s[alive]
                v = v * ((-1) ** k) * _herm.hermval(z, _hermite_coeffs(k))
        vals[alive] = v
    out[pos] = vals
    return out


def _derivative(t, x, j: int, alpha) -> np.ndarray:
    # time derivatives via d/dt Phi = Laplacian Phi for t > 0
    n = x.shape[-1]
    alpha = tuple(alpha)
    if len(alpha) != n:
        raise ValueError(f"multi-index length {len(alpha)} does not match n={n}")
    if j == 0:
        return _space_derivative(t, x, alpha)
    out = np.zeros(t.shape)
    for coef, twobeta in _laplacian_power(n, j):
        out = out + coef * _space_derivative(t, x, tuple(a + b for a, b in zip(alpha, twobeta)))
    return out


def phi(t, x):
    """Heat kernel (4 pi t)^(-n/2) exp(-|x|^2 / 4t), exactly 0 for t <= 0.

    Evaluated in log space; values whose logarithm falls below -700 are
    flushed to zero.
    """
    t, x = _as_tx(t, x)
    out = _space_derivative(t, x, (0,) * x.shape[-1])
    return out[()] if out.ndim == 0 else out


def phi_derivative(t, x, order: DerivativeOrder, j_max: int = J_MAX, a_max: int = A_MAX):
    """Mixed partial d_t^j d_x^alpha of the heat kernel; 0 for t <= 0."""
    order.check(j_max, a_max)
    t, x = _as_tx(t, x)
    out = _derivative(t, x, order.j, order.alpha)
    return out[()] if out.ndim == 0 else out


def kernel_matrix(t, x, pole_t, pole_x, order: DerivativeOrder | None = None) -> np.ndarray:
    """Matrix M[m, k] = d^order Phi(t_m - pole_t_k, x_m - pole_x_k).

    ``t`` has shape (m,), ``x`` shape (m, n); poles have shapes (N,), (N, n).
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(t.size, -1)
    pole_t = np.asarray(pole_t, dtype=float).reshape(-1)
    pole_x = np.asarray(pole_x, dtype=float).reshape(pole_t.size, -1)
    n = x.shape[1]
    if order is None:
        order = DerivativeOrder.zero(n)
    dt = t[:, None] - pole_t[None, :]
    dx = x[:, None, :] - pole_x[None, :, :]
    return _derivative(dt, dx, order.j, order.alpha)
