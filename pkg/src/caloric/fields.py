"""Evaluable caloric fields, a catalogue of entire solutions, and a
finite-difference heat residual oracle.

Every field evaluates on ``t`` of shape ``S`` and ``x`` of shape ``S + (n,)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import MalformedSpec, OutsideValidity
from .kernel import DerivativeOrder, SpacetimePoint, kernel_matrix

# points per chunk times number of poles per group, bounds memory of kernel_matrix
_CHUNK_ENTRIES = 2_000_000


def _flatten(t, x, n):
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != n:
        raise ValueError(f"x must have trailing axis of length n={n}, got shape {x.shape}")
    shape = x.shape[:-1]
    t = np.broadcast_to(t, shape)
    return t.reshape(-1), x.reshape(-1, n), shape


class HeatField:
    """A real caloric function on its validity set.

    Subclasses implement ``_value``, ``_gradient`` and ``_time_derivative``
    on flat arrays; ``_invalid`` marks points outside the validity set.
    """

    n: int

    def value(self, t, x):
        tf, xf, shape = _flatten(t, x, self.n)
        out = self._value(tf, xf).reshape(shape)
        return out[()] if out.ndim == 0 else out

    __call__ = value

    def gradient(self, t, x):
        tf, xf, shape = _flatten(t, x, self.n)
        return self._gradient(tf, xf).reshape(shape + (self.n,))

    def time_derivative(self, t, x):
        tf, xf, shape = _flatten(t, x, self.n)
        out = self._time_derivative(tf, xf).reshape(shape)
        return out[()] if out.ndim == 0 else out

    def is_valid(self, t, x):
        tf, xf, shape = _flatten(t, x, self.n)
        out = ~self._invalid(tf, xf).reshape(shape)
        return out[()] if out.ndim == 0 else out

    def _invalid(self, t, x):
        return np.zeros(t.shape, dtype=bool)

    def __add__(self, other):
        return SumField([self, other])

    def __neg__(self):
        return SumField([self], [-1.0])

    def __sub__(self, other):
        return SumField([self, other], [1.0, -1.0])

    def scaled(self, c: float) -> "HeatField":
        return SumField([self], [float(c)])


class Constant(HeatField):
    def __init__(self, c: float, n: int = 1):
        self.c = float(c)
        self.n = int(n)

    def _value(self, t, x):
        return np.full(t.shape, self.c)

    def _gradient(self, t, x):
        return np.zeros(x.shape)

    def _time_derivative(self, t, x):
        return np.zeros(t.shape)

    def to_json(self):
        return {"type": "constant", "value": self.c, "n": self.n}


class Exponential(HeatField):
    """exp(<k, x> + |k|^2 t)."""

    def __init__(self, k):
        self.k = np.atleast_1d(np.asarray(k, dtype=float))
        self.n = self.k.size

    def _value(self, t, x):
        return np.exp(x @ self.k + float(self.k @ self.k) * t)

    def _gradient(self, t, x):
        return self._value(t, x)[:, None] * self.k

    def _time_derivative(self, t, x):
        return float(self.k @ self.k) * self._value(t, x)

    def to_json(self):
        return {"type": "exponential", "k": self.k.tolist()}


class Trig(HeatField):
    """exp(-|k|^2 t) cos(<k, x>) or the sine variant."""

    def __init__(self, k, phase: str = "cos"):
        if phase not in ("cos", "sin"):
            raise MalformedSpec(f"trig phase must be 'cos' or 'sin', got {phase!r}")
        self.k = np.atleast_1d(np.asarray(k, dtype=float))
        self.n = self.k.size
        self.phase = phase

    def _parts(self, t, x):
        damp = np.exp(-float(self.k @ self.k) * t)
        arg = x @ self.k
        if self.phase == "cos":
            return damp * np.cos(arg), -damp * np.sin(arg)
        return damp * np.sin(arg), damp * np.cos(arg)

    def _value(self, t, x):
        return self._parts(t, x)[0]

    def _gradient(self, t, x):
        return self._parts(t, x)[1][:, None] * self.k

    def _time_derivative(self, t, x):
        return -float(self.k @ self.k) * self._value(t, x)

    def to_json(self):
        return {"type": "trig", "k": self.k.tolist(), "phase": self.phase}


def heat_polynomial_1d(d: int, x, t):
    """v_d(x, t) = sum over 0 <= 2m <= d of d! / (m! (d-2m)!) x^(d-2m) t^m."""
    if d < 0:
        return np.zeros(np.broadcast(x, t).shape)
    out = 0.0
    for m in range(d // 2 + 1):
        c = math.factorial(d) // (math.factorial(m) * math.factorial(d - 2 * m))
        out = out + c * x ** (d - 2 * m) * t ** m
    return out + np.zeros(np.broadcast(x, t).shape)


class HeatPolynomial(HeatField):
    """Product of one-dimensional heat polynomials, one degree per space axis.

    For n = 1 and degree d this is v_d(x, t); products over separate axes stay
    caloric because each factor is.
    """

    def __init__(self, degree):
        self.degrees = tuple(int(d) for d in np.atleast_1d(degree))
        if any(d < 0 for d in self.degrees):
            raise MalformedSpec("heat polynomial degrees must be nonnegative")
        self.n = len(self.degrees)

    def _factors(self, t, x, shift=None):
        return [heat_polynomial_1d(d - (shift[i] if shift else 0), x[:, i], t)
                for i, d in enumerate(self.degrees)]

    def _value(self, t, x):
        return np.prod(self._factors(t, x), axis=0)

    def _gradient(self, t, x):
        f = self._factors(t, x)
        out = np.empty(x.shape)
        for i, d in enumerate(self.degrees):
            g = d * heat_polynomial_1d(d - 1, x[:, i], t)
            others = [f[k] for k in range(self.n) if k != i]
            out[:, i] = g * (np.prod(others, axis=0) if others else 1.0)
        return out

    def _time_derivative(self, t, x):
        f = self._factors(t, x)
        out = np.zeros(t.shape)
        for i, d in enumerate(self.degrees):
            g = d * (d - 1) * heat_polynomial_1d(d - 2, x[:, i], t)
            others = [f[k] for k in range(self.n) if k != i]
            out = out + g * (np.prod(others, axis=0) if others else 1.0)
        return out

    def to_json(self):
        return {"type": "heat_polynomial", "degree": list(self.degrees)}


class SumField(HeatField):
    """Linear combination of fields sharing the same dimension."""

    def __init__(self, fields: Sequence[HeatField], weights=None):
        fields = list(fields)
        if not fields:
            raise MalformedSpec("sum field needs at least one term")
        ns = {f.n for f in fields}
        if len(ns) != 1:
            raise MalformedSpec(f"sum of fields with mixed dimensions {sorted(ns)}")
        self.fields = fields
        self.weights = [1.0] * len(fields) if weights is None else [float(w) for w in weights]
        if len(self.weights) != len(fields):
            raise MalformedSpec("sum field needs one weight per term")
        self.n = fields[0].n

    def _value(self, t, x):
        return sum(w * f._value(t, x) for w, f in zip(self.weights, self.fields))

    def _gradient(self, t, x):
        return sum(w * f._gradient(t, x) for w, f in zip(self.weights, self.fields))

    def _time_derivative(self, t, x):
        return sum(w * f._time_derivative(t, x) for w, f in zip(self.weights, self.fields))

    def _invalid(self, t, x):
        out = np.zeros(t.shape, dtype=bool)
        for f in self.fields:
            out |= f._invalid(t, x)
        return out

    def to_json(self):
        return {"type": "sum",
                "terms": [f.to_json() for f in self.fields],
                "weights": list(self.weights)}


class ShiftedField(HeatField):
    """value(t, x) = base(t - shift_t, x - shift_x)."""

    def __init__(self, base: HeatField, shift):
        self.base = base
        self.shift = np.asarray(shift, dtype=float).reshape(-1)
        self.n = base.n
        if self.shift.size != self.n + 1:
            raise MalformedSpec("shift must have n + 1 entries (t first)")

    def _move(self, t, x):
        return t - self.shift[0], x - self.shift[1:]

    def _value(self, t, x):
        return self.base._value(*self._move(t, x))

    def _gradient(self, t, x):
        return self.base._gradient(*self._move(t, x))

    def _time_derivative(self, t, x):
        return self.base._time_derivative(*self._move(t, x))

    def _invalid(self, t, x):
        return self.base._invalid(*self._move(t, x))

    def to_json(self):
        return {"type": "shifted", "base": self.base.to_json(), "shift": self.shift.tolist()}


@dataclass(frozen=True)
class PoleTerm:
    pole: SpacetimePoint
    coeff: float
    order: DerivativeOrder

    def to_json(self):
        return {"pole": self.pole.to_json(), "coeff": float(self.coeff),
                "j": self.order.j, "alpha": list(self.order.alpha)}

    @classmethod
    def from_json(cls, doc):
        pole = SpacetimePoint.from_json(doc["pole"])
        alpha = doc.get("alpha", [0] * pole.n)
        return cls(pole, float(doc["coeff"]), DerivativeOrder(doc.get("j", 0), alpha))


class RationalHeatSolution(HeatField):
    """Finite sum of coefficient-weighted heat-kernel derivatives at poles.

    Valid everywhere except at the pole points themselves.
    """

    def __init__(self, n: int, terms: Sequence[PoleTerm] = ()):
        self.n = int(n)
        self.terms = list(terms)
        for term in self.terms:
            if term.pole.n != self.n or len(term.order.alpha) != self.n:
                raise MalformedSpec("pole term dimension does not match n")
        self._groups = {}
        for idx, term in enumerate(self.terms):
            self._groups.setdefault(term.order, []).append(idx)
        self._pole_t = np.array([term.pole.t for term in self.terms])
        self._pole_x = np.array([term.pole.x for term in self.terms]).reshape(-1, self.n)
        self._coeff = np.array([term.coeff for term in self.terms])

    @classmethod
    def from_arrays(cls, pole_t, pole_x, coeffs, orders=None):
        pole_x = np.asarray(pole_x, dtype=float)
        n = pole_x.shape[1]
        if orders is None:
            orders = [DerivativeOrder.zero(n)] * len(coeffs)
        terms = [PoleTerm(SpacetimePoint(pt, px), float(c), o)
                 for pt, px, c, o in zip(pole_t, pole_x, coeffs, orders)]
        return cls(n, terms)

    def __len__(self):
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return self._coeff.copy()

    @property
    def poles(self) -> np.ndarray:
        return np.column_stack([self._pole_t, self._pole_x]) if self.terms else np.zeros((0, self.n + 1))

    def _sum(self, t, x, dj=0, dalpha=None):
        out = np.zeros(t.shape)
        if not self.terms or t.size == 0:
            return out
        for order, idx in self._groups.items():
            idx = np.asarray(idx)
            alpha = order.alpha if dalpha is None else tuple(a + b for a, b in zip(order.alpha, dalpha))
            shifted = DerivativeOrder(order.j + dj, alpha)
            step = max(1, _CHUNK_ENTRIES // idx.size)
            for s in range(0, t.size, step):
                block = kernel_matrix(t[s:s + step], x[s:s + step],
                                      self._pole_t[idx], self._pole_x[idx], shifted)
                out[s:s + step] += block @ self._coeff[idx]
        return out

    def _value(self, t, x):
        return self._sum(t, x)

    def _gradient(self, t, x):
        out = np.empty(x.shape)
        for i in range(self.n):
            e = [0] * self.n
            e[i] = 1
            out[:, i] = self._sum(t, x, dalpha=e)
        return out

    def _time_derivative(self, t, x):
        return self._sum(t, x, dj=1)

    def _invalid(self, t, x):
        out = np.zeros(t.shape, dtype=bool)
        for pt, px in zip(self._pole_t, self._pole_x):
            out |= (t == pt) & np.all(x == px, axis=-1)
        return out

    def to_json(self):
        return {"n": self.n, "terms": [term.to_json() for term in self.terms]}

    @classmethod
    def from_json(cls, doc):
        try:
            return cls(int(doc["n"]), [PoleTerm.from_json(d) for d in doc["terms"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedSpec(f"bad rational solution document: {exc}") from exc


def kernel_pole(pole, coeff: float = 1.0, order: DerivativeOrder | None = None) -> RationalHeatSolution:
    pole = pole if isinstance(pole, SpacetimePoint) else SpacetimePoint(pole[0], pole[1:])
    order = order or DerivativeOrder.zero(pole.n)
    return RationalHeatSolution(pole.n, [PoleTerm(pole, float(coeff), order)])


def make_field(spec: dict) -> HeatField:
    """Build a field from its JSON description.

    Recognised ``type`` values: ``kernel``, ``rational``, ``exponential``,
    ``trig``, ``heat_polynomial``, ``constant``, ``sum``, ``shifted``.
    """
    if not isinstance(spec, dict):
        raise MalformedSpec(f"field spec must be an object, got {type(spec).__name__}")
    kind = spec.get("type")
    if kind is None and "terms" in spec and "n" in spec:
        kind = "rational"
    try:
        if kind == "kernel":
            pole = SpacetimePoint.from_json(spec["pole"])
            alpha = spec.get("alpha", [0] * pole.n)
            return kernel_pole(pole, spec.get("coeff", 1.0), DerivativeOrder(spec.get("j", 0), alpha))
        if kind == "rational":
            return RationalHeatSolution.from_json(spec)
        if kind == "exponential":
            return Exponential(spec["k"])
        if kind == "trig":
            return Trig(spec["k"], spec.get("phase", "cos"))
        if kind == "heat_polynomial":
            return HeatPolynomial(spec["degree"])
        if kind == "constant":
            return Constant(spec["value"], spec.get("n", 1))
        if kind == "sum":
            return SumField([make_field(s) for s in spec["terms"]], spec.get("weights"))
        if kind == "shifted":
            return ShiftedField(make_field(spec["base"]), spec["shift"])
    except MalformedSpec:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedSpec(f"bad {kind!r} field spec: {exc!r}") from exc
    raise MalformedSpec(f"unknown field type {kind!r}")


def _stencil_check(f: HeatField, pts_t, pts_x):
    ok = f.is_valid(pts_t, pts_x)
    if not np.all(ok):
        raise OutsideValidity("finite-difference stencil leaves the validity set of the field")


def heat_residual_fd(f: HeatField, t, x, h: float = 1e-3):
    """Central-difference estimate of d_t f - Laplacian f with step ``h``."""
    if h <= 0:
        raise ValueError("step h must be positive")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    n = f.n
    t = np.broadcast_to(t, x.shape[:-1])
    steps = [np.zeros(n)] + [h * e for e in np.eye(n)] + [-h * e for e in np.eye(n)]
    for e in steps:
        _stencil_check(f, t, x + e)
    _stencil_check(f, t + h, x)
    _stencil_check(f, t - h, x)
    ft = (f.value(t + h, x) - f.value(t - h, x)) / (2 * h)
    centre = f.value(t, x)
    lap = 0.0
    for e in np.eye(n) * h:
        lap = lap + (f.value(t, x + e) - 2 * centre + f.value(t, x - e)) / (h * h)
    return ft - lap


def gradient_fd(f, t, x, h: float = 1e-4):
    x = np.asarray(x, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
    out = np.empty(x.shape)
    for i in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[i] = h
        out[..., i] = (f.value(t, x + e) - f.value(t, x - e)) / (2 * h)
    return out


def time_derivative_fd(f, t, x, h: float = 1e-4):
    x = np.asarray(x, dtype=float)
    t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
    return (f.value(t + h, x) - f.value(t - h, x)) / (2 * h)


@dataclass
class Catalogue:
    """Named closed-form entire solutions used by tests and experiment configs."""

    n: int = 1
    members: dict = field(default_factory=dict)

    @classmethod
    def default(cls, n: int = 1) -> "Catalogue":
        e = np.eye(n)
        m = {
            "constant": Constant(1.5, n),
            "exp": Exponential(0.7 * e[0]),
            "trig_cos": Trig(1.3 * e[0], "cos"),
            "trig_sin": Trig(0.9 * e[-1], "sin"),
            "heat_poly_2": HeatPolynomial([2] + [0] * (n - 1)),
            "heat_poly_4": HeatPolynomial([4] + [0] * (n - 1)),
        }
        if n >= 2:
            m["heat_poly_11"] = HeatPolynomial([1, 1] + [0] * (n - 2))
        return cls(n, m)
