"""Cole-Hopf change of variables between the heat equation and the
quasilinear equation p_t = Laplacian p + c(p) |grad p|^2.

The map is parametrised by ``a`` through U'(p) = U1 exp(-int_0^p a). With
that parametrisation U''/U' = -a, so the equation carried to the heat
equation has gradient coefficient ``c = -a``; :meth:`ColeHopfMap.pde_coefficient`
returns it and the residual oracle uses it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .approx import BoxPair, riemann_approximate, sup_error
from .errors import DomainViolation, MapMismatch, OutsideValidity
from .fields import HeatField, RationalHeatSolution, SumField, _flatten

SMALL_A = 1e-8
P_MAX = 256.0


class ColeHopfMap:
    """u = U(p) with U(0) = U0 and U'(0) = U1 > 0.

    ``a`` is a float, a callable of p, or a table ``(p_nodes, a_values)``
    interpolated linearly (constant beyond the ends).
    """

    def __init__(self, a=0.0, U0: float = 0.0, U1: float = 1.0):
        if U1 <= 0:
            raise ValueError("U1 must be positive")
        self.U0 = float(U0)
        self.U1 = float(U1)
        self.table = None
        if callable(a):
            self._a_fun = a
            self.a = None
        elif isinstance(a, (tuple, list)) and len(a) == 2 and np.ndim(a[0]) == 1:
            nodes, vals = (np.asarray(v, dtype=float) for v in a)
            self.table = (nodes, vals)
            self._a_fun = lambda p: float(np.interp(p, nodes, vals))
            self.a = None
        else:
            self.a = float(a)
            self._a_fun = None
        self._range = None

    @property
    def constant(self) -> bool:
        return self.a is not None

    def __eq__(self, other):
        if not isinstance(other, ColeHopfMap):
            return NotImplemented
        if self.constant and other.constant:
            return (self.a, self.U0, self.U1) == (other.a, other.U0, other.U1)
        return self is other

    def __hash__(self):
        return hash((self.a, self.U0, self.U1)) if self.constant else id(self)

    def to_json(self):
        if self.table is not None:
            return {"a": {"p": self.table[0].tolist(), "a": self.table[1].tolist()},
                    "U0": self.U0, "U1": self.U1}
        if not self.constant:
            raise ValueError("callable coefficient maps are not serialisable")
        return {"a": self.a, "U0": self.U0, "U1": self.U1}

    @classmethod
    def from_json(cls, doc):
        a = doc.get("a", 0.0)
        if isinstance(a, dict):
            a = (a["p"], a["a"])
        return cls(a, doc.get("U0", 0.0), doc.get("U1", 1.0))

    # coefficient of the transformed equation
    def coefficient(self, p):
        if self.constant:
            return np.full(np.shape(p), self.a)[()]
        return np.vectorize(self._a_fun, otypes=[float])(p)[()]

    def pde_coefficient(self, p):
        return -self.coefficient(p)

    def _profile(self):
        """Dense solution of A' = a, U' = U1 exp(-A) from p = 0 out to +-P_MAX, cached.

        Integration stops early once U' exceeds exp(600); the range is then
        treated as unbounded on that side.
        """
        if self._range is None:
            def rhs(_, y):
                return [self._a_fun(_), self.U1 * math.exp(-y[0])]

            def blow_up(_, y):
                return y[0] + 600.0
            blow_up.terminal = True
            sides = []
            for end in (-P_MAX, P_MAX):
                sol = integrate.solve_ivp(rhs, (0.0, end), [0.0, self.U0], method="DOP853",
                                          rtol=1e-12, atol=1e-14, dense_output=True, events=blow_up)
                stopped = sol.status == 1
                reach = float(sol.t[-1])
                u_end = float(sol.y[1, -1])
                if stopped:
                    u_end = math.copysign(math.inf, end)
                sides.append((sol.sol, reach, u_end))
            self._range = tuple(sides)
        return self._range

    def _state(self, p):
        (neg, plo, _), (pos, phi_, _) = self._profile()
        p = np.asarray(p, dtype=float)
        if np.any(p < plo) or np.any(p > phi_):
            raise ValueError(f"p outside the tabulated window [{plo}, {phi_}]")
        flat = p.reshape(-1)
        out = np.empty((2, flat.size))
        m = flat < 0
        if np.any(m):
            out[:, m] = neg(flat[m])
        if np.any(~m):
            out[:, ~m] = pos(flat[~m])
        return out[0].reshape(p.shape), out[1].reshape(p.shape)

    def derivative(self, p):
        """U'(p)."""
        if self.constant:
            return self.U1 * np.exp(-self.a * np.asarray(p, dtype=float))
        return (self.U1 * np.exp(-self._state(p)[0]))[()]

    def second_derivative(self, p):
        return -self.coefficient(p) * self.derivative(p)

    def forward(self, p):
        """U(p)."""
        p = np.asarray(p, dtype=float)
        if self.constant:
            a = self.a
            if abs(a) < SMALL_A:
                out = self.U0 + self.U1 * (p - 0.5 * a * p * p)
            else:
                out = self.U0 + self.U1 * (-np.expm1(-a * p)) / a
            return out[()] if np.ndim(out) == 0 else out
        return self._state(p)[1][()]

    def _general_range(self):
        (_, plo, ulo), (_, phi_, uhi) = self._profile()
        return ulo, uhi, plo, phi_

    def domain_valid(self, u):
        """True where u lies in the open range of U."""
        u = np.asarray(u, dtype=float)
        if self.constant:
            if self.a == 0.0:
                out = np.isfinite(u)
            else:
                k = self.a / self.U1
                out = k * u < 1.0 + self.U0 * k
            return out[()] if out.ndim == 0 else out
        ulo, uhi, _, _ = self._general_range()
        out = (u > ulo) & (u < uhi)
        return out[()] if out.ndim == 0 else out

    def inverse(self, u, points=None):
        """U^{-1}(u); raises DomainViolation outside the admissible set."""
        u = np.asarray(u, dtype=float)
        ok = np.asarray(self.domain_valid(u))
        if not np.all(ok):
            bad = int(np.flatnonzero(~ok.reshape(-1))[0])
            where = None if points is None else points[bad]
            raise DomainViolation(
                f"value {u.reshape(-1)[bad]!r} outside the domain of the inverse map"
                + ("" if where is None else f" at {where}"),
                point=where, value=float(u.reshape(-1)[bad]))
        if self.constant:
            a = self.a
            z = (u - self.U0) / self.U1
            if abs(a) < SMALL_A:
                out = z + 0.5 * a * z * z
            else:
                out = -np.log1p(-a * z) / a
            return out[()] if out.ndim == 0 else out
        return np.vectorize(self._invert_one, otypes=[float])(u)[()]

    def _invert_one(self, u: float) -> float:
        _, _, lo, hi = self._general_range()
        return optimize.brentq(lambda q: float(self.forward(q)) - u, lo, hi, xtol=1e-15, rtol=1e-15,
                               maxiter=500)

    def inverse_derivative(self, u):
        """(U^{-1})'(u) = 1 / U'(U^{-1}(u))."""
        return 1.0 / self.derivative(self.inverse(u))


class BurgersField:
    """p = U^{-1}(u) for a caloric u; defined where u stays in the inverse's domain."""

    def __init__(self, heat: HeatField, chmap: ColeHopfMap):
        self.heat = heat
        self.map = chmap
        self.n = heat.n

    def _heat_values(self, t, x):
        tf, xf, shape = _flatten(t, x, self.n)
        if not np.all(self.heat.is_valid(tf, xf)):
            raise OutsideValidity("point outside the underlying heat field's validity set")
        return tf, xf, shape, self.heat.value(tf, xf)

    def value(self, t, x):
        tf, xf, shape, u = self._heat_values(t, x)
        out = np.asarray(self.map.inverse(u, np.column_stack([tf, xf]))).reshape(shape)
        return out[()] if out.ndim == 0 else out

    __call__ = value

    def gradient(self, t, x):
        tf, xf, shape, u = self._heat_values(t, x)
        p = np.asarray(self.map.inverse(u, np.column_stack([tf, xf])))
        g = self.heat.gradient(tf, xf) / np.asarray(self.map.derivative(p)).reshape(-1, 1)
        return g.reshape(shape + (self.n,))

    def time_derivative(self, t, x):
        tf, xf, shape, u = self._heat_values(t, x)
        p = np.asarray(self.map.inverse(u, np.column_stack([tf, xf])))
        out = (self.heat.time_derivative(tf, xf) / self.map.derivative(p)).reshape(shape)
        return out[()] if out.ndim == 0 else out

    def is_valid(self, t, x):
        tf, xf, shape = _flatten(t, x, self.n)
        ok = self.heat.is_valid(tf, xf)
        ok = ok & np.asarray(self.map.domain_valid(self.heat.value(tf, xf)))
        out = ok.reshape(shape)
        return out[()] if out.ndim == 0 else out

    def to_json(self):
        return {"map": self.map.to_json(), "heat_field": self.heat.to_json()}


class ScaledBurgersField(BurgersField):
    """c * p for a Burgers field p (a solution only when a = 0)."""

    def __init__(self, base: BurgersField, scale: float):
        super().__init__(base.heat, base.map)
        self.base = base
        self.scale = float(scale)

    def value(self, t, x):
        return self.scale * self.base.value(t, x)

    __call__ = value

    def gradient(self, t, x):
        return self.scale * self.base.gradient(t, x)

    def time_derivative(self, t, x):
        return self.scale * self.base.time_derivative(t, x)


def heat_to_burgers(chmap: ColeHopfMap, u: HeatField) -> BurgersField:
    return BurgersField(u, chmap)


def compose(p1: BurgersField, p2: BurgersField) -> BurgersField:
    """p1 o p2 = U^{-1}(U(p1) + U(p2)), realised on the heat side."""
    if p1.map != p2.map:
        raise MapMismatch("composition needs both fields to share one Cole-Hopf map")
    return BurgersField(SumField([p1.heat, p2.heat]), p1.map)


def rational_burgers(chmap: ColeHopfMap, terms, n: int | None = None,
                     coeff_scale: float = 1.0, p_scale: float = 1.0) -> BurgersField:
    """p = -(1/a) log(1 - a (sum of kernel terms - U0) / U1), i.e. U^{-1} of the sum.

    ``coeff_scale`` multiplies the source coefficients; ``p_scale`` multiplies
    the resulting p. Both readings of a "constant multiple" are offered.
    """
    if not chmap.constant:
        raise ValueError("rational Burgers solutions need a constant coefficient")
    if isinstance(terms, RationalHeatSolution):
        sol = terms
    else:
        terms = list(terms)
        if n is None:
            if not terms:
                raise ValueError("n is required for an empty term list")
            n = terms[0].pole.n
        sol = RationalHeatSolution(n, terms)
    if coeff_scale != 1.0:
        sol = RationalHeatSolution.from_arrays(sol.poles[:, 0], sol.poles[:, 1:],
                                               sol.coefficients * coeff_scale,
                                               [tm.order for tm in sol.terms]) if len(sol) else sol
    field = BurgersField(sol, chmap)
    return field if p_scale == 1.0 else ScaledBurgersField(field, p_scale)


def burgers_residual_fd(p: BurgersField, t, x, h: float = 1e-3):
    """Central-difference estimate of p_t - Laplacian p - c(p) |grad p|^2."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    t = np.broadcast_to(t, x.shape[:-1])
    n = p.n
    stencil = [(t + h, x), (t - h, x)]
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        stencil += [(t, x + e), (t, x - e)]
    for ts, xs in [(t, x)] + stencil:
        if not np.all(p.is_valid(ts, xs)):
            raise DomainViolation("residual stencil leaves the Burgers field's domain")
    centre = p.value(t, x)
    pt = (p.value(t + h, x) - p.value(t - h, x)) / (2 * h)
    lap = 0.0
    grad2 = 0.0
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fp, fm = p.value(t, x + e), p.value(t, x - e)
        lap = lap + (fp - 2 * centre + fm) / (h * h)
        grad2 = grad2 + ((fp - fm) / (2 * h)) ** 2
    return pt - lap - p.map.pde_coefficient(centre) * grad2


@dataclass
class BurgersApproximation:
    field: BurgersField
    heat_solution: RationalHeatSolution
    p_error: float
    u_error: float
    lipschitz: float

    def report(self):
        return {"p_sup_error": self.p_error, "u_sup_error": self.u_error,
                "lipschitz_bound": self.lipschitz, "terms": len(self.heat_solution)}


def approximate_burgers(target: BurgersField, boxes: BoxPair, mesh: float,
                        grid_count: int = 21) -> BurgersApproximation:
    """Approximate a Burgers field on K by U^{-1} of a Riemann-sum rational heat solution."""
    heat = riemann_approximate(target.heat, boxes, mesh)
    approx_field = BurgersField(heat, target.map)
    t, x = boxes.k_grid(grid_count)
    pts = np.column_stack([t, x])
    u_target = target.heat.value(t, x)
    u_approx = heat.value(t, x)
    ok = np.asarray(target.map.domain_valid(u_approx))
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok)[0])
        raise DomainViolation("approximant leaves the inverse's domain on K; refine the mesh",
                              point=pts[bad], value=float(u_approx[bad]))
    p_err = float(np.max(np.abs(target.map.inverse(u_approx) - target.map.inverse(u_target))))
    u_err = sup_error(heat, target.heat, t, x)
    lo, hi = min(u_target.min(), u_approx.min()), max(u_target.max(), u_approx.max())
    us = np.linspace(lo, hi, 201)
    lip = float(np.max(np.abs(target.map.inverse_derivative(us))))
    return BurgersApproximation(approx_field, heat, p_err, u_err, lip)
