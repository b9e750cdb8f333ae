"""Rational approximation of caloric functions by heat-kernel point sources.

Two engines live here: a Riemann-sum discretisation of the potential of
``(d_t - Laplacian)(cutoff * u)`` over the cutoff shell, and least-squares /
greedy fitting over a fixed candidate pole set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AllColumnsDegenerate, MeshTooCoarse, OutsideValidity
from .fields import HeatField, PoleTerm, RationalHeatSolution
from .kernel import DerivativeOrder, SpacetimePoint, kernel_matrix

DEFAULT_REG = 1e-10


@dataclass(frozen=True)
class BoxPair:
    """Closed box K inside open box U; coordinate 0 is time."""

    k_lo: tuple
    k_hi: tuple
    u_lo: tuple
    u_hi: tuple

    def __post_init__(self):
        arrs = [tuple(float(v) for v in a) for a in (self.k_lo, self.k_hi, self.u_lo, self.u_hi)]
        for name, val in zip(("k_lo", "k_hi", "u_lo", "u_hi"), arrs):
            object.__setattr__(self, name, val)
        if len({len(a) for a in arrs}) != 1 or len(arrs[0]) < 2:
            raise ValueError("box corners must share length n + 1 >= 2")
        k_lo, k_hi, u_lo, u_hi = map(np.array, arrs)
        if np.any(k_lo > k_hi):
            raise ValueError("K has lo > hi")
        if np.any(u_lo >= k_lo) or np.any(k_hi >= u_hi):
            raise ValueError("BoxPair needs a positive margin between K and U in every coordinate")

    @property
    def n(self) -> int:
        return len(self.k_lo) - 1

    @property
    def margins(self) -> np.ndarray:
        return np.minimum(np.subtract(self.k_lo, self.u_lo), np.subtract(self.u_hi, self.k_hi))

    def in_k(self, t, x) -> np.ndarray:
        pts = np.column_stack([np.reshape(t, -1), np.reshape(x, (np.size(t), -1))])
        return np.all((pts >= self.k_lo) & (pts <= self.k_hi), axis=1)

    def k_grid(self, count: int = 21):
        from .grids import box_grid
        return box_grid(self.k_lo, self.k_hi, count)

    def to_json(self):
        return {"K": {"lo": list(self.k_lo), "hi": list(self.k_hi)},
                "U": {"lo": list(self.u_lo), "hi": list(self.u_hi)}}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["K"]["lo"], doc["K"]["hi"], doc["U"]["lo"], doc["U"]["hi"])


def _smoothstep(s):
    """Quintic ramp 6s^5 - 15s^4 + 10s^3 and its first two derivatives, s clipped to [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    v = s ** 3 * (10 - 15 * s + 6 * s * s)
    d1 = 30 * s * s * (1 - s) ** 2
    d2 = 60 * s * (1 - s) * (1 - 2 * s)
    return v, d1, d2


class Cutoff:
    """Tensor-product C^2 cutoff: 1 on K, 0 outside U."""

    def __init__(self, boxes: BoxPair):
        self.boxes = boxes
        self._klo = np.array(boxes.k_lo)
        self._khi = np.array(boxes.k_hi)
        self._ulo = np.array(boxes.u_lo)
        self._uhi = np.array(boxes.u_hi)

    def _ramps(self, pts):
        """Per-coordinate ramp values and derivatives, arrays of shape (m, n+1)."""
        wl = self._klo - self._ulo
        wr = self._uhi - self._khi
        vl, dl, ddl = _smoothstep((pts - self._ulo) / wl)
        vr, dr, ddr = _smoothstep((self._uhi - pts) / wr)
        left = pts < self._klo
        v = np.where(left, vl, vr)
        d = np.where(left, dl / wl, -dr / wr)
        dd = np.where(left, ddl / wl ** 2, ddr / wr ** 2)
        inside = (pts >= self._klo) & (pts <= self._khi)
        v = np.where(inside, 1.0, v)
        d = np.where(inside, 0.0, d)
        dd = np.where(inside, 0.0, dd)
        return v, d, dd

    def evaluate(self, t, x):
        """Return (value, d_t, spatial gradient, spatial Laplacian)."""
        pts = np.column_stack([np.reshape(t, -1), np.reshape(x, (np.size(t), -1))])
        v, d, dd = self._ramps(pts)
        m, k = v.shape
        value = np.prod(v, axis=1)
        firsts = np.empty((m, k))
        seconds = np.empty((m, k))
        for c in range(k):
            rest = np.prod(np.delete(v, c, axis=1), axis=1)
            firsts[:, c] = d[:, c] * rest
            seconds[:, c] = dd[:, c] * rest
        return value, firsts[:, 0], firsts[:, 1:], seconds[:, 1:].sum(axis=1)

    def value(self, t, x):
        return self.evaluate(t, x)[0]


def source_density(target: HeatField, chi: Cutoff, t, x):
    """(d_t - Laplacian)(chi * u) via the product rule, valid where u is caloric.

    Equals u (chi_t - Laplacian chi) - 2 grad chi . grad u and vanishes
    wherever chi is locally constant.
    """
    t = np.reshape(np.asarray(t, dtype=float), -1)
    x = np.reshape(np.asarray(x, dtype=float), (t.size, -1))
    out = np.zeros(t.size)
    chi_v, chi_t, chi_g, chi_lap = chi.evaluate(t, x)
    active = (chi_t != 0) | (chi_lap != 0) | np.any(chi_g != 0, axis=1)
    if np.any(active):
        ta, xa = t[active], x[active]
        if not np.all(target.is_valid(ta, xa)):
            raise OutsideValidity("source density requested outside the target's validity set")
        u = target.value(ta, xa)
        gu = target.gradient(ta, xa)
        out[active] = u * (chi_t[active] - chi_lap[active]) - 2.0 * np.sum(chi_g[active] * gu, axis=1)
    return out


def shell_cells(boxes: BoxPair, mesh: float):
    """Partition closure(U) minus interior(K) into boxes of diameter <= mesh.

    Each coordinate range of U is split at K's endpoints into three segments,
    each segment cut into equal pieces of width <= mesh / sqrt(n + 1). Cells
    whose every coordinate lies in K's range are discarded.
    Returns (centres (N, n+1), volumes (N,)).
    """
    if mesh <= 0:
        raise MeshTooCoarse("mesh must be positive")
    dim = boxes.n + 1
    width = mesh / math.sqrt(dim)
    if width > float(np.min(boxes.margins)):
        raise MeshTooCoarse(
            f"mesh {mesh} leaves less than one cell across the thinnest shell margin "
            f"{float(np.min(boxes.margins))}"
        )
    axes_c, axes_w, axes_mid = [], [], []
    for c in range(dim):
        edges = [boxes.u_lo[c], boxes.k_lo[c], boxes.k_hi[c], boxes.u_hi[c]]
        centres, widths, mids = [], [], []
        for seg in range(3):
            a, b = edges[seg], edges[seg + 1]
            if b <= a:
                continue
            count = max(1, math.ceil((b - a) / width - 1e-12))
            w = (b - a) / count
            centres.append(a + w * (np.arange(count) + 0.5))
            widths.append(np.full(count, w))
            mids.append(np.full(count, seg == 1))
        axes_c.append(np.concatenate(centres))
        axes_w.append(np.concatenate(widths))
        axes_mid.append(np.concatenate(mids))
    grids_c = np.meshgrid(*axes_c, indexing="ij")
    grids_w = np.meshgrid(*axes_w, indexing="ij")
    grids_m = np.meshgrid(*axes_mid, indexing="ij")
    inner = np.logical_and.reduce([g.reshape(-1) for g in grids_m])
    centres = np.stack([g.reshape(-1) for g in grids_c], axis=1)[~inner]
    volumes = np.prod(np.stack([g.reshape(-1) for g in grids_w], axis=1), axis=1)[~inner]
    return centres, volumes


def riemann_approximate(target: HeatField, boxes: BoxPair, mesh: float) -> RationalHeatSolution:
    """Midpoint Riemann sum of the cutoff source potential: one simple pole per shell cell."""
    if target.n != boxes.n:
        raise ValueError("target and boxes disagree on the space dimension")
    centres, volumes = shell_cells(boxes, mesh)
    chi = Cutoff(boxes)
    density = source_density(target, chi, centres[:, 0], centres[:, 1:])
    return RationalHeatSolution.from_arrays(centres[:, 0], centres[:, 1:], density * volumes)


@dataclass
class PoleSet:
    """Candidate poles, each with the derivative orders it may carry."""

    candidates: list
    orders: list | None = None

    def __post_init__(self):
        self.candidates = [c if isinstance(c, SpacetimePoint) else SpacetimePoint(c[0], c[1:])
                           for c in self.candidates]
        n = self.candidates[0].n if self.candidates else 1
        if self.orders is None:
            self.orders = [[DerivativeOrder.zero(n)] for _ in self.candidates]
        if len(self.orders) != len(self.candidates):
            raise ValueError("orders must list allowed derivative orders per candidate")

    @property
    def n(self) -> int:
        return self.candidates[0].n

    def columns(self):
        """Flattened (pole, order) pairs in candidate order."""
        return [(p, o) for p, os in zip(self.candidates, self.orders) for o in os]

    def check_outside(self, boxes: BoxPair):
        from .errors import PoleInsideK
        pts = np.array([c.as_array() for c in self.candidates])
        inside = boxes.in_k(pts[:, 0], pts[:, 1:])
        if np.any(inside):
            raise PoleInsideK(f"candidate pole {self.candidates[int(np.argmax(inside))]} lies in K")

    @classmethod
    def from_array(cls, points, orders=None):
        return cls([SpacetimePoint(p[0], p[1:]) for p in np.asarray(points, dtype=float)], orders)


def tsvd_solve(a: np.ndarray, b: np.ndarray, reg: float = DEFAULT_REG) -> np.ndarray:
    """Minimum-norm least squares keeping singular values >= reg * largest."""
    if a.size == 0:
        return np.zeros(a.shape[1])
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros(a.shape[1])
    keep = s >= reg * s[0]
    return vt[keep].T @ ((u[:, keep].T @ b) / s[keep])


@dataclass
class FitResult:
    solution: RationalHeatSolution
    rms_residual: float
    sup_residual: float
    dropped: list = field(default_factory=list)
    selected: list = field(default_factory=list)

    def report(self) -> dict:
        return {"terms": len(self.solution), "rms_residual": self.rms_residual,
                "sup_residual": self.sup_residual, "dropped_columns": list(self.dropped),
                "selected_columns": list(self.selected)}


def _design(t, x, columns) -> np.ndarray:
    a = np.empty((np.size(t), len(columns)))
    for k, (pole, order) in enumerate(columns):
        a[:, k] = kernel_matrix(t, x, [pole.t], [pole.x], order)[:, 0]
    return a


def _sample_arrays(samples):
    if isinstance(samples, tuple) and len(samples) == 3:
        t, x, v = samples
    else:
        rows = list(samples)
        t = np.array([p.t for p, _ in rows])
        x = np.array([p.x for p, _ in rows])
        v = np.array([val for _, val in rows])
    t = np.asarray(t, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(t.size, -1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if t.size == 0:
        raise ValueError("need at least one sample")
    return t, x, v


def fit_fixed_poles(samples, poles: PoleSet, reg: float = DEFAULT_REG) -> FitResult:
    """Least-squares fit over a fixed pole set by truncated SVD.

    ``samples`` is either a sequence of ``(SpacetimePoint, value)`` pairs or a
    tuple of arrays ``(t, x, values)``. Columns that vanish on every sample are
    dropped before the solve.
    """
    t, x, b = _sample_arrays(samples)
    columns = poles.columns()
    if not columns:
        raise ValueError("need at least one pole")
    a = _design(t, x, columns)
    live = np.any(a != 0, axis=0)
    if not np.any(live):
        raise AllColumnsDegenerate("every candidate pole is causally disconnected from every sample")
    # column scaling keeps the truncation threshold meaningful across poles
    scale = np.linalg.norm(a[:, live], axis=0)
    c_live = tsvd_solve(a[:, live] / scale, b, reg) / scale
    coeffs = np.zeros(len(columns))
    coeffs[live] = c_live
    resid = a @ coeffs - b
    terms = [PoleTerm(p, float(c), o) for (p, o), c in zip(columns, coeffs)]
    return FitResult(RationalHeatSolution(poles.n, terms),
                     float(np.sqrt(np.mean(resid ** 2))), float(np.max(np.abs(resid))),
                     dropped=[int(i) for i in np.flatnonzero(~live)],
                     selected=[int(i) for i in np.flatnonzero(live)])


def greedy_fit(target, t, x, poles: PoleSet, max_terms: int, tol: float,
               reg: float = DEFAULT_REG) -> FitResult:
    """Orthogonal matching pursuit over the candidate columns.

    ``target`` is a HeatField or an array of values at the grid ``(t, x)``.
    Each step adds the column most correlated with the residual (lowest index
    on ties) and re-fits all selected coefficients.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(t.size, -1)
    b = target.value(t, x) if isinstance(target, HeatField) else np.asarray(target, dtype=float).reshape(-1)
    columns = poles.columns()
    a = _design(t, x, columns)
    norms = np.linalg.norm(a, axis=0)
    live = norms > 0
    if not np.any(live):
        raise AllColumnsDegenerate("every candidate pole is causally disconnected from every sample")
    dropped = [int(i) for i in np.flatnonzero(~live)]
    coeffs = np.zeros(len(columns))
    resid = -b
    selected: list = []

    def result():
        terms = [PoleTerm(columns[i][0], float(coeffs[i]), columns[i][1]) for i in selected]
        return FitResult(RationalHeatSolution(poles.n, terms),
                         float(np.sqrt(np.mean(resid ** 2))), float(np.max(np.abs(resid))),
                         dropped=dropped, selected=list(selected))

    safe = np.where(live, norms, 1.0)
    while len(selected) < max_terms and np.max(np.abs(resid)) > tol:
        score = np.abs(a.T @ resid) / safe
        score[~live] = -1.0
        score[selected] = -1.0
        pick = int(np.argmax(score))
        if score[pick] <= 0:
            break
        selected.append(pick)
        sub = a[:, selected]
        sc = norms[selected]
        coeffs[:] = 0.0
        coeffs[selected] = tsvd_solve(sub / sc, b, reg) / sc
        resid = a @ coeffs - b
    return result()


def sup_error(f, g, t, x) -> float:
    """Max over the grid of |f - g|; either argument may be a HeatField or a number."""
    t = np.asarray(t, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(t.size, -1)

    def values(h):
        if isinstance(h, HeatField):
            if not np.all(h.is_valid(t, x)):
                raise OutsideValidity("grid point outside field validity")
            return h.value(t, x)
        return np.broadcast_to(np.asarray(h, dtype=float), t.shape)

    if t.size == 0:
        return 0.0
    return float(np.max(np.abs(values(f) - values(g))))
