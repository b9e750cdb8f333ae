"""Finite, certified versions of the tangential-approximation ladder,
universal translates and universal series, plus their Cole-Hopf transports.

Entire approximants are linear combinations of exactly caloric dictionary
members (exponentials, damped trig modes, heat polynomials).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .approx import DEFAULT_REG, PoleSet, greedy_fit, tsvd_solve
from .colehopf import BurgersField, ColeHopfMap
from .errors import BlockExhausted, BudgetMissed, DictionaryTooSmall, DomainViolation
from .fields import (Constant, Exponential, HeatField, HeatPolynomial, RationalHeatSolution,
                     ShiftedField, SumField, Trig)
from .grids import ball_grid, box_grid


@dataclass
class Dictionary:
    members: list

    @property
    def n(self) -> int:
        return self.members[0].n

    def __len__(self):
        return len(self.members)

    def matrix(self, t, x) -> np.ndarray:
        t = np.asarray(t, dtype=float).reshape(-1)
        x = np.asarray(x, dtype=float).reshape(t.size, self.n)
        if t.size == 0:
            return np.zeros((0, len(self.members)))
        return np.column_stack([m.value(t, x) for m in self.members])

    def combine(self, coeffs) -> HeatField:
        keep = [(m, float(c)) for m, c in zip(self.members, coeffs) if c != 0.0]
        if not keep:
            return Constant(0.0, self.n)
        return SumField([m for m, _ in keep], [c for _, c in keep])

    def to_json(self):
        return {"members": [m.to_json() for m in self.members]}

    @classmethod
    def build(cls, n: int = 1, k_max: float = 3.0, dk: float = 0.5, degree: int = 8,
              kinds=("exponential", "trig", "heat_polynomial")) -> "Dictionary":
        """Exponential/trig modes on the k-grid {-k_max..k_max}^n step dk, heat polynomials up to ``degree``.

        Trig modes use one k from each +-k pair; the zero mode is carried by
        the degree-0 heat polynomial (or the k = 0 exponential if polynomials
        are excluded).
        """
        steps = int(round(k_max / dk))
        axis = [dk * i for i in range(-steps, steps + 1)]
        grid = [np.array(k) for k in itertools.product(axis, repeat=n)]
        members: list = []
        polys = "heat_polynomial" in kinds
        if "exponential" in kinds:
            members += [Exponential(k) for k in grid if polys is False or np.any(k != 0)]
        if "trig" in kinds:
            for k in grid:
                nz = np.flatnonzero(k)
                if nz.size and k[nz[0]] > 0:
                    members += [Trig(k, "cos"), Trig(k, "sin")]
        if polys:
            for degs in itertools.product(range(degree + 1), repeat=n):
                if sum(degs) <= degree:
                    members.append(HeatPolynomial(degs))
        return cls(members)

    @classmethod
    def from_json(cls, doc, n: int = 1):
        if "members" in doc:
            from .fields import make_field
            return cls([make_field(m) for m in doc["members"]])
        return cls.build(n=n, k_max=doc.get("k_max", 3.0), dk=doc.get("dk", 0.5),
                         degree=doc.get("degree", 8),
                         kinds=tuple(doc.get("kinds", ("exponential", "trig", "heat_polynomial"))))


@dataclass
class TwoSetFit:
    field: HeatField
    coefficients: np.ndarray
    error_a: float
    error_b: float


def two_set_entire_fit(a_points, a_values, b_points, dictionary: Dictionary,
                       reg: float = DEFAULT_REG, tol=None, weight_b: float = 1.0) -> TwoSetFit:
    """Fit a dictionary combination to given values on set A and to zero on set B.

    ``a_points``/``b_points`` are ``(t, x)`` pairs; ``a_values`` an array or a
    HeatField. With ``tol`` (a float or a pair for A, B) a miss raises
    DictionaryTooSmall carrying the achieved errors.
    """
    ta, xa = (np.asarray(v, dtype=float) for v in a_points)
    tb, xb = (np.asarray(v, dtype=float) for v in b_points)
    ta = ta.reshape(-1)
    xa = xa.reshape(ta.size, dictionary.n)
    tb = tb.reshape(-1)
    xb = xb.reshape(tb.size, dictionary.n)
    va = a_values.value(ta, xa) if isinstance(a_values, HeatField) else np.asarray(a_values, float).reshape(-1)
    ma = dictionary.matrix(ta, xa)
    mb = dictionary.matrix(tb, xb)
    system = np.vstack([ma, weight_b * mb])
    rhs = np.concatenate([va, np.zeros(tb.size)])
    if not np.any(rhs):
        coeffs = np.zeros(len(dictionary))
    else:
        scale = np.linalg.norm(system, axis=0)
        scale[scale == 0] = 1.0
        coeffs = tsvd_solve(system / scale, rhs, reg) / scale
    err_a = float(np.max(np.abs(ma @ coeffs - va))) if ta.size else 0.0
    err_b = float(np.max(np.abs(mb @ coeffs))) if tb.size else 0.0
    fit = TwoSetFit(dictionary.combine(coeffs), coeffs, err_a, err_b)
    if tol is not None:
        tol_a, tol_b = (tol, tol) if np.ndim(tol) == 0 else tol
        if err_a > tol_a or err_b > tol_b:
            raise DictionaryTooSmall(
                f"dictionary fit missed tolerance: A {err_a:.3e} (tol {tol_a:.3e}), "
                f"B {err_b:.3e} (tol {tol_b:.3e})", errors=(err_a, err_b))
    return fit


@dataclass
class Rung:
    """Compact set (box or ball in space-time), its target and tolerance."""

    target: HeatField
    eps: float
    lo: tuple | None = None
    hi: tuple | None = None
    center: tuple | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("rung tolerance must be positive")
        if (self.lo is None) == (self.center is None):
            raise ValueError("a rung is either a box (lo, hi) or a ball (center, radius)")

    def grid(self, count: int):
        if self.center is not None:
            return ball_grid(self.center, self.radius, count)
        return box_grid(self.lo, self.hi, count)

    def norm_range(self):
        """(inf, sup) of the Euclidean norm over the set."""
        if self.center is not None:
            c = float(np.linalg.norm(self.center))
            return max(0.0, c - self.radius), c + self.radius
        lo = np.asarray(self.lo, float)
        hi = np.asarray(self.hi, float)
        far = np.maximum(np.abs(lo), np.abs(hi))
        near = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
        return float(np.linalg.norm(near)), float(np.linalg.norm(far))

    def describe(self):
        if self.center is not None:
            return {"center": list(map(float, self.center)), "radius": float(self.radius)}
        return {"lo": list(map(float, self.lo)), "hi": list(map(float, self.hi))}


@dataclass
class LadderResult:
    field: HeatField
    steps: list
    radii: list
    certificates: list
    report: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return all(c["achieved_sup_error"] < c["budget"] for c in self.certificates)


def ladder_radii(rungs: Sequence[Rung]) -> list:
    """Separating radii R_j: sup norm on K_j < R_j < inf norm on K_{j+1}."""
    radii = []
    for j, rung in enumerate(rungs):
        inf_j, sup_j = rung.norm_range()
        if j + 1 < len(rungs):
            inf_next, _ = rungs[j + 1].norm_range()
            if not sup_j < inf_next:
                raise ValueError(f"rungs {j + 1} and {j + 2} are not ordered outward")
            radii.append(0.5 * (sup_j + inf_next))
        else:
            radii.append(sup_j + 1.0)
    return radii


def ladder(rungs: Sequence[Rung], dictionary: Dictionary, grid_count: int = 15,
           reg: float = DEFAULT_REG, strict_steps: bool = False) -> LadderResult:
    """Inductive tangential approximation on outward-ordered compacta.

    Step j fits h_j to (u_j - previous sum) on K_j and to 0 on the ball B_{j-1},
    each with budget eps_j / 2^j. The result is certified rung by rung with
    |sum h - u_j| < eps_j on the K_j grid; a failed certificate raises
    BudgetMissed. Step-budget misses are recorded, and raise only when
    ``strict_steps`` is set.
    """
    rungs = list(rungs)
    n = dictionary.n
    if not rungs:
        return LadderResult(Constant(0.0, n), [], [], [], [])
    radii = ladder_radii(rungs)
    grids = [r.grid(grid_count) for r in rungs]
    pieces: list = []
    total = Constant(0.0, n)
    report = []
    for j, (rung, (tk, xk)) in enumerate(zip(rungs, grids), start=1):
        budget = rung.eps / 2 ** j
        resid_target = rung.target.value(tk, xk) - total.value(tk, xk)
        if j == 1:
            tb, xb = np.zeros(0), np.zeros((0, n))
        else:
            tb, xb = ball_grid(np.zeros(n + 1), radii[j - 2], grid_count)
        fit = two_set_entire_fit((tk, xk), resid_target, (tb, xb), dictionary, reg)
        pieces.append(fit.field)
        total = SumField(pieces)
        report.append({"step": j, "set": f"K_{j}", "achieved_sup_error": fit.error_a, "budget": budget})
        if j > 1:
            report.append({"step": j, "set": f"B_{j - 1}", "achieved_sup_error": fit.error_b,
                           "budget": budget})
        if strict_steps and (fit.error_a >= budget or fit.error_b >= budget):
            raise BudgetMissed(f"step {j} missed its budget {budget:.3e}", step=j,
                               achieved=max(fit.error_a, fit.error_b), budget=budget)
    certs = []
    for j, (rung, (tk, xk)) in enumerate(zip(rungs, grids), start=1):
        err = float(np.max(np.abs(total.value(tk, xk) - rung.target.value(tk, xk))))
        certs.append({"step": j, "set": f"K_{j}", "achieved_sup_error": err, "budget": rung.eps})
    result = LadderResult(total, pieces, radii, certs, report)
    for c in certs:
        if not c["achieved_sup_error"] < c["budget"]:
            raise BudgetMissed(f"rung {c['step']} certificate failed: {c['achieved_sup_error']:.3e} "
                               f">= {c['budget']:.3e}", step=c["step"],
                               achieved=c["achieved_sup_error"], budget=c["budget"])
    return result


def translate_centers(radii: Sequence[float], n: int, gap: float = 1.0, axis: int = 0) -> list:
    """Centres a_j on coordinate ``axis`` (0 = time, 1 = first space axis).

    Time is the default: balls placed side by side in space share their time
    span, so the slice complement of their union has bounded gaps and Runge
    approximation fails there.

    a_1 = 0 and consecutive balls are separated by ``gap``:
    |a_{j+1}| = |a_j| + R_j + gap + R_{j+1}.
    """
    centres = []
    pos = 0.0
    for j, r in enumerate(radii):
        if j > 0:
            pos += radii[j - 1] + gap + r
        c = np.zeros(n + 1)
        c[axis] = pos
        centres.append(c)
    return centres


@dataclass
class TranslatesResult:
    field: HeatField
    centers: list
    certificates: list
    ladder: LadderResult | None


def universal_translates(targets: Sequence[HeatField], radii: Sequence[float],
                         dictionary: Dictionary, gap: float = 1.0, axis: int = 0,
                         grid_count: int = 15, reg: float = DEFAULT_REG) -> TranslatesResult:
    """Entire u with sup over |y| <= R_j of |u(y + a_j) - target_j(y)| < 1/j."""
    targets = list(targets)
    n = dictionary.n
    if not targets:
        return TranslatesResult(Constant(0.0, n), [], [], None)
    if len(radii) != len(targets):
        raise ValueError("one radius per target is required")
    centres = translate_centers(radii, n, gap, axis)
    rungs = [Rung(ShiftedField(tg, c), 1.0 / j, center=tuple(c), radius=float(r))
             for j, (tg, c, r) in enumerate(zip(targets, centres, radii), start=1)]
    res = ladder(rungs, dictionary, grid_count=grid_count, reg=reg)
    certs = []
    for j, (tg, c, r) in enumerate(zip(targets, centres, radii), start=1):
        ty, xy = ball_grid(np.zeros(n + 1), r, grid_count)
        moved = res.field.value(ty + c[0], xy + c[1:])
        err = float(np.max(np.abs(moved - tg.value(ty, xy))))
        certs.append({"step": j, "set": f"|y|<={r}", "achieved_sup_error": err, "budget": 1.0 / j,
                      "center": c.tolist()})
    return TranslatesResult(res.field, centres, certs, res)


@dataclass
class SeriesResult:
    coefficients: np.ndarray
    poles: np.ndarray
    markers: list
    certificates: list

    def partial_sum(self, count: int) -> RationalHeatSolution:
        return RationalHeatSolution.from_arrays(self.poles[:count, 0], self.poles[:count, 1:],
                                                self.coefficients[:count])


def universal_series(targets: Sequence, t, x, poles, tols, block_size: int | None = None,
                     max_terms_per_target: int | None = None, reg: float = DEFAULT_REG) -> SeriesResult:
    """Greedy finite prefix of a universal series of simple kernel terms.

    Targets are processed in order. For target m, matching pursuit over the
    next unused block of the pole sequence extends the series, earlier
    coefficients frozen, until the partial sum is within tols[m] of the target
    on the grid. The marker j_m counts the terms in that partial sum.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(t.size, -1)
    poles = np.asarray(poles, dtype=float).reshape(-1, x.shape[1] + 1)
    tols = [float(v) for v in np.broadcast_to(np.asarray(tols, dtype=float), (len(targets),))]
    coeffs = np.zeros(len(poles))
    partial = np.zeros(t.size)
    used = 0
    markers, certs = [], []
    for m, (target, tol) in enumerate(zip(targets, tols), start=1):
        values = target.value(t, x) if isinstance(target, HeatField) else np.asarray(target, float).reshape(-1)
        resid = values - partial
        err = float(np.max(np.abs(resid))) if t.size else 0.0
        if err > tol:
            stop = len(poles) if block_size is None else min(len(poles), used + block_size)
            block = poles[used:stop]
            if block.size == 0:
                raise BlockExhausted(f"pole sequence exhausted before target {m}", m, err)
            pset = PoleSet.from_array(block)
            limit = len(block) if max_terms_per_target is None else max_terms_per_target
            try:
                fit = greedy_fit(resid, t, x, pset, limit, tol, reg)
            except Exception as exc:
                raise BlockExhausted(f"target {m}: no usable pole in its block ({exc})", m, err) from exc
            if fit.sup_residual > tol:
                raise BlockExhausted(f"target {m}: block reached {fit.sup_residual:.3e} > tol {tol:.3e}",
                                     m, fit.sup_residual)
            for k, term in zip(fit.selected, fit.solution.terms):
                coeffs[used + k] = term.coeff
            if fit.selected:
                used = used + max(fit.selected) + 1
            partial = RationalHeatSolution.from_arrays(poles[:used, 0], poles[:used, 1:],
                                                       coeffs[:used]).value(t, x)
            err = float(np.max(np.abs(values - partial)))
        markers.append(used)
        certs.append({"step": m, "set": "grid", "marker": used, "achieved_sup_error": err, "budget": tol})
    return SeriesResult(coeffs[:used].copy(), poles[:used].copy(), markers, certs)


def _heat_targets(targets, chmap: ColeHopfMap):
    out = []
    for tg in targets:
        if isinstance(tg, BurgersField):
            if tg.map != chmap:
                from .errors import MapMismatch
                raise MapMismatch("target uses a different Cole-Hopf map")
            out.append(tg.heat)
        else:
            out.append(tg)
    return out


def _check_domain(chmap, values, pts, label):
    ok = np.asarray(chmap.domain_valid(values))
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok)[0])
        raise DomainViolation(f"{label} leaves the inverse's domain at {pts[bad].tolist()}",
                              point=pts[bad], value=float(values[bad]))


def _lipschitz(chmap, *arrays):
    lo = min(float(np.min(a)) for a in arrays)
    hi = max(float(np.max(a)) for a in arrays)
    us = np.linspace(lo, hi, 201)
    return float(np.max(np.abs(chmap.inverse_derivative(us))))


@dataclass
class BurgersSeriesResult:
    heat: SeriesResult
    map: ColeHopfMap
    certificates: list

    def partial_sum(self, count: int) -> BurgersField:
        return BurgersField(self.heat.partial_sum(count), self.map)


def burgers_universal_series(targets: Sequence, t, x, poles, tols, chmap: ColeHopfMap,
                             **kwargs) -> BurgersSeriesResult:
    """Universal series on the heat side, read back through U^{-1}.

    Composing U^{-1}(c_j Phi(. - q_j)) for j <= j_N equals U^{-1} of the heat
    partial sum when U0 = 0, so partial sums are transported directly.
    """
    if not chmap.constant:
        raise ValueError("Burgers transports need a constant coefficient map")
    t = np.asarray(t, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(t.size, -1)
    pts = np.column_stack([t, x])
    heat_targets = _heat_targets(targets, chmap)
    for tg in heat_targets:
        _check_domain(chmap, tg.value(t, x), pts, "target")
    res = universal_series(heat_targets, t, x, poles, tols, **kwargs)
    certs = []
    for tg, cert in zip(heat_targets, res.certificates):
        u_part = res.partial_sum(cert["marker"]).value(t, x)
        _check_domain(chmap, u_part, pts, f"partial sum {cert['marker']}")
        u_tg = tg.value(t, x)
        p_err = float(np.max(np.abs(chmap.inverse(u_part) - chmap.inverse(u_tg))))
        lip = _lipschitz(chmap, u_part, u_tg)
        certs.append({**cert, "p_sup_error": p_err, "lipschitz_bound": lip,
                      "p_budget": lip * cert["budget"]})
    return BurgersSeriesResult(res, chmap, certs)


@dataclass
class BurgersTranslatesResult:
    heat: TranslatesResult
    field: BurgersField
    certificates: list


def burgers_universal_translates(targets: Sequence, radii, dictionary: Dictionary,
                                 chmap: ColeHopfMap, grid_count: int = 15,
                                 **kwargs) -> BurgersTranslatesResult:
    """Universal translates on the heat side, transported by U^{-1}."""
    if not chmap.constant:
        raise ValueError("Burgers transports need a constant coefficient map")
    heat_targets = _heat_targets(targets, chmap)
    res = universal_translates(heat_targets, radii, dictionary, grid_count=grid_count, **kwargs)
    n = dictionary.n
    certs = []
    for tg, c, r, cert in zip(heat_targets, res.centers, radii, res.certificates):
        ty, xy = ball_grid(np.zeros(n + 1), r, grid_count)
        pts = np.column_stack([ty, xy])
        u_moved = res.field.value(ty + c[0], xy + c[1:])
        u_tg = tg.value(ty, xy)
        _check_domain(chmap, u_tg, pts, "target")
        _check_domain(chmap, u_moved, pts + c, "translate")
        p_err = float(np.max(np.abs(chmap.inverse(u_moved) - chmap.inverse(u_tg))))
        lip = _lipschitz(chmap, u_moved, u_tg)
        certs.append({**cert, "p_sup_error": p_err, "lipschitz_bound": lip,
                      "p_budget": lip * cert["budget"]})
    return BurgersTranslatesResult(res, BurgersField(res.field, chmap), certs)
