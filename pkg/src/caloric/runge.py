"""Time-slice geometry of box-complement regions.

A region is an open ambient box (or all of space-time) minus finitely many
closed, possibly degenerate, axis-aligned obstacle boxes. Its slice topology
is constant on the open time intervals between obstacle endpoints, so
sampling every endpoint and every interval midpoint decides the slice
conditions exactly. Slices are exact intervals for n = 1 and rasters for n = 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import NotNested, PoleInsideK, UnsupportedDimension

DEFAULT_RESOLUTION = 512


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or len(lo) < 2:
            raise ValueError("box corners need matching length n + 1 >= 2")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"box has lo > hi: {lo} {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self) -> int:
        return len(self.lo) - 1

    def active(self, t: float) -> bool:
        """Closed box meets the slice H(t)."""
        return self.lo[0] <= t <= self.hi[0]

    def open_active(self, t: float) -> bool:
        return self.lo[0] < t < self.hi[0]

    def contains_box(self, other: "Box") -> bool:
        return all(a <= c and d <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def contains_point(self, p) -> bool:
        return all(a <= v <= b for a, b, v in zip(self.lo, self.hi, p))

    def to_json(self):
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["lo"], doc["hi"])


@dataclass(frozen=True)
class Region:
    """Open set: ambient (None = all of space-time) minus closed obstacles."""

    n: int
    ambient: Box | None = None
    obstacles: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        for b in self.obstacles + ((self.ambient,) if self.ambient else ()):
            if b.n != self.n:
                raise ValueError("box dimension does not match region dimension")

    def to_json(self):
        return {"n": self.n,
                "ambient": None if self.ambient is None else self.ambient.to_json(),
                "obstacles": [b.to_json() for b in self.obstacles]}

    @classmethod
    def from_json(cls, doc):
        amb = doc.get("ambient")
        obstacles = [Box.from_json(o) for o in doc.get("obstacles", [])]
        n = doc.get("n")
        if n is None:
            ref = obstacles[0] if obstacles else (Box.from_json(amb) if amb else None)
            if ref is None:
                raise ValueError("region needs 'n' when it has no boxes")
            n = ref.n
        return cls(int(n), None if amb is None else Box.from_json(amb), obstacles)


def critical_times(region: Region) -> list:
    """Sorted, deduplicated time endpoints of the ambient box and all obstacles."""
    ts = set()
    for b in region.obstacles:
        ts.update((b.lo[0], b.hi[0]))
    if region.ambient is not None:
        ts.update((region.ambient.lo[0], region.ambient.hi[0]))
    return sorted(ts)


def sample_times(times: Sequence[float]) -> list:
    """Interval midpoints (plus one time beyond each end) first, then the endpoints."""
    times = sorted(set(times))
    if not times:
        return [0.0]
    mids = [times[0] - 1.0]
    mids += [0.5 * (a + b) for a, b in zip(times, times[1:])]
    mids.append(times[-1] + 1.0)
    return mids + list(times)


@dataclass
class Component:
    """One connected piece of a slice complement.

    ``lo``/``hi`` are exact endpoints for n = 1 and a pixel bounding box for
    n = 2 (infinite endpoints mark unbounded pieces).
    """

    lo: tuple
    hi: tuple
    compact: bool
    mask: np.ndarray | None = field(default=None, repr=False)

    def to_json(self):
        def enc(v):
            return None if not np.isfinite(v) else float(v)
        return {"lo": [enc(v) for v in self.lo], "hi": [enc(v) for v in self.hi],
                "compact": bool(self.compact)}


@dataclass
class SliceReport:
    t: float
    components: list
    exact: bool
    resolution: int | None = None

    @property
    def compact_components(self):
        return [c for c in self.components if c.compact]

    def to_json(self):
        return {"t": self.t, "exact": self.exact, "resolution": self.resolution,
                "components": [c.to_json() for c in self.components]}


def merge_intervals(intervals):
    """Union of closed intervals as sorted disjoint closed intervals."""
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return [tuple(iv) for iv in out]


def _complement_intervals(region: Region, t: float):
    ivs = []
    amb = region.ambient
    if amb is not None:
        if not amb.open_active(t):
            return [(-np.inf, np.inf)]
        ivs += [(-np.inf, amb.lo[1]), (amb.hi[1], np.inf)]
    ivs += [(b.lo[1], b.hi[1]) for b in region.obstacles if b.active(t)]
    return merge_intervals(ivs)


@dataclass(frozen=True)
class RasterWindow:
    lo: tuple
    hi: tuple
    resolution: int

    @property
    def step(self):
        return tuple((b - a) / self.resolution for a, b in zip(self.lo, self.hi))

    def box_mask(self, lo, hi, strict_inside=False):
        """Pixels whose closed cell meets the closed box [lo, hi].

        With ``strict_inside`` return instead the pixels whose closed cell
        lies in the open box (lo, hi).
        """
        masks = []
        for axis in range(2):
            edges = self.lo[axis] + self.step[axis] * np.arange(self.resolution + 1)
            left, right = edges[:-1], edges[1:]
            if strict_inside:
                masks.append((left > lo[axis]) & (right < hi[axis]))
            else:
                masks.append((right >= lo[axis]) & (left <= hi[axis]))
        return masks[0][:, None] & masks[1][None, :]

    def pixel_of(self, x):
        idx = [int(np.clip(np.floor((x[a] - self.lo[a]) / self.step[a]), 0, self.resolution - 1))
               for a in range(2)]
        return tuple(idx)

    def inside(self, x):
        return all(self.lo[a] <= x[a] <= self.hi[a] for a in range(2))


def raster_window(regions: Sequence[Region], resolution: int = DEFAULT_RESOLUTION,
                  extra_points=()) -> RasterWindow:
    boxes = [b for r in regions for b in r.obstacles]
    boxes += [r.ambient for r in regions if r.ambient is not None]
    lo = np.array([0.0, 0.0])
    hi = np.array([0.0, 0.0])
    pts = [np.array(b.lo[1:]) for b in boxes] + [np.array(b.hi[1:]) for b in boxes]
    pts += [np.asarray(p, dtype=float)[-2:] for p in extra_points]
    if pts:
        lo = np.min(pts, axis=0)
        hi = np.max(pts, axis=0)
    extent = max([max(np.subtract(b.hi[1:], b.lo[1:])) for b in boxes] + [0.0])
    pad = 1.0 + extent
    return RasterWindow(tuple(lo - pad), tuple(hi + pad), int(resolution))


def _complement_mask(region: Region, t: float, win: RasterWindow) -> np.ndarray:
    amb = region.ambient
    if amb is not None and not amb.open_active(t):
        return np.ones((win.resolution, win.resolution), dtype=bool)
    mask = np.zeros((win.resolution, win.resolution), dtype=bool)
    if amb is not None:
        mask |= ~win.box_mask(amb.lo[1:], amb.hi[1:], strict_inside=True)
    for b in region.obstacles:
        if b.active(t):
            mask |= win.box_mask(b.lo[1:], b.hi[1:])
    return mask


def _raster_components(mask: np.ndarray, win: RasterWindow):
    labels, count = ndimage.label(mask)
    comps = []
    if count == 0:
        return comps
    frame = np.zeros_like(mask)
    frame[0, :] = frame[-1, :] = frame[:, 0] = frame[:, -1] = True
    touching = set(np.unique(labels[frame & mask]).tolist())
    slices = ndimage.find_objects(labels)
    for k, sl in enumerate(slices, start=1):
        compact = k not in touching
        sub = labels == k
        lo = tuple(win.lo[a] + win.step[a] * sl[a].start for a in range(2))
        hi = tuple(win.lo[a] + win.step[a] * sl[a].stop for a in range(2))
        if not compact:
            lo = tuple(-np.inf if sl[a].start == 0 else lo[a] for a in range(2))
            hi = tuple(np.inf if sl[a].stop == win.resolution else hi[a] for a in range(2))
        comps.append(Component(lo, hi, compact, sub))
    return comps


def _check_dim(region: Region):
    if region.n not in (1, 2):
        raise UnsupportedDimension(f"slice geometry supports n in {{1, 2}}, got n={region.n}")


def slice_complement(region: Region, t: float, resolution: int = DEFAULT_RESOLUTION,
                     window: RasterWindow | None = None) -> SliceReport:
    """Connected components of H(t) minus the region's slice."""
    _check_dim(region)
    if region.n == 1:
        comps = [Component((a,), (b,), bool(np.isfinite(a) and np.isfinite(b)))
                 for a, b in _complement_intervals(region, t)]
        return SliceReport(float(t), comps, exact=True)
    win = window or raster_window([region], resolution)
    comps = _raster_components(_complement_mask(region, t, win), win)
    return SliceReport(float(t), comps, exact=False, resolution=win.resolution)


@dataclass
class Verdict:
    verdict: str
    ok: bool
    witness: dict | None = None
    exact: bool = True
    checked_times: list = field(default_factory=list)

    def to_json(self):
        return {"verdict": self.verdict, "ok": self.ok, "witness": self.witness,
                "exact": self.exact, "checked_times": list(self.checked_times)}


def jones_check(region: Region, resolution: int = DEFAULT_RESOLUTION) -> Verdict:
    """Runge test: no slice complement may have a compact component."""
    _check_dim(region)
    win = raster_window([region], resolution) if region.n == 2 else None
    times = sample_times(critical_times(region))
    for t in times:
        rep = slice_complement(region, t, window=win)
        if rep.compact_components:
            comp = rep.compact_components[0]
            return Verdict("not_runge", False, {"t": t, "component": comp.to_json()},
                           exact=rep.exact, checked_times=times)
    return Verdict("runge", True, None, exact=region.n == 1, checked_times=times)


def _check_nested(omega1: Region, omega2: Region):
    if omega1.n != omega2.n:
        raise NotNested("regions have different dimensions")
    a1, a2 = omega1.ambient, omega2.ambient
    if a2 is not None and (a1 is None or not a2.contains_box(a1)):
        raise NotNested("ambient of omega1 is not inside ambient of omega2")
    for ob in omega2.obstacles:
        if any(o.contains_box(ob) for o in omega1.obstacles):
            continue
        if a1 is not None and _outside_open_box(ob, a1):
            continue
        raise NotNested(f"omega2 obstacle {ob.to_json()} is not removed from omega1")


def _outside_open_box(b: Box, amb: Box) -> bool:
    # b misses the open ambient box entirely
    return any(b.hi[i] <= amb.lo[i] or b.lo[i] >= amb.hi[i] for i in range(len(b.lo)))


def diaz_check(omega1: Region, omega2: Region, resolution: int = DEFAULT_RESOLUTION) -> Verdict:
    """Runge-pair condition: no compact component of H(t) minus omega1 lies in omega2."""
    _check_dim(omega1)
    _check_nested(omega1, omega2)
    times = sample_times(critical_times(omega1) + critical_times(omega2))
    win = raster_window([omega1, omega2], resolution) if omega1.n == 2 else None
    for t in times:
        rep = slice_complement(omega1, t, window=win)
        if not rep.compact_components:
            continue
        if omega1.n == 1:
            holes = _complement_intervals(omega2, t)
            for comp in rep.compact_components:
                if not any(a <= comp.hi[0] and comp.lo[0] <= b for a, b in holes):
                    return Verdict("fails", False, {"t": t, "component": comp.to_json()},
                                   exact=True, checked_times=times)
        else:
            holes = _complement_mask(omega2, t, win)
            for comp in rep.compact_components:
                if not np.any(comp.mask & holes):
                    return Verdict("fails", False, {"t": t, "component": comp.to_json()},
                                   exact=False, checked_times=times)
    return Verdict("condition satisfied", True, None, exact=omega1.n == 1, checked_times=times)


@dataclass
class PoleCoverage:
    ok: bool
    uncovered: list
    checked_times: list

    @property
    def verdict(self):
        return "valid" if self.ok else "invalid"

    def to_json(self):
        return {"verdict": self.verdict, "ok": self.ok, "uncovered": self.uncovered,
                "checked_times": list(self.checked_times)}


def validate_pole_set(K: Sequence[Box], U: Box, poles, resolution: int = DEFAULT_RESOLUTION) -> PoleCoverage:
    """Check that every component of every slice of U minus K holds a pole.

    Poles are finitely many points, so a component sampled at time t counts as
    covered by a pole in U minus K whose space coordinates lie in that
    component and whose time lies in the open band between the critical times
    neighbouring t (the slab on which the slice topology is constant).
    """
    K = list(K)
    n = U.n
    if n not in (1, 2):
        raise UnsupportedDimension(f"slice geometry supports n in {{1, 2}}, got n={n}")
    poles = np.asarray(poles, dtype=float).reshape(-1, n + 1)
    for p in poles:
        if any(k.contains_point(p) for k in K):
            raise PoleInsideK(f"pole {p.tolist()} lies in K")
    in_u = np.array([all(U.lo[i] < p[i] < U.hi[i] for i in range(n + 1)) for p in poles], dtype=bool)
    live = poles[in_u] if poles.size else poles
    crit = sorted(set([U.lo[0], U.hi[0]] + [v for k in K for v in (k.lo[0], k.hi[0])]))
    times = sample_times(crit)
    win = raster_window([Region(n, U, tuple(K))], resolution, extra_points=live) if n == 2 else None
    uncovered = []
    for t in times:
        if not U.open_active(t):
            continue
        below = [c for c in crit if c < t]
        above = [c for c in crit if c > t]
        band_lo = below[-1] if below else -np.inf
        band_hi = above[0] if above else np.inf
        band = live[(live[:, 0] > band_lo) & (live[:, 0] < band_hi)] if live.size else live
        band = band[[not any(k.contains_point(np.r_[t, p[1:]]) for k in K) for p in band]] if band.size else band
        if n == 1:
            cuts = merge_intervals([(k.lo[1], k.hi[1]) for k in K if k.active(t)])
            edges = [U.lo[1]]
            pieces = []
            for a, b in cuts:
                if b <= U.lo[1] or a >= U.hi[1]:
                    continue
                pieces.append((edges[-1], a))
                edges.append(b)
            pieces.append((edges[-1], U.hi[1]))
            for a, b in pieces:
                if b <= a:
                    continue
                hit = band.size and np.any((band[:, 1] > a) & (band[:, 1] < b))
                if not hit:
                    uncovered.append({"t": t, "component": {"lo": [a], "hi": [b]}})
        else:
            inside = win.box_mask(U.lo[1:], U.hi[1:], strict_inside=True)
            for k in K:
                if k.active(t):
                    inside &= ~win.box_mask(k.lo[1:], k.hi[1:])
            labels, count = ndimage.label(inside)
            hit = set()
            for p in band:
                if win.inside(p[1:]):
                    hit.add(int(labels[win.pixel_of(p[1:])]))
            for k, sl in enumerate(ndimage.find_objects(labels), start=1):
                if k not in hit:
                    lo = [win.lo[a] + win.step[a] * sl[a].start for a in range(2)]
                    hi = [win.lo[a] + win.step[a] * sl[a].stop for a in range(2)]
                    uncovered.append({"t": t, "component": {"lo": lo, "hi": hi}})
    return PoleCoverage(not uncovered, uncovered, times)
