"""Geometry kernel for boundary hulls in the upper half-plane.

A hull is a relatively closed subset of H = {Im z > 0} from a fixed
parametric catalog: vertical slits, half-disks, ridges (sub-graph
regions under a catalog height profile), finite unions, and horizontal
shift / homothety wrappers.  Every shape answers three queries used by
the walk-on-spheres sampler:

* ``contains(z)``   -- closed-set membership,
* ``dist(z)``       -- Euclidean distance to the shape (exact for
  segment and disk shapes, certified to relative tolerance 1e-9 for
  ridge graphs; values returned are never above the true distance, so
  they are safe sphere radii),
* ``sup_im``        -- supremum of imaginary parts over the shape.

Points are plain Python complex numbers; all distance and membership
methods also accept numpy arrays of complex and broadcast elementwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import ndimage

Point = complex

# Relative certification tolerance for ridge graph distances.
RIDGE_DIST_RTOL = 1e-9


def _as_complex(z) -> np.ndarray:
    return np.asarray(z, dtype=np.complex128)


def _segment_distance(x, y, ax, ay, bx, by):
    """Distance from points (x, y) to the closed segment (ax,ay)-(bx,by)."""
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return np.hypot(x - ax, y - ay)
    t = np.clip(((x - ax) * dx + (y - ay) * dy) / denom, 0.0, 1.0)
    return np.hypot(x - (ax + t * dx), y - (ay + t * dy))


# ---------------------------------------------------------------------------
# Ridge height profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LorentzianProfile:
    """Height profile c / (1 + ((x - a) / w)^2)."""

    amplitude: float
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.amplitude < 0 or self.width <= 0:
            raise ValueError("lorentzian profile needs amplitude >= 0 and width > 0")

    def height_at(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.amplitude / (1.0 + u * u)

    def deriv_at(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        return -2.0 * self.amplitude * u / (self.width * (1.0 + u * u) ** 2)

    @property
    def max_height(self) -> float:
        return self.amplitude

    @property
    def lipschitz(self) -> float:
        # max |f'| is attained at u = 1/sqrt(3)
        return self.amplitude * (3.0 * np.sqrt(3.0) / 8.0) / self.width

    @property
    def curvature_bound(self) -> float:
        # |f''| peaks at the center with value 2c/w^2
        return 2.0 * self.amplitude / self.width ** 2

    def extent(self, threshold: float) -> Optional[Tuple[float, float]]:
        if threshold <= 0 or threshold >= self.amplitude:
            r = self.width if threshold >= self.amplitude else None
            if r is None:
                return None
            return (self.center - r, self.center + r)
        r = self.width * np.sqrt(self.amplitude / threshold - 1.0)
        return (self.center - r, self.center + r)

    def to_json(self):
        return {"kind": "lorentzian", "amplitude": self.amplitude,
                "center": self.center, "width": self.width}


@dataclass(frozen=True)
class GaussianProfile:
    """Height profile c * exp(-((x - a) / w)^2)."""

    amplitude: float
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.amplitude < 0 or self.width <= 0:
            raise ValueError("gaussian profile needs amplitude >= 0 and width > 0")

    def height_at(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.amplitude * np.exp(-u * u)

    def deriv_at(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        return -2.0 * self.amplitude * u * np.exp(-u * u) / self.width

    @property
    def max_height(self) -> float:
        return self.amplitude

    @property
    def lipschitz(self) -> float:
        # max |f'| at u = 1/sqrt(2)
        return self.amplitude * np.sqrt(2.0 / np.e) / self.width

    @property
    def curvature_bound(self) -> float:
        # |f''| = c|4u^2-2|exp(-u^2)/w^2 peaks at u = 0
        return 2.0 * self.amplitude / self.width ** 2

    def extent(self, threshold: float) -> Optional[Tuple[float, float]]:
        if threshold <= 0 or threshold >= self.amplitude:
            if threshold >= self.amplitude:
                return (self.center, self.center)
            return None
        r = self.width * np.sqrt(np.log(self.amplitude / threshold))
        return (self.center - r, self.center + r)

    def to_json(self):
        return {"kind": "gaussian", "amplitude": self.amplitude,
                "center": self.center, "width": self.width}


@dataclass(frozen=True)
class PiecewiseLinearProfile:
    """Compactly supported profile interpolating table points linearly.

    The table must start and end at height zero so the graph is a
    continuous polyline attached to the real axis.
    """

    points: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(x), float(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        if len(pts) < 2:
            raise ValueError("piecewise profile needs at least two points")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("piecewise profile abscissae must be strictly increasing")
        if any(y < 0 for y in ys):
            raise ValueError("piecewise profile heights must be nonnegative")
        if ys[0] != 0.0 or ys[-1] != 0.0:
            raise ValueError("piecewise profile must start and end at height zero")

    def _arrays(self):
        xs = np.array([p[0] for p in self.points])
        ys = np.array([p[1] for p in self.points])
        return xs, ys

    def height_at(self, x):
        xs, ys = self._arrays()
        x = np.asarray(x, dtype=float)
        return np.where((x < xs[0]) | (x > xs[-1]), 0.0, np.interp(x, xs, ys))

    @property
    def max_height(self) -> float:
        return max(p[1] for p in self.points)

    @property
    def lipschitz(self) -> float:
        xs, ys = self._arrays()
        return float(np.max(np.abs(np.diff(ys) / np.diff(xs))))

    def extent(self, threshold: float) -> Optional[Tuple[float, float]]:
        xs, _ = self._arrays()
        return (float(xs[0]), float(xs[-1]))

    def region_distance(self, x, y):
        """Exact distance from exterior points to the sub-graph region."""
        xs, ys = self._arrays()
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        best = np.full(np.broadcast(x, y).shape, np.inf)
        for (ax, ay), (bx, by) in zip(self.points[:-1], self.points[1:]):
            best = np.minimum(best, _segment_distance(x, y, ax, ay, bx, by))
        return best

    def to_json(self):
        return {"kind": "piecewise_linear", "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class ConstantProfile:
    """Constant height profile; the sub-graph region is a full strip."""

    height: float

    def __post_init__(self):
        if self.height <= 0:
            raise ValueError("constant profile needs height > 0")

    def height_at(self, x):
        return np.full(np.shape(x), self.height, dtype=float)

    @property
    def max_height(self) -> float:
        return self.height

    @property
    def lipschitz(self) -> float:
        return 0.0

    def extent(self, threshold: float) -> Optional[Tuple[float, float]]:
        return None

    def region_distance(self, x, y):
        return np.maximum(np.asarray(y, dtype=float) - self.height, 0.0)

    def to_json(self):
        return {"kind": "constant", "height": self.height}


Profile = Union[LorentzianProfile, GaussianProfile, PiecewiseLinearProfile,
                ConstantProfile]

_PROFILE_KINDS = {
    "lorentzian": LorentzianProfile,
    "gaussian": GaussianProfile,
    "constant": ConstantProfile,
}


def profile_from_json(obj) -> Profile:
    kind = obj.get("kind")
    if kind == "piecewise_linear":
        return PiecewiseLinearProfile(tuple(tuple(p) for p in obj["points"]))
    if kind in _PROFILE_KINDS:
        kwargs = {k: v for k, v in obj.items() if k != "kind"}
        return _PROFILE_KINDS[kind](**kwargs)
    raise ValueError(f"unknown profile kind {kind!r}")


# ---------------------------------------------------------------------------
# Hull catalog
# ---------------------------------------------------------------------------


class Hull:
    """Base class for the hull catalog (tagged union)."""

    def dist(self, z):
        raise NotImplementedError

    def walk_dist(self, z):
        """Distance used for sphere radii; a certified lower bound of
        ``dist`` that shapes may compute at a looser tolerance."""
        return self.dist(z)

    def contains(self, z):
        raise NotImplementedError

    @property
    def sup_im(self) -> float:
        raise NotImplementedError

    def extent(self, threshold: float = 0.0) -> Optional[Tuple[float, float]]:
        """Horizontal interval outside which the hull lies below ``threshold``.

        ``None`` means the hull is horizontally unbounded at that height.
        """
        raise NotImplementedError

    def boundary_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Sample points on the hull's upper boundary, for membership evidence."""
        raise NotImplementedError

    def is_empty(self) -> bool:
        return False

    def to_json(self):
        raise NotImplementedError

    def shifted(self, t: float) -> "Hull":
        return Shifted(self, float(t))

    def scaled(self, r: float) -> "Hull":
        return Scaled(self, float(r))


@dataclass(frozen=True)
class Empty(Hull):
    def dist(self, z):
        z = _as_complex(z)
        return np.full(z.shape, np.inf)

    def contains(self, z):
        z = _as_complex(z)
        return np.zeros(z.shape, dtype=bool)

    @property
    def sup_im(self) -> float:
        return 0.0

    def extent(self, threshold: float = 0.0):
        return (0.0, 0.0)

    def boundary_points(self, n, rng):
        return np.zeros(0, dtype=np.complex128)

    def is_empty(self) -> bool:
        return True

    def to_json(self):
        return {"kind": "empty"}


@dataclass(frozen=True)
class VerticalSlit(Hull):
    """Segment {base + iy : 0 < y <= height} attached to the real axis."""

    base: float
    height: float

    def __post_init__(self):
        if self.height <= 0:
            raise ValueError("slit height must be positive")

    def dist(self, z):
        z = _as_complex(z)
        x, y = z.real, z.imag
        return np.hypot(x - self.base, y - np.clip(y, 0.0, self.height))

    def contains(self, z):
        z = _as_complex(z)
        return (z.real == self.base) & (z.imag > 0) & (z.imag <= self.height)

    @property
    def sup_im(self) -> float:
        return self.height

    def extent(self, threshold: float = 0.0):
        return (self.base, self.base)

    def boundary_points(self, n, rng):
        u = rng.uniform(0.0, 1.0, size=n)
        return self.base + 1j * u * self.height

    def to_json(self):
        return {"kind": "vertical_slit", "base": self.base, "height": self.height}


@dataclass(frozen=True)
class HalfDisk(Hull):
    """H intersected with the closed disk of radius r centered at c on R."""

    center: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("half-disk radius must be positive")

    def dist(self, z):
        z = _as_complex(z)
        # for Im z >= 0 the radial projection onto the circle stays in H
        return np.maximum(np.abs(z - self.center) - self.radius, 0.0)

    def contains(self, z):
        z = _as_complex(z)
        return (np.abs(z - self.center) <= self.radius) & (z.imag > 0)

    @property
    def sup_im(self) -> float:
        return self.radius

    def extent(self, threshold: float = 0.0):
        return (self.center - self.radius, self.center + self.radius)

    def boundary_points(self, n, rng):
        theta = rng.uniform(0.0, np.pi, size=n)
        return self.center + self.radius * np.exp(1j * theta)

    def to_json(self):
        return {"kind": "half_disk", "center": self.center, "radius": self.radius}


# Looser certified tolerance used for sphere radii inside the sampler;
# radii are lower bounds at any tolerance, so this only trades a little
# step efficiency for speed.
WALK_DIST_RTOL = 1e-3


def _refine_graph_min(prof, x: float, y: float, lo: float, hi: float,
                      best_q: float, m2: float, tol: float):
    """Certified minimum of Q(t) = (x-t)^2 + (y-f(t))^2 over [lo, hi].

    Interval-queue branch-and-bound for queries whose competitive set
    splits into separated basins.  Each interval is subdivided at cell
    midpoints; contiguous competitive runs become child intervals, so
    distinct basins shrink independently.  Returns (best_q, gap).
    """
    k = 32
    grid = (np.arange(k) + 0.5) / k
    lam = prof.lipschitz
    top = prof.max_height
    intervals = [(float(lo), float(hi))]
    gap = np.inf
    for _ in range(120):
        children = []
        lb_min = np.inf
        for a, b in intervals:
            width = b - a
            ts = a + width * grid
            dxs = x - ts
            dys = y - prof.height_at(ts)
            q = dxs * dxs + dys * dys
            best_q = min(best_q, float(q.min()))
            h2 = width / (2 * k)
            qprime = -2.0 * dxs - 2.0 * dys * prof.deriv_at(ts)
            # |Q'| over a cell: local Taylor bound, capped by the
            # interval-wide first-order bound (sharper at coarse scales)
            lq = 2.0 * (max(abs(x - a), abs(x - b)) + lam * max(y, top - y))
            qp_cell = np.minimum(np.abs(qprime) + m2 * h2, lq)
            cell_lb = q - qp_cell * h2
            comp = cell_lb <= best_q
            if not comp.any():
                continue
            lb_min = min(lb_min, float(cell_lb[comp].min()))
            # contiguous runs of competitive cells -> child intervals
            edges = np.nonzero(np.diff(comp.astype(np.int8)))[0]
            starts = [0] if comp[0] else []
            starts += [int(e) + 1 for e in edges if comp[e + 1]]
            ends = [int(e) for e in edges if comp[e]]
            ends += [k - 1] if comp[-1] else []
            for s, e in zip(starts, ends):
                children.append((max(ts[s] - h2, a), min(ts[e] + h2, b)))
        gap = max(best_q - lb_min, 0.0) if np.isfinite(lb_min) else 0.0
        if gap <= tol * best_q + 1e-300 or not children:
            break
        if len(children) > 16:
            # conservative merge keeps the certificate instead of
            # dropping basins; the hull re-splits on later rounds
            children = [(min(c[0] for c in children),
                         max(c[1] for c in children))]
        intervals = children
    return best_q, gap


@dataclass(frozen=True)
class Ridge(Hull):
    """Sub-graph hull {x + iy : 0 < y <= f(x)} under a catalog profile."""

    profile: Profile

    def contains(self, z):
        z = _as_complex(z)
        return (z.imag > 0) & (z.imag <= self.profile.height_at(z.real))

    @property
    def sup_im(self) -> float:
        return float(self.profile.max_height)

    def extent(self, threshold: float = 0.0):
        return self.profile.extent(threshold)

    def dist(self, z, rtol: float = RIDGE_DIST_RTOL):
        z = _as_complex(z)
        x = np.atleast_1d(z.real.astype(float))
        y = np.atleast_1d(z.imag.astype(float))
        out = np.zeros(x.shape)
        fx = self.profile.height_at(x)
        outside = y > np.maximum(fx, 0.0)
        if np.any(outside):
            xo, yo = x[outside], y[outside]
            if hasattr(self.profile, "region_distance"):
                d = self.profile.region_distance(xo, yo)
            else:
                d = self._graph_distance(xo, yo, rtol)
            out[outside] = d
        if z.shape == ():
            return out.reshape(())
        return out.reshape(z.shape)

    def _graph_distance(self, x, y, rtol: float = RIDGE_DIST_RTOL):
        """Distance to the sub-graph region for exterior points.

        Branch-and-bound on the squared distance
        Q(t) = (x - t)^2 + (y - f(t))^2 along the graph, vectorized over
        all query points.  Each round evaluates cell midpoints on the
        current bracket and discards cells whose certified lower bound
        (from the profile's derivative and curvature bounds) exceeds the
        incumbent; the bracket shrinks to the hull of the surviving
        cells.  A query whose survivors split into separated basins
        stalls the single bracket; those rare points finish in a
        per-point interval queue that refines each basin independently.
        Discarded cells can never hold smaller values, so the result is
        the global minimum within ``rtol``, and the returned value never
        exceeds the true distance.
        """
        prof = self.profile
        d0 = y - prof.height_at(x)  # vertical drop to the graph, an upper bound
        lo = x - d0
        hi = x + d0
        best_q = d0 * d0
        # sup of |Q''| = 2|1 + f'^2 + (f - y) f''| over the bracket
        m2 = 2.0 * (1.0 + prof.lipschitz ** 2 + d0 * prof.curvature_bound)
        k = 32
        grid = (np.arange(k) + 0.5) / k
        cell_idx = np.arange(k)
        gap = np.full(x.shape, np.inf)
        tol = 2.0 * rtol
        lam = prof.lipschitz
        top = prof.max_height
        active = np.arange(x.size)
        stalled: list = []
        for _ in range(80):
            xa, ya = x[active], y[active]
            la, ha = lo[active], hi[active]
            width = ha - la
            ts = la[:, None] + width[:, None] * grid[None, :]
            dxs = xa[:, None] - ts
            dys = ya[:, None] - prof.height_at(ts)
            q = dxs * dxs + dys * dys
            bq = np.minimum(best_q[active], q.min(axis=1))
            best_q[active] = bq
            h2 = (width / (2 * k))[:, None]  # half cell width
            qprime = -2.0 * dxs - 2.0 * dys * prof.deriv_at(ts)
            # |Q'| on a cell: local Taylor bound, capped by the
            # bracket-wide first-order bound (sharper at coarse scales)
            lq = 2.0 * (np.maximum(np.abs(xa - la), np.abs(xa - ha))
                        + lam * np.maximum(ya, top - ya))
            qp_cell = np.minimum(np.abs(qprime) + m2[active, None] * h2,
                                 lq[:, None])
            cell_lb = q - qp_cell * h2
            competitive = cell_lb <= bq[:, None]
            none_left = ~competitive.any(axis=1)
            g = np.where(none_left, 0.0,
                         bq - np.minimum(cell_lb.min(axis=1), bq))
            gap[active] = g
            done = g <= tol * bq + 1e-300
            competitive[none_left, 0] = True
            first = competitive.argmax(axis=1)
            last = (k - 1) - competitive[:, ::-1].argmax(axis=1)
            rows = np.arange(active.size)
            new_lo = np.maximum(ts[rows, first] - width / (2 * k), la)
            new_hi = np.minimum(ts[rows, last] + width / (2 * k), ha)
            stuck = ((new_hi - new_lo) > 0.95 * width) & ~done
            lo[active] = new_lo
            hi[active] = new_hi
            if np.any(stuck):
                stalled.extend(active[stuck].tolist())
            active = active[~(done | stuck)]
            if active.size == 0:
                break
        stalled.extend(active.tolist())
        for i in stalled:
            if gap[i] <= tol * best_q[i] + 1e-300:
                continue
            best_q[i], gap[i] = _refine_graph_min(
                prof, x[i], y[i], lo[i], hi[i], best_q[i], m2[i], tol)
        best = np.sqrt(best_q)
        slack = gap / np.maximum(2.0 * best, 1e-300)
        return np.maximum(best - slack, 0.0)

    def walk_dist(self, z):
        return self.dist(z, WALK_DIST_RTOL)

    def boundary_points(self, n, rng):
        ext = self.extent(0.0)
        if ext is None:
            # horizontally unbounded profile: sample a wide window
            half = 10.0 * max(1.0, self.sup_im)
            ext = (-half, half)
        pad = 0.05 * max(1.0, ext[1] - ext[0])
        xs = rng.uniform(ext[0] - pad, ext[1] + pad, size=n)
        return xs + 1j * np.asarray(self.profile.height_at(xs))

    def to_json(self):
        return {"kind": "ridge", "profile": self.profile.to_json()}


@dataclass(frozen=True)
class HullUnion(Hull):
    """Union of catalog hulls, arranged so the union is still a hull."""

    parts: Tuple[Hull, ...]

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        if not self.parts:
            raise ValueError("union needs at least one part; use Empty instead")

    def dist(self, z):
        d = self.parts[0].dist(z)
        for p in self.parts[1:]:
            d = np.minimum(d, p.dist(z))
        return d

    def walk_dist(self, z):
        d = self.parts[0].walk_dist(z)
        for p in self.parts[1:]:
            d = np.minimum(d, p.walk_dist(z))
        return d

    def contains(self, z):
        c = self.parts[0].contains(z)
        for p in self.parts[1:]:
            c = c | p.contains(z)
        return c

    @property
    def sup_im(self) -> float:
        return max(p.sup_im for p in self.parts)

    def extent(self, threshold: float = 0.0):
        lo, hi = np.inf, -np.inf
        for p in self.parts:
            e = p.extent(threshold)
            if e is None:
                return None
            lo, hi = min(lo, e[0]), max(hi, e[1])
        return (lo, hi)

    def boundary_points(self, n, rng):
        per = max(1, n // len(self.parts))
        chunks = [p.boundary_points(per, rng) for p in self.parts]
        return np.concatenate([c for c in chunks if c.size] or
                              [np.zeros(0, np.complex128)])

    def to_json(self):
        return {"kind": "union", "parts": [p.to_json() for p in self.parts]}


@dataclass(frozen=True)
class Shifted(Hull):
    """Horizontal translation of an inner hull by a real offset."""

    inner: Hull
    offset: float

    def dist(self, z):
        return self.inner.dist(_as_complex(z) - self.offset)

    def walk_dist(self, z):
        return self.inner.walk_dist(_as_complex(z) - self.offset)

    def contains(self, z):
        return self.inner.contains(_as_complex(z) - self.offset)

    @property
    def sup_im(self) -> float:
        return self.inner.sup_im

    def extent(self, threshold: float = 0.0):
        e = self.inner.extent(threshold)
        if e is None:
            return None
        return (e[0] + self.offset, e[1] + self.offset)

    def boundary_points(self, n, rng):
        return self.inner.boundary_points(n, rng) + self.offset

    def is_empty(self):
        return self.inner.is_empty()

    def to_json(self):
        return {"kind": "shifted", "offset": self.offset, "inner": self.inner.to_json()}


@dataclass(frozen=True)
class Scaled(Hull):
    """Homothety z -> r z of an inner hull, r > 0."""

    inner: Hull
    factor: float

    def __post_init__(self):
        if self.factor <= 0:
            raise ValueError("scale factor must be positive")

    def dist(self, z):
        return self.factor * self.inner.dist(_as_complex(z) / self.factor)

    def walk_dist(self, z):
        return self.factor * self.inner.walk_dist(_as_complex(z) / self.factor)

    def contains(self, z):
        return self.inner.contains(_as_complex(z) / self.factor)

    @property
    def sup_im(self) -> float:
        return self.factor * self.inner.sup_im

    def extent(self, threshold: float = 0.0):
        e = self.inner.extent(threshold / self.factor)
        if e is None:
            return None
        return (e[0] * self.factor, e[1] * self.factor)

    def boundary_points(self, n, rng):
        return self.factor * self.inner.boundary_points(n, rng)

    def is_empty(self):
        return self.inner.is_empty()

    def to_json(self):
        return {"kind": "scaled", "factor": self.factor, "inner": self.inner.to_json()}


def hull_from_json(obj) -> Hull:
    kind = obj.get("kind")
    if kind == "empty":
        return Empty()
    if kind == "vertical_slit":
        return VerticalSlit(obj["base"], obj["height"])
    if kind == "half_disk":
        return HalfDisk(obj["center"], obj["radius"])
    if kind == "ridge":
        return Ridge(profile_from_json(obj["profile"]))
    if kind == "union":
        return HullUnion(tuple(hull_from_json(p) for p in obj["parts"]))
    if kind == "shifted":
        return Shifted(hull_from_json(obj["inner"]), obj["offset"])
    if kind == "scaled":
        return Scaled(hull_from_json(obj["inner"]), obj["factor"])
    raise ValueError(f"unknown hull kind {kind!r}")


def hull_to_json(h: Hull):
    return h.to_json()


# Spec-facing thin wrappers (scalar convenience) ----------------------------


def contains(h: Hull, z: Point) -> bool:
    return bool(h.contains(z))


def dist_to_hull(h: Hull, z: Point) -> float:
    return float(h.dist(z))


def sup_im(h: Hull) -> float:
    return h.sup_im


# ---------------------------------------------------------------------------
# Parallel slit domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Slit:
    """Horizontal segment [x_lo, x_hi] + iy strictly inside H."""

    y: float
    x_lo: float
    x_hi: float

    def __post_init__(self):
        if self.y <= 0:
            raise ValueError("slit must lie strictly inside H (y > 0)")
        if self.x_hi <= self.x_lo:
            raise ValueError("slit needs x_lo < x_hi")

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def center(self) -> complex:
        return 0.5 * (self.x_lo + self.x_hi) + 1j * self.y

    def dist(self, z):
        z = _as_complex(z)
        x, y = z.real, z.imag
        return np.hypot(x - np.clip(x, self.x_lo, self.x_hi), y - self.y)

    def sample_points(self, m: int) -> np.ndarray:
        xs = np.linspace(self.x_lo, self.x_hi, m)
        return xs + 1j * self.y

    def to_json(self):
        return {"y": self.y, "x_lo": self.x_lo, "x_hi": self.x_hi}


def _slit_gap(a: Slit, b: Slit) -> float:
    dx = max(a.x_lo - b.x_hi, b.x_lo - a.x_hi, 0.0)
    return float(np.hypot(dx, a.y - b.y))


@dataclass(frozen=True)
class SlitDomain:
    """H minus finitely many disjoint horizontal slits."""

    slits: Tuple[Slit, ...]

    def __post_init__(self):
        object.__setattr__(self, "slits", tuple(self.slits))
        for i, a in enumerate(self.slits):
            for b in self.slits[i + 1:]:
                if _slit_gap(a, b) <= 0.0:
                    raise ValueError("slits must be pairwise disjoint")

    def __len__(self) -> int:
        return len(self.slits)

    def dist(self, z):
        if not self.slits:
            z = _as_complex(z)
            return np.full(z.shape, np.inf)
        d = self.slits[0].dist(z)
        for s in self.slits[1:]:
            d = np.minimum(d, s.dist(z))
        return d

    def min_gap(self) -> float:
        """Smallest distance between distinct slits (inf for < 2 slits)."""
        n = len(self.slits)
        if n < 2:
            return np.inf
        return min(_slit_gap(a, b) for i, a in enumerate(self.slits)
                   for b in self.slits[i + 1:])

    def to_json(self):
        return {"slits": [s.to_json() for s in self.slits]}


def slit_domain_from_json(obj) -> SlitDomain:
    return SlitDomain(tuple(Slit(**s) for s in obj["slits"]))


EMPTY_SLITS = SlitDomain(())


@dataclass(frozen=True)
class Ball:
    """Disk used as an absorbing probe (center may sit on the real axis)."""

    center: Point
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")


# ---------------------------------------------------------------------------
# Hull validation (grid certifier)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HullDiagnostics:
    """Outcome of the flood-fill hull certifier.

    The checks run on a raster of the hull at the requested resolution,
    so a pass is evidence at that resolution, not a proof.
    """

    passed: bool
    reason: str
    witness: Optional[Tuple[float, float]]
    resolution: float
    window: Tuple[float, float, float]
    notes: Tuple[str, ...]


def _raster_window(h: Hull, resolution: float) -> Tuple[float, float, float]:
    ext = h.extent(resolution)
    if ext is None:
        half = 10.0 * max(1.0, h.sup_im)
        ext = (-half, half)
    top = h.sup_im
    pad = max(4.0 * resolution, 0.25 * max(1.0, top))
    return (ext[0] - pad, ext[1] + pad, top + pad)


def rasterize_hull(h: Hull, window: Tuple[float, float, float],
                   resolution: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mark grid cells meeting the hull. Returns (mask, xs, ys) with
    mask[i, j] True when the cell centered at (xs[j], ys[i]) is within
    half a cell diagonal of the hull."""
    x0, x1, ytop = window
    xs = np.arange(x0 + resolution / 2, x1, resolution)
    ys = np.arange(resolution / 2, ytop, resolution)
    zx, zy = np.meshgrid(xs, ys)
    z = zx + 1j * zy
    thresh = resolution * np.sqrt(2.0) / 2.0
    mask = h.dist(z) <= thresh
    return mask, xs, ys


_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
_EIGHT = np.ones((3, 3), dtype=int)


def analyze_masks(hull_mask: np.ndarray) -> Tuple[bool, str, Optional[Tuple[int, int]]]:
    """Connectivity checks on a rasterized hull.

    Conditions for a pass:

    1. the free cells (complement within the window) form one component,
       so no region of H \\ F is sealed off;
    2. the hull cells form at most one component;
    3. that component touches the real axis (bottom row).

    Violations of 2 or 3 are reported as the sphere-complement simple
    connectivity failure of the complement domain.  Returns
    (ok, reason, witness_cell) with witness in (row, col) indices.
    """
    free = ~hull_mask
    free_labels, n_free = ndimage.label(free, structure=_FOUR)
    if n_free > 1:
        # the unbounded component is the one touching the window top
        top_labels = set(np.unique(free_labels[-1, :])) - {0}
        sealed = [lab for lab in range(1, n_free + 1) if lab not in top_labels]
        if sealed:
            where = np.argwhere(free_labels == sealed[0])
            return False, "complement of hull is disconnected (sealed pocket)", tuple(where[0])
        # multiple components all touching the top cannot happen on a
        # connected window, but keep a conservative failure just in case
        return False, "complement of hull is disconnected", None
    hull_labels, n_hull = ndimage.label(hull_mask, structure=_EIGHT)
    if n_hull > 1:
        # witness: a cell of the second component
        where = np.argwhere(hull_labels == 2)
        return False, "complement not simply connected", tuple(where[0])
    if n_hull == 1:
        bottom = hull_labels[0, :]
        if not np.any(bottom == 1):
            where = np.argwhere(hull_labels == 1)
            return False, "complement not simply connected", tuple(where[0])
    return True, "ok", None


def validate_hull(h: Hull, grid_resolution: float) -> HullDiagnostics:
    """Certify the hull axioms on a grid at the given resolution.

    Flood-fills a padded raster of the hull and checks that the free
    region is connected and that the hull raster forms a single
    component attached to the real axis.  This is a certifier at the
    given resolution, not a topological proof.
    """
    if grid_resolution <= 0:
        raise ValueError("grid_resolution must be positive")
    notes = ["grid certifier: evidence at the stated resolution, not a proof"]
    if h.is_empty():
        window = (-1.0, 1.0, 1.0)
        return HullDiagnostics(True, "ok", None, grid_resolution, window,
                               tuple(notes))
    window = _raster_window(h, grid_resolution)
    if h.extent(grid_resolution) is None:
        notes.append("horizontally unbounded hull: checked on a finite window")
    mask, xs, ys = rasterize_hull(h, window, grid_resolution)
    ok, reason, cell = analyze_masks(mask)
    witness = None
    if cell is not None:
        witness = (float(xs[cell[1]]), float(ys[cell[0]]))
    return HullDiagnostics(ok, reason, witness, grid_resolution, window,
                           tuple(notes))
