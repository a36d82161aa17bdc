"""Balls, domains and distance-to-boundary oracles.

Domains are restricted to shapes whose boundary distance can be computed
exactly (up to floating point): axis rectangles, simple polygons, subgraphs
of a sampled Lipschitz function, and complements of such sets inside a
window.  This keeps the geometric invariants of covers and chains
assertable without tolerances.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import shapely
from shapely.geometry import LineString, Point, Polygon as _ShapelyPolygon
from shapely.ops import nearest_points

from .errors import DomainError, ParameterError

__all__ = [
    "Ball",
    "DomainShape",
    "Rectangle",
    "Polygon",
    "LipschitzGraph",
    "ComplementOfSet",
    "distance_to_boundary",
    "lipschitz_reflection",
    "load_domain",
    "domain_to_json",
]


@dataclass(frozen=True)
class Ball:
    """Euclidean ball with nonnegative radius.  Treated as closed."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.radius < 0:
            raise ParameterError(f"ball radius must be >= 0, got {self.radius}")

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    @property
    def ndim(self) -> int:
        return len(self.center)

    def dilate(self, lam: float) -> "Ball":
        """lam*B: same center, radius scaled by lam."""
        if lam < 0:
            raise ParameterError("dilation factor must be >= 0")
        return Ball(self.center, lam * self.radius)

    def contains_points(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        d = np.linalg.norm(pts - self.center_array, axis=1)
        return d <= self.radius

    def intersects(self, other: "Ball") -> bool:
        gap = np.linalg.norm(self.center_array - other.center_array)
        return gap <= self.radius + other.radius

    def to_json(self) -> dict:
        return {"center": list(self.center), "radius": self.radius}

    @staticmethod
    def from_json(obj: dict) -> "Ball":
        return Ball(tuple(obj["center"]), float(obj["radius"]))


class DomainShape:
    """Base class: open domain with an exact distance-to-boundary oracle.

    ``bbox`` is the geometric bounding box of the closure; all distance
    queries are accepted inside the *working box*, the bbox inflated by
    ``margin`` on every side (default: the bbox diameter).
    """

    kind = "abstract"

    @property
    def ndim(self) -> int:
        return len(self.bbox[0])

    @property
    def bbox(self):
        raise NotImplementedError

    @property
    def margin(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))

    @property
    def diameter(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))

    def working_box(self):
        lo, hi = self.bbox
        m = self.margin
        return np.asarray(lo, dtype=float) - m, np.asarray(hi, dtype=float) + m

    def contains(self, points) -> np.ndarray:
        """True for interior points.  Vectorized; accepts (m,n) or (n,)."""
        raise NotImplementedError

    def _boundary_distance(self, points) -> np.ndarray:
        """Unsigned distance to the boundary, defined everywhere."""
        raise NotImplementedError

    def boundary_projection(self, point) -> np.ndarray:
        """A nearest boundary point to ``point``."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    # convenience for scalar queries
    def signed_location(self, point):
        x = np.asarray(point, dtype=float)
        inside = bool(self.contains(x[None, :])[0])
        d = float(self._boundary_distance(x[None, :])[0])
        return inside, d


def _as_points(x):
    pts = np.asarray(x, dtype=float)
    scalar = pts.ndim == 1
    return np.atleast_2d(pts), scalar


def distance_to_boundary(domain: DomainShape, x):
    """d(x, boundary of the domain); raises DomainError outside the working box."""
    pts, scalar = _as_points(x)
    lo, hi = domain.working_box()
    if np.any(pts < lo - 1e-12) or np.any(pts > hi + 1e-12):
        raise DomainError("query point outside the domain working box")
    d = domain._boundary_distance(pts)
    return float(d[0]) if scalar else d


class Rectangle(DomainShape):
    """Open axis-aligned box."""

    kind = "rectangle"

    def __init__(self, lo, hi):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ParameterError("rectangle needs lo < hi componentwise")

    @property
    def bbox(self):
        return self.lo.copy(), self.hi.copy()

    def contains(self, points):
        pts, _ = _as_points(points)
        return np.all((pts > self.lo) & (pts < self.hi), axis=1)

    def _boundary_distance(self, points):
        pts, _ = _as_points(points)
        c = (self.lo + self.hi) / 2
        half = (self.hi - self.lo) / 2
        q = np.abs(pts - c) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(np.max(q, axis=1), 0.0)
        return outside - inside  # |signed distance|

    def boundary_projection(self, point):
        x = np.asarray(point, dtype=float)
        p = np.clip(x, self.lo, self.hi)
        if np.any(p != x):
            return p
        # interior: push to the nearest face
        gaps = np.minimum(x - self.lo, self.hi - x)
        k = int(np.argmin(gaps))
        p = x.copy()
        p[k] = self.lo[k] if x[k] - self.lo[k] <= self.hi[k] - x[k] else self.hi[k]
        return p

    def to_json(self):
        return {"kind": "rectangle", "lo": self.lo.tolist(), "hi": self.hi.tolist()}


class Polygon(DomainShape):
    """Open simple polygon in the plane (convex or not)."""

    kind = "polygon"

    def __init__(self, vertices):
        self.vertices = np.asarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2 or len(self.vertices) < 3:
            raise ParameterError("polygon needs >= 3 planar vertices")
        self._poly = _ShapelyPolygon(self.vertices)
        if not self._poly.is_valid:
            raise ParameterError("polygon is self-intersecting or degenerate")
        self._boundary = self._poly.boundary

    @property
    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def is_convex(self) -> bool:
        return bool(abs(self._poly.convex_hull.area - self._poly.area) < 1e-12 * max(1.0, self._poly.area))

    def contains(self, points):
        pts, _ = _as_points(points)
        return shapely.contains_xy(self._poly, pts[:, 0], pts[:, 1])

    def _boundary_distance(self, points):
        pts, _ = _as_points(points)
        geoms = shapely.points(pts)
        return shapely.distance(self._boundary, geoms)

    def boundary_projection(self, point):
        p = nearest_points(self._boundary, Point(point))[0]
        return np.array([p.x, p.y])

    def segment_inside(self, a, b) -> bool:
        """True if the open segment [a, b] stays in the closed polygon."""
        seg = LineString([tuple(a), tuple(b)])
        return self._poly.buffer(1e-12).contains(seg)

    def to_json(self):
        return {"kind": "polygon", "vertices": self.vertices.tolist()}


class LipschitzGraph(DomainShape):
    """Planar subgraph domain: points strictly below a sampled Lipschitz graph.

    The graph is the piecewise-linear interpolant of (ys, hs); the boundary,
    for distance purposes, is that polyline alone (the domain is unbounded
    downwards within the working box, like a local coordinate chart).
    """

    kind = "lipschitz_graph"

    def __init__(self, ys, hs, lipschitz_constant, depth=None):
        self.ys = np.asarray(ys, dtype=float)
        self.hs = np.asarray(hs, dtype=float)
        if self.ys.ndim != 1 or self.ys.shape != self.hs.shape or len(self.ys) < 2:
            raise ParameterError("graph needs matching 1-D sample arrays")
        if np.any(np.diff(self.ys) <= 0):
            raise ParameterError("graph sample abscissae must be increasing")
        self.lipschitz_constant = float(lipschitz_constant)
        slopes = np.abs(np.diff(self.hs) / np.diff(self.ys))
        if slopes.size and slopes.max() > self.lipschitz_constant + 1e-12:
            raise ParameterError(
                f"sampled slopes up to {slopes.max():.6g} exceed the declared "
                f"Lipschitz constant {self.lipschitz_constant:.6g}"
            )
        width = self.ys[-1] - self.ys[0]
        self.depth = float(depth) if depth is not None else width
        self._polyline = LineString(np.column_stack([self.ys, self.hs]))

    @property
    def bbox(self):
        lo = np.array([self.ys[0], self.hs.min() - self.depth])
        hi = np.array([self.ys[-1], self.hs.max()])
        return lo, hi

    def height(self, y):
        return np.interp(np.asarray(y, dtype=float), self.ys, self.hs)

    def contains(self, points):
        pts, _ = _as_points(points)
        y, t = pts[:, 0], pts[:, 1]
        lo, _hi = self.bbox
        return (y > self.ys[0]) & (y < self.ys[-1]) & (t < self.height(y)) & (t > lo[1])

    def _boundary_distance(self, points):
        pts, _ = _as_points(points)
        geoms = shapely.points(pts)
        return shapely.distance(self._polyline, geoms)

    def boundary_projection(self, point):
        p = nearest_points(self._polyline, Point(point))[0]
        return np.array([p.x, p.y])

    def to_json(self):
        return {
            "kind": "lipschitz_graph",
            "ys": self.ys.tolist(),
            "hs": self.hs.tolist(),
            "lipschitz_constant": self.lipschitz_constant,
            "depth": self.depth,
        }


class ComplementOfSet(DomainShape):
    """The complement of a compact obstacle, viewed inside a window box.

    The window is a viewing frame, not part of the boundary: the distance
    oracle measures distance to the obstacle boundary only.
    """

    kind = "complement"

    def __init__(self, obstacle: DomainShape, window):
        self.obstacle = obstacle
        self.window_lo = np.asarray(window[0], dtype=float)
        self.window_hi = np.asarray(window[1], dtype=float)
        olo, ohi = obstacle.bbox
        if np.any(olo < self.window_lo) or np.any(ohi > self.window_hi):
            raise ParameterError("window must contain the obstacle")

    @property
    def bbox(self):
        return self.window_lo.copy(), self.window_hi.copy()

    def contains(self, points):
        pts, _ = _as_points(points)
        in_window = np.all((pts > self.window_lo) & (pts < self.window_hi), axis=1)
        d = self.obstacle._boundary_distance(pts)
        in_closure = self.obstacle.contains(pts) | (d <= 0)
        return in_window & ~in_closure

    def _boundary_distance(self, points):
        pts, _ = _as_points(points)
        return self.obstacle._boundary_distance(pts)

    def boundary_projection(self, point):
        return self.obstacle.boundary_projection(point)

    def to_json(self):
        return {
            "kind": "complement",
            "obstacle": self.obstacle.to_json(),
            "window": [self.window_lo.tolist(), self.window_hi.tolist()],
        }


def lipschitz_reflection(domain: LipschitzGraph, x):
    """Reflect an interior point of a graph domain across the graph.

    x = (y, t) with t < h(y) maps to (y, 2 h(y) - t).  The map is an
    involution and moves a point by at most 2*sqrt(1 + L^2) times its
    boundary distance (L the Lipschitz constant).
    """
    if not isinstance(domain, LipschitzGraph):
        raise ParameterError("reflection is defined for Lipschitz graph domains")
    x = np.asarray(x, dtype=float)
    if x.shape != (2,):
        raise ParameterError("reflection expects a single planar point")
    y, t = x
    h = float(domain.height(y))
    if not (domain.ys[0] <= y <= domain.ys[-1]):
        raise DomainError("point outside the graph chart")
    if t >= h:
        raise DomainError("point is not strictly below the graph")
    return np.array([y, 2.0 * h - t])


def reflection_displacement_constant(domain: LipschitzGraph) -> float:
    """c1 with |H(x) - x| <= c1 d(x, boundary) for the graph reflection."""
    L = domain.lipschitz_constant
    return 2.0 * float(np.sqrt(1.0 + L * L))


def load_domain(obj) -> DomainShape:
    """Build a domain from a JSON document (dict, JSON string, or path)."""
    if isinstance(obj, (str, bytes)):
        s = obj if isinstance(obj, str) else obj.decode()
        if s.lstrip().startswith("{"):
            obj = json.loads(s)
        else:
            with open(s) as fh:
                obj = json.load(fh)
    kind = obj.get("kind")
    if kind == "rectangle":
        return Rectangle(obj["lo"], obj["hi"])
    if kind == "polygon":
        return Polygon(obj["vertices"])
    if kind == "lipschitz_graph":
        return LipschitzGraph(
            obj["ys"], obj["hs"], obj["lipschitz_constant"], obj.get("depth")
        )
    if kind == "complement":
        return ComplementOfSet(load_domain(obj["obstacle"]), obj["window"])
    raise ParameterError(f"unknown domain kind: {kind!r}")


def domain_to_json(domain: DomainShape) -> dict:
    return domain.to_json()
