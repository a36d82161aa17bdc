"""Covering constructions: greedy 5r subcovers, Whitney collar covers with a
partition of unity, and cigar-shaped chains of balls in uniform domains."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.sparse import csgraph, lil_matrix

from .errors import ConstructionError, ParameterError, PreconditionError
from .geometry import (
    Ball,
    DomainShape,
    LipschitzGraph,
    Polygon,
    Rectangle,
    distance_to_boundary,
)

__all__ = [
    "BallCover",
    "ChainOfBalls",
    "WhitneyCover",
    "bump_profile",
    "greedy_disjoint_subcover",
    "whitney_collar_cover",
    "uniform_chain",
    "validate_chain",
]


def bump_profile(z):
    """The fixed polynomial bump max(0, 1 - z^2)^2 on scaled distance z."""
    z = np.asarray(z, dtype=float)
    return np.clip(1.0 - z * z, 0.0, None) ** 2


@dataclass
class BallCover:
    balls: list
    role: str
    overlap_bound: int = 0

    def to_json(self):
        return {
            "role": self.role,
            "overlap_bound": int(self.overlap_bound),
            "balls": [b.to_json() for b in self.balls],
        }

    @staticmethod
    def from_json(obj):
        return BallCover(
            [Ball.from_json(b) for b in obj["balls"]],
            obj["role"],
            int(obj["overlap_bound"]),
        )


def greedy_disjoint_subcover(balls):
    """Pairwise-disjoint sublist whose 5x dilations cover the input union.

    Greedy by decreasing radius (ties broken lexicographically on center for
    determinism): a ball is kept iff it is disjoint from every ball kept so
    far.  Any discarded ball then meets a kept ball of radius >= its own, so
    the discarded ball sits inside the 5x dilation of that kept ball.
    """
    balls = list(balls)
    if not balls:
        raise ParameterError("greedy subcover needs a nonempty ball list")
    order = sorted(range(len(balls)), key=lambda i: (-balls[i].radius, balls[i].center))
    kept = []
    centers = []
    radii = []
    for i in order:
        b = balls[i]
        c = b.center_array
        if not kept:
            kept.append(b)
            centers.append(c)
            radii.append(b.radius)
            continue
        gaps = np.linalg.norm(np.asarray(centers) - c, axis=1)
        if np.all(gaps > np.asarray(radii) + b.radius):
            kept.append(b)
            centers.append(c)
            radii.append(b.radius)
    return kept


# ---------------------------------------------------------------------------
# Whitney collar cover
# ---------------------------------------------------------------------------

# Construction parameters (see whitney_collar_cover).  The lattice step,
# selection window, greedy coverage radius and normalization floor are chosen
# together so that every exterior collar point is guaranteed a weight sum of
# exactly one: a point's nearest lattice node is off by at most
# sqrt(2)/16 * scale <= 0.194 rho, the greedy cover reaches that node within
# 0.75 rho, and the bump at the combined offset 0.944 rho is still above the
# floor 0.01.  The 0.75 coverage radius (rather than a tighter one) keeps
# the measured overlap of the dilated balls near 60 in 2d.
_LATTICE_FRACTION = 1.0 / 8.0     # lattice step = fraction of band scale
_WINDOW = (0.91, 2.09)            # candidate distance window, units of band scale
_COVER_FRACTION = 0.75            # greedy must cover targets within this * rho
_S_MIN = 0.01                     # partition normalization floor


@dataclass
class WhitneyCover:
    """Collar cover by exterior balls B(y_i, rho_i) with rho_i = d(y_i)/2.

    Every ball satisfies the sandwich d(y_i) <= 4 rho_i <= 2 d(y_i) exactly
    (both sides are equalities up to floating point since rho = d/2).  The
    partition of unity is bump-based, normalized over overlapping balls and
    clamped below by ``s_min``; its sum is exactly 1 at every exterior point
    with boundary distance in [d_floor, 6 eps0] and 0 beyond the collar.
    """

    domain: DomainShape
    eps0: float
    d_floor: float
    balls: list = field(default_factory=list)
    overlap_bound: int = 0
    s_min: float = _S_MIN
    role: str = "whitney"

    def __post_init__(self):
        self._centers = (
            np.array([b.center_array for b in self.balls])
            if self.balls
            else np.zeros((0, self.domain.ndim))
        )
        self._radii = np.array([b.radius for b in self.balls])

    @property
    def centers(self):
        return self._centers

    @property
    def radii(self):
        return self._radii

    def bump_values(self, points):
        """Sparse-ish matrix of raw bump values b_i(x): shape (npoints, nballs)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tree = cKDTree(pts)
        out = lil_matrix((len(pts), len(self.balls)))
        for i, (c, r) in enumerate(zip(self._centers, self._radii)):
            idx = tree.query_ball_point(c, r)
            if not idx:
                continue
            idx = np.asarray(idx)
            z = np.linalg.norm(pts[idx] - c, axis=1) / r
            out[idx, i] = bump_profile(z)
        return out.tocsr()

    def partition_weights(self, points):
        """Matrix h_i(x) (npoints, nballs): h_i = b_i / max(sum_j b_j, s_min)."""
        b = self.bump_values(points)
        s = np.asarray(b.sum(axis=1)).ravel()
        denom = np.maximum(s, self.s_min)
        d_inv = 1.0 / denom
        h = b.multiply(d_inv[:, None]).tocsr()
        return h

    def partition_sum(self, points):
        h = self.partition_weights(points)
        return np.asarray(h.sum(axis=1)).ravel()

    def membership_counts(self, points, dilation=2.0):
        """Number of dilated balls containing each point."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        tree = cKDTree(pts)
        counts = np.zeros(len(pts), dtype=int)
        for c, r in zip(self._centers, self._radii):
            idx = tree.query_ball_point(c, dilation * r)
            counts[idx] += 1
        return counts

    def estimate_weight_gradient_constant(self, rng=None, n_balls=64, n_probe=24):
        """Measured sup |Dh_i| * rho_i over sampled balls (finite differences)."""
        rng = np.random.default_rng(rng)
        nb = len(self.balls)
        pick = rng.choice(nb, size=min(n_balls, nb), replace=False)
        worst = 0.0
        for i in pick:
            c, r = self._centers[i], self._radii[i]
            pts = c + rng.uniform(-r, r, size=(n_probe, self.domain.ndim))
            eps = 1e-6 * r
            for k in range(self.domain.ndim):
                step = np.zeros(self.domain.ndim)
                step[k] = eps
                hp = self.partition_weights(pts + step)[:, i].toarray().ravel()
                hm = self.partition_weights(pts - step)[:, i].toarray().ravel()
                worst = max(worst, float(np.max(np.abs(hp - hm)) / (2 * eps) * r))
        return worst

    def to_json(self):
        return {
            "role": self.role,
            "eps0": self.eps0,
            "d_floor": self.d_floor,
            "s_min": self.s_min,
            "overlap_bound": int(self.overlap_bound),
            "balls": [b.to_json() for b in self.balls],
        }


def _lattice_points(lo, hi, step):
    axes = [np.arange(lo[k], hi[k] + step, step) for k in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _greedy_cover_band(candidates, radii, targets, cover_fraction):
    """Greedy set cover: pick candidate balls until every target point lies
    within cover_fraction * rho of a picked center.  Returns picked indices."""
    tree = cKDTree(targets)
    cover_lists = [
        tree.query_ball_point(c, cover_fraction * r)
        for c, r in zip(candidates, radii)
    ]
    uncovered = np.ones(len(targets), dtype=bool)
    gains = np.array([len(ix) for ix in cover_lists])
    picked = []
    while uncovered.any():
        # lazy greedy: gains only ever shrink
        while True:
            i = int(np.argmax(gains))
            true_gain = int(np.sum(uncovered[cover_lists[i]])) if gains[i] > 0 else 0
            if true_gain == gains[i]:
                break
            gains[i] = true_gain
        if gains[i] == 0:
            raise ConstructionError("greedy band cover stalled with uncovered targets")
        picked.append(i)
        uncovered[cover_lists[i]] = False
        gains[i] = 0
    return picked


def whitney_collar_cover(domain: DomainShape, eps0: float, d_floor=None):
    """Whitney-type ball cover of the exterior collar of a domain.

    Balls are centered at exterior lattice points y with rho = d(y, domain)/2,
    selected bandwise on dyadic distance scales 3*eps0*2^-j and thinned by a
    greedy set cover.  The union lies inside the 10*eps0 collar and covers
    every exterior point with boundary distance in [d_floor, 4*eps0] (indeed
    up to 6*eps0); coverage below d_floor is truncated, as any finite
    Whitney family must be.
    """
    if eps0 <= 0:
        raise ParameterError("eps0 must be positive")
    if 10.0 * eps0 > domain.margin:
        raise ConstructionError(
            f"collar 10*eps0 = {10 * eps0:.4g} escapes the working box "
            f"(margin {domain.margin:.4g}); choose a smaller eps0"
        )
    if d_floor is None:
        d_floor = eps0 / 8.0
    if not (0 < d_floor <= 3.0 * eps0):
        raise ParameterError("d_floor must lie in (0, 3*eps0]")

    n_bands = int(np.ceil(np.log2(3.0 * eps0 / d_floor))) + 1
    lo, hi = domain.bbox
    balls = []
    all_targets = []
    for j in range(n_bands):
        scale = 3.0 * eps0 * 0.5**j  # band: boundary distance in (scale, 2*scale]
        step = scale * _LATTICE_FRACTION
        # lattice over the bbox inflated by the collar width
        pts = _lattice_points(lo - 7.0 * eps0, hi + 7.0 * eps0, step)
        d = domain._boundary_distance(pts)
        outside = ~domain.contains(pts)
        window = outside & (d > _WINDOW[0] * scale) & (d <= _WINDOW[1] * scale)
        cand = pts[window]
        cand_d = d[window]
        if len(cand) == 0:
            continue
        radii = cand_d / 2.0
        picked = _greedy_cover_band(cand, radii, cand, _COVER_FRACTION)
        for i in picked:
            balls.append(Ball(tuple(cand[i]), radii[i]))
        all_targets.append(cand)
    if not balls:
        raise ConstructionError("no collar balls could be constructed")

    cover = WhitneyCover(domain, eps0, d_floor, balls)
    targets = np.vstack(all_targets)
    cover.overlap_bound = int(cover.membership_counts(targets, dilation=2.0).max())
    return cover


# ---------------------------------------------------------------------------
# Chains of balls in uniform domains
# ---------------------------------------------------------------------------

@dataclass
class ChainOfBalls:
    """Finite cigar chain between interior points x and y.

    Invariants (see validate_chain): 6*B_k inside the domain, consecutive
    balls intersect, radii change by at most a factor 2, and the radius sum
    is c_prime * |x - y| with c_prime recorded.
    """

    x: np.ndarray
    y: np.ndarray
    balls: list
    truncation_radius: float
    c_prime: float

    def to_json(self):
        return {
            "x": np.asarray(self.x).tolist(),
            "y": np.asarray(self.y).tolist(),
            "truncation_radius": self.truncation_radius,
            "c_prime": self.c_prime,
            "balls": [b.to_json() for b in self.balls],
        }


def _domain_polygon(domain):
    """A shapely-backed Polygon view of the domain, for path planning."""
    if isinstance(domain, Polygon):
        return domain
    if isinstance(domain, Rectangle):
        (x0, y0), (x1, y1) = domain.lo, domain.hi
        return Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])
    if isinstance(domain, LipschitzGraph):
        lo, _ = domain.bbox
        verts = list(np.column_stack([domain.ys, domain.hs]))
        verts += [(domain.ys[-1], lo[1]), (domain.ys[0], lo[1])]
        return Polygon(verts)
    raise ParameterError(f"no polygonal view for domain kind {domain.kind!r}")


def _interior_path(domain, x, y):
    """Piecewise-linear interior path from x to y (list of waypoints)."""
    poly = _domain_polygon(domain)
    if poly.segment_inside(x, y):
        return np.array([x, y])
    # visibility graph over the endpoints and inward-offset polygon vertices
    delta = 1e-3 * domain.diameter
    nodes = [np.asarray(x, float), np.asarray(y, float)]
    verts = poly.vertices
    nv = len(verts)
    for i in range(nv):
        v = verts[i]
        a = verts[(i - 1) % nv] - v
        b = verts[(i + 1) % nv] - v
        a = a / (np.linalg.norm(a) + 1e-300)
        b = b / (np.linalg.norm(b) + 1e-300)
        bis = a + b
        nb = np.linalg.norm(bis)
        if nb < 1e-12:
            continue
        bis = bis / nb
        for sgn in (1.0, -1.0):
            cand = v + sgn * delta * bis
            if poly.contains(cand[None, :])[0]:
                nodes.append(cand)
                break
    m = len(nodes)
    w = np.full((m, m), np.inf)
    for i in range(m):
        w[i, i] = 0.0
        for j in range(i + 1, m):
            if poly.segment_inside(nodes[i], nodes[j]):
                w[i, j] = w[j, i] = np.linalg.norm(nodes[i] - nodes[j])
    dist, pred = csgraph.shortest_path(w, return_predecessors=True, indices=0)
    if not np.isfinite(dist[1]):
        raise ConstructionError("no interior path between the endpoints")
    path = [1]
    while path[-1] != 0:
        path.append(pred[0, path[-1]])
    return np.array([nodes[i] for i in reversed(path)])


def uniform_chain(domain, x, y, c, r_floor=None, budget=200000):
    """Chain of balls joining x and y inside a uniform domain.

    Ball centers march along the interior path (segment, or a shortest
    visibility-graph path for non-convex polygons) at steps of half the local
    radius; radii are min((1/c) min(t, T - t), d(center)) / 6, which makes
    every invariant hold by construction.  The chain is truncated near each
    endpoint once the radius drops below r_floor (default 2^-20 |x - y|).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not bool(domain.contains(x[None, :])[0]) or not bool(domain.contains(y[None, :])[0]):
        raise PreconditionError("chain endpoints must be interior points")
    gap = float(np.linalg.norm(x - y))
    if gap == 0.0:
        return ChainOfBalls(x, y, [], 0.0, 0.0)
    if c <= 0:
        raise ParameterError("uniformity constant must be positive")
    if r_floor is None:
        r_floor = gap * 2.0**-20

    path = _interior_path(domain, x, y)
    seglen = np.linalg.norm(np.diff(path, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seglen)])
    T = float(cum[-1])

    def gamma(t):
        out = np.empty(path.shape[1])
        for k in range(path.shape[1]):
            out[k] = np.interp(t, cum, path[:, k])
        return out

    def radius_at(t, z):
        d = distance_to_boundary(domain, z)
        m = min(min(t, T - t) / c, d)
        return m / 6.0 * (1.0 - 1e-12)

    balls = []
    t = min(6.0 * c * r_floor, T / 2.0)
    t_stop = T - t
    it = 0
    while t <= t_stop:
        z = gamma(t)
        r = radius_at(t, z)
        if r <= 0:
            raise ConstructionError("path touches the boundary", partial=balls)
        balls.append(Ball(tuple(z), r))
        t += r / 2.0
        it += 1
        if it > budget:
            partial = ChainOfBalls(x, y, balls, r_floor, np.sum([b.radius for b in balls]) / gap)
            raise ConstructionError("chain iteration budget exhausted", partial=partial)
    total = float(np.sum([b.radius for b in balls])) if balls else 0.0
    return ChainOfBalls(x, y, balls, float(r_floor), total / gap)


def validate_chain(chain: ChainOfBalls, domain) -> dict:
    """Exact per-ball invariant checks for a chain."""
    balls = chain.balls
    report = {
        "n_balls": len(balls),
        "six_b_inside": True,
        "consecutive_intersect": True,
        "radius_ratio_ok": True,
        "c_prime": chain.c_prime,
    }
    for k, b in enumerate(balls):
        d = distance_to_boundary(domain, b.center_array)
        if 6.0 * b.radius > d:
            report["six_b_inside"] = False
        if k + 1 < len(balls):
            nxt = balls[k + 1]
            if not b.intersects(nxt):
                report["consecutive_intersect"] = False
            ratio = nxt.radius / b.radius
            if not (0.5 <= ratio <= 2.0):
                report["radius_ratio_ok"] = False
    return report
