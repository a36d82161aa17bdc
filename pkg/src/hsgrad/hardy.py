"""Hardy inequalities, capacities and Hausdorff content: the logarithmic
boundary-weight counterexample, variational capacity with witness bounds,
content bracketing, fatness probes and reflection diagnostics."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import ParameterError
from .fields import SampledField, lp_quasinorm
from .geometry import lipschitz_reflection, reflection_displacement_constant
from .lp import solve_capacity_lp
from .maximal import power_maximal_composite, radius_ladder

__all__ = [
    "counterexample_log_weight",
    "hausdorff_content",
    "hardy_capacity",
    "witness_capacity_bound",
    "fatness_probe",
    "reflection_displacement_check",
    "capacity_pointwise_bound_check",
    "hardy_quotient_ratio",
]


def counterexample_log_weight(h_min, delta=1.0 / 64.0):
    """One-dimensional Hardy failure for u(x) = 1 / log(1/x).

    On the geometric grid x_j = exp(-j delta) between 1/e and h_min, the
    total variation of u telescopes exactly to 1 - 1/log(1/h_min) < 1,
    while the boundary-weight sum (u(x)/x integrated with the geometric
    midpoint rule) grows like log log(1/h_min) without bound.  ``h_min``
    must be exp(-T) with T * delta^-1 an integer so the grid hits both
    endpoints exactly.
    """
    if not (0 < h_min < np.exp(-1.0)):
        raise ParameterError("h_min must lie in (0, 1/e)")
    inv = 1.0 / delta
    t_total = np.log(1.0 / h_min)
    j_start = round(inv)
    j_end = round(t_total * inv)
    if abs(j_start - inv) > 1e-9 or abs(j_end - t_total * inv) > 1e-9:
        raise ParameterError("grid must hit 1/e and h_min exactly; adjust delta")

    j = np.arange(j_start, j_end + 1)
    x = np.exp(-j * delta)
    u = 1.0 / (j * delta)  # u(x_j) = 1 / log(1/x_j)

    # total variation: u is monotone, so the discrete sum telescopes exactly
    l1_du = float(np.sum(np.abs(np.diff(u))))
    exact_l1 = 1.0 - 1.0 / t_total

    # Hardy sum with cell midpoints taken in log scale
    xm = np.exp(-(j[:-1] + 0.5) * delta)
    um = 1.0 / ((j[:-1] + 0.5) * delta)
    dx = x[:-1] - x[1:]
    hardy_sum = float(np.sum(um / xm * dx))

    return {
        "grid": x,
        "values": u,
        "l1_du": l1_du,
        "l1_du_exact": exact_l1,
        "hardy_sum": hardy_sum,
        "t_total": float(t_total),
    }


# ---------------------------------------------------------------------------
# Hausdorff content
# ---------------------------------------------------------------------------

def hausdorff_content(points, s, ladder_density=2):
    """Bracket the s-content of a finite sample set (normalization c = 1).

    Upper bound: greedy cover by balls centered at sample points with ladder
    radii, each step taking the cheapest r^s per newly covered point seeded
    at the most isolated uncovered point.  Lower bound: the best uniform
    Frostman weight w = min over candidate balls of r^s / (points inside),
    giving w * |E|; weak duality against the same candidate family makes
    lower <= upper structurally.  Box-counting values at the ladder scales
    are returned as diagnostics only.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if s <= 0:
        raise ParameterError("content exponent must be positive")
    m = len(pts)
    if m == 1:
        return {"lower": 0.0, "upper": 0.0, "balls": [(tuple(pts[0]), 0.0)], "box_counts": {}}
    tree = cKDTree(pts)
    dmin = max(float(tree.query(pts, k=2)[0][:, 1].min()), 1e-300)
    diam = float(np.linalg.norm(pts.max(0) - pts.min(0))) or dmin
    radii = radius_ladder(dmin / 2.0, diam, ladder_density)

    counts = np.array([[len(tree.query_ball_point(p, r)) for r in radii] for p in pts])
    w_star = float(np.min(radii[None, :] ** s / counts))
    lower = w_star * m

    covered = np.zeros(m, dtype=bool)
    balls = []
    upper = 0.0
    while not covered.all():
        # most isolated uncovered point: max distance to the covered set
        unc = np.flatnonzero(~covered)
        if covered.any():
            dcov = cdist(pts[unc], pts[covered]).min(axis=1)
            seed = unc[int(np.argmax(dcov))]
        else:
            seed = unc[0]
        best = None
        for r in radii:
            idx = tree.query_ball_point(pts[seed], r)
            gain = int(np.sum(~covered[idx]))
            if gain == 0:
                continue
            score = r**s / gain
            if best is None or score < best[0]:
                best = (score, r, idx)
        _, r, idx = best
        covered[idx] = True
        balls.append((tuple(pts[seed]), float(r)))
        upper += r**s

    box_counts = {float(r): int(np.ceil(m / counts[:, k].mean())) for k, r in enumerate(radii)}
    return {"lower": lower, "upper": float(upper), "balls": balls, "box_counts": box_counts}


# ---------------------------------------------------------------------------
# Capacity
# ---------------------------------------------------------------------------

def _capacity_pairs(points, max_pairs=30000, rng=0):
    """Short nearest-neighbor pairs plus seeded random long pairs."""
    from .fields import MetricCloud
    from .gradients import _all_pairs, _subsampled_pairs

    m = len(points)
    if m * (m - 1) // 2 <= max_pairs:
        return _all_pairs(m)
    cloud = MetricCloud(points, np.ones(m))
    return _subsampled_pairs(cloud, max_pairs, rng)


def hardy_capacity(points, weights, e_mask, u_mask, max_pairs=30000, rng=0):
    """Discrete variational p=1 capacity of (E, U) with its potential."""
    ii, jj = _capacity_pairs(np.asarray(points, float), max_pairs, rng)
    value, phi, g = solve_capacity_lp(points, weights, e_mask, u_mask, ii, jj)
    return {"capacity": value, "potential": phi, "gradient": g, "n_pairs": len(ii)}


def witness_capacity_bound(points, weights, e_mask, u_mask, max_pairs=30000, rng=0):
    """Upper bound from the explicit cone potential 1 - d(x,E)/d(E, U^c).

    The witness potential is clipped to [0, 1], equals 1 on E and 0 off U;
    its minimal admissible gradient is found by the p=1 LP over the same
    pair family used by ``hardy_capacity``, so the joint capacity LP can
    never exceed this bound.
    """
    from .lp import MinimalGradientLP, solve_min_gradient_p1

    points = np.atleast_2d(np.asarray(points, dtype=float))
    e_mask = np.asarray(e_mask, bool)
    u_mask = np.asarray(u_mask, bool)
    if not e_mask.any() or u_mask.all():
        raise ParameterError("need a nonempty E and a nonempty complement of U")
    d_e = cdist(points, points[e_mask]).min(axis=1)
    sep = float(cdist(points[e_mask], points[~u_mask]).min())
    if sep <= 0:
        raise ParameterError("E touches the complement of U")
    phi = np.clip(1.0 - d_e / sep, 0.0, 1.0)
    phi[e_mask] = 1.0
    phi[~u_mask] = 0.0

    ii, jj = _capacity_pairs(points, max_pairs, rng)
    dist = np.linalg.norm(points[ii] - points[jj], axis=1)
    rhs = np.abs(phi[ii] - phi[jj]) / dist
    lp = MinimalGradientLP(len(points), ii, jj, rhs, np.asarray(weights, float))
    sol = solve_min_gradient_p1(lp)
    return {"bound": sol.objective, "potential": phi, "gradient": sol.g}


def fatness_probe(e_points, x, r, grid_per_r=8, max_pairs=20000, rng=0):
    """Capacity density cap(E cap B(x,r), B(x,2r)) / r^(n-1) on a local grid.

    Builds a uniform grid on [x - 2.5r, x + 2.5r]^n with ``grid_per_r``
    cells per unit r, marks E by snapping the given points to grid nodes,
    and solves the (subsampled, hence lower-bounding) capacity LP -- the
    conservative direction for certifying fatness from below fails softly,
    so the ratio is reported as an estimate with the pair count.
    """
    e_points = np.atleast_2d(np.asarray(e_points, dtype=float))
    x = np.asarray(x, dtype=float)
    n = e_points.shape[1]
    h = r / grid_per_r
    axes = [np.arange(x[k] - 2.5 * r + h / 2, x[k] + 2.5 * r, h) for k in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    w = np.full(len(pts), h**n)
    d_x = np.linalg.norm(pts - x, axis=1)
    near_e = cdist(pts, e_points).min(axis=1) <= h
    e_mask = near_e & (d_x <= r)
    u_mask = d_x < 2.0 * r
    if not e_mask.any():
        raise ParameterError("E does not meet the probe ball at this resolution")
    ii, jj = _capacity_pairs(pts, max_pairs, rng)
    value, phi, g = solve_capacity_lp(pts, w, e_mask, u_mask, ii, jj)
    return {"capacity": value, "ratio": value / r ** (n - 1), "n_grid": len(pts)}


def reflection_displacement_check(domain, rng=0, n_samples=200):
    """Empirical vs geometric constant for the graph reflection displacement.

    Samples interior points under the Lipschitz graph, reflects them across
    it, and reports max |H(x) - x| / d(x, boundary) against the closed-form
    bound 2 sqrt(1 + L^2).
    """
    rng = np.random.default_rng(rng)
    lo, hi = domain.bbox
    worst = 0.0
    got = 0
    while got < n_samples:
        p = rng.uniform(lo, hi)
        if not bool(domain.contains(p[None, :])[0]):
            continue
        d = domain._boundary_distance(p[None, :])[0]
        if d <= 0:
            continue
        h = lipschitz_reflection(domain, p)
        worst = max(worst, float(np.linalg.norm(h - p) / d))
        got += 1
    geometric = reflection_displacement_constant(domain)
    return {"empirical": worst, "geometric": geometric, "ok": worst <= geometric * (1 + 1e-9)}


def capacity_pointwise_bound_check(f: SampledField, g_values, center_idx, r, q):
    """Observed constant in |u(x)| <= r c (M(g^q)(x))^(1/q).

    For a field supported in the r-ball around the given cloud point,
    evaluates the composite maximal function of the supplied gradient at
    that point and reports the observed ratio (the empirical c(n, q)).
    """
    if not (0 < q < 1):
        raise ParameterError("exponent q must be in (0, 1)")
    cloud = f.cloud
    x = cloud.points[center_idx]
    d = np.linalg.norm(cloud.points - x, axis=1)
    outside = d > r
    if np.any(np.abs(f.effective_values[outside]) > 0):
        raise ParameterError("field is not supported in the stated ball")
    mgq = power_maximal_composite(SampledField(cloud, np.asarray(g_values, float)), q)
    denom = r * mgq[center_idx]
    val = abs(float(f.effective_values[center_idx]))
    if denom == 0:
        return {"chat": np.inf if val > 0 else 0.0, "degenerate": True}
    return {"chat": val / denom, "degenerate": False}


def hardy_quotient_ratio(f: SampledField, domain, p=1.0, mode="ball"):
    """Quotient of the boundary-weighted norm by the gradient norm.

    Computes (sum w (|u|/d)^p)^(1/p) / (sum w g^p)^(1/p) with g the
    calibrated canonical upper gradient of u (boundary-capped averages), the
    discrete shadow of the Hardy inequality on the domain.
    """
    from .gradients import canonical_gradient

    d = domain._boundary_distance(f.cloud.points)
    if np.any(d <= 0):
        raise ParameterError("all sample points must be strictly interior")
    num = lp_quasinorm(np.abs(f.effective_values) / d, f.cloud.weights, p)
    g, const = canonical_gradient(f, mode=mode, domain=domain)
    den = lp_quasinorm(g.effective_values, f.cloud.weights, p)
    ratio = np.inf if den == 0 and num > 0 else (0.0 if num == 0 else num / den)
    return {"ratio": float(ratio), "numerator": num, "denominator": den, "constant": const}
