"""Whitney-type extension across the boundary: reflected interior balls, the
collar extension operator, and its quality diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .covers import WhitneyCover
from .errors import ConstructionError, ResolutionError
from .fields import MetricCloud, SampledField, lp_quasinorm
from .geometry import Ball, DomainShape, distance_to_boundary
from .maximal import power_maximal_composite

__all__ = [
    "ExtensionPlan",
    "ExtendedField",
    "build_extension_plan",
    "extend",
    "extension_quality",
    "mean_value_comparison",
]

# admissible band for the reflected-to-collar radius ratio
_RATIO_BAND = (0.125, 8.0)
# inward march: dyadic quarter multiples of the center-to-boundary distance,
# mirror position first
_MARCH_STEPS = (4, 3, 5, 2, 6, 1, 7, 8, 10, 12, 16)


@dataclass
class ExtensionPlan:
    """Pairing of collar balls with reflected interior balls.

    Reflected balls have radius half their own boundary distance, so they sit
    strictly inside the domain with separation comparable to their diameter;
    ``radius_ratios`` (r'/rho) stay within a fixed dyadic band and
    ``displacement_ratios`` record |y' - y| / diam(B).
    """

    domain: DomainShape
    cover: WhitneyCover
    reflected: list = field(default_factory=list)
    radius_ratios: np.ndarray = None
    displacement_ratios: np.ndarray = None


def build_extension_plan(domain, cover: WhitneyCover):
    """Choose a reflected interior ball for every collar ball.

    From the collar center y, march inward through its nearest boundary point
    b along the ray y -> b, testing dyadic-quarter multiples of |y - b|
    (the exact mirror image first, which is optimal for a flat boundary);
    the first interior candidate whose half-boundary-distance radius is
    within a factor 8 of the collar radius wins.
    """
    reflected = []
    rratios = []
    dratios = []
    for ball in cover.balls:
        y = ball.center_array
        b = domain.boundary_projection(y)
        gap = float(np.linalg.norm(b - y))
        if gap == 0:
            raise ConstructionError("collar center sits on the boundary", partial=reflected)
        u = (b - y) / gap
        chosen = None
        for k in _MARCH_STEPS:
            z = b + (k / 4.0) * gap * u
            if not bool(domain.contains(z[None, :])[0]):
                continue
            rz = distance_to_boundary(domain, z) / 2.0
            if rz <= 0:
                continue
            ratio = rz / ball.radius
            if _RATIO_BAND[0] <= ratio <= _RATIO_BAND[1]:
                chosen = Ball(tuple(z), float(rz))
                break
        if chosen is None:
            raise ConstructionError(
                f"no admissible reflected ball for collar ball at {ball.center}",
                partial=reflected,
            )
        reflected.append(chosen)
        rratios.append(chosen.radius / ball.radius)
        dratios.append(np.linalg.norm(chosen.center_array - y) / (2.0 * ball.radius))
    return ExtensionPlan(domain, cover, reflected, np.array(rratios), np.array(dratios))


@dataclass
class ExtendedField:
    """A field on the union of interior samples and exterior collar samples."""

    cloud: MetricCloud
    values: np.ndarray
    interior_mask: np.ndarray
    ball_averages: np.ndarray


def _collar_samples(domain, eps0, spacing, floor=0.0, reach=2.5):
    lo, hi = domain.bbox
    pad = reach * eps0 + spacing
    axes = [np.arange(lo[k] - pad, hi[k] + pad, spacing) for k in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    outside = ~domain.contains(pts)
    d = domain._boundary_distance(pts)
    keep = outside & (d <= reach * eps0) & (d >= floor)
    return pts[keep]


def extend(plan: ExtensionPlan, f: SampledField, exterior_points=None, spacing=None):
    """Extend an interior field across the boundary through the collar cover.

    On interior sample points the extension is the field itself, exactly.
    On an exterior point x it is cutoff(x) * sum_i h_i(x) * avg(f over the
    reflected ball of collar ball i), where the cutoff ramps from 1 at
    boundary distance eps0 down to 0 at 2 eps0.  Constants are therefore
    reproduced exactly wherever the partition sums to one and the cutoff is
    one.  Raises ResolutionError when a reflected ball captures no samples.
    """
    domain, cover = plan.domain, plan.cover
    interior_mask_src = np.ones(f.cloud.size, bool) if f.mask is None else f.mask
    int_pts = f.cloud.points[interior_mask_src]
    int_w = f.cloud.weights[interior_mask_src]
    int_vals = f.values[interior_mask_src]

    if spacing is None:
        spacing = f.cloud.min_spacing()
    if exterior_points is None:
        exterior_points = _collar_samples(domain, cover.eps0, spacing, floor=cover.d_floor)
    ext_pts = np.atleast_2d(np.asarray(exterior_points, dtype=float))

    tree = cKDTree(int_pts)
    avgs = np.empty(len(plan.reflected))
    for i, rb in enumerate(plan.reflected):
        idx = tree.query_ball_point(rb.center_array, rb.radius)
        if not idx:
            raise ResolutionError(
                f"reflected ball at {rb.center} (radius {rb.radius:.3g}) has no samples"
            )
        ww = int_w[idx]
        avgs[i] = float(ww @ int_vals[idx] / ww.sum())

    h = cover.partition_weights(ext_pts)
    d = domain._boundary_distance(ext_pts)
    cutoff = np.clip(2.0 - d / cover.eps0, 0.0, 1.0)
    ext_vals = cutoff * np.asarray(h @ avgs).ravel()

    pts = np.vstack([int_pts, ext_pts])
    w = np.concatenate([int_w, np.full(len(ext_pts), spacing ** f.cloud.ndim)])
    vals = np.concatenate([int_vals, ext_vals])
    mask = np.zeros(len(pts), bool)
    mask[: len(int_pts)] = True
    return ExtendedField(MetricCloud(pts, w), vals, mask, avgs)


def extension_quality(plan, f, ext: ExtendedField = None, p=1.0, max_pairs=20000, rng=0):
    """Ratio of minimal-gradient p-quasinorms, extension over original.

    Both norms use the same subsampled pairwise constraint scheme (short
    nearest-neighbor pairs plus seeded random long pairs), so the quotient
    compares like with like.  Returns a dict with the two norms and their
    ratio R.
    """
    from .gradients import build_constraints
    from .lp import solve_min_gradient_p1

    if ext is None:
        ext = extend(plan, f)

    def min_grad_norm(field):
        lp = build_constraints(field, max_pairs=max_pairs, rng=rng)
        g = solve_min_gradient_p1(lp).g
        return lp_quasinorm(g, field.cloud.weights, p), g

    field_ext = SampledField(ext.cloud, ext.values)
    norm_ext, g_ext = min_grad_norm(field_ext)
    inner = SampledField(ext.cloud.subset(ext.interior_mask), ext.values[ext.interior_mask])
    norm_int, _ = min_grad_norm(inner)
    ratio = np.inf if norm_int == 0 else norm_ext / norm_int
    return {
        "norm_extension": norm_ext,
        "norm_interior": norm_int,
        "ratio": float(ratio),
        "gradient": g_ext,
        "extended": ext,
    }


def mean_value_comparison(plan, ext: ExtendedField, g_values, q=None):
    """Observed constant in the two-ball mean-value comparison.

    For each collar/reflected ball pair, compares |avg F over B - avg f over
    B'| against (|y' - y| + rho + r') times the sum of ball infima of the
    composite maximal gradient g1 = (M(g^q))^(1/q), q slightly below one.
    Returns the maximal observed ratio and the number of usable pairs.
    """
    n = ext.cloud.ndim
    if q is None:
        q = 0.5 * (n / (n + 1.0) + 1.0)
    g1 = power_maximal_composite(SampledField(ext.cloud, np.asarray(g_values, float)), q)
    tree = cKDTree(ext.cloud.points)
    w = ext.cloud.weights
    vals = ext.values
    worst = 0.0
    used = 0
    for ball, rb in zip(plan.cover.balls, plan.reflected):
        ia = tree.query_ball_point(ball.center_array, ball.radius)
        ib = tree.query_ball_point(rb.center_array, rb.radius)
        if not ia or not ib:
            continue
        ia, ib = np.asarray(ia), np.asarray(ib)
        avg_a = float(w[ia] @ vals[ia] / w[ia].sum())
        avg_b = float(w[ib] @ vals[ib] / w[ib].sum())
        disp = float(np.linalg.norm(rb.center_array - ball.center_array))
        geom = disp + ball.radius + rb.radius
        infs = float(g1[ia].min() + g1[ib].min())
        if geom * infs <= 0:
            continue
        worst = max(worst, abs(avg_a - avg_b) / (geom * infs))
        used += 1
    return {"chat": worst, "pairs_used": used, "q": q}
