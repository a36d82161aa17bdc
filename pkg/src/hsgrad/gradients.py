"""Pointwise-gradient machinery: pairwise difference constraints, the
calibrated maximal-function upper gradient, telescoping mollification checks,
an exact mean-zero divergence decomposition, and Poincare quotients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from .errors import DegeneratePairError, ParameterError, PreconditionError, UnsupportedStructureError
from .fields import MetricCloud, SampledField, finite_difference_gradient
from .lp import MinimalGradientLP
from .maximal import hl_maximal, radius_ladder, smooth_maximal

__all__ = [
    "build_constraints",
    "calibration_constant",
    "canonical_gradient",
    "verify_candidate",
    "telescoping_bound_check",
    "forward_difference",
    "mean_zero_decompose",
    "poincare_ratio",
]

_DEFAULT_MAX_PAIRS = 100_000


def _all_pairs(m):
    iu = np.triu_indices(m, k=1)
    return iu[0], iu[1]


def _subsampled_pairs(cloud, max_pairs, rng):
    """Nearest-neighbor pairs plus seeded random pairs binned by log distance."""
    rng = np.random.default_rng(rng)
    m = cloud.size
    k = min(7, m)
    _, nbr = cKDTree(cloud.points).query(cloud.points, k=k)
    ii = np.repeat(np.arange(m), k - 1)
    jj = nbr[:, 1:].ravel()
    lo, hi = np.minimum(ii, jj), np.maximum(ii, jj)
    near = set(zip(lo.tolist(), hi.tolist()))

    budget = max(max_pairs - len(near), 0)
    draws = rng.integers(0, m, size=(4 * budget + 8, 2))
    draws = draws[draws[:, 0] != draws[:, 1]]
    lo2 = np.minimum(draws[:, 0], draws[:, 1])
    hi2 = np.maximum(draws[:, 0], draws[:, 1])
    d = np.linalg.norm(cloud.points[lo2] - cloud.points[hi2], axis=1)
    keep = d > 0
    lo2, hi2, d = lo2[keep], hi2[keep], d[keep]
    bins = np.floor(np.log2(np.maximum(d / max(cloud.min_spacing(), 1e-300), 1.0))).astype(int)
    nbins = bins.max() + 1 if len(bins) else 1
    quota = max(budget // max(nbins, 1), 1)
    chosen = set(near)
    counts = np.zeros(nbins, dtype=int)
    for a, b, bin_ in zip(lo2.tolist(), hi2.tolist(), bins.tolist()):
        if counts[bin_] >= quota:
            continue
        key = (a, b)
        if key in chosen:
            continue
        chosen.add(key)
        counts[bin_] += 1
        if len(chosen) >= max_pairs:
            break
    pairs = np.array(sorted(chosen), dtype=int)
    return pairs[:, 0], pairs[:, 1]


def build_constraints(f: SampledField, mode="global", scale=None, domain=None,
                      max_pairs=_DEFAULT_MAX_PAIRS, rng=0):
    """Pairwise-difference LP for the minimal pointwise gradient of a field.

    Constraints read g_i + g_j >= |u_i - u_j| / |x_i - x_j| over a pair set
    chosen by mode: every pair ("global", subsampled past ``max_pairs``),
    pairs closer than ``scale`` ("scale"), or pairs with separation at most a
    quarter of either boundary distance ("ball", requires ``domain``).
    Subsampling only ever drops constraints, so the optimum of the returned
    program is a certified lower bound for the fully constrained one.
    """
    cloud = f.cloud
    m = cloud.size
    if m < 2:
        raise ParameterError("need at least two points")
    if mode not in ("global", "scale", "ball"):
        raise ParameterError(f"unknown constraint mode {mode!r}")
    if mode == "scale" and not (scale and scale > 0):
        raise ParameterError("scale mode needs a positive scale")
    if mode == "ball" and domain is None:
        raise ParameterError("ball mode needs a domain")

    if m * (m - 1) // 2 <= max_pairs:
        ii, jj = _all_pairs(m)
    else:
        ii, jj = _subsampled_pairs(cloud, max_pairs, rng)
    d = np.linalg.norm(cloud.points[ii] - cloud.points[jj], axis=1)
    if np.any(d == 0):
        raise DegeneratePairError("cloud contains duplicate points")

    if mode == "scale":
        keep = d <= scale
    elif mode == "ball":
        bd = domain._boundary_distance(cloud.points)
        keep = d <= 0.25 * np.minimum(bd[ii], bd[jj])
    else:
        keep = np.ones(len(d), dtype=bool)
    ii, jj, d = ii[keep], jj[keep], d[keep]
    if len(ii) == 0:
        raise ParameterError("constraint set is empty for the requested mode")

    u = f.effective_values
    rhs = np.abs(u[ii] - u[jj]) / d
    return MinimalGradientLP(m, ii, jj, rhs, cloud.weights)


# ---------------------------------------------------------------------------
# Calibrated canonical gradient
# ---------------------------------------------------------------------------

_CALIBRATION_CACHE = {}


def _raw_maximal_gradient(f, mode, domain):
    """max over axes of the maximal function of |D_j f| (uncalibrated)."""
    grads = finite_difference_gradient(f)
    cap = None
    if mode == "ball":
        if domain is None:
            raise ParameterError("ball mode needs a domain")
        cap = domain._boundary_distance(f.cloud.points) / 2.0
    stack = [hl_maximal(SampledField(f.cloud, np.abs(g.values), f.mask), cap=cap) for g in grads]
    return np.max(stack, axis=0)


def _calibration_instances(ndim):
    from .corpus import calibration_corpus
    from .fields import grid_cloud

    if ndim == 1:
        resolutions = [(32,), (64,), (128,)]
    elif ndim == 2:
        resolutions = [(16, 16), (32, 32)]
    else:
        raise ParameterError("calibration available in dimensions 1 and 2")
    out = []
    for shape in resolutions:
        cloud = grid_cloud(np.zeros(ndim), np.ones(ndim), shape)
        for name, fn in calibration_corpus(ndim):
            out.append((name, shape, SampledField(cloud, fn(cloud.points))))
    return out


def calibration_constant(ndim, mode="global", domain_factory=None):
    """Corpus-calibrated constant for the canonical maximal-function gradient.

    Computes the worst ratio of difference quotients to maximal-gradient sums
    over the builtin function corpus at the reference resolutions and returns
    twice that worst ratio, so the calibrated gradient has nonnegative slack
    by construction on the whole corpus.  Cached per (ndim, mode).
    """
    key = (ndim, mode)
    if key in _CALIBRATION_CACHE:
        return _CALIBRATION_CACHE[key]
    from .geometry import Rectangle

    domain = None
    if mode == "ball":
        domain = (domain_factory or (lambda: Rectangle(np.zeros(ndim), np.ones(ndim))))()
    worst = 0.0
    for _, _, f in _calibration_instances(ndim):
        m0 = _raw_maximal_gradient(f, mode, domain)
        lp = build_constraints(f, mode=mode, domain=domain)
        denom = np.maximum(m0[lp.ii] + m0[lp.jj], 1e-300)
        worst = max(worst, float(np.max(lp.rhs / denom)))
    c = 2.0 * worst
    _CALIBRATION_CACHE[key] = c
    return c


def canonical_gradient(f: SampledField, mode="global", domain=None, constant=None):
    """Calibrated maximal-function upper gradient c * max_j M(|D_j f|).

    Requires a uniform grid cloud.  In "ball" mode the maximal averages are
    capped at half the boundary distance.  Returns (gradient field, constant).
    """
    if not f.cloud.is_grid:
        raise UnsupportedStructureError("canonical gradient needs a grid cloud")
    if constant is None:
        constant = calibration_constant(f.cloud.ndim, mode)
    g = constant * _raw_maximal_gradient(f, mode, domain)
    return SampledField(f.cloud, g, f.mask), constant


def verify_candidate(f: SampledField, g: SampledField, lp: MinimalGradientLP = None, tol=0.0):
    """Check g against the pairwise constraints of f; report slack statistics.

    Returns a dict with the minimal slack, the worst pair, the violated
    fraction, and the fraction of points a greedy pass must delete so the
    remaining pairs all hold (the exceptional set of the candidate).
    """
    if lp is None:
        lp = build_constraints(f)
    gv = g.effective_values
    slack = gv[lp.ii] + gv[lp.jj] - lp.rhs
    violated = slack < -tol
    worst = int(np.argmin(slack))
    removed = np.zeros(lp.n_vars, dtype=bool)
    bad_ii, bad_jj = lp.ii[violated], lp.jj[violated]
    while len(bad_ii):
        counts = np.bincount(np.concatenate([bad_ii, bad_jj]), minlength=lp.n_vars)
        kill = int(np.argmax(counts))
        removed[kill] = True
        keep = (bad_ii != kill) & (bad_jj != kill)
        bad_ii, bad_jj = bad_ii[keep], bad_jj[keep]
    return {
        "min_slack": float(slack.min()) if len(slack) else 0.0,
        "worst_pair": (int(lp.ii[worst]), int(lp.jj[worst])),
        "violated_fraction": float(np.mean(violated)),
        "exceptional_fraction": float(np.mean(removed)),
    }


# ---------------------------------------------------------------------------
# Telescoping mollification check
# ---------------------------------------------------------------------------

def _mollified_value(f, point, t):
    """Discretely normalized bump average of f at an arbitrary point."""
    from .covers import bump_profile

    d = np.linalg.norm(f.cloud.points - np.asarray(point, float), axis=1)
    k = bump_profile(d / t) * f.cloud.weights
    s = k.sum()
    if s <= 0:
        return None
    return float(k @ f.effective_values / s)


def telescoping_bound_check(f: SampledField, i, j, density=2):
    """Dyadic mollification telescope between two cloud points.

    Builds averages of f at x_i and x_j at scales |x_i - x_j| 2^(-k-k0)
    (k0 = 1 in 1d, else 2 so the top scale still sees both points), sums the
    telescoped increments, and reports the observed comparison ratio against
    the locally capped maximal gradient at the endpoints.
    """
    cloud = f.cloud
    x, y = cloud.points[i], cloud.points[j]
    gap = float(np.linalg.norm(x - y))
    if gap == 0:
        raise DegeneratePairError("telescoping check needs distinct points")
    k0 = 1 if cloud.ndim == 1 else 2
    spacing = cloud.min_spacing()
    scales = []
    k = 0
    while True:
        t = gap * 2.0 ** (-k - k0)
        if t < spacing:
            break
        scales.append(t)
        k += 1
    if not scales:
        raise PreconditionError("points too close for a multi-scale telescope")

    a = [_mollified_value(f, x, t) for t in scales]
    b = [_mollified_value(f, y, t) for t in scales]
    u = f.effective_values
    telescope = abs(a[0] - b[0])
    telescope += sum(abs(a[s + 1] - a[s]) for s in range(len(scales) - 1))
    telescope += sum(abs(b[s + 1] - b[s]) for s in range(len(scales) - 1))
    telescope += abs(u[i] - a[-1]) + abs(u[j] - b[-1])

    grads = finite_difference_gradient(f)
    cap = np.full(cloud.size, gap)
    mloc = np.max(
        [hl_maximal(SampledField(cloud, np.abs(g.values), f.mask), cap=cap) for g in grads],
        axis=0,
    )
    denom = gap * (mloc[i] + mloc[j])
    degenerate = denom == 0
    chat = 0.0 if degenerate else abs(u[i] - u[j]) / denom
    return {
        "scales": scales,
        "k0": k0,
        "telescope_sum": telescope,
        "difference": float(abs(u[i] - u[j])),
        "telescope_dominates": telescope >= abs(u[i] - u[j]) - 1e-12 * max(1.0, abs(u[i])),
        "chat": float(chat),
        "degenerate": bool(degenerate),
    }


# ---------------------------------------------------------------------------
# Exact mean-zero decomposition
# ---------------------------------------------------------------------------

def forward_difference(arr, axis, h):
    """(v(x + h e_axis) - v(x)) / h with v = 0 past the top edge."""
    shifted = np.zeros_like(arr)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    src[axis] = slice(1, None)
    dst[axis] = slice(0, -1)
    shifted[tuple(dst)] = arr[tuple(src)]
    return (shifted - arr) / h


def _decompose_grid(phi, h):
    """Exact arrays psi_1..psi_n with sum_k forward_difference(psi_k, k) = phi."""
    if phi.ndim == 1:
        # psi_t = -h * sum_{s >= t} phi_s; telescopes exactly to phi
        return [-h * np.flip(np.cumsum(np.flip(phi)))]
    mn = phi.shape[-1]
    h_slice = phi.sum(axis=-1) * h
    subs = _decompose_grid(h_slice, h)
    # unit-mass interior profile along the last axis: one central cell
    a = np.zeros(mn)
    a[mn // 2] = 1.0 / h
    lifted = [np.tensordot(s, a, axes=0) for s in subs]
    resid = phi - h_slice[..., None] * a
    psi_last = h * np.concatenate(
        [np.zeros(phi.shape[:-1] + (1,)), np.cumsum(resid, axis=-1)[..., :-1]], axis=-1
    )
    return lifted + [psi_last]


def mean_zero_decompose(f: SampledField, tol=1e-12):
    """Decompose a mean-zero grid field as a discrete divergence.

    Returns fields psi_1..psi_n with sum_k forward_difference(psi_k) == phi
    exactly (to roundoff) and supports inside the grid.  Requires the field
    to vanish on the outermost cell layer and to have mean at most ``tol``
    relative to its mass scale.
    """
    phi = f.as_grid()
    h = f.cloud.spacing
    scale = float(np.max(np.abs(phi))) or 1.0
    total = float(phi.sum() * h**phi.ndim)
    if abs(total) > tol * scale:
        raise PreconditionError(f"field mean {total:.3g} is not numerically zero")
    for ax in range(phi.ndim):
        first = np.take(phi, 0, axis=ax)
        last = np.take(phi, -1, axis=ax)
        if np.any(first != 0) or np.any(last != 0):
            raise PreconditionError("field must vanish on the outermost cell layer")
        if phi.shape[ax] < 4:
            raise PreconditionError("grid too small for an interior-supported split")
    psis = _decompose_grid(phi, h)
    return [SampledField(f.cloud, p.ravel(), f.mask) for p in psis]


# ---------------------------------------------------------------------------
# Poincare quotient
# ---------------------------------------------------------------------------

def poincare_ratio(f: SampledField, g: SampledField, center, radius, p, pstar):
    """inf_c (avg_B |u - c|^pstar)^(1/pstar) / (r (avg_2B g^p)^(1/p)).

    The infimum over the centering constant is found by ternary search (the
    inner functional is convex in c for pstar >= 1).  Returns a dict with
    the ratio and an ``infinite`` flag when the gradient average vanishes.
    """
    if pstar < 1 or p <= 0:
        raise ParameterError("need pstar >= 1 and p > 0")
    pts = f.cloud.points
    d = np.linalg.norm(pts - np.asarray(center, float), axis=1)
    in_b = d <= radius
    in_2b = d <= 2 * radius
    if not in_b.any():
        raise ParameterError("ball contains no cloud points")
    w = f.cloud.weights
    u = f.effective_values[in_b]
    wb = w[in_b]

    def num(c):
        return float((np.sum(wb * np.abs(u - c) ** pstar) / wb.sum()) ** (1.0 / pstar))

    lo, hi = float(u.min()), float(u.max())
    for _ in range(200):
        if hi - lo <= 1e-10 * max(1.0, abs(hi), abs(lo)):
            break
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if num(m1) <= num(m2):
            hi = m2
        else:
            lo = m1
    best = num((lo + hi) / 2)

    gv = np.abs(g.effective_values[in_2b])
    w2 = w[in_2b]
    gavg = float((np.sum(w2 * gv**p) / w2.sum()) ** (1.0 / p))
    denom = radius * gavg
    if denom == 0:
        return {"ratio": np.inf, "infinite": True, "numerator": best, "denominator": 0.0}
    return {"ratio": best / denom, "infinite": False, "numerator": best, "denominator": denom}
