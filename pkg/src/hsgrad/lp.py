"""Linear programs for minimal pointwise gradients and discrete capacities.

The workhorse solver is HiGHS (scipy.optimize.linprog) with a duality
certificate assembled from the returned marginals; small instances can be
cross-checked against two independent exact rational oracles (a Bland-rule
simplex on the dual, and brute-force vertex enumeration)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .errors import CertificationError, ParameterError, SizeError

__all__ = [
    "MinimalGradientLP",
    "LPSolution",
    "solve_min_gradient_p1",
    "exact_oracle_min_gradient",
    "enumerate_feasible_vertices",
    "vertex_oracle_min_gradient",
    "min_gradient_quasinorm_p_lt_1",
    "solve_capacity_lp",
]

_EXACT_SIMPLEX_LIMIT = 8
_VERTEX_LIMIT = 6


@dataclass
class MinimalGradientLP:
    """min sum_i w_i g_i subject to g_i + g_j >= rhs_ij, g >= 0.

    ``ii``/``jj`` index the endpoint pair of each constraint; ``rhs`` is the
    required sum (typically |u_i - u_j| / d_ij).
    """

    n_vars: int
    ii: np.ndarray
    jj: np.ndarray
    rhs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.ii = np.asarray(self.ii, dtype=int)
        self.jj = np.asarray(self.jj, dtype=int)
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if not (len(self.ii) == len(self.jj) == len(self.rhs)):
            raise ParameterError("pair index and rhs arrays must align")
        if len(self.weights) != self.n_vars:
            raise ParameterError("weights must have one entry per variable")
        if np.any(self.ii == self.jj):
            raise ParameterError("self-pairs are not valid constraints")
        if np.any(self.weights < 0) or np.any(self.rhs < 0):
            raise ParameterError("weights and rhs must be nonnegative")

    @property
    def n_pairs(self):
        return len(self.rhs)

    def to_json(self):
        return {
            "n_vars": int(self.n_vars),
            "ii": self.ii.tolist(),
            "jj": self.jj.tolist(),
            "rhs": self.rhs.tolist(),
            "weights": self.weights.tolist(),
        }

    @staticmethod
    def from_json(obj):
        return MinimalGradientLP(
            int(obj["n_vars"]), obj["ii"], obj["jj"], obj["rhs"], obj["weights"]
        )


@dataclass
class LPSolution:
    g: np.ndarray
    objective: float
    dual: np.ndarray | None
    dual_objective: float
    gap: float
    certified: bool
    method: str


def _dual_certificate(lp: MinimalGradientLP, marginals):
    """Project HiGHS marginals onto the dual-feasible cone and price them."""
    y = np.maximum(np.asarray(marginals, dtype=float), 0.0)
    colsum = np.zeros(lp.n_vars)
    np.add.at(colsum, lp.ii, y)
    np.add.at(colsum, lp.jj, y)
    active = colsum > 0
    scale = 1.0
    if active.any():
        scale = min(1.0, float(np.min(lp.weights[active] / colsum[active])))
    y *= scale
    return y, float(lp.rhs @ y)


def solve_min_gradient_p1(lp: MinimalGradientLP, tol=1e-8):
    """Certified p=1 minimal-gradient solve.

    Solves with HiGHS and builds a feasible dual vector from the constraint
    marginals; the reported gap (primal minus dual objective) bounds the
    distance to optimality.  If the gap exceeds ``tol`` the instance is
    re-solved with the exact rational simplex when small enough, otherwise a
    CertificationError is raised.
    """
    rows = np.arange(lp.n_pairs)
    A = coo_matrix(
        (
            np.full(2 * lp.n_pairs, -1.0),
            (np.concatenate([rows, rows]), np.concatenate([lp.ii, lp.jj])),
        ),
        shape=(lp.n_pairs, lp.n_vars),
    ).tocsc()
    res = linprog(lp.weights, A_ub=A, b_ub=-lp.rhs, bounds=(0, None), method="highs")
    if res.status != 0:
        raise CertificationError(f"HiGHS failed: {res.message}")
    g = np.maximum(res.x, 0.0)
    # repair tiny infeasibilities from the interior cleanup
    viol = lp.rhs - (g[lp.ii] + g[lp.jj])
    if viol.size and viol.max() > 0:
        bump = np.zeros(lp.n_vars)
        np.maximum.at(bump, lp.ii, np.maximum(viol, 0.0))
        g = g + bump
    objective = float(lp.weights @ g)
    y, dual_obj = _dual_certificate(lp, -res.ineqlin.marginals)
    gap = objective - dual_obj
    denom = max(abs(objective), 1.0)
    if gap / denom <= tol:
        return LPSolution(g, objective, y, dual_obj, gap, True, "highs")
    if lp.n_vars <= _EXACT_SIMPLEX_LIMIT:
        return exact_oracle_min_gradient(lp)
    raise CertificationError(
        f"duality gap {gap:.3g} above tolerance and instance too large for exact solve"
    )


# ---------------------------------------------------------------------------
# Exact rational oracles
# ---------------------------------------------------------------------------

def _simplex_max(c, A, b):
    """Exact simplex for max c.y s.t. A y <= b, y >= 0 with b >= 0.

    Dense Fraction tableau, Bland's rule throughout (no cycling).  Returns
    (value, y, slack_reduced_costs); the slack reduced costs are the optimal
    duals of this program.
    """
    m, n = len(A), len(c)
    T = [
        [Fraction(A[i][j]) for j in range(n)]
        + [Fraction(1 if k == i else 0) for k in range(m)]
        + [Fraction(b[i])]
        for i in range(m)
    ]
    z = [-Fraction(cj) for cj in c] + [Fraction(0)] * (m + 1)
    basis = [n + i for i in range(m)]
    while True:
        enter = next((j for j in range(n + m) if z[j] < 0), None)
        if enter is None:
            break
        piv = None
        best = None
        for i in range(m):
            if T[i][enter] > 0:
                ratio = T[i][-1] / T[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[piv]):
                    best, piv = ratio, i
        if piv is None:
            raise CertificationError("dual program unbounded (infeasible primal)")
        pv = T[piv][enter]
        T[piv] = [x / pv for x in T[piv]]
        for i in range(m):
            if i != piv and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [a - f * p for a, p in zip(T[i], T[piv])]
        if z[enter] != 0:
            f = z[enter]
            z = [a - f * p for a, p in zip(z, T[piv])]
        basis[piv] = enter
    y = [Fraction(0)] * n
    for i, bi in enumerate(basis):
        if bi < n:
            y[bi] = T[i][-1]
    return z[-1], y, z[n : n + m]


def _rationalize(arr):
    return [Fraction(float(v)).limit_denominator(10**12) for v in arr]


def exact_oracle_min_gradient(lp: MinimalGradientLP, rationalize=True):
    """Exact rational optimum via simplex on the dual program.

    The dual (max rhs.y s.t. for each variable the incident y-sum is at most
    its weight) starts feasible at y = 0, so no phase one is needed; the
    primal minimizer is read off the slack reduced costs.  Data are snapped
    to rationals with denominator <= 1e12 first unless already Fractions.
    """
    if lp.n_vars > _EXACT_SIMPLEX_LIMIT:
        raise SizeError(f"exact oracle limited to {_EXACT_SIMPLEX_LIMIT} variables")
    rhs = _rationalize(lp.rhs) if rationalize else [Fraction(v) for v in lp.rhs]
    w = _rationalize(lp.weights) if rationalize else [Fraction(v) for v in lp.weights]
    # constraint rows: one per variable, columns are pairs
    A = [[Fraction(0)] * lp.n_pairs for _ in range(lp.n_vars)]
    for k in range(lp.n_pairs):
        A[lp.ii[k]][k] = Fraction(1)
        A[lp.jj[k]][k] = Fraction(1)
    value, y, g_frac = _simplex_max(rhs, A, w)
    g = np.array([float(v) for v in g_frac])
    obj = float(value)
    sol = LPSolution(g, obj, np.array([float(v) for v in y]), obj, 0.0, True, "exact-simplex")
    sol.exact_objective = value
    sol.exact_g = g_frac
    return sol


def enumerate_feasible_vertices(lp: MinimalGradientLP, rationalize=True):
    """All vertices of {g >= 0 : g_i + g_j >= rhs} by exact basis enumeration.

    Brute force over n-subsets of the tight-constraint candidates (pair
    constraints and coordinate bounds); exponential, hence capped at
    6 variables.
    """
    n = lp.n_vars
    if n > _VERTEX_LIMIT:
        raise SizeError(f"vertex enumeration limited to {_VERTEX_LIMIT} variables")
    rhs = _rationalize(lp.rhs) if rationalize else [Fraction(v) for v in lp.rhs]
    rows = []
    for k in range(lp.n_pairs):
        row = [Fraction(0)] * n
        row[lp.ii[k]] = Fraction(1)
        row[lp.jj[k]] = Fraction(1)
        rows.append((row, rhs[k]))
    for i in range(n):
        row = [Fraction(0)] * n
        row[i] = Fraction(1)
        rows.append((row, Fraction(0)))

    def solve_square(system):
        M = [list(r) + [b] for r, b in system]
        for col in range(n):
            piv = next((r for r in range(col, n) if M[r][col] != 0), None)
            if piv is None:
                return None
            M[col], M[piv] = M[piv], M[col]
            pv = M[col][col]
            M[col] = [x / pv for x in M[col]]
            for r in range(n):
                if r != col and M[r][col] != 0:
                    f = M[r][col]
                    M[r] = [a - f * p for a, p in zip(M[r], M[col])]
        return [M[r][n] for r in range(n)]

    seen = set()
    vertices = []
    for subset in combinations(range(len(rows)), n):
        g = solve_square([rows[s] for s in subset])
        if g is None or any(v < 0 for v in g):
            continue
        feas = all(g[lp.ii[k]] + g[lp.jj[k]] >= rhs[k] for k in range(lp.n_pairs))
        if not feas:
            continue
        key = tuple(g)
        if key not in seen:
            seen.add(key)
            vertices.append(g)
    return vertices


def vertex_oracle_min_gradient(lp: MinimalGradientLP):
    """Exact p=1 optimum by scanning every feasible vertex (third route)."""
    w = _rationalize(lp.weights)
    best = None
    best_g = None
    for g in enumerate_feasible_vertices(lp):
        val = sum(wi * gi for wi, gi in zip(w, g))
        if best is None or val < best:
            best, best_g = val, g
    if best is None:
        raise CertificationError("no feasible vertex found")
    sol = LPSolution(
        np.array([float(v) for v in best_g]), float(best), None, float(best), 0.0, True,
        "vertex-enumeration",
    )
    sol.exact_objective = best
    return sol


def min_gradient_quasinorm_p_lt_1(lp: MinimalGradientLP, p, eps_scale=1e-6, iters=20):
    """min (sum w_i g_i^p)^(1/p) over the feasible cone, for 0 < p < 1.

    The objective is concave, so the optimum sits at a vertex: small
    instances are solved exactly by vertex enumeration; larger ones fall
    back to iteratively reweighted p=1 solves, which yields a feasible upper
    bound (flagged via ``certified=False``).
    """
    if not (0 < p < 1):
        raise ParameterError("this routine requires 0 < p < 1")
    if lp.n_vars <= _VERTEX_LIMIT:
        best, best_g = None, None
        for g in enumerate_feasible_vertices(lp):
            gf = np.array([float(v) for v in g])
            val = float(np.sum(lp.weights * gf**p)) ** (1.0 / p)
            if best is None or val < best:
                best, best_g = val, gf
        if best is None:
            raise CertificationError("no feasible vertex found")
        return LPSolution(best_g, best, None, best, 0.0, True, "vertex-enumeration")
    scale = float(np.max(lp.rhs)) if lp.n_pairs else 1.0
    eps = eps_scale * max(scale, 1e-30)
    w_eff = lp.weights.copy()
    g = None
    for _ in range(iters):
        sub = MinimalGradientLP(lp.n_vars, lp.ii, lp.jj, lp.rhs, w_eff)
        g = solve_min_gradient_p1(sub).g
        w_eff = lp.weights * p * np.maximum(g, eps) ** (p - 1.0)
    val = float(np.sum(lp.weights * np.maximum(g, 0.0) ** p)) ** (1.0 / p)
    return LPSolution(g, val, None, 0.0, val, False, "irls")


# ---------------------------------------------------------------------------
# Capacity LP
# ---------------------------------------------------------------------------

def solve_capacity_lp(points, weights, e_mask, u_mask, ii, jj, dist=None):
    """Discrete variational p=1 capacity of (E, U) on a point cloud.

    Variables are a potential phi (1 on E, 0 off U, free in [0, 1] in
    between) and a gradient g with the pairwise Hajlasz constraints
    |phi_i - phi_j| <= d_ij (g_i + g_j); minimizes sum w_i g_i.  Returns
    (value, phi, g).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float)
    e_mask = np.asarray(e_mask, dtype=bool)
    u_mask = np.asarray(u_mask, dtype=bool)
    ii = np.asarray(ii, dtype=int)
    jj = np.asarray(jj, dtype=int)
    if np.any(e_mask & ~u_mask):
        raise ParameterError("E must be contained in U")
    m = len(points)
    if dist is None:
        dist = np.linalg.norm(points[ii] - points[jj], axis=1)
    dist = np.asarray(dist, dtype=float)
    if np.any(dist <= 0):
        raise ParameterError("pair distances must be positive")

    npair = len(ii)
    rows = np.arange(npair)
    # columns: phi (m) then g (m); two rows per pair for +- orientation
    data, ri, ci = [], [], []
    for sgn, base in ((1.0, 0), (-1.0, npair)):
        data += [sgn] * npair + [-sgn] * npair + list(-dist) + list(-dist)
        ri += list(base + rows) * 2 + list(base + rows) * 2
        ci += list(ii) + list(jj) + list(m + ii) + list(m + jj)
    A = coo_matrix((data, (ri, ci)), shape=(2 * npair, 2 * m)).tocsc()
    b = np.zeros(2 * npair)
    c = np.concatenate([np.zeros(m), weights])
    bounds = []
    for i in range(m):
        if e_mask[i]:
            bounds.append((1.0, 1.0))
        elif not u_mask[i]:
            bounds.append((0.0, 0.0))
        else:
            bounds.append((0.0, 1.0))
    bounds += [(0.0, None)] * m
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise CertificationError(f"capacity LP failed: {res.message}")
    phi = res.x[:m]
    g = np.maximum(res.x[m:], 0.0)
    return float(c @ res.x), phi, g
