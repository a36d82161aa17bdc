"""Point clouds with measures, sampled scalar fields, quasinorms and
finite-difference gradients on uniform grids."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, UnsupportedStructureError

__all__ = [
    "MetricCloud",
    "SampledField",
    "grid_cloud",
    "domain_grid_cloud",
    "lp_quasinorm",
    "finite_difference_gradient",
]


@dataclass
class MetricCloud:
    """Finite point set with per-point measure weights.

    ``grid_shape`` and ``spacing`` are set when the cloud is a full uniform
    grid (row-major over axes); they unlock finite-difference calculus.
    """

    points: np.ndarray
    weights: np.ndarray
    grid_shape: tuple | None = None
    spacing: float | None = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.weights) != len(self.points):
            raise ParameterError("weights and points must have equal length")
        if np.any(self.weights < 0):
            raise ParameterError("measure weights must be nonnegative")
        if self.grid_shape is not None:
            self.grid_shape = tuple(int(s) for s in self.grid_shape)
            if int(np.prod(self.grid_shape)) != len(self.points):
                raise ParameterError("grid_shape inconsistent with point count")

    @property
    def size(self):
        return len(self.points)

    @property
    def ndim(self):
        return self.points.shape[1]

    @property
    def is_grid(self):
        return self.grid_shape is not None

    @property
    def total_mass(self):
        return float(self.weights.sum())

    def min_spacing(self):
        if self.spacing is not None:
            return float(self.spacing)
        from scipy.spatial import cKDTree

        d, _ = cKDTree(self.points).query(self.points, k=2)
        return float(d[:, 1].min())

    def diameter(self):
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def subset(self, mask):
        """Cloud restricted to a boolean mask (loses grid structure)."""
        mask = np.asarray(mask, dtype=bool)
        return MetricCloud(self.points[mask], self.weights[mask])


def grid_cloud(lo, hi, shape):
    """Uniform grid cloud over the box [lo, hi] with cell-volume weights.

    Nodes are cell centers, so every node carries the same weight h^n and the
    weights sum exactly to the box volume.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    if len(shape) != len(lo):
        raise ParameterError("shape and box dimension mismatch")
    if any(s < 1 for s in shape):
        raise ParameterError("grid shape entries must be >= 1")
    steps = (hi - lo) / np.asarray(shape)
    if not np.allclose(steps, steps[0], rtol=1e-12, atol=0):
        raise ParameterError("grid_cloud needs equal spacing on all axes")
    h = float(steps[0])
    axes = [lo[k] + h * (np.arange(shape[k]) + 0.5) for k in range(len(shape))]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    w = np.full(len(pts), h ** len(shape))
    return MetricCloud(pts, w, grid_shape=shape, spacing=h)


def domain_grid_cloud(domain, shape, margin_cells=0):
    """Grid cloud over the domain bounding box, masked to interior points.

    Returns ``(cloud, mask)`` where ``cloud`` keeps the full grid (with the
    grid metadata intact) and ``mask`` flags the nodes inside the domain,
    optionally shrunk so masked nodes stay ``margin_cells`` * h from the
    boundary.
    """
    lo, hi = domain.bbox
    cloud = grid_cloud(lo, hi, shape)
    mask = domain.contains(cloud.points)
    if margin_cells:
        d = domain._boundary_distance(cloud.points)
        mask &= d >= margin_cells * cloud.spacing
    return cloud, mask


@dataclass
class SampledField:
    """Scalar samples on a cloud; values outside the mask count as zero."""

    cloud: MetricCloud
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if len(self.values) != self.cloud.size:
            raise ParameterError("values and cloud must have equal length")
        if self.mask is not None:
            self.mask = np.asarray(self.mask, dtype=bool).ravel()
            if len(self.mask) != self.cloud.size:
                raise ParameterError("mask and cloud must have equal length")

    @property
    def effective_values(self):
        if self.mask is None:
            return self.values
        return np.where(self.mask, self.values, 0.0)

    def as_grid(self):
        """Values reshaped to the grid; requires grid metadata."""
        if not self.cloud.is_grid:
            raise UnsupportedStructureError("field cloud is not a uniform grid")
        return self.effective_values.reshape(self.cloud.grid_shape)

    def quasinorm(self, p):
        return lp_quasinorm(self.effective_values, self.cloud.weights, p)

    def to_csv(self):
        buf = io.StringIO()
        wtr = csv.writer(buf)
        nd = self.cloud.ndim
        wtr.writerow([f"x{k}" for k in range(nd)] + ["weight", "value", "mask"])
        mask = np.ones(self.cloud.size, bool) if self.mask is None else self.mask
        for p, w, v, m in zip(self.cloud.points, self.cloud.weights, self.values, mask):
            wtr.writerow([repr(float(c)) for c in p] + [repr(float(w)), repr(float(v)), int(m)])
        return buf.getvalue()

    @staticmethod
    def from_csv(text):
        rows = list(csv.reader(io.StringIO(text)))
        header, rows = rows[0], rows[1:]
        nd = sum(1 for h in header if h.startswith("x"))
        data = np.array([[float(c) for c in row] for row in rows])
        cloud = MetricCloud(data[:, :nd], data[:, nd])
        return SampledField(cloud, data[:, nd + 1], data[:, nd + 2].astype(bool))


def lp_quasinorm(values, weights, p):
    """(sum_i w_i |v_i|^p)^(1/p); sup norm for p = inf; any p in (0, inf]."""
    values = np.abs(np.asarray(values, dtype=float))
    if p == np.inf:
        return float(values.max(initial=0.0))
    if not (p > 0):
        raise ParameterError("exponent p must be positive or inf")
    weights = np.asarray(weights, dtype=float)
    return float(np.sum(weights * values**p) ** (1.0 / p))


def finite_difference_gradient(f: SampledField):
    """Componentwise finite-difference gradient on a uniform grid field.

    Central differences in the interior, one-sided at the edges (numpy's
    gradient convention).  Returns a list of SampledFields, one per axis.
    """
    grid = f.as_grid()
    h = f.cloud.spacing
    if len(f.cloud.grid_shape) == 1:
        grads = [np.gradient(grid, h)]
    else:
        grads = np.gradient(grid, h)
    return [SampledField(f.cloud, g.ravel(), f.mask) for g in grads]
