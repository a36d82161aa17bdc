"""Builtin function corpora used for calibration and benchmark sweeps."""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

__all__ = [
    "calibration_corpus",
    "compact_square_corpus",
    "random_mean_zero_field",
]


def _bump01(t):
    """Smooth bump supported in (0.25, 0.75) of the unit interval."""
    z = np.clip((t - 0.5) / 0.25, -1.0, 1.0)
    return np.clip(1.0 - z * z, 0.0, None) ** 2


def _smooth_random(points, seed, n_modes=5):
    rng = np.random.default_rng(seed)
    vals = np.zeros(len(points))
    for _ in range(n_modes):
        freq = rng.integers(1, 5, size=points.shape[1])
        amp = rng.normal()
        phase = rng.uniform(0, 2 * np.pi)
        vals += amp * np.sin(2 * np.pi * points @ freq + phase)
    return vals / n_modes


def calibration_corpus(ndim):
    """Twelve reference functions on the unit cube, as (name, callable) pairs.

    A deliberate mix of regularity classes: affine through smooth, a kink, a
    jump, a distance function and seeded random trigonometric blends.
    """
    if ndim == 1:
        x = lambda p: p[:, 0]
        return [
            ("affine", lambda p: 0.3 + 1.7 * x(p)),
            ("quadratic", lambda p: (x(p) - 0.4) ** 2),
            ("cubic", lambda p: x(p) ** 3 - x(p)),
            ("sine", lambda p: np.sin(3 * np.pi * x(p))),
            ("high-freq", lambda p: 0.2 * np.sin(9 * np.pi * x(p))),
            ("bump", lambda p: _bump01(x(p))),
            ("kink", lambda p: np.abs(x(p) - 0.5)),
            ("step", lambda p: (x(p) > 0.5).astype(float)),
            ("exp", lambda p: np.exp(x(p))),
            ("sqrt-edge", lambda p: np.sqrt(np.abs(x(p) - 0.25))),
            ("random-a", lambda p: _smooth_random(p, 11)),
            ("random-b", lambda p: _smooth_random(p, 23)),
        ]
    if ndim == 2:
        x = lambda p: p[:, 0]
        y = lambda p: p[:, 1]
        return [
            ("affine", lambda p: 0.1 + x(p) - 0.5 * y(p)),
            ("quadratic", lambda p: (x(p) - 0.3) ** 2 + (y(p) - 0.6) ** 2),
            ("saddle", lambda p: x(p) * y(p)),
            ("sine", lambda p: np.sin(2 * np.pi * x(p)) * np.sin(2 * np.pi * y(p))),
            ("high-freq", lambda p: 0.2 * np.sin(6 * np.pi * x(p)) * np.cos(6 * np.pi * y(p))),
            ("bump", lambda p: _bump01(x(p)) * _bump01(y(p))),
            ("cone", lambda p: np.hypot(x(p) - 0.5, y(p) - 0.5)),
            ("step", lambda p: (x(p) + y(p) > 1.0).astype(float)),
            ("exp", lambda p: np.exp(x(p) - y(p))),
            ("ridge", lambda p: np.abs(x(p) - y(p))),
            ("random-a", lambda p: _smooth_random(p, 31)),
            ("random-b", lambda p: _smooth_random(p, 47)),
        ]
    raise ParameterError("corpus available in dimensions 1 and 2")


def compact_square_corpus(count=20):
    """Compactly supported test functions on the open unit square.

    Product sine modes sin(i pi x) sin(j pi y), ordered by total frequency;
    all vanish on the boundary of the square.
    """
    modes = sorted(
        ((i, j) for i in range(1, 8) for j in range(1, 8)),
        key=lambda m: (m[0] ** 2 + m[1] ** 2, m),
    )[:count]
    out = []
    for i, j in modes:
        def fn(p, i=i, j=j):
            return np.sin(i * np.pi * p[:, 0]) * np.sin(j * np.pi * p[:, 1])
        out.append((f"mode-{i}{j}", fn))
    return out


def random_mean_zero_field(shape, seed):
    """Random grid array with exact zero mean and a one-cell zero margin."""
    rng = np.random.default_rng(seed)
    shape = tuple(int(s) for s in shape)
    phi = np.zeros(shape)
    interior = tuple(slice(1, -1) for _ in shape)
    phi[interior] = rng.standard_normal(tuple(s - 2 for s in shape))
    inner = phi[interior]
    phi[interior] = inner - inner.mean()
    return phi
