"""Panel Gauss-Legendre quadrature with a two-level accuracy check.

All closed-form norm computations in this package are cross-checked against
these routines, and the analytic kernel families fall back to them when no
closed form exists.  Integrands are assumed vectorized (numpy in, numpy out)
and piecewise-analytic on the supplied panels; panel edges must include every
kink of the integrand.
"""

from __future__ import annotations

import numpy as np


class QuadratureError(Exception):
    pass


def _gl_nodes(n: int):
    # cached Legendre nodes/weights on [-1, 1]
    key = int(n)
    if key not in _GL_CACHE:
        _GL_CACHE[key] = np.polynomial.legendre.leggauss(key)
    return _GL_CACHE[key]


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def panel_points(edges: np.ndarray, nodes: int):
    """Gauss-Legendre points and weights for the union of panels."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise QuadratureError("panel edges must be strictly increasing")
    t, w = _gl_nodes(nodes)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    ww = (half[:, None] * w[None, :]).ravel()
    return x, ww


def integrate_panels(f, edges, nodes: int = 24) -> float:
    x, w = panel_points(np.asarray(edges, dtype=float), nodes)
    return float(np.dot(w, f(x)))


def integrate_checked(f, edges, nodes: int = 24, rtol: float = 1e-6):
    """Integrate on panels; return (value, discrepancy) from two node levels.

    The discrepancy between the two levels is the reported Richardson-style
    error estimate.  Raises if the estimate exceeds ``rtol`` relative to the
    result scale.
    """
    lo = integrate_panels(f, edges, nodes)
    hi = integrate_panels(f, edges, nodes + 12)
    disc = abs(hi - lo)
    scale = max(abs(hi), 1e-300)
    if disc > rtol * max(scale, 1.0) and disc > rtol * scale * 10.0:
        raise QuadratureError(
            f"quadrature check failed: levels differ by {disc:.3e} on scale {scale:.3e}"
        )
    return hi, disc


def integrate_2d_panels(f, xedges, yedges, nodes: int = 20) -> float:
    """Tensor Gauss-Legendre integral of f(x, y) over panel unions."""
    x, wx = panel_points(np.asarray(xedges, dtype=float), nodes)
    y, wy = panel_points(np.asarray(yedges, dtype=float), nodes)
    vals = f(x[:, None], y[None, :])
    return float(wx @ vals @ wy)


def integrate_2d_checked(f, xedges, yedges, nodes: int = 20, rtol: float = 1e-6):
    lo = integrate_2d_panels(f, xedges, yedges, nodes)
    hi = integrate_2d_panels(f, xedges, yedges, nodes + 8)
    disc = abs(hi - lo)
    scale = max(abs(hi), 1e-300)
    if disc > rtol * max(scale, 1.0) and disc > rtol * scale * 10.0:
        raise QuadratureError(
            f"2d quadrature check failed: levels differ by {disc:.3e} on scale {scale:.3e}"
        )
    return hi, disc


def exp_refined_edges(lo: float, hi: float, scale: float, base_panels: int = 4) -> np.ndarray:
    """Panel edges on [lo, hi] geometrically refined toward both endpoints.

    ``scale`` is the characteristic length of boundary layers (e.g. 1/lambda
    for integrands involving exp(-lambda * distance-to-endpoint)).
    """
    if hi <= lo:
        raise QuadratureError("empty interval")
    length = hi - lo
    scale = min(abs(scale), length)
    ladder = []
    step = scale
    pos = 0.0
    while pos + step < 0.5 * length:
        pos += step
        ladder.append(pos)
        step *= 2.0
    offsets = np.array(ladder, dtype=float)
    left = lo + offsets
    right = hi - offsets[::-1]
    inner = np.linspace(lo + (offsets[-1] if ladder else 0.0),
                        hi - (offsets[-1] if ladder else 0.0),
                        base_panels + 1)[1:-1] if length > 4 * scale else np.array([])
    edges = np.unique(np.concatenate([[lo], left, inner, right, [hi]]))
    return edges
