"""Adaptive composite Gauss-Legendre quadrature.

Used for flux and probability integrals over hypersurface segments. Panels
are doubled until the estimate changes by less than the requested relative
tolerance (with an absolute floor so integrals that are genuinely zero do not
trigger endless refinement), up to a hard panel cap per segment.
"""

from __future__ import annotations

import numpy as np

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(7)
# mapped onto [0, 1]
_U01 = 0.5 * (_NODES + 1.0)
_W01 = 0.5 * _WEIGHTS


def panel_points(a: float, b: float, panels: int):
    """Gauss nodes and weights for `panels` equal panels spanning [a, b]."""
    h = (b - a) / panels
    starts = a + h * np.arange(panels)
    u = (starts[:, None] + h * _U01[None, :]).ravel()
    w = np.broadcast_to(h * _W01, (panels, _U01.size)).ravel().copy()
    return u, w


def adaptive(f, a: float, b: float, rel_tol: float, abs_floor: float,
             max_panels: int = 16384) -> float:
    """Integrate the vectorized callable f over [a, b].

    f maps a 1-d array of abscissae to a 1-d array of values.
    """
    if b <= a:
        return 0.0
    panels = 1
    u, w = panel_points(a, b, panels)
    best = float(np.dot(w, f(u)))
    while panels < max_panels:
        panels *= 2
        u, w = panel_points(a, b, panels)
        nxt = float(np.dot(w, f(u)))
        if abs(nxt - best) <= max(rel_tol * abs(nxt), abs_floor):
            return nxt
        best = nxt
    return best


def adaptive_2d(f, a1: float, b1: float, a2: float, b2: float,
                rel_tol: float, abs_floor: float, max_panels: int = 256) -> float:
    """Tensor-product version of `adaptive` over the rectangle [a1,b1]x[a2,b2].

    f maps two flat arrays (u1, u2) of equal length to an array of values.
    Both axes are refined together; max_panels caps the panel count per axis.
    """
    if b1 <= a1 or b2 <= a2:
        return 0.0

    def estimate(panels):
        u1, w1 = panel_points(a1, b1, panels)
        u2, w2 = panel_points(a2, b2, panels)
        uu1 = np.repeat(u1, u2.size)
        uu2 = np.tile(u2, u1.size)
        ww = np.multiply.outer(w1, w2).ravel()
        return float(np.dot(ww, f(uu1, uu2)))

    panels = 1
    best = estimate(panels)
    while panels < max_panels:
        panels *= 2
        nxt = estimate(panels)
        if abs(nxt - best) <= max(rel_tol * abs(nxt), abs_floor):
            return nxt
        best = nxt
    return best
