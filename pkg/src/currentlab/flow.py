"""Integral curves of the conserved current and congruences seeded on leaves.

Curves solve dx^mu/ds = j^mu(x) for the affine parameter s. The right-hand
side is a closed-form mode sum, so the only numerics here is the integrator:
an embedded Dormand-Prince 4(5) pair with proportional step control, cubic
Hermite dense output between accepted steps, and two extra termination
channels beyond reaching the end of the parameter range: stagnation (the
current magnitude drops below a scale-relative cutoff) and step underflow
(the controller would need a step below hmin to meet tolerance).

x is stored unwrapped so winding around the periodic box stays visible;
crossing counts against leaves are computed on the cylinder by the geometry
module.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import StepUnderflowError
from .tolerances import DEFAULT, Tolerances

# Dormand-Prince 4(5) tableau (FSAL: the 7th stage is f at the new point)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_ERR = _B5 - _B4


class Termination(enum.Enum):
    RANGE_END = "range_end"
    STAGNATION = "stagnation"
    STEP_UNDERFLOW = "step_underflow"


class _NegatedField:
    """Time-reversed view of a field, used for backward tracing."""

    def __init__(self, base):
        self._base = base
        self.current_scale = base.current_scale
        self.box_length = base.box_length

    def current_at(self, t, x):
        j0, j1 = self._base.current_at(t, x)
        return (-j0, -j1)


@dataclass(eq=False)
class IntegralCurve:
    """Accepted samples of one integral curve, ordered by strictly increasing s."""

    s: np.ndarray
    t: np.ndarray
    x: np.ndarray
    j0: np.ndarray
    j1: np.ndarray
    terminated: Termination
    box_length: float

    @property
    def n_samples(self) -> int:
        return len(self.s)

    def x_mod(self) -> np.ndarray:
        return np.mod(self.x, self.box_length)

    def _interval(self, s_val: float) -> int:
        i = int(np.searchsorted(self.s, s_val, side="right")) - 1
        return min(max(i, 0), len(self.s) - 2)

    def point_at(self, s_val: float) -> tuple:
        """Dense output: cubic Hermite interpolation between accepted samples."""
        if len(self.s) == 1:
            return (float(self.t[0]), float(self.x[0]))
        i = self._interval(s_val)
        h = self.s[i + 1] - self.s[i]
        tau = (s_val - self.s[i]) / h
        h00 = (1 + 2 * tau) * (1 - tau) ** 2
        h10 = tau * (1 - tau) ** 2
        h01 = tau * tau * (3 - 2 * tau)
        h11 = tau * tau * (tau - 1)
        t = h00 * self.t[i] + h10 * h * self.j0[i] + h01 * self.t[i + 1] \
            + h11 * h * self.j0[i + 1]
        x = h00 * self.x[i] + h10 * h * self.j1[i] + h01 * self.x[i + 1] \
            + h11 * h * self.j1[i + 1]
        return (float(t), float(x))

    def resampled(self, factor: int) -> tuple:
        """Dense-output polyline with `factor` subsamples per accepted step.

        Returns (s, t, x) arrays; used for refinement-invariance checks.
        """
        if len(self.s) == 1 or factor <= 1:
            return self.s.copy(), self.t.copy(), self.x.copy()
        ss = [self.s[0]]
        for i in range(len(self.s) - 1):
            seg = np.linspace(self.s[i], self.s[i + 1], factor + 1)[1:]
            ss.extend(seg.tolist())
        ss = np.array(ss)
        pts = np.array([self.point_at(v) for v in ss])
        pts[0] = (self.t[0], self.x[0])
        return ss, pts[:, 0], pts[:, 1]

    def point_at_refined(self, s_val: float, fld, tolerances: Tolerances = DEFAULT) -> tuple:
        """Re-integrate from the nearest accepted sample with a tight tolerance.

        Dense output is only fourth-order accurate in the step size; crossing
        refinement for flux-tube bookkeeping needs better, so this walks a
        short, tightly controlled integration from the last accepted sample at
        or before s_val.
        """
        i = self._interval(s_val)
        span = s_val - self.s[i]
        if span == 0.0:
            return (float(self.t[i]), float(self.x[i]))
        tight = tolerances.overridden(rk_tol=1e-12)
        sub = _trace(fld, float(self.t[i]), float(self.x[i]), span, tight,
                     max_step=None, collect=False)
        return (sub[0], sub[1])


def _trace(fld, t0: float, x0: float, s_max: float, tol: Tolerances,
           max_step, collect: bool = True):
    """Forward integration core. Returns sample arrays or just the endpoint."""
    scale = fld.current_scale
    eps_stag = tol.stagnation_rel * scale
    f = np.array(fld.current_at(t0, x0))
    y = np.array([t0, x0])
    ss, ts, xs, f0s, f1s = [0.0], [t0], [x0], [f[0]], [f[1]]

    if abs(f[0]) + abs(f[1]) < eps_stag:
        end = Termination.STAGNATION
        if collect:
            return (np.array(ss), np.array(ts), np.array(xs), np.array(f0s),
                    np.array(f1s), end)
        return (t0, x0, end)
    if s_max <= 0.0:
        end = Termination.RANGE_END
        if collect:
            return (np.array(ss), np.array(ts), np.array(xs), np.array(f0s),
                    np.array(f1s), end)
        return (t0, x0, end)

    h_min = tol.rk_hmin_factor * s_max
    fnorm = abs(f[0]) + abs(f[1])
    h = min(s_max, 0.1 * (1.0 + abs(y[0]) + abs(y[1])) / fnorm)
    if max_step:
        h = min(h, max_step)
    s = 0.0
    end = Termination.RANGE_END
    k = np.empty((7, 2))
    while s < s_max * (1.0 - 1e-15):
        h = min(h, s_max - s)
        k[0] = f
        for i in range(1, 7):
            yi = y + h * (_A[i] @ k[:i])
            k[i] = fld.current_at(yi[0], yi[1])
        y5 = y + h * (_B5 @ k)
        err = h * (_ERR @ k)
        sc = tol.rk_tol * np.maximum(1.0, np.maximum(np.abs(y), np.abs(y5)))
        en = float(np.max(np.abs(err) / sc))
        if en <= 1.0:
            s += h
            y = y5
            f = k[6]  # FSAL
            if collect:
                ss.append(s); ts.append(y[0]); xs.append(y[1])
                f0s.append(f[0]); f1s.append(f[1])
            if abs(f[0]) + abs(f[1]) < eps_stag:
                end = Termination.STAGNATION
                break
            grow = 0.9 * en ** -0.2 if en > 0.0 else 5.0
            h *= min(max(grow, 0.2), 5.0)
        else:
            h_new = h * min(max(0.9 * en ** -0.2, 0.2), 1.0)
            if h_new < h_min:
                end = Termination.STEP_UNDERFLOW
                break
            h = h_new
        if max_step:
            h = min(h, max_step)
    if collect:
        return (np.array(ss), np.array(ts), np.array(xs), np.array(f0s),
                np.array(f1s), end)
    return (float(y[0]), float(y[1]), end)


def trace_curve(fld, start, s_max: float, tolerances: Tolerances = DEFAULT,
                max_step: float | None = None, strict: bool = True) -> IntegralCurve:
    """Trace one integral curve forward over s in [0, s_max].

    `start` is a SpacetimePoint or (t, x) pair. With strict=True a step
    underflow raises StepUnderflowError; otherwise it is recorded in
    `terminated` and the partial curve is returned.
    """
    t0, x0 = (start.t, start.x) if hasattr(start, "t") else (float(start[0]), float(start[1]))
    s, t, x, j0, j1, end = _trace(fld, t0, x0, float(s_max), tolerances, max_step)
    if strict and end is Termination.STEP_UNDERFLOW:
        raise StepUnderflowError(
            f"step control underflowed near s={s[-1]:.6g} (t={t[-1]:.6g}, x={x[-1]:.6g})")
    return IntegralCurve(s, t, x, j0, j1, end, fld.box_length)


def trace_curve_two_sided(fld, start, s_back: float, s_forward: float,
                          tolerances: Tolerances = DEFAULT,
                          max_step: float | None = None,
                          strict: bool = True) -> IntegralCurve:
    """Trace through `start`, covering s in [-s_back, s_forward] with s=0 at start."""
    fwd = trace_curve(fld, start, s_forward, tolerances, max_step, strict)
    if s_back <= 0.0:
        return fwd
    bwd = trace_curve(_NegatedField(fld), start, s_back, tolerances, max_step, strict)
    # reverse the backward half and restore the true field sign
    s = np.concatenate([-bwd.s[::-1][:-1], fwd.s])
    t = np.concatenate([bwd.t[::-1][:-1], fwd.t])
    x = np.concatenate([bwd.x[::-1][:-1], fwd.x])
    j0 = np.concatenate([-bwd.j0[::-1][:-1], fwd.j0])
    j1 = np.concatenate([-bwd.j1[::-1][:-1], fwd.j1])
    end = fwd.terminated
    if Termination.STEP_UNDERFLOW in (fwd.terminated, bwd.terminated):
        end = Termination.STEP_UNDERFLOW
    elif Termination.STAGNATION in (fwd.terminated, bwd.terminated):
        end = Termination.STAGNATION
    return IntegralCurve(s, t, x, j0, j1, end, fld.box_length)


@dataclass(eq=False)
class Congruence:
    """Curves seeded at equally spaced leaf parameters of one seed surface."""

    curves: list
    seed_surface: object
    seed_params: np.ndarray
    errors: list = field(default_factory=list)


def seed_congruence(fld, surface, count: int, s_max: float,
                    s_back: float = 0.0, tolerances: Tolerances = DEFAULT,
                    max_step: float | None = None) -> Congruence:
    """Seed `count` curves at lambda_i = i/count on `surface` and trace them.

    Per-curve integrator failures are recorded (index, message) rather than
    aborting the whole congruence.
    """
    if count < 1:
        raise ValueError("congruence needs at least one curve")
    params = np.arange(count) / count
    curves = []
    errors = []
    for i, lam in enumerate(params):
        pt = surface.point_at(lam)
        try:
            curves.append(trace_curve_two_sided(fld, pt, s_back, s_max,
                                                tolerances, max_step, strict=False))
        except Exception as exc:  # defensive: record, keep going
            errors.append((i, str(exc)))
            curves.append(None)
    return Congruence(curves, surface, params, errors)


def crossing_events(curve: IntegralCurve, surface,
                    tolerances: Tolerances = DEFAULT):
    """Ordered crossing/touch events of a curve against a leaf."""
    leaf = surface.leaf_geometry(tolerances.snap)
    return geometry.leaf_crossings(curve.t, curve.x, leaf)


def crossing_count(curve: IntegralCurve, surface,
                   tolerances: Tolerances = DEFAULT) -> int:
    """Winding-aware number of leaf crossings; tangential touches count once."""
    return len(crossing_events(curve, surface, tolerances))


def touch_count(curve: IntegralCurve, surface,
                tolerances: Tolerances = DEFAULT) -> int:
    return sum(1 for ev in crossing_events(curve, surface, tolerances)
               if ev.kind == "touch")
