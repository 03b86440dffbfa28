"""Phase-plane state constraints and the admissible region.

The admissible region is the set of states ``(x1, x2)`` with ``x1`` in
``[0, 1]``, ``max(C_l(x1), 0) <= x2 <= C_u(x1)`` and a non-empty input
interval ``D(x) <= A(x)`` (plus the algebraic constraints at zero-inertia
points).  :class:`PhaseSystem` bundles acceleration bounds with a
:class:`ConstraintProfile` and answers every geometric query the algorithms
need.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ConfigurationError, InputError
from .expressions import Expression

RIGHT_DIFF_STEP = 1e-6


class _Curve:
    """A scalar curve of ``x1`` with a right derivative."""

    def __call__(self, x1):
        raise NotImplementedError

    def right_derivative(self, x1):
        h = RIGHT_DIFF_STEP
        if x1 + h > 1.0:
            return (self(x1) - self(x1 - h)) / h
        return (self(x1 + h) - self(x1)) / h

    def vec(self, x1):
        return np.array([self(float(v)) for v in np.ravel(x1)]).reshape(np.shape(x1))


class ExpressionCurve(_Curve):
    def __init__(self, source):
        self.expr = Expression(source, ("x1",))
        self.slope = self.expr.diff("x1")
        self.source = self.expr.source

    def __call__(self, x1):
        return self.expr(x1)

    def right_derivative(self, x1):
        return self.slope(x1)

    def vec(self, x1):
        return self.expr.vec(x1)


class TableCurve(_Curve):
    """Piecewise-linear curve through sampled ``(x1, value)`` pairs."""

    def __init__(self, xs, ys):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise ConfigurationError("table curve needs two equal-length 1-D arrays (>= 2 samples)")
        if np.any(np.diff(xs) <= 0):
            raise ConfigurationError("table curve abscissae must be strictly increasing")
        if xs[0] > 0.0 or xs[-1] < 1.0:
            raise ConfigurationError("table curve must cover [0, 1]")
        self.xs, self.ys = xs, ys
        self.source = f"table[{xs.size}]"

    def __call__(self, x1):
        return float(np.interp(x1, self.xs, self.ys))

    def vec(self, x1):
        return np.interp(x1, self.xs, self.ys)

    def right_derivative(self, x1):
        k = int(np.searchsorted(self.xs, x1, side="right")) - 1
        k = min(max(k, 0), self.xs.size - 2)
        return float((self.ys[k + 1] - self.ys[k]) / (self.xs[k + 1] - self.xs[k]))


class CallableCurve(_Curve):
    def __init__(self, fn, slope=None, source="callable"):
        self.fn = fn
        self.slope = slope
        self.source = source

    def __call__(self, x1):
        return float(self.fn(x1))

    def right_derivative(self, x1):
        if self.slope is not None:
            return float(self.slope(x1))
        return super().right_derivative(x1)


def as_curve(spec):
    """Coerce a number, expression string, ``{"x": [...], "y": [...]}`` table or callable."""
    if isinstance(spec, _Curve):
        return spec
    if isinstance(spec, (int, float)):
        return ExpressionCurve(repr(float(spec)))
    if isinstance(spec, str):
        return ExpressionCurve(spec)
    if isinstance(spec, dict):
        try:
            return TableCurve(spec["x"], spec["y"])
        except KeyError as exc:
            raise ConfigurationError("table curve needs keys 'x' and 'y'") from exc
    if callable(spec):
        return CallableCurve(spec)
    raise ConfigurationError(f"cannot interpret {spec!r} as a constraint curve")


class ConstraintProfile:
    """Upper and lower velocity constraint curves ``C_u(x1)``, ``C_l(x1)``."""

    def __init__(self, upper, lower, check_grid=1001):
        self.c_upper = as_curve(upper)
        self.c_lower = as_curve(lower)
        xs = np.linspace(0.0, 1.0, check_grid)
        gap = self.c_upper.vec(xs) - self.c_lower.vec(xs)
        if not np.all(gap > 0):
            bad = xs[np.argmin(gap)]
            raise ConfigurationError(f"lower constraint curve meets the upper one near x1={bad:.4f}")

    def m_upper(self, x1):
        return self.c_upper.right_derivative(x1)

    def m_lower(self, x1):
        return self.c_lower.right_derivative(x1)


def trig_profile():
    """The trigonometric band used by both numerical experiments."""
    return ConstraintProfile("4*sin(10*x1 + 5) - 2*sin(18*x1**3) + 10",
                             "4*sin(10*x1 + 5) - 2*sin(18*x1**3) - 2")


class PhaseSystem:
    """Acceleration bounds plus state constraints: everything that defines the region.

    Parameters
    ----------
    dynamics
        Object with ``bounds(x1, x2) -> (D, A)``; a :class:`ProjectedDynamics`,
        :class:`ConstantBounds` or :class:`FunctionBounds`.
    profile : ConstraintProfile
    clip_to_dynamic_limits : bool
        Replace ``C_u`` by ``min(C_u, velocity-limit curve)`` so that the upper
        boundary coincides with the locus ``D = A`` wherever the latter is lower.
    """

    def __init__(self, dynamics, profile, clip_to_dynamic_limits=False):
        self.dynamics = dynamics
        self.profile = profile
        self.clip = bool(clip_to_dynamic_limits)
        self._vlc_cache = {}

    # -- acceleration bounds -------------------------------------------------
    def bounds(self, x1, x2):
        return self.dynamics.bounds(x1, x2)

    def bounds_vec(self, x1, x2):
        return self.dynamics.bounds_vec(x1, x2)

    def input(self, x1, x2, lam, buffer=0.0):
        d, a = self.dynamics.bounds(x1, x2)
        span = a - d
        return d + buffer * span + lam * (1.0 - 2.0 * buffer) * span

    # -- constraint curves ---------------------------------------------------
    def raw_upper(self, x1):
        return self.profile.c_upper(x1)

    def upper(self, x1):
        cu = self.profile.c_upper(x1)
        if self.clip:
            return min(cu, self.velocity_limit(x1))
        return cu

    def lower(self, x1):
        return max(self.profile.c_lower(x1), 0.0)

    def m_upper(self, x1):
        if self.clip:
            return _Curve.right_derivative(_Bound(self.upper), x1)
        return self.profile.m_upper(x1)

    def m_lower(self, x1):
        cl = self.profile.c_lower(x1)
        ml = self.profile.m_lower(x1)
        # the effective lower curve is max(C_l, 0)
        if cl > 0.0 or (cl == 0.0 and ml > 0.0):
            return ml
        return 0.0

    def curve(self, which):
        if which == "upper":
            return self.upper
        if which == "lower":
            return self.lower
        raise InputError(f"unknown boundary {which!r}; expected 'upper' or 'lower'")

    def slope(self, which):
        return self.m_upper if which == "upper" else self.m_lower

    def slice(self, x1):
        """The constraint segment ``(C_l(x1), C_u(x1))``; the lower end is not clamped at 0."""
        if not 0.0 <= x1 <= 1.0:
            raise InputError(f"path coordinate {x1} outside [0, 1]")
        return self.profile.c_lower(x1), self.upper(x1)

    # -- admissibility -------------------------------------------------------
    def dynamic_ok(self, x1, x2):
        d, a = self.dynamics.bounds(x1, x2)
        return d <= a and self.dynamics.zero_inertia_feasible(x1, x2)

    def admissible(self, x1, x2, tol=0.0):
        if not (-tol <= x1 <= 1.0 + tol) or x2 < -tol:
            return False
        x1c = min(max(x1, 0.0), 1.0)
        if x2 > self.profile.c_upper(x1c) + tol or x2 < self.profile.c_lower(x1c) - tol:
            return False
        if self.clip and x2 > self.upper(x1c) + tol:
            return False
        try:
            d, a = self.dynamics.bounds(x1c, max(x2, 0.0))
        except Exception:
            return False
        if d > a + tol * max(1.0, abs(a)):
            return False
        return self.dynamics.zero_inertia_feasible(x1c, max(x2, 0.0))

    def admissible_vec(self, x1, x2):
        """Vectorised membership for a scalar ``x1`` and an array of ``x2``."""
        x2 = np.asarray(x2, dtype=float)
        if not 0.0 <= x1 <= 1.0:
            return np.zeros(x2.shape, dtype=bool)
        ok = (x2 >= 0.0) & (x2 >= self.profile.c_lower(x1)) & (x2 <= self.upper(x1))
        d, a = self.dynamics.bounds_vec(x1, np.maximum(x2, 0.0))
        ok &= d <= a
        ok &= self.dynamics.zero_inertia_feasible_vec(x1, np.maximum(x2, 0.0))
        return ok

    # -- velocity-limit curve ------------------------------------------------
    def velocity_limit(self, x1, samples=64):
        """Largest ``x2`` in ``[0, C_u(x1)]`` below which the input interval is non-empty.

        Returns ``C_u(x1)`` when no dynamic limit is met below the constraint
        curve, and ``0.0`` if even ``x2 = 0`` is dynamically infeasible.
        """
        x1 = float(x1)
        hit = self._vlc_cache.get(x1)
        if hit is not None:
            return hit
        top = self.profile.c_upper(x1)
        exact = getattr(self.dynamics, "feasible_w_interval", None)
        interval = exact(x1) if exact is not None else None
        if interval is not None:
            w_lo, w_hi = interval
            if w_lo > 0.0 or w_hi < 0.0:
                val = 0.0
            elif w_hi >= top * top:
                val = top
            else:
                val = math.sqrt(w_hi)
            self._vlc_cache[x1] = val
            return val
        xs = np.linspace(0.0, max(top, 0.0), samples + 1)
        ok = [self.dynamic_ok(x1, v) for v in xs]
        if ok[-1] and all(ok):
            val = top
        elif not ok[0]:
            val = 0.0
        else:
            k = ok.index(False)
            lo, hi = xs[k - 1], xs[k]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                if self.dynamic_ok(x1, mid):
                    lo = mid
                else:
                    hi = mid
            val = lo
        if len(self._vlc_cache) > 200_000:
            self._vlc_cache.clear()
        self._vlc_cache[x1] = val
        return val

    def clipped_where(self, grid=1001):
        """``x1`` grid points where the velocity-limit curve lies below ``C_u``."""
        xs = np.linspace(0.0, 1.0, grid)
        return xs[[self.velocity_limit(x) < self.profile.c_upper(x) for x in xs]]


class _Bound(_Curve):
    def __init__(self, fn):
        self.fn = fn

    def __call__(self, x1):
        return self.fn(x1)


def distance_to(system, which, x1, x2):
    return abs(x2 - system.curve(which)(x1))


def isclose_curve(system, which, x1, x2, tol=1e-6):
    return math.isfinite(x2) and distance_to(system, which, x1, x2) <= tol
