"""Projection of joint-space dynamics onto a prescribed path ``q(s)``.

Along the path the manipulator obeys, per joint ``i``::

    M_i(s) sdd + C_i(s) sd**2 + g_i(s) = tau_i

and the torque limits turn into state-dependent bounds ``D(x) <= sdd <= A(x)``
on the path acceleration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError, DegenerateStateError, InputError
from .expressions import Expression
from .model import eval_dynamics


@dataclass(frozen=True)
class PathSpec:
    """A twice-differentiable joint path ``q(s)``, ``s in [0, 1]``."""

    q: Callable
    dq: Callable
    ddq: Callable
    alpha0: float
    n_joints: int
    name: str = "path"

    @classmethod
    def from_callables(cls, q, dq=None, ddq=None, n_joints=None, name="path", h=1e-6):
        """Wrap plain callables; missing derivatives use central differences."""
        if dq is None:
            def dq(s, _q=q):
                return (np.asarray(_q(s + h)) - np.asarray(_q(s - h))) / (2 * h)
        if ddq is None:
            def ddq(s, _q=q):
                return (np.asarray(_q(s + h)) - 2 * np.asarray(_q(s)) + np.asarray(_q(s - h))) / h ** 2
        n = n_joints or len(np.atleast_1d(q(0.0)))
        return cls._validated(q, dq, ddq, n, name)

    @classmethod
    def from_expressions(cls, exprs, name="path"):
        """Path given as one expression string in ``s`` per joint.

        Derivatives are taken symbolically.
        """
        if not exprs:
            raise ConfigurationError("path needs at least one joint expression")
        q_e = [Expression(e, ("s",)) for e in exprs]
        dq_e = [e.diff("s") for e in q_e]
        ddq_e = [e.diff("s") for e in dq_e]

        def make(es):
            return lambda s: np.array([e(s) for e in es])
        return cls._validated(make(q_e), make(dq_e), make(ddq_e), len(exprs), name)

    @classmethod
    def _validated(cls, q, dq, ddq, n, name, samples=1001):
        norms = np.array([np.linalg.norm(dq(s)) for s in np.linspace(0.0, 1.0, samples)])
        if not np.all(np.isfinite(norms)):
            raise ConfigurationError(f"path {name!r} has non-finite derivative")
        alpha0 = float(norms.min())
        if alpha0 <= 0.0:
            raise ConfigurationError(f"path {name!r} has a vanishing derivative (|dq/ds| = 0)")
        return cls(q, dq, ddq, alpha0, n, name)


def straight_line(q_start, q_end):
    """Joint-space line ``q(s) = q_start + s (q_end - q_start)``."""
    q0 = np.asarray(q_start, dtype=float)
    delta = np.asarray(q_end, dtype=float) - q0
    zero = np.zeros_like(q0)
    return PathSpec._validated(lambda s: q0 + s * delta, lambda s: delta.copy(),
                               lambda s: zero.copy(), len(q0), "straight_line")


CIRCULAR_ARC = (
    "atan2(0.3 - 0.15*sin(pi*s), 0.1 + 0.15*cos(pi*s))"
    " - acos(((0.1 + 0.15*cos(pi*s))**2 + (0.3 - 0.15*sin(pi*s))**2)"
    " / (0.4*sqrt((0.1 + 0.15*cos(pi*s))**2 + (0.3 - 0.15*sin(pi*s))**2)))",
    "pi - acos(1 - 12.5*((0.1 + 0.15*cos(pi*s))**2 + (0.3 - 0.15*sin(pi*s))**2))",
)


def circular_arc():
    """Half circle of radius 0.15 m about (0.1, 0.3) traced by the two-link arm."""
    return PathSpec.from_expressions(list(CIRCULAR_ARC), name="circular_arc")


def project(model, path, x1):
    """Projected vectors ``(M, C, g)`` at path coordinate ``x1``.

    ``C`` collects the velocity-quadratic terms so that ``C x2**2`` equals
    ``M_L ddq x2**2 + C_L(q, dq x2) dq x2``; ``C_L`` is linear in the velocity
    so it is evaluated once at ``qd = dq``.
    """
    x1 = float(x1)
    if not 0.0 <= x1 <= 1.0:
        raise InputError(f"path coordinate {x1} outside [0, 1]")
    q = np.asarray(path.q(x1), dtype=float)
    dq = np.asarray(path.dq(x1), dtype=float)
    ddq = np.asarray(path.ddq(x1), dtype=float)
    ml, cl, gl = eval_dynamics(model, q, dq)
    return ml @ dq, ml @ ddq + cl @ dq, gl


class ProjectedDynamics:
    """Path-projected dynamics plus torque limits: the source of ``D(x)``, ``A(x)``.

    The projected vectors depend on ``x1`` only and are memoised per ``x1``;
    trajectories on a fixed grid revisit the same abscissae many times.
    """

    def __init__(self, model, path, limits=None, zero_inertia_tol=1e-9):
        limits = limits if limits is not None else model.limits
        if limits is None:
            raise ConfigurationError("torque limits are required (model has none attached)")
        if limits.n_joints != model.n_joints or path.n_joints != model.n_joints:
            raise ConfigurationError("model, path and torque limits disagree on joint count")
        if zero_inertia_tol <= 0:
            raise ConfigurationError("zero_inertia_tol must be positive")
        self.model = model
        self.path = path
        self.limits = limits
        self.zero_inertia_tol = float(zero_inertia_tol)
        self._cache = {}

    @property
    def n_joints(self):
        return self.model.n_joints

    def vectors(self, x1):
        x1 = float(x1)
        hit = self._cache.get(x1)
        if hit is None:
            hit = project(self.model, self.path, x1)
            if len(self._cache) > 500_000:
                self._cache.clear()
            self._cache[x1] = hit
        return hit

    def bounds(self, x1, x2):
        """``(D, A)`` at a scalar state; raises if every ``M_i`` vanishes."""
        m, c, g = self.vectors(x1)
        lo, hi = self.limits(x1, x2)
        active = np.abs(m) >= self.zero_inertia_tol
        if not active.any():
            raise DegenerateStateError(f"all projected inertias vanish at x1={x1}")
        rest = c * (x2 * x2) + g
        a_hi = (hi - rest)[active] / m[active]
        a_lo = (lo - rest)[active] / m[active]
        pos = m[active] > 0
        upper = np.where(pos, a_hi, a_lo)
        lower = np.where(pos, a_lo, a_hi)
        return float(lower.max()), float(upper.min())

    def bounds_vec(self, x1, x2):
        """``(D, A)`` arrays for a scalar ``x1`` and an array of ``x2``."""
        m, c, g = self.vectors(x1)
        x2 = np.asarray(x2, dtype=float)
        lo, hi = self.limits.vec(np.full(x2.shape, float(x1)), x2)
        active = np.abs(m) >= self.zero_inertia_tol
        if not active.any():
            raise DegenerateStateError(f"all projected inertias vanish at x1={x1}")
        dmax = np.full(x2.shape, -np.inf)
        amin = np.full(x2.shape, np.inf)
        w = x2 * x2
        for i in np.flatnonzero(active):
            rest = c[i] * w + g[i]
            hi_i = (hi[i] - rest) / m[i]
            lo_i = (lo[i] - rest) / m[i]
            if m[i] > 0:
                amin = np.minimum(amin, hi_i)
                dmax = np.maximum(dmax, lo_i)
            else:
                amin = np.minimum(amin, lo_i)
                dmax = np.maximum(dmax, hi_i)
        return dmax, amin

    def zero_inertia_feasible(self, x1, x2):
        m, c, g = self.vectors(x1)
        idle = np.abs(m) < self.zero_inertia_tol
        if not idle.any():
            return True
        lo, hi = self.limits(x1, x2)
        val = c[idle] * x2 * x2 + g[idle]
        return bool(np.all(lo[idle] <= val) and np.all(val <= hi[idle]))

    def zero_inertia_feasible_vec(self, x1, x2):
        m, c, g = self.vectors(x1)
        x2 = np.asarray(x2, dtype=float)
        idle = np.flatnonzero(np.abs(m) < self.zero_inertia_tol)
        ok = np.ones(x2.shape, dtype=bool)
        if idle.size:
            lo, hi = self.limits.vec(np.full(x2.shape, float(x1)), x2)
            for i in idle:
                val = c[i] * x2 * x2 + g[i]
                ok &= (lo[i] <= val) & (val <= hi[i])
        return ok

    def feasible_w_interval(self, x1):
        """Interval of ``w = x2**2`` where the input range is non-empty.

        Only available for constant torque limits: then every ``A_i`` and
        ``D_i`` is affine in ``w`` and feasibility is an intersection of
        half-lines.  Returns ``None`` for state-dependent limits and
        ``(inf, -inf)`` when nothing is feasible.
        """
        if not self.limits.is_constant:
            return None
        m, c, g = self.vectors(x1)
        lo, hi = self.limits(x1, 0.0)
        active = np.abs(m) >= self.zero_inertia_tol
        if not active.any():
            raise DegenerateStateError(f"all projected inertias vanish at x1={x1}")
        # affine pieces p + q w
        ma, ca, ga = m[active], c[active], g[active]
        pos = ma > 0
        up_tau = np.where(pos, hi[active], lo[active])
        dn_tau = np.where(pos, lo[active], hi[active])
        a_p, a_q = (up_tau - ga) / ma, -ca / ma
        d_p, d_q = (dn_tau - ga) / ma, -ca / ma
        # D_i(w) - A_j(w) <= 0 for all pairs
        p = (d_p[:, None] - a_p[None, :]).ravel()
        q = (d_q[:, None] - a_q[None, :]).ravel()
        idle = ~active
        if idle.any():
            # lo <= c w + g <= hi
            p = np.concatenate([p, g[idle] - hi[idle], lo[idle] - g[idle]])
            q = np.concatenate([q, c[idle], -c[idle]])
        w_lo, w_hi = 0.0, np.inf
        flat = np.abs(q) < 1e-300
        if np.any(p[flat] > 0.0):
            return np.inf, -np.inf
        grow = (q > 0) & ~flat
        shrink = (q < 0) & ~flat
        if grow.any():
            w_hi = float(np.min(-p[grow] / q[grow]))
        if shrink.any():
            w_lo = max(0.0, float(np.max(-p[shrink] / q[shrink])))
        return w_lo, w_hi

    def torques(self, x1, x2, u):
        """Joint torques ``M u + C x2**2 + g`` needed to realise ``u`` at ``(x1, x2)``."""
        m, c, g = self.vectors(x1)
        return m * u + c * x2 * x2 + g

    def torque_limits(self, x1, x2):
        return self.limits(x1, x2)


@dataclass(frozen=True)
class ConstantBounds:
    """State-independent acceleration bounds ``D <= u <= A`` (synthetic scenarios)."""

    lower: float
    upper: float

    def bounds(self, x1, x2):
        return float(self.lower), float(self.upper)

    def bounds_vec(self, x1, x2):
        x2 = np.asarray(x2, dtype=float)
        return np.full(x2.shape, float(self.lower)), np.full(x2.shape, float(self.upper))

    def zero_inertia_feasible(self, x1, x2):
        return True

    def zero_inertia_feasible_vec(self, x1, x2):
        return np.ones(np.shape(x2), dtype=bool)


@dataclass(frozen=True)
class FunctionBounds:
    """Acceleration bounds given by a Python callable ``fn(x1, x2) -> (D, A)``."""

    fn: Callable
    name: str = field(default="function")

    def bounds(self, x1, x2):
        d, a = self.fn(x1, x2)
        return float(d), float(a)

    def bounds_vec(self, x1, x2):
        x2 = np.asarray(x2, dtype=float)
        out = [self.fn(x1, v) for v in x2.ravel()]
        d = np.array([o[0] for o in out], dtype=float).reshape(x2.shape)
        a = np.array([o[1] for o in out], dtype=float).reshape(x2.shape)
        return d, a

    def zero_inertia_feasible(self, x1, x2):
        return True

    def zero_inertia_feasible_vec(self, x1, x2):
        return np.ones(np.shape(x2), dtype=bool)


def accel_bounds(dynamics, x1, x2):
    """Module-level alias of ``dynamics.bounds``: returns ``(D, A)``."""
    if not 0.0 <= x1 <= 1.0:
        raise InputError(f"path coordinate {x1} outside [0, 1]")
    return dynamics.bounds(x1, x2)


def zero_inertia_feasible(dynamics, x1, x2):
    return dynamics.zero_inertia_feasible(x1, x2)

