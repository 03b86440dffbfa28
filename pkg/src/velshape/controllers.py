"""Actuation-level feedback laws ``lambda(x)`` and the input map.

The input applied at a state is ``u = D~ + lambda (A~ - D~)`` where
``A~, D~`` are the acceleration bounds shrunk towards each other by a buffer
fraction of ``A - D``.  A buffer of zero gives the plain interpolation
between the extreme accelerations.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigurationError, DegenerateStateError, InputError, OutsideSetError
from .expressions import Expression

SURFACE_TOL = 1e-9


def _clamp(v):
    return min(max(v, 0.0), 1.0)


def buffered_bounds(d, a, buffer):
    span = a - d
    return d + buffer * span, a - buffer * span


def _check_buffer(buffer):
    buffer = float(buffer)
    if not 0.0 <= buffer < 0.5:
        raise ConfigurationError(f"bound buffer must lie in [0, 0.5), got {buffer}")
    return buffer


def control_input(system, x, lam, buffer=0.0, check=True):
    """Path acceleration realised by actuation level ``lam`` at state ``x``.

    Raises
    ------
    InputError
        If ``lam`` is outside ``[0, 1]`` or ``x`` is inadmissible (when ``check``).
    """
    x1, x2 = float(x[0]), float(x[1])
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"actuation level {lam} outside [0, 1]")
    buffer = _check_buffer(buffer)
    if check and not system.admissible(x1, x2, tol=1e-9):
        raise InputError(f"state ({x1}, {x2}) is not admissible")
    d, a = system.bounds(min(max(x1, 0.0), 1.0), max(x2, 0.0))
    d_t, a_t = buffered_bounds(d, a, buffer)
    return d_t + lam * (a_t - d_t)


# the name used throughout the docs; shadows the builtin only inside this module
input = control_input


# -- switching curves ----------------------------------------------------------

class GCurve:
    """Switching curve ``g(x1)`` from polynomial coefficients or an expression.

    Coefficient lists follow :func:`numpy.polyval` order (highest degree first).
    """

    def __init__(self, spec):
        self.spec = spec
        if isinstance(spec, GCurve):
            self._f, self._df, self.source = spec._f, spec._df, spec.source
        elif isinstance(spec, (int, float)):
            c = float(spec)
            self._f, self._df, self.source = (lambda x: c), (lambda x: 0.0), repr(c)
        elif isinstance(spec, str):
            e = Expression(spec, ("x1",))
            de = e.diff("x1")
            self._f, self._df, self.source = e, de, spec
        elif isinstance(spec, (list, tuple, np.ndarray)):
            coef = np.asarray(spec, dtype=float)
            if coef.ndim != 1 or coef.size == 0:
                raise ConfigurationError("polynomial coefficient list must be non-empty and flat")
            dcoef = np.polyder(coef) if coef.size > 1 else np.zeros(1)
            self._f = lambda x: float(np.polyval(coef, x))
            self._df = lambda x: float(np.polyval(dcoef, x))
            self.source = "poly" + str([float(v) for v in coef])
        elif callable(spec):
            self._f = spec
            self._df = lambda x, h=1e-6: (spec(x + h) - spec(x - h)) / (2 * h)
            self.source = "callable"
        else:
            raise ConfigurationError(f"cannot interpret {spec!r} as a switching curve")

    def __call__(self, x1):
        return float(self._f(x1))

    def slope(self, x1):
        return float(self._df(x1))

    def __repr__(self):
        return f"GCurve({self.source})"


def saturation_lambda(g1, g2, x):
    """Affine ramp: 0 above ``g1``, 1 below ``g2``."""
    x1, x2 = float(x[0]), float(x[1])
    hi, lo = g1(x1), g2(x1)
    if not hi > lo:
        raise ConfigurationError(f"saturation curves need g1 > g2; at x1={x1} g1={hi}, g2={lo}")
    if x2 >= hi:
        return 0.0
    if x2 <= lo:
        return 1.0
    return (x2 - hi) / (lo - hi)


def boundary_lambda(ras, x, strict=True):
    """Level interpolating between ``Z_u`` (0) and ``Z_l`` (1) of a reach-avoid set.

    Raises
    ------
    OutsideSetError
        If ``strict`` and ``x`` is not in the set.
    """
    from .reach_avoid import contains

    x1, x2 = float(x[0]), float(x[1])
    if strict and not contains(ras, (x1, x2), tol=1e-9):
        raise OutsideSetError(f"state ({x1}, {x2}) lies outside the reach-avoid set")
    x1 = min(max(x1, ras.x1_min), ras.target.c)
    zl, zu = ras.bounds_at(x1)
    if zl == zu:
        return 0.5
    return _clamp((x2 - zu) / (zl - zu))


def bang_bang_lambda(g, x):
    x1, x2 = float(x[0]), float(x[1])
    return 1.0 if x2 < g(x1) else 0.0


def sliding_lambda(g, dg, system, x, band=SURFACE_TOL, buffer=0.0):
    """Bang-bang off the surface ``x2 = g(x1)``; on it, the level that keeps the flow tangent.

    On the surface the residual ``|(-m, 1) . f(x, lambda)|`` with ``m = g'(x1)``
    is affine in ``lambda`` and is zeroed (then clamped) in closed form.
    """
    x1, x2 = float(x[0]), float(x[1])
    gap = x2 - g(x1)
    if gap < -band:
        return 1.0
    if gap > band:
        return 0.0
    d, a = system.bounds(min(max(x1, 0.0), 1.0), max(x2, 0.0))
    d, a = buffered_bounds(d, a, buffer)
    if a == d:
        raise DegenerateStateError(f"empty input range at ({x1}, {x2}); cannot slide")
    return _clamp((dg(x1) * x2 - d) / (a - d))


# -- policy objects ------------------------------------------------------------

class ActuationPolicy:
    """Immutable feedback law ``lambda(x1, x2)`` with an input buffer."""

    kind = "abstract"

    def __init__(self, buffer=0.0):
        self.buffer = _check_buffer(buffer)

    def __call__(self, x1, x2):
        raise NotImplementedError

    def level(self, x):
        return self(float(x[0]), float(x[1]))

    def describe(self):
        return self.kind

    def with_buffer(self, buffer):
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.buffer = _check_buffer(buffer)
        return clone


class ConstantPolicy(ActuationPolicy):
    kind = "constant"

    def __init__(self, lam, buffer=0.0):
        super().__init__(buffer)
        if not 0.0 <= lam <= 1.0:
            raise ConfigurationError(f"constant level {lam} outside [0, 1]")
        self.lam = float(lam)

    def __call__(self, x1, x2):
        return self.lam

    def describe(self):
        return f"constant({self.lam:g})"


class SaturationPolicy(ActuationPolicy):
    kind = "saturation"

    def __init__(self, g1, g2, buffer=0.0, check_grid=1001):
        super().__init__(buffer)
        self.g1, self.g2 = GCurve(g1), GCurve(g2)
        for x in np.linspace(0.0, 1.0, check_grid):
            if not self.g1(x) > self.g2(x):
                raise ConfigurationError(f"saturation curves need g1 > g2 on [0, 1]; fails at x1={x:.4f}")

    def __call__(self, x1, x2):
        hi = self.g1(x1)
        if x2 >= hi:
            return 0.0
        lo = self.g2(x1)
        if x2 <= lo:
            return 1.0
        return (x2 - hi) / (lo - hi)

    def describe(self):
        return f"saturation(g1={self.g1.source}, g2={self.g2.source})"


class BoundaryPolicy(ActuationPolicy):
    kind = "boundary-derived"

    def __init__(self, ras, buffer=0.0, strict=False):
        super().__init__(buffer)
        self.ras = ras
        self.strict = strict

    def __call__(self, x1, x2):
        return boundary_lambda(self.ras, (x1, x2), strict=self.strict)


class BangBangPolicy(ActuationPolicy):
    kind = "bang-bang"

    def __init__(self, g, buffer=0.0):
        super().__init__(buffer)
        self.g = GCurve(g)

    def __call__(self, x1, x2):
        return 1.0 if x2 < self.g(x1) else 0.0

    def describe(self):
        return f"bang-bang(g={self.g.source})"


class SlidingPolicy(ActuationPolicy):
    """Sliding-mode-like law; ``sample_period`` widens the surface band to ``T |u|max``."""

    kind = "sliding-mode"

    def __init__(self, g, system, buffer=0.0, band=SURFACE_TOL, sample_period=None):
        super().__init__(buffer)
        self.g = GCurve(g)
        self.system = system
        self.band = float(band)
        self.sample_period = sample_period

    def _band(self, x1, x2):
        if not self.sample_period:
            return self.band
        d, a = self.system.bounds(min(max(x1, 0.0), 1.0), max(x2, 0.0))
        return max(self.band, self.sample_period * max(abs(a), abs(d)))

    def __call__(self, x1, x2):
        return sliding_lambda(self.g, self.g.slope, self.system, (x1, x2),
                              band=self._band(x1, x2), buffer=self.buffer)

    def describe(self):
        return f"sliding-mode(g={self.g.source})"


POLICY_KINDS = ("saturation", "boundary-derived", "bang-bang", "sliding-mode", "constant")


def policy_from_config(spec, system=None, ras=None, sample_period=None):
    """Build a policy from the ``policy`` section of a scenario file."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError("policy section needs a 'kind'")
    kind = spec["kind"]
    buffer = spec.get("buffer", 0.0)
    try:
        if kind == "saturation":
            return SaturationPolicy(spec["g1"], spec["g2"], buffer)
        if kind == "bang-bang":
            return BangBangPolicy(spec["g"], buffer)
        if kind == "sliding-mode":
            if system is None:
                raise ConfigurationError("sliding-mode policy needs the phase system")
            return SlidingPolicy(spec["g"], system, buffer, sample_period=sample_period)
        if kind == "constant":
            return ConstantPolicy(float(spec["lambda"]), buffer)
        if kind == "boundary-derived":
            if ras is None:
                raise ConfigurationError("boundary-derived policy needs a reach-avoid set")
            return BoundaryPolicy(ras, buffer)
    except KeyError as exc:
        raise ConfigurationError(f"policy {kind!r} is missing field {exc.args[0]!r}") from exc
    raise ConfigurationError(f"unknown policy kind {kind!r}; expected one of {POLICY_KINDS}")


def fitted_lipschitz(policy, xs, ys):
    """Largest finite-difference quotient of ``policy`` over a tensor grid."""
    vals = np.array([[policy(a, b) for b in ys] for a in xs])
    q1 = np.abs(np.diff(vals, axis=0)) / np.diff(xs)[:, None]
    q2 = np.abs(np.diff(vals, axis=1)) / np.diff(ys)[None, :]
    return float(max(q1.max(initial=0.0), q2.max(initial=0.0)))
