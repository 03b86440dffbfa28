"""Reach-avoid sets for the path-projected double integrator.

The set is bounded above by ``Z_u`` and below by ``Z_l``.  Both start at the
target slice and are built right to left from extreme trajectories
(``lambda = 0`` for the upper bound, ``lambda = 1`` for the lower bound)
spliced with pieces of the constraint curves wherever the tangent-cone test
``S(x) <= 0`` certifies that the curve itself can be followed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev
from scipy.optimize import minimize

from .exceptions import InputError
from .phase import isclose_curve
from .trajectory import BOUNDARY_TOL, DEFAULT_GRID, State, grid_nodes, integrate, leftmost

ROOT_TOL = 1e-9
SCAN_STEP = 1e-4
TAG_TRAJECTORY = "extreme-trajectory"
TAG_CONSTRAINT = "constraint-curve"
TAG_EPSILON = "epsilon-step"


@dataclass(frozen=True)
class TargetSet:
    """Vertical target segment ``{x1 = c, x2_low <= x2 <= x2_high}``."""

    c: float
    x2_low: float
    x2_high: float

    def __post_init__(self):
        if not 0.0 < self.c <= 1.0:
            raise InputError(f"target abscissa {self.c} outside (0, 1]")
        if not self.x2_low <= self.x2_high:
            raise InputError("target needs x2_low <= x2_high")

    @property
    def upper_corner(self):
        return State(self.c, self.x2_high)

    @property
    def lower_corner(self):
        return State(self.c, self.x2_low)

    def contains(self, x1, x2, tol=1e-9):
        return abs(x1 - self.c) <= tol and self.x2_low - tol <= x2 <= self.x2_high + tol

    def admissible_in(self, system, samples=21):
        return all(system.admissible(self.c, v, tol=1e-9)
                   for v in np.linspace(self.x2_low, self.x2_high, samples))


@dataclass
class BoundaryCurve:
    """Polyline ``x2 = Z(x1)`` sorted by ``x1`` with one provenance tag per point.

    Epsilon steps appear as two consecutive points sharing the same ``x1``.
    """

    x1: np.ndarray
    x2: np.ndarray
    tags: list
    failures: list = field(default_factory=list)

    @classmethod
    def from_reversed(cls, xs, ys, tags, failures=()):
        """Build from points collected right to left."""
        return cls(np.asarray(xs[::-1], dtype=float), np.asarray(ys[::-1], dtype=float),
                   list(tags[::-1]), list(failures))

    def __len__(self):
        return len(self.x1)

    @property
    def x1_range(self):
        return float(self.x1[0]), float(self.x1[-1])

    def __call__(self, x1):
        return np.interp(x1, self.x1, self.x2)

    def step_points(self):
        return [float(self.x1[k]) for k, t in enumerate(self.tags) if t == TAG_EPSILON]


@dataclass
class Interval:
    lo: float
    hi: float
    inside: bool

    @property
    def label(self):
        return "in" if self.inside else "out"


@dataclass
class ReachAvoidSet:
    """The pair ``(Z_u, Z_l)`` plus diagnostics of how it was built."""

    upper: BoundaryCurve
    lower: BoundaryCurve
    target: TargetSet
    epsilon: float
    x1_min: float
    terminals: dict = field(default_factory=dict)
    intervals: dict = field(default_factory=dict)
    clipped: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def empty(self):
        return self.x1_min >= self.target.c

    def bounds_at(self, x1):
        return float(self.lower(x1)), float(self.upper(x1))

    def contains(self, x1, x2, tol=0.0):
        return contains(self, State(float(x1), float(x2)), tol)


# -- tangent-cone test -------------------------------------------------------

def cone_margin(system, x, which, check=True):
    """``S(x)`` at a state on the named constraint curve; ``S <= 0`` means "can stay".

    Raises
    ------
    InputError
        If ``check`` and ``x`` is farther than 1e-6 from the curve.
    """
    x1, x2 = float(x[0]), float(x[1])
    curve = system.curve(which)
    if check and abs(x2 - curve(x1)) > BOUNDARY_TOL:
        raise InputError(f"state ({x1}, {x2}) is not on the {which} constraint curve")
    d, a = system.bounds(x1, max(x2, 0.0))
    if which == "upper":
        return -system.m_upper(x1) * x2 + d
    return system.m_lower(x1) * x2 - a


def _margin_on_curve(system, which, x1):
    return cone_margin(system, (x1, system.curve(which)(x1)), which, check=False)


def fit_overapproximation(xs, values, degree, fit_points=400):
    """Chebyshev polynomial ``p`` with ``p >= values`` on ``xs``, close in least squares.

    The fit is a constrained least-squares problem solved on a subsample;
    a final constant shift enforces the inequality on every sample.
    """
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = xs[0], xs[-1]
    t = 2.0 * (xs - lo) / (hi - lo) - 1.0
    pick = np.unique(np.linspace(0, xs.size - 1, min(fit_points, xs.size)).astype(int))
    basis = chebyshev.chebvander(t[pick], degree)
    target = values[pick]
    start = np.linalg.lstsq(basis, target, rcond=None)[0]
    start[0] += max(0.0, float(np.max(target - basis @ start)))
    res = minimize(lambda c: 0.5 * np.sum((basis @ c - target) ** 2), start,
                   jac=lambda c: basis.T @ (basis @ c - target),
                   constraints=[{"type": "ineq", "fun": lambda c: basis @ c - target,
                                 "jac": lambda c: basis}],
                   method="SLSQP", options={"maxiter": 200})
    coef = res.x if res.success else start
    gap = float(np.max(values - chebyshev.chebval(t, coef)))
    if gap > 0.0:
        coef = coef.copy()
        coef[0] += gap

    def poly(x):
        return chebyshev.chebval(2.0 * (np.asarray(x, dtype=float) - lo) / (hi - lo) - 1.0, coef)
    poly.coef = coef
    return poly


def partition_intervals(system, which, span, scan_step=SCAN_STEP, tol=ROOT_TOL,
                        poly_degree=None, margin=None):
    """Split ``span = (x1_end, x1_start)`` into maximal sign intervals of ``S``.

    Intervals are returned right to left, so the first one contains
    ``x1_start``.  ``margin`` replaces ``S`` (a callable of ``x1``) and is
    mainly a test hook.  With ``poly_degree`` the sign is taken from a
    polynomial over-approximation of ``S``, which can only shrink the
    "in" intervals.
    """
    end, start = float(span[0]), float(span[1])
    if not (0.0 <= end < start <= 1.0):
        raise InputError(f"degenerate or out-of-range span [{end}, {start}]")
    if margin is None:
        def margin(x1):
            return _margin_on_curve(system, which, x1)
    n = max(2, int(math.ceil((start - end) / scan_step)) + 1)
    xs = np.linspace(end, start, n)
    values = np.array([margin(float(x)) for x in xs])
    if poly_degree is not None:
        poly = fit_overapproximation(xs, values, int(poly_degree))
        values = poly(xs)

        def margin(x1, _p=poly):
            return float(_p(x1))
    inside = values <= 0.0
    cuts = []
    for k in np.flatnonzero(inside[1:] != inside[:-1]):
        lo, hi = xs[k], xs[k + 1]
        lo_in = inside[k]
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if (margin(mid) <= 0.0) == lo_in:
                lo = mid
            else:
                hi = mid
        cuts.append(0.5 * (lo + hi))
    edges = [end] + cuts + [start]
    labels = [bool(inside[0])]
    for _ in cuts:
        labels.append(not labels[-1])
    out = [Interval(edges[k], edges[k + 1], labels[k]) for k in range(len(labels))]
    return out[::-1]


# -- boundary extension ------------------------------------------------------

class _Collector:
    """Right-to-left point accumulator for one boundary."""

    def __init__(self, x1, x2, tag):
        self.xs, self.ys, self.tags = [x1], [x2], [tag]

    @property
    def cursor(self):
        return self.xs[-1], self.ys[-1]

    def add(self, x1, x2, tag):
        if x1 > self.xs[-1] + 1e-12:
            raise AssertionError("boundary points must be collected right to left")
        if x1 == self.xs[-1] and x2 == self.ys[-1]:
            return
        self.xs.append(float(x1))
        self.ys.append(float(x2))
        self.tags.append(tag)

    def add_traj(self, traj, tag=TAG_TRAJECTORY):
        for a, b in zip(traj.x1[1:], traj.x2[1:]):
            self.add(a, b, tag)


def extend(system, which, span, lam, epsilon, grid=DEFAULT_GRID, intervals=None,
           poly_degree=None, max_steps=10_000):
    """Extend a boundary right to left along a constraint curve.

    Parameters
    ----------
    system : PhaseSystem
    which : {"upper", "lower"}
    span : (x1_end, x1_start)
    lam : {0, 1}
        Extreme actuation used for backward trajectories.
    epsilon : float
        Size of the step off the curve over intervals where it cannot be followed.
    intervals : list of Interval, optional
        Precomputed partition (right to left); computed when omitted.

    Returns
    -------
    BoundaryCurve
        Sorted by increasing ``x1``.  ``failures`` lists problems such as a
        backward trajectory leaving through the opposite constraint.
    """
    if which not in ("upper", "lower"):
        raise InputError(f"unknown boundary {which!r}")
    if lam not in (0, 1):
        raise InputError("extend() uses the extreme actuation levels 0 or 1")
    if not epsilon > 0.0:
        raise InputError("epsilon must be positive")
    end, start = float(span[0]), float(span[1])
    if intervals is None:
        intervals = partition_intervals(system, which, (end, start), poly_degree=poly_degree)
    curve = system.curve(which)
    delta = epsilon if lam == 1 else -epsilon
    z = _Collector(start, curve(start), TAG_CONSTRAINT)
    failures = []
    steps = 0

    def on_curve():
        x1, x2 = z.cursor
        return isclose_curve(system, which, x1, x2, BOUNDARY_TOL)

    def follow_curve(a):
        x1 = z.cursor[0]
        for node in grid_nodes(x1, a, grid):
            z.add(node, curve(node), TAG_CONSTRAINT)

    def backward(a):
        """Backward extreme trajectory from the cursor, cut at ``a``."""
        traj = integrate(system, z.cursor, float(lam), "backward", stop_x1=a, grid=grid,
                         check_start=False)
        z.add_traj(traj)
        if traj.status == "complete":
            return "done"
        if traj.exit_boundary == which or (which == "upper" and traj.exit_boundary == "dynamic"):
            # snap the bisected exit onto the curve it crossed
            x1 = z.xs[-1]
            z.ys[-1] = curve(x1)
            return "hit"
        return "escaped"

    for interval in intervals:
        a = interval.lo
        while z.cursor[0] > a + ROOT_TOL:
            steps += 1
            if steps > max_steps:
                failures.append(f"step budget exhausted in [{a:.6g}, {interval.hi:.6g}]")
                return BoundaryCurve.from_reversed(z.xs, z.ys, z.tags, failures)
            if interval.inside:
                if on_curve():
                    follow_curve(a)
                    continue
                outcome = backward(a)
            else:
                if on_curve():
                    x1, x2 = z.cursor
                    stepped = x2 + delta
                    if not system.admissible(x1, stepped, tol=1e-9):
                        failures.append(
                            f"epsilon step leaves the region at x1={x1:.6g} in "
                            f"out-interval [{a:.6g}, {interval.hi:.6g}]")
                        return BoundaryCurve.from_reversed(z.xs, z.ys, z.tags, failures)
                    z.xs.append(x1)
                    z.ys.append(stepped)
                    z.tags.append(TAG_EPSILON)
                outcome = backward(a)
            if outcome == "escaped":
                failures.append(
                    f"backward trajectory left through the opposite boundary at "
                    f"x1={z.cursor[0]:.6g} in {interval.label}-interval "
                    f"[{a:.6g}, {interval.hi:.6g}]")
                return BoundaryCurve.from_reversed(z.xs, z.ys, z.tags, failures)
    return BoundaryCurve.from_reversed(z.xs, z.ys, z.tags, failures)


# -- set construction --------------------------------------------------------

def classify_terminal(system, traj, tol=BOUNDARY_TOL):
    """Where the leftmost point of a backward trajectory lies.

    Returns ``"upper"``, ``"lower"``, ``"edge"`` (reached ``x1 = 0``) or
    ``"interior"``.  A point close to both curves goes to the one the
    trajectory actually crossed; constraint curves win over the edge.
    """
    x = leftmost(traj)
    near_u = isclose_curve(system, "upper", x.x1, x.x2, tol)
    near_l = isclose_curve(system, "lower", x.x1, x.x2, tol)
    if traj.status == "stalled":
        return "lower"
    if near_u and near_l:
        return "lower" if traj.exit_boundary == "lower" else "upper"
    if near_u:
        return "upper"
    if near_l:
        return "lower"
    if x.x1 <= ROOT_TOL:
        return "edge"
    return "interior"


def _with_extension(traj, ext):
    """Concatenate a backward trajectory and an extension sharing its leftmost point."""
    tx, ty = traj.ascending()
    keep = tx > ext.x1[-1]
    x1 = np.concatenate([ext.x1, tx[keep]])
    x2 = np.concatenate([ext.x2, ty[keep]])
    tags = list(ext.tags) + [TAG_TRAJECTORY] * int(keep.sum())
    return BoundaryCurve(x1, x2, tags, list(ext.failures))


def _plain(traj):
    tx, ty = traj.ascending()
    return BoundaryCurve(tx, ty, [TAG_TRAJECTORY] * len(tx))


def _clip_inverted(upper, lower, x1_min, c):
    """Sub-intervals of ``[x1_min, c]`` where ``Z_u < Z_l``."""
    xs = np.union1d(upper.x1, lower.x1)
    xs = xs[(xs >= x1_min) & (xs <= c)]
    if xs.size == 0:
        return []
    bad = upper(xs) < lower(xs) - 1e-12
    out = []
    k = 0
    while k < xs.size:
        if bad[k]:
            j = k
            while j + 1 < xs.size and bad[j + 1]:
                j += 1
            out.append((float(xs[max(k - 1, 0)]), float(xs[min(j + 1, xs.size - 1)])))
            k = j + 1
        else:
            k += 1
    return out


def compute_reach_avoid(system, target, epsilon=0.1, grid=DEFAULT_GRID, poly_degree=None):
    """Epsilon-approximate reach-avoid set of a vertical target segment.

    Parameters
    ----------
    system : PhaseSystem
    target : TargetSet
    epsilon : float
        Step size used where a constraint curve cannot be followed.
    grid : int
        Cells of the ``x1`` integration grid.
    poly_degree : int, optional
        Degree of the polynomial over-approximation of ``S`` used for the
        interval partition; exact sign scan when omitted.

    Returns
    -------
    ReachAvoidSet
    """
    if not epsilon > 0.0:
        raise InputError("epsilon must be positive")
    if not target.admissible_in(system):
        raise InputError("target inadmissible")
    t_u = integrate(system, target.upper_corner, 0.0, "backward", grid=grid)
    t_l = integrate(system, target.lower_corner, 1.0, "backward", grid=grid)
    x_d, x_a = leftmost(t_u), leftmost(t_l)
    kind_d = classify_terminal(system, t_u)
    kind_a = classify_terminal(system, t_l)
    flags = []
    intervals = {}

    def ext(which, lo, hi, lam):
        if hi - lo <= ROOT_TOL:
            return None
        parts = partition_intervals(system, which, (lo, hi), poly_degree=poly_degree)
        intervals[which] = parts
        return extend(system, which, (lo, hi), lam, epsilon, grid=grid, intervals=parts)

    z_u, z_l = _plain(t_u), _plain(t_l)
    if kind_a == "lower" and kind_d == "lower":
        e = ext("lower", min(x_d.x1, x_a.x1), max(x_d.x1, x_a.x1), 1)
        if e is not None:
            z_l = _with_extension(t_l, e)
    elif kind_a == "upper" and kind_d == "upper":
        e = ext("upper", min(x_d.x1, x_a.x1), max(x_d.x1, x_a.x1), 0)
        if e is not None:
            z_u = _with_extension(t_u, e)
    else:
        if kind_a == "lower":
            e = ext("lower", 0.0, x_a.x1, 1)
            if e is not None:
                z_l = _with_extension(t_l, e)
        if kind_d == "upper":
            e = ext("upper", 0.0, x_d.x1, 0)
            if e is not None:
                z_u = _with_extension(t_u, e)
    for name, kind in (("upper extreme trajectory", kind_d), ("lower extreme trajectory", kind_a)):
        if kind == "interior":
            flags.append(f"{name} ends inside the region; left part not extended")
    for name, z in (("upper", z_u), ("lower", z_l)):
        flags.extend(f"{name}: {msg}" for msg in z.failures)

    x1_min = max(z_u.x1[0], z_l.x1[0])
    clipped = _clip_inverted(z_u, z_l, x1_min, target.c)
    if clipped:
        flags.append(f"upper bound below lower bound on {len(clipped)} range(s); clipped out")
    if x1_min >= target.c:
        flags.append("empty set: both extreme trajectories leave immediately")
    return ReachAvoidSet(
        upper=z_u, lower=z_l, target=target, epsilon=float(epsilon), x1_min=float(x1_min),
        terminals={"x_d": x_d, "x_a": x_a, "x_d_on": kind_d, "x_a_on": kind_a},
        intervals=intervals, clipped=clipped, flags=flags)


def contains(ras, x, tol=0.0):
    """Membership ``Z_l(x1) <= x2 <= Z_u(x1)`` by linear interpolation (boundary inclusive)."""
    x1, x2 = float(x[0]), float(x[1])
    if ras.empty or not (ras.x1_min - tol <= x1 <= ras.target.c + tol):
        return False
    x1 = min(max(x1, ras.x1_min), ras.target.c)
    for lo, hi in ras.clipped:
        if lo < x1 < hi:
            return False
    zl, zu = ras.bounds_at(x1)
    return zl - tol <= x2 <= zu + tol


def contains_many(ras, states, tol=0.0):
    states = np.asarray(states, dtype=float).reshape(-1, 2)
    return np.array([contains(ras, s, tol) for s in states], dtype=bool)


def interval_counts(ras):
    return {k: len(v) for k, v in ras.intervals.items()}

