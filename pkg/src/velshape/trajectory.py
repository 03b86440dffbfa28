"""Phase-plane trajectories under an actuation level ``lambda(x)``.

Trajectories are integrated against the path coordinate rather than time.
With ``w = x2**2`` the closed loop becomes the scalar ODE::

    dw/dx1 = 2 u(x1, sqrt(w)),     u = D + lambda (A - D)

which stays regular as ``x2 -> 0`` and is exact for piecewise constant ``u``.
A fixed ``x1`` grid (default 2000 cells on ``[0, 1]``) is stepped with
classical RK4; leaving the admissible region is located by bisection on the
step length.  Backward trajectories run the same ODE towards smaller ``x1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError

DEFAULT_GRID = 2000
BOUNDARY_TOL = 1e-6
STEP_TOL = 1e-11
STEP_DEPTH = 10


@dataclass(frozen=True)
class State:
    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise InputError(f"non-finite state ({self.x1}, {self.x2})")

    def __iter__(self):
        yield self.x1
        yield self.x2

    def __getitem__(self, k):
        return (self.x1, self.x2)[k]


@dataclass
class Trajectory:
    """Polyline of states in traversal order.

    ``status`` is ``"complete"`` when the requested end abscissa was reached,
    ``"exited"`` when the trajectory left the admissible region (the last
    point is the bisected boundary point), ``"stalled"`` when ``x2`` reached
    zero under a non-positive input, or ``"budget"``.
    ``exit_boundary`` names the violated constraint: ``"upper"``, ``"lower"``
    or ``"dynamic"`` (input interval became empty).
    """

    x1: np.ndarray
    x2: np.ndarray
    direction: str
    policy: str = ""
    status: str = "complete"
    exit_boundary: str | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.x1)

    @property
    def points(self):
        return [State(float(a), float(b)) for a, b in zip(self.x1, self.x2)]

    @property
    def end(self):
        return State(float(self.x1[-1]), float(self.x2[-1]))

    def ascending(self):
        """Copies of ``(x1, x2)`` sorted by increasing ``x1``."""
        if len(self.x1) > 1 and self.x1[0] > self.x1[-1]:
            return self.x1[::-1].copy(), self.x2[::-1].copy()
        return self.x1.copy(), self.x2.copy()

    def value_at(self, x1):
        xs, ys = self.ascending()
        out = np.interp(x1, xs, ys)
        return float(out) if np.ndim(out) == 0 else out


def leftmost(traj):
    """The point of ``traj`` with minimal ``x1``."""
    if traj is None or len(traj) == 0:
        raise InputError("leftmost() of an empty trajectory")
    k = int(np.argmin(traj.x1))
    return State(float(traj.x1[k]), float(traj.x2[k]))


def _policy_fn(policy):
    if callable(policy):
        return policy, getattr(policy, "kind", "feedback")
    lam = float(policy)
    if not 0.0 <= lam <= 1.0:
        raise InputError(f"actuation level {lam} outside [0, 1]")
    return (lambda x1, x2: lam), f"constant({lam:g})"


def _signed_sqrt(w):
    return math.sqrt(w) if w >= 0.0 else -math.sqrt(-w)


class _Rhs:
    """``dw/dx1`` for a system, policy and input buffer."""

    def __init__(self, system, lam_fn, buffer):
        self.system = system
        self.lam_fn = lam_fn
        self.buffer = buffer

    def u(self, x1, x2):
        x1 = min(max(x1, 0.0), 1.0)
        x2 = max(x2, 0.0)
        d, a = self.system.bounds(x1, x2)
        lam = min(max(float(self.lam_fn(x1, x2)), 0.0), 1.0)
        b = self.buffer
        return d + (b + lam * (1.0 - 2.0 * b)) * (a - d)

    def __call__(self, x1, w):
        return 2.0 * self.u(x1, math.sqrt(max(w, 0.0)))


def _rk4_once(rhs, x1, w, h):
    k1 = rhs(x1, w)
    k2 = rhs(x1 + 0.5 * h, w + 0.5 * h * k1)
    k3 = rhs(x1 + 0.5 * h, w + 0.5 * h * k2)
    k4 = rhs(x1 + h, w + h * k3)
    return w + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def _rk4(rhs, x1, w, h, depth=STEP_DEPTH):
    """RK4 over ``h`` with step-doubling refinement.

    The bounds are only piecewise smooth in ``x1`` (the active joint changes),
    and a single step across such a kink loses two orders.  Steps whose
    full-step and two-half-step results disagree are subdivided.
    """
    full = _rk4_once(rhs, x1, w, h)
    half = 0.5 * h
    mid = _rk4_once(rhs, x1, w, half)
    two = _rk4_once(rhs, x1 + half, mid, half)
    if depth <= 0 or abs(two - full) <= STEP_TOL * max(1.0, abs(two)):
        return two
    mid = _rk4(rhs, x1, w, half, depth - 1)
    return _rk4(rhs, x1 + half, mid, half, depth - 1)


def _classify_exit(system, x1, x2):
    """Name the constraint violated at an inadmissible point."""
    x1c = min(max(x1, 0.0), 1.0)
    if x2 < 0.0 or x2 < system.profile.c_lower(x1c):
        return "lower"
    if x2 > system.profile.c_upper(x1c):
        return "upper"
    if system.clip:
        return "upper"
    return "dynamic"


def grid_nodes(start, stop, grid):
    """Grid abscissae strictly between ``start`` and ``stop`` plus ``stop`` itself."""
    if stop > start:
        k0 = math.floor(start * grid + 1e-9) + 1
        k1 = math.ceil(stop * grid - 1e-9)
        nodes = [k / grid for k in range(k0, k1)]
    else:
        k0 = math.ceil(start * grid - 1e-9) - 1
        k1 = math.floor(stop * grid + 1e-9)
        nodes = [k / grid for k in range(k0, k1, -1)]
    nodes.append(stop)
    return nodes


def integrate(system, x0, policy, direction="forward", stop_x1=None, grid=DEFAULT_GRID,
              buffer=0.0, max_steps=None, check_start=True, bisect_iters=60, stop_when=None):
    """Integrate the closed loop from ``x0`` until ``stop_x1`` or leaving the region.

    Parameters
    ----------
    system : PhaseSystem
    x0 : State or (x1, x2)
    policy : float or callable
        Constant actuation level or ``lambda(x1, x2)``.
    direction : {"forward", "backward"}
    stop_x1 : float, optional
        End abscissa; defaults to 1 (forward) or 0 (backward).
    grid : int
        Number of cells of the uniform ``x1`` grid on ``[0, 1]``.
    stop_when : callable, optional
        Event predicate ``f(x1, x2) -> bool``; integration stops at the first
        (bisected) point where it turns true, with status ``"event"``.

    Returns
    -------
    Trajectory
    """
    x1_0, x2_0 = float(x0[0]), float(x0[1])
    if direction not in ("forward", "backward"):
        raise InputError(f"direction must be 'forward' or 'backward', not {direction!r}")
    if check_start and not system.admissible(x1_0, x2_0, tol=1e-9):
        raise InputError(f"initial state ({x1_0}, {x2_0}) is not admissible")
    lam_fn, label = _policy_fn(policy)
    rhs = _Rhs(system, lam_fn, buffer)
    forward = direction == "forward"
    if stop_x1 is None:
        stop_x1 = 1.0 if forward else 0.0
    stop_x1 = float(stop_x1)
    xs = [x1_0]
    ys = [x2_0]
    if (forward and stop_x1 <= x1_0) or (not forward and stop_x1 >= x1_0):
        return Trajectory(np.array(xs), np.array(ys), direction, label, "complete")

    nodes = grid_nodes(x1_0, stop_x1, grid)
    if max_steps is not None:
        nodes = nodes[:max_steps]
    x1, w = x1_0, x2_0 * x2_0
    status, exit_boundary = "complete", None
    for node in nodes:
        h = node - x1
        w_new = _rk4(rhs, x1, w, h)
        x2_new = _signed_sqrt(w_new)
        if stop_when is not None and stop_when(node, x2_new):
            lo, hi = 0.0, h
            for _ in range(bisect_iters):
                mid = 0.5 * (lo + hi)
                if stop_when(x1 + mid, _signed_sqrt(_rk4(rhs, x1, w, mid))):
                    hi = mid
                else:
                    lo = mid
            x_ev = x1 + hi
            w_ev = _rk4(rhs, x1, w, hi)
            if system.admissible(x_ev, _signed_sqrt(w_ev), tol=1e-9):
                xs.append(x_ev)
                ys.append(math.sqrt(max(w_ev, 0.0)))
                status = "event"
                break
        if system.admissible(node, x2_new, tol=1e-12):
            x1, w = node, w_new
            xs.append(x1)
            ys.append(x2_new)
            continue
        # locate the exit within this step
        lo, hi = 0.0, h
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            if system.admissible(x1 + mid, _signed_sqrt(_rk4(rhs, x1, w, mid)), tol=1e-12):
                lo = mid
            else:
                hi = mid
        x_out = x1 + hi
        exit_boundary = _classify_exit(system, x_out, _signed_sqrt(_rk4(rhs, x1, w, hi)))
        if lo != 0.0:
            x1, w = x1 + lo, max(_rk4(rhs, x1, w, lo), 0.0)
            xs.append(x1)
            ys.append(math.sqrt(w))
        status = "exited"
        if exit_boundary == "lower" and ys[-1] <= BOUNDARY_TOL:
            u_end = rhs.u(x1, ys[-1])
            if forward and u_end <= 0.0:
                status = "stalled"
            elif not forward and u_end >= 0.0:
                status = "stalled"
        break
    else:
        if max_steps is not None and (nodes and nodes[-1] != stop_x1):
            status = "budget"
    return Trajectory(np.array(xs), np.array(ys), direction, label, status, exit_boundary)
