"""Open-loop minimum-time velocity profile between two phase-plane states.

The profile accelerates at ``lambda = 1`` until it meets the maximal
velocity curve ``B`` from which the final state can still be reached, then
rides ``B``: decelerating along its extreme-trajectory pieces and sliding
along constraint-curve pieces.  ``B`` is the upper boundary of the
reach-avoid set of the single-point target ``{x_final}``.  Where ``B``
has an upward epsilon step the profile falls below it and accelerates again.

In the common case ``B`` is just the backward ``lambda = 0`` trajectory from
``x_final`` and the profile has a single switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, VelShapeError
from .reach_avoid import TAG_CONSTRAINT, TAG_EPSILON, TargetSet, compute_reach_avoid
from .simulation import traversal_time
from .trajectory import BOUNDARY_TOL, DEFAULT_GRID, Trajectory, integrate

ENDPOINT_TOL = 1e-6


class InfeasibleProfileError(VelShapeError):
    """No admissible profile connects the requested endpoints."""


@dataclass
class SwitchingProfile:
    """Stitched profile.

    ``switch_points`` are the abscissae where a full-acceleration arc starts
    or ends (other than at the endpoints); ``arcs`` lists every piece as
    ``(x1_from, x1_to, kind)`` with kind accelerate, decelerate or slide.
    """

    trajectory: Trajectory
    switch_points: list
    total_time: float
    arcs: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def end(self):
        return self.trajectory.end


def _append(xs, ys, new_x, new_y):
    for a, b in zip(new_x, new_y):
        if xs and a <= xs[-1]:
            if a == xs[-1] and abs(b - ys[-1]) <= BOUNDARY_TOL:
                continue
            if a < xs[-1]:
                continue
        xs.append(float(a))
        ys.append(float(b))


def time_optimal(system, x_start, x_final, grid=DEFAULT_GRID, epsilon=0.01):
    """Minimum-time profile from ``x_start`` to ``x_final``.

    Parameters
    ----------
    system : PhaseSystem
    x_start, x_final : State or (x1, x2)
    grid : int
        Integration grid cells on ``[0, 1]``.
    epsilon : float
        Step used by the boundary extension where the constraint curve
        cannot be followed.

    Returns
    -------
    SwitchingProfile

    Raises
    ------
    InfeasibleProfileError
        If the start lies above the maximal curve or the accelerating
        trajectory cannot reach it.
    """
    s1, s2 = float(x_start[0]), float(x_start[1])
    f1, f2 = float(x_final[0]), float(x_final[1])
    if not s1 < f1:
        raise InputError("time_optimal needs x_start.x1 < x_final.x1")
    for name, (a, b) in (("start", (s1, s2)), ("final", (f1, f2))):
        if not system.admissible(a, b, tol=1e-9):
            raise InputError(f"{name} state ({a}, {b}) is not admissible")

    ras = compute_reach_avoid(system, TargetSet(f1, f2, f2), epsilon=epsilon, grid=grid)
    bound = ras.upper
    flags = [f"maximal curve: {msg}" for msg in ras.flags]
    lo_x = bound.x1[0]
    if s1 < lo_x - 1e-12:
        raise InfeasibleProfileError(
            f"the final state cannot be reached from x1 < {lo_x:.6g} (start at {s1})")
    if s2 > float(bound(s1)) + ENDPOINT_TOL:
        raise InfeasibleProfileError(
            f"start velocity {s2} exceeds the maximal reachable-to-final velocity {float(bound(s1)):.6g}")

    def ceiling(a):
        # B interpolates the constraint curve linearly between nodes
        return min(float(bound(a)), system.upper(min(max(a, 0.0), 1.0)))

    xs, ys = [s1], [s2]
    arcs, switches = [], []
    cursor = (s1, s2)
    steps = np.flatnonzero(np.array(bound.tags) == TAG_EPSILON)
    while cursor[0] < f1 - 1e-12:
        on_bound = abs(cursor[1] - ceiling(cursor[0])) <= BOUNDARY_TOL
        if not on_bound:
            traj = integrate(system, cursor, 1.0, "forward", stop_x1=f1, grid=grid,
                             check_start=False,
                             stop_when=lambda a, b: b >= ceiling(a) - 1e-12)
            end = traj.end
            hit = traj.status == "event" or (
                traj.status == "exited" and abs(end.x2 - ceiling(end.x1)) <= 1e-6)
            if traj.status == "complete":
                if abs(end.x2 - f2) > ENDPOINT_TOL:
                    raise InfeasibleProfileError(
                        f"full acceleration reaches x1={f1} at x2={end.x2:.6g}, not {f2}")
                hit = True
            if not hit:
                raise InfeasibleProfileError(
                    f"accelerating arc left the region at x1={end.x1:.6g} ({traj.exit_boundary})")
            _append(xs, ys, traj.x1, traj.x2)
            arcs.append((float(traj.x1[0]), float(end.x1), "accelerate"))
            cursor = (float(end.x1), float(end.x2))
            if cursor[0] < f1 - 1e-12:
                switches.append(cursor[0])
            continue
        # ride the maximal curve up to its next upward epsilon step
        nxt = [k for k in steps if bound.x1[k] > cursor[0] + 1e-12]
        stop = nxt[0] if nxt else len(bound.x1) - 1
        ride = np.arange(len(bound.x1))
        ride = ride[(bound.x1 > cursor[0]) & (ride <= stop)]
        _append(xs, ys, bound.x1[ride], bound.x2[ride])
        start_x = cursor[0]
        kinds = {TAG_CONSTRAINT: "slide"}
        run = None
        for k in ride:
            kind = kinds.get(bound.tags[k], "decelerate")
            if run is None or run[2] != kind:
                if run is not None:
                    arcs.append(run)
                run = (start_x, float(bound.x1[k]), kind)
            else:
                run = (run[0], float(bound.x1[k]), kind)
            start_x = float(bound.x1[k])
        if run is not None:
            arcs.append(run)
        cursor = (float(bound.x1[stop]), float(bound.x2[stop]))
        if nxt:
            switches.append(cursor[0])
            # B jumps up here: accelerate from the lower side of the step
            traj = integrate(system, cursor, 1.0, "forward", stop_x1=f1, grid=grid,
                             check_start=False,
                             stop_when=lambda a, b: b >= ceiling(a) - 1e-12)
            _append(xs, ys, traj.x1, traj.x2)
            arcs.append((cursor[0], float(traj.end.x1), "accelerate"))
            cursor = (float(traj.end.x1), float(traj.end.x2))
            if traj.status not in ("event", "complete"):
                raise InfeasibleProfileError(
                    f"accelerating arc after an epsilon step left the region at x1={cursor[0]:.6g}")
            if cursor[0] < f1 - 1e-12:
                switches.append(cursor[0])
    if any(kind == "slide" for _, _, kind in arcs):
        flags.append("profile slides along a constraint or velocity-limit curve")
    traj = Trajectory(np.array(xs), np.array(ys), "forward", "time-optimal", "complete")
    total = traversal_time(traj)
    if not math.isfinite(total):
        raise InfeasibleProfileError("profile stops at an interior point (infinite duration)")
    return SwitchingProfile(traj, switches, total, _merge_arcs(arcs), flags)


def _merge_arcs(arcs):
    out = []
    for a, b, kind in arcs:
        if b <= a:
            continue
        if out and out[-1][2] == kind and abs(out[-1][1] - a) <= 1e-12:
            out[-1] = (out[-1][0], b, kind)
        else:
            out.append((a, b, kind))
    return out
