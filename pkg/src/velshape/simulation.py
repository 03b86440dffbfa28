"""Sampled-data closed loop with zero-order-hold inputs.

Between samples the input is constant, so the double integrator is
propagated in closed form::

    x1(t) = x1 + t x2 + t**2 u / 2,    x2(t) = x2 + t u

and crossings of the target slice or of ``x2 = 0`` inside a hold are found
by solving the corresponding quadratic or linear equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controllers import buffered_bounds
from .exceptions import ConfigurationError, InputError

OUTCOMES = ("reached-target", "constraint-violated", "stalled", "budget-exhausted")
VIOLATION_TOL = 1e-6


@dataclass
class SimRun:
    """Sampled closed-loop run; row ``k`` is the state at ``t[k]`` and the input held from it.

    The last row is the terminal state (target crossing, stall point or last
    sample) and repeats the last input.
    """

    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    u: np.ndarray
    lam: np.ndarray
    torques: np.ndarray
    sample_period: float
    outcome: str
    detail: str = ""
    max_violation: float = 0.0
    hold_failures: int = 0
    policy: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def duration(self):
        return float(self.t[-1])

    @property
    def n_samples(self):
        return len(self.t) - 1

    @property
    def reached(self):
        return self.outcome == "reached-target"

    def torque_roughness(self):
        """Largest jump of any joint torque between consecutive samples."""
        if self.torques.shape[0] < 2 or self.torques.shape[1] == 0:
            return 0.0
        return float(np.max(np.abs(np.diff(self.torques[:-1], axis=0)), initial=0.0))


def propagate(x1, x2, u, t):
    """Closed-form state after holding ``u`` for time ``t``."""
    return x1 + t * x2 + 0.5 * t * t * u, x2 + t * u


def crossing_time(x1, x2, u, c):
    """Smallest ``t >= 0`` with ``x1(t) = c`` under constant ``u``, or ``inf``."""
    gap = c - x1
    if gap <= 0.0:
        return 0.0
    if abs(u) < 1e-300:
        return gap / x2 if x2 > 0 else math.inf
    disc = x2 * x2 + 2.0 * u * gap
    if disc < 0.0:
        return math.inf
    # numerically stable root of u t^2 / 2 + x2 t - gap = 0
    root = math.sqrt(disc)
    if x2 + root > 0.0:
        return 2.0 * gap / (x2 + root)
    return math.inf


def state_violation(system, x1, x2):
    """How far a state lies outside the admissible region (0 when inside)."""
    x1c = min(max(x1, 0.0), 1.0)
    v = max(0.0, -x2, system.profile.c_lower(x1c) - x2, x2 - system.upper(x1c),
            x1 - 1.0, -x1)
    d, a = system.bounds(x1c, max(x2, 0.0))
    v = max(v, d - a)
    dyn = system.dynamics
    if hasattr(dyn, "vectors"):
        m, c, g = dyn.vectors(x1c)
        idle = np.abs(m) < dyn.zero_inertia_tol
        if idle.any():
            lo, hi = dyn.limits(x1c, x2)
            val = c[idle] * x2 * x2 + g[idle]
            v = max(v, float(np.max(lo[idle] - val)), float(np.max(val - hi[idle])))
    return float(v)


def hold_admissible(system, x0, u, T, interior=8, tol=1e-12):
    """Check ``D(x(t)) <= u <= A(x(t))`` at both ends and ``interior`` points of a hold."""
    x1_0, x2_0 = float(x0[0]), float(x0[1])
    for t in np.linspace(0.0, T, interior + 2):
        x1, x2 = propagate(x1_0, x2_0, u, float(t))
        if x1 > 1.0 or x2 < 0.0:
            continue
        d, a = system.bounds(x1, x2)
        scale = tol * max(1.0, abs(a), abs(d))
        if not (d - scale <= u <= a + scale):
            return False
    return True


def _torques(system, x1, x2, u):
    dyn = system.dynamics
    if hasattr(dyn, "torques"):
        return dyn.torques(min(max(x1, 0.0), 1.0), x2, u)
    return np.zeros(0)


def _torque_excess(system, x1, x2, tau):
    dyn = system.dynamics
    if tau.size == 0 or not hasattr(dyn, "limits"):
        return 0.0
    lo, hi = dyn.limits(x1, x2)
    return float(max(np.max(lo - tau), np.max(tau - hi), 0.0))


def simulate(system, policy, x0, T, target, budget=1_000_000, buffer=None,
             check_holds=True, tol=VIOLATION_TOL):
    """Run the sampled closed loop from ``x0`` until an outcome is reached.

    Parameters
    ----------
    system : PhaseSystem
    policy : callable
        ``lambda(x1, x2)``; an :class:`ActuationPolicy` also supplies the buffer.
    x0 : State or (x1, x2)
    T : float
        Sample period in seconds.
    target : TargetSet
    budget : int
        Maximum number of samples.
    buffer : float, optional
        Overrides the policy's bound buffer.

    Returns
    -------
    SimRun
    """
    x1, x2 = float(x0[0]), float(x0[1])
    if not T > 0.0:
        raise ConfigurationError("sample period must be positive")
    if not system.admissible(x1, x2, tol=1e-9):
        raise InputError(f"initial state ({x1}, {x2}) is not admissible")
    if buffer is None:
        buffer = getattr(policy, "buffer", 0.0)
    c = target.c
    ts, xs1, xs2, us, lams, taus = [], [], [], [], [], []
    t = 0.0
    outcome, detail = "budget-exhausted", f"no outcome after {budget} samples"
    worst = 0.0
    hold_failures = 0
    u = 0.0
    lam = 0.0
    for _ in range(budget):
        viol = state_violation(system, x1, x2)
        worst = max(worst, viol)
        if viol > tol:
            outcome, detail = "constraint-violated", f"state ({x1:.6g}, {x2:.6g}) outside by {viol:.3g}"
            break
        lam = min(max(float(policy(x1, x2)), 0.0), 1.0)
        d, a = system.bounds(min(max(x1, 0.0), 1.0), max(x2, 0.0))
        d_t, a_t = buffered_bounds(d, a, buffer)
        u = d_t + lam * (a_t - d_t)
        tau = _torques(system, x1, x2, u)
        worst = max(worst, _torque_excess(system, x1, x2, tau))
        ts.append(t)
        xs1.append(x1)
        xs2.append(x2)
        us.append(u)
        lams.append(lam)
        taus.append(tau)
        if check_holds and not hold_admissible(system, (x1, x2), u, T):
            hold_failures += 1
        t_cross = crossing_time(x1, x2, u, c)
        t_stop = -x2 / u if u < 0.0 else math.inf
        if x2 <= 0.0 and u <= 0.0:
            outcome, detail = "stalled", f"zero velocity at x1={x1:.6g}"
            break
        if t_cross <= T and t_cross <= t_stop:
            x1, x2 = c, x2 + t_cross * u
            t += t_cross
            if target.contains(x1, x2, tol=1e-9):
                outcome, detail = "reached-target", f"crossed x1={c:g} at x2={x2:.6g}"
            else:
                outcome = "constraint-violated"
                detail = f"crossed x1={c:g} at x2={x2:.6g}, outside the target segment"
            break
        if t_stop <= T:
            x1, x2 = propagate(x1, x2, u, t_stop)
            x2 = 0.0
            t += t_stop
            outcome, detail = "stalled", f"velocity reached zero at x1={x1:.6g}"
            break
        x1, x2 = propagate(x1, x2, u, T)
        t += T
    ts.append(t)
    xs1.append(x1)
    xs2.append(x2)
    us.append(u)
    lams.append(lam)
    x1c = min(max(x1, 0.0), 1.0)
    tau_end = _torques(system, x1c, x2, u)
    taus.append(tau_end)
    worst = max(worst, state_violation(system, x1, x2))
    n_tau = len(taus[0])
    return SimRun(
        t=np.array(ts), x1=np.array(xs1), x2=np.array(xs2), u=np.array(us),
        lam=np.array(lams), torques=np.array(taus, dtype=float).reshape(len(ts), n_tau),
        sample_period=float(T), outcome=outcome, detail=detail, max_violation=float(worst),
        hold_failures=hold_failures,
        policy=policy.describe() if hasattr(policy, "describe") else "callable")


def traversal_time(traj):
    """Time to traverse a phase-plane polyline, ``integral of dx1 / x2``.

    Each segment is treated as a constant-acceleration arc, whose exact
    duration is ``2 dx1 / (x2a + x2b)``; this stays finite when one endpoint
    has zero velocity.  Returns ``inf`` if an interior point has ``x2 <= 0``.
    """
    if hasattr(traj, "ascending"):
        x1, x2 = traj.ascending()
    else:
        x1, x2 = (np.asarray(v, dtype=float) for v in traj)
        if x1.size > 1 and x1[0] > x1[-1]:
            x1, x2 = x1[::-1], x2[::-1]
    if x1.size < 2:
        return 0.0
    if np.any(x2[1:-1] <= 0.0):
        return math.inf
    dx = np.diff(x1)
    vs = x2[:-1] + x2[1:]
    if np.any((vs <= 0.0) & (dx > 0.0)):
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        seg = np.where(dx > 0.0, 2.0 * dx / vs, 0.0)
    return float(np.sum(seg))
