"""Joint-space Lagrangian dynamics of N-link manipulators.

A model supplies the inertia matrix ``M_L(q)``, the Coriolis/centrifugal
matrix ``C_L(q, qd)`` (linear in ``qd``), the gravity vector ``g_L(q)`` and
the actuator torque limits.  Torque limits may depend on the phase-plane state
``(x1, x2)``; the default is a pair of constant vectors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .exceptions import ConfigurationError, InputError, ModelEvaluationError
from .expressions import Expression


@dataclass(frozen=True)
class TorqueLimits:
    """Actuator torque bounds ``tau_min(x) <= tau <= tau_max(x)``.

    Each side is either a constant vector or a list of expressions in
    ``x1, x2``.
    """

    lower: tuple
    upper: tuple

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ConfigurationError("torque_min and torque_max differ in length")
        object.__setattr__(self, "_constant", all(
            not isinstance(v, Expression) for v in self.lower + self.upper))
        if self._constant:
            lo = np.asarray(self.lower, dtype=float)
            hi = np.asarray(self.upper, dtype=float)
            if not np.all(lo < hi):
                raise ConfigurationError("torque_min must be strictly below torque_max")
            object.__setattr__(self, "_lo", lo)
            object.__setattr__(self, "_hi", hi)

    @classmethod
    def constant(cls, lower, upper):
        return cls(tuple(float(v) for v in lower), tuple(float(v) for v in upper))

    @classmethod
    def symmetric(cls, bound):
        bound = [abs(float(b)) for b in bound]
        return cls.constant([-b for b in bound], bound)

    @property
    def is_constant(self):
        return self._constant

    @property
    def n_joints(self):
        return len(self.lower)

    def __call__(self, x1, x2):
        """Return ``(tau_min, tau_max)`` at a scalar state."""
        if self._constant:
            return self._lo, self._hi
        lo = np.array([v(x1, x2) if isinstance(v, Expression) else v for v in self.lower])
        hi = np.array([v(x1, x2) if isinstance(v, Expression) else v for v in self.upper])
        return lo, hi

    def vec(self, x1, x2):
        """Vectorised limits; returns arrays of shape ``(N,) + broadcast(x1, x2).shape``."""
        shape = np.broadcast(np.asarray(x1), np.asarray(x2)).shape
        if self._constant:
            lo = np.broadcast_to(self._lo.reshape((-1,) + (1,) * len(shape)), (self.n_joints,) + shape)
            hi = np.broadcast_to(self._hi.reshape((-1,) + (1,) * len(shape)), (self.n_joints,) + shape)
            return lo, hi

        def side(values):
            return np.stack([v.vec(x1, x2) if isinstance(v, Expression)
                             else np.full(shape, float(v)) for v in values])
        return side(self.lower), side(self.upper)


@dataclass(frozen=True)
class LagrangianModel:
    """Joint-space dynamics ``M_L(q) qdd + C_L(q, qd) qd + g_L(q) = tau``."""

    n_joints: int
    mass_matrix: Callable
    coriolis_matrix: Callable
    gravity_vector: Callable
    limits: TorqueLimits | None = None
    name: str = "model"
    meta: dict = field(default_factory=dict, compare=False)

    def with_limits(self, limits):
        if limits.n_joints != self.n_joints:
            raise ConfigurationError(
                f"torque limits have {limits.n_joints} entries, model has {self.n_joints} joints")
        return LagrangianModel(self.n_joints, self.mass_matrix, self.coriolis_matrix,
                               self.gravity_vector, limits, self.name, self.meta)


def eval_dynamics(model, q, qdot):
    """Evaluate ``(M_L, C_L, g_L)`` at joint position ``q`` and velocity ``qdot``."""
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    n = model.n_joints
    if q.shape != (n,) or qdot.shape != (n,):
        raise InputError(f"expected q and qdot of shape ({n},), got {q.shape} and {qdot.shape}")
    ml = np.asarray(model.mass_matrix(q), dtype=float)
    cl = np.asarray(model.coriolis_matrix(q, qdot), dtype=float)
    gl = np.asarray(model.gravity_vector(q), dtype=float)
    if ml.shape != (n, n) or cl.shape != (n, n) or gl.shape != (n,):
        raise ModelEvaluationError(f"model {model.name!r} returned mis-shaped terms")
    if not (np.all(np.isfinite(ml)) and np.all(np.isfinite(cl)) and np.all(np.isfinite(gl))):
        raise ModelEvaluationError(f"model {model.name!r} produced non-finite values at q={q}")
    return ml, cl, gl


# -- built-in planar two-link arm -------------------------------------------

def _two_dof_mass(q):
    c2 = math.cos(q[1])
    off = 0.01 + 0.01 * c2
    return np.array([[0.03 + 0.02 * c2, off], [off, 0.01]])


def _two_dof_coriolis(q, qd):
    s2 = math.sin(q[1])
    return np.array([[0.0, -0.01 * (2.0 * qd[0] + qd[1]) * s2],
                     [0.01 * qd[0] * s2, 0.0]])


def _two_dof_gravity(q):
    c12 = math.cos(q[0] + q[1])
    return np.array([0.981 * math.cos(q[0]) + 0.4905 * c12, 0.4905 * c12])


def builtin_two_dof(limits=None):
    """The planar two-link arm with link lengths 0.2 m.

    Torque limits are not part of the closed-form model and must be attached
    separately (``limits=`` or :meth:`LagrangianModel.with_limits`).
    """
    model = LagrangianModel(2, _two_dof_mass, _two_dof_coriolis, _two_dof_gravity,
                            name="two_dof")
    return model.with_limits(limits) if limits is not None else model


BUILTIN_MODELS = {"two_dof": builtin_two_dof}


# -- model files -------------------------------------------------------------

def _expr_matrix(rows, n, variables, what):
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ConfigurationError(f"{what} must be {n}x{n}")
    return [[Expression(e, variables) for e in r] for r in rows]


def _limit_entries(values, n, what):
    if isinstance(values, (int, float)):
        values = [values] * n
    if len(values) != n:
        raise ConfigurationError(f"{what} must have {n} entries")
    return tuple(float(v) if isinstance(v, (int, float)) else Expression(v, ("x1", "x2"))
                 for v in values)


def model_from_dict(spec, name="file"):
    """Build a model from the JSON schema (``n_joints``, ``mass_matrix``, ...)."""
    try:
        n = int(spec["n_joints"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError("model file needs an integer 'n_joints'") from exc
    if n < 1:
        raise ConfigurationError("n_joints must be positive")
    qs = tuple(f"q{i + 1}" for i in range(n))
    qds = tuple(f"qd{i + 1}" for i in range(n))
    for key in ("mass_matrix", "coriolis_matrix", "gravity_vector"):
        if key not in spec:
            raise ConfigurationError(f"model file is missing {key!r}")
    mass = _expr_matrix(spec["mass_matrix"], n, qs, "mass_matrix")
    cor = _expr_matrix(spec["coriolis_matrix"], n, qs + qds, "coriolis_matrix")
    if len(spec["gravity_vector"]) != n:
        raise ConfigurationError(f"gravity_vector must have {n} entries")
    grav = [Expression(e, qs) for e in spec["gravity_vector"]]

    def mass_fn(q):
        return np.array([[e(*q) for e in row] for row in mass])

    def cor_fn(q, qd):
        args = tuple(q) + tuple(qd)
        return np.array([[e(*args) for e in row] for row in cor])

    def grav_fn(q):
        return np.array([e(*q) for e in grav])

    limits = None
    if "torque_min" in spec or "torque_max" in spec:
        if "torque_min" not in spec or "torque_max" not in spec:
            raise ConfigurationError("model file must give both torque_min and torque_max")
        limits = TorqueLimits(_limit_entries(spec["torque_min"], n, "torque_min"),
                              _limit_entries(spec["torque_max"], n, "torque_max"))
    return LagrangianModel(n, mass_fn, cor_fn, grav_fn, limits, name=name)


def load_model(path):
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read model file {path}: {exc}") from exc
    return model_from_dict(spec, name=path.stem)
