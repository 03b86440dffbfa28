"""Scenario files: one JSON document describing a complete experiment.

A scenario names the manipulator model (built-in or model file), the torque
limits, the path, the constraint curves, the target segment and the
controller settings.  Synthetic scenarios may replace model and path by
constant acceleration bounds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .controllers import policy_from_config
from .exceptions import ConfigurationError, InputError
from .model import BUILTIN_MODELS, TorqueLimits, _limit_entries, load_model
from .phase import ConstraintProfile, PhaseSystem
from .projection import ConstantBounds, PathSpec, ProjectedDynamics, circular_arc, straight_line
from .reach_avoid import TargetSet
from .trajectory import DEFAULT_GRID, State

BUILTIN_PATHS = {"circular_arc": circular_arc}
BUILTIN_SCENARIOS = {"two_dof": "two_dof.json"}


def _get(spec, key, where, kind=None):
    if not isinstance(spec, dict) or key not in spec:
        raise ConfigurationError(f"missing field '{where}{key}'")
    value = spec[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigurationError(f"field '{where}{key}' has the wrong type")
    return value


def _state(value, name):
    try:
        x1, x2 = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"field '{name}' must be a pair [x1, x2]") from exc
    return State(x1, x2)


@dataclass
class Scenario:
    name: str
    system: PhaseSystem
    target: TargetSet
    epsilon: float = 0.1
    grid: int = DEFAULT_GRID
    poly_degree: int | None = None
    policy_spec: dict | None = None
    sample_period: float | None = None
    initial_state: State | None = None
    final_state: State | None = None
    budget: int = 1_000_000
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def n_joints(self):
        dyn = self.system.dynamics
        return dyn.n_joints if hasattr(dyn, "n_joints") else 0

    def require(self, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ConfigurationError(f"missing field '{missing[0]}' in scenario {self.name!r}")

    def policy(self, ras=None):
        self.require("policy_spec")
        return policy_from_config(self.policy_spec, self.system, ras, self.sample_period)

    def check(self):
        """Cross-checks run at load time; returns a list of findings (empty when clean)."""
        issues = []
        if not self.target.admissible_in(self.system):
            issues.append("target inadmissible")
        if self.initial_state is not None and not self.system.admissible(*self.initial_state, tol=1e-9):
            issues.append(f"initial_state {tuple(self.initial_state)} inadmissible")
        if self.final_state is not None and not self.system.admissible(*self.final_state, tol=1e-9):
            issues.append(f"time_optimal.final_state {tuple(self.final_state)} inadmissible")
        if self.initial_state is not None and self.initial_state.x1 >= self.target.c:
            issues.append("initial_state lies at or beyond the target abscissa")
        return issues


def _build_path(spec):
    if "builtin" in spec:
        name = spec["builtin"]
        if name not in BUILTIN_PATHS:
            raise ConfigurationError(f"unknown built-in path {name!r}; known: {sorted(BUILTIN_PATHS)}")
        return BUILTIN_PATHS[name]()
    if "expressions" in spec:
        return PathSpec.from_expressions(spec["expressions"])
    if "straight_line" in spec:
        line = spec["straight_line"]
        return straight_line(_get(line, "start", "path.straight_line."),
                             _get(line, "end", "path.straight_line."))
    raise ConfigurationError("path needs one of 'builtin', 'expressions', 'straight_line'")


def _build_dynamics(raw, base_dir):
    if "bounds" in raw:
        lo, hi = _get(raw["bounds"], "constant", "bounds.")
        return ConstantBounds(float(lo), float(hi))
    model_spec = _get(raw, "model", "", dict)
    if "builtin" in model_spec:
        name = model_spec["builtin"]
        if name not in BUILTIN_MODELS:
            raise ConfigurationError(f"unknown built-in model {name!r}; known: {sorted(BUILTIN_MODELS)}")
        model = BUILTIN_MODELS[name]()
    elif "file" in model_spec:
        path = Path(model_spec["file"])
        model = load_model(path if path.is_absolute() else base_dir / path)
    else:
        raise ConfigurationError("model needs 'builtin' or 'file'")
    if "torque_limits" in raw:
        lim = raw["torque_limits"]
        n = model.n_joints
        model = model.with_limits(TorqueLimits(
            _limit_entries(_get(lim, "min", "torque_limits."), n, "torque_limits.min"),
            _limit_entries(_get(lim, "max", "torque_limits."), n, "torque_limits.max")))
    if model.limits is None:
        raise ConfigurationError("missing field 'torque_limits' (model carries none)")
    path = _build_path(_get(raw, "path", "", dict))
    return ProjectedDynamics(model, path, zero_inertia_tol=float(raw.get("zero_inertia_tol", 1e-9)))


def scenario_from_dict(raw, base_dir=".", name="scenario"):
    base_dir = Path(base_dir)
    dynamics = _build_dynamics(raw, base_dir)
    cons = _get(raw, "constraints", "", dict)
    profile = ConstraintProfile(_get(cons, "upper", "constraints."), _get(cons, "lower", "constraints."))
    system = PhaseSystem(dynamics, profile, bool(cons.get("clip_to_dynamic_limits", False)))
    tgt = _get(raw, "target", "", dict)
    try:
        target = TargetSet(float(_get(tgt, "x1", "target.")), float(_get(tgt, "x2_low", "target.")),
                           float(_get(tgt, "x2_high", "target.")))
    except InputError as exc:
        raise ConfigurationError(f"target: {exc}") from exc
    initial = _state(raw["initial_state"], "initial_state") if "initial_state" in raw else None
    final = None
    if "time_optimal" in raw:
        final = _state(_get(raw["time_optimal"], "final_state", "time_optimal."), "time_optimal.final_state")
    period = raw.get("sample_period")
    if period is not None and not float(period) > 0:
        raise ConfigurationError("field 'sample_period' must be positive")
    epsilon = float(raw.get("epsilon", 0.1))
    if not epsilon > 0:
        raise ConfigurationError("field 'epsilon' must be positive")
    grid = int(raw.get("grid", DEFAULT_GRID))
    if grid < 10:
        raise ConfigurationError("field 'grid' must be at least 10")
    policy = raw.get("policy")
    sc = Scenario(
        name=str(raw.get("name", name)), system=system, target=target, epsilon=epsilon, grid=grid,
        poly_degree=raw.get("poly_degree"), policy_spec=policy,
        sample_period=float(period) if period is not None else None,
        initial_state=initial, final_state=final, budget=int(raw.get("budget", 1_000_000)), raw=raw)
    if policy is not None and policy.get("kind") != "boundary-derived":
        sc.policy()  # validates curves and buffer eagerly
    return sc


def load_scenario(path):
    """Load a scenario file; a bare built-in name such as ``two_dof`` is also accepted."""
    path = Path(path)
    if not path.exists() and str(path) in BUILTIN_SCENARIOS:
        text = resources.files("velshape").joinpath("data", BUILTIN_SCENARIOS[str(path)]).read_text()
        base = Path(".")
        name = str(path)
    else:
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read scenario {path}: {exc}") from exc
        base = path.parent
        name = path.stem
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"scenario {name} is not valid JSON: {exc}") from exc
    return scenario_from_dict(raw, base, name)


def golden_scenario():
    return load_scenario("two_dof")


def region_table(system, grid=1001):
    """Sampled admissible-region boundary: ``x1``, effective lower and upper curves."""
    xs = np.linspace(0.0, 1.0, grid)
    lower = np.array([system.lower(x) for x in xs])
    upper = np.array([system.upper(x) for x in xs])
    raw_upper = np.array([system.raw_upper(x) for x in xs])
    return xs, lower, upper, raw_upper
