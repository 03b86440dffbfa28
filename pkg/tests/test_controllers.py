import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from velshape.controllers import (BangBangPolicy, BoundaryPolicy, ConstantPolicy, GCurve,
                                  SaturationPolicy, SlidingPolicy, bang_bang_lambda, boundary_lambda,
                                  control_input, fitted_lipschitz, policy_from_config,
                                  saturation_lambda, sliding_lambda)
from velshape.exceptions import ConfigurationError, DegenerateStateError, InputError, OutsideSetError
from velshape.phase import ConstraintProfile, PhaseSystem
from velshape.projection import ConstantBounds, FunctionBounds
from velshape.reach_avoid import TargetSet, compute_reach_avoid
from velshape.trajectory import integrate


def _random_states(system, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        x1 = rng.uniform(0, 1)
        x2 = rng.uniform(system.lower(x1), system.upper(x1))
        if system.admissible(x1, x2):
            out.append((x1, x2))
    return out


# -- input map --------------------------------------------------------------------

def test_input_endpoints_and_buffer():
    system = PhaseSystem(ConstantBounds(-2.0, 3.0), ConstraintProfile(10.0, 0.0))
    assert control_input(system, (0.5, 1.0), 0.0) == -2.0
    assert control_input(system, (0.5, 1.0), 1.0) == 3.0
    # buffered bounds 2.75 and -1.75
    assert control_input(system, (0.5, 1.0), 0.5, buffer=0.05) == pytest.approx(0.5, abs=1e-15)
    assert control_input(system, (0.5, 1.0), 1.0, buffer=0.05) == pytest.approx(2.75)
    assert control_input(system, (0.5, 1.0), 0.0, buffer=0.05) == pytest.approx(-1.75)


def test_input_errors(unit_system):
    with pytest.raises(InputError):
        control_input(unit_system, (0.5, 11.0), 0.5)
    with pytest.raises(InputError):
        control_input(unit_system, (0.5, 1.0), 1.2)
    with pytest.raises(ConfigurationError):
        control_input(unit_system, (0.5, 1.0), 0.5, buffer=0.5)


def test_input_within_bounds_random(golden_system):
    rng = np.random.default_rng(2)
    for x in _random_states(golden_system, 300, 4):
        d, a = golden_system.bounds(*x)
        lam, b = rng.uniform(0, 1), rng.uniform(0, 0.49)
        u = control_input(golden_system, x, lam, buffer=b)
        assert d - 1e-12 <= u <= a + 1e-12
        assert d + b * (a - d) - 1e-9 <= u <= a - b * (a - d) + 1e-9


# -- saturation ---------------------------------------------------------------------

def test_saturation_values():
    g1, g2 = GCurve([2.0, 4.0]), GCurve([3.5, 1.0])
    assert saturation_lambda(g1, g2, (0.3, g1(0.3))) == 0.0
    assert saturation_lambda(g1, g2, (0.3, g2(0.3))) == 1.0
    assert saturation_lambda(g1, g2, (0.3, 0.5 * (g1(0.3) + g2(0.3)))) == pytest.approx(0.5)
    assert saturation_lambda(g1, g2, (0.3, 100.0)) == 0.0


def test_saturation_quadratic_curves():
    g1 = GCurve([2.92, -3.42, 5.0])
    g2 = GCurve([-4.78, 8.18, 0.0])
    assert saturation_lambda(g1, g2, (0.0, 3.0)) == pytest.approx(0.4, abs=1e-15)


def test_saturation_rejects_crossing_curves():
    with pytest.raises(ConfigurationError):
        saturation_lambda(GCurve(1.0), GCurve(2.0), (0.5, 1.0))
    with pytest.raises(ConfigurationError):
        SaturationPolicy([1.0, 1.0], [2.0])


def test_saturation_is_lipschitz():
    pol = SaturationPolicy([2.0, 4.0], [3.5, 1.0])
    coarse = fitted_lipschitz(pol, np.linspace(0, 1, 51), np.linspace(0, 10, 201))
    fine = fitted_lipschitz(pol, np.linspace(0, 1, 101), np.linspace(0, 10, 401))
    assert np.isfinite(coarse) and fine <= 1.1 * coarse


# -- boundary-derived ---------------------------------------------------------------

@pytest.fixture(scope="module")
def parabola_set():
    system = PhaseSystem(ConstantBounds(-1.0, 1.0), ConstraintProfile(10.0, 0.5))
    return compute_reach_avoid(system, TargetSet(1.0, 2.0, 3.0), epsilon=0.1)


def test_boundary_lambda_cases(parabola_set):
    zl, zu = parabola_set.bounds_at(0.4)
    assert boundary_lambda(parabola_set, (0.4, zl)) == 1.0
    assert boundary_lambda(parabola_set, (0.4, zu)) == 0.0
    assert boundary_lambda(parabola_set, (0.4, 0.5 * (zl + zu))) == pytest.approx(0.5)
    with pytest.raises(OutsideSetError):
        boundary_lambda(parabola_set, (0.4, zu + 0.1))
    assert boundary_lambda(parabola_set, (0.4, zu + 0.1), strict=False) == 0.0


def test_boundary_lambda_degenerate_slice(parabola_set):
    # the target slice collapses when x2_low == x2_high
    system = PhaseSystem(ConstantBounds(-1.0, 1.0), ConstraintProfile(10.0, 0.5))
    point = compute_reach_avoid(system, TargetSet(1.0, 2.0, 2.0), epsilon=0.1)
    assert boundary_lambda(point, (1.0, 2.0)) == 0.5


# -- bang-bang and sliding ----------------------------------------------------------

def test_bang_bang():
    g = GCurve("3 + x1")
    assert bang_bang_lambda(g, (0.5, 3.5 - 1e-9)) == 1.0
    assert bang_bang_lambda(g, (0.5, 3.5)) == 0.0
    assert bang_bang_lambda(GCurve(2.0), (0.1, 5.0)) == 0.0
    assert BangBangPolicy(2.0)(0.1, 1.0) == 1.0


def test_sliding_off_and_on_surface():
    system = PhaseSystem(ConstantBounds(-1.0, 1.0), ConstraintProfile(10.0, 0.0))
    g = GCurve(2.0)
    assert sliding_lambda(g, g.slope, system, (0.5, 2.1)) == 0.0
    assert sliding_lambda(g, g.slope, system, (0.5, 1.9)) == 1.0
    lam = sliding_lambda(g, g.slope, system, (0.5, 2.0))
    assert lam == 0.5
    d, a = system.bounds(0.5, 2.0)
    assert abs(d + lam * (a - d)) == 0.0


def test_sliding_degenerate_input_range():
    system = PhaseSystem(FunctionBounds(lambda x1, x2: (0.0, 0.0)), ConstraintProfile(10.0, 0.0))
    with pytest.raises(DegenerateStateError):
        sliding_lambda(GCurve(2.0), lambda x: 0.0, system, (0.5, 2.0))


def test_sliding_matches_dense_argmin(golden_system):
    g = GCurve([3.0, 4.0])
    grid = np.linspace(0, 1, 10_000)
    rng = np.random.default_rng(9)
    for x1 in rng.uniform(0, 1, 100):
        x2 = g(x1)
        if not golden_system.admissible(x1, x2):
            continue
        d, a = golden_system.bounds(x1, x2)
        h = np.abs(-g.slope(x1) * x2 + d + grid * (a - d))
        lam = sliding_lambda(g, g.slope, golden_system, (x1, x2))
        h_star = abs(-g.slope(x1) * x2 + d + lam * (a - d))
        assert h_star <= h.min() + 1e-12
        assert abs(lam - grid[np.argmin(h)]) <= 0.5 / 9999 + 1e-12


def test_sampled_sliding_band(golden_system):
    pol = SlidingPolicy([3.0, 4.0], golden_system, sample_period=1e-3)
    d, a = golden_system.bounds(0.5, 5.5)
    band = 1e-3 * max(abs(a), abs(d))
    assert pol._band(0.5, 5.5) == pytest.approx(band)
    inside = pol(0.5, 5.5 + 0.5 * band)
    assert 0.0 < inside < 1.0


# -- policies ------------------------------------------------------------------------

@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1), st.floats(0, 14), st.floats(0, 1))
def test_policy_outputs_in_unit_interval(golden_system, golden_set, x1, x2, lam0):
    policies = [ConstantPolicy(lam0), SaturationPolicy([2.0, 4.0], [3.5, 1.0]), BangBangPolicy([1.0, 5.0]),
                SlidingPolicy([1.0, 5.0], golden_system, sample_period=1e-3), BoundaryPolicy(golden_set)]
    if not golden_system.admissible(x1, x2):
        return
    for pol in policies:
        assert 0.0 <= pol(x1, x2) <= 1.0


def test_policy_outputs_on_many_states(golden_system, golden_set):
    policies = [SaturationPolicy([2.0, 4.0], [3.5, 1.0]), BangBangPolicy([1.0, 5.0]),
                SlidingPolicy([1.0, 5.0], golden_system, sample_period=1e-3), BoundaryPolicy(golden_set)]
    for x in _random_states(golden_system, 10_000, 21):
        for pol in policies:
            assert 0.0 <= pol(*x) <= 1.0


def test_policy_from_config(golden_system, golden_set):
    sat = policy_from_config({"kind": "saturation", "g1": [2, 4], "g2": [3.5, 1], "buffer": 0.05})
    assert isinstance(sat, SaturationPolicy) and sat.buffer == 0.05
    assert sat.describe() == "saturation(g1=poly[2.0, 4.0], g2=poly[3.5, 1.0])"
    assert isinstance(policy_from_config({"kind": "bang-bang", "g": "4 + x1"}), BangBangPolicy)
    assert isinstance(policy_from_config({"kind": "sliding-mode", "g": 4}, golden_system), SlidingPolicy)
    assert policy_from_config({"kind": "constant", "lambda": 0.25})(0.1, 1.0) == 0.25
    assert isinstance(policy_from_config({"kind": "boundary-derived"}, ras=golden_set), BoundaryPolicy)
    assert sat.with_buffer(0.1).buffer == 0.1 and sat.buffer == 0.05


@pytest.mark.parametrize("spec", [
    {"g1": [1]},
    {"kind": "saturation", "g1": [2, 4]},
    {"kind": "boundary-derived"},
    {"kind": "sliding-mode", "g": 1.0},
    {"kind": "wiggle"},
    {"kind": "constant", "lambda": 2.0},
    {"kind": "bang-bang", "g": 1.0, "buffer": 0.6},
    {"kind": "bang-bang", "g": {"bad": 1}},
])
def test_policy_config_errors(spec):
    with pytest.raises(ConfigurationError):
        policy_from_config(spec)


def test_boundary_controller_keeps_trajectories_in_set(golden_system, golden_set):
    pol = BoundaryPolicy(golden_set)
    rng = np.random.default_rng(3)
    started = 0
    while started < 50:
        x1 = rng.uniform(0, 0.95)
        zl, zu = golden_set.bounds_at(x1)
        if zu - zl < 4 * golden_set.epsilon:
            continue
        x2 = rng.uniform(zl + 2 * golden_set.epsilon, zu - 2 * golden_set.epsilon)
        started += 1
        tr = integrate(golden_system, (x1, x2), pol)
        assert tr.status == "complete"
        assert golden_set.target.contains(tr.end.x1, tr.end.x2, tol=1e-6)
        for a, b in zip(tr.x1, tr.x2):
            lo, hi = golden_set.bounds_at(a)
            assert lo - 1e-6 <= b <= hi + 1e-6
