import math
from pathlib import Path

import numpy as np
import pytest

from velshape.exceptions import InputError
from velshape.phase import ConstraintProfile, PhaseSystem
from velshape.projection import ConstantBounds
from velshape.scenario import golden_scenario, load_scenario
from velshape.simulation import simulate, traversal_time
from velshape.time_optimal import InfeasibleProfileError, time_optimal
from velshape.trajectory import integrate

DATA = Path(__file__).parent / "data"


def test_symmetric_rest_to_rest(unit_system):
    prof = time_optimal(unit_system, (0.0, 0.0), (1.0, 0.0))
    assert prof.switch_points == [pytest.approx(0.5, abs=1e-9)]
    assert prof.total_time == pytest.approx(2.0, abs=1e-6)
    assert prof.trajectory.x2.max() == pytest.approx(1.0, abs=1e-6)
    assert prof.end.x1 == 1.0 and prof.end.x2 == pytest.approx(0.0, abs=1e-6)
    assert [kind for _, _, kind in prof.arcs] == ["accelerate", "decelerate"]


def test_pure_acceleration(unit_system):
    prof = time_optimal(unit_system, (0.0, 0.0), (1.0, math.sqrt(2)))
    assert prof.switch_points == []
    assert prof.total_time == pytest.approx(math.sqrt(2), abs=1e-6)


def test_argument_errors(unit_system):
    with pytest.raises(InputError):
        time_optimal(unit_system, (0.5, 1.0), (0.4, 1.0))
    with pytest.raises(InputError):
        time_optimal(unit_system, (0.0, 11.0), (1.0, 1.0))


def test_unreachable_final_state(unit_system):
    # starting too fast to brake down to rest at x1 = 1
    with pytest.raises(InfeasibleProfileError):
        time_optimal(unit_system, (0.0, 2.0), (1.0, 0.0))
    # too slow to reach the requested speed
    with pytest.raises(InfeasibleProfileError):
        time_optimal(unit_system, (0.0, 0.0), (1.0, 3.0))


@pytest.fixture(scope="module")
def golden_profile():
    sc = golden_scenario()
    return sc, time_optimal(sc.system, sc.initial_state, sc.final_state)


def test_golden_profile_endpoint_and_speed(golden_profile):
    sc, prof = golden_profile
    assert prof.end.x1 == pytest.approx(1.0, abs=1e-12)
    assert abs(prof.end.x2 - 4.0) <= 0.1
    run = simulate(sc.system, sc.policy(), sc.initial_state, sc.sample_period, sc.target)
    assert run.reached
    assert prof.total_time < run.duration
    assert prof.total_time == pytest.approx(traversal_time(prof.trajectory))


def test_golden_profile_admissible(golden_profile):
    sc, prof = golden_profile
    for x1, x2 in zip(prof.trajectory.x1, prof.trajectory.x2):
        assert sc.system.admissible(x1, x2, tol=1e-6)
    assert np.all(np.diff(prof.trajectory.x1) > 0)


def test_golden_profile_alternates(golden_profile):
    _, prof = golden_profile
    kinds = [k for _, _, k in prof.arcs]
    assert kinds[0] == "accelerate" and kinds[-1] == "decelerate"
    assert all(a != b for a, b in zip(kinds, kinds[1:]))
    assert prof.switch_points == sorted(prof.switch_points)


def test_optimal_not_slower_than_feedback_runs(golden_profile):
    sc, prof = golden_profile
    for buffer in (0.05, 0.1, 0.2):
        run = simulate(sc.system, sc.policy().with_buffer(buffer), sc.initial_state, 1e-3, sc.target)
        if run.reached:
            assert prof.total_time <= run.duration + 1e-3


def _sampled_profile(system, start, final_arc, s1, s2, grid=2000):
    """Accelerate to s1, brake to s2, accelerate until meeting the final braking arc."""
    a = integrate(system, start, 1.0, stop_x1=s1, grid=grid)
    if a.status != "complete":
        return None
    b = integrate(system, a.end, 0.0, stop_x1=s2, grid=grid)
    if b.status != "complete":
        return None
    lo = final_arc.ascending()[0][0]
    c = integrate(system, b.end, 1.0, grid=grid,
                  stop_when=lambda x1, x2: x1 >= lo and x2 >= final_arc.value_at(x1))
    if c.status != "event":
        return None
    fx, fy = final_arc.ascending()
    keep = fx > c.end.x1
    xs = np.concatenate([a.x1, b.x1[1:], c.x1[1:], fx[keep]])
    ys = np.concatenate([a.x2, b.x2[1:], c.x2[1:], fy[keep]])
    if not all(system.admissible(p, q, tol=1e-6) for p, q in zip(xs, ys)):
        return None
    return xs, ys


def test_profile_dominates_sampled_two_switch_profiles():
    # the golden arm brakes too hard for extreme-level samples to stay admissible,
    # so the family is drawn on the slow two-link arm
    sc = load_scenario(DATA / "slow.json")
    prof = time_optimal(sc.system, sc.initial_state, sc.final_state)
    final_arc = integrate(sc.system, sc.final_state, 0.0, "backward")
    rng = np.random.default_rng(17)
    kept = 0
    for _ in range(2000):
        s1, s2 = np.sort(rng.uniform(0.0, 1.0, 2))
        if s2 - s1 < 1e-3:
            continue
        sample = _sampled_profile(sc.system, sc.initial_state, final_arc, s1, s2)
        if sample is None:
            continue
        xs, ys = sample
        assert np.max(ys - prof.trajectory.value_at(xs)) <= 1e-3
        kept += 1
        if kept == 50:
            break
    assert kept == 50


def test_ceiling_slide_closed_form():
    # accelerate to 0.8 by x1 = 0.32, slide to 0.68, brake: 0.8 + 0.45 + 0.8 seconds
    system = PhaseSystem(ConstantBounds(-1.0, 1.0), ConstraintProfile(0.8, 0.0))
    prof = time_optimal(system, (0.0, 0.0), (1.0, 0.0))
    assert prof.total_time == pytest.approx(2.05, abs=1e-6)
    assert [k for _, _, k in prof.arcs] == ["accelerate", "slide", "decelerate"]
    assert prof.switch_points == [pytest.approx(0.32, abs=1e-9)]
    assert prof.arcs[2][0] == pytest.approx(0.68, abs=1e-9)
    assert any("slides" in f for f in prof.flags)
