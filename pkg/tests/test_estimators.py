import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from velshape.estimators import PolicyEstimator, ReachAvoidEstimator, check_states
from velshape.exceptions import InputError
from velshape.phase import ConstraintProfile, PhaseSystem
from velshape.projection import ConstantBounds
from velshape.reach_avoid import contains


@pytest.fixture
def parabola_system():
    return PhaseSystem(ConstantBounds(-1.0, 1.0), ConstraintProfile(10.0, 0.5))


def test_fit_predict_matches_functional_core(parabola_system):
    est = ReachAvoidEstimator(parabola_system, target=(1.0, 2.0, 3.0)).fit()
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.uniform(0, 1, 300), rng.uniform(0, 5, 300)])
    expected = [contains(est.set_, x) for x in X]
    assert np.array_equal(est.predict(X), expected)
    assert est.x1_range_ == (0.0, 1.0)


def test_decision_function_sign(parabola_system):
    est = ReachAvoidEstimator(parabola_system, target=(1.0, 2.0, 3.0)).fit()
    zu = float(np.sqrt(9 + 2 * 0.5))
    scores = est.decision_function([[0.5, 2.5], [0.5, zu + 0.1], [0.5, zu]])
    assert scores[0] > 0 and scores[1] < 0 and scores[2] == pytest.approx(0.0, abs=1e-6)


def test_params_and_clone(parabola_system):
    est = ReachAvoidEstimator(parabola_system, target=(1.0, 2.0, 3.0), epsilon=0.05)
    assert est.get_params()["epsilon"] == 0.05
    twin = clone(est)
    assert twin.epsilon == 0.05 and not hasattr(twin, "set_")


def test_not_fitted_and_bad_input(parabola_system):
    est = ReachAvoidEstimator(parabola_system, target=(1.0, 2.0, 3.0))
    with pytest.raises(NotFittedError):
        est.predict([[0.5, 2.5]])
    with pytest.raises(InputError):
        check_states([[0.1, 0.2, 0.3]])
    with pytest.raises(ValueError):
        check_states([[0.1, np.nan]])
    with pytest.raises(InputError):
        ReachAvoidEstimator().fit()


def test_policy_estimator(parabola_system):
    est = PolicyEstimator({"kind": "saturation", "g1": [4.0], "g2": [1.0], "buffer": 0.1},
                          system=parabola_system).fit()
    lam = est.predict([[0.5, 4.0], [0.5, 2.5], [0.5, 1.0]])
    assert np.allclose(lam, [0.0, 0.5, 1.0])
    u = est.predict_input([[0.5, 4.0], [0.5, 1.0]])
    assert np.allclose(u, [-0.8, 0.8])


def test_policy_estimator_with_fitted_set(parabola_system):
    ras = ReachAvoidEstimator(parabola_system, target=(1.0, 2.0, 3.0)).fit()
    est = PolicyEstimator({"kind": "boundary-derived"}, parabola_system, reach_avoid=ras).fit()
    zl, zu = ras.set_.bounds_at(0.5)
    assert np.allclose(est.predict([[0.5, zl], [0.5, zu]]), [1.0, 0.0])
    with pytest.raises(InputError):
        PolicyEstimator().fit()
